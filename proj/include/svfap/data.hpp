// Copyright (c) 2026, SVFAP contributors
// SPDX-License-Identifier: Apache-2.0
//
// Frame-folder clips, the manifest that indexes them, face-region cropping,
// temporal sampling, and the synthetic facial-motion generator.

#pragma once

#include "svfap/tensor.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace svfap {

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// H x W x 3 image, interleaved RGB, row-major.
struct Image {
  int height = 0;
  int width = 0;
  std::vector<double> rgb;

  Image() = default;
  Image(int h, int w) : height(h), width(w), rgb(static_cast<std::size_t>(h) * w * 3, 0.0) {}

  double& at(int y, int x, int c) { return rgb[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
  double at(int y, int x, int c) const { return rgb[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }

  bool operator==(const Image&) const = default;
};

using Label = std::variant<std::monostate, int, std::vector<double>>;

/// T x H x W x 3 clip.
struct VideoClip {
  int frames = 0;
  int height = 0;
  int width = 0;
  std::vector<double> pixels;
  std::string source_id;
  Label label;

  VideoClip() = default;
  VideoClip(int t, int h, int w)
      : frames(t), height(h), width(w), pixels(static_cast<std::size_t>(t) * h * w * 3, 0.0) {}

  std::size_t offset(int t, int y, int x, int c) const {
    return ((static_cast<std::size_t>(t) * height + y) * width + x) * 3 + c;
  }
  double& at(int t, int y, int x, int c) { return pixels[offset(t, y, x, c)]; }
  double at(int t, int y, int x, int c) const { return pixels[offset(t, y, x, c)]; }
};

Image read_ppm(const std::filesystem::path& path);
/// Values are clamped to [0, 1] and quantized to 8 bits.
void write_ppm(const std::filesystem::path& path, const Image& img);

/// Upper-central window: top edge at row 0, horizontally centered.
Image crop_face_region(const Image& frame, int out_h, int out_w);

/// Frame indices start, start+stride, ..., wrapping modulo frame_count.
std::vector<int> sample_indices(int frame_count, int frames, int stride, int start);
VideoClip sample_clip(std::span<const Image> frames, int t, int stride, int start);
/// Uniform start in [0, max(0, L - span)], span = (T-1)·stride + 1.
int random_start(int frame_count, int frames, int stride, Rng& rng);

enum class LabelKind { kClass, kScores, kNone };

struct ManifestRow {
  std::string path;
  LabelKind kind = LabelKind::kNone;
  std::string payload;
};

/// Per-channel normalization statistics for [0, 1] pixels.
struct Normalization {
  std::array<double, 3> mean{0.0, 0.0, 0.0};
  std::array<double, 3> std{1.0, 1.0, 1.0};

  bool operator==(const Normalization&) const = default;
};

struct Manifest {
  std::vector<ManifestRow> rows;
  Normalization norm;
};

/// `# normalization mean=..,..,.. std=..,..,..` comment, then header
/// `path,label_kind,payload`, then one row per clip. Score payloads are
/// semicolon-separated reals.
void write_manifest(const std::filesystem::path& path, const Manifest& m);
Manifest read_manifest(const std::filesystem::path& path);

Label parse_label(const ManifestRow& row);
/// Checks every manifest invariant against the files on disk.
void validate_manifest(const Manifest& m, const std::filesystem::path& root, int num_classes, int score_dims);

/// Sorted f*.ppm frames of one clip directory.
std::vector<Image> load_frames(const std::filesystem::path& dir);

struct SynthSpec {
  int num_classes = 3;
  int clips_per_class = 10;
  std::array<int, 3> geometry{16, 32, 32};  // stored frames, height, width
  double noise_std = 0.0;
  std::uint64_t seed = 0;
};

/// Class-specific motion parameters of the synthetic faces.
struct SynthMotion {
  double mouth_amplitude = 0.0;  // fraction of the maximal opening, in [0, 1]
  int mouth_cycles = 1;          // oscillations per stored clip
  int blink_frames = 1;          // closed-eye frames per clip cycle
};

SynthMotion synth_motion(int cls, int num_classes);
/// Renders one frame at integer phase (frame index after the clip's start shift).
Image render_synth_frame(const SynthMotion& motion, int phase, int frame_count, int height, int width);

/// Writes clip_XXXXX/f%05d.ppm folders plus manifest.csv (class labels) and
/// manifest_scores.csv (score vectors) under out_dir. Deterministic in spec.seed.
Manifest synth_generate(const SynthSpec& spec, const std::filesystem::path& out_dir);

/// One decoded dataset entry: all frames in [0, 1] plus its label.
struct Sample {
  std::string source_id;
  std::vector<Image> frames;
  Label label;
};

struct Dataset {
  std::vector<Sample> samples;
  Normalization norm;
  int num_classes = 0;  // 0 for score datasets
  int score_dims = 0;
};

/// Loads every clip of a manifest, in manifest order. Frames larger than
/// (crop_h, crop_w) are cropped to the face region first; pass 0 to skip.
Dataset load_dataset(const std::filesystem::path& manifest_path, int crop_h = 0, int crop_w = 0);

/// Per-channel statistics over every pixel of every frame.
Normalization compute_normalization(std::span<const Sample> samples);
void normalize(VideoClip& clip, const Normalization& norm);
void denormalize(VideoClip& clip, const Normalization& norm);

}  // namespace svfap
