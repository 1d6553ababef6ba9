// Copyright (c) 2026, SVFAP contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace svfap {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Downsample { kConv, kAvg, kMax };

std::string to_string(Downsample d);
Downsample parse_downsample(std::string_view s);

/// Architecture hyperparameters of the encoder/decoder pair.
struct ArchConfig {
  int embed_dim = 512;                      // C
  std::array<int, 3> stage_depths{12, 6, 3};  // M1, M2, M3
  int bottleneck_tokens = 8;                // G per temporal slice
  int temporal_stride = 2;                  // k, kernel and stride of the temporal downsampler
  double masking_ratio = 0.9;               // ρ
  std::array<int, 3> patch{2, 16, 16};      // pt, ph, pw
  std::array<int, 3> input{16, 160, 160};   // T, H, W
  int heads = 8;
  int decoder_dim = 384;
  int decoder_depth = 4;
  int decoder_heads = 6;

  // Ablation axes. Presets use the defaults.
  int spatial_hidden = 128;                 // hidden width of the spatial-attention MLP
  bool spatial_softmax = false;             // normalize spatial scores over S
  Downsample downsample = Downsample::kConv;
  bool temporal_pyramid = true;
  bool spatial_bottleneck = true;
  bool fusion_pretrain = true;
  bool fusion_finetune = false;

  int head_dim() const { return heads > 0 ? embed_dim / heads : 0; }
  int patch_dim() const { return patch[0] * patch[1] * patch[2] * 3; }
  /// Token lattice (t, h, w) after patch embedding.
  std::array<int, 3> grid() const {
    return {input[0] / patch[0], input[1] / patch[1], input[2] / patch[2]};
  }
  int spatial_tokens() const { return grid()[1] * grid()[2]; }
  int total_tokens() const { return grid()[0] * spatial_tokens(); }
  /// Visible spatial positions per temporal slice under tube masking.
  int visible_spatial() const;
  /// Temporal slices in stage i (1-based).
  int stage_length(int stage) const;
  /// Standard blocks that replace an SBT stage of equal parameter budget.
  int replacement_depth(int stage) const;

  bool operator==(const ArchConfig&) const = default;
};

struct TrainConfig {
  double base_lr = 3e-4;
  int batch_size = 256;
  double weight_decay = 0.05;
  double beta1 = 0.9;
  double beta2 = 0.95;
  int epochs = 100;
  int warmup_epochs = 5;
  std::uint64_t seed = 0;
  int frame_stride = 4;

  static TrainConfig pretrain_defaults();
  static TrainConfig finetune_defaults();

  bool operator==(const TrainConfig&) const = default;
};

struct RunConfig {
  ArchConfig arch;
  TrainConfig train;

  bool operator==(const RunConfig&) const = default;
};

enum class Preset { kSmall, kBase };

Preset parse_preset(std::string_view name);
std::string to_string(Preset p);
ArchConfig preset(Preset p);

/// One diagnostic per violated invariant; empty means valid.
std::vector<std::string> check(const ArchConfig& cfg);
std::vector<std::string> check(const TrainConfig& cfg);
/// Throws ConfigError listing every diagnostic.
void validate(const ArchConfig& cfg);
void validate(const RunConfig& cfg);

/// Flat `key = value` text, one line per field, fixed order.
std::string serialize(const RunConfig& cfg);
/// Reads `key = value` lines over `base`. Blank lines and `#` comments are skipped.
RunConfig deserialize(std::string_view text, RunConfig base = {});
/// Applies one `key=value` assignment.
void apply_override(RunConfig& cfg, std::string_view assignment);
void set_field(RunConfig& cfg, std::string_view key, std::string_view value);

RunConfig load_config(const std::string& path, RunConfig base = {});
void save_config(const std::string& path, const RunConfig& cfg);

}  // namespace svfap
