// Copyright (c) 2026, SVFAP contributors
// SPDX-License-Identifier: Apache-2.0
//
// Small configurations and helpers shared by the test binaries.

#pragma once

#include "svfap/config.hpp"
#include "svfap/data.hpp"
#include "svfap/tensor.hpp"

#include <filesystem>
#include <string>

namespace svfap::testing {

/// Width 16, one block per stage, G = 2, grid (t, 2, 2) with 2x2x2 patches.
inline ArchConfig micro_config(int grid_t = 4, int stride = 2) {
  ArchConfig a;
  a.embed_dim = 16;
  a.heads = 2;
  a.stage_depths = {1, 1, 1};
  a.bottleneck_tokens = 2;
  a.temporal_stride = stride;
  a.masking_ratio = 0.5;
  a.patch = {2, 2, 2};
  a.input = {2 * grid_t, 4, 4};
  a.decoder_dim = 8;
  a.decoder_depth = 1;
  a.decoder_heads = 2;
  a.spatial_hidden = 4;
  return a;
}

/// Trainable desk-scale model: 8x16x16 clips (or 8xRxR), 4x4x4 token grid.
inline ArchConfig tiny_config(int resolution = 16) {
  ArchConfig a;
  a.embed_dim = 32;
  a.heads = 2;
  a.stage_depths = {1, 1, 1};
  a.bottleneck_tokens = 2;
  a.temporal_stride = 2;
  a.masking_ratio = 0.75;
  a.patch = {2, resolution / 4, resolution / 4};
  a.input = {8, resolution, resolution};
  a.decoder_dim = 32;
  a.decoder_depth = 1;
  a.decoder_heads = 2;
  a.spatial_hidden = 8;
  return a;
}

inline Matrix random_matrix(Index rows, Index cols, Rng& rng, double std = 1.0) {
  return random_normal(rows, cols, std, rng);
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("svfap-test-" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

/// Generates a synthetic set under a scratch directory and loads it.
inline Dataset synth_dataset(const std::string& name, int classes, int per_class, std::array<int, 3> geometry,
                             double noise, std::uint64_t seed) {
  SynthSpec spec;
  spec.num_classes = classes;
  spec.clips_per_class = per_class;
  spec.geometry = geometry;
  spec.noise_std = noise;
  spec.seed = seed;
  const auto dir = scratch_dir(name);
  synth_generate(spec, dir);
  return load_dataset(dir / "manifest.csv");
}

}  // namespace svfap::testing
