// Copyright (c) 2026, SVFAP contributors
// SPDX-License-Identifier: Apache-2.0
//
// Three-stage pyramid encoder. Stage 1 runs standard blocks on all input
// tokens; stages 2 and 3 first shorten the sequence in time, then route
// attention through G bottleneck tokens per temporal slice and finish with
// one reverse block that writes back to the full token set.
//
// Parameter paths:
//   encoder.patch_embed.{weight,bias}
//   encoder.stage1.blocks.<j>.*
//   encoder.stage<i>.downsample.{weight,bias}     (conv downsampling only)
//   encoder.stage<i>.spatial.fc{1,2}.{weight,bias}
//   encoder.stage<i>.blocks.<j>.*                  (M_i - 1 bottleneck blocks)
//   encoder.stage<i>.reverse.*
// With the bottleneck disabled, stages 2 and 3 hold replacement_depth(i)
// standard blocks under encoder.stage<i>.blocks.<j> instead.

#pragma once

#include "svfap/attention.hpp"
#include "svfap/config.hpp"

#include <array>
#include <string>

namespace svfap {

/// Tokens of one stage, T slices of S tokens each, time-major.
struct StageOutput {
  Var tokens;
  int length = 0;   // T_i
  int spatial = 0;  // S

  Index count() const { return static_cast<Index>(length) * spatial; }
};

enum class EncodeMode { kPretrain, kFinetune };

struct EncoderOutput {
  std::array<StageOutput, 3> stages;
  /// Bottleneck rows inside stages 2 and 3 (0 where the stage has none).
  std::array<Index, 3> bottlenecks{0, 0, 0};
  /// Fused T_1-length sequence, or X_3 alone, per mode and fusion flags.
  StageOutput out;
};

void init_encoder(ParamStore& store, const ArchConfig& cfg, Rng& rng);

/// Patch rows (N x patch_dim) to tokens with the sinusoid table added.
Var embed_tokens(Bindings& b, Var patches);

StageOutput stage1(Bindings& b, const ArchConfig& cfg, const StageOutput& x);

/// Strided convolution (or pooling) along time at every spatial index.
StageOutput temporal_downsample(Bindings& b, const ArchConfig& cfg, int stage, const StageOutput& x);

/// Per-slice scores Y = MLP(X_t) (S x G), bottlenecks Y^T X_t, stacked to (T·G) x C.
Var spatial_attention(Bindings& b, const ArchConfig& cfg, int stage, const StageOutput& x);

/// Bottlenecks attend to the stage tokens, then to each other.
Var sbt_block(Bindings& b, const ArchConfig& cfg, const std::string& prefix, Var bottlenecks, Var tokens);
/// Stage tokens attend to the final bottlenecks, then to each other.
Var reverse_sbt_block(Bindings& b, const ArchConfig& cfg, const std::string& prefix, Var tokens,
                      Var bottlenecks);

/// Nearest-neighbour repeat of every slice `factor` times.
StageOutput temporal_upsample(const StageOutput& x, int factor);

/// Runs all three stages on embedded (and, when pretraining, gathered) tokens.
EncoderOutput encode(Bindings& b, const ArchConfig& cfg, const StageOutput& tokens, EncodeMode mode);

}  // namespace svfap
