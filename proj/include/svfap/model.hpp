// Copyright (c) 2026, SVFAP contributors
// SPDX-License-Identifier: Apache-2.0
//
// End-to-end forward passes for the two regimes, plus shape-only tracing.

#pragma once

#include "svfap/decoder.hpp"
#include "svfap/encoder.hpp"
#include "svfap/finetune.hpp"
#include "svfap/masking.hpp"

#include <array>
#include <cstdint>

namespace svfap {

/// Registers the encoder, then the decoder and/or a K-output head.
void init_model(ParamStore& store, const ArchConfig& cfg, Rng& rng, bool with_decoder, int head_outputs);

/// Patch matrix for a clip, or a shape-only placeholder on a dry-run tape.
Var patch_input(Tape& tape, const ArchConfig& cfg, const VideoClip* clip);

struct PretrainPass {
  EncoderOutput encoder;
  Var pred;  // N x patch_dim
};

PretrainPass pretrain_forward(Bindings& b, const ArchConfig& cfg, Var patches, const TubeMask& mask);

struct FinetunePass {
  EncoderOutput encoder;
  Var logits;  // 1 x K
};

FinetunePass finetune_forward(Bindings& b, const ArchConfig& cfg, Var patches);

/// Raw head output for one clip, no gradient bookkeeping kept.
RowVector predict(ParamStore& store, const ArchConfig& cfg, const VideoClip& clip);

/// Shape ledger and instrumented cost of one forward pass at full scale.
struct Trace {
  std::array<Index, 3> stage_tokens{0, 0, 0};
  std::array<Index, 3> bottlenecks{0, 0, 0};
  Index out_rows = 0;
  Index out_cols = 0;
  std::uint64_t flops = 0;
  std::size_t params = 0;
};

/// Dry run: no arithmetic, no parameter storage. Pretraining traces
/// encoder + decoder; fine-tuning traces encoder + a head of `head_outputs`.
Trace trace(const ArchConfig& cfg, EncodeMode mode, int head_outputs = 0);

}  // namespace svfap
