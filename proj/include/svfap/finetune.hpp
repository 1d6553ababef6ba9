// Copyright (c) 2026, SVFAP contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "svfap/autograd.hpp"
#include "svfap/config.hpp"
#include "svfap/data.hpp"

#include <array>
#include <functional>
#include <span>

namespace svfap {

/// head.weight (C x K), head.bias (1 x K).
void init_head(ParamStore& store, const ArchConfig& cfg, int outputs, Rng& rng);

/// Mean over tokens, then the affine head. Returns 1 x K.
Var pool_and_predict(Bindings& b, Var tokens);

Var ce_loss(Var logits, int target);
Var mse_loss(Var pred, const RowVector& target);

RowVector softmax(const RowVector& logits);

/// Start frames of the two evaluation clips: 0 and max(0, L − span).
std::array<int, 2> two_clip_starts(int frame_count, int frames, int stride);

/// Raw model output for one clip.
using ClipScorer = std::function<RowVector(const VideoClip&)>;

/// Mean of the two clips' scores; softmax probabilities when `classification`.
RowVector two_clip_inference(std::span<const Image> video, int frames, int stride, const ClipScorer& score,
                             bool classification);

}  // namespace svfap
