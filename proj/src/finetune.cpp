// Copyright (c) 2026, SVFAP contributors
// SPDX-License-Identifier: Apache-2.0

#include "svfap/finetune.hpp"

#include <algorithm>
#include <stdexcept>

namespace svfap {

void init_head(ParamStore& store, const ArchConfig& cfg, int outputs, Rng& rng) {
  store.create("head.weight", cfg.embed_dim, outputs, Init::kTruncNormal, rng);
  store.create("head.bias", 1, outputs, Init::kZeros, rng);
}

Var pool_and_predict(Bindings& b, Var tokens) {
  if (tokens.rows() < 1) {
    throw ShapeError("pool_and_predict: no tokens to pool");
  }
  return add_row(matmul(mean_rows(tokens), b("head.weight")), b("head.bias"));
}

Var ce_loss(Var logits, int target) { return cross_entropy(logits, target); }

Var mse_loss(Var pred, const RowVector& target) {
  if (pred.rows() != 1 || pred.cols() != target.cols()) {
    throw ShapeError("mse_loss: prediction and target lengths differ");
  }
  return mse(pred, target);
}

RowVector softmax(const RowVector& logits) {
  RowVector e = (logits.array() - logits.maxCoeff()).exp().matrix();
  return e / e.sum();
}

std::array<int, 2> two_clip_starts(int frame_count, int frames, int stride) {
  const int span = (frames - 1) * stride + 1;
  return {0, std::max(0, frame_count - span)};
}

RowVector two_clip_inference(std::span<const Image> video, int frames, int stride, const ClipScorer& score,
                             bool classification) {
  if (video.empty()) {
    throw std::invalid_argument("two_clip_inference: empty video");
  }
  RowVector total;
  for (int start : two_clip_starts(static_cast<int>(video.size()), frames, stride)) {
    RowVector s = score(sample_clip(video, frames, stride, start));
    if (classification) {
      s = softmax(s);
    }
    total = total.size() == 0 ? s : RowVector(total + s);
  }
  return total / 2.0;
}

}  // namespace svfap
