// Copyright (c) 2026, SVFAP contributors
// SPDX-License-Identifier: Apache-2.0

#include "svfap/model.hpp"

#include "svfap/tokenizer.hpp"

namespace svfap {

void init_model(ParamStore& store, const ArchConfig& cfg, Rng& rng, bool with_decoder, int head_outputs) {
  init_encoder(store, cfg, rng);
  if (with_decoder) {
    init_decoder(store, cfg, rng);
  }
  if (head_outputs > 0) {
    init_head(store, cfg, head_outputs, rng);
  }
}

Var patch_input(Tape& tape, const ArchConfig& cfg, const VideoClip* clip) {
  if (tape.dry_run() || clip == nullptr) {
    return tape.input_shape(cfg.total_tokens(), cfg.patch_dim());
  }
  if (clip->frames != cfg.input[0] || clip->height != cfg.input[1] || clip->width != cfg.input[2]) {
    throw ShapeError("patch_input: clip geometry differs from the configured input");
  }
  return tape.input(patchify(*clip, cfg.patch));
}

PretrainPass pretrain_forward(Bindings& b, const ArchConfig& cfg, Var patches, const TubeMask& mask) {
  const Var tokens = embed_tokens(b, patches);
  const StageOutput visible{gather_visible(tokens, mask), mask.grid[0], static_cast<int>(mask.visible_per_slice())};
  PretrainPass pass;
  pass.encoder = encode(b, cfg, visible, EncodeMode::kPretrain);
  pass.pred = decode(b, cfg, pass.encoder.out.tokens, mask);
  return pass;
}

FinetunePass finetune_forward(Bindings& b, const ArchConfig& cfg, Var patches) {
  const auto g = cfg.grid();
  const StageOutput tokens{embed_tokens(b, patches), g[0], g[1] * g[2]};
  FinetunePass pass;
  pass.encoder = encode(b, cfg, tokens, EncodeMode::kFinetune);
  pass.logits = pool_and_predict(b, pass.encoder.out.tokens);
  return pass;
}

RowVector predict(ParamStore& store, const ArchConfig& cfg, const VideoClip& clip) {
  Tape tape;
  Bindings b(tape, store);
  return finetune_forward(b, cfg, patch_input(tape, cfg, &clip)).logits.value();
}

Trace trace(const ArchConfig& cfg, EncodeMode mode, int head_outputs) {
  ParamStore store(/*shape_only=*/true);
  Rng rng(0);
  const bool pretrain = mode == EncodeMode::kPretrain;
  init_model(store, cfg, rng, pretrain, pretrain ? 0 : head_outputs);
  Tape tape(/*dry_run=*/true);
  Bindings b(tape, store);
  const Var patches = patch_input(tape, cfg, nullptr);
  EncoderOutput enc;
  Trace out;
  if (pretrain) {
    const TubeMask mask = make_tube_mask(cfg.grid(), cfg.masking_ratio, rng);
    const PretrainPass pass = pretrain_forward(b, cfg, patches, mask);
    enc = pass.encoder;
  } else if (head_outputs > 0) {
    enc = finetune_forward(b, cfg, patches).encoder;
  } else {
    const auto g = cfg.grid();
    enc = encode(b, cfg, {embed_tokens(b, patches), g[0], g[1] * g[2]}, mode);
  }
  for (std::size_t i = 0; i < 3; ++i) {
    out.stage_tokens[i] = enc.stages[i].tokens.rows();
  }
  out.bottlenecks = enc.bottlenecks;
  out.out_rows = enc.out.tokens.rows();
  out.out_cols = enc.out.tokens.cols();
  out.flops = tape.flops();
  out.params = store.count();
  return out;
}

}  // namespace svfap
