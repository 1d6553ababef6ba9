// Copyright (c) 2026, SVFAP contributors
// SPDX-License-Identifier: Apache-2.0

#include "svfap/decoder.hpp"

#include "svfap/tokenizer.hpp"

#include <stdexcept>
#include <string>

namespace svfap {

void init_decoder(ParamStore& store, const ArchConfig& cfg, Rng& rng) {
  const int d = cfg.decoder_dim;
  store.create("decoder.proj.weight", cfg.embed_dim, d, Init::kTruncNormal, rng);
  store.create("decoder.proj.bias", 1, d, Init::kZeros, rng);
  store.create("decoder.mask_token", 1, d, Init::kTruncNormal, rng);
  for (int j = 0; j < cfg.decoder_depth; ++j) {
    init_standard_block(store, "decoder.blocks." + std::to_string(j), d, rng);
  }
  store.create("decoder.head.weight", d, cfg.patch_dim(), Init::kTruncNormal, rng);
  store.create("decoder.head.bias", 1, cfg.patch_dim(), Init::kZeros, rng);
}

Var decode(Bindings& b, const ArchConfig& cfg, Var visible, const TubeMask& mask) {
  const Var projected = add_row(matmul(visible, b("decoder.proj.weight")), b("decoder.proj.bias"));
  Var x = scatter_full(projected, mask, b("decoder.mask_token"));
  Tape& t = b.tape();
  const Var table = t.dry_run() ? t.input_shape(x.rows(), x.cols()) : t.input(positions(x.rows(), x.cols()));
  x = add(x, table);
  for (int j = 0; j < cfg.decoder_depth; ++j) {
    x = standard_block(b, "decoder.blocks." + std::to_string(j), x, cfg.decoder_heads);
  }
  return add_row(matmul(x, b("decoder.head.weight")), b("decoder.head.bias"));
}

Var reconstruction_loss(Var pred, const Matrix& target, const TubeMask& mask) {
  auto masked = mask.masked_tokens();
  if (masked.empty()) {
    throw std::invalid_argument("reconstruction_loss: the mask hides no position");
  }
  return masked_mse(pred, target, std::move(masked));
}

}  // namespace svfap
