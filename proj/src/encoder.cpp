// Copyright (c) 2026, SVFAP contributors
// SPDX-License-Identifier: Apache-2.0

#include "svfap/encoder.hpp"

#include "svfap/tokenizer.hpp"

#include <string>
#include <vector>

namespace svfap {

namespace {

std::string stage_prefix(int stage) { return "encoder.stage" + std::to_string(stage); }

std::string block_prefix(int stage, int j) { return stage_prefix(stage) + ".blocks." + std::to_string(j); }

// Rows (t·k + offset)·S + s for every output slice t and spatial index s.
std::vector<Index> slice_offset_rows(int out_length, int spatial, int k, int offset) {
  std::vector<Index> rows;
  rows.reserve(static_cast<std::size_t>(out_length) * spatial);
  for (int t = 0; t < out_length; ++t) {
    for (int s = 0; s < spatial; ++s) {
      rows.push_back(static_cast<Index>(t * k + offset) * spatial + s);
    }
  }
  return rows;
}

StageOutput pyramid_stage(Bindings& b, const ArchConfig& cfg, int stage, const StageOutput& prev) {
  StageOutput x = cfg.temporal_pyramid ? temporal_downsample(b, cfg, stage, prev) : prev;
  if (!cfg.spatial_bottleneck) {
    for (int j = 0; j < cfg.replacement_depth(stage); ++j) {
      x.tokens = standard_block(b, block_prefix(stage, j), x.tokens, cfg.heads);
    }
    return x;
  }
  Var z = spatial_attention(b, cfg, stage, x);
  const int depth = cfg.stage_depths[static_cast<std::size_t>(stage - 1)];
  for (int j = 0; j + 1 < depth; ++j) {
    z = sbt_block(b, cfg, block_prefix(stage, j), z, x.tokens);
  }
  x.tokens = reverse_sbt_block(b, cfg, stage_prefix(stage) + ".reverse", x.tokens, z);
  return x;
}

}  // namespace

void init_encoder(ParamStore& store, const ArchConfig& cfg, Rng& rng) {
  const int c = cfg.embed_dim;
  store.create("encoder.patch_embed.weight", cfg.patch_dim(), c, Init::kTruncNormal, rng);
  store.create("encoder.patch_embed.bias", 1, c, Init::kZeros, rng);
  for (int j = 0; j < cfg.stage_depths[0]; ++j) {
    init_standard_block(store, block_prefix(1, j), c, rng);
  }
  for (int stage = 2; stage <= 3; ++stage) {
    const std::string p = stage_prefix(stage);
    if (cfg.temporal_pyramid && cfg.downsample == Downsample::kConv) {
      store.create(p + ".downsample.weight", static_cast<Index>(cfg.temporal_stride) * c, c, Init::kTruncNormal,
                   rng);
      store.create(p + ".downsample.bias", 1, c, Init::kZeros, rng);
    }
    if (!cfg.spatial_bottleneck) {
      for (int j = 0; j < cfg.replacement_depth(stage); ++j) {
        init_standard_block(store, block_prefix(stage, j), c, rng);
      }
      continue;
    }
    init_ffn(store, p + ".spatial", c, cfg.spatial_hidden, cfg.bottleneck_tokens, rng);
    for (int j = 0; j + 1 < cfg.stage_depths[static_cast<std::size_t>(stage - 1)]; ++j) {
      init_cross_block(store, block_prefix(stage, j), c, rng);
    }
    init_cross_block(store, p + ".reverse", c, rng);
  }
}

Var embed_tokens(Bindings& b, Var patches) {
  return embed(patches, b("encoder.patch_embed.weight"), b("encoder.patch_embed.bias"));
}

StageOutput stage1(Bindings& b, const ArchConfig& cfg, const StageOutput& x) {
  if (x.tokens.rows() != x.count()) {
    throw ShapeError("stage1: " + std::to_string(x.tokens.rows()) + " rows for " + std::to_string(x.length) + "x" +
                     std::to_string(x.spatial) + " tokens");
  }
  StageOutput y = x;
  for (int j = 0; j < cfg.stage_depths[0]; ++j) {
    y.tokens = standard_block(b, block_prefix(1, j), y.tokens, cfg.heads);
  }
  return y;
}

StageOutput temporal_downsample(Bindings& b, const ArchConfig& cfg, int stage, const StageOutput& x) {
  const int k = cfg.temporal_stride;
  if (x.length % k != 0) {
    throw ShapeError("temporal_downsample: length " + std::to_string(x.length) + " not divisible by stride " +
                     std::to_string(k));
  }
  const int out_length = x.length / k;
  std::vector<Var> taps;
  taps.reserve(static_cast<std::size_t>(k));
  for (int j = 0; j < k; ++j) {
    taps.push_back(gather_rows(x.tokens, slice_offset_rows(out_length, x.spatial, k, j)));
  }
  StageOutput y{Var{}, out_length, x.spatial};
  switch (cfg.downsample) {
    case Downsample::kConv: {
      // Tap j occupies input channels [j·C, (j+1)·C) of the kernel.
      const std::string p = stage_prefix(stage) + ".downsample";
      y.tokens = add_row(matmul(concat_cols(taps), b(p + ".weight")), b(p + ".bias"));
      break;
    }
    case Downsample::kAvg: {
      Var sum = taps[0];
      for (int j = 1; j < k; ++j) {
        sum = add(sum, taps[static_cast<std::size_t>(j)]);
      }
      y.tokens = scale(sum, 1.0 / k);
      break;
    }
    case Downsample::kMax: {
      Var m = taps[0];
      for (int j = 1; j < k; ++j) {
        m = maximum(m, taps[static_cast<std::size_t>(j)]);
      }
      y.tokens = m;
      break;
    }
  }
  return y;
}

Var spatial_attention(Bindings& b, const ArchConfig& cfg, int stage, const StageOutput& x) {
  if (x.tokens.rows() != x.count()) {
    throw ShapeError("spatial_attention: token count does not match the stage geometry");
  }
  const Var scores = ffn(x.tokens, bind_ffn(b, stage_prefix(stage) + ".spatial"));
  std::vector<Var> slices;
  slices.reserve(static_cast<std::size_t>(x.length));
  for (int t = 0; t < x.length; ++t) {
    const Index first = static_cast<Index>(t) * x.spatial;
    const Var y = slice_rows(scores, first, x.spatial);
    const Var xt = slice_rows(x.tokens, first, x.spatial);
    if (cfg.spatial_softmax) {
      slices.push_back(matmul(softmax_rows(transpose(y)), xt));
    } else {
      slices.push_back(matmul_tn(y, xt));
    }
  }
  return concat_rows(slices);
}

Var sbt_block(Bindings& b, const ArchConfig& cfg, const std::string& prefix, Var bottlenecks, Var tokens) {
  return cross_block(b, prefix, bottlenecks, tokens, cfg.heads);
}

Var reverse_sbt_block(Bindings& b, const ArchConfig& cfg, const std::string& prefix, Var tokens, Var bottlenecks) {
  return cross_block(b, prefix, tokens, bottlenecks, cfg.heads);
}

StageOutput temporal_upsample(const StageOutput& x, int factor) {
  if (factor < 1) {
    throw ShapeError("temporal_upsample: factor must be positive, got " + std::to_string(factor));
  }
  if (factor == 1) {
    return x;
  }
  std::vector<Index> rows;
  rows.reserve(static_cast<std::size_t>(x.count()) * factor);
  for (int t = 0; t < x.length * factor; ++t) {
    for (int s = 0; s < x.spatial; ++s) {
      rows.push_back(static_cast<Index>(t / factor) * x.spatial + s);
    }
  }
  return {gather_rows(x.tokens, std::move(rows)), x.length * factor, x.spatial};
}

EncoderOutput encode(Bindings& b, const ArchConfig& cfg, const StageOutput& tokens, EncodeMode mode) {
  EncoderOutput out;
  out.stages[0] = stage1(b, cfg, tokens);
  for (int stage = 2; stage <= 3; ++stage) {
    const auto i = static_cast<std::size_t>(stage - 1);
    out.stages[i] = pyramid_stage(b, cfg, stage, out.stages[i - 1]);
    if (cfg.spatial_bottleneck) {
      out.bottlenecks[i] = static_cast<Index>(out.stages[i].length) * cfg.bottleneck_tokens;
    }
  }
  const bool fuse = mode == EncodeMode::kPretrain ? cfg.fusion_pretrain : cfg.fusion_finetune;
  const int t1 = out.stages[0].length;
  if (fuse) {
    Var sum = out.stages[0].tokens;
    for (std::size_t i = 1; i < 3; ++i) {
      sum = add(sum, temporal_upsample(out.stages[i], t1 / out.stages[i].length).tokens);
    }
    out.out = {sum, t1, tokens.spatial};
  } else if (mode == EncodeMode::kPretrain) {
    // The decoder needs a T_1-length sequence even without fusion.
    out.out = temporal_upsample(out.stages[2], t1 / out.stages[2].length);
  } else {
    out.out = out.stages[2];
  }
  return out;
}

}  // namespace svfap
