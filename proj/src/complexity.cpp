// Copyright (c) 2026, SVFAP contributors
// SPDX-License-Identifier: Apache-2.0

#include "svfap/complexity.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace svfap {

namespace {

using u64 = std::uint64_t;

struct Cost {
  u64 params = 0;
  u64 flops = 0;

  Cost& operator+=(const Cost& o) {
    params += o.params;
    flops += o.flops;
    return *this;
  }
};

Cost times(u64 n, const Cost& c) { return {n * c.params, n * c.flops}; }

// Dense map m -> n applied to `rows` tokens, with or without bias.
Cost linear(u64 rows, u64 m, u64 n, bool bias = true) { return {m * n + (bias ? n : 0), rows * m * n}; }

Cost layer_norms(u64 count, u64 c) { return {2 * count * c, 0}; }

// Attention with nq queries over nk keys: four bias-free C x C maps plus
// the score and value products.
Cost attention(u64 nq, u64 nk, u64 c) {
  Cost a = linear(nq, c, c, false);
  a += linear(nk, c, c, false);
  a += linear(nk, c, c, false);
  a += linear(nq, c, c, false);
  a.flops += 2 * nq * nk * c;
  return a;
}

Cost mlp(u64 rows, u64 in, u64 hidden, u64 out) {
  Cost f = linear(rows, in, hidden);
  f += linear(rows, hidden, out);
  return f;
}

Cost standard_block(u64 n, u64 c) {
  Cost b = layer_norms(2, c);
  b += attention(n, n, c);
  b += mlp(n, c, 4 * c, c);
  return b;
}

// Queries nq cross-attend to nk context tokens, then self-attend.
Cost cross_block(u64 nq, u64 nk, u64 c) {
  Cost b = layer_norms(4, c);
  b += attention(nq, nk, c);
  b += attention(nq, nq, c);
  b += mlp(nq, c, 4 * c, c);
  return b;
}

struct Geometry {
  u64 t1 = 0;  // slices after patching
  u64 s = 0;   // tokens per slice seen by the encoder
  u64 n = 0;   // full lattice size
};

std::vector<PartCost> encoder_parts(const ArchConfig& a, const Geometry& g) {
  const u64 c = static_cast<u64>(a.embed_dim);
  const u64 k = static_cast<u64>(a.temporal_stride);
  const u64 gb = static_cast<u64>(a.bottleneck_tokens);
  std::vector<PartCost> parts;

  const Cost embed = linear(g.n, static_cast<u64>(a.patch_dim()), c);
  parts.push_back({"patch_embed", embed.params, embed.flops});

  u64 t = g.t1;
  const Cost s1 = times(static_cast<u64>(a.stage_depths[0]), standard_block(t * g.s, c));
  parts.push_back({"stage1", s1.params, s1.flops});

  for (int stage = 2; stage <= 3; ++stage) {
    Cost sc;
    if (a.temporal_pyramid) {
      t /= k;
      if (a.downsample == Downsample::kConv) {
        sc += linear(t * g.s, k * c, c);
      }
    }
    const u64 tokens = t * g.s;
    if (a.spatial_bottleneck) {
      const u64 bn = t * gb;
      sc += mlp(tokens, c, static_cast<u64>(a.spatial_hidden), gb);
      sc.flops += t * gb * g.s * c;  // Y^T X per slice
      const u64 m = static_cast<u64>(a.stage_depths[static_cast<std::size_t>(stage - 1)]);
      sc += times(m - 1, cross_block(bn, tokens, c));
      sc += cross_block(tokens, bn, c);
    } else {
      sc += times(static_cast<u64>(a.replacement_depth(stage)), standard_block(tokens, c));
    }
    parts.push_back({"stage" + std::to_string(stage), sc.params, sc.flops});
  }
  return parts;
}

template <typename F>
u64 sum(const std::vector<PartCost>& parts, F field) {
  return std::accumulate(parts.begin(), parts.end(), u64{0},
                         [&](u64 acc, const PartCost& p) { return acc + field(p); });
}

}  // namespace

std::string to_string(Variant v) {
  switch (v) {
    case Variant::kFull:
      return "full";
    case Variant::kVitBaseline:
      return "vit_baseline";
    case Variant::kTpOnly:
      return "tp_only";
    case Variant::kSbtOnly:
      return "sbt_only";
  }
  return "?";
}

Variant parse_variant(std::string_view s) {
  for (Variant v : {Variant::kFull, Variant::kVitBaseline, Variant::kTpOnly, Variant::kSbtOnly}) {
    if (s == to_string(v)) {
      return v;
    }
  }
  throw ConfigError("unknown variant '" + std::string(s) + "' (full, vit_baseline, tp_only, sbt_only)");
}

std::string to_string(Regime r) { return r == Regime::kFinetune ? "finetune" : "pretrain"; }

Regime parse_regime(std::string_view s) {
  if (s == "finetune") {
    return Regime::kFinetune;
  }
  if (s == "pretrain") {
    return Regime::kPretrain;
  }
  throw ConfigError("unknown regime '" + std::string(s) + "' (finetune, pretrain)");
}

ArchConfig variant_config(const ArchConfig& cfg, Variant v) {
  if (v != Variant::kFull && (!cfg.temporal_pyramid || !cfg.spatial_bottleneck)) {
    throw ConfigError("variant " + to_string(v) + " needs a config with both pyramid and bottleneck enabled");
  }
  ArchConfig a = cfg;
  a.temporal_pyramid = v == Variant::kFull || v == Variant::kTpOnly;
  a.spatial_bottleneck = v == Variant::kFull || v == Variant::kSbtOnly;
  return a;
}

std::uint64_t CostReport::params_finetune() const { return sum(finetune, [](const PartCost& p) { return p.params; }); }
std::uint64_t CostReport::params_pretrain() const { return sum(pretrain, [](const PartCost& p) { return p.params; }); }
std::uint64_t CostReport::flops_finetune() const { return sum(finetune, [](const PartCost& p) { return p.flops; }); }
std::uint64_t CostReport::flops_pretrain() const { return sum(pretrain, [](const PartCost& p) { return p.flops; }); }

CostReport count(const ArchConfig& cfg, Variant variant, int head_outputs) {
  validate(cfg);
  CostReport r;
  r.variant = variant;
  r.arch = variant_config(cfg, variant);
  r.head_outputs = head_outputs;
  const ArchConfig& a = r.arch;
  const auto grid = a.grid();
  const u64 t1 = static_cast<u64>(grid[0]);
  const u64 s_full = static_cast<u64>(grid[1]) * static_cast<u64>(grid[2]);
  const u64 s_vis = static_cast<u64>(std::lround(static_cast<double>(s_full) * (1.0 - a.masking_ratio)));

  r.finetune = encoder_parts(a, {t1, s_full, t1 * s_full});
  if (head_outputs > 0) {
    const Cost h = linear(1, static_cast<u64>(a.embed_dim), static_cast<u64>(head_outputs));
    r.finetune.push_back({"head", h.params, h.flops});
  }

  r.pretrain = encoder_parts(a, {t1, s_vis, t1 * s_full});
  const u64 n = t1 * s_full;
  const u64 d = static_cast<u64>(a.decoder_dim);
  Cost dec = linear(t1 * s_vis, static_cast<u64>(a.embed_dim), d);
  dec.params += d;  // mask token
  dec += times(static_cast<u64>(a.decoder_depth), standard_block(n, d));
  dec += linear(n, d, static_cast<u64>(a.patch_dim()));
  r.pretrain.push_back({"decoder", dec.params, dec.flops});
  return r;
}

Reduction reduction(const CostReport& full, const CostReport& baseline) {
  auto frac = [](u64 f, u64 b) {
    if (b == 0) {
      throw std::domain_error("reduction: zero baseline");
    }
    return 1.0 - static_cast<double>(f) / static_cast<double>(b);
  };
  return {frac(full.params_finetune(), baseline.params_finetune()),
          frac(full.flops_finetune(), baseline.flops_finetune()),
          frac(full.flops_pretrain(), baseline.flops_pretrain())};
}

std::uint64_t standard_attention_entries(std::uint64_t t, std::uint64_t s) { return (t * s) * (t * s); }

std::uint64_t bottleneck_attention_entries(std::uint64_t t, std::uint64_t s, std::uint64_t g) {
  // Cross: T·G queries over T·S keys; self: T·G over T·G.
  return (t * g) * (t * s) + (t * g) * (t * g);
}

}  // namespace svfap
