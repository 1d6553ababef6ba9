// Copyright (c) 2026, SVFAP contributors
// SPDX-License-Identifier: Apache-2.0
//
// Closed-form parameter and FLOP tallies. One multiply-add is one FLOP;
// normalization, softmax and GELU are free. The formulas here are written
// from layer shapes alone and share no code with the model, so they can be
// checked against an instrumented forward pass.

#pragma once

#include "svfap/config.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace svfap {

enum class Variant { kFull, kVitBaseline, kTpOnly, kSbtOnly };
enum class Regime { kFinetune, kPretrain };

std::string to_string(Variant v);
Variant parse_variant(std::string_view s);
std::string to_string(Regime r);
Regime parse_regime(std::string_view s);

/// The architecture a variant denotes: pyramid and/or bottleneck switched off.
/// Throws ConfigError when `cfg` already has either switched off.
ArchConfig variant_config(const ArchConfig& cfg, Variant v);

struct PartCost {
  std::string name;
  std::uint64_t params = 0;
  std::uint64_t flops = 0;
};

struct CostReport {
  Variant variant = Variant::kFull;
  ArchConfig arch;
  int head_outputs = 0;
  std::vector<PartCost> finetune;  // patch_embed, stage1..3, head
  std::vector<PartCost> pretrain;  // patch_embed, stage1..3, decoder

  std::uint64_t params_finetune() const;
  std::uint64_t params_pretrain() const;
  std::uint64_t flops_finetune() const;
  std::uint64_t flops_pretrain() const;
};

/// Pass head_outputs = 0 to leave the classification head out.
CostReport count(const ArchConfig& cfg, Variant variant, int head_outputs = 0);

struct Reduction {
  double params = 0.0;
  double flops_finetune = 0.0;
  double flops_pretrain = 0.0;
};

/// 1 − full/baseline per field. Throws std::domain_error on a zero baseline.
Reduction reduction(const CostReport& full, const CostReport& baseline);

/// Attention score entries of one block at T slices of S tokens:
/// (T·S)² for a standard block, G(G+S)T² for a bottleneck block.
std::uint64_t standard_attention_entries(std::uint64_t t, std::uint64_t s);
std::uint64_t bottleneck_attention_entries(std::uint64_t t, std::uint64_t s, std::uint64_t g);

}  // namespace svfap
