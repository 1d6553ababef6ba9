// Copyright (c) 2026, SVFAP contributors
// SPDX-License-Identifier: Apache-2.0
//
// Shared transformer primitives: multi-head self/cross attention, the GELU
// feed-forward network, and pre-norm residual blocks built from them.

#pragma once

#include "svfap/autograd.hpp"
#include "svfap/params.hpp"

#include <string>
#include <vector>

namespace svfap {

inline constexpr double kLayerNormEps = 1e-6;

/// Per-head projections stored side by side: columns [h·d_h, (h+1)·d_h) of
/// q/k/v are W^Q_h, W^K_h, W^V_h. All four matrices are C x C.
struct AttentionWeights {
  Var q, k, v, o;
  int heads = 1;
};

struct FfnWeights {
  Var w1, b1, w2, b2;
};

struct NormWeights {
  Var gain, bias;
};

/// Multi-head cross-attention: queries from x, keys and values from y.
/// When `probs` is non-null it receives every head's softmax matrix.
Var mhca(Var x, Var y, const AttentionWeights& w, std::vector<Matrix>* probs = nullptr);
/// Multi-head self-attention, mhca(x, x).
Var mhsa(Var x, const AttentionWeights& w, std::vector<Matrix>* probs = nullptr);
/// GELU(x·W1 + b1)·W2 + b2.
Var ffn(Var x, const FfnWeights& w);
Var norm(Var x, const NormWeights& w);

// Parameter registration and binding under a module path.
void init_attention(ParamStore& store, const std::string& prefix, int width, Rng& rng);
void init_ffn(ParamStore& store, const std::string& prefix, int width, int hidden, int out, Rng& rng);
void init_norm(ParamStore& store, const std::string& prefix, int width, Rng& rng);
AttentionWeights bind_attention(Bindings& b, const std::string& prefix, int heads);
FfnWeights bind_ffn(Bindings& b, const std::string& prefix);
NormWeights bind_norm(Bindings& b, const std::string& prefix);

/// Pre-norm block: y = x + MHSA(LN(x)); out = y + FFN(LN(y)).
void init_standard_block(ParamStore& store, const std::string& prefix, int width, Rng& rng);
Var standard_block(Bindings& b, const std::string& prefix, Var x, int heads);

/// Cross-attention block over a query set and a context set:
///   y = q + MHCA(LN(q), LN(ctx)); z = y + MHSA(LN(y)); out = z + FFN(LN(z)).
/// With q = bottlenecks and ctx = tokens this is the SBT block; swapping
/// the roles gives the reverse SBT block.
void init_cross_block(ParamStore& store, const std::string& prefix, int width, Rng& rng);
Var cross_block(Bindings& b, const std::string& prefix, Var query, Var context, int heads);

}  // namespace svfap
