// Copyright (c) 2026, SVFAP contributors
// SPDX-License-Identifier: Apache-2.0

#include "svfap/attention.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace svfap {

Var mhca(Var x, Var y, const AttentionWeights& w, std::vector<Matrix>* probs) {
  const Index width = w.q.rows();
  if (x.cols() != width || y.cols() != width) {
    throw ShapeError("mhca: token width does not match the projections");
  }
  if (w.heads < 1 || width % w.heads != 0) {
    throw ShapeError("mhca: width " + std::to_string(width) + " not divisible by " + std::to_string(w.heads) +
                     " heads");
  }
  const Index dh = width / w.heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  const Var q = matmul(x, w.q);
  const Var k = matmul(y, w.k);
  const Var v = matmul(y, w.v);
  std::vector<Var> heads;
  heads.reserve(static_cast<std::size_t>(w.heads));
  for (int h = 0; h < w.heads; ++h) {
    const Var qh = slice_cols(q, h * dh, dh);
    const Var kh = slice_cols(k, h * dh, dh);
    const Var vh = slice_cols(v, h * dh, dh);
    const Var a = softmax_rows(scale(matmul_nt(qh, kh), inv_sqrt));
    if (probs != nullptr && !x.tape().dry_run()) {
      probs->push_back(a.value());
    }
    heads.push_back(matmul(a, vh));
  }
  return matmul(concat_cols(heads), w.o);
}

Var mhsa(Var x, const AttentionWeights& w, std::vector<Matrix>* probs) { return mhca(x, x, w, probs); }

Var ffn(Var x, const FfnWeights& w) {
  return add_row(matmul(gelu(add_row(matmul(x, w.w1), w.b1)), w.w2), w.b2);
}

Var norm(Var x, const NormWeights& w) { return layer_norm(x, w.gain, w.bias, kLayerNormEps); }

void init_attention(ParamStore& store, const std::string& prefix, int width, Rng& rng) {
  for (const char* m : {".q", ".k", ".v", ".o"}) {
    store.create(prefix + m, width, width, Init::kTruncNormal, rng);
  }
}

void init_ffn(ParamStore& store, const std::string& prefix, int width, int hidden, int out, Rng& rng) {
  store.create(prefix + ".fc1.weight", width, hidden, Init::kTruncNormal, rng);
  store.create(prefix + ".fc1.bias", 1, hidden, Init::kZeros, rng);
  store.create(prefix + ".fc2.weight", hidden, out, Init::kTruncNormal, rng);
  store.create(prefix + ".fc2.bias", 1, out, Init::kZeros, rng);
}

void init_norm(ParamStore& store, const std::string& prefix, int width, Rng& rng) {
  store.create(prefix + ".gain", 1, width, Init::kOnes, rng);
  store.create(prefix + ".bias", 1, width, Init::kZeros, rng);
}

AttentionWeights bind_attention(Bindings& b, const std::string& prefix, int heads) {
  return {b(prefix + ".q"), b(prefix + ".k"), b(prefix + ".v"), b(prefix + ".o"), heads};
}

FfnWeights bind_ffn(Bindings& b, const std::string& prefix) {
  return {b(prefix + ".fc1.weight"), b(prefix + ".fc1.bias"), b(prefix + ".fc2.weight"), b(prefix + ".fc2.bias")};
}

NormWeights bind_norm(Bindings& b, const std::string& prefix) {
  return {b(prefix + ".gain"), b(prefix + ".bias")};
}

void init_standard_block(ParamStore& store, const std::string& prefix, int width, Rng& rng) {
  init_norm(store, prefix + ".norm1", width, rng);
  init_attention(store, prefix + ".attn", width, rng);
  init_norm(store, prefix + ".norm2", width, rng);
  init_ffn(store, prefix + ".ffn", width, 4 * width, width, rng);
}

Var standard_block(Bindings& b, const std::string& prefix, Var x, int heads) {
  const Var y = add(x, mhsa(norm(x, bind_norm(b, prefix + ".norm1")), bind_attention(b, prefix + ".attn", heads)));
  return add(y, ffn(norm(y, bind_norm(b, prefix + ".norm2")), bind_ffn(b, prefix + ".ffn")));
}

void init_cross_block(ParamStore& store, const std::string& prefix, int width, Rng& rng) {
  init_norm(store, prefix + ".norm_q", width, rng);
  init_norm(store, prefix + ".norm_kv", width, rng);
  init_attention(store, prefix + ".cross", width, rng);
  init_norm(store, prefix + ".norm2", width, rng);
  init_attention(store, prefix + ".attn", width, rng);
  init_norm(store, prefix + ".norm3", width, rng);
  init_ffn(store, prefix + ".ffn", width, 4 * width, width, rng);
}

Var cross_block(Bindings& b, const std::string& prefix, Var query, Var context, int heads) {
  const Var qn = norm(query, bind_norm(b, prefix + ".norm_q"));
  const Var cn = norm(context, bind_norm(b, prefix + ".norm_kv"));
  const Var y = add(query, mhca(qn, cn, bind_attention(b, prefix + ".cross", heads)));
  const Var z = add(y, mhsa(norm(y, bind_norm(b, prefix + ".norm2")), bind_attention(b, prefix + ".attn", heads)));
  return add(z, ffn(norm(z, bind_norm(b, prefix + ".norm3")), bind_ffn(b, prefix + ".ffn")));
}

}  // namespace svfap
