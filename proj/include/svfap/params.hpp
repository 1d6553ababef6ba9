// Copyright (c) 2026, SVFAP contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "svfap/tensor.hpp"

#include <cstddef>
#include <map>
#include <string>

namespace svfap {

/// One trainable tensor. `value` is empty when the owning store is
/// shape-only (used for cost tracing at full model scale).
struct Param {
  Index rows = 0;
  Index cols = 0;
  Matrix value;
  Matrix grad;
  bool decay = true;

  std::size_t size() const { return static_cast<std::size_t>(rows * cols); }
};

enum class Init { kXavier, kTruncNormal, kZeros, kOnes };

/// Named parameter tensors keyed by module path ("encoder.stage1.blocks.0.attn.q").
/// Iteration order is lexicographic, which fixes the order of every
/// reduction and of checkpoint records.
class ParamStore {
 public:
  explicit ParamStore(bool shape_only = false) : shape_only_(shape_only) {}

  /// Registers a tensor. Single-row tensors (biases, norms, tokens) are
  /// excluded from weight decay.
  Param& create(const std::string& name, Index rows, Index cols, Init init, Rng& rng);

  Param& at(const std::string& name);
  const Param& at(const std::string& name) const;
  bool contains(const std::string& name) const { return params_.count(name) != 0; }

  std::map<std::string, Param>& entries() { return params_; }
  const std::map<std::string, Param>& entries() const { return params_; }

  /// Total scalar count, optionally restricted to names starting with prefix.
  std::size_t count(const std::string& prefix = "") const;

  bool shape_only() const { return shape_only_; }

  void zero_grad();

 private:
  bool shape_only_;
  std::map<std::string, Param> params_;
};

}  // namespace svfap
