// Copyright (c) 2026, SVFAP contributors
// SPDX-License-Identifier: Apache-2.0
//
// Minimal reverse-mode differentiation over row-major double matrices.
//
// A Tape records every operation of one forward pass. Ops are free functions
// taking Var handles; each registers a closure that propagates the output
// gradient to its inputs. Matrix products are the only ops that count
// toward flops(): one multiply-add is one FLOP.
//
// A dry-run tape carries shapes only. It executes no arithmetic but still
// validates shapes and counts FLOPs, so full-size models can be traced
// without allocating activations.

#pragma once

#include "svfap/params.hpp"
#include "svfap/tensor.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace svfap {

class Tape;

/// Handle to a node on a Tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;

  Index rows() const;
  Index cols() const;
  const Matrix& value() const;
  /// Gradient after Tape::backward; empty if no gradient reached the node.
  const Matrix& grad() const;

  Tape& tape() const { return *tape_; }
  std::size_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

class Tape {
 public:
  using Backward = std::function<void(Tape&, const Matrix& grad_out)>;

  explicit Tape(bool dry_run = false) : dry_run_(dry_run) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Leaf holding a copy of `value`.
  Var input(Matrix value, bool requires_grad = false);
  /// Shape-only leaf for dry runs.
  Var input_shape(Index rows, Index cols);
  /// Leaf bound to a parameter; backward() accumulates into param.grad.
  Var parameter(Param& param);

  /// Reverse sweep from a 1x1 node.
  void backward(Var loss);

  bool dry_run() const { return dry_run_; }
  std::uint64_t flops() const { return flops_; }
  void add_flops(std::uint64_t n) { flops_ += n; }
  std::size_t size() const { return nodes_.size(); }

  // Op-implementation interface.
  Var emit(Index rows, Index cols, Matrix value, bool requires_grad, Backward backward);
  const Matrix& value(std::size_t id) const { return nodes_[id].value; }
  const Matrix& grad(std::size_t id) const { return nodes_[id].grad; }
  Index rows(std::size_t id) const { return nodes_[id].rows; }
  Index cols(std::size_t id) const { return nodes_[id].cols; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  void accumulate(std::size_t id, const Matrix& g);

 private:
  struct Node {
    Index rows = 0;
    Index cols = 0;
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    Param* param = nullptr;
    Backward backward;
  };

  bool dry_run_;
  std::uint64_t flops_ = 0;
  std::vector<Node> nodes_;
};

// Products.
Var matmul(Var a, Var b);     // a · b
Var matmul_nt(Var a, Var b);  // a · bᵀ
Var matmul_tn(Var a, Var b);  // aᵀ · b

// Elementwise and broadcast.
Var add(Var a, Var b);
Var add_row(Var a, Var row);  // row (1 x n) broadcast over a's rows
Var scale(Var a, double s);
Var maximum(Var a, Var b);
Var transpose(Var a);

// Nonlinearities and normalization.
Var gelu(Var a);  // exact x·Φ(x)
Var softmax_rows(Var a);
Var layer_norm(Var x, Var gain, Var bias, double eps);

// Structural.
Var slice_rows(Var a, Index start, Index count);
Var slice_cols(Var a, Index start, Index count);
Var concat_rows(std::span<const Var> parts);
Var concat_cols(std::span<const Var> parts);
Var gather_rows(Var a, std::vector<Index> rows);
/// nrows x n output: row indices[i] takes visible row i, every other row is `fill` (1 x n).
Var scatter_rows(Var visible, std::vector<Index> indices, Var fill, Index nrows);
Var mean_rows(Var a);  // 1 x n

// Scalar reductions and losses (1 x 1 outputs).
Var dot(Var a, const Matrix& weights);  // Σ a ∘ weights
/// Mean over `rows` of the per-row mean squared error against target.
Var masked_mse(Var pred, const Matrix& target, std::vector<Index> rows);
Var cross_entropy(Var logits, Index target);  // logits 1 x K
Var mse(Var pred, const Matrix& target);      // (1/K)‖pred − target‖²

/// Binds named parameters to a tape, once each.
class Bindings {
 public:
  Bindings(Tape& tape, ParamStore& store) : tape_(tape), store_(store) {}

  Var operator()(const std::string& name);
  Tape& tape() { return tape_; }
  ParamStore& store() { return store_; }

 private:
  Tape& tape_;
  ParamStore& store_;
  std::map<std::string, Var> bound_;
};

/// Standard normal CDF.
double normal_cdf(double x);
double gelu_scalar(double x);

}  // namespace svfap
