// Copyright (c) 2026, SVFAP contributors
// SPDX-License-Identifier: Apache-2.0

#include "svfap/autograd.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace svfap {

namespace {

void require(bool ok, const char* op, const std::string& detail) {
  if (!ok) {
    throw ShapeError(std::string(op) + ": " + detail);
  }
}

std::string shape_str(Var v) {
  return std::to_string(v.rows()) + "x" + std::to_string(v.cols());
}

bool any_grad(std::initializer_list<Var> vs) {
  for (const Var& v : vs) {
    if (v.tape().requires_grad(v.id())) {
      return true;
    }
  }
  return false;
}

}  // namespace

Index Var::rows() const { return tape_->rows(id_); }
Index Var::cols() const { return tape_->cols(id_); }
const Matrix& Var::value() const { return tape_->value(id_); }
const Matrix& Var::grad() const { return tape_->grad(id_); }

Var Tape::input(Matrix value, bool requires_grad) {
  Node n;
  n.rows = value.rows();
  n.cols = value.cols();
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Var Tape::input_shape(Index rows, Index cols) {
  Node n;
  n.rows = rows;
  n.cols = cols;
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Var Tape::parameter(Param& param) {
  Node n;
  n.rows = param.rows;
  n.cols = param.cols;
  if (!dry_run_) {
    n.value = param.value;
  }
  n.requires_grad = true;
  n.param = &param;
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Var Tape::emit(Index rows, Index cols, Matrix value, bool requires_grad, Backward backward) {
  Node n;
  n.rows = rows;
  n.cols = cols;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  if (requires_grad) {
    n.backward = std::move(backward);
  }
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

void Tape::accumulate(std::size_t id, const Matrix& g) {
  Node& n = nodes_[id];
  if (!n.requires_grad) {
    return;
  }
  if (n.grad.size() == 0) {
    n.grad = g;
  } else {
    n.grad += g;
  }
}

void Tape::backward(Var loss) {
  if (dry_run_) {
    throw std::logic_error("Tape::backward: dry-run tapes carry no values");
  }
  require(loss.rows() == 1 && loss.cols() == 1, "backward", "loss must be 1x1, got " + shape_str(loss));
  nodes_[loss.id()].grad = Matrix::Ones(1, 1);
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    // Copy: the closure may append to other nodes' grads but never to this one.
    if (nodes_[i].grad.size() == 0) {
      continue;
    }
    if (nodes_[i].backward) {
      const Matrix g = nodes_[i].grad;
      nodes_[i].backward(*this, g);
    }
    if (nodes_[i].param != nullptr) {
      Param& p = *nodes_[i].param;
      if (p.grad.size() == 0) {
        p.grad = Matrix::Zero(p.rows, p.cols);
      }
      p.grad += nodes_[i].grad;
    }
  }
}

Var Bindings::operator()(const std::string& name) {
  auto it = bound_.find(name);
  if (it != bound_.end()) {
    return it->second;
  }
  Var v = tape_.parameter(store_.at(name));
  bound_.emplace(name, v);
  return v;
}

Var matmul(Var a, Var b) {
  Tape& t = a.tape();
  require(a.cols() == b.rows(), "matmul", shape_str(a) + " · " + shape_str(b));
  t.add_flops(static_cast<std::uint64_t>(a.rows() * a.cols() * b.cols()));
  Matrix v;
  if (!t.dry_run()) {
    v.noalias() = a.value() * b.value();
  }
  const auto ia = a.id();
  const auto ib = b.id();
  return t.emit(a.rows(), b.cols(), std::move(v), any_grad({a, b}), [ia, ib](Tape& t, const Matrix& g) {
    if (t.requires_grad(ia)) {
      t.accumulate(ia, g * t.value(ib).transpose());
    }
    if (t.requires_grad(ib)) {
      t.accumulate(ib, t.value(ia).transpose() * g);
    }
  });
}

Var matmul_nt(Var a, Var b) {
  Tape& t = a.tape();
  require(a.cols() == b.cols(), "matmul_nt", shape_str(a) + " · (" + shape_str(b) + ")ᵀ");
  t.add_flops(static_cast<std::uint64_t>(a.rows() * a.cols() * b.rows()));
  Matrix v;
  if (!t.dry_run()) {
    v.noalias() = a.value() * b.value().transpose();
  }
  const auto ia = a.id();
  const auto ib = b.id();
  return t.emit(a.rows(), b.rows(), std::move(v), any_grad({a, b}), [ia, ib](Tape& t, const Matrix& g) {
    if (t.requires_grad(ia)) {
      t.accumulate(ia, g * t.value(ib));
    }
    if (t.requires_grad(ib)) {
      t.accumulate(ib, g.transpose() * t.value(ia));
    }
  });
}

Var matmul_tn(Var a, Var b) {
  Tape& t = a.tape();
  require(a.rows() == b.rows(), "matmul_tn", "(" + shape_str(a) + ")ᵀ · " + shape_str(b));
  t.add_flops(static_cast<std::uint64_t>(a.cols() * a.rows() * b.cols()));
  Matrix v;
  if (!t.dry_run()) {
    v.noalias() = a.value().transpose() * b.value();
  }
  const auto ia = a.id();
  const auto ib = b.id();
  return t.emit(a.cols(), b.cols(), std::move(v), any_grad({a, b}), [ia, ib](Tape& t, const Matrix& g) {
    if (t.requires_grad(ia)) {
      t.accumulate(ia, t.value(ib) * g.transpose());
    }
    if (t.requires_grad(ib)) {
      t.accumulate(ib, t.value(ia) * g);
    }
  });
}

Var add(Var a, Var b) {
  Tape& t = a.tape();
  require(a.rows() == b.rows() && a.cols() == b.cols(), "add", shape_str(a) + " + " + shape_str(b));
  Matrix v;
  if (!t.dry_run()) {
    v = a.value() + b.value();
  }
  const auto ia = a.id();
  const auto ib = b.id();
  return t.emit(a.rows(), a.cols(), std::move(v), any_grad({a, b}), [ia, ib](Tape& t, const Matrix& g) {
    t.accumulate(ia, g);
    t.accumulate(ib, g);
  });
}

Var add_row(Var a, Var row) {
  Tape& t = a.tape();
  require(row.rows() == 1 && row.cols() == a.cols(), "add_row", shape_str(a) + " + " + shape_str(row));
  Matrix v;
  if (!t.dry_run()) {
    v = a.value().rowwise() + row.value().row(0);
  }
  const auto ia = a.id();
  const auto ir = row.id();
  return t.emit(a.rows(), a.cols(), std::move(v), any_grad({a, row}), [ia, ir](Tape& t, const Matrix& g) {
    t.accumulate(ia, g);
    if (t.requires_grad(ir)) {
      t.accumulate(ir, g.colwise().sum());
    }
  });
}

Var scale(Var a, double s) {
  Tape& t = a.tape();
  Matrix v;
  if (!t.dry_run()) {
    v = a.value() * s;
  }
  const auto ia = a.id();
  return t.emit(a.rows(), a.cols(), std::move(v), any_grad({a}), [ia, s](Tape& t, const Matrix& g) {
    t.accumulate(ia, g * s);
  });
}

Var maximum(Var a, Var b) {
  Tape& t = a.tape();
  require(a.rows() == b.rows() && a.cols() == b.cols(), "maximum", shape_str(a) + " vs " + shape_str(b));
  Matrix v;
  if (!t.dry_run()) {
    v = a.value().cwiseMax(b.value());
  }
  const auto ia = a.id();
  const auto ib = b.id();
  return t.emit(a.rows(), a.cols(), std::move(v), any_grad({a, b}), [ia, ib](Tape& t, const Matrix& g) {
    const Matrix& av = t.value(ia);
    const Matrix& bv = t.value(ib);
    Matrix ga = Matrix::Zero(g.rows(), g.cols());
    Matrix gb = Matrix::Zero(g.rows(), g.cols());
    for (Index i = 0; i < g.size(); ++i) {
      // Ties route to the first operand.
      if (av.data()[i] >= bv.data()[i]) {
        ga.data()[i] = g.data()[i];
      } else {
        gb.data()[i] = g.data()[i];
      }
    }
    t.accumulate(ia, ga);
    t.accumulate(ib, gb);
  });
}

Var transpose(Var a) {
  Tape& t = a.tape();
  Matrix v;
  if (!t.dry_run()) {
    v = a.value().transpose();
  }
  const auto ia = a.id();
  return t.emit(a.cols(), a.rows(), std::move(v), any_grad({a}), [ia](Tape& t, const Matrix& g) {
    t.accumulate(ia, g.transpose());
  });
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double gelu_scalar(double x) { return x * normal_cdf(x); }

Var gelu(Var a) {
  Tape& t = a.tape();
  Matrix v;
  if (!t.dry_run()) {
    v = a.value().unaryExpr([](double x) { return gelu_scalar(x); });
  }
  const auto ia = a.id();
  return t.emit(a.rows(), a.cols(), std::move(v), any_grad({a}), [ia](Tape& t, const Matrix& g) {
    const double inv_sqrt_2pi = 0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2;
    Matrix d = t.value(ia).unaryExpr([inv_sqrt_2pi](double x) {
      return normal_cdf(x) + x * inv_sqrt_2pi * std::exp(-0.5 * x * x);
    });
    t.accumulate(ia, g.cwiseProduct(d));
  });
}

Var softmax_rows(Var a) {
  Tape& t = a.tape();
  Matrix v;
  if (!t.dry_run()) {
    v = a.value();
    for (Index r = 0; r < v.rows(); ++r) {
      auto row = v.row(r);
      row.array() -= row.maxCoeff();
      row = row.array().exp().matrix();
      row /= row.sum();
    }
  }
  const auto ia = a.id();
  const std::size_t self = t.size();
  return t.emit(a.rows(), a.cols(), std::move(v), any_grad({a}), [ia, self](Tape& t, const Matrix& g) {
    const Matrix& y = t.value(self);
    Matrix gy = g.cwiseProduct(y);
    Matrix dx = gy - y.cwiseProduct(gy.rowwise().sum().replicate(1, y.cols()));
    t.accumulate(ia, dx);
  });
}

Var layer_norm(Var x, Var gain, Var bias, double eps) {
  Tape& t = x.tape();
  const Index n = x.cols();
  require(n >= 2, "layer_norm", "needs at least two features, got " + shape_str(x));
  require(gain.rows() == 1 && gain.cols() == n && bias.rows() == 1 && bias.cols() == n, "layer_norm",
          "affine shapes " + shape_str(gain) + ", " + shape_str(bias) + " for input " + shape_str(x));
  Matrix v;
  Matrix xhat;
  RowVector inv_std;
  if (!t.dry_run()) {
    const Matrix& xv = x.value();
    xhat.resize(xv.rows(), n);
    inv_std.resize(xv.rows());
    for (Index r = 0; r < xv.rows(); ++r) {
      const double mu = xv.row(r).mean();
      const double var = (xv.row(r).array() - mu).square().mean();
      inv_std(r) = 1.0 / std::sqrt(var + eps);
      xhat.row(r) = (xv.row(r).array() - mu) * inv_std(r);
    }
    v = (xhat.array().rowwise() * gain.value().row(0).array()).rowwise() + bias.value().row(0).array();
  }
  const auto ix = x.id();
  const auto ig = gain.id();
  const auto ib = bias.id();
  return t.emit(x.rows(), n, std::move(v), any_grad({x, gain, bias}),
                [ix, ig, ib, xhat = std::move(xhat), inv_std = std::move(inv_std)](Tape& t, const Matrix& g) {
                  if (t.requires_grad(ig)) {
                    t.accumulate(ig, g.cwiseProduct(xhat).colwise().sum());
                  }
                  if (t.requires_grad(ib)) {
                    t.accumulate(ib, g.colwise().sum());
                  }
                  if (t.requires_grad(ix)) {
                    Matrix dxhat = g.array().rowwise() * t.value(ig).row(0).array();
                    Matrix dx(g.rows(), g.cols());
                    for (Index r = 0; r < g.rows(); ++r) {
                      const double m1 = dxhat.row(r).mean();
                      const double m2 = dxhat.row(r).cwiseProduct(xhat.row(r)).mean();
                      dx.row(r) = (dxhat.row(r).array() - m1 - xhat.row(r).array() * m2) * inv_std(r);
                    }
                    t.accumulate(ix, dx);
                  }
                });
}

Var slice_rows(Var a, Index start, Index count) {
  Tape& t = a.tape();
  require(start >= 0 && count >= 0 && start + count <= a.rows(), "slice_rows",
          "[" + std::to_string(start) + ", +" + std::to_string(count) + ") of " + shape_str(a));
  Matrix v;
  if (!t.dry_run()) {
    v = a.value().middleRows(start, count);
  }
  const auto ia = a.id();
  const Index total = a.rows();
  return t.emit(count, a.cols(), std::move(v), any_grad({a}), [ia, start, count, total](Tape& t, const Matrix& g) {
    Matrix full = Matrix::Zero(total, g.cols());
    full.middleRows(start, count) = g;
    t.accumulate(ia, full);
  });
}

Var slice_cols(Var a, Index start, Index count) {
  Tape& t = a.tape();
  require(start >= 0 && count >= 0 && start + count <= a.cols(), "slice_cols",
          "[" + std::to_string(start) + ", +" + std::to_string(count) + ") of " + shape_str(a));
  Matrix v;
  if (!t.dry_run()) {
    v = a.value().middleCols(start, count);
  }
  const auto ia = a.id();
  const Index total = a.cols();
  return t.emit(a.rows(), count, std::move(v), any_grad({a}), [ia, start, count, total](Tape& t, const Matrix& g) {
    Matrix full = Matrix::Zero(g.rows(), total);
    full.middleCols(start, count) = g;
    t.accumulate(ia, full);
  });
}

Var concat_rows(std::span<const Var> parts) {
  require(!parts.empty(), "concat_rows", "no inputs");
  Tape& t = parts.front().tape();
  const Index cols = parts.front().cols();
  Index rows = 0;
  bool rg = false;
  std::vector<std::size_t> ids;
  std::vector<Index> offsets;
  for (const Var& p : parts) {
    require(p.cols() == cols, "concat_rows", "column mismatch " + shape_str(p));
    ids.push_back(p.id());
    offsets.push_back(rows);
    rows += p.rows();
    rg = rg || t.requires_grad(p.id());
  }
  Matrix v;
  if (!t.dry_run()) {
    v.resize(rows, cols);
    for (std::size_t i = 0; i < parts.size(); ++i) {
      v.middleRows(offsets[i], parts[i].rows()) = parts[i].value();
    }
  }
  return t.emit(rows, cols, std::move(v), rg, [ids, offsets](Tape& t, const Matrix& g) {
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (t.requires_grad(ids[i])) {
        t.accumulate(ids[i], g.middleRows(offsets[i], t.rows(ids[i])));
      }
    }
  });
}

Var concat_cols(std::span<const Var> parts) {
  require(!parts.empty(), "concat_cols", "no inputs");
  Tape& t = parts.front().tape();
  const Index rows = parts.front().rows();
  Index cols = 0;
  bool rg = false;
  std::vector<std::size_t> ids;
  std::vector<Index> offsets;
  for (const Var& p : parts) {
    require(p.rows() == rows, "concat_cols", "row mismatch " + shape_str(p));
    ids.push_back(p.id());
    offsets.push_back(cols);
    cols += p.cols();
    rg = rg || t.requires_grad(p.id());
  }
  Matrix v;
  if (!t.dry_run()) {
    v.resize(rows, cols);
    for (std::size_t i = 0; i < parts.size(); ++i) {
      v.middleCols(offsets[i], parts[i].cols()) = parts[i].value();
    }
  }
  return t.emit(rows, cols, std::move(v), rg, [ids, offsets](Tape& t, const Matrix& g) {
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (t.requires_grad(ids[i])) {
        t.accumulate(ids[i], g.middleCols(offsets[i], t.cols(ids[i])));
      }
    }
  });
}

Var gather_rows(Var a, std::vector<Index> rows) {
  Tape& t = a.tape();
  for (Index r : rows) {
    require(r >= 0 && r < a.rows(), "gather_rows", "row " + std::to_string(r) + " out of " + shape_str(a));
  }
  Matrix v;
  if (!t.dry_run()) {
    v.resize(static_cast<Index>(rows.size()), a.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      v.row(static_cast<Index>(i)) = a.value().row(rows[i]);
    }
  }
  const auto ia = a.id();
  const Index total = a.rows();
  const auto n = static_cast<Index>(rows.size());
  return t.emit(n, a.cols(), std::move(v), any_grad({a}), [ia, total, rows = std::move(rows)](Tape& t, const Matrix& g) {
    Matrix full = Matrix::Zero(total, g.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      full.row(rows[i]) += g.row(static_cast<Index>(i));
    }
    t.accumulate(ia, full);
  });
}

Var scatter_rows(Var visible, std::vector<Index> indices, Var fill, Index nrows) {
  Tape& t = visible.tape();
  require(static_cast<Index>(indices.size()) == visible.rows(), "scatter_rows",
          std::to_string(indices.size()) + " indices for " + shape_str(visible));
  require(fill.rows() == 1 && fill.cols() == visible.cols(), "scatter_rows", "fill row " + shape_str(fill));
  std::vector<char> taken(static_cast<std::size_t>(nrows), 0);
  for (Index r : indices) {
    require(r >= 0 && r < nrows, "scatter_rows", "index " + std::to_string(r) + " out of " + std::to_string(nrows));
    require(!taken[static_cast<std::size_t>(r)], "scatter_rows", "duplicate index " + std::to_string(r));
    taken[static_cast<std::size_t>(r)] = 1;
  }
  Matrix v;
  if (!t.dry_run()) {
    v = fill.value().replicate(nrows, 1);
    for (std::size_t i = 0; i < indices.size(); ++i) {
      v.row(indices[i]) = visible.value().row(static_cast<Index>(i));
    }
  }
  const auto iv = visible.id();
  const auto iff = fill.id();
  return t.emit(nrows, visible.cols(), std::move(v), any_grad({visible, fill}),
                [iv, iff, indices = std::move(indices), taken = std::move(taken)](Tape& t, const Matrix& g) {
                  if (t.requires_grad(iv)) {
                    Matrix gv(static_cast<Index>(indices.size()), g.cols());
                    for (std::size_t i = 0; i < indices.size(); ++i) {
                      gv.row(static_cast<Index>(i)) = g.row(indices[i]);
                    }
                    t.accumulate(iv, gv);
                  }
                  if (t.requires_grad(iff)) {
                    Matrix gf = Matrix::Zero(1, g.cols());
                    for (Index r = 0; r < g.rows(); ++r) {
                      if (!taken[static_cast<std::size_t>(r)]) {
                        gf += g.row(r);
                      }
                    }
                    t.accumulate(iff, gf);
                  }
                });
}

Var mean_rows(Var a) {
  Tape& t = a.tape();
  require(a.rows() >= 1, "mean_rows", "empty input");
  Matrix v;
  if (!t.dry_run()) {
    v = a.value().colwise().mean();
  }
  const auto ia = a.id();
  const Index n = a.rows();
  return t.emit(1, a.cols(), std::move(v), any_grad({a}), [ia, n](Tape& t, const Matrix& g) {
    t.accumulate(ia, (g / static_cast<double>(n)).replicate(n, 1));
  });
}

Var dot(Var a, const Matrix& weights) {
  Tape& t = a.tape();
  require(weights.rows() == a.rows() && weights.cols() == a.cols(), "dot", shape_str(a) + " vs weights");
  Matrix v(1, 1);
  if (!t.dry_run()) {
    v(0, 0) = a.value().cwiseProduct(weights).sum();
  }
  const auto ia = a.id();
  return t.emit(1, 1, std::move(v), any_grad({a}), [ia, weights](Tape& t, const Matrix& g) {
    t.accumulate(ia, weights * g(0, 0));
  });
}

Var masked_mse(Var pred, const Matrix& target, std::vector<Index> rows) {
  Tape& t = pred.tape();
  require(target.rows() == pred.rows() && target.cols() == pred.cols(), "masked_mse",
          shape_str(pred) + " vs target " + std::to_string(target.rows()) + "x" + std::to_string(target.cols()));
  require(!rows.empty(), "masked_mse", "no masked positions");
  const double denom = static_cast<double>(rows.size()) * static_cast<double>(pred.cols());
  Matrix v(1, 1);
  if (!t.dry_run()) {
    double acc = 0.0;
    for (Index r : rows) {
      require(r >= 0 && r < pred.rows(), "masked_mse", "row out of range");
      acc += (pred.value().row(r) - target.row(r)).squaredNorm();
    }
    v(0, 0) = acc / denom;
  }
  const auto ip = pred.id();
  return t.emit(1, 1, std::move(v), any_grad({pred}), [ip, target, rows = std::move(rows), denom](Tape& t, const Matrix& g) {
    const Matrix& p = t.value(ip);
    Matrix gp = Matrix::Zero(p.rows(), p.cols());
    for (Index r : rows) {
      gp.row(r) = (2.0 * g(0, 0) / denom) * (p.row(r) - target.row(r));
    }
    t.accumulate(ip, gp);
  });
}

Var cross_entropy(Var logits, Index target) {
  Tape& t = logits.tape();
  require(logits.rows() == 1, "cross_entropy", "logits must be a row, got " + shape_str(logits));
  if (target < 0 || target >= logits.cols()) {
    throw std::out_of_range("cross_entropy: target " + std::to_string(target) + " outside [0, " +
                            std::to_string(logits.cols()) + ")");
  }
  Matrix v(1, 1);
  RowVector probs;
  if (!t.dry_run()) {
    const auto z = logits.value().row(0);
    const double m = z.maxCoeff();
    const double lse = m + std::log((z.array() - m).exp().sum());
    v(0, 0) = lse - z(target);
    probs = (z.array() - lse).exp();
  }
  const auto il = logits.id();
  return t.emit(1, 1, std::move(v), any_grad({logits}), [il, target, probs = std::move(probs)](Tape& t, const Matrix& g) {
    Matrix d = probs;
    d(0, target) -= 1.0;
    t.accumulate(il, d * g(0, 0));
  });
}

Var mse(Var pred, const Matrix& target) {
  Tape& t = pred.tape();
  require(target.rows() == pred.rows() && target.cols() == pred.cols(), "mse", "length mismatch");
  const auto k = static_cast<double>(pred.rows() * pred.cols());
  Matrix v(1, 1);
  if (!t.dry_run()) {
    v(0, 0) = (pred.value() - target).squaredNorm() / k;
  }
  const auto ip = pred.id();
  return t.emit(1, 1, std::move(v), any_grad({pred}), [ip, target, k](Tape& t, const Matrix& g) {
    t.accumulate(ip, (2.0 * g(0, 0) / k) * (t.value(ip) - target));
  });
}

}  // namespace svfap
