// Copyright (c) 2026, SVFAP contributors
// SPDX-License-Identifier: Apache-2.0
//
// Central finite-difference checks for tape gradients.

#pragma once

#include "svfap/autograd.hpp"
#include "svfap/params.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

namespace svfap::testing {

inline constexpr double kFdStep = 1e-4;

/// ‖a − n‖ / max(‖a‖, ‖n‖), or 0 when both vanish.
inline double relative_error(const Matrix& analytic, const Matrix& numeric) {
  const double scale = std::max(analytic.norm(), numeric.norm());
  return scale == 0.0 ? 0.0 : (analytic - numeric).norm() / scale;
}

struct GradReport {
  double worst = 0.0;
  std::string where;
};

using InputLoss = std::function<Var(Tape&, const std::vector<Var>&)>;

/// Checks d loss / d input for every entry of every input matrix.
inline GradReport check_input_gradients(const InputLoss& f, const std::vector<Matrix>& inputs) {
  std::vector<Matrix> analytic;
  {
    Tape tape;
    std::vector<Var> vars;
    for (const Matrix& m : inputs) {
      vars.push_back(tape.input(m, true));
    }
    tape.backward(f(tape, vars));
    for (std::size_t i = 0; i < vars.size(); ++i) {
      const Matrix& g = vars[i].grad();
      analytic.push_back(g.size() == 0 ? Matrix::Zero(inputs[i].rows(), inputs[i].cols()) : g);
    }
  }
  auto eval = [&](const std::vector<Matrix>& xs) {
    Tape tape;
    std::vector<Var> vars;
    for (const Matrix& m : xs) {
      vars.push_back(tape.input(m, false));
    }
    return f(tape, vars).value()(0, 0);
  };
  GradReport report;
  std::vector<Matrix> xs = inputs;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    Matrix numeric(xs[i].rows(), xs[i].cols());
    for (Index j = 0; j < xs[i].size(); ++j) {
      const double keep = xs[i].data()[j];
      xs[i].data()[j] = keep + kFdStep;
      const double up = eval(xs);
      xs[i].data()[j] = keep - kFdStep;
      const double down = eval(xs);
      xs[i].data()[j] = keep;
      numeric.data()[j] = (up - down) / (2.0 * kFdStep);
    }
    const double err = relative_error(analytic[i], numeric);
    if (err >= report.worst) {
      report.worst = err;
      report.where = "input " + std::to_string(i);
    }
  }
  return report;
}

using ParamLoss = std::function<Var(Bindings&)>;

/// Gradient norms below this fraction of max(1, |loss|) are at the level of
/// evaluation roundoff divided by the step, and are compared against it.
inline constexpr double kParamNoiseFloor = 1e-6;

/// Checks d loss / d param for up to `per_tensor` entries of each tensor
/// (evenly spaced), or all entries when per_tensor <= 0. Uses the
/// fourth-order stencil, since deep stacks have enough curvature to make
/// plain central differences miss 1e-5 at this step.
inline GradReport check_param_gradients(ParamStore& store, const ParamLoss& f, int per_tensor = 0) {
  store.zero_grad();
  for (auto& [name, p] : store.entries()) {
    p.grad = Matrix::Zero(p.rows, p.cols);
  }
  double loss = 0.0;
  {
    Tape tape;
    Bindings b(tape, store);
    const Var l = f(b);
    loss = l.value()(0, 0);
    tape.backward(l);
  }
  auto eval = [&] {
    Tape tape;
    Bindings b(tape, store);
    return f(b).value()(0, 0);
  };
  GradReport report;
  for (auto& [name, p] : store.entries()) {
    const Index n = p.value.size();
    const Index picks = per_tensor <= 0 ? n : std::min<Index>(n, per_tensor);
    std::vector<double> a;
    std::vector<double> num;
    for (Index k = 0; k < picks; ++k) {
      const Index j = picks == n ? k : (k * n) / picks;
      const double keep = p.value.data()[j];
      auto at = [&](double offset) {
        p.value.data()[j] = keep + offset;
        return eval();
      };
      const double d = (8.0 * (at(kFdStep) - at(-kFdStep)) - (at(2.0 * kFdStep) - at(-2.0 * kFdStep))) /
                       (12.0 * kFdStep);
      p.value.data()[j] = keep;
      a.push_back(p.grad.data()[j]);
      num.push_back(d);
    }
    const auto len = static_cast<Index>(a.size());
    const Eigen::Map<Matrix> av(a.data(), 1, len);
    const Eigen::Map<Matrix> nv(num.data(), 1, len);
    const double scale = std::max({av.norm(), nv.norm(), kParamNoiseFloor * std::max(1.0, std::abs(loss))});
    const double err = (av - nv).norm() / scale;
    if (err >= report.worst) {
      report.worst = err;
      report.where = name;
    }
  }
  return report;
}

}  // namespace svfap::testing
