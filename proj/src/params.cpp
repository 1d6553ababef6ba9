// Copyright (c) 2026, SVFAP contributors
// SPDX-License-Identifier: Apache-2.0

#include "svfap/params.hpp"

#include <stdexcept>

namespace svfap {

Param& ParamStore::create(const std::string& name, Index rows, Index cols, Init init, Rng& rng) {
  if (params_.count(name) != 0) {
    throw std::logic_error("duplicate parameter: " + name);
  }
  Param p;
  p.rows = rows;
  p.cols = cols;
  p.decay = rows > 1;
  if (!shape_only_) {
    switch (init) {
      case Init::kXavier:
        p.value = xavier_uniform(rows, cols, rng);
        break;
      case Init::kTruncNormal:
        p.value = trunc_normal(rows, cols, 0.02, rng);
        break;
      case Init::kZeros:
        p.value = Matrix::Zero(rows, cols);
        break;
      case Init::kOnes:
        p.value = Matrix::Ones(rows, cols);
        break;
    }
  }
  return params_.emplace(name, std::move(p)).first->second;
}

Param& ParamStore::at(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) {
    throw std::out_of_range("unknown parameter: " + name);
  }
  return it->second;
}

const Param& ParamStore::at(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) {
    throw std::out_of_range("unknown parameter: " + name);
  }
  return it->second;
}

std::size_t ParamStore::count(const std::string& prefix) const {
  std::size_t total = 0;
  for (const auto& [name, p] : params_) {
    if (name.compare(0, prefix.size(), prefix) == 0) {
      total += p.size();
    }
  }
  return total;
}

void ParamStore::zero_grad() {
  for (auto& [name, p] : params_) {
    if (p.grad.size() != 0) {
      p.grad.setZero();
    }
  }
}

}  // namespace svfap
