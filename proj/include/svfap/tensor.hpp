// Copyright (c) 2026, SVFAP contributors
// SPDX-License-Identifier: Apache-2.0
//
// Dense matrix aliases and the project-wide pseudo-random generator.

#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace svfap {

using Index = Eigen::Index;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::Matrix<double, 1, Eigen::Dynamic>;

/// Thrown when operand shapes disagree with an operation's contract.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Seedable generator used everywhere randomness enters the pipeline.
///
/// Draws are derived directly from the 64-bit Mersenne Twister output rather
/// than from the <random> distributions, whose algorithms are unspecified by
/// the standard. The full engine state round-trips through state()/restore(),
/// which is what checkpoints store.
class Rng {
 public:
  static constexpr const char* kName = "mt19937_64";

  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Standard normal via Box-Muller; consumes exactly two draws, no caching.
  double normal();

  /// Uniform integer in [0, n), rejection-sampled so it is unbiased.
  std::uint64_t index(std::uint64_t n);

  /// Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[index(i)]);
    }
  }

  std::string state() const;
  void restore(const std::string& state);

  bool operator==(const Rng& other) const { return engine_ == other.engine_; }

 private:
  std::mt19937_64 engine_;
};

/// Matrix of i.i.d. N(0, std^2) entries.
Matrix random_normal(Index rows, Index cols, double std, Rng& rng);

/// Truncated-at-2σ normal init, the usual ViT weight initializer.
Matrix trunc_normal(Index rows, Index cols, double std, Rng& rng);

/// Xavier/Glorot uniform init for a fan_in x fan_out linear map.
Matrix xavier_uniform(Index fan_in, Index fan_out, Rng& rng);

bool all_finite(const Matrix& m);

}  // namespace svfap
