// Copyright (c) 2026, SVFAP contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <stdexcept>
#include <vector>

namespace svfap {

class MetricError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Fraction of exact matches.
double war(std::span<const int> preds, std::span<const int> labels);

struct UarResult {
  double value = 0.0;
  /// Classes in [0, K) with no labelled sample, left out of the mean.
  std::vector<int> excluded;
};

/// Mean per-class recall over classes that occur in `labels`.
UarResult uar_detailed(std::span<const int> preds, std::span<const int> labels, int num_classes);
double uar(std::span<const int> preds, std::span<const int> labels, int num_classes);

/// Support-weighted mean of per-class F1.
double weighted_f1(std::span<const int> preds, std::span<const int> labels, int num_classes);

// Population moments throughout.
double pcc(std::span<const double> pred, std::span<const double> truth);
double ccc(std::span<const double> pred, std::span<const double> truth);
/// 1 − mean absolute error.
double acc_personality(std::span<const double> pred, std::span<const double> truth);

}  // namespace svfap
