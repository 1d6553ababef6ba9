// Copyright (c) 2026, SVFAP contributors
// SPDX-License-Identifier: Apache-2.0

#include "svfap/metrics.hpp"

#include <cmath>
#include <string>

namespace svfap {

namespace {

template <typename T>
void check_pair(std::span<const T> a, std::span<const T> b, const char* name) {
  if (a.size() != b.size()) {
    throw MetricError(std::string(name) + ": " + std::to_string(a.size()) + " predictions for " +
                      std::to_string(b.size()) + " labels");
  }
  if (a.empty()) {
    throw MetricError(std::string(name) + ": empty input");
  }
}

void check_classes(std::span<const int> preds, std::span<const int> labels, int k, const char* name) {
  check_pair(preds, labels, name);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= k || preds[i] < 0 || preds[i] >= k) {
      throw MetricError(std::string(name) + ": class index outside [0, " + std::to_string(k) + ")");
    }
  }
}

struct Moments {
  double mean_p = 0.0, mean_t = 0.0, var_p = 0.0, var_t = 0.0, cov = 0.0;
};

Moments moments(std::span<const double> p, std::span<const double> t) {
  const auto n = static_cast<double>(p.size());
  Moments m;
  for (std::size_t i = 0; i < p.size(); ++i) {
    m.mean_p += p[i];
    m.mean_t += t[i];
  }
  m.mean_p /= n;
  m.mean_t /= n;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double dp = p[i] - m.mean_p;
    const double dt = t[i] - m.mean_t;
    m.var_p += dp * dp;
    m.var_t += dt * dt;
    m.cov += dp * dt;
  }
  m.var_p /= n;
  m.var_t /= n;
  m.cov /= n;
  return m;
}

}  // namespace

double war(std::span<const int> preds, std::span<const int> labels) {
  check_pair(preds, labels, "war");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    hits += preds[i] == labels[i] ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(preds.size());
}

UarResult uar_detailed(std::span<const int> preds, std::span<const int> labels, int num_classes) {
  check_classes(preds, labels, num_classes, "uar");
  std::vector<std::size_t> support(static_cast<std::size_t>(num_classes), 0);
  std::vector<std::size_t> hits(static_cast<std::size_t>(num_classes), 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto c = static_cast<std::size_t>(labels[i]);
    ++support[c];
    hits[c] += preds[i] == labels[i] ? 1 : 0;
  }
  UarResult r;
  int used = 0;
  for (int c = 0; c < num_classes; ++c) {
    const auto i = static_cast<std::size_t>(c);
    if (support[i] == 0) {
      r.excluded.push_back(c);
      continue;
    }
    r.value += static_cast<double>(hits[i]) / static_cast<double>(support[i]);
    ++used;
  }
  r.value /= used;
  return r;
}

double uar(std::span<const int> preds, std::span<const int> labels, int num_classes) {
  return uar_detailed(preds, labels, num_classes).value;
}

double weighted_f1(std::span<const int> preds, std::span<const int> labels, int num_classes) {
  check_classes(preds, labels, num_classes, "weighted_f1");
  const auto k = static_cast<std::size_t>(num_classes);
  std::vector<std::size_t> tp(k, 0), predicted(k, 0), support(k, 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    ++support[static_cast<std::size_t>(labels[i])];
    ++predicted[static_cast<std::size_t>(preds[i])];
    if (preds[i] == labels[i]) {
      ++tp[static_cast<std::size_t>(labels[i])];
    }
  }
  double total = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    const std::size_t denom = predicted[c] + support[c];
    const double f1 = denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp[c]) / static_cast<double>(denom);
    total += f1 * static_cast<double>(support[c]);
  }
  return total / static_cast<double>(labels.size());
}

double pcc(std::span<const double> pred, std::span<const double> truth) {
  check_pair(pred, truth, "pcc");
  const Moments m = moments(pred, truth);
  if (m.var_p == 0.0 || m.var_t == 0.0) {
    throw MetricError("pcc: undefined for a constant sequence");
  }
  return m.cov / std::sqrt(m.var_p * m.var_t);
}

double ccc(std::span<const double> pred, std::span<const double> truth) {
  check_pair(pred, truth, "ccc");
  const Moments m = moments(pred, truth);
  const double dm = m.mean_p - m.mean_t;
  const double denom = m.var_p + m.var_t + dm * dm;
  if (denom == 0.0) {
    throw MetricError("ccc: undefined for equal constant sequences");
  }
  return 2.0 * m.cov / denom;
}

double acc_personality(std::span<const double> pred, std::span<const double> truth) {
  check_pair(pred, truth, "acc_personality");
  double mae = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    mae += std::abs(pred[i] - truth[i]);
  }
  return 1.0 - mae / static_cast<double>(pred.size());
}

}  // namespace svfap
