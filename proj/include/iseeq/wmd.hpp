// Copyright 2026 The iseeq Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#pragma once

// Word Mover's Distance between token documents, its relaxed lower bound,
// and the greedy per-token cosine match used by the question reward.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "iseeq/embed_io.hpp"
#include "iseeq/error.hpp"
#include "iseeq/transport.hpp"

namespace iseeq {

// Pairwise Euclidean distances, float64, row-major n x m.
struct CostMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> costs;

  double at(std::size_t i, std::size_t j) const { return costs[i * cols + j]; }
};

namespace detail {

inline void check_pair(const TokenDoc& a, const TokenDoc& b) {
  if (a.size() == 0 || b.size() == 0) throw DataError("WMD needs non-empty documents");
  if (a.dim != b.dim) {
    throw InvalidArgument("embedding dimension mismatch: " + std::to_string(a.dim) + " vs " +
                          std::to_string(b.dim));
  }
}

}  // namespace detail

inline CostMatrix cost_matrix(const TokenDoc& a, const TokenDoc& b) {
  detail::check_pair(a, b);
  CostMatrix cm{a.size(), b.size(), std::vector<double>(a.size() * b.size())};
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto x = a.row(i);
    for (std::size_t j = 0; j < b.size(); ++j) {
      const auto y = b.row(j);
      double ss = 0.0;
      for (std::size_t k = 0; k < a.dim; ++k) {
        const double d = static_cast<double>(x[k]) - y[k];
        ss += d * d;
      }
      cm.costs[i * cm.cols + j] = std::sqrt(ss);
    }
  }
  return cm;
}

namespace detail {

inline double relaxed_bound(const CostMatrix& cm, const TokenDoc& a, const TokenDoc& b) {
  double l1 = 0.0, l2 = 0.0;
  for (std::size_t i = 0; i < cm.rows; ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < cm.cols; ++j) best = std::min(best, cm.at(i, j));
    l1 += a.weights[i] * best;
  }
  for (std::size_t j = 0; j < cm.cols; ++j) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < cm.rows; ++i) best = std::min(best, cm.at(i, j));
    l2 += b.weights[j] * best;
  }
  return std::max(l1, l2);
}

}  // namespace detail

// Optimal transport cost between the nBOW distributions of `a` and `b`.
// When the relaxation is tight (one side a single token) the solver's sum can
// land a few ulps below it; such rounding-level gaps are lifted to the bound.
inline double wmd_exact(const TokenDoc& a, const TokenDoc& b) {
  const CostMatrix cm = cost_matrix(a, b);
  const double cost = transport::solve(a.weights, b.weights, cm.costs).cost;
  const double bound = detail::relaxed_bound(cm, a, b);
  if (bound > cost && bound - cost <= 1e-12 * std::max(1.0, bound)) return bound;
  return cost;
}

// Relaxed WMD: the larger of the two one-sided relaxations, each of which
// ships every unit of mass to its nearest counterpart. Never exceeds
// wmd_exact.
inline double wmd_relaxed(const TokenDoc& a, const TokenDoc& b) {
  return detail::relaxed_bound(cost_matrix(a, b), a, b);
}

// For each token of `a`, the best cosine against any token of `b`, averaged
// over a's token occurrences (nBOW weights). Zero-norm vectors score 0.
// Result lies in [-1, 1].
inline double soft_match(const TokenDoc& a, const TokenDoc& b) {
  detail::check_pair(a, b);
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < b.size(); ++j) best = std::max(best, cosine(a.row(i), b.row(j)));
    total += a.weights[i] * best;
  }
  return std::clamp(total, -1.0, 1.0);
}

}  // namespace iseeq
