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

// Exact solver for the balanced transportation problem
//
//   min sum_ij T_ij c_ij   s.t.  sum_j T_ij = supply_i,  sum_i T_ij = demand_j,  T >= 0
//
// using the network simplex method on the bipartite transport graph
// (a.k.a. the MODI / u-v method). The basis is a spanning tree of n + m - 1
// cells, seeded by the northwest-corner rule. Entering cells are chosen by
// the most negative reduced cost; after a run of degenerate pivots the
// solver falls back to Bland's rule, which cannot cycle.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "iseeq/error.hpp"

namespace iseeq::transport {

struct Solution {
  double cost = 0.0;
  std::vector<double> flow;  // n x m, row-major
  std::size_t pivots = 0;
};

inline Solution solve(std::span<const double> supply, std::span<const double> demand,
                      std::span<const double> cost) {
  const std::size_t n = supply.size(), m = demand.size();
  if (n == 0 || m == 0) throw InvalidArgument("transport: empty supply or demand");
  if (cost.size() != n * m) throw InvalidArgument("transport: cost matrix shape mismatch");

  double total_a = 0.0, total_b = 0.0, max_cost = 0.0;
  for (double s : supply) {
    if (!(s >= 0.0) || !std::isfinite(s)) throw InvalidArgument("transport: negative or non-finite supply");
    total_a += s;
  }
  for (double d : demand) {
    if (!(d >= 0.0) || !std::isfinite(d)) throw InvalidArgument("transport: negative or non-finite demand");
    total_b += d;
  }
  for (double c : cost) {
    if (!std::isfinite(c)) throw InvalidArgument("transport: non-finite cost");
    max_cost = std::max(max_cost, std::abs(c));
  }
  if (total_a <= 0.0) throw InvalidArgument("transport: zero total mass");
  if (std::abs(total_a - total_b) > 1e-9 * std::max(total_a, total_b)) {
    throw InvalidArgument("transport: supply and demand totals differ");
  }

  const double scale_b = total_a / total_b;
  std::vector<double> ra(supply.begin(), supply.end());
  std::vector<double> rb(m);
  for (std::size_t j = 0; j < m; ++j) rb[j] = demand[j] * scale_b;

  Solution sol;
  sol.flow.assign(n * m, 0.0);
  std::vector<char> basic(n * m, 0);
  // Tree adjacency: node i < n is row i, node n + j is column j; entries are cell indices.
  std::vector<std::vector<std::size_t>> adj(n + m);

  auto add_basic = [&](std::size_t cell, double f) {
    basic[cell] = 1;
    sol.flow[cell] = f;
    adj[cell / m].push_back(cell);
    adj[n + cell % m].push_back(cell);
  };
  auto drop_basic = [&](std::size_t cell) {
    basic[cell] = 0;
    sol.flow[cell] = 0.0;
    for (std::size_t node : {cell / m, n + cell % m}) {
      auto& v = adj[node];
      v.erase(std::find(v.begin(), v.end(), cell));
    }
  };

  // Northwest corner: n + m - 1 cells, degenerate zeros included.
  {
    std::size_t i = 0, j = 0;
    while (true) {
      const double f = std::max(0.0, std::min(ra[i], rb[j]));
      add_basic(i * m + j, f);
      ra[i] -= f;
      rb[j] -= f;
      if (i == n - 1 && j == m - 1) break;
      if (i == n - 1) {
        ++j;
      } else if (j == m - 1) {
        ++i;
      } else if (ra[i] <= rb[j]) {
        ++i;
      } else {
        ++j;
      }
    }
  }

  const double tol = 1e-12 * (1.0 + max_cost);
  std::vector<double> u(n), v(m);
  std::vector<char> seen(n + m);
  std::vector<std::size_t> stack, parent_cell(n + m);
  std::size_t degenerate_run = 0;
  bool bland = false;
  const std::size_t max_pivots = 50 * n * m + 1000;

  for (;;) {
    // Potentials: u_i + v_j = c_ij on every basic cell.
    std::fill(seen.begin(), seen.end(), 0);
    u[0] = 0.0;
    seen[0] = 1;
    stack.assign(1, 0);
    while (!stack.empty()) {
      const std::size_t node = stack.back();
      stack.pop_back();
      for (std::size_t cell : adj[node]) {
        const std::size_t r = cell / m, c = cell % m;
        if (node < n) {
          if (seen[n + c]) continue;
          v[c] = cost[cell] - u[r];
          seen[n + c] = 1;
          stack.push_back(n + c);
        } else {
          if (seen[r]) continue;
          u[r] = cost[cell] - v[c];
          seen[r] = 1;
          stack.push_back(r);
        }
      }
    }

    std::size_t enter = n * m;
    double best = -tol;
    for (std::size_t cell = 0; cell < n * m; ++cell) {
      if (basic[cell]) continue;
      const double d = cost[cell] - u[cell / m] - v[cell % m];
      if (d < best) {
        best = d;
        enter = cell;
        if (bland) break;
      }
    }
    if (enter == n * m) break;
    if (++sol.pivots > max_pivots) throw InvariantError("transport: pivot limit exceeded");

    // Tree path from column q back to row p; alternate signs starting with '-'.
    const std::size_t p = enter / m, q = enter % m;
    std::fill(seen.begin(), seen.end(), 0);
    seen[n + q] = 1;
    stack.assign(1, n + q);
    while (!stack.empty() && !seen[p]) {
      const std::size_t node = stack.back();
      stack.pop_back();
      for (std::size_t cell : adj[node]) {
        const std::size_t other = node < n ? n + cell % m : cell / m;
        if (seen[other]) continue;
        seen[other] = 1;
        parent_cell[other] = cell;
        stack.push_back(other);
      }
    }
    if (!seen[p]) throw InvariantError("transport: basis is not a spanning tree");

    std::vector<std::size_t> path;  // cells from row p toward column q
    for (std::size_t node = p; node != n + q;) {
      const std::size_t cell = parent_cell[node];
      path.push_back(cell);
      node = node < n ? n + cell % m : cell / m;
    }
    // path.back() touches column q and gets '-'; signs alternate toward p.
    double theta = std::numeric_limits<double>::infinity();
    std::size_t leave = n * m;
    for (std::size_t k = 0; k < path.size(); ++k) {
      const bool minus = ((path.size() - 1 - k) % 2) == 0;
      if (!minus) continue;
      const std::size_t cell = path[k];
      const double f = sol.flow[cell];
      if (f < theta || (f == theta && cell < leave)) {
        theta = f;
        leave = cell;
      }
    }
    theta = std::max(0.0, theta);

    for (std::size_t k = 0; k < path.size(); ++k) {
      const bool minus = ((path.size() - 1 - k) % 2) == 0;
      double& f = sol.flow[path[k]];
      f = minus ? std::max(0.0, f - theta) : f + theta;
    }
    drop_basic(leave);
    add_basic(enter, theta);

    if (theta == 0.0) {
      if (++degenerate_run > n + m) bland = true;
    } else {
      degenerate_run = 0;
    }
  }

  sol.cost = 0.0;
  for (std::size_t cell = 0; cell < n * m; ++cell) {
    if (basic[cell]) sol.cost += sol.flow[cell] * cost[cell];
  }
  return sol;
}

}  // namespace iseeq::transport
