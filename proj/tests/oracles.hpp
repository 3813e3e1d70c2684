#pragma once

// Brute-force reference computations used only by tests. They deliberately
// avoid the library's cursors and enumerations.

#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

namespace oracle {

using Matrix = std::vector<std::vector<double>>;

/// Stationary vector by power iteration from the uniform vector.
inline std::vector<double> stationary_by_power(const Matrix& t, int iterations = 20000) {
  const std::size_t m = t.size();
  std::vector<double> pi(m, 1.0 / static_cast<double>(m));
  for (int it = 0; it < iterations; ++it) {
    std::vector<double> next(m, 0.0);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j) next[j] += pi[i] * t[i][j];
    pi = next;
  }
  return pi;
}

/// mu(u) for a labeled Markov chain by summing over every state path.
template <class Labels>
double markov_cylinder(const Matrix& t, const std::vector<double>& pi, const Labels& labels,
                       const std::vector<int>& u) {
  const std::size_t m = t.size();
  const std::size_t n = u.size();
  std::vector<std::size_t> path(n, 0);
  double total = 0.0;
  std::function<void(std::size_t, double)> walk = [&](std::size_t depth, double mass) {
    if (depth == n) {
      total += mass;
      return;
    }
    for (std::size_t s = 0; s < m; ++s) {
      if (static_cast<int>(labels[s]) != u[depth]) continue;
      const double step = depth == 0 ? pi[s] : t[path[depth - 1]][s];
      path[depth] = s;
      walk(depth + 1, mass * step);
    }
  };
  walk(0, 1.0);
  return total;
}

/// Fraction of midpoints of a uniform grid on [0,1) whose rotation itinerary
/// starts with u; error is at most (#cut points)/grid.
inline double rotation_cylinder_grid(double alpha, const std::vector<double>& cuts,
                                     const std::vector<int>& symbols, const std::vector<int>& u,
                                     std::size_t grid = 1u << 20) {
  auto symbol_of = [&](double x) {
    std::size_t k = 0;
    while (k + 1 < cuts.size() && x >= cuts[k + 1]) ++k;
    return symbols[k];
  };
  std::size_t hits = 0;
  for (std::size_t g = 0; g < grid; ++g) {
    double x = (static_cast<double>(g) + 0.5) / static_cast<double>(grid);
    bool ok = true;
    for (int a : u) {
      if (symbol_of(x) != a) {
        ok = false;
        break;
      }
      x += alpha;
      x -= std::floor(x);
    }
    hits += ok;
  }
  return static_cast<double>(hits) / static_cast<double>(grid);
}

/// -sum p log2 p evaluated term by term in long double.
inline double entropy_bits(const std::vector<double>& p) {
  long double h = 0;
  for (double x : p)
    if (x > 0) h -= static_cast<long double>(x) * std::log2(static_cast<long double>(x));
  return static_cast<double>(h);
}

}  // namespace oracle
