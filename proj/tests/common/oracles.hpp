#pragma once

// Independent reference computations shared by the unit tests and the
// acceptance binary. Nothing here calls the routine it is used to check.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "pacl2o/algorithms.hpp"

namespace pacl2o::oracle {

inline double rel_err(const Vec& got, const Vec& want, double floor = 1e-12) {
  return (got - want).norm() / std::max({got.norm(), want.norm(), floor});
}

// Random point and momentum around the origin.
inline IterState random_state(Index n, Rng& rng, double scale = 2.0) {
  std::normal_distribution<double> n01(0.0, scale);
  IterState s;
  s.x.resize(n);
  s.x_prev.resize(n);
  for (auto& v : s.x) v = n01(rng);
  for (auto& v : s.x_prev) v = n01(rng);
  return s;
}

inline double onestep_ratio(const LearnedRule& proto, const Vec& alpha, const Problem& p, const IterState& s) {
  auto rule = proto.clone();
  rule->set_parameters(alpha);
  return p.loss(rule->step(s, p).x) / p.loss(s.x);
}

struct HypergradCheck {
  double rel = 0.0;
  double grad_norm = 0.0;
};

// Central differences of the one-step loss ratio. When `coords` is empty every
// parameter is differenced; otherwise only the listed coordinates, plus
// `directions` random directional derivatives over the full vector.
inline HypergradCheck hypergradient_check(const LearnedRule& rule, const Problem& p, const IterState& s,
                                          const Vec& analytic, double h, const std::vector<Index>& coords,
                                          int directions, Rng& rng) {
  const Vec alpha = rule.parameters();
  auto f = [&](const Vec& a) { return onestep_ratio(rule, a, p, s); };
  std::vector<double> got, want;
  auto central = [&](const Vec& dir) {
    return (f(alpha + h * dir) - f(alpha - h * dir)) / (2.0 * h);
  };
  if (coords.empty()) {
    for (Index i = 0; i < alpha.size(); ++i) {
      got.push_back(analytic[i]);
      want.push_back(central(Vec::Unit(alpha.size(), i)));
    }
  } else {
    for (Index i : coords) {
      got.push_back(analytic[i]);
      want.push_back(central(Vec::Unit(alpha.size(), i)));
    }
    std::normal_distribution<double> n01(0.0, 1.0);
    for (int d = 0; d < directions; ++d) {
      Vec dir(alpha.size());
      for (auto& v : dir) v = n01(rng);
      dir.normalize();
      got.push_back(analytic.dot(dir));
      want.push_back(central(dir));
    }
  }
  const Vec g = Eigen::Map<Vec>(got.data(), static_cast<Index>(got.size()));
  const Vec w = Eigen::Map<Vec>(want.data(), static_cast<Index>(want.size()));
  return {rel_err(g, w), g.norm()};
}

// log sum_i p_i e^{f_i} evaluated directly in long double.
inline long double log_mgf(const std::vector<double>& p, const std::vector<double>& f) {
  long double m = *std::max_element(f.begin(), f.end());
  long double acc = 0.0L;
  for (std::size_t i = 0; i < p.size(); ++i) acc += p[i] * std::exp(static_cast<long double>(f[i]) - m);
  return m + std::log(acc);
}

// Q[f] - KL(Q || P) for explicit weight vectors.
inline long double dv_value(const std::vector<double>& q, const std::vector<double>& p, const std::vector<double>& f) {
  long double v = 0.0L;
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (q[i] <= 0.0) continue;
    v += q[i] * (f[i] - std::log(static_cast<long double>(q[i]) / p[i]));
  }
  return v;
}

// Enumerates the simplex on a grid of step 1/steps in `dim` coordinates.
template <class Fn>
void for_each_simplex_point(int dim, int steps, Fn&& fn) {
  std::vector<int> c(dim, 0);
  std::vector<double> q(dim);
  auto rec = [&](auto&& self, int i, int left) -> void {
    if (i == dim - 1) {
      c[i] = left;
      for (int k = 0; k < dim; ++k) q[k] = static_cast<double>(c[k]) / steps;
      fn(q);
      return;
    }
    for (int v = 0; v <= left; ++v) {
      c[i] = v;
      self(self, i + 1, left - v);
    }
  };
  rec(rec, 0, steps);
}

// Smallest n with q_hi^(1/(n+1)) - q_lo^(1/(n+1)) < tol, the stopping time of
// the sequential estimator on an all-ones stream (Beta(n+1, 1) quantile is q^(1/(n+1))).
inline int all_ones_stopping_time(double q_lo, double q_hi, double tol) {
  for (int n = 0;; ++n) {
    const double e = 1.0 / (n + 1.0);
    if (std::pow(q_hi, e) - std::pow(q_lo, e) < tol) return n;
  }
}

}  // namespace pacl2o::oracle
