#pragma once

#include <cmath>
#include <vector>

#include "mrpeval/chains.hpp"
#include "mrpeval/types.hpp"

namespace testutil {

using mrpeval::Matrix;
using mrpeval::Mrp;
using mrpeval::StateSet;
using mrpeval::Vector;

// Symmetric unit random walk on {0,...,n-1} with absorbing endpoints and the
// interior observed. Closed forms: MFPT u(i) = i(n-1-i), committor u(i) =
// i/(n-1) (0-based).
inline Mrp unit_walk(int n) {
  Mrp m;
  m.n = n;
  m.P = Matrix::Zero(n, n);
  for (int i = 1; i + 1 < n; ++i) {
    m.P(i, i - 1) = 0.5;
    m.P(i, i + 1) = 0.5;
  }
  m.P(0, 0) = 1.0;
  m.P(n - 1, n - 1) = 1.0;
  m.R = Vector::Zero(n);
  m.D = StateSet::interior(n);
  m.mu = Vector::Zero(n);
  for (int i : m.D.indices()) m.mu[i] = 1.0 / m.D.size();
  m.validate();
  return m;
}

// Four-state hand oracle: two interior states, everything computable by hand.
inline Mrp w4() { return unit_walk(4); }

inline Mrp w4_mfpt() { return mrpeval::with_mfpt_reward(w4()); }
inline Mrp w4_committor() { return mrpeval::with_committor_reward(w4()); }

inline double mfpt_walk(int n, int i) { return static_cast<double>(i) * (n - 1 - i); }
inline double committor_walk(int n, int i) { return static_cast<double>(i) / (n - 1); }

inline double rel_diff(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

inline double max_abs_diff(const Vector& a, const Vector& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

}  // namespace testutil
