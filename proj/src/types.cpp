#include "mrpeval/types.hpp"

#include <algorithm>
#include <cmath>

namespace mrpeval {

StateSet::StateSet(int n, std::vector<int> indices) : n_(n), idx_(std::move(indices)) {
  if (n < 0) throw ConfigError("StateSet: negative size");
  std::sort(idx_.begin(), idx_.end());
  idx_.erase(std::unique(idx_.begin(), idx_.end()), idx_.end());
  for (int i : idx_) {
    if (i < 0 || i >= n) throw ConfigError("StateSet: index out of range");
  }
  mask_.assign(static_cast<size_t>(n), 0);
  for (int i : idx_) mask_[static_cast<size_t>(i)] = 1;
}

StateSet StateSet::interior(int n) {
  std::vector<int> idx;
  for (int i = 1; i + 1 < n; ++i) idx.push_back(i);
  return StateSet(n, std::move(idx));
}

void Mrp::validate() const {
  if (n <= 0) throw ConfigError("Mrp: empty state space");
  if (P.rows() != n || P.cols() != n) throw ConfigError("Mrp: P is not n x n");
  if (R.size() != n || mu.size() != n) throw ConfigError("Mrp: R or mu has wrong length");
  if (D.n() != n) throw ConfigError("Mrp: D indexes a different state space");
  if (D.size() == 0) throw ConfigError("Mrp: D is empty");
  if (D.size() == n) throw ConfigError("Mrp: D must leave at least one absorbing state");
  for (int i = 0; i < n; ++i) {
    double row = 0.0;
    for (int j = 0; j < n; ++j) {
      const double v = P(i, j);
      if (!(v >= 0.0)) throw ConfigError("Mrp: negative or NaN transition probability");
      row += v;
    }
    if (std::abs(row - 1.0) > 1e-12) throw ConfigError("Mrp: row sum off by more than 1e-12");
    if (!std::isfinite(R[i])) throw ConfigError("Mrp: non-finite reward");
  }
  double mass = 0.0;
  for (int i = 0; i < n; ++i) {
    const double v = mu[i];
    if (!(v >= 0.0)) throw ConfigError("Mrp: negative or NaN initial probability");
    if (v > 0.0 && !D.contains(i)) throw ConfigError("Mrp: mu puts mass outside D");
    mass += v;
  }
  if (std::abs(mass - 1.0) > 1e-12) throw ConfigError("Mrp: mu does not sum to 1");
}

StoppedKernel stopped_kernel(const Mrp& m) {
  StoppedKernel k;
  k.S = m.P;
  k.tau = 1;
  for (int i = 0; i < m.n; ++i) {
    if (!m.D.contains(i)) {
      k.S.row(i).setZero();
      k.S(i, i) = 1.0;
    }
  }
  return k;
}

Matrix kernel_power(const Matrix& S, int t) {
  if (t < 0) throw ConfigError("kernel_power: negative exponent");
  const auto n = S.rows();
  Matrix out = Matrix::Identity(n, n);
  for (int k = 0; k < t; ++k) out = out * S;
  return out;
}

Matrix mask_to_D(const Matrix& A, const StateSet& D) {
  Matrix B = A;
  for (int i = 0; i < B.rows(); ++i) {
    if (!D.contains(i)) {
      B.row(i).setZero();
      B.col(i).setZero();
    }
  }
  return B;
}

double kahan_sum_descending(std::vector<double> terms) {
  std::sort(terms.begin(), terms.end(),
            [](double a, double b) { return std::abs(a) > std::abs(b); });
  double sum = 0.0, comp = 0.0;
  for (double x : terms) {
    const double y = x - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
  return sum;
}

}  // namespace mrpeval
