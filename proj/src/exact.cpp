#include "mrpeval/exact.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "mrpeval/chains.hpp"

namespace mrpeval {

const char* to_string(Quantity q) {
  switch (q) {
    case Quantity::mfpt: return "mfpt";
    case Quantity::committor: return "committor";
    default: return "general";
  }
}

namespace {

constexpr double kPivotThreshold = 1e-13;

Eigen::PartialPivLU<Matrix> lu_checked(const Matrix& A, const char* what) {
  Eigen::PartialPivLU<Matrix> lu(A);
  const double min_pivot = lu.matrixLU().diagonal().cwiseAbs().minCoeff();
  if (!(min_pivot >= kPivotThreshold)) {
    throw SingularSystemError(std::string(what) + ": pivot below 1e-13, system is singular");
  }
  return lu;
}

}  // namespace

Vector solve_checked(const Matrix& A, const Vector& b) {
  return lu_checked(A, "solve").solve(b);
}

Matrix invert_checked(const Matrix& A) {
  return lu_checked(A, "invert").inverse();
}

ValueFunction solve_value(const Mrp& m, int tau, Quantity q) {
  if (tau < 1) throw ConfigError("solve_value: tau must be positive");
  const Matrix S = stopped_kernel(m).S;
  const Matrix Stau = kernel_power(S, tau);
  const Matrix SD = mask_to_D(Stau, m.D);

  Vector r_d = Vector::Zero(m.n);
  Vector r_dc = Vector::Zero(m.n);
  for (int i = 0; i < m.n; ++i) {
    (m.D.contains(i) ? r_d[i] : r_dc[i]) = m.R[i];
  }

  Vector acc = r_d;
  Vector v = r_d;
  for (int t = 1; t < tau; ++t) {
    v = S * v;
    acc += v;
  }
  const Vector rhs = acc + (Stau - SD) * r_dc;
  const Matrix A = Matrix::Identity(m.n, m.n) - SD;

  ValueFunction out;
  out.u = solve_checked(A, rhs);
  out.quantity = q;
  out.tau_used = tau;
  if (q == Quantity::committor) {
    for (int i = 0; i < m.n; ++i) {
      if (out.u[i] < -1e-9 || out.u[i] > 1.0 + 1e-9) {
        throw NumericalError("solve_value: committor outside [0, 1]");
      }
    }
  }
  return out;
}

namespace {

std::vector<double> resistor_weights(const Vector& p) {
  std::vector<double> w(static_cast<size_t>(p.size()) - 1);
  for (size_t i = 0; i + 1 < static_cast<size_t>(p.size()); ++i) {
    w[i] = 1.0 / p[static_cast<Eigen::Index>(i)] + 1.0 / p[static_cast<Eigen::Index>(i) + 1];
  }
  return w;
}

}  // namespace

double mfpt_midpoint_closed_form(int n) {
  if (n < 5 || n % 2 == 0) throw ConfigError("mfpt_midpoint_closed_form: n must be odd and >= 5");
  const Vector p = invariant_distribution(n);
  const std::vector<double> w = resistor_weights(p);
  const int half = (n - 1) / 2;
  const double sum_all = kahan_sum_descending(w);
  const double sum_half = kahan_sum_descending({w.begin(), w.begin() + half});
  std::vector<double> ps;
  for (int l = 1; l <= half; ++l) ps.push_back(p[l]);
  const double sum_p = kahan_sum_descending(ps);
  return 2.0 / sum_all * sum_half * sum_half * sum_p;
}

double committor_u2_closed_form(int n) {
  if (n < 4) throw ConfigError("committor_u2_closed_form: n must be at least 4");
  const Vector p = invariant_distribution(n);
  const std::vector<double> w = resistor_weights(p);
  return w[0] / kahan_sum_descending(w);
}

namespace {

// Strong connectivity of the positive-entry digraph, by forward and reverse BFS.
bool strongly_connected(const Matrix& A) {
  const int d = static_cast<int>(A.rows());
  if (d == 0) return false;
  auto bfs = [&](bool reverse) {
    std::vector<char> seen(static_cast<size_t>(d), 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    int count = 1;
    while (!stack.empty()) {
      const int x = stack.back();
      stack.pop_back();
      for (int y = 0; y < d; ++y) {
        const double v = reverse ? A(y, x) : A(x, y);
        if (v > 0.0 && !seen[static_cast<size_t>(y)]) {
          seen[static_cast<size_t>(y)] = 1;
          ++count;
          stack.push_back(y);
        }
      }
    }
    return count == d;
  };
  return bfs(false) && bfs(true);
}

// Period of a strongly connected digraph: gcd of level[u] + 1 - level[v] over
// edges (u, v), with levels from a BFS rooted at node 0.
int digraph_period(const Matrix& A) {
  const int d = static_cast<int>(A.rows());
  std::vector<int> level(static_cast<size_t>(d), -1);
  std::vector<int> frontier{0};
  level[0] = 0;
  while (!frontier.empty()) {
    std::vector<int> next;
    for (int x : frontier) {
      for (int y = 0; y < d; ++y) {
        if (A(x, y) > 0.0 && level[static_cast<size_t>(y)] < 0) {
          level[static_cast<size_t>(y)] = level[static_cast<size_t>(x)] + 1;
          next.push_back(y);
        }
      }
    }
    frontier = std::move(next);
  }
  int g = 0;
  for (int x = 0; x < d; ++x) {
    for (int y = 0; y < d; ++y) {
      if (A(x, y) > 0.0) {
        g = std::gcd(g, level[static_cast<size_t>(x)] + 1 - level[static_cast<size_t>(y)]);
      }
    }
  }
  return g == 0 ? 1 : g;
}

}  // namespace

QuasiStationaryReport quasi_stationary_report(const Mrp& m, int tau) {
  if (tau < 1) throw ConfigError("quasi_stationary_report: tau must be positive");
  const std::vector<int>& didx = m.D.indices();
  const int d = static_cast<int>(didx.size());
  const Matrix S = stopped_kernel(m).S;
  Matrix Shat(d, d);
  for (int a = 0; a < d; ++a) {
    for (int b = 0; b < d; ++b) Shat(a, b) = S(didx[static_cast<size_t>(a)], didx[static_cast<size_t>(b)]);
  }
  if (!strongly_connected(Shat)) {
    throw NumericalError("quasi_stationary_report: restricted kernel is not irreducible");
  }

  QuasiStationaryReport rep;
  rep.tau = tau;
  rep.period = digraph_period(Shat);

  // Power iteration on the transposed restricted block. The half shift
  // (I + Shat)/2 leaves the eigenvector unchanged, maps the leading eigenvalue
  // to (1 + lambda)/2, and converges for periodic irreducible blocks as well.
  constexpr int kMaxIters = 1000000;
  constexpr double kTol = 1e-12;
  Vector v = Vector::Constant(d, 1.0 / d);
  double lam_b = 0.0;
  bool converged = false;
  for (int it = 0; it < kMaxIters; ++it) {
    Vector w = 0.5 * (v + Shat.transpose() * v);
    lam_b = w.sum();
    w /= lam_b;
    const double delta = (w - v).cwiseAbs().maxCoeff();
    v = std::move(w);
    rep.iterations = it + 1;
    if (delta < kTol) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    throw ConvergenceError("quasi_stationary_report: power iteration did not converge");
  }
  rep.lambda_max = 2.0 * lam_b - 1.0;
  rep.residual = (v.transpose() * Shat - rep.lambda_max * v.transpose()).cwiseAbs().maxCoeff();
  if (!(rep.residual < 1e-10)) {
    throw ConvergenceError("quasi_stationary_report: eigenvector residual above 1e-10");
  }

  rep.nu = Vector::Zero(m.n);
  for (int a = 0; a < d; ++a) rep.nu[didx[static_cast<size_t>(a)]] = v[a];

  const Vector u_mfpt = solve_value(with_mfpt_reward(m), 1, Quantity::mfpt).u;
  rep.e_nu_t = 0.0;
  for (int i : didx) rep.e_nu_t += rep.nu[i] * u_mfpt[i];

  const Matrix Stau = kernel_power(S, tau);
  const Matrix Minv = invert_checked(Matrix::Identity(m.n, m.n) - mask_to_D(Stau, m.D));
  rep.resolvent_inf_norm = Minv.cwiseAbs().rowwise().sum().maxCoeff();
  rep.escape_bound_lhs = rep.resolvent_inf_norm;
  rep.escape_bound_rhs = rep.e_nu_t / tau;
  return rep;
}

double spectral_gap_bound(int n) {
  ChainSpec spec;
  spec.family = Family::bistable;
  spec.n = n;
  spec.laziness_denominator = 2.0;
  const Mrp m = build_chain(spec);
  const Vector p = invariant_distribution(n);
  const int d = n - 2;
  Matrix A(d, d);
  for (int a = 0; a < d; ++a) {
    for (int b = 0; b < d; ++b) {
      A(a, b) = std::sqrt(p[a + 1]) * m.P(a + 1, b + 1) / std::sqrt(p[b + 1]);
    }
  }
  const double asym = (A - A.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12) {
    throw NumericalError("spectral_gap_bound: symmetrization failed; detailed balance violated");
  }

  // Shifted power iteration: the dominant eigenvalue of cI - A is c - lambda_min.
  const double c = 1.0 + A.cwiseAbs().rowwise().sum().maxCoeff();
  const Matrix B = c * Matrix::Identity(d, d) - A;
  Vector v(d);
  for (int i = 0; i < d; ++i) v[i] = (i % 2 == 0) ? 1.0 : -1.0;
  v /= v.norm();
  constexpr int kMaxIters = 1000000;
  constexpr double kTol = 1e-10;
  double lam = 0.0, lam_old = std::numeric_limits<double>::infinity();
  bool converged = false;
  for (int it = 0; it < kMaxIters; ++it) {
    const Vector w = B * v;
    lam = v.dot(w);
    v = w / w.norm();
    if (std::abs(lam - lam_old) < kTol) {
      converged = true;
      break;
    }
    lam_old = lam;
  }
  if (!converged) {
    throw ConvergenceError("spectral_gap_bound: power iteration did not converge");
  }
  return 1.0 - (c - lam);
}

Vector mc_relative_avar(const Mrp& m) {
  if (m.R.cwiseAbs().maxCoeff() == 0.0) return Vector::Zero(m.n);
  const Vector u = solve_value(m, 1).u;
  const Matrix S = stopped_kernel(m).S;
  const Matrix SD = mask_to_D(S, m.D);
  Vector rhs(m.n);
  Vector r2_dc = Vector::Zero(m.n);
  for (int i = 0; i < m.n; ++i) {
    if (!m.D.contains(i)) r2_dc[i] = m.R[i] * m.R[i];
  }
  for (int i = 0; i < m.n; ++i) {
    if (m.D.contains(i)) {
      rhs[i] = m.R[i] * m.R[i] + 2.0 * m.R[i] * (u[i] - m.R[i]);
    } else {
      rhs[i] = m.R[i] * m.R[i];
    }
  }
  rhs += (S - SD) * r2_dc;
  for (int i = 0; i < m.n; ++i) {
    if (!m.D.contains(i)) rhs[i] = m.R[i] * m.R[i];
  }
  const Vector w = solve_checked(Matrix::Identity(m.n, m.n) - SD, rhs);

  Vector out = Vector::Zero(m.n);
  for (int i : m.D.indices()) {
    if (u[i] == 0.0) {
      throw NumericalError("mc_relative_avar: u(i) = 0 with nonzero reward");
    }
    out[i] = (w[i] - u[i] * u[i]) / (m.mu[i] * u[i] * u[i]);
  }
  return out;
}

}  // namespace mrpeval
