#include "mrpeval/variance.hpp"

#include <cmath>
#include <limits>

namespace mrpeval {

VarianceReport sigma_asymptotic(const Mrp& m, int tau) {
  if (tau < 1) throw ConfigError("sigma_asymptotic: tau must be positive");
  for (int k : m.D.indices()) {
    if (m.mu[k] <= 0.0) {
      throw NumericalError("sigma_asymptotic: mu vanishes on a state inside D");
    }
  }
  const Vector u = solve_value(m, tau).u;
  const Matrix S = stopped_kernel(m).S;
  const Matrix Stau = kernel_power(S, tau);
  const Matrix Minv = invert_checked(Matrix::Identity(m.n, m.n) - mask_to_D(Stau, m.D));

  Vector r_d = Vector::Zero(m.n);
  for (int i : m.D.indices()) r_d[i] = m.R[i];

  // Backward first/second moment recursion for
  // Y_t = sum_{s=t}^{tau-1} R_D(X_{s^T}) + u(X_{tau^T}) under the stopped chain:
  // f_t = E[Y_t | X_t], g_t = E[Y_t^2 | X_t]; f_0 = u by the fixed point identity.
  Vector f = u;
  Vector g = u.cwiseProduct(u);
  for (int t = tau - 1; t >= 0; --t) {
    const Vector sf = S * f;
    g = r_d.cwiseProduct(r_d) + 2.0 * r_d.cwiseProduct(sf) + S * g;
    f = r_d + sf;
  }

  VarianceReport rep;
  rep.tau = tau;
  rep.inner_expectation = Vector::Zero(m.n);
  for (int k : m.D.indices()) rep.inner_expectation[k] = g[k] - u[k] * u[k];

  rep.sigma_sq = Vector::Zero(m.n);
  rep.rel_avar = Vector::Zero(m.n);
  for (int i : m.D.indices()) {
    double acc = 0.0;
    for (int k : m.D.indices()) {
      acc += Minv(i, k) * Minv(i, k) * rep.inner_expectation[k] / m.mu[k];
    }
    rep.sigma_sq[i] = acc;
    if (u[i] == 0.0) {
      rep.rel_avar[i] = acc == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    } else {
      rep.rel_avar[i] = acc / (u[i] * u[i]);
    }
  }
  return rep;
}

QMatrix q_tau(const Mrp& m, int tau) {
  if (tau < 1) throw ConfigError("q_tau: tau must be positive");
  const Matrix Stau = kernel_power(stopped_kernel(m).S, tau);
  QMatrix qm;
  qm.tau = tau;
  qm.Q = Matrix::Zero(m.n, m.n);
  for (int l = 0; l < m.n; ++l) {
    std::vector<int> T;
    for (int k : m.D.indices()) {
      if (k != l) T.push_back(k);
    }
    const int d = static_cast<int>(T.size());
    if (d == 0) continue;
    Matrix W(d, d);
    Vector b(d);
    for (int a = 0; a < d; ++a) {
      for (int bb = 0; bb < d; ++bb) W(a, bb) = Stau(T[static_cast<size_t>(a)], T[static_cast<size_t>(bb)]);
      b[a] = Stau(T[static_cast<size_t>(a)], l);
    }
    const Matrix N = invert_checked(Matrix::Identity(d, d) - W);
    const Vector h = N * b;
    for (int a = 0; a < d; ++a) {
      qm.Q(T[static_cast<size_t>(a)], l) = h[a] / N(a, a);
    }
  }
  return qm;
}

double q_tau_pair(const Mrp& m, int tau, int k, int l) {
  if (tau < 1) throw ConfigError("q_tau_pair: tau must be positive");
  if (!m.D.contains(k)) throw ConfigError("q_tau_pair: k must lie in D");
  if (l == k || l < 0 || l >= m.n) throw ConfigError("q_tau_pair: l must differ from k");
  const Matrix Stau = kernel_power(stopped_kernel(m).S, tau);
  std::vector<int> T;
  for (int i : m.D.indices()) {
    if (i != k && i != l) T.push_back(i);
  }
  const int d = static_cast<int>(T.size());
  // phi(j): probability of reaching l before k (and before the rest of D^c)
  // from j in D \ {k, l}; one explicit first step leaves k.
  Vector phi = Vector::Zero(std::max(d, 1));
  if (d > 0) {
    Matrix W(d, d);
    Vector b(d);
    for (int a = 0; a < d; ++a) {
      for (int bb = 0; bb < d; ++bb) W(a, bb) = Stau(T[static_cast<size_t>(a)], T[static_cast<size_t>(bb)]);
      b[a] = Stau(T[static_cast<size_t>(a)], l);
    }
    phi = solve_checked(Matrix::Identity(d, d) - W, b);
  }
  double q = Stau(k, l);
  for (int a = 0; a < d; ++a) q += Stau(k, T[static_cast<size_t>(a)]) * phi[a];
  return q;
}

double avar_bound(const Mrp& m, int tau, bool zero_reward_on_d) {
  if (tau < 1) throw ConfigError("avar_bound: tau must be positive");
  if (zero_reward_on_d) {
    for (int i : m.D.indices()) {
      if (m.R[i] != 0.0) {
        throw ConfigError("avar_bound: zero_reward_on_d set but the reward is nonzero on D");
      }
    }
  }
  const Matrix S = stopped_kernel(m).S;
  const Matrix Stau = kernel_power(S, tau);
  Matrix num;
  if (zero_reward_on_d) {
    num = Stau;
  } else {
    num = Matrix::Zero(m.n, m.n);
    Matrix st = Matrix::Identity(m.n, m.n);
    for (int t = 1; t <= tau; ++t) {
      st = st * S;
      num += st;
    }
  }
  const Matrix Q = q_tau(m, tau).Q;

  double total = 0.0;
  for (int k : m.D.indices()) {
    for (int l = 0; l < m.n; ++l) {
      if (l == k || num(k, l) <= 0.0) continue;
      if (Q(k, l) <= 0.0 || m.mu[k] <= 0.0) {
        return std::numeric_limits<double>::infinity();
      }
      total += num(k, l) / (m.mu[k] * Q(k, l) * Q(k, l));
    }
  }
  return total;
}

MinorizingGraph minorizing_graph(const Matrix& s_tau, double c, const StateSet& D) {
  const int n = static_cast<int>(s_tau.rows());
  MinorizingGraph g;
  g.c = c;
  g.adjacency.assign(static_cast<size_t>(n), {});
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i != j && s_tau(i, j) >= c) g.adjacency[static_cast<size_t>(i)].push_back(j);
    }
  }
  g.distances = Eigen::MatrixXi::Constant(n, n, -1);
  for (int i = 0; i < n; ++i) {
    g.distances(i, i) = 0;
    std::vector<int> frontier{i};
    int depth = 0;
    while (!frontier.empty()) {
      ++depth;
      std::vector<int> next;
      for (int x : frontier) {
        for (int y : g.adjacency[static_cast<size_t>(x)]) {
          if (g.distances(i, y) < 0) {
            g.distances(i, y) = depth;
            next.push_back(y);
          }
        }
      }
      frontier = std::move(next);
    }
  }
  g.connected = true;
  for (int i : D.indices()) {
    for (int j = 0; j < n; ++j) {
      if (j != i && g.distances(i, j) < 0) {
        g.connected = false;
        break;
      }
    }
    if (!g.connected) break;
  }
  return g;
}

AssumptionReport fit_assumption_constants(const Mrp& m, int tau, double c, double beta) {
  if (tau < 1) throw ConfigError("fit_assumption_constants: tau must be positive");
  if (!(c > 0.0) || !(beta > 0.0)) {
    throw ConfigError("fit_assumption_constants: c and beta must be positive");
  }
  AssumptionReport rep;
  rep.tau = tau;
  rep.c = c;
  rep.beta = beta;

  double mu_min = std::numeric_limits<double>::infinity();
  for (int i : m.D.indices()) mu_min = std::min(mu_min, m.mu[i]);
  rep.alpha = std::min(static_cast<double>(m.n) * mu_min, 1.0);

  const Matrix S = stopped_kernel(m).S;
  const MinorizingGraph g = minorizing_graph(kernel_power(S, tau), c, m.D);
  rep.connected = g.connected;

  double c_fit = 0.0;
  Matrix st = Matrix::Identity(m.n, m.n);
  for (int t = 1; t <= tau; ++t) {
    st = st * S;
    for (int i = 0; i < m.n; ++i) {
      for (int j = 0; j < m.n; ++j) {
        if (i == j || st(i, j) <= 0.0) continue;
        const int dist = g.distances(i, j);
        if (dist < 0) {
          c_fit = std::numeric_limits<double>::infinity();
        } else {
          c_fit = std::max(c_fit, st(i, j) * std::exp(beta * static_cast<double>(dist) * dist));
        }
      }
    }
  }
  rep.c_fit = c_fit;

  const double lc = std::log(c);
  const double n3 = std::pow(static_cast<double>(m.n), 3.0);
  bool zero_on_d = true;
  for (int i : m.D.indices()) {
    if (m.R[i] != 0.0) zero_on_d = false;
  }
  // A finite bound is reported only for a connected minorizing graph; an
  // infinite c_fit dominates and surfaces as +inf either way.
  if (std::isinf(c_fit)) {
    rep.bound = c_fit;
    rep.bound_zero_reward = zero_on_d ? c_fit : std::numeric_limits<double>::quiet_NaN();
  } else if (!rep.connected) {
    rep.bound = std::numeric_limits<double>::quiet_NaN();
    rep.bound_zero_reward = std::numeric_limits<double>::quiet_NaN();
  } else {
    rep.bound = c_fit / rep.alpha * tau * std::exp(lc * lc / beta) * n3;
    rep.bound_zero_reward = zero_on_d ? c_fit / rep.alpha * std::exp(lc * lc / beta) * n3
                                      : std::numeric_limits<double>::quiet_NaN();
  }
  return rep;
}

DimensionBoundCheck dimension_bound_check(const Mrp& m, int tau, const AssumptionReport& report) {
  const VarianceReport var = sigma_asymptotic(m, tau);
  DimensionBoundCheck chk;
  chk.bound = report.bound;
  chk.max_rel_avar = 0.0;
  for (int i : m.D.indices()) chk.max_rel_avar = std::max(chk.max_rel_avar, var.rel_avar[i]);
  chk.holds = chk.max_rel_avar <= report.bound;
  chk.margin = chk.max_rel_avar == 0.0 ? std::numeric_limits<double>::infinity()
                                       : report.bound / chk.max_rel_avar;
  return chk;
}

}  // namespace mrpeval
