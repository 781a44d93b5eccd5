#pragma once

#include "mrpeval/exact.hpp"
#include "mrpeval/types.hpp"

namespace mrpeval {

struct VarianceReport {
  Vector sigma_sq;           // per-state asymptotic variance of sqrt(M)(u~ - u), 0 off D
  Vector rel_avar;           // sigma_sq / u^2, 0 off D
  Vector inner_expectation;  // per-start-state centered second moment, 0 off D
  int tau = 1;
};

// Exact asymptotic variance of the lag-tau estimator:
//   sigma_i^2 = sum_{k in D} (1/mu(k)) ((I - S_D^tau)^{-1})_{ik}^2 *
//               E_k[(sum_{t<tau} R_D(X_{t^T}) + u(X_{tau^T}) - u(k))^2],
// with the inner expectation evaluated by one backward first/second moment
// recursion. Throws NumericalError if some mu(k) = 0 on D.
VarianceReport sigma_asymptotic(const Mrp& m, int tau);

struct QMatrix {
  Matrix Q;  // Q(k, l) for k in D, l != k; other entries 0
  int tau = 1;
};

// Q(k, l): probability that the lag-tau chain started at k hits l before
// returning to k and before reaching any other state outside D. Computed per
// column l from the transient block N = (I - S^tau[T,T])^{-1}, T = D \ {l},
// as Q(k, l) = h(k) / N(k, k) with h the hit-l-first vector; this equals the
// per-pair absorbing solve that starts with one step out of row k of S^tau
// (q_tau_pair below, kept as a cross-check).
QMatrix q_tau(const Mrp& m, int tau);
double q_tau_pair(const Mrp& m, int tau, int k, int l);

// Relative-variance upper bound sum_{k in D, l != k} num(k,l) / (mu(k) Q(k,l)^2)
// with num = sum_{t=1}^{tau} S^t generally, or S^tau alone when the reward
// vanishes on D (zero_reward_on_d). Pairs with positive numerator but zero
// Q(k, l) make the bound +infinity. Passing zero_reward_on_d for a reward that
// does not vanish on D is a flag mismatch (ConfigError).
double avar_bound(const Mrp& m, int tau, bool zero_reward_on_d);

struct MinorizingGraph {
  std::vector<std::vector<int>> adjacency;  // edges i -> j, i != j, S(i,j) >= c
  Eigen::MatrixXi distances;                // BFS path lengths; -1 encodes infinity
  bool connected = false;                   // every i in D reaches every j
  double c = 0.0;
};

MinorizingGraph minorizing_graph(const Matrix& s_tau, double c, const StateSet& D);

struct AssumptionReport {
  double alpha = 0.0;   // min(n min_{i in D} mu(i), 1)
  double c = 0.0;
  double beta = 0.0;
  double c_fit = 0.0;   // min C with S^t(i,j) <= C exp(-beta d(i,j)^2), t <= tau
  double bound = 0.0;   // (C / alpha) tau exp(log(c)^2 / beta) n^3
  double bound_zero_reward = 0.0;  // variant without the tau factor; NaN unless R = 0 on D
  bool connected = false;
  int tau = 1;
};

// Fits the three assumption constants on the built chain: largest valid alpha
// (capped at 1), user-supplied c and beta, and the smallest C consistent with
// the Gaussian-decay envelope over t <= tau. An infinite-distance pair with
// positive transition probability makes c_fit (and the bound) +infinity; a
// disconnected graph with finite c_fit leaves the bounds NaN (not applicable).
AssumptionReport fit_assumption_constants(const Mrp& m, int tau, double c, double beta);

struct DimensionBoundCheck {
  bool holds = false;
  double margin = 0.0;  // bound / max relative avar
  double max_rel_avar = 0.0;
  double bound = 0.0;
};

// Verifies max_{i in D} sigma_i^2 / u(i)^2 <= report.bound.
DimensionBoundCheck dimension_bound_check(const Mrp& m, int tau, const AssumptionReport& report);

}  // namespace mrpeval
