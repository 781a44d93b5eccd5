#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mrpeval/chains.hpp"
#include "mrpeval/estimators.hpp"
#include "mrpeval/exact.hpp"
#include "mrpeval/variance.hpp"

namespace mrpeval {

inline constexpr double kDefaultCThreshold = 0.13447071068499755;  // 1/(2(1+e))

struct ExperimentConfig {
  std::string name;                     // fig-mfpt | fig-committor | lag-sweep | invariant-mu
  std::vector<int> n_list = {20, 40, 80};
  int tau = 1;
  int tau_min = 1;
  int tau_max = 120;
  std::int64_t m_override = 0;          // 0: use the 10 n^3 rule
  int replicas = 2000;                  // source experiments use 30000
  std::uint64_t master_seed = 1;
  std::string out_dir;                  // empty: keep results in memory only
  int threads = 1;
  double beta = 0.5;
  double c_threshold = kDefaultCThreshold;

  std::int64_t m_for(int n) const {
    return m_override > 0 ? m_override : 10LL * n * n * n;
  }
};

struct MseRow {
  int state = 0;             // 1-based
  double exact_u = 0.0;
  double rel_avar = 0.0;     // exact asymptotic, sigma^2 / u^2
  double empirical_rel_mse = 0.0;  // M * MSE / u^2 over successful replicas
  bool mse_defined = false;  // false when every replica failed
  double failure_rate = 0.0;
};

struct MseTable {
  int n = 0;
  Quantity quantity = Quantity::general;
  std::int64_t m = 0;
  int replicas = 0;
  int replicas_failed = 0;
  double failure_rate = 0.0;
  std::vector<MseRow> rows;            // one per state in D
  std::vector<double> mc_rel_avar;     // exact plain-mean reference, per state in D
};

// One table per n: exact value, exact relative asymptotic variance, empirical
// relative MSE of the lag estimator over fresh replicas (per-replica seeds
// derived from the master seed), replica failure bookkeeping, and the exact
// plain-mean reference column. Writes value/estimator/plain-mean CSVs per n
// when out_dir is set.
std::vector<MseTable> run_fig_experiment(const ExperimentConfig& cfg, Quantity q,
                                         MuMode mu_mode);

// Same pipeline with the invariant-conditioned initial distribution, run for
// both quantities; failure rates are reported unconditionally.
std::vector<MseTable> run_invariant_mu(const ExperimentConfig& cfg, Quantity q);

struct LagRow {
  int tau = 0;
  double max_rel_avar = 0.0;
  double bound = 0.0;
};

// Lazy chain, n = 40: exact max relative avar and its upper bound per lag.
std::vector<LagRow> run_lag_sweep(const ExperimentConfig& cfg, Quantity q);

struct DiagnosticsRow {
  int n = 0;
  int tau = 1;
  double lambda_max = 0.0;
  double e_nu_t = 0.0;
  double resolvent_inf_norm = 0.0;
  double escape_bound_margin = 0.0;        // lhs / rhs, >= 1
  double spectral_gap = 0.0;
  double mfpt_mid_closed = 0.0;     // NaN for even n
  double mfpt_mid_dense = 0.0;      // NaN for even n
  double committor_u2_closed = 0.0;
  double committor_u2_dense = 0.0;
};

// Per n: restricted-kernel spectral summary, escape-time identities, and
// closed-form cross-checks against the dense solver (bistable family).
std::vector<DiagnosticsRow> run_diagnostics(const ExperimentConfig& cfg);

// Dispatch on cfg.name; runs the matching experiment and writes its CSV tree.
void run_experiment(const ExperimentConfig& cfg);

}  // namespace mrpeval
