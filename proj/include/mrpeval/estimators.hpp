#pragma once

#include "mrpeval/sampler.hpp"
#include "mrpeval/types.hpp"

namespace mrpeval {

// Empirical lag kernels: S[t](i, j) is the fraction of trajectories started
// at i whose state at time min(t, escape) is j. S[0] is the identity. Rows
// with no started trajectory are point masses (defined[i] = 0). The family is
// not a power sequence: each lag is estimated from the same trajectories.
struct EmpiricalKernels {
  std::vector<Matrix> S;                // indices 0..tau
  std::vector<std::int64_t> counts;     // M_i
  std::vector<std::uint8_t> defined;    // M_i > 0
  int tau = 0;
};

// Requires ds.tau >= tau (until-escape data admits any lag); ConfigError otherwise.
EmpiricalKernels empirical_kernels(const TrajectoryDataset& ds, int tau);

enum class FailureKind { none, undefined_states, singular_system };

const char* to_string(FailureKind k);

// Estimation failures are data, not exceptions: a failed estimate carries the
// failure kind and per-state defined flags instead of a partial answer.
struct EstimateResult {
  Vector u;                             // length n
  std::vector<std::uint8_t> defined;    // per-state validity
  FailureKind failure = FailureKind::none;
  std::int64_t tau = 1;
};

// Plugs the empirical kernels into the same masked system as the exact solve.
// Any unvisited state in D fails the whole estimate (undefined_states); a
// pivot below 1e-13 fails it as singular_system. No partial vectors.
EstimateResult lstd_solve(const EmpiricalKernels& ek, const Mrp& m, int tau);

// Per-state mean of the total accumulated reward over until-escape
// trajectories; the lag-infinity limit of lstd_solve. States outside D report
// their boundary value R(i). Unvisited states in D are flagged undefined but
// do not spoil the other entries. Unfinished trajectories raise NumericalError.
EstimateResult mc_estimate(const TrajectoryDataset& ds, const Mrp& m);

}  // namespace mrpeval
