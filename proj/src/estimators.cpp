#include "mrpeval/estimators.hpp"

#include <algorithm>

namespace mrpeval {

const char* to_string(FailureKind k) {
  switch (k) {
    case FailureKind::none: return "none";
    case FailureKind::undefined_states: return "undefined_states";
    default: return "singular_system";
  }
}

EmpiricalKernels empirical_kernels(const TrajectoryDataset& ds, int tau) {
  if (tau < 1) throw ConfigError("empirical_kernels: tau must be positive");
  if (ds.tau != TrajectoryDataset::kTauInfinity && ds.tau < tau) {
    throw ConfigError("empirical_kernels: dataset lag is shorter than the requested lag");
  }
  const int n = ds.n;
  EmpiricalKernels ek;
  ek.tau = tau;
  ek.counts = ds.counts;
  ek.defined.resize(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) ek.defined[static_cast<size_t>(i)] = ds.counts[static_cast<size_t>(i)] > 0;

  std::vector<std::vector<std::int64_t>> hits(
      static_cast<size_t>(tau), std::vector<std::int64_t>(static_cast<size_t>(n) * n, 0));
  for (std::size_t l = 0; l < ds.size(); ++l) {
    const std::uint64_t lo = ds.offsets[l];
    const std::uint64_t last = ds.offsets[l + 1] - 1 - lo;  // index of X_{T wedge L} within the record
    const std::int32_t i = ds.states[lo];
    for (int t = 1; t <= tau; ++t) {
      const std::uint64_t idx = std::min<std::uint64_t>(static_cast<std::uint64_t>(t), last);
      if (idx < static_cast<std::uint64_t>(t) && !ds.escaped[l]) {
        throw ConfigError("empirical_kernels: unfinished trajectory shorter than the requested lag");
      }
      const std::int32_t j = ds.states[lo + idx];
      ++hits[static_cast<size_t>(t - 1)][static_cast<size_t>(i) * n + j];
    }
  }

  ek.S.resize(static_cast<size_t>(tau) + 1);
  ek.S[0] = Matrix::Identity(n, n);
  for (int t = 1; t <= tau; ++t) {
    Matrix s = Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i) {
      if (ds.counts[static_cast<size_t>(i)] > 0) {
        const double inv = 1.0 / static_cast<double>(ds.counts[static_cast<size_t>(i)]);
        for (int j = 0; j < n; ++j) {
          s(i, j) = static_cast<double>(hits[static_cast<size_t>(t - 1)][static_cast<size_t>(i) * n + j]) * inv;
        }
      } else {
        s(i, i) = 1.0;
      }
    }
    ek.S[static_cast<size_t>(t)] = std::move(s);
  }
  return ek;
}

EstimateResult lstd_solve(const EmpiricalKernels& ek, const Mrp& m, int tau) {
  if (tau < 1 || tau > ek.tau) throw ConfigError("lstd_solve: tau out of range for these kernels");
  EstimateResult res;
  res.tau = tau;
  res.u = Vector::Zero(m.n);
  res.defined.assign(static_cast<size_t>(m.n), 1);
  for (int i = 0; i < m.n; ++i) {
    if (!m.D.contains(i)) res.u[i] = m.R[i];
  }

  bool all_defined = true;
  for (int i : m.D.indices()) {
    if (!ek.defined[static_cast<size_t>(i)]) {
      res.defined[static_cast<size_t>(i)] = 0;
      all_defined = false;
    }
  }
  if (!all_defined) {
    res.failure = FailureKind::undefined_states;
    return res;
  }

  Vector r_d = Vector::Zero(m.n);
  Vector r_dc = Vector::Zero(m.n);
  for (int i = 0; i < m.n; ++i) {
    (m.D.contains(i) ? r_d[i] : r_dc[i]) = m.R[i];
  }
  const Matrix& Stau = ek.S[static_cast<size_t>(tau)];
  const Matrix SD = mask_to_D(Stau, m.D);
  Vector rhs = r_d;
  for (int t = 1; t < tau; ++t) rhs += ek.S[static_cast<size_t>(t)] * r_d;
  rhs += (Stau - SD) * r_dc;
  const Matrix A = Matrix::Identity(m.n, m.n) - SD;

  Eigen::PartialPivLU<Matrix> lu(A);
  if (lu.matrixLU().diagonal().cwiseAbs().minCoeff() < 1e-13) {
    res.failure = FailureKind::singular_system;
    res.u = Vector::Zero(m.n);
    for (int i = 0; i < m.n; ++i) {
      if (m.D.contains(i)) {
        res.defined[static_cast<size_t>(i)] = 0;
      } else {
        res.u[i] = m.R[i];
      }
    }
    return res;
  }
  res.u = lu.solve(rhs);
  return res;
}

EstimateResult mc_estimate(const TrajectoryDataset& ds, const Mrp& m) {
  for (std::size_t l = 0; l < ds.size(); ++l) {
    if (!ds.escaped[l]) {
      throw NumericalError("mc_estimate: dataset contains trajectories that never escaped");
    }
  }
  std::vector<double> sums(static_cast<size_t>(m.n), 0.0);
  for (std::size_t l = 0; l < ds.size(); ++l) {
    const auto tv = ds.traj(l);
    double g = 0.0;
    for (const std::int32_t x : tv.states) g += m.R[x];
    sums[static_cast<size_t>(tv.states[0])] += g;
  }

  EstimateResult res;
  res.tau = TrajectoryDataset::kTauInfinity;
  res.u = Vector::Zero(m.n);
  res.defined.assign(static_cast<size_t>(m.n), 1);
  for (int i = 0; i < m.n; ++i) {
    if (!m.D.contains(i)) {
      res.u[i] = m.R[i];
      continue;
    }
    if (ds.counts[static_cast<size_t>(i)] > 0) {
      res.u[i] = sums[static_cast<size_t>(i)] / static_cast<double>(ds.counts[static_cast<size_t>(i)]);
    } else {
      res.defined[static_cast<size_t>(i)] = 0;
      res.failure = FailureKind::undefined_states;
    }
  }
  return res;
}

}  // namespace mrpeval
