#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>
#include <string>

#include "helpers.hpp"
#include "mrpeval/chains.hpp"
#include "mrpeval/estimators.hpp"
#include "mrpeval/exact.hpp"
#include "mrpeval/sampler.hpp"

using namespace mrpeval;
using namespace testutil;

namespace {

TrajectoryDataset parse_ds(const Mrp& m, const std::string& text) {
  std::istringstream in(text);
  return read_dataset(in, m);
}

EmpiricalKernels inject_exact(const Mrp& m, int tau) {
  const Matrix S = stopped_kernel(m).S;
  EmpiricalKernels ek;
  ek.tau = tau;
  ek.S.resize(tau + 1);
  for (int t = 0; t <= tau; ++t) ek.S[t] = kernel_power(S, t);
  ek.counts.assign(m.n, 1);
  ek.defined.assign(m.n, 1);
  return ek;
}

}  // namespace

TEST_CASE("empirical kernels from a single trajectory") {
  const Mrp m = w4();
  const TrajectoryDataset ds = parse_ds(m, "# n=4\n# M=1\n# tau=2\n# master_seed=0\n2,3,4\n");
  const EmpiricalKernels ek = empirical_kernels(ds, 2);

  CHECK(ek.S[1](1, 2) == 1.0);
  CHECK(ek.S[2](1, 3) == 1.0);
  CHECK((ek.S[0] - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff() == 0.0);
  // Unstarted states carry point-mass rows and a cleared flag.
  for (int i : {0, 2, 3}) {
    CHECK(ek.S[1](i, i) == 1.0);
    CHECK(ek.S[2](i, i) == 1.0);
    CHECK(!ek.defined[i]);
  }
  CHECK(ek.defined[1]);
  CHECK(ek.counts[1] == 1);
}

TEST_CASE("empirical kernels concentrate and stay row stochastic") {
  const Mrp m = w4();
  const Matrix S = stopped_kernel(m).S;
  const TrajectoryDataset ds = sample_dataset(m, 1000000, 2, 2025);
  const EmpiricalKernels ek = empirical_kernels(ds, 2);
  for (int t : {1, 2}) {
    CHECK((ek.S[t] - kernel_power(S, t)).cwiseAbs().maxCoeff() < 0.01);
    for (int i = 0; i < 4; ++i) CHECK(std::abs(ek.S[t].row(i).sum() - 1.0) < 1e-12);
  }
}

TEST_CASE("kernels freeze after an early escape") {
  // Both interior states escape deterministically in one step.
  Mrp m;
  m.n = 4;
  m.P = Matrix::Zero(4, 4);
  m.P(0, 0) = 1.0;
  m.P(1, 0) = 1.0;
  m.P(2, 3) = 1.0;
  m.P(3, 3) = 1.0;
  m.R = Vector::Zero(4);
  m.D = StateSet(4, {1, 2});
  m.mu = Vector::Zero(4);
  m.mu[1] = 0.5;
  m.mu[2] = 0.5;
  m.validate();

  const TrajectoryDataset ds = sample_dataset(m, 200, 3, 4);
  const EmpiricalKernels ek = empirical_kernels(ds, 3);
  CHECK((ek.S[2] - ek.S[1]).cwiseAbs().maxCoeff() == 0.0);
  CHECK((ek.S[3] - ek.S[1]).cwiseAbs().maxCoeff() == 0.0);
  CHECK(ek.S[1](1, 0) == 1.0);
  CHECK(ek.S[1](2, 3) == 1.0);
}

TEST_CASE("kernel lag must not exceed the dataset lag") {
  const Mrp m = w4();
  const TrajectoryDataset ds = sample_dataset(m, 50, 2, 1);
  CHECK_THROWS_AS(empirical_kernels(ds, 3), ConfigError);

  // Until-escape data admits any lag, except when capped trajectories are
  // too short to reach it.
  Mrp frozen;
  frozen.n = 3;
  frozen.P = Matrix::Identity(3, 3);
  frozen.R = Vector::Zero(3);
  frozen.D = StateSet(3, {0, 1});
  frozen.mu = Vector::Zero(3);
  frozen.mu[0] = 1.0;
  frozen.validate();
  const TrajectoryDataset capped = sample_until_escape(frozen, 10, 1, 2);
  CHECK_THROWS_AS(empirical_kernels(capped, 5), ConfigError);
}

TEST_CASE("estimator on exact kernels reproduces the exact values") {
  ChainSpec spec;
  spec.family = Family::bistable;
  spec.n = 20;
  ChainSpec lazy;
  lazy.family = Family::lazy_bistable;
  lazy.n = 40;
  lazy.laziness_denominator = 10.0;
  const Mrp zoo[] = {w4(), build_chain(spec), build_chain(lazy)};
  for (const Mrp& base : zoo) {
    for (const bool committor : {false, true}) {
      const Mrp m = committor ? with_committor_reward(Mrp(base)) : with_mfpt_reward(Mrp(base));
      for (int tau : {1, 2, 5}) {
        const EstimateResult res = lstd_solve(inject_exact(m, tau), m, tau);
        REQUIRE(res.failure == FailureKind::none);
        CHECK(max_abs_diff(res.u, solve_value(m, tau).u) < 1e-10);
      }
    }
  }
}

TEST_CASE("estimates concentrate around the exact value") {
  const Mrp m = w4_committor();
  const TrajectoryDataset ds = sample_dataset(m, 100000, 1, 11);
  const EstimateResult res = lstd_solve(empirical_kernels(ds, 1), m, 1);
  REQUIRE(res.failure == FailureKind::none);
  CHECK(std::abs(res.u[1] - 1.0 / 3.0) < 0.02);
  CHECK(res.u[0] == 0.0);
  CHECK(res.u[3] == 1.0);
}

TEST_CASE("estimation error shrinks with the sample size") {
  const Mrp m = w4_mfpt();
  const Vector u = solve_value(m, 1).u;
  double prev = -1.0;
  for (const std::int64_t M : {1000, 10000, 100000}) {
    const TrajectoryDataset ds = sample_dataset(m, M, 1, 321);
    const EstimateResult res = lstd_solve(empirical_kernels(ds, 1), m, 1);
    REQUIRE(res.failure == FailureKind::none);
    const double err = max_abs_diff(res.u, u);
    if (prev >= 0.0) CHECK(err < prev);
    prev = err;
  }
  CHECK(prev < 0.02);
}

TEST_CASE("unvisited states fail the whole lag estimate") {
  const Mrp m = w4_committor();
  const TrajectoryDataset ds =
      parse_ds(m, "# n=4\n# M=2\n# tau=2\n# master_seed=0\n2,3,2\n2,1\n");
  const EstimateResult res = lstd_solve(empirical_kernels(ds, 2), m, 2);
  CHECK(res.failure == FailureKind::undefined_states);
  CHECK(!res.defined[2]);
  // No partial values are reported inside D.
  CHECK(res.u[1] == 0.0);
  CHECK(res.u[2] == 0.0);
}

TEST_CASE("degenerate kernels surface as a singular system") {
  const Mrp m = w4_committor();
  // One observed swap in each direction: the masked system loses rank.
  const TrajectoryDataset ds =
      parse_ds(m, "# n=4\n# M=2\n# tau=1\n# master_seed=0\n2,3\n3,2\n");
  const EstimateResult res = lstd_solve(empirical_kernels(ds, 1), m, 1);
  CHECK(res.failure == FailureKind::singular_system);
}

TEST_CASE("plain-mean estimator on hand datasets") {
  const Mrp cm = w4_committor();
  const EstimateResult one =
      mc_estimate(parse_ds(cm, "# n=4\n# M=1\n# tau=inf\n# master_seed=0\n2,3,4\n"), cm);
  CHECK(one.failure == FailureKind::undefined_states);  // state 3 of D unvisited
  CHECK(one.u[1] == 1.0);
  CHECK(one.defined[1]);
  CHECK(!one.defined[2]);

  const Mrp mf = w4_mfpt();
  const EstimateResult step =
      mc_estimate(parse_ds(mf, "# n=4\n# M=1\n# tau=inf\n# master_seed=0\n2,1\n"), mf);
  CHECK(step.u[1] == 1.0);

  // Partial definedness: the defined entries keep their sample means.
  const EstimateResult two =
      mc_estimate(parse_ds(mf, "# n=4\n# M=2\n# tau=inf\n# master_seed=0\n2,1\n2,3,4\n"), mf);
  CHECK(two.failure == FailureKind::undefined_states);
  CHECK(two.u[1] == doctest::Approx(1.5).epsilon(1e-15));
}

TEST_CASE("plain-mean estimator concentrates") {
  const Mrp m = w4_mfpt();
  const TrajectoryDataset ds = sample_until_escape(m, 100000, 99, 1000000);
  REQUIRE(ds.unfinished == 0);
  const EstimateResult res = mc_estimate(ds, m);
  REQUIRE(res.failure == FailureKind::none);
  CHECK(std::abs(res.u[1] - 2.0) < 3.0 * std::sqrt(2.0 / ds.counts[1]));
}

TEST_CASE("plain-mean estimator rejects capped datasets") {
  const Mrp m = w4_mfpt();
  const TrajectoryDataset ds = sample_until_escape(m, 200, 7, 1);
  REQUIRE(ds.unfinished > 0);
  CHECK_THROWS_AS(mc_estimate(ds, m), NumericalError);
}

TEST_CASE("lag and plain-mean estimators coincide once every trajectory escapes") {
  const Mrp m = w4_mfpt();
  const TrajectoryDataset ds = sample_until_escape(m, 2000, 17, 1000000);
  REQUIRE(ds.unfinished == 0);
  std::int64_t tau_max = 1;
  for (std::size_t l = 0; l < ds.size(); ++l) {
    tau_max = std::max(tau_max, *ds.traj(l).escape_time);
  }
  const EstimateResult lstd = lstd_solve(empirical_kernels(ds, static_cast<int>(tau_max)), m,
                                         static_cast<int>(tau_max));
  const EstimateResult mc = mc_estimate(ds, m);
  REQUIRE(lstd.failure == FailureKind::none);
  REQUIRE(mc.failure == FailureKind::none);
  for (int i = 0; i < m.n; ++i) {
    if (ds.counts[i] > 0 || !m.D.contains(i)) CHECK(std::abs(lstd.u[i] - mc.u[i]) < 1e-10);
  }
}
