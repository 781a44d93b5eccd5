#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "helpers.hpp"
#include "mrpeval/chains.hpp"
#include "mrpeval/exact.hpp"

using namespace mrpeval;
using namespace testutil;

namespace {

Mrp bistable(int n, MuMode mu = MuMode::uniform_on_d) {
  ChainSpec spec;
  spec.family = Family::bistable;
  spec.n = n;
  spec.mu_mode = mu;
  return build_chain(spec);
}

}  // namespace

TEST_CASE("value function on the four-state oracle") {
  const ValueFunction mf = solve_value(w4_mfpt(), 1, Quantity::mfpt);
  CHECK(std::abs(mf.u[0] - 0.0) < 1e-12);
  CHECK(std::abs(mf.u[1] - 2.0) < 1e-12);
  CHECK(std::abs(mf.u[2] - 2.0) < 1e-12);
  CHECK(std::abs(mf.u[3] - 0.0) < 1e-12);

  const ValueFunction cm = solve_value(w4_committor(), 1, Quantity::committor);
  CHECK(std::abs(cm.u[0] - 0.0) < 1e-12);
  CHECK(std::abs(cm.u[1] - 1.0 / 3.0) < 1e-12);
  CHECK(std::abs(cm.u[2] - 2.0 / 3.0) < 1e-12);
  CHECK(std::abs(cm.u[3] - 1.0) < 1e-12);

  Mrp zero = w4();
  CHECK(solve_value(zero, 3).u.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("value function matches the random-walk closed forms") {
  const int n = 6;
  const Mrp mf = with_mfpt_reward(unit_walk(n));
  const Mrp cm = with_committor_reward(unit_walk(n));
  const Vector umf = solve_value(mf, 2).u;
  const Vector ucm = solve_value(cm, 2).u;
  for (int i = 0; i < n; ++i) {
    CHECK(std::abs(umf[i] - mfpt_walk(n, i)) < 1e-10);
    CHECK(std::abs(ucm[i] - committor_walk(n, i)) < 1e-12);
  }
}

TEST_CASE("value function is lag independent and satisfies the solved system") {
  for (const bool committor : {false, true}) {
    Mrp m = bistable(20);
    m = committor ? with_committor_reward(std::move(m)) : with_mfpt_reward(std::move(m));
    const Vector u1 = solve_value(m, 1).u;
    for (int tau : {2, 5}) {
      const Vector ut = solve_value(m, tau).u;
      for (int i = 0; i < m.n; ++i) {
        if (std::abs(u1[i]) > 1e-300) CHECK(rel_diff(u1[i], ut[i]) < 1e-9);
      }

      // Residual of the lag-tau system the solver claims to satisfy.
      const Matrix S = stopped_kernel(m).S;
      const Matrix Stau = kernel_power(S, tau);
      const Matrix SD = mask_to_D(Stau, m.D);
      Vector r_d = Vector::Zero(m.n), r_dc = Vector::Zero(m.n);
      for (int i = 0; i < m.n; ++i) (m.D.contains(i) ? r_d[i] : r_dc[i]) = m.R[i];
      Vector rhs = r_d;
      Matrix St = Matrix::Identity(m.n, m.n);
      for (int t = 1; t < tau; ++t) {
        St = St * S;
        rhs += St * r_d;
      }
      rhs += (Stau - SD) * r_dc;
      Vector full = ut;
      for (int i = 0; i < m.n; ++i) {
        if (!m.D.contains(i)) {
          full[i] = m.R[i];
          rhs[i] = m.R[i];
        }
      }
      const Vector lhs = full - SD * full;
      CHECK((lhs - rhs).cwiseAbs().maxCoeff() / rhs.cwiseAbs().maxCoeff() < 1e-10);
    }
    if (committor) {
      for (int i = 0; i < m.n; ++i) {
        CHECK(u1[i] >= 0.0);
        CHECK(u1[i] <= 1.0);
      }
    }
  }
}

TEST_CASE("self-looping interior makes the system singular") {
  Mrp m;
  m.n = 3;
  m.P = Matrix::Identity(3, 3);
  m.R = Vector::Zero(3);
  m.R[1] = 1.0;
  m.D = StateSet(3, {1});
  m.mu = Vector::Zero(3);
  m.mu[1] = 1.0;
  m.validate();
  CHECK_THROWS_AS(solve_value(m, 1), SingularSystemError);
}

TEST_CASE("midpoint escape-time closed form") {
  CHECK_THROWS_AS(mfpt_midpoint_closed_form(20), ConfigError);
  CHECK_THROWS_AS(mfpt_midpoint_closed_form(3), ConfigError);

  // Naive single-precision-order evaluation of the same ratio of sums.
  const int n = 5;
  const Vector p = invariant_distribution(n);
  double w[4];
  for (int i = 0; i < 4; ++i) w[i] = 1.0 / p[i] + 1.0 / p[i + 1];
  const double sum_all = w[0] + w[1] + w[2] + w[3];
  const double sum_half = w[0] + w[1];
  const double sum_p = p[1] + p[2];
  const double direct = 2.0 * sum_half * sum_half * sum_p / sum_all;
  CHECK(rel_diff(mfpt_midpoint_closed_form(5), direct) < 1e-13);

  for (int n2 : {5, 21, 41, 81}) {
    const Vector u = solve_value(with_mfpt_reward(bistable(n2)), 1).u;
    CHECK(rel_diff(mfpt_midpoint_closed_form(n2), u[(n2 - 1) / 2]) < 1e-8);
  }

  // Growth floor (3/4) exp(3(n-1)/(8 pi)).
  CHECK(mfpt_midpoint_closed_form(41) >= 0.75 * std::exp(3.0 * 40.0 / (8.0 * std::numbers::pi)));
}

TEST_CASE("committor closed form at the left-adjacent state") {
  const int n = 4;
  const Vector p = invariant_distribution(n);
  double w[3];
  for (int i = 0; i < 3; ++i) w[i] = 1.0 / p[i] + 1.0 / p[i + 1];
  CHECK(rel_diff(committor_u2_closed_form(4), w[0] / (w[0] + w[1] + w[2])) < 1e-13);

  for (int n2 : {4, 20, 40, 81}) {
    const Vector u = solve_value(with_committor_reward(bistable(n2)), 1).u;
    CHECK(rel_diff(committor_u2_closed_form(n2), u[1]) < 1e-8);
  }

  // Exponential decay across a doubling of n, and frozen first-run values.
  const double u20 = committor_u2_closed_form(20);
  const double u40 = committor_u2_closed_form(40);
  CHECK(u40 / u20 < 2.0 * std::exp(-19.0 / (4.0 * std::numbers::pi)));
  CHECK(rel_diff(u20, 0.0083100121354239952) < 1e-12);
  CHECK(rel_diff(u40, 0.00023555095536969867) < 1e-12);
}

TEST_CASE("closed forms track dense solves across the size range") {
  for (int n = 5; n <= 81; ++n) {
    const Vector ucm = solve_value(with_committor_reward(bistable(n)), 1).u;
    CHECK(rel_diff(committor_u2_closed_form(n), ucm[1]) < 1e-8);
    if (n % 2 == 1) {
      const Vector umf = solve_value(with_mfpt_reward(bistable(n)), 1).u;
      CHECK(rel_diff(mfpt_midpoint_closed_form(n), umf[(n - 1) / 2]) < 1e-8);
    }
  }
}

TEST_CASE("quasi-stationary report on the four-state oracle") {
  const QuasiStationaryReport rep = quasi_stationary_report(w4(), 1);
  CHECK(std::abs(rep.lambda_max - 0.5) < 1e-12);
  CHECK(std::abs(rep.nu[1] - 0.5) < 1e-11);
  CHECK(std::abs(rep.nu[2] - 0.5) < 1e-11);
  CHECK(rep.nu[0] == 0.0);
  CHECK(rep.nu[3] == 0.0);
  CHECK(std::abs(rep.e_nu_t - 2.0) < 1e-11);
  CHECK(std::abs(rep.resolvent_inf_norm - 2.0) < 1e-12);
  CHECK(rep.period == 2);
  CHECK(rep.residual < 1e-10);
  // The escape-time identity is tight here.
  CHECK(std::abs(rep.escape_bound_lhs - rep.escape_bound_rhs) < 1e-10);
}

TEST_CASE("escape-time lower bound on the resolvent norm holds on built chains") {
  for (int n : {20, 40}) {
    for (int tau : {1, 5}) {
      const QuasiStationaryReport rep = quasi_stationary_report(bistable(n), tau);
      CHECK(rep.escape_bound_lhs >= rep.escape_bound_rhs * (1.0 - 1e-9));
      CHECK(rep.lambda_max > 0.0);
      CHECK(rep.lambda_max < 1.0);
      CHECK(rep.tau == tau);
    }
  }
}

TEST_CASE("reducible restricted kernel is rejected") {
  Mrp m;
  m.n = 4;
  m.P = Matrix::Zero(4, 4);
  m.P(0, 0) = 1.0;
  m.P(1, 0) = 0.5;
  m.P(1, 1) = 0.5;
  m.P(2, 1) = 0.5;
  m.P(2, 3) = 0.5;
  m.P(3, 3) = 1.0;
  m.R = Vector::Zero(4);
  m.D = StateSet(4, {1, 2});
  m.mu = Vector::Zero(4);
  m.mu[1] = 0.5;
  m.mu[2] = 0.5;
  m.validate();
  CHECK_THROWS_AS(quasi_stationary_report(m, 1), NumericalError);
}

TEST_CASE("symmetrized spectral bound: frozen values and growth") {
  const double g20 = spectral_gap_bound(20);
  const double g40 = spectral_gap_bound(40);
  CHECK(rel_diff(g20, 0.9978730853161828) < 1e-8);
  CHECK(rel_diff(g40, 0.99995319015129347) < 1e-8);
  CHECK(g40 > g20);
  CHECK(spectral_gap_bound(80) >= 0.30);
}

TEST_CASE("plain-mean relative variance on the four-state oracle") {
  const Vector cm = mc_relative_avar(w4_committor());
  CHECK(cm[0] == 0.0);
  CHECK(std::abs(cm[1] - 4.0) < 1e-12);
  CHECK(std::abs(cm[2] - 1.0) < 1e-12);
  CHECK(cm[3] == 0.0);

  const Vector mf = mc_relative_avar(w4_mfpt());
  CHECK(std::abs(mf[1] - 1.0) < 1e-12);
  CHECK(std::abs(mf[2] - 1.0) < 1e-12);

  CHECK(mc_relative_avar(w4()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("plain-mean second moment agrees with truncated path enumeration") {
  // On the oracle walk the escape time from either interior state is
  // geometric-like: T = k with probability 2^-k, so E[T^2] = 6. Summing to
  // k = 60 leaves a tail below 1e-14.
  double brute = 0.0;
  for (int k = 60; k >= 1; --k) brute += static_cast<double>(k) * k * std::pow(2.0, -k);
  const Mrp m = w4_mfpt();
  const Vector rel = mc_relative_avar(m);
  const Vector u = solve_value(m, 1).u;
  const double w2 = rel[1] * m.mu[1] * u[1] * u[1] + u[1] * u[1];
  CHECK(std::abs(w2 - brute) < 1e-11);
  CHECK(std::abs(w2 - 6.0) < 1e-11);
}

TEST_CASE("plain-mean relative variance: indicator closed form and positivity") {
  const Mrp m = with_committor_reward(bistable(20));
  const Vector rel = mc_relative_avar(m);
  const Vector u = solve_value(m, 1).u;
  for (int i : m.D.indices()) {
    CHECK(rel[i] >= 0.0);
    // Total reward is Bernoulli for an indicator boundary reward.
    CHECK(rel_diff(rel[i], (1.0 - u[i]) / (m.mu[i] * u[i])) < 1e-10);
  }
}

TEST_CASE("plain-mean relative variance rejects a zero value with live reward") {
  Mrp m;
  m.n = 3;
  m.P = Matrix::Zero(3, 3);
  m.P(0, 0) = 1.0;
  m.P(1, 0) = 1.0;
  m.P(2, 2) = 1.0;
  m.R = Vector::Zero(3);
  m.R[2] = 1.0;  // unreachable reward: u = 0 on D
  m.D = StateSet(3, {1});
  m.mu = Vector::Zero(3);
  m.mu[1] = 1.0;
  m.validate();
  CHECK_THROWS_AS(mc_relative_avar(m), NumericalError);
}
