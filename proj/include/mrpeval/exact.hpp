#pragma once

#include "mrpeval/types.hpp"

namespace mrpeval {

enum class Quantity { mfpt, committor, general };

const char* to_string(Quantity q);

struct ValueFunction {
  Vector u;
  Quantity quantity = Quantity::general;
  int tau_used = 1;
};

// Solves the lag-tau fixed point system
//   (I - S_D^tau) u = sum_{t=0}^{tau-1} S^t R_D + (S^tau - S_D^tau) R_{D^c},
// where S_D^tau masks S^tau to D. Rows outside D reduce to u(i) = R(i).
// The solution is independent of tau. Throws SingularSystemError if the LU
// factorization meets a pivot below 1e-13.
ValueFunction solve_value(const Mrp& m, int tau, Quantity q = Quantity::general);

// Dense solve of A x = b by partial-pivot LU; pivot below 1e-13 raises
// SingularSystemError. invert_checked returns the explicit inverse.
Vector solve_checked(const Matrix& A, const Vector& b);
Matrix invert_checked(const Matrix& A);

// Closed forms for the bistable chain (denominator 2), both derived from the
// weights w_i = 1/p(i) + 1/p(i+1) of the one-dimensional resistor form.
// Mean escape time from the middle state (n odd):
//   u((n+1)/2) = 2 (sum_{i<n} w_i)^{-1} (sum_{i<=(n-1)/2} w_i)^2 sum_{l=2}^{(n+1)/2} p(l).
double mfpt_midpoint_closed_form(int n);
// Committor at the left-adjacent state: u(2) = w_1 / sum_{i<n} w_i.
double committor_u2_closed_form(int n);

struct QuasiStationaryReport {
  Vector nu;                   // length n, supported on D
  double lambda_max = 0.0;     // leading eigenvalue of the D-restricted kernel
  double e_nu_t = 0.0;         // expected escape time started from nu
  double resolvent_inf_norm = 0.0;  // ||(I - S_D^tau)^{-1}||_inf
  double escape_bound_lhs = 0.0;      // = resolvent_inf_norm
  double escape_bound_rhs = 0.0;      // = e_nu_t / tau, a lower bound on escape_bound_lhs
  double residual = 0.0;       // ||nu' S_D - lambda nu'||_inf on D
  int iterations = 0;
  int period = 1;
  int tau = 1;
};

// Left Perron vector of the D-restricted kernel by power iteration (uniform
// start, half-shift (I + S)/2 so periodic blocks converge too), tolerance
// 1e-12 on the iterate, cap 1e6 iterations. Requires the restricted block to
// be irreducible; throws NumericalError otherwise, ConvergenceError on stall.
QuasiStationaryReport quasi_stationary_report(const Mrp& m, int tau);

// For the bistable chain (denominator 2): symmetrize the interior block with
// D_p^{1/2} . D_p^{-1/2}, D_p(i,i) = p(i+1), and return 1 - lambda_min via
// shifted power iteration on (c I - A), c = 1 + max row sum, tolerance 1e-10.
double spectral_gap_bound(int n);

// Per-state relative asymptotic variance of the plain Monte Carlo mean,
// (w(i) - u(i)^2) / (mu(i) u(i)^2) on D where w solves the second-moment
// system w(i) = R(i)^2 + 2 R(i)(u(i) - R(i)) + sum_j S(i,j) w(j). Entries
// outside D are 0. All-zero reward returns the zero vector; a zero u(i) with
// nonzero reward raises NumericalError.
Vector mc_relative_avar(const Mrp& m);

}  // namespace mrpeval
