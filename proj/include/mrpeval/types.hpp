#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace mrpeval {

// Dense row-major throughout: sampling and masking are row-wise operations.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

// Configuration / precondition violations. The CLI maps these to exit code 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Numerical failures (singular systems, non-convergence, invalid data).
// The CLI maps these to exit code 3.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SingularSystemError : NumericalError {
  using NumericalError::NumericalError;
};

struct ConvergenceError : NumericalError {
  using NumericalError::NumericalError;
};

// Subset of the state space {0, ..., n-1} with O(1) membership tests.
class StateSet {
 public:
  StateSet() = default;
  StateSet(int n, std::vector<int> indices);

  // Interior {1, ..., n-2}, the non-absorbing set of the boundary-absorbed chains.
  static StateSet interior(int n);

  bool contains(int i) const { return mask_[static_cast<size_t>(i)] != 0; }
  const std::vector<int>& indices() const { return idx_; }
  int n() const { return n_; }
  int size() const { return static_cast<int>(idx_.size()); }

 private:
  int n_ = 0;
  std::vector<int> idx_;
  std::vector<char> mask_;
};

// Finite Markov reward process with an absorbing complement.
// States are 0-based internally; all file formats use 1-based labels.
struct Mrp {
  int n = 0;
  Matrix P;     // row-stochastic transition matrix
  Vector R;     // per-state reward, accumulated until (and including) escape
  StateSet D;   // set the process is observed on; the complement absorbs
  Vector mu;    // initial distribution, supported on D

  // Throws ConfigError on any structural violation: row sums off by more than
  // 1e-12, negative entries, mu off-support or not normalized.
  void validate() const;
};

// P with every row outside D replaced by the point mass on its own state.
struct StoppedKernel {
  Matrix S;
  int tau = 1;
};

StoppedKernel stopped_kernel(const Mrp& m);

// t-th power by repeated multiplication; t = 0 gives the identity.
Matrix kernel_power(const Matrix& S, int t);

// Zero all rows and columns with index outside D.
Matrix mask_to_D(const Matrix& A, const StateSet& D);

// Compensated (Kahan) summation over terms sorted by descending magnitude.
double kahan_sum_descending(std::vector<double> terms);

}  // namespace mrpeval
