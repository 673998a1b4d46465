#pragma once

// Slow, exact reference implementations. They are used by the tests as
// ground truth and by the prox solver as a last-resort fallback. Nothing in
// here shares numerical code with the main solver path beyond elementary
// arithmetic: dense matrices are assembled from definitions, and the
// proximal QP is solved by enumerating supports.

#include <array>
#include <cstdint>
#include <utility>

#include <Eigen/Core>

#include "bpf/operators.hpp"
#include "bpf/prox.hpp"

namespace bpf::oracle {

inline constexpr int kMaxDenseDim = 300;

/// Dense 3N x 3N data and the dense matrix of the map A, for small N.
class DenseProblem {
 public:
  explicit DenseProblem(const PenaltyObjective& problem, bool build_A_matrix = true);

  int dim() const { return static_cast<int>(Y_.rows()); }
  const Eigen::MatrixXcd& Y() const { return Y_; }
  const Eigen::MatrixXcd& C() const { return C_; }
  /// 18N x n^2 real matrix of A in the orthonormal basis of H^n returned by
  /// hermitian_basis(). Empty unless requested.
  const Eigen::MatrixXd& A_matrix() const { return A_; }

  /// A(W) straight from P = diag(W Y^H).
  RealVector A(const Eigen::MatrixXcd& W) const;
  /// A*(y) = sum_l (A^T y)_l E_l using the dense matrix of A.
  Eigen::MatrixXcd A_star(const RealVector& y) const;
  /// H(y, G) = C + A*(y) + B*(G)
  Eigen::MatrixXcd H(const DualPoint& x) const;

  /// Orthonormal basis element l of H^n under <X, Y> = Re tr(X Y).
  Eigen::MatrixXcd hermitian_basis(int l) const;

 private:
  Eigen::MatrixXcd Y_, C_;
  Eigen::MatrixXd A_;
};

struct DensePair {
  double value = 0.0;
  ComplexVector vector;
};

/// Largest eigenpair by full eigendecomposition; phase fixed so the first
/// largest-magnitude entry is real positive. Rejects non-Hermitian input.
DensePair dense_lambda_max(const Eigen::MatrixXcd& a);

/// f from scratch: dense H, dense eigendecomposition.
double dense_f(const PenaltyObjective& problem, const DenseProblem& dense, const DualPoint& x);

struct QpResult {
  DualPoint z;
  std::array<double, 3> theta{};
  double objective = 0.0;
  int support = 0;  // bitmask over cuts of the best candidate
};

/// Exact proximal subproblem: for every nonempty support of the simplex the
/// equal-height system is solved by bisection, each candidate is scored by
/// the primal objective, and the best candidate is returned.
QpResult qp_support_enumeration(const ProxProblem& p);

struct SubgradientRun {
  DualPoint best;
  double best_f = 0.0;
  std::vector<double> best_history;  // best-so-far f, one entry per iteration
};

/// x_{t+1} = Pi_X(x_t - tau0 / sqrt(t) g_t) from x_0 = (beta/2 1, 0), dense
/// evaluations throughout. Returns the best iterate.
SubgradientRun projected_subgradient_reference(const PenaltyObjective& problem, int iters,
                                               double tau0);

}  // namespace bpf::oracle
