#pragma once

#include <cstdint>
#include <memory>
#include <optional>

#include "bpf/network.hpp"
#include "bpf/sparse.hpp"
#include "bpf/types.hpp"

namespace bpf {

/// A point x = (y, Gamma) of R^{18N} x H^3. The y-block is six stacked 3N
/// blocks (yP+, yP-, yQ+, yQ-, yV+, yV-).
struct DualPoint {
  RealVector y;
  Herm3 gamma = Herm3::Zero();

  static DualPoint zero(int n_buses) { return {RealVector::Zero(18 * n_buses), Herm3::Zero()}; }

  DualPoint& operator+=(const DualPoint& o);
  DualPoint& operator-=(const DualPoint& o);
  DualPoint& operator*=(double s);
  friend DualPoint operator+(DualPoint a, const DualPoint& b) { return a += b; }
  friend DualPoint operator-(DualPoint a, const DualPoint& b) { return a -= b; }
  friend DualPoint operator*(double s, DualPoint a) { return a *= s; }

  /// True when 0 <= y <= beta (within tol).
  bool in_box(double beta, double tol = 0.0) const;
};

/// <x1, x2> = y1'y2 + tr(G1 G2)
double inner(const DualPoint& a, const DualPoint& b);
double squared_norm(const DualPoint& a);
/// tr(A B) for Hermitian 3x3 arguments, real part.
double trace_product(const Herm3& a, const Herm3& b);

// -- the linear maps ---------------------------------------------------------

/// A(v v^H) from one sparse product: [Re P, -Re P, Im P, -Im P, |v|^2, -|v|^2]
/// with P_j = v_j conj((Y v)_j).
RealVector apply_A_rank1(const ComplexCsr& admittance, const ComplexVector& v);

/// Hermitian sparse matrix A*(y) on the admittance pattern:
///   1/2 (Y^H Da + Da Y) + 1/(2i) (Y^H Db - Db Y) + Dc
/// with Da = diag(yP+ - yP-), Db = diag(yQ+ - yQ-), Dc = diag(yV+ - yV-).
ComplexCsr apply_A_star(const ComplexCsr& admittance, const RealVector& y);

/// 3N x 3N matrix holding gamma in the top-left block. A non-Hermitian
/// gamma is rejected when strict, otherwise symmetrized.
ComplexCsr apply_B_star(std::shared_ptr<const CsrPattern> pattern, const Herm3& gamma,
                        bool strict = true);

/// m(u) = [-u - p_upper, u + p_lower, -q_upper, q_lower, -v_upper, v_lower]
RealVector m_of_u(const RealVector& u, const OperatingLimits& limits);

// -- eigen computation -----------------------------------------------------

struct EigenOptions {
  double tol = 1e-9;
  int krylov_dim = 60;
  int max_restarts = 50;
  int dense_threshold = 300;
  std::uint64_t seed = 0;
};

/// Largest eigenpair of -H.
struct EigenResult {
  double value = 0.0;
  ComplexVector vector;
  double residual = 0.0;
  /// Second largest eigenvalue of -H when requested, else empty.
  std::optional<double> second_value;
  int matvecs = 0;
  bool dense_fallback = false;
};

/// Largest eigenpair(s) of -A for a Hermitian sparse A. Uses matrix-free
/// Lanczos; on non-convergence falls back to a dense eigensolver when
/// n <= dense_threshold, otherwise throws ConvergenceError.
EigenResult lambda_max_neg(const ComplexCsr& a, const EigenOptions& options, int nev = 1);

// -- the penalty objective ---------------------------------------------------

/// Frozen problem data for f(y, G) = -m(u)'y + tr(G M1) + alpha [lambda_max(-H)]_+.
class PenaltyObjective {
 public:
  PenaltyObjective(NetworkData data, RealVector u, double alpha, double beta);

  int n_buses() const { return data_.network.n_buses; }
  int dim() const { return data_.network.dim(); }
  int y_dim() const { return 18 * n_buses(); }

  const NetworkData& data() const { return data_; }
  const RealVector& u() const { return u_; }
  const ComplexCsr& admittance() const { return admittance_; }
  const ComplexCsr& cost() const { return cost_; }
  const RealVector& m_vector() const { return m_; }
  const Herm3& M1() const { return m1_; }
  const Eigen::Vector3cd& slack_voltage() const { return data_.network.slack_voltage; }
  double alpha() const { return alpha_; }
  double beta() const { return beta_; }

  /// H(y, G) = C + A*(y) + B*(G), Hermitian by construction.
  ComplexCsr assemble_H(const DualPoint& x) const;
  /// -m(u)'y + tr(G M1)
  double linear_part(const DualPoint& x) const;
  /// The fixed slope (-m(u), M1).
  DualPoint linear_slope() const;

 private:
  NetworkData data_;
  RealVector u_;
  ComplexCsr admittance_;
  ComplexCsr cost_;
  RealVector m_;
  Herm3 m1_;
  double alpha_;
  double beta_;
};

/// f, f^lambda and the eigenpair they share.
struct Evaluation {
  double linear = 0.0;
  double f = 0.0;
  double f_lambda = 0.0;
  EigenResult eig;

  double phi() const { return std::max(eig.value, 0.0); }
};

Evaluation evaluate(const PenaltyObjective& problem, const DualPoint& x,
                    const EigenOptions& options);
double eval_f(const PenaltyObjective& problem, const DualPoint& x, const EigenOptions& options);
double eval_f_lambda(const PenaltyObjective& problem, const DualPoint& x,
                     const EigenOptions& options);

/// g = (-m(u) - alpha A(Q), M1 - alpha B(Q)) with Q = v v^H, an element of
/// the subdifferential of f^lambda. Throws if eig.residual > residual_tol.
DualPoint subgradient(const PenaltyObjective& problem, const EigenResult& eig,
                      double residual_tol);

}  // namespace bpf
