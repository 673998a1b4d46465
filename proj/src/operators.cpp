#include "bpf/operators.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "bpf/kernels.hpp"
#include "bpf/lanczos.hpp"

namespace bpf {

namespace {

std::span<const double> as_span(const RealVector& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

// Fills values[k] for upper-triangle entries from `entry(row, k)` and mirrors
// the conjugate into the lower triangle, so the result is exactly Hermitian.
template <class Entry>
void hermitian_fill(const CsrPattern& p, std::vector<cplx>& values, Entry&& entry) {
  values.assign(p.nnz(), cplx(0.0, 0.0));
#ifdef BPF_HAVE_OPENMP
#pragma omp parallel for schedule(static) if (static_cast<std::size_t>(p.n) >= kernels::kParallelThreshold)
#endif
  for (int row = 0; row < p.n; ++row) {
    for (int k = p.row_ptr[row]; k < p.row_ptr[row + 1]; ++k) {
      const int c = p.col[k];
      if (c < row) continue;
      const cplx v = entry(row, k);
      if (c == row) {
        values[k] = cplx(v.real(), 0.0);
      } else {
        values[k] = v;
        values[p.mirror[k]] = std::conj(v);
      }
    }
  }
}

constexpr cplx kHalfI(0.0, 0.5);

// Contribution of A*(y) at (row, col) given the Y entries Y_rc and Y_cr.
inline cplx a_star_entry(const cplx& y_rc, const cplx& y_cr, double a_r, double a_c, double b_r,
                         double b_c) {
  const cplx yh_rc = std::conj(y_cr);  // (Y^H)_{rc}
  return 0.5 * (yh_rc * a_c + a_r * y_rc) - kHalfI * (yh_rc * b_c - b_r * y_rc);
}

void check_y_length(const ComplexCsr& admittance, const RealVector& y) {
  if (y.size() != 6 * static_cast<Eigen::Index>(admittance.n())) {
    std::ostringstream os;
    os << "dual vector has length " << y.size() << ", expected " << 6 * admittance.n();
    throw ValidationError(os.str());
  }
}

}  // namespace

// ---------------------------------------------------------------------------

DualPoint& DualPoint::operator+=(const DualPoint& o) {
  y += o.y;
  gamma += o.gamma;
  return *this;
}

DualPoint& DualPoint::operator-=(const DualPoint& o) {
  y -= o.y;
  gamma -= o.gamma;
  return *this;
}

DualPoint& DualPoint::operator*=(double s) {
  y *= s;
  gamma *= s;
  return *this;
}

bool DualPoint::in_box(double beta, double tol) const {
  return (y.array() >= -tol).all() && (y.array() <= beta + tol).all();
}

double trace_product(const Herm3& a, const Herm3& b) {
  double s = 0.0;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) s += (a(i, j) * b(j, i)).real();
  }
  return s;
}

double inner(const DualPoint& a, const DualPoint& b) {
  return kernels::dot(as_span(a.y), as_span(b.y)) + trace_product(a.gamma, b.gamma);
}

double squared_norm(const DualPoint& a) { return inner(a, a); }

// ---------------------------------------------------------------------------

RealVector apply_A_rank1(const ComplexCsr& admittance, const ComplexVector& v) {
  const int n = admittance.n();
  if (v.size() != n) throw ValidationError("apply_A_rank1: vector length mismatch");
  ComplexVector yv(n), p(n);
  admittance.multiply({v.data(), static_cast<std::size_t>(n)}, {yv.data(), static_cast<std::size_t>(n)});
  kernels::rank1_injection({v.data(), static_cast<std::size_t>(n)},
                           {yv.data(), static_cast<std::size_t>(n)},
                           {p.data(), static_cast<std::size_t>(n)});
  RealVector out(6 * n);
  for (int j = 0; j < n; ++j) {
    const double re = p[j].real(), im = p[j].imag(), d = std::norm(v[j]);
    out[j] = re;
    out[n + j] = -re;
    out[2 * n + j] = im;
    out[3 * n + j] = -im;
    out[4 * n + j] = d;
    out[5 * n + j] = -d;
  }
  return out;
}

ComplexCsr apply_A_star(const ComplexCsr& admittance, const RealVector& y) {
  check_y_length(admittance, y);
  const int n = admittance.n();
  const RealVector a = y.segment(0, n) - y.segment(n, n);
  const RealVector b = y.segment(2 * n, n) - y.segment(3 * n, n);
  const RealVector d = y.segment(4 * n, n) - y.segment(5 * n, n);
  const CsrPattern& p = *admittance.pattern;
  const auto& yval = admittance.values;
  ComplexCsr out{admittance.pattern, {}};
  hermitian_fill(p, out.values, [&](int row, int k) {
    const int c = p.col[k];
    cplx v = a_star_entry(yval[k], yval[p.mirror[k]], a[row], a[c], b[row], b[c]);
    if (c == row) v += d[row];
    return v;
  });
  return out;
}

ComplexCsr apply_B_star(std::shared_ptr<const CsrPattern> pattern, const Herm3& gamma,
                        bool strict) {
  const double defect = (gamma - gamma.adjoint()).cwiseAbs().maxCoeff();
  Herm3 g = gamma;
  if (defect > 0.0) {
    if (strict) throw ValidationError("apply_B_star: gamma is not Hermitian");
    std::cerr << "warning: apply_B_star symmetrized a non-Hermitian gamma (defect " << defect
              << ")\n";
    g = 0.5 * (gamma + gamma.adjoint());
  }
  const CsrPattern& p = *pattern;
  ComplexCsr out{std::move(pattern), {}};
  hermitian_fill(p, out.values, [&](int row, int k) {
    const int c = p.col[k];
    return (row < 3 && c < 3) ? g(row, c) : cplx(0.0, 0.0);
  });
  return out;
}

RealVector m_of_u(const RealVector& u, const OperatingLimits& limits) {
  const Eigen::Index n = u.size();
  const RealVector* all[] = {&limits.p_upper, &limits.p_lower, &limits.q_upper,
                             &limits.q_lower, &limits.v_upper, &limits.v_lower};
  for (const RealVector* v : all) {
    if (v->size() != n) throw ValidationError("m_of_u: injection and limit lengths differ");
  }
  RealVector m(6 * n);
  m.segment(0, n) = -u - limits.p_upper;
  m.segment(n, n) = u + limits.p_lower;
  m.segment(2 * n, n) = -limits.q_upper;
  m.segment(3 * n, n) = limits.q_lower;
  m.segment(4 * n, n) = -limits.v_upper;
  m.segment(5 * n, n) = limits.v_lower;
  return m;
}

// ---------------------------------------------------------------------------

namespace {

EigenResult dense_lambda_max_neg(const ComplexCsr& a, int nev) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(-a.to_dense());
  if (es.info() != Eigen::Success) throw ConvergenceError("dense eigensolver failed", 0.0);
  const int n = a.n();
  EigenResult r;
  r.value = es.eigenvalues()[n - 1];
  r.vector = es.eigenvectors().col(n - 1);
  normalize_phase(r.vector);
  if (nev > 1 && n > 1) r.second_value = es.eigenvalues()[n - 2];
  const ComplexVector av = a * r.vector;
  r.residual = (-av - r.value * r.vector).norm();
  r.dense_fallback = true;
  return r;
}

}  // namespace

EigenResult lambda_max_neg(const ComplexCsr& a, const EigenOptions& options, int nev) {
  const int n = a.n();
  LanczosOptions lo;
  lo.krylov_dim = options.krylov_dim;
  lo.max_restarts = options.max_restarts;
  lo.tol = options.tol;
  lo.seed = options.seed;
  lo.nev = std::min(nev, n);
  const kernels::CsrView view = a.view();
  LanczosResult lr = lanczos_largest(
      n, [&](std::span<const cplx> x, std::span<cplx> y) { kernels::csr_matvec_neg(view, x, y); },
      lo);
  if (!lr.converged) {
    if (n <= options.dense_threshold) {
      EigenResult r = dense_lambda_max_neg(a, nev);
      r.matvecs = lr.matvecs;
      return r;
    }
    std::ostringstream os;
    os << "Lanczos did not converge after " << lr.restarts << " restarts (dimension " << n
       << ", residual " << lr.residuals.front() << ", tol " << options.tol << ")";
    throw ConvergenceError(os.str(), lr.residuals.front());
  }
  EigenResult r;
  r.value = lr.values.front();
  r.vector = std::move(lr.vectors.front());
  r.residual = lr.residuals.front();
  if (lr.values.size() > 1) r.second_value = lr.values[1];
  r.matvecs = lr.matvecs;
  return r;
}

// ---------------------------------------------------------------------------

PenaltyObjective::PenaltyObjective(NetworkData data, RealVector u, double alpha, double beta)
    : data_(std::move(data)), u_(std::move(u)), alpha_(alpha), beta_(beta) {
  data_.network.validate();
  data_.limits.validate(data_.network.n_buses);
  if (u_.size() != dim()) {
    std::ostringstream os;
    os << "injection vector has length " << u_.size() << ", expected " << dim();
    throw ValidationError(os.str());
  }
  if (!u_.allFinite()) throw ValidationError("injection vector has non-finite entries");
  if (!(alpha_ > 0.0)) throw ValidationError("penalty weight alpha must be positive");
  if (!(beta_ > 0.0)) throw ValidationError("box bound beta must be positive");

  auto pattern = CsrPattern::from_network(data_.network);
  admittance_ = assemble_admittance(data_.network, pattern);
  cost_ = ComplexCsr{pattern, {}};
  const auto& yv = admittance_.values;
  hermitian_fill(*pattern, cost_.values,
                 [&](int, int k) { return 0.5 * (yv[k] + std::conj(yv[pattern->mirror[k]])); });
  m_ = m_of_u(u_, data_.limits);
  const Eigen::Vector3cd& v1 = data_.network.slack_voltage;
  m1_ = v1 * v1.adjoint();
}

ComplexCsr PenaltyObjective::assemble_H(const DualPoint& x) const {
  check_y_length(admittance_, x.y);
  const int n = dim();
  const RealVector a = x.y.segment(0, n) - x.y.segment(n, n);
  const RealVector b = x.y.segment(2 * n, n) - x.y.segment(3 * n, n);
  const RealVector d = x.y.segment(4 * n, n) - x.y.segment(5 * n, n);
  const CsrPattern& p = *admittance_.pattern;
  const auto& yval = admittance_.values;
  const auto& cval = cost_.values;
  const Herm3& g = x.gamma;
  ComplexCsr h{admittance_.pattern, {}};
  hermitian_fill(p, h.values, [&](int row, int k) {
    const int c = p.col[k];
    cplx v = cval[k] + a_star_entry(yval[k], yval[p.mirror[k]], a[row], a[c], b[row], b[c]);
    if (c == row) v += d[row];
    if (row < 3 && c < 3) v += g(row, c);
    return v;
  });
  return h;
}

double PenaltyObjective::linear_part(const DualPoint& x) const {
  return -kernels::dot(as_span(m_), as_span(x.y)) + trace_product(x.gamma, m1_);
}

DualPoint PenaltyObjective::linear_slope() const { return {-m_, m1_}; }

Evaluation evaluate(const PenaltyObjective& problem, const DualPoint& x,
                    const EigenOptions& options) {
  Evaluation e;
  e.eig = lambda_max_neg(problem.assemble_H(x), options);
  e.linear = problem.linear_part(x);
  e.f_lambda = e.linear + problem.alpha() * e.eig.value;
  e.f = e.linear + problem.alpha() * std::max(e.eig.value, 0.0);
  return e;
}

double eval_f(const PenaltyObjective& problem, const DualPoint& x, const EigenOptions& options) {
  return evaluate(problem, x, options).f;
}

double eval_f_lambda(const PenaltyObjective& problem, const DualPoint& x,
                     const EigenOptions& options) {
  return evaluate(problem, x, options).f_lambda;
}

DualPoint subgradient(const PenaltyObjective& problem, const EigenResult& eig,
                      double residual_tol) {
  if (eig.vector.size() != problem.dim()) {
    throw ValidationError("subgradient: eigenvector has the wrong dimension");
  }
  if (!(eig.residual <= residual_tol)) {
    std::ostringstream os;
    os << "subgradient: stale eigenpair (residual " << eig.residual << " > " << residual_tol << ")";
    throw ConvergenceError(os.str(), eig.residual);
  }
  const double alpha = problem.alpha();
  DualPoint g;
  g.y = -problem.m_vector() - alpha * apply_A_rank1(problem.admittance(), eig.vector);
  const Eigen::Vector3cd top = eig.vector.head<3>();
  g.gamma = problem.M1() - alpha * (top * top.adjoint());
  return g;
}

}  // namespace bpf
