#include "bpf/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Eigenvalues>

namespace bpf::oracle {

namespace {

constexpr int kMaxAMatrixDim = 90;

double plain_dot(const RealVector& a, const RealVector& b) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double plain_trace(const Herm3& a, const Herm3& b) {
  cplx s(0.0, 0.0);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) s += a(i, j) * b(j, i);
  }
  return s.real();
}

double plain_inner(const DualPoint& a, const DualPoint& b) {
  return plain_dot(a.y, b.y) + plain_trace(a.gamma, b.gamma);
}

}  // namespace

DenseProblem::DenseProblem(const PenaltyObjective& problem, bool build_A_matrix) {
  const ThreePhaseNetwork& net = problem.data().network;
  const int n = net.dim();
  if (n > kMaxDenseDim) {
    std::ostringstream os;
    os << "DenseProblem: dimension " << n << " exceeds " << kMaxDenseDim;
    throw Error(os.str());
  }
  Y_ = net.dense_admittance();
  C_ = 0.5 * (Y_ + Y_.adjoint());
  if (!build_A_matrix) return;
  if (n > kMaxAMatrixDim) throw Error("DenseProblem: A matrix requested for a large network");

  A_.setZero(6 * n, static_cast<Eigen::Index>(n) * n);
  for (int l = 0; l < n * n; ++l) {
    const Eigen::MatrixXcd E = hermitian_basis(l);
    // P_r = sum_k E_rk conj(Y_rk), restricted to the nonzeros of E.
    Eigen::VectorXcd P = Eigen::VectorXcd::Zero(n);
    for (int r = 0; r < n; ++r) {
      for (int k = 0; k < n; ++k) {
        if (E(r, k) != cplx(0.0, 0.0)) P[r] += E(r, k) * std::conj(Y_(r, k));
      }
    }
    for (int r = 0; r < n; ++r) {
      A_(r, l) = P[r].real();
      A_(n + r, l) = -P[r].real();
      A_(2 * n + r, l) = P[r].imag();
      A_(3 * n + r, l) = -P[r].imag();
      A_(4 * n + r, l) = E(r, r).real();
      A_(5 * n + r, l) = -E(r, r).real();
    }
  }
}

Eigen::MatrixXcd DenseProblem::hermitian_basis(int l) const {
  const int n = dim();
  Eigen::MatrixXcd E = Eigen::MatrixXcd::Zero(n, n);
  if (l < n) {
    E(l, l) = 1.0;
    return E;
  }
  int idx = l - n;
  const double s = 1.0 / std::sqrt(2.0);
  for (int j = 0; j < n; ++j) {
    for (int k = j + 1; k < n; ++k) {
      if (idx == 0) {
        E(j, k) = s;
        E(k, j) = s;
        return E;
      }
      if (idx == 1) {
        E(j, k) = cplx(0.0, s);
        E(k, j) = cplx(0.0, -s);
        return E;
      }
      idx -= 2;
    }
  }
  throw Error("hermitian_basis: index out of range");
}

RealVector DenseProblem::A(const Eigen::MatrixXcd& W) const {
  const int n = dim();
  const Eigen::VectorXcd P = (W * Y_.adjoint()).diagonal();
  RealVector out(6 * n);
  for (int r = 0; r < n; ++r) {
    out[r] = P[r].real();
    out[n + r] = -P[r].real();
    out[2 * n + r] = P[r].imag();
    out[3 * n + r] = -P[r].imag();
    out[4 * n + r] = W(r, r).real();
    out[5 * n + r] = -W(r, r).real();
  }
  return out;
}

Eigen::MatrixXcd DenseProblem::A_star(const RealVector& y) const {
  if (A_.size() == 0) throw Error("DenseProblem: A matrix was not built");
  const RealVector coeff = A_.transpose() * y;
  const int n = dim();
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(n, n);
  for (int l = 0; l < n * n; ++l) out += coeff[l] * hermitian_basis(l);
  return out;
}

Eigen::MatrixXcd DenseProblem::H(const DualPoint& x) const {
  Eigen::MatrixXcd h = C_ + A_star(x.y);
  h.topLeftCorner<3, 3>() += x.gamma;
  return h;
}

DensePair dense_lambda_max(const Eigen::MatrixXcd& a) {
  if (a.rows() != a.cols()) throw Error("dense_lambda_max: matrix is not square");
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  if ((a - a.adjoint()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw Error("dense_lambda_max: matrix is not Hermitian");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(a);
  if (es.info() != Eigen::Success) throw Error("dense_lambda_max: eigensolver failed");
  const Eigen::Index last = a.rows() - 1;
  DensePair out{es.eigenvalues()[last], es.eigenvectors().col(last)};
  Eigen::Index best = 0;
  double mag = -1.0;
  for (Eigen::Index i = 0; i < out.vector.size(); ++i) {
    if (std::abs(out.vector[i]) > mag * (1.0 + 1e-12)) {
      mag = std::abs(out.vector[i]);
      best = i;
    }
  }
  out.vector *= std::conj(out.vector[best]) / mag;
  return out;
}

double dense_f(const PenaltyObjective& problem, const DenseProblem& dense, const DualPoint& x) {
  const DensePair top = dense_lambda_max(-dense.H(x));
  const double linear = -plain_dot(problem.m_vector(), x.y) + plain_trace(x.gamma, problem.M1());
  return linear + problem.alpha() * std::max(top.value, 0.0);
}

// ---------------------------------------------------------------------------

namespace {

class QpEvaluator {
 public:
  explicit QpEvaluator(const ProxProblem& p) : p_(p) {}

  DualPoint point(const std::array<double, 3>& theta) const {
    DualPoint z = p_.center;
    const double inv = 1.0 / p_.rho;
    for (Eigen::Index n = 0; n < z.y.size(); ++n) {
      double v = z.y[n];
      for (int i = 0; i < 3; ++i) v -= inv * theta[i] * p_.cuts[i].slope.y[n];
      z.y[n] = std::min(std::max(v, 0.0), p_.beta);
    }
    for (int i = 0; i < 3; ++i) z.gamma -= (inv * theta[i]) * p_.cuts[i].slope.gamma;
    return z;
  }

  double cut(int i, const DualPoint& z) const {
    return p_.cuts[i].intercept + plain_inner(p_.cuts[i].slope, z);
  }

  double objective(const DualPoint& z) const {
    double r = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < 3; ++i) r = std::max(r, cut(i, z));
    const DualPoint d = z - p_.center;
    return r + 0.5 * p_.rho * plain_inner(d, d);
  }

 private:
  const ProxProblem& p_;
};

// Root of a nonincreasing function on [0, 1], clamped to the endpoints.
template <class F>
double monotone_root(F&& f) {
  if (f(0.0) <= 0.0) return 0.0;
  if (f(1.0) >= 0.0) return 1.0;
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (f(mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

QpResult qp_support_enumeration(const ProxProblem& p) {
  const QpEvaluator ev(p);
  QpResult best;
  best.objective = std::numeric_limits<double>::infinity();

  auto consider = [&](const std::array<double, 3>& theta, int support) {
    DualPoint z = ev.point(theta);
    const double obj = ev.objective(z);
    if (obj < best.objective) {
      best.z = std::move(z);
      best.theta = theta;
      best.objective = obj;
      best.support = support;
    }
  };

  for (int i = 0; i < 3; ++i) {
    std::array<double, 3> theta{0.0, 0.0, 0.0};
    theta[i] = 1.0;
    consider(theta, 1 << i);
  }

  const int pairs[3][2] = {{0, 1}, {0, 2}, {1, 2}};
  for (const auto& pr : pairs) {
    const int i = pr[0], j = pr[1];
    auto theta_of = [&](double s) {
      std::array<double, 3> t{0.0, 0.0, 0.0};
      t[i] = s;
      t[j] = 1.0 - s;
      return t;
    };
    const double s = monotone_root([&](double s) {
      const DualPoint z = ev.point(theta_of(s));
      return ev.cut(i, z) - ev.cut(j, z);
    });
    consider(theta_of(s), (1 << i) | (1 << j));
  }

  // Full support: theta = ((1-t) s, (1-t)(1-s), t). The inner problem in s
  // and the outer problem in t are both concave maximizations whose
  // derivatives are nonincreasing, so nested bisection finds the optimum.
  auto theta_of = [](double t, double s) {
    return std::array<double, 3>{(1.0 - t) * s, (1.0 - t) * (1.0 - s), t};
  };
  auto inner_s = [&](double t) {
    return monotone_root([&](double s) {
      const DualPoint z = ev.point(theta_of(t, s));
      return ev.cut(0, z) - ev.cut(1, z);
    });
  };
  const double t = monotone_root([&](double t) {
    const double s = inner_s(t);
    const DualPoint z = ev.point(theta_of(t, s));
    return ev.cut(2, z) - s * ev.cut(0, z) - (1.0 - s) * ev.cut(1, z);
  });
  consider(theta_of(t, inner_s(t)), 7);
  return best;
}

// ---------------------------------------------------------------------------

SubgradientRun projected_subgradient_reference(const PenaltyObjective& problem, int iters,
                                               double tau0) {
  const DenseProblem dense(problem);
  const double beta = problem.beta();
  const double alpha = problem.alpha();
  const int n = dense.dim();

  DualPoint x{RealVector::Constant(6 * n, 0.5 * beta), Herm3::Zero()};
  SubgradientRun run;
  run.best_f = std::numeric_limits<double>::infinity();
  run.best_history.reserve(iters);

  for (int t = 1; t <= iters; ++t) {
    const DensePair top = dense_lambda_max(-dense.H(x));
    const double linear = -plain_dot(problem.m_vector(), x.y) + plain_trace(x.gamma, problem.M1());
    const double f = linear + alpha * std::max(top.value, 0.0);
    if (f < run.best_f) {
      run.best_f = f;
      run.best = x;
    }
    run.best_history.push_back(run.best_f);

    DualPoint g{-problem.m_vector(), problem.M1()};
    if (top.value > 0.0) {
      const Eigen::MatrixXcd Q = top.vector * top.vector.adjoint();
      g.y -= alpha * dense.A(Q);
      g.gamma -= alpha * Q.topLeftCorner<3, 3>();
    }
    const double tau = tau0 / std::sqrt(static_cast<double>(t));
    for (Eigen::Index k = 0; k < x.y.size(); ++k) {
      x.y[k] = std::min(std::max(x.y[k] - tau * g.y[k], 0.0), beta);
    }
    x.gamma -= tau * g.gamma;
  }
  return run;
}

}  // namespace bpf::oracle
