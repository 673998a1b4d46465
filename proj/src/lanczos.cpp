#include "bpf/lanczos.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>

namespace bpf {

void normalize_phase(ComplexVector& v) {
  Eigen::Index best = 0;
  double mag = -1.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v[i]) > mag * (1.0 + 1e-12)) {
      mag = std::abs(v[i]);
      best = i;
    }
  }
  if (mag > 0.0) v *= std::conj(v[best]) / mag;
}

namespace {

ComplexVector random_unit(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  ComplexVector v(n);
  for (int i = 0; i < n; ++i) v[i] = cplx(g(rng), g(rng));
  return v / v.norm();
}

// Two passes of classical Gram-Schmidt against the first `cols` columns.
ComplexVector orthogonalize(const Eigen::MatrixXcd& Q, int cols, ComplexVector& w) {
  ComplexVector h = ComplexVector::Zero(cols);
  if (cols == 0) return h;
  for (int pass = 0; pass < 2; ++pass) {
    const ComplexVector c = Q.leftCols(cols).adjoint() * w;
    w.noalias() -= Q.leftCols(cols) * c;
    h += c;
  }
  return h;
}

}  // namespace

LanczosResult lanczos_largest(int n, const HermitianOperator& op, const LanczosOptions& options) {
  if (n <= 0) throw Error("lanczos: dimension must be positive");
  const int nev = std::clamp(options.nev, 1, n);
  const int m = std::min(n, std::max(options.krylov_dim, nev + 2));

  LanczosResult result;
  std::mt19937_64 rng(options.seed);

  Eigen::MatrixXcd Q = Eigen::MatrixXcd::Zero(n, m + 1);
  Eigen::MatrixXcd T = Eigen::MatrixXcd::Zero(m + 1, m + 1);  // lower triangle used
  Q.col(0) = random_unit(n, rng);

  ComplexVector w(n), av(n);
  auto apply = [&](const ComplexVector& x, ComplexVector& y) {
    op({x.data(), static_cast<std::size_t>(n)}, {y.data(), static_cast<std::size_t>(n)});
    ++result.matvecs;
  };

  int kept = 0;
  for (int restart = 0;; ++restart) {
    result.restarts = restart;
    int used = m;         // basis size represented in T
    bool exhausted = false;  // Krylov space is invariant; Ritz pairs exact
    double beta_last = 0.0;

    for (int j = kept; j < m; ++j) {
      const ComplexVector qj = Q.col(j);
      apply(qj, w);
      const ComplexVector h = orthogonalize(Q, j + 1, w);
      for (int i = 0; i < j; ++i) T(j, i) = std::conj(h[i]);
      T(j, j) = h[j].real();
      const double beta = w.norm();
      const double scale = std::max(1.0, T.block(0, 0, j + 1, j + 1).cwiseAbs().maxCoeff());
      if (beta <= 1e-13 * scale) {
        if (j + 1 == n) {
          used = j + 1;
          exhausted = true;
          break;
        }
        // Invariant subspace found early: continue from a fresh direction.
        ComplexVector fresh = random_unit(n, rng);
        orthogonalize(Q, j + 1, fresh);
        Q.col(j + 1) = fresh / fresh.norm();
        T(j + 1, j) = 0.0;
        beta_last = 0.0;
      } else {
        Q.col(j + 1) = w / beta;
        T(j + 1, j) = beta;
        beta_last = beta;
      }
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(T.topLeftCorner(used, used));
    const Eigen::VectorXd& theta = es.eigenvalues();  // ascending
    const Eigen::MatrixXcd& S = es.eigenvectors();
    const int want = std::min(nev, used);

    bool estimates_ok = true;
    for (int r = 0; r < want; ++r) {
      const int idx = used - 1 - r;
      const double est = exhausted ? 0.0 : beta_last * std::abs(S(used - 1, idx));
      if (est > options.tol) estimates_ok = false;
    }

    const bool last_round = restart >= options.max_restarts;
    if (estimates_ok || exhausted || last_round) {
      result.values.clear();
      result.vectors.clear();
      result.residuals.clear();
      bool all_ok = true;
      for (int r = 0; r < want; ++r) {
        const int idx = used - 1 - r;
        ComplexVector v = Q.leftCols(used) * S.col(idx);
        v /= v.norm();
        normalize_phase(v);
        apply(v, av);
        const double res = (av - theta[idx] * v).norm();
        if (res > options.tol) all_ok = false;
        result.values.push_back(theta[idx]);
        result.vectors.push_back(std::move(v));
        result.residuals.push_back(res);
      }
      if (all_ok || last_round) {
        result.converged = all_ok;
        return result;
      }
      // Estimates were optimistic (rounding); fall through and restart.
    }

    // Thick restart: keep the top Ritz vectors plus the residual direction.
    const int keep = std::clamp(m / 2, want, std::max(want, used - 2));
    Eigen::MatrixXcd ritz(n, keep);
    for (int r = 0; r < keep; ++r) ritz.col(r) = Q.leftCols(used) * S.col(used - 1 - r);
    const ComplexVector residual_dir = Q.col(used);
    T.setZero();
    for (int r = 0; r < keep; ++r) {
      T(r, r) = theta[used - 1 - r];
      T(keep, r) = beta_last * S(used - 1, used - 1 - r);
    }
    Q.leftCols(keep) = ritz;
    Q.col(keep) = residual_dir;
    if (beta_last == 0.0) {
      // Residual direction carries no coupling; orthonormalize it explicitly.
      ComplexVector fresh = Q.col(keep);
      orthogonalize(Q, keep, fresh);
      Q.col(keep) = fresh / fresh.norm();
    }
    kept = keep;
  }
}

}  // namespace bpf
