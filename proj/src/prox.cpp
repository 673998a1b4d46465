#include "bpf/prox.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/LU>

#include "bpf/kernels.hpp"
#include "bpf/oracle.hpp"

namespace bpf {

namespace {

std::span<const double> cspan(const RealVector& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

std::array<double, 3> cut_values(const CutTriple& cuts, const DualPoint& z) {
  return {cuts[0](z), cuts[1](z), cuts[2](z)};
}

double max3(const std::array<double, 3>& v) { return std::max({v[0], v[1], v[2]}); }

ProxSolution make_solution(const ProxProblem& p, DualPoint z, const SimplexWeights& w,
                           ProxCase which) {
  ProxSolution s;
  s.model_value = max3(cut_values(p.cuts, z));
  const DualPoint d = z - p.center;
  s.objective = s.model_value + 0.5 * p.rho * squared_norm(d);
  s.kkt_residual = kkt_residual(p, z, w);
  s.trial = std::move(z);
  s.weights = w;
  s.case_used = which;
  return s;
}

double accept_slack(const ProxOptions& opt, const std::array<double, 3>& v) {
  return opt.accept_tol * (1.0 + std::abs(max3(v)));
}

}  // namespace

Cut Cut::through(const DualPoint& anchor, double value, DualPoint h, CutKind kind) {
  Cut c;
  c.intercept = value - inner(h, anchor);
  c.slope = std::move(h);
  c.kind = kind;
  return c;
}

SimplexWeights SimplexWeights::vertex(int i) {
  SimplexWeights w;
  w.theta = {0.0, 0.0, 0.0};
  w.theta[i] = 1.0;
  return w;
}

bool SimplexWeights::valid(double tol) const {
  const double sum = theta[0] + theta[1] + theta[2];
  return std::abs(sum - 1.0) <= tol && theta[0] >= 0.0 && theta[1] >= 0.0 && theta[2] >= 0.0;
}

const char* to_string(ProxCase c) {
  switch (c) {
    case ProxCase::vertex: return "vertex";
    case ProxCase::edge: return "edge";
    case ProxCase::interior: return "interior";
  }
  return "?";
}

DualPoint project_X(DualPoint raw, double beta) {
  for (Eigen::Index n = 0; n < raw.y.size(); ++n) raw.y[n] = std::clamp(raw.y[n], 0.0, beta);
  return raw;
}

DualPoint weighted_slope(const CutTriple& c, const SimplexWeights& w) {
  const auto& t = w.theta;
  DualPoint h;
  h.y = t[0] * c[0].slope.y + t[1] * c[1].slope.y + t[2] * c[2].slope.y;
  h.gamma = t[0] * c[0].slope.gamma + t[1] * c[1].slope.gamma + t[2] * c[2].slope.gamma;
  return h;
}

DualPoint recover_trial(const ProxProblem& p, const SimplexWeights& w) {
  const DualPoint h = weighted_slope(p.cuts, w);
  DualPoint z;
  z.y.resize(p.center.y.size());
  kernels::shifted_clip(cspan(p.center.y), cspan(h.y), 1.0 / p.rho, 0.0, p.beta,
                        {z.y.data(), static_cast<std::size_t>(z.y.size())});
  z.gamma = p.center.gamma - h.gamma / p.rho;
  return z;
}

double prox_objective(const ProxProblem& p, const DualPoint& z) {
  const DualPoint d = z - p.center;
  return max3(cut_values(p.cuts, z)) + 0.5 * p.rho * squared_norm(d);
}

double kkt_residual(const ProxProblem& p, const DualPoint& z, const SimplexWeights& w) {
  const DualPoint expected = recover_trial(p, w);
  const DualPoint diff = z - expected;
  const double proj = std::sqrt(squared_norm(diff)) / (1.0 + std::sqrt(squared_norm(z)));

  const auto& t = w.theta;
  double simplex = std::abs(t[0] + t[1] + t[2] - 1.0);
  for (double ti : t) simplex = std::max(simplex, -ti);

  const auto v = cut_values(p.cuts, z);
  const double r = max3(v);
  double comp = 0.0;
  for (int i = 0; i < 3; ++i) comp = std::max(comp, std::abs(t[i]) * (r - v[i]));
  comp /= 1.0 + std::abs(r);
  return std::max({proj, simplex, comp});
}

// -- case 1 -----------------------------------------------------------------

std::optional<ProxSolution> case1_vertex(const ProxProblem& p, const ProxOptions& opt,
                                         ProxDiagnostics* diag) {
  for (int i = 0; i < 3; ++i) {
    if (diag) ++diag->vertex_tests;
    const SimplexWeights w = SimplexWeights::vertex(i);
    DualPoint z = recover_trial(p, w);
    const auto v = cut_values(p.cuts, z);
    if (v[i] >= max3(v) - accept_slack(opt, v)) return make_solution(p, std::move(z), w, ProxCase::vertex);
  }
  return std::nullopt;
}

// -- case 2 -----------------------------------------------------------------

namespace {

SimplexWeights edge_weights(int i, int j, double s) {
  SimplexWeights w;
  w.theta = {0.0, 0.0, 0.0};
  w.theta[i] = s;
  w.theta[j] = 1.0 - s;
  return w;
}

}  // namespace

double edge_phi(const ProxProblem& p, int i, int j, double s) {
  const DualPoint z = recover_trial(p, edge_weights(i, j, s));
  return p.cuts[i](z) - p.cuts[j](z);
}

std::optional<ProxSolution> case2_edge_sweep(const ProxProblem& p, int i, int j,
                                             const ProxOptions& opt, ProxDiagnostics* diag,
                                             EdgeSweepTrace* trace) {
  if (i == j || i < 0 || j < 0 || i > 2 || j > 2) throw Error("case2_edge_sweep: bad edge");
  if (diag) ++diag->edge_tests;
  const int m = 3 - i - j;
  const double rho = p.rho, beta = p.beta;
  const RealVector& c = p.center.y;
  const RealVector& hj = p.cuts[j].slope.y;
  const RealVector D = p.cuts[i].slope.y - hj;
  const Herm3 DG = p.cuts[i].slope.gamma - p.cuts[j].slope.gamma;
  const double gamma_part = trace_product(DG, DG);
  const Eigen::Index n = c.size();

  double A = edge_phi(p, i, j, 0.0);
  if (trace) trace->knots.push_back(0.0);
  if (A < 0.0) return std::nullopt;

  // Breakpoints where the pre-projection value u_n(s) meets 0 or beta.
  std::vector<std::pair<double, Eigen::Index>> events;
  std::vector<char> is_free(n);
  double free_sum = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    const double u0 = c[k] - hj[k] / rho;
    const double du = -D[k] / rho;
    is_free[k] = (u0 > 0.0 || (u0 == 0.0 && du > 0.0)) && (u0 < beta || (u0 == beta && du < 0.0));
    if (is_free[k]) free_sum += D[k] * D[k];
    if (D[k] == 0.0) continue;
    const double s0 = (rho * c[k] - hj[k]) / D[k];
    const double sb = (rho * c[k] - hj[k] - rho * beta) / D[k];
    if (s0 > 0.0 && s0 < 1.0) events.emplace_back(s0, k);
    if (sb > 0.0 && sb < 1.0) events.emplace_back(sb, k);
  }
  std::sort(events.begin(), events.end());
  if (diag) diag->breakpoints += static_cast<int>(events.size());

  auto slope_B = [&] { return (std::max(free_sum, 0.0) + gamma_part) / rho; };

  double s_prev = 0.0;
  std::size_t e = 0;
  std::optional<double> root;
  while (true) {
    const double s_next = e < events.size() ? events[e].first : 1.0;
    const double B = slope_B();
    const double A_end = A - B * (s_next - s_prev);
    if (trace) {
      trace->slopes.push_back(-B);
      trace->knots.push_back(s_next);
    }
    if (A_end > 0.0) {
      if (e >= events.size()) break;  // phi(1) > 0: no root on this edge
      for (; e < events.size() && events[e].first == s_next; ++e) {
        const Eigen::Index k = events[e].second;
        const double sq = D[k] * D[k];
        free_sum += is_free[k] ? -sq : sq;
        is_free[k] = !is_free[k];
      }
      A = A_end;
      s_prev = s_next;
      continue;
    }

    // Root in [s_prev, s_next]. Recompute the segment exactly before solving.
    const double mid = 0.5 * (s_prev + s_next);
    const DualPoint zm = recover_trial(p, edge_weights(i, j, mid));
    double exact_sum = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) {
      if (zm.y[k] > 0.0 && zm.y[k] < beta) exact_sum += D[k] * D[k];
    }
    const double B_exact = (exact_sum + gamma_part) / rho;
    const double A_exact = s_prev == 0.0 ? A : edge_phi(p, i, j, s_prev);
    if (B_exact > 0.0) {
      root = std::clamp(s_prev + A_exact / B_exact, s_prev, s_next);
    } else {
      root = mid;  // flat segment with phi == 0 throughout
    }
    break;
  }
  if (trace) trace->root = root;
  if (!root || !(*root > 0.0 && *root < 1.0)) return std::nullopt;

  const SimplexWeights w = edge_weights(i, j, *root);
  DualPoint z = recover_trial(p, w);
  const auto v = cut_values(p.cuts, z);
  if (v[m] > std::max(v[i], v[j]) + accept_slack(opt, v)) return std::nullopt;
  return make_solution(p, std::move(z), w, ProxCase::edge);
}

// -- case 3 -----------------------------------------------------------------

ProxSolution case3_interior_newton(const ProxProblem& p, const ProxOptions& opt,
                                   ProxDiagnostics* diag) {
  const CutTriple& cuts = p.cuts;
  const DualPoint d1 = cuts[0].slope - cuts[2].slope;
  const DualPoint d2 = cuts[1].slope - cuts[2].slope;
  const double tolF = opt.newton_tol_factor *
                      (1.0 + std::abs(cuts[0].intercept) + std::abs(cuts[1].intercept) +
                       std::abs(cuts[2].intercept));
  const double g11 = trace_product(d1.gamma, d1.gamma);
  const double g12 = trace_product(d1.gamma, d2.gamma);
  const double g22 = trace_product(d2.gamma, d2.gamma);

  auto weights = [](const Eigen::Vector2d& t) {
    SimplexWeights w;
    w.theta = {t[0], t[1], 1.0 - t[0] - t[1]};
    return w;
  };
  auto residual = [&](const Eigen::Vector2d& t, DualPoint* z_out) {
    DualPoint z = recover_trial(p, weights(t));
    const auto v = cut_values(cuts, z);
    if (z_out) *z_out = std::move(z);
    return Eigen::Vector2d(v[0] - v[2], v[1] - v[2]);
  };
  auto interior = [](const Eigen::Vector2d& t) {
    return t[0] > 0.0 && t[1] > 0.0 && t[0] + t[1] < 1.0;
  };

  ProxDiagnostics local;
  ProxDiagnostics& dg = diag ? *diag : local;

  Eigen::Vector2d theta(1.0 / 3.0, 1.0 / 3.0);
  DualPoint z;
  Eigen::Vector2d F = residual(theta, &z);
  bool converged = F.norm() <= tolF;
  const double beta = p.beta;

  for (int it = 0; it < opt.newton_max_iters && !converged; ++it) {
    ++dg.newton_iterations;
    // Generalized Jacobian with the projection mask taken at z(theta).
    double s11 = g11, s12 = g12, s22 = g22;
    for (Eigen::Index k = 0; k < z.y.size(); ++k) {
      if (z.y[k] > 0.0 && z.y[k] < beta) {
        s11 += d1.y[k] * d1.y[k];
        s12 += d1.y[k] * d2.y[k];
        s22 += d2.y[k] * d2.y[k];
      }
    }
    Eigen::Matrix2d J;
    J << s11, s12, s12, s22;
    J *= -1.0 / p.rho;

    const double fnorm = F.norm();
    const double jscale = std::max(J.cwiseAbs().maxCoeff(), 1e-300);
    double mu = 0.0;
    bool stepped = false;
    while (!stepped) {
      const Eigen::Matrix2d M = J - mu * Eigen::Matrix2d::Identity();
      const double det = M.determinant();
      if (std::abs(det) <= 1e-14 * jscale * jscale) {
        mu = mu == 0.0 ? opt.damping_start * jscale : mu * 10.0;
        if (mu > opt.damping_max * jscale) break;
        continue;
      }
      const Eigen::Vector2d dir = M.inverse() * (-F);
      for (double tau = 1.0; tau >= 1e-12; tau *= 0.5) {
        const Eigen::Vector2d cand = theta + tau * dir;
        if (!interior(cand)) continue;
        DualPoint zc;
        const Eigen::Vector2d Fc = residual(cand, &zc);
        if (Fc.norm() <= (1.0 - 1e-4 * tau) * fnorm) {
          theta = cand;
          z = std::move(zc);
          F = Fc;
          stepped = true;
          break;
        }
      }
      if (stepped) break;
      mu = mu == 0.0 ? opt.damping_start * jscale : mu * 10.0;
      if (mu > opt.damping_max * jscale) break;
    }
    if (!stepped) break;
    converged = F.norm() <= tolF;
  }

  if (converged) return make_solution(p, std::move(z), weights(theta), ProxCase::interior);

  dg.newton_fallback = true;
  oracle::QpResult exact = oracle::qp_support_enumeration(p);
  SimplexWeights w;
  w.theta = exact.theta;
  ProxSolution s = make_solution(p, std::move(exact.z), w, ProxCase::interior);
  return s;
}

// ---------------------------------------------------------------------------

ProxSolution solve_prox(const ProxProblem& p, const ProxOptions& opt) {
  if (!(p.rho > 0.0)) throw Error("solve_prox: rho must be positive");
  ProxDiagnostics diag;
  std::optional<ProxSolution> s = case1_vertex(p, opt, &diag);
  if (!s) {
    constexpr int edges[3][2] = {{0, 1}, {0, 2}, {1, 2}};
    for (const auto& ed : edges) {
      // The sweep runs along theta_i = s; orient each edge so phi starts >= 0.
      s = case2_edge_sweep(p, ed[0], ed[1], opt, &diag);
      if (!s) s = case2_edge_sweep(p, ed[1], ed[0], opt, &diag);
      if (s) break;
    }
  }
  if (!s) s = case3_interior_newton(p, opt, &diag);
  s->diagnostics = diag;
  return *s;
}

}  // namespace bpf
