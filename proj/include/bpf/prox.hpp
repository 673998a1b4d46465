#pragma once

#include <array>
#include <optional>
#include <vector>

#include "bpf/operators.hpp"

namespace bpf {

enum class CutKind { fixed, current, aggregate };

/// Affine function l(x) = a + <h, x>.
struct Cut {
  double intercept = 0.0;
  DualPoint slope;
  CutKind kind = CutKind::fixed;

  double operator()(const DualPoint& x) const { return intercept + inner(slope, x); }

  /// The cut with slope h passing through (anchor, value).
  static Cut through(const DualPoint& anchor, double value, DualPoint h, CutKind kind);
};

/// Ordered (fixed, current, aggregate).
using CutTriple = std::array<Cut, 3>;

struct SimplexWeights {
  std::array<double, 3> theta{1.0, 0.0, 0.0};

  static SimplexWeights vertex(int i);
  bool valid(double tol = 1e-12) const;
};

enum class ProxCase { vertex, edge, interior };
const char* to_string(ProxCase c);

struct ProxDiagnostics {
  int vertex_tests = 0;
  int edge_tests = 0;
  int breakpoints = 0;
  int newton_iterations = 0;
  bool newton_fallback = false;
};

struct ProxSolution {
  DualPoint trial;
  SimplexWeights weights;
  ProxCase case_used = ProxCase::vertex;
  double model_value = 0.0;  // max_i l_i(trial)
  double objective = 0.0;    // model_value + rho/2 ||trial - center||^2
  double kkt_residual = 0.0;
  ProxDiagnostics diagnostics;
};

struct ProxOptions {
  /// Relative slack in the vertex/edge acceptance comparisons.
  double accept_tol = 1e-12;
  int newton_max_iters = 200;
  double newton_tol_factor = 1e-10;
  double damping_start = 1e-8;
  double damping_max = 1e-2;
};

/// The subproblem data: min_{x in X, r} r + rho/2 ||x - center||^2 with
/// l_i(x) <= r for the three cuts.
struct ProxProblem {
  const DualPoint& center;
  const CutTriple& cuts;
  double rho;
  double beta;
};

/// Clips y to [0, beta]; gamma unchanged.
DualPoint project_X(DualPoint raw, double beta);

/// sum_i theta_i h_i, combined elementwise in cut order.
DualPoint weighted_slope(const CutTriple& cuts, const SimplexWeights& w);

/// Pi_X(center - (1/rho) sum_i theta_i h_i)
DualPoint recover_trial(const ProxProblem& p, const SimplexWeights& w);

double prox_objective(const ProxProblem& p, const DualPoint& z);

/// Largest violation of the optimality certificate at (z, theta), scaled by
/// 1 + |r|: projection mismatch, simplex membership, complementarity.
double kkt_residual(const ProxProblem& p, const DualPoint& z, const SimplexWeights& w);

std::optional<ProxSolution> case1_vertex(const ProxProblem& p, const ProxOptions& opt = {},
                                         ProxDiagnostics* diag = nullptr);

/// Piecewise-linear segments of phi_ij visited by the sweep.
struct EdgeSweepTrace {
  std::vector<double> knots;   // s_0 = 0 < s_1 < ... (as far as the sweep went)
  std::vector<double> slopes;  // -B_p on each visited segment
  std::optional<double> root;
};

/// phi_ij(s) = l_i(z(s)) - l_j(z(s)) with theta = s e_i + (1 - s) e_j.
double edge_phi(const ProxProblem& p, int i, int j, double s);

std::optional<ProxSolution> case2_edge_sweep(const ProxProblem& p, int i, int j,
                                             const ProxOptions& opt = {},
                                             ProxDiagnostics* diag = nullptr,
                                             EdgeSweepTrace* trace = nullptr);

/// Interior case by semismooth Newton on F(theta1, theta2) = 0. Falls back
/// to the exact support enumeration if Newton stalls.
ProxSolution case3_interior_newton(const ProxProblem& p, const ProxOptions& opt = {},
                                   ProxDiagnostics* diag = nullptr);

/// Vertices, then edges (1,2), (1,3), (2,3), then the interior.
ProxSolution solve_prox(const ProxProblem& p, const ProxOptions& opt = {});

}  // namespace bpf
