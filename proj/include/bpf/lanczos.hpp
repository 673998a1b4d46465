#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "bpf/types.hpp"

namespace bpf {

/// y = A x for a Hermitian operator A of dimension n.
using HermitianOperator = std::function<void(std::span<const cplx> x, std::span<cplx> y)>;

struct LanczosOptions {
  int krylov_dim = 60;
  int max_restarts = 50;
  double tol = 1e-9;  // on ||A v - lambda v||_2
  std::uint64_t seed = 0;
  int nev = 1;        // number of largest eigenpairs wanted
};

struct LanczosResult {
  std::vector<double> values;          // descending
  std::vector<ComplexVector> vectors;  // unit norm, largest-magnitude entry real positive
  std::vector<double> residuals;       // explicit ||A v - lambda v||
  int matvecs = 0;
  int restarts = 0;
  bool converged = false;
};

/// Largest eigenpairs of a Hermitian operator by thick-restart Lanczos with
/// full reorthogonalization. The operator is only touched through products.
/// Deterministic for a fixed seed. On non-convergence the best Ritz pairs
/// are returned with converged = false.
LanczosResult lanczos_largest(int n, const HermitianOperator& op, const LanczosOptions& options);

/// Rotates v so its first largest-magnitude entry is real and positive.
void normalize_phase(ComplexVector& v);

}  // namespace bpf
