#pragma once

#include <cstdint>
#include <random>

#include "bpf/bundle.hpp"
#include "bpf/network.hpp"
#include "bpf/operators.hpp"
#include "bpf/prox.hpp"

namespace bpf::testing {

/// Line parameters used for planted instances.
RadialParams planted_params();

/// A network with a voltage profile that satisfies its limits exactly.
struct PlantedInstance {
  NetworkData data;
  ComplexVector voltage;
  RealVector u;
};

/// Radial feeder of n buses, voltage near flat, limits bracketing the
/// planted operating point by `band`.
PlantedInstance planted_feasible(int n_buses, std::uint64_t seed, double band = 0.05,
                                 const RadialParams& params = planted_params());

/// Same network with every non-slack v_upper set to 0.5 and v_lower to 0.
PlantedInstance planted_infeasible(int n_buses, std::uint64_t seed);

/// P = v o conj(Y v) computed densely.
ComplexVector dense_injection(const ThreePhaseNetwork& net, const ComplexVector& v);

/// Random point of X = [0, beta]^{18N} x H^3.
DualPoint random_dual_point(int n_buses, double beta, std::mt19937_64& rng);
ComplexVector random_complex(int n, std::mt19937_64& rng);
Herm3 random_herm3(std::mt19937_64& rng, double scale = 1.0);
Eigen::MatrixXcd random_hermitian(int n, std::mt19937_64& rng);

/// Random cut triple and center for an N-bus sized dual space.
struct RandomProx {
  DualPoint center;
  CutTriple cuts;
  double rho = 4.0;
  double beta = 0.1;
  ProxProblem problem() const { return {center, cuts, rho, beta}; }
};
RandomProx random_prox(int n_buses, std::mt19937_64& rng);

}  // namespace bpf::testing
