#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>

#include <Eigen/Core>

#include "bpf/types.hpp"

namespace bpf {

enum class Topology { radial, meshed, unknown };

std::string to_string(Topology t);
Topology topology_from_string(const std::string& s);

/// 3x3 complex admittance block, per-unit siemens.
using Block = Eigen::Matrix3cd;

/// Bus pair in 0-based assembled ordering. Bus 0 is the slack bus.
using BusPair = std::pair<int, int>;

/// [1, e^{-i2pi/3}, e^{i2pi/3}]
Eigen::Vector3cd default_slack_voltage();

/// Per bus-phase limits, each a 3N vector. v_* bound the squared voltage
/// magnitude; p_* bound the active power mismatch Re(P) - u.
struct OperatingLimits {
  RealVector p_upper, p_lower;
  RealVector q_upper, q_lower;
  RealVector v_upper, v_lower;

  /// Throws ValidationError naming the first offending bus/phase.
  void validate(int n_buses) const;
};

/// Sparse 3N x 3N admittance stored by 3x3 blocks.
struct ThreePhaseNetwork {
  int n_buses = 0;
  std::map<BusPair, Block> blocks;
  Eigen::Vector3cd slack_voltage = default_slack_voltage();
  Topology topology = Topology::unknown;

  int dim() const { return 3 * n_buses; }
  /// Number of unordered off-diagonal block pairs (lines).
  std::size_t line_count() const;
  /// Checks bus ranges, finiteness, and symmetry of the block pattern.
  void validate() const;
  /// Dense 3N x 3N copy. Only meant for small networks and tests.
  Eigen::MatrixXcd dense_admittance() const;
};

struct NetworkData {
  ThreePhaseNetwork network;
  OperatingLimits limits;
};

// -- serialization --------------------------------------------------------

NetworkData network_from_json_text(const std::string& text);
std::string network_to_json_text(const NetworkData& data);
NetworkData load_network(const std::filesystem::path& path);
void save_network(const std::filesystem::path& path, const NetworkData& data);

/// Injection files hold {"u": [3N reals]}.
RealVector load_injection(const std::filesystem::path& path);
void save_injection(const std::filesystem::path& path, const RealVector& u);

// -- generators -----------------------------------------------------------

struct ReplicateOptions {
  /// When set, each copy's root is tied to a new slack bus through this
  /// admittance and the bus count is k*N + 1. When unset, the copies share
  /// the base root as the slack bus and the bus count is k*(N-1) + 1.
  std::optional<Block> tie_admittance;
};

NetworkData replicate_feeder(const NetworkData& base, int k,
                             const ReplicateOptions& options = {});

/// First line block of a network (smallest (i,j) with i < j), negated so
/// it reads as a series admittance. Used as the default tie line.
Block first_line_admittance(const ThreePhaseNetwork& net);

struct RadialParams {
  double r_min = 0.005;        // self resistance, pu
  double r_max = 0.02;
  double x_over_r_min = 1.0;
  double x_over_r_max = 2.5;
  double mutual_fraction = 0.3;  // mutual impedance relative to self
  double p_band = 0.5;           // |Re(P) - u| allowance at load buses
  double q_band = 0.5;
  double slack_band = 100.0;     // p/q allowance at the slack bus
  double v_min = 0.81;
  double v_max = 1.21;
  /// Probability a new bus attaches to the most recent bus (feeder-like
  /// long chains); otherwise the parent is uniform over existing buses.
  double chain_bias = 0.6;

  void validate() const;
};

NetworkData synth_radial(int n_buses, std::uint64_t seed,
                         const RadialParams& params = {});

/// Series admittance of a line with 3x3 impedance Z, i.e. Z^{-1}.
Block line_admittance(const Eigen::Matrix3cd& impedance);

/// Adds a series line between buses a and b (0-based) into the block map.
void add_line(ThreePhaseNetwork& net, int a, int b, const Block& y_series);

}  // namespace bpf
