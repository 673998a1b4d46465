#include "bpf/network.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include <Eigen/LU>
#include <json.hpp>

namespace bpf {

using nlohmann::json;

namespace {

const char* const kPhase[3] = {"a", "b", "c"};

std::string bus_phase(int index) {
  std::ostringstream os;
  os << "bus " << (index / 3 + 1) << " phase " << kPhase[index % 3];
  return os.str();
}

std::string block_name(const BusPair& key) {
  std::ostringstream os;
  os << "block (" << key.first + 1 << "," << key.second + 1 << ")";
  return os.str();
}

bool finite(const cplx& c) { return std::isfinite(c.real()) && std::isfinite(c.imag()); }

json complex_to_json(const cplx& c) { return json::array({c.real(), c.imag()}); }

cplx complex_from_json(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    throw ValidationError(where + ": expected a [re, im] pair");
  }
  cplx c(j[0].get<double>(), j[1].get<double>());
  if (!finite(c)) throw ValidationError(where + ": non-finite value");
  return c;
}

RealVector vector_from_json(const json& j, const std::string& where, int expected) {
  if (!j.is_array()) throw ValidationError(where + ": expected an array");
  if (static_cast<int>(j.size()) != expected) {
    std::ostringstream os;
    os << where << ": expected " << expected << " entries, got " << j.size();
    throw ValidationError(os.str());
  }
  RealVector v(expected);
  for (int k = 0; k < expected; ++k) {
    if (!j[k].is_number()) {
      throw ValidationError(where + ": entry for " + bus_phase(k) + " is not a number");
    }
    v[k] = j[k].get<double>();
    if (!std::isfinite(v[k])) {
      throw ValidationError(where + ": non-finite entry at " + bus_phase(k));
    }
  }
  return v;
}

json vector_to_json(const RealVector& v) {
  json a = json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) a.push_back(v[k]);
  return a;
}

const json& require(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ValidationError(where + ": missing field '" + key + "'");
  return *it;
}

void check_limit_pair(const RealVector& lo, const RealVector& hi, const char* lo_name,
                      const char* hi_name) {
  for (Eigen::Index k = 0; k < lo.size(); ++k) {
    if (lo[k] > hi[k]) {
      std::ostringstream os;
      os << "limits: " << lo_name << " > " << hi_name << " at " << bus_phase(static_cast<int>(k))
         << " (" << lo[k] << " > " << hi[k] << ")";
      throw ValidationError(os.str());
    }
  }
}

}  // namespace

std::string to_string(Topology t) {
  switch (t) {
    case Topology::radial: return "radial";
    case Topology::meshed: return "meshed";
    case Topology::unknown: return "unknown";
  }
  return "unknown";
}

Topology topology_from_string(const std::string& s) {
  if (s == "radial") return Topology::radial;
  if (s == "meshed") return Topology::meshed;
  if (s == "unknown") return Topology::unknown;
  throw ValidationError("unknown topology tag '" + s + "'");
}

Eigen::Vector3cd default_slack_voltage() {
  const double a = 2.0 * std::numbers::pi / 3.0;
  return {cplx(1.0, 0.0), std::polar(1.0, -a), std::polar(1.0, a)};
}

void OperatingLimits::validate(int n_buses) const {
  const Eigen::Index n = 3 * static_cast<Eigen::Index>(n_buses);
  const std::pair<const RealVector*, const char*> all[] = {
      {&p_upper, "p_upper"}, {&p_lower, "p_lower"}, {&q_upper, "q_upper"},
      {&q_lower, "q_lower"}, {&v_upper, "v_upper"}, {&v_lower, "v_lower"}};
  for (const auto& [vec, name] : all) {
    if (vec->size() != n) {
      std::ostringstream os;
      os << "limits: " << name << " has length " << vec->size() << ", expected " << n;
      throw ValidationError(os.str());
    }
    for (Eigen::Index k = 0; k < n; ++k) {
      if (!std::isfinite((*vec)[k])) {
        throw ValidationError(std::string("limits: non-finite ") + name + " at " +
                              bus_phase(static_cast<int>(k)));
      }
    }
  }
  check_limit_pair(p_lower, p_upper, "p_lower", "p_upper");
  check_limit_pair(q_lower, q_upper, "q_lower", "q_upper");
  check_limit_pair(v_lower, v_upper, "v_lower", "v_upper");
  for (Eigen::Index k = 0; k < n; ++k) {
    if (v_lower[k] < 0.0) {
      throw ValidationError("limits: negative v_lower at " + bus_phase(static_cast<int>(k)));
    }
  }
}

std::size_t ThreePhaseNetwork::line_count() const {
  std::size_t count = 0;
  for (const auto& [key, blk] : blocks) {
    if (key.first < key.second) ++count;
  }
  return count;
}

void ThreePhaseNetwork::validate() const {
  if (n_buses <= 0) throw ValidationError("n_buses must be positive");
  for (int k = 0; k < 3; ++k) {
    if (!finite(slack_voltage[k])) throw ValidationError("slack_voltage: non-finite entry");
  }
  for (const auto& [key, blk] : blocks) {
    const auto [i, j] = key;
    if (i < 0 || j < 0 || i >= n_buses || j >= n_buses) {
      std::ostringstream os;
      os << block_name(key) << ": bus index outside 1.." << n_buses;
      throw ValidationError(os.str());
    }
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) {
        if (!finite(blk(r, c))) throw ValidationError(block_name(key) + ": non-finite entry");
      }
    }
    if (i != j && !blocks.contains({j, i})) {
      throw ValidationError(block_name(key) + " present but " + block_name({j, i}) +
                            " missing (sparsity pattern must be symmetric)");
    }
  }
}

Eigen::MatrixXcd ThreePhaseNetwork::dense_admittance() const {
  Eigen::MatrixXcd y = Eigen::MatrixXcd::Zero(dim(), dim());
  for (const auto& [key, blk] : blocks) y.block<3, 3>(3 * key.first, 3 * key.second) = blk;
  return y;
}

// ---------------------------------------------------------------------------

NetworkData network_from_json_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("network file is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ValidationError("network file: top level must be an object");

  NetworkData out;
  ThreePhaseNetwork& net = out.network;
  const json& nb = require(doc, "n_buses", "network");
  if (!nb.is_number_integer() || nb.get<long long>() <= 0) {
    throw ValidationError("network: n_buses must be a positive integer");
  }
  net.n_buses = nb.get<int>();
  const int n = net.dim();

  if (auto it = doc.find("slack_voltage"); it != doc.end()) {
    if (!it->is_array() || it->size() != 3) {
      throw ValidationError("slack_voltage: expected 3 [re, im] pairs");
    }
    for (int k = 0; k < 3; ++k) {
      net.slack_voltage[k] = complex_from_json((*it)[k], "slack_voltage");
    }
  }
  if (auto it = doc.find("topology"); it != doc.end()) {
    if (!it->is_string()) throw ValidationError("topology: expected a string");
    net.topology = topology_from_string(it->get<std::string>());
  }

  const json& blocks = require(doc, "blocks", "network");
  if (!blocks.is_array()) throw ValidationError("blocks: expected an array");
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const json& entry = blocks[b];
    std::ostringstream where;
    where << "blocks[" << b << "]";
    if (!entry.is_object()) throw ValidationError(where.str() + ": expected an object");
    const json& ji = require(entry, "i", where.str());
    const json& jj = require(entry, "j", where.str());
    if (!ji.is_number_integer() || !jj.is_number_integer()) {
      throw ValidationError(where.str() + ": i and j must be integers");
    }
    const BusPair key{ji.get<int>() - 1, jj.get<int>() - 1};
    const std::string name = block_name(key);
    if (key.first < 0 || key.second < 0 || key.first >= net.n_buses ||
        key.second >= net.n_buses) {
      std::ostringstream os;
      os << name << ": bus index outside 1.." << net.n_buses;
      throw ValidationError(os.str());
    }
    const json& y = require(entry, "y", name);
    if (!y.is_array() || y.size() != 9) {
      throw ValidationError(name + ": y must hold 9 [re, im] pairs (row-major 3x3)");
    }
    Block blk;
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) blk(r, c) = complex_from_json(y[3 * r + c], name);
    }
    if (!net.blocks.emplace(key, blk).second) {
      throw ValidationError(name + ": duplicate block");
    }
  }

  const json& lim = require(doc, "limits", "network");
  if (!lim.is_object()) throw ValidationError("limits: expected an object");
  OperatingLimits& L = out.limits;
  L.p_upper = vector_from_json(require(lim, "p_upper", "limits"), "limits.p_upper", n);
  L.p_lower = vector_from_json(require(lim, "p_lower", "limits"), "limits.p_lower", n);
  L.q_upper = vector_from_json(require(lim, "q_upper", "limits"), "limits.q_upper", n);
  L.q_lower = vector_from_json(require(lim, "q_lower", "limits"), "limits.q_lower", n);
  L.v_upper = vector_from_json(require(lim, "v_upper", "limits"), "limits.v_upper", n);
  L.v_lower = vector_from_json(require(lim, "v_lower", "limits"), "limits.v_lower", n);

  net.validate();
  L.validate(net.n_buses);
  return out;
}

std::string network_to_json_text(const NetworkData& data) {
  const ThreePhaseNetwork& net = data.network;
  json doc;
  doc["n_buses"] = net.n_buses;
  doc["topology"] = to_string(net.topology);
  json sv = json::array();
  for (int k = 0; k < 3; ++k) sv.push_back(complex_to_json(net.slack_voltage[k]));
  doc["slack_voltage"] = sv;
  json blocks = json::array();
  for (const auto& [key, blk] : net.blocks) {
    json y = json::array();
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) y.push_back(complex_to_json(blk(r, c)));
    }
    blocks.push_back({{"i", key.first + 1}, {"j", key.second + 1}, {"y", y}});
  }
  doc["blocks"] = blocks;
  const OperatingLimits& L = data.limits;
  doc["limits"] = {{"p_upper", vector_to_json(L.p_upper)}, {"p_lower", vector_to_json(L.p_lower)},
                   {"q_upper", vector_to_json(L.q_upper)}, {"q_lower", vector_to_json(L.q_lower)},
                   {"v_upper", vector_to_json(L.v_upper)}, {"v_lower", vector_to_json(L.v_lower)}};
  return doc.dump(1);
}

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << text << '\n';
}

}  // namespace

NetworkData load_network(const std::filesystem::path& path) {
  return network_from_json_text(read_file(path));
}

void save_network(const std::filesystem::path& path, const NetworkData& data) {
  write_file(path, network_to_json_text(data));
}

RealVector load_injection(const std::filesystem::path& path) {
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("injection file is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ValidationError("injection file: expected an object");
  const json& u = require(doc, "u", "injection");
  if (!u.is_array()) throw ValidationError("injection: u must be an array");
  return vector_from_json(u, "injection.u", static_cast<int>(u.size()));
}

void save_injection(const std::filesystem::path& path, const RealVector& u) {
  json doc;
  doc["u"] = vector_to_json(u);
  write_file(path, doc.dump(1));
}

// ---------------------------------------------------------------------------

Block line_admittance(const Eigen::Matrix3cd& impedance) { return impedance.inverse(); }

void add_line(ThreePhaseNetwork& net, int a, int b, const Block& y_series) {
  auto accumulate = [&](BusPair key, const Block& blk) {
    auto [it, inserted] = net.blocks.try_emplace(key, blk);
    if (!inserted) it->second += blk;
  };
  accumulate({a, a}, y_series);
  accumulate({b, b}, y_series);
  accumulate({a, b}, -y_series);
  accumulate({b, a}, -y_series);
}

Block first_line_admittance(const ThreePhaseNetwork& net) {
  for (const auto& [key, blk] : net.blocks) {
    if (key.first < key.second) return -blk;
  }
  throw ValidationError("network has no line blocks");
}

NetworkData replicate_feeder(const NetworkData& base, int k, const ReplicateOptions& options) {
  if (k <= 0) throw ValidationError("replicate_feeder: k must be positive");
  base.network.validate();
  const ThreePhaseNetwork& bnet = base.network;
  const int nb = bnet.n_buses;
  const bool tie = options.tie_admittance.has_value();

  NetworkData out;
  ThreePhaseNetwork& net = out.network;
  net.slack_voltage = bnet.slack_voltage;
  net.topology = bnet.topology;  // star-joining trees keeps them trees
  net.n_buses = tie ? k * nb + 1 : k * (nb - 1) + 1;

  // Map base bus b of copy c to its bus index in the replicated network.
  auto map_bus = [&](int c, int b) {
    if (tie) return 1 + c * nb + b;
    return b == 0 ? 0 : 1 + c * (nb - 1) + (b - 1);
  };

  for (int c = 0; c < k; ++c) {
    for (const auto& [key, blk] : bnet.blocks) {
      const BusPair mapped{map_bus(c, key.first), map_bus(c, key.second)};
      auto [it, inserted] = net.blocks.try_emplace(mapped, blk);
      if (!inserted) it->second += blk;  // shared root diagonal
    }
    if (tie) add_line(net, 0, map_bus(c, 0), *options.tie_admittance);
  }

  const int n = net.dim();
  OperatingLimits& L = out.limits;
  const OperatingLimits& B = base.limits;
  auto tile = [&](const RealVector& src) {
    RealVector dst(n);
    dst.segment<3>(0) = src.segment<3>(0);
    for (int c = 0; c < k; ++c) {
      for (int b = tie ? 0 : 1; b < nb; ++b) dst.segment<3>(3 * map_bus(c, b)) = src.segment<3>(3 * b);
    }
    return dst;
  };
  L.p_upper = tile(B.p_upper);
  L.p_lower = tile(B.p_lower);
  L.q_upper = tile(B.q_upper);
  L.q_lower = tile(B.q_lower);
  L.v_upper = tile(B.v_upper);
  L.v_lower = tile(B.v_lower);
  return out;
}

void RadialParams::validate() const {
  auto bad = [](const char* what) { throw ValidationError(std::string("radial params: ") + what); };
  if (!(r_min > 0.0) || !(r_max >= r_min)) bad("need 0 < r_min <= r_max");
  if (!(x_over_r_min >= 0.0) || !(x_over_r_max >= x_over_r_min)) bad("need 0 <= x_over_r_min <= x_over_r_max");
  if (!(mutual_fraction >= 0.0) || !(mutual_fraction < 0.5)) bad("mutual_fraction must lie in [0, 0.5)");
  if (!(p_band >= 0.0) || !(q_band >= 0.0) || !(slack_band >= 0.0)) bad("bands must be nonnegative");
  if (!(v_min >= 0.0) || !(v_max >= v_min)) bad("need 0 <= v_min <= v_max");
  if (v_min > 1.0 || v_max < 1.0) bad("voltage band must contain 1.0 so u = 0 is admissible");
  if (!(chain_bias >= 0.0) || !(chain_bias <= 1.0)) bad("chain_bias must lie in [0, 1]");
}

NetworkData synth_radial(int n_buses, std::uint64_t seed, const RadialParams& params) {
  if (n_buses < 2) throw ValidationError("synth_radial: n_buses must be at least 2");
  params.validate();

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

  NetworkData out;
  ThreePhaseNetwork& net = out.network;
  net.n_buses = n_buses;
  net.topology = Topology::radial;

  for (int b = 1; b < n_buses; ++b) {
    int parent = b - 1;
    if (b > 1 && unit(rng) >= params.chain_bias) {
      parent = static_cast<int>(unit(rng) * b);
      if (parent >= b) parent = b - 1;
    }
    Eigen::Matrix3cd z;
    for (int p = 0; p < 3; ++p) {
      const double r = uniform(params.r_min, params.r_max);
      z(p, p) = cplx(r, r * uniform(params.x_over_r_min, params.x_over_r_max));
    }
    for (int p = 0; p < 3; ++p) {
      for (int q = p + 1; q < 3; ++q) {
        const cplx m = params.mutual_fraction * 0.5 * (z(p, p) + z(q, q)) * uniform(0.5, 1.0);
        z(p, q) = m;
        z(q, p) = m;
      }
    }
    add_line(net, parent, b, line_admittance(z));
  }

  const int n = net.dim();
  OperatingLimits& L = out.limits;
  L.p_upper = RealVector::Constant(n, params.p_band);
  L.p_lower = RealVector::Constant(n, -params.p_band);
  L.q_upper = RealVector::Constant(n, params.q_band);
  L.q_lower = RealVector::Constant(n, -params.q_band);
  L.v_upper = RealVector::Constant(n, params.v_max);
  L.v_lower = RealVector::Constant(n, params.v_min);
  L.p_upper.head<3>().setConstant(params.slack_band);
  L.p_lower.head<3>().setConstant(-params.slack_band);
  L.q_upper.head<3>().setConstant(params.slack_band);
  L.q_lower.head<3>().setConstant(-params.slack_band);
  return out;
}

}  // namespace bpf
