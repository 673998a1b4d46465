#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <limits>
#include <string>

#include "bpf/network.hpp"
#include "bpf/sparse.hpp"

using namespace bpf;

namespace {

std::string two_bus_text(bool drop_lower_block = false) {
  std::string blocks =
      R"({"i":1,"j":1,"y":[[2,-4],[0,0],[0,0],[0,0],[2,-4],[0,0],[0,0],[0,0],[2,-4]]},)"
      R"({"i":2,"j":2,"y":[[2,-4],[0,0],[0,0],[0,0],[2,-4],[0,0],[0,0],[0,0],[2,-4]]},)"
      R"({"i":1,"j":2,"y":[[-2,4],[0,0],[0,0],[0,0],[-2,4],[0,0],[0,0],[0,0],[-2,4]]})";
  if (!drop_lower_block) {
    blocks += R"(,{"i":2,"j":1,"y":[[-2,4],[0,0],[0,0],[0,0],[-2,4],[0,0],[0,0],[0,0],[-2,4]]})";
  }
  return std::string(R"({"n_buses":2,"topology":"radial","blocks":[)") + blocks +
         R"(],"limits":{"p_upper":[1,1,1,1,1,1],"p_lower":[-1,-1,-1,-1,-1,-1],)"
         R"("q_upper":[1,1,1,1,1,1],"q_lower":[-1,-1,-1,-1,-1,-1],)"
         R"("v_upper":[1.1,1.1,1.1,1.1,1.1,1.1],"v_lower":[0.9,0.9,0.9,0.9,0.9,0.9]}})";
}

bool same_blocks(const ThreePhaseNetwork& a, const ThreePhaseNetwork& b) {
  if (a.n_buses != b.n_buses || a.blocks.size() != b.blocks.size()) return false;
  for (const auto& [key, blk] : a.blocks) {
    auto it = b.blocks.find(key);
    if (it == b.blocks.end()) return false;
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) {
        if (blk(r, c) != it->second(r, c)) return false;
      }
    }
  }
  return true;
}

}  // namespace

TEST_CASE("two-bus file assembles to four blocks") {
  const NetworkData d = network_from_json_text(two_bus_text());
  CHECK(d.network.n_buses == 2);
  CHECK(d.network.blocks.size() == 4);
  CHECK(d.network.line_count() == 1);
  CHECK(d.network.dim() == 6);
  CHECK(d.network.topology == Topology::radial);
  const auto pattern = CsrPattern::from_network(d.network);
  const ComplexCsr Y = assemble_admittance(d.network, pattern);
  CHECK(Y.n() == 6);
  const Eigen::MatrixXcd dense = Y.to_dense();
  CHECK(dense == d.network.dense_admittance());
  CHECK(dense(0, 0) == cplx(2, -4));
  CHECK(dense(0, 3) == cplx(-2, 4));
  CHECK(dense(3, 0) == cplx(-2, 4));
}

TEST_CASE("missing mirror block is a sparsity error naming both blocks") {
  try {
    network_from_json_text(two_bus_text(true));
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("(1,2)") != std::string::npos);
    CHECK(msg.find("(2,1)") != std::string::npos);
  }
}

TEST_CASE("schema errors") {
  CHECK_THROWS_AS(network_from_json_text("not json"), ValidationError);
  CHECK_THROWS_AS(network_from_json_text("[]"), ValidationError);
  std::string t = two_bus_text();
  SUBCASE("bus out of range") {
    const auto pos = t.find(R"("i":2,"j":2)");
    t.replace(pos, 11, R"("i":3,"j":3)");
    CHECK_THROWS_AS(network_from_json_text(t), ValidationError);
  }
  SUBCASE("duplicate block") {
    const std::string dup =
        R"({"i":1,"j":1,"y":[[2,-4],[0,0],[0,0],[0,0],[2,-4],[0,0],[0,0],[0,0],[2,-4]]},)";
    t.insert(t.find(R"({"i":1,"j":1)"), dup);
    CHECK_THROWS_WITH_AS(network_from_json_text(t), doctest::Contains("duplicate"), ValidationError);
  }
  SUBCASE("wrong limit length") {
    t.replace(t.find(R"("p_upper":[1,1,1,1,1,1])"), 23, R"("p_upper":[1,1,1,1,1])");
    CHECK_THROWS_AS(network_from_json_text(t), ValidationError);
  }
  SUBCASE("short block") {
    t.replace(t.find(R"([[2,-4],[0,0],[0,0],)"), 20, R"([[2,-4],[0,0],)");
    CHECK_THROWS_AS(network_from_json_text(t), ValidationError);
  }
}

TEST_CASE("non-finite entries are rejected with the block name") {
  NetworkData d = network_from_json_text(two_bus_text());
  d.network.blocks[{0, 1}](1, 1) = cplx(std::numeric_limits<double>::quiet_NaN(), 0.0);
  CHECK_THROWS_WITH_AS(d.network.validate(), doctest::Contains("(1,2)"), ValidationError);
}

TEST_CASE("limit validation names the bus and phase") {
  NetworkData d = network_from_json_text(two_bus_text());
  d.limits.p_lower[4] = 2.0;
  CHECK_THROWS_WITH_AS(d.limits.validate(2), doctest::Contains("bus 2"), ValidationError);
  d = network_from_json_text(two_bus_text());
  d.limits.v_lower[0] = -0.1;
  CHECK_THROWS_AS(d.limits.validate(2), ValidationError);
  d = network_from_json_text(two_bus_text());
  d.limits.v_upper[1] = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(d.limits.validate(2), ValidationError);
}

TEST_CASE("default slack voltage") {
  const Eigen::Vector3cd v = default_slack_voltage();
  const double pi = std::acos(-1.0);
  CHECK(std::abs(v[0] - cplx(1.0, 0.0)) < 1e-15);
  CHECK(std::abs(v[1] - std::polar(1.0, -2.0 * pi / 3.0)) < 1e-15);
  CHECK(std::abs(v[2] - std::polar(1.0, 2.0 * pi / 3.0)) < 1e-15);
  CHECK(std::abs((v * v.adjoint()).trace() - cplx(3.0, 0.0)) < 1e-14);
}

TEST_CASE("save then load is bit exact") {
  const NetworkData d = synth_radial(124, 3);
  const std::string text = network_to_json_text(d);
  const NetworkData back = network_from_json_text(text);
  CHECK(same_blocks(d.network, back.network));
  CHECK(back.network.slack_voltage == d.network.slack_voltage);
  CHECK(back.limits.p_upper == d.limits.p_upper);
  CHECK(back.limits.v_lower == d.limits.v_lower);
  CHECK(network_to_json_text(back) == text);
}

TEST_CASE("synth_radial properties") {
  CHECK(network_to_json_text(synth_radial(2, 7)) == network_to_json_text(synth_radial(2, 7)));
  CHECK(network_to_json_text(synth_radial(5, 7)) != network_to_json_text(synth_radial(5, 8)));
  const NetworkData d = synth_radial(50, 1);
  CHECK(d.network.line_count() == 49);
  CHECK(d.network.topology == Topology::radial);
  CHECK_NOTHROW(d.network.validate());
  CHECK_NOTHROW(d.limits.validate(50));
  CHECK((d.limits.p_lower.array() <= 0.0).all());
  CHECK((d.limits.p_upper.array() >= 0.0).all());
  // Rows of the assembled matrix are diagonally dominant in the block sense.
  const Eigen::MatrixXcd Y = d.network.dense_admittance();
  for (int r = 0; r < Y.rows(); ++r) {
    CHECK(std::abs(Y.row(r).sum()) < 1e-9 * Y.row(r).cwiseAbs().sum());
  }
  CHECK_THROWS_AS(synth_radial(1, 0), ValidationError);
  RadialParams bad;
  bad.r_min = 0.1;
  bad.r_max = 0.01;
  CHECK_THROWS_AS(synth_radial(5, 0, bad), ValidationError);
}

TEST_CASE("replicate k=1 is the base feeder") {
  const NetworkData base = synth_radial(12, 4);
  const NetworkData one = replicate_feeder(base, 1);
  CHECK(same_blocks(base.network, one.network));
  CHECK(one.limits.q_upper == base.limits.q_upper);
}

TEST_CASE("replicating a two-bus feeder gives a star") {
  const NetworkData base = synth_radial(2, 9);
  const NetworkData star = replicate_feeder(base, 3);
  CHECK(star.network.n_buses == 4);
  CHECK(star.network.line_count() == 3);
  const Block line = base.network.blocks.at({0, 1});
  for (int b = 1; b <= 3; ++b) {
    REQUIRE(star.network.blocks.count({0, b}) == 1);
    CHECK(star.network.blocks.at({0, b}) == line);
    CHECK(star.network.blocks.at({b, b}) == base.network.blocks.at({1, 1}));
  }
  CHECK(star.network.blocks.at({0, 0}) == 3.0 * base.network.blocks.at({0, 0}));
}

TEST_CASE("replicated block and bus counts") {
  const NetworkData base = synth_radial(20, 2);
  const int N = base.network.n_buses;
  const std::size_t L = base.network.line_count();
  for (int k : {2, 10, 15}) {
    const NetworkData r = replicate_feeder(base, k);
    CHECK(r.network.n_buses == k * (N - 1) + 1);
    CHECK(r.network.line_count() == k * L);
    CHECK(r.network.blocks.size() == static_cast<std::size_t>(k * (N - 1) + 1) + 2 * k * L);
    CHECK(r.limits.v_upper.size() == 3 * r.network.n_buses);
    CHECK_NOTHROW(r.network.validate());
  }
  ReplicateOptions tie;
  tie.tie_admittance = first_line_admittance(base.network);
  const NetworkData t = replicate_feeder(base, 3, tie);
  CHECK(t.network.n_buses == 3 * N + 1);
  CHECK(t.network.line_count() == 3 * L + 3);
  CHECK_THROWS_AS(replicate_feeder(base, 0), ValidationError);
}

TEST_CASE("line admittance and add_line") {
  Eigen::Matrix3cd z = Eigen::Matrix3cd::Zero();
  z.diagonal().setConstant(cplx(0.1, 0.2));
  const Block y = line_admittance(z);
  CHECK((y * z - Eigen::Matrix3cd::Identity()).norm() < 1e-14);
  ThreePhaseNetwork net;
  net.n_buses = 2;
  add_line(net, 0, 1, y);
  CHECK(net.blocks.at({0, 1}) == -y);
  CHECK(net.blocks.at({1, 0}) == -y);
  CHECK(net.blocks.at({0, 0}) == y);
  CHECK_NOTHROW(net.validate());
}

TEST_CASE("injection files round trip") {
  const std::string path = "test_network_u.json";
  RealVector u(6);
  u << 0.1, -0.2, 0.3, 1e-17, 5.0, -7.25;
  save_injection(path, u);
  CHECK(load_injection(path) == u);
  std::remove(path.c_str());
}

TEST_CASE("topology tags") {
  CHECK(topology_from_string("meshed") == Topology::meshed);
  CHECK(to_string(Topology::unknown) == "unknown");
  CHECK_THROWS_AS(topology_from_string("ring"), ValidationError);
}
