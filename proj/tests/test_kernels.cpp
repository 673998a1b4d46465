#include <doctest.h>

#include <random>
#include <vector>

#include "bpf/kernels.hpp"
#include "bpf/sparse.hpp"
#include "support/instances.hpp"

using namespace bpf;

namespace {

struct Fixture {
  NetworkData data;
  ComplexCsr Y;
  Fixture(int buses, std::uint64_t seed) : data(synth_radial(buses, seed)) {
    Y = assemble_admittance(data.network, CsrPattern::from_network(data.network));
  }
};

std::span<const cplx> cs(const ComplexVector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }
std::span<cplx> ms(ComplexVector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }
std::span<const double> rs(const RealVector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

bool bit_equal(const ComplexVector& a, const ComplexVector& b) {
  if (a.size() != b.size()) return false;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (a[i].real() != b[i].real() || a[i].imag() != b[i].imag()) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("serial matvec matches dense product") {
  Fixture f(30, 1);
  std::mt19937_64 rng(2);
  const ComplexVector x = testing::random_complex(f.Y.n(), rng);
  ComplexVector y(f.Y.n()), yn(f.Y.n());
  kernels::serial::csr_matvec(f.Y.view(), cs(x), ms(y));
  kernels::serial::csr_matvec_neg(f.Y.view(), cs(x), ms(yn));
  const ComplexVector ref = f.data.network.dense_admittance() * x;
  CHECK((y - ref).norm() <= 1e-12 * ref.norm());
  CHECK(bit_equal(yn, -y));
}

TEST_CASE("OpenMP kernels are bitwise equal to the serial reference") {
  // Large enough to cross the parallel threshold.
  Fixture f(2000, 5);
  REQUIRE(static_cast<std::size_t>(f.Y.n()) > kernels::kParallelThreshold);
  std::mt19937_64 rng(3);
  const ComplexVector x = testing::random_complex(f.Y.n(), rng);
  const ComplexVector w = testing::random_complex(f.Y.n(), rng);

  ComplexVector a(f.Y.n()), b(f.Y.n());
  kernels::serial::csr_matvec(f.Y.view(), cs(x), ms(a));
  kernels::omp::csr_matvec(f.Y.view(), cs(x), ms(b));
  CHECK(bit_equal(a, b));
  kernels::serial::csr_matvec_neg(f.Y.view(), cs(x), ms(a));
  kernels::omp::csr_matvec_neg(f.Y.view(), cs(x), ms(b));
  CHECK(bit_equal(a, b));

  kernels::serial::rank1_injection(cs(x), cs(w), ms(a));
  kernels::omp::rank1_injection(cs(x), cs(w), ms(b));
  CHECK(bit_equal(a, b));

  CHECK(kernels::serial::dot_re(cs(x), cs(w)) == kernels::omp::dot_re(cs(x), cs(w)));

  const RealVector p = x.real(), q = w.imag();
  CHECK(kernels::serial::dot(rs(p), rs(q)) == kernels::omp::dot(rs(p), rs(q)));

  RealVector c1(p.size()), c2(p.size());
  kernels::serial::shifted_clip(rs(p), rs(q), 0.25, -0.5, 0.5, {c1.data(), std::size_t(c1.size())});
  kernels::omp::shifted_clip(rs(p), rs(q), 0.25, -0.5, 0.5, {c2.data(), std::size_t(c2.size())});
  CHECK(c1 == c2);
}

TEST_CASE("deterministic reductions") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g;
  for (std::size_t n : {std::size_t(0), std::size_t(1), std::size_t(1023), std::size_t(1025),
                        std::size_t(10000)}) {
    std::vector<double> a(n), b(n);
    for (auto& v : a) v = g(rng);
    for (auto& v : b) v = g(rng);
    double ref = 0.0;
    for (std::size_t i = 0; i < n; ++i) ref += a[i] * b[i];
    const double s = kernels::serial::dot(a, b);
    CHECK(s == doctest::Approx(ref).epsilon(1e-12));
    CHECK(kernels::omp::dot(a, b) == s);
    CHECK(kernels::dot(a, b) == s);
  }
}

TEST_CASE("shifted clip and rank-one injection definitions") {
  const std::vector<double> x{-1.0, 0.05, 0.2, 0.5};
  const std::vector<double> d{0.0, 0.0, 1.0, -2.0};
  std::vector<double> out(4);
  kernels::serial::shifted_clip(x, d, 0.1, 0.0, 0.1, out);
  CHECK(out[0] == 0.0);
  CHECK(out[1] == 0.05);
  CHECK(out[2] == doctest::Approx(0.1));
  CHECK(out[3] == 0.1);

  const std::vector<cplx> v{{1.0, 2.0}, {0.0, -1.0}};
  const std::vector<cplx> w{{3.0, -1.0}, {2.0, 2.0}};
  std::vector<cplx> p(2);
  kernels::serial::rank1_injection(v, w, p);
  CHECK(p[0] == v[0] * std::conj(w[0]));
  CHECK(p[1] == v[1] * std::conj(w[1]));
}

TEST_CASE("thread reporting") {
  CHECK(kernels::max_threads() >= 1);
#ifdef BPF_HAVE_OPENMP
  CHECK(kernels::openmp_enabled());
#else
  CHECK_FALSE(kernels::openmp_enabled());
#endif
}
