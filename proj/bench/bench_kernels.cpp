// Serial reference kernels against their OpenMP variants. Sizes are bus
// counts of a synthetic radial feeder; the vectors have length 3N (complex)
// or 18N (real), matching what the solver touches per iteration.

#include <map>
#include <memory>
#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "bpf/kernels.hpp"
#include "bpf/network.hpp"
#include "bpf/sparse.hpp"

using namespace bpf;

namespace {

struct Data {
  ComplexCsr Y;
  std::vector<cplx> x, w, y;
  std::vector<double> a, b, out;

  explicit Data(int buses) {
    const NetworkData d = synth_radial(buses, 1);
    Y = assemble_admittance(d.network, CsrPattern::from_network(d.network));
    const std::size_t n = static_cast<std::size_t>(Y.n());
    std::mt19937_64 rng(2);
    std::normal_distribution<double> g;
    x.resize(n);
    w.resize(n);
    y.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = {g(rng), g(rng)};
      w[i] = {g(rng), g(rng)};
    }
    a.resize(6 * n);
    b.resize(6 * n);
    out.resize(6 * n);
    for (std::size_t i = 0; i < a.size(); ++i) {
      a[i] = g(rng);
      b[i] = g(rng);
    }
  }
};

Data& data_for(int buses) {
  static std::map<int, std::unique_ptr<Data>> cache;
  auto& slot = cache[buses];
  if (!slot) slot = std::make_unique<Data>(buses);
  return *slot;
}

template <bool Parallel>
void BM_csr_matvec(benchmark::State& st) {
  Data& d = data_for(static_cast<int>(st.range(0)));
  for (auto _ : st) {
    if constexpr (Parallel) kernels::omp::csr_matvec(d.Y.view(), d.x, d.y);
    else kernels::serial::csr_matvec(d.Y.view(), d.x, d.y);
    benchmark::DoNotOptimize(d.y.data());
  }
  st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(d.Y.values.size()));
}

template <bool Parallel>
void BM_rank1_injection(benchmark::State& st) {
  Data& d = data_for(static_cast<int>(st.range(0)));
  for (auto _ : st) {
    if constexpr (Parallel) kernels::omp::rank1_injection(d.x, d.w, d.y);
    else kernels::serial::rank1_injection(d.x, d.w, d.y);
    benchmark::DoNotOptimize(d.y.data());
  }
  st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(d.x.size()));
}

template <bool Parallel>
void BM_dot(benchmark::State& st) {
  Data& d = data_for(static_cast<int>(st.range(0)));
  for (auto _ : st) {
    double r = Parallel ? kernels::omp::dot(d.a, d.b) : kernels::serial::dot(d.a, d.b);
    benchmark::DoNotOptimize(r);
  }
  st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(d.a.size()));
}

template <bool Parallel>
void BM_shifted_clip(benchmark::State& st) {
  Data& d = data_for(static_cast<int>(st.range(0)));
  for (auto _ : st) {
    if constexpr (Parallel) kernels::omp::shifted_clip(d.a, d.b, 0.25, 0.0, 0.1, d.out);
    else kernels::serial::shifted_clip(d.a, d.b, 0.25, 0.0, 0.1, d.out);
    benchmark::DoNotOptimize(d.out.data());
  }
  st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(d.a.size()));
}

void sizes(benchmark::internal::Benchmark* b) {
  for (int buses : {124, 1231, 12301, 61501}) b->Arg(buses);
}

}  // namespace

BENCHMARK(BM_csr_matvec<false>)->Name("csr_matvec/serial")->Apply(sizes);
BENCHMARK(BM_csr_matvec<true>)->Name("csr_matvec/omp")->Apply(sizes);
BENCHMARK(BM_rank1_injection<false>)->Name("rank1_injection/serial")->Apply(sizes);
BENCHMARK(BM_rank1_injection<true>)->Name("rank1_injection/omp")->Apply(sizes);
BENCHMARK(BM_dot<false>)->Name("dot/serial")->Apply(sizes);
BENCHMARK(BM_dot<true>)->Name("dot/omp")->Apply(sizes);
BENCHMARK(BM_shifted_clip<false>)->Name("shifted_clip/serial")->Apply(sizes);
BENCHMARK(BM_shifted_clip<true>)->Name("shifted_clip/omp")->Apply(sizes);

BENCHMARK_MAIN();
