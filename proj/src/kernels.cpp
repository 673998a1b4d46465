#include "bpf/kernels.hpp"

#include <algorithm>
#include <cassert>
#include <vector>

#ifdef BPF_HAVE_OPENMP
#include <omp.h>
#endif

namespace bpf::kernels {

namespace {

inline cplx row_product(const CsrView& a, int i, std::span<const cplx> x) {
  cplx acc(0.0, 0.0);
  for (int k = a.row_ptr[i]; k < a.row_ptr[i + 1]; ++k) acc += a.val[k] * x[a.col[k]];
  return acc;
}

inline std::size_t chunk_count(std::size_t n) { return (n + kReduceChunk - 1) / kReduceChunk; }

template <class Partial>
double combine(std::size_t n, Partial&& partial_of_chunk, bool parallel) {
  const std::size_t chunks = chunk_count(n);
  if (chunks <= 1) return chunks == 0 ? 0.0 : partial_of_chunk(0);
  std::vector<double> partial(chunks);
  const auto count = static_cast<long long>(chunks);
#ifdef BPF_HAVE_OPENMP
#pragma omp parallel for schedule(static) if (parallel)
#endif
  for (long long c = 0; c < count; ++c) partial[c] = partial_of_chunk(static_cast<std::size_t>(c));
  (void)parallel;
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

double dot_impl(std::span<const double> a, std::span<const double> b, bool parallel) {
  assert(a.size() == b.size());
  return combine(
      a.size(),
      [&](std::size_t c) {
        const std::size_t lo = c * kReduceChunk, hi = std::min(a.size(), lo + kReduceChunk);
        double s = 0.0;
        for (std::size_t i = lo; i < hi; ++i) s += a[i] * b[i];
        return s;
      },
      parallel);
}

double dot_re_impl(std::span<const cplx> a, std::span<const cplx> b, bool parallel) {
  assert(a.size() == b.size());
  return combine(
      a.size(),
      [&](std::size_t c) {
        const std::size_t lo = c * kReduceChunk, hi = std::min(a.size(), lo + kReduceChunk);
        double s = 0.0;
        for (std::size_t i = lo; i < hi; ++i) s += a[i].real() * b[i].real() + a[i].imag() * b[i].imag();
        return s;
      },
      parallel);
}

inline double clip(double v, double lo, double hi) { return v < lo ? lo : (v > hi ? hi : v); }

}  // namespace

namespace serial {

void csr_matvec(const CsrView& a, std::span<const cplx> x, std::span<cplx> y) {
  const int n = a.n();
  for (int i = 0; i < n; ++i) y[i] = row_product(a, i, x);
}

void csr_matvec_neg(const CsrView& a, std::span<const cplx> x, std::span<cplx> y) {
  const int n = a.n();
  for (int i = 0; i < n; ++i) y[i] = -row_product(a, i, x);
}

double dot(std::span<const double> a, std::span<const double> b) { return dot_impl(a, b, false); }

double dot_re(std::span<const cplx> a, std::span<const cplx> b) { return dot_re_impl(a, b, false); }

void rank1_injection(std::span<const cplx> v, std::span<const cplx> w, std::span<cplx> p) {
  for (std::size_t j = 0; j < v.size(); ++j) p[j] = v[j] * std::conj(w[j]);
}

void shifted_clip(std::span<const double> x, std::span<const double> d, double s, double lo,
                  double hi, std::span<double> out) {
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = clip(x[i] - s * d[i], lo, hi);
}

}  // namespace serial

namespace omp {

void csr_matvec(const CsrView& a, std::span<const cplx> x, std::span<cplx> y) {
  const int n = a.n();
#ifdef BPF_HAVE_OPENMP
#pragma omp parallel for schedule(static) if (static_cast<std::size_t>(n) >= kParallelThreshold)
#endif
  for (int i = 0; i < n; ++i) y[i] = row_product(a, i, x);
}

void csr_matvec_neg(const CsrView& a, std::span<const cplx> x, std::span<cplx> y) {
  const int n = a.n();
#ifdef BPF_HAVE_OPENMP
#pragma omp parallel for schedule(static) if (static_cast<std::size_t>(n) >= kParallelThreshold)
#endif
  for (int i = 0; i < n; ++i) y[i] = -row_product(a, i, x);
}

double dot(std::span<const double> a, std::span<const double> b) {
  return dot_impl(a, b, a.size() >= kParallelThreshold);
}

double dot_re(std::span<const cplx> a, std::span<const cplx> b) {
  return dot_re_impl(a, b, a.size() >= kParallelThreshold);
}

void rank1_injection(std::span<const cplx> v, std::span<const cplx> w, std::span<cplx> p) {
  const auto n = static_cast<long long>(v.size());
#ifdef BPF_HAVE_OPENMP
#pragma omp parallel for schedule(static) if (v.size() >= kParallelThreshold)
#endif
  for (long long j = 0; j < n; ++j) p[j] = v[j] * std::conj(w[j]);
}

void shifted_clip(std::span<const double> x, std::span<const double> d, double s, double lo,
                  double hi, std::span<double> out) {
  const auto n = static_cast<long long>(x.size());
#ifdef BPF_HAVE_OPENMP
#pragma omp parallel for schedule(static) if (x.size() >= kParallelThreshold)
#endif
  for (long long i = 0; i < n; ++i) out[i] = clip(x[i] - s * d[i], lo, hi);
}

}  // namespace omp

bool openmp_enabled() {
#ifdef BPF_HAVE_OPENMP
  return true;
#else
  return false;
#endif
}

int max_threads() {
#ifdef BPF_HAVE_OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace bpf::kernels
