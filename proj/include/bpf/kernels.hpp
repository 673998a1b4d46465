#pragma once

// Data-parallel inner loops. Each kernel exists twice: a plain serial
// reference and an OpenMP variant. Both produce bitwise identical results
// for any thread count: row loops write disjoint outputs, and reductions
// sum fixed-size chunks whose partials are combined in index order.

#include <cstddef>
#include <span>

#include "bpf/types.hpp"

namespace bpf::kernels {

/// Chunk length of the deterministic reductions.
inline constexpr std::size_t kReduceChunk = 1024;

/// Below this length the OpenMP variants run single-threaded.
inline constexpr std::size_t kParallelThreshold = 4096;

/// Compressed-row view of a square complex matrix.
struct CsrView {
  std::span<const int> row_ptr;  // size n + 1
  std::span<const int> col;
  std::span<const cplx> val;
  int n() const { return static_cast<int>(row_ptr.size()) - 1; }
};

namespace serial {
/// y = A x
void csr_matvec(const CsrView& a, std::span<const cplx> x, std::span<cplx> y);
/// y = -A x
void csr_matvec_neg(const CsrView& a, std::span<const cplx> x, std::span<cplx> y);
double dot(std::span<const double> a, std::span<const double> b);
/// Re(a^H b)
double dot_re(std::span<const cplx> a, std::span<const cplx> b);
/// p_j = v_j * conj(w_j)
void rank1_injection(std::span<const cplx> v, std::span<const cplx> w, std::span<cplx> p);
/// out = clip(x - s * d, lo, hi)
void shifted_clip(std::span<const double> x, std::span<const double> d, double s, double lo,
                  double hi, std::span<double> out);
}  // namespace serial

namespace omp {
void csr_matvec(const CsrView& a, std::span<const cplx> x, std::span<cplx> y);
void csr_matvec_neg(const CsrView& a, std::span<const cplx> x, std::span<cplx> y);
double dot(std::span<const double> a, std::span<const double> b);
double dot_re(std::span<const cplx> a, std::span<const cplx> b);
void rank1_injection(std::span<const cplx> v, std::span<const cplx> w, std::span<cplx> p);
void shifted_clip(std::span<const double> x, std::span<const double> d, double s, double lo,
                  double hi, std::span<double> out);
}  // namespace omp

/// True when the OpenMP variants were compiled with OpenMP enabled.
bool openmp_enabled();
int max_threads();

// Dispatch used by the library: the OpenMP variant.
inline void csr_matvec(const CsrView& a, std::span<const cplx> x, std::span<cplx> y) {
  omp::csr_matvec(a, x, y);
}
inline void csr_matvec_neg(const CsrView& a, std::span<const cplx> x, std::span<cplx> y) {
  omp::csr_matvec_neg(a, x, y);
}
inline double dot(std::span<const double> a, std::span<const double> b) { return omp::dot(a, b); }
inline double dot_re(std::span<const cplx> a, std::span<const cplx> b) {
  return omp::dot_re(a, b);
}
inline void rank1_injection(std::span<const cplx> v, std::span<const cplx> w, std::span<cplx> p) {
  omp::rank1_injection(v, w, p);
}
inline void shifted_clip(std::span<const double> x, std::span<const double> d, double s,
                         double lo, double hi, std::span<double> out) {
  omp::shifted_clip(x, d, s, lo, hi, out);
}

}  // namespace bpf::kernels
