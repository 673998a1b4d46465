#pragma once

#include <memory>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "bpf/kernels.hpp"
#include "bpf/network.hpp"
#include "bpf/types.hpp"

namespace bpf {

/// Structurally symmetric CSR pattern of a 3N x 3N matrix built from the
/// 3x3 block pattern of a network, diagonal blocks always included.
struct CsrPattern {
  int n = 0;
  std::vector<int> row_ptr;
  std::vector<int> col;
  std::vector<int> mirror;  // position of entry (col, row)
  std::vector<int> diag;    // position of entry (i, i)

  static std::shared_ptr<const CsrPattern> from_network(const ThreePhaseNetwork& net);

  std::size_t nnz() const { return col.size(); }
};

/// Complex matrix values over a shared pattern.
struct ComplexCsr {
  std::shared_ptr<const CsrPattern> pattern;
  std::vector<cplx> values;

  int n() const { return pattern->n; }
  kernels::CsrView view() const { return {pattern->row_ptr, pattern->col, values}; }

  void multiply(std::span<const cplx> x, std::span<cplx> y) const {
    kernels::csr_matvec(view(), x, y);
  }
  ComplexVector operator*(const ComplexVector& x) const;

  Eigen::MatrixXcd to_dense() const;
  double frobenius_norm() const;
  /// max_ij |A_ij - conj(A_ji)|; zero for matrices assembled Hermitian.
  double hermitian_defect() const;
};

/// Admittance values of the network on its pattern.
ComplexCsr assemble_admittance(const ThreePhaseNetwork& net,
                               std::shared_ptr<const CsrPattern> pattern);

}  // namespace bpf
