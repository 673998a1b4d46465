#include "bpf/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace bpf {

std::shared_ptr<const CsrPattern> CsrPattern::from_network(const ThreePhaseNetwork& net) {
  net.validate();
  std::vector<std::set<int>> block_cols(net.n_buses);
  for (int i = 0; i < net.n_buses; ++i) block_cols[i].insert(i);
  for (const auto& [key, blk] : net.blocks) block_cols[key.first].insert(key.second);

  auto p = std::make_shared<CsrPattern>();
  p->n = net.dim();
  p->row_ptr.assign(p->n + 1, 0);
  for (int i = 0; i < net.n_buses; ++i) {
    for (int r = 0; r < 3; ++r) {
      const int row = 3 * i + r;
      for (int j : block_cols[i]) {
        for (int c = 0; c < 3; ++c) p->col.push_back(3 * j + c);
      }
      p->row_ptr[row + 1] = static_cast<int>(p->col.size());
    }
  }

  auto find = [&](int row, int col) {
    const auto first = p->col.begin() + p->row_ptr[row];
    const auto last = p->col.begin() + p->row_ptr[row + 1];
    const auto it = std::lower_bound(first, last, col);
    if (it == last || *it != col) throw ValidationError("pattern is not structurally symmetric");
    return static_cast<int>(it - p->col.begin());
  };
  p->mirror.resize(p->col.size());
  p->diag.resize(p->n);
  for (int row = 0; row < p->n; ++row) {
    for (int k = p->row_ptr[row]; k < p->row_ptr[row + 1]; ++k) {
      p->mirror[k] = find(p->col[k], row);
      if (p->col[k] == row) p->diag[row] = k;
    }
  }
  return p;
}

ComplexVector ComplexCsr::operator*(const ComplexVector& x) const {
  ComplexVector y(n());
  multiply({x.data(), static_cast<std::size_t>(x.size())},
           {y.data(), static_cast<std::size_t>(y.size())});
  return y;
}

Eigen::MatrixXcd ComplexCsr::to_dense() const {
  Eigen::MatrixXcd d = Eigen::MatrixXcd::Zero(n(), n());
  const CsrPattern& p = *pattern;
  for (int r = 0; r < p.n; ++r) {
    for (int k = p.row_ptr[r]; k < p.row_ptr[r + 1]; ++k) d(r, p.col[k]) = values[k];
  }
  return d;
}

double ComplexCsr::frobenius_norm() const {
  double s = 0.0;
  for (const cplx& v : values) s += std::norm(v);
  return std::sqrt(s);
}

double ComplexCsr::hermitian_defect() const {
  double worst = 0.0;
  const CsrPattern& p = *pattern;
  for (std::size_t k = 0; k < values.size(); ++k) {
    worst = std::max(worst, std::abs(values[k] - std::conj(values[p.mirror[k]])));
  }
  return worst;
}

ComplexCsr assemble_admittance(const ThreePhaseNetwork& net,
                               std::shared_ptr<const CsrPattern> pattern) {
  ComplexCsr y{std::move(pattern), {}};
  const CsrPattern& p = *y.pattern;
  y.values.assign(p.nnz(), cplx(0.0, 0.0));
  for (int row = 0; row < p.n; ++row) {
    const int bi = row / 3, r = row % 3;
    for (int k = p.row_ptr[row]; k < p.row_ptr[row + 1]; ++k) {
      const int bj = p.col[k] / 3, c = p.col[k] % 3;
      if (auto it = net.blocks.find({bi, bj}); it != net.blocks.end()) y.values[k] = it->second(r, c);
    }
  }
  return y;
}

}  // namespace bpf
