#pragma once

#include <vector>

#include "prb/cg.hpp"

namespace prb::detail {

// sum_{L,L'} a_L b_L' C^{R,r}_{L,L'} over one target column of a square table.
inline double square_contract(const CGTable& sq, int R, int r, const std::vector<double>& a, const std::vector<double>& b) {
  const auto& P = sq.pairs_of(R);
  const auto col = sq.column(R, r);
  const long d2 = sq.dim2();
  double acc = 0.0;
  for (size_t j = 0; j < P.size(); ++j) {
    const double x = a[P[j] / d2];
    if (x == 0.0) continue;
    const double y = b[P[j] % d2];
    if (y == 0.0) continue;
    acc += col[j] * x * y;
  }
  return acc;
}

// Dense vector over all patterns of the target from zero-weight slice values.
inline std::vector<double> densify(int dim, const std::vector<int>& idx, const std::vector<double>& vals) {
  std::vector<double> out(dim, 0.0);
  for (size_t z = 0; z < idx.size(); ++z) out[idx[z]] = vals[z];
  return out;
}

}  // namespace prb::detail
