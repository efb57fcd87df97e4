#include "prb/cg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <unordered_map>

#include "prb/errors.hpp"

namespace prb {

namespace {

bool weights_add(const Weight& a, const Weight& b, const Weight& c) {
  for (size_t i = 0; i < c.size(); ++i)
    if (a[i] + b[i] != c[i]) return false;
  return true;
}

Weight sub(const Weight& a, const Weight& b) {
  Weight out(a.size());
  for (size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

std::vector<long> pairs_at(const IrrepBasis& b1, const IrrepBasis& b2, const Weight& w) {
  std::vector<long> out;
  const long d2 = b2.dim();
  for (int i1 = 0; i1 < b1.dim(); ++i1) {
    const int g2 = b2.group_of_weight(sub(w, b1.weights[i1]));
    if (g2 < 0) continue;
    for (int i2 : b2.groups[g2]) out.push_back(i1 * d2 + i2);
  }
  return out;
}

struct HighestWeightSpace {
  std::vector<long> pairs;
  Eigen::MatrixXd H;  // orthonormal columns, canonical
  double residual = 0.0;
};

// Vectors of weight mu killed by every raising operator (every lowering operator
// when lowest is set). Such a vector is fixed by its components on (extreme
// pattern of factor 1) x (factor 2 at the remaining weight), so those components
// parametrise candidates; the rest follows layer by layer.
HighestWeightSpace highest_weight_space(const IrrepBasis& b1, const IrrepBasis& b2, const Weight& mu,
                                        bool lowest = false) {
  HighestWeightSpace out;
  out.pairs = pairs_at(b1, b2, mu);
  const int top1 = lowest ? b1.groups[b1.order.back()][0] : b1.index_of(highest_pattern(b1.shape));
  const auto& systems1 = lowest ? b1.up_systems : b1.systems;
  const auto& ladder2 = lowest ? b2.raise : b2.lower;
  std::vector<int> order1 = b1.order;
  if (lowest) std::reverse(order1.begin(), order1.end());
  const int gtop1 = b1.group_of[top1];
  const int g2top = b2.group_of_weight(sub(mu, b1.weights[top1]));
  if (g2top < 0) return out;
  const int du = static_cast<int>(b2.groups[g2top].size());
  const long d2 = b2.dim();
  const long N = static_cast<long>(out.pairs.size());
  auto pos = [&](long key) {
    auto it = std::lower_bound(out.pairs.begin(), out.pairs.end(), key);
    return static_cast<long>(it - out.pairs.begin());
  };

  const int ng1 = static_cast<int>(b1.groups.size());
  std::vector<int> partner(ng1, -1);
  for (int g1 = 0; g1 < ng1; ++g1) partner[g1] = b2.group_of_weight(sub(mu, b1.group_weight[g1]));

  Eigen::MatrixXd V = Eigen::MatrixXd::Zero(N, du);
  for (int e = 0; e < du; ++e) {
    std::vector<Eigen::MatrixXd> X(ng1);
    X[gtop1] = Eigen::MatrixXd::Zero(1, du);
    X[gtop1](0, e) = 1.0;
    for (int g1 : order1) {
      if (g1 == gtop1 || partner[g1] < 0) continue;
      const int g2 = partner[g1];
      const auto& sys = systems1[g1];
      Eigen::MatrixXd B = Eigen::MatrixXd::Zero(static_cast<long>(sys.rows.size()), static_cast<long>(b2.groups[g2].size()));
      for (size_t ri = 0; ri < sys.rows.size(); ++ri) {
        const auto [l, P] = sys.rows[ri];
        const int gP = b1.group_of[P];
        if (partner[gP] < 0) continue;
        const auto& XP = X[gP];
        const int pP = b1.pos_in_group[P];
        for (size_t c = 0; c < b2.groups[g2].size(); ++c) {
          double acc = 0.0;
          for (const auto& lw : ladder2[l - 1][b2.groups[g2][c]]) acc += lw.value * XP(pP, b2.pos_in_group[lw.to]);
          B(static_cast<long>(ri), static_cast<long>(c)) = -acc;
        }
      }
      X[g1] = sys.pinv * B;
    }
    for (int g1 = 0; g1 < ng1; ++g1) {
      if (partner[g1] < 0 || X[g1].size() == 0) continue;
      for (size_t a = 0; a < b1.groups[g1].size(); ++a)
        for (size_t b = 0; b < b2.groups[partner[g1]].size(); ++b)
          V(pos(b1.groups[g1][a] * d2 + b2.groups[partner[g1]][b]), e) = X[g1](static_cast<long>(a), static_cast<long>(b));
    }
  }

  // Raising residual of each candidate.
  std::unordered_map<long, long> rowmap;
  std::vector<std::unordered_map<long, double>> res(du);
  const int m = b1.m;
  for (int e = 0; e < du; ++e) {
    for (long q = 0; q < N; ++q) {
      const double c = V(q, e);
      if (c == 0.0) continue;
      const long i1 = out.pairs[q] / d2, i2 = out.pairs[q] % d2;
      for (int l = 1; l < m; ++l) {
        for (const auto& r : (lowest ? b1.lower : b1.raise)[l - 1][i1]) res[e][r.to * d2 + i2] += c * r.value;
        for (const auto& r : (lowest ? b2.lower : b2.raise)[l - 1][i2]) res[e][i1 * d2 + r.to] += c * r.value;
      }
    }
    for (const auto& kv : res[e]) rowmap.emplace(kv.first, static_cast<long>(rowmap.size()));
  }
  double scale = 1.0;
  for (int e = 0; e < du; ++e) scale = std::max(scale, V.col(e).norm());

  Eigen::MatrixXd Z;
  if (rowmap.empty()) {
    Z = Eigen::MatrixXd::Identity(du, du);
  } else {
    Eigen::MatrixXd R = Eigen::MatrixXd::Zero(static_cast<long>(rowmap.size()), du);
    for (int e = 0; e < du; ++e)
      for (const auto& kv : res[e]) R(rowmap.at(kv.first), e) = kv.second;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(R, Eigen::ComputeFullV);
    const auto& s = svd.singularValues();
    int nullity = du - static_cast<int>(s.size());
    for (long i = 0; i < s.size(); ++i) {
      const double rel = s(i) / scale;
      if (rel < 1e-9) {
        ++nullity;
        out.residual = std::max(out.residual, rel);
      } else if (rel < 1e-5) {
        std::ostringstream os;
        os << "ambiguous highest-weight rank: singular value " << rel << " relative to scale";
        fail(ErrorKind::Numerical, os.str());
      }
    }
    Z = svd.matrixV().rightCols(nullity);
  }
  if (Z.cols() == 0) return out;

  Eigen::MatrixXd Hraw = V * Z;
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(Hraw);
  Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(N, Z.cols());

  // Gram-Schmidt of projected unit vectors in canonical pair order.
  const long mult = Z.cols();
  out.H = Eigen::MatrixXd::Zero(N, mult);
  long found = 0;
  for (long i = 0; i < N && found < mult; ++i) {
    Eigen::VectorXd v = Q * Q.row(i).transpose();
    for (long j = 0; j < found; ++j) v -= out.H.col(j).dot(v) * out.H.col(j);
    for (long j = 0; j < found; ++j) v -= out.H.col(j).dot(v) * out.H.col(j);
    const double nv = v.norm();
    if (nv < 1e-6) continue;
    v /= nv;
    for (long q = 0; q < N; ++q)
      if (std::abs(v(q)) > 1e-12) {
        if (v(q) < 0) v = -v;
        break;
      }
    out.H.col(found++) = v;
  }
  if (found < mult) fail(ErrorKind::Numerical, "highest-weight canonicalisation lost rank");
  return out;
}

Shape shape_from_dynkin(const Weight& w) {
  const int m = static_cast<int>(w.size()) + 1;
  std::vector<int> rows(m, 0);
  for (int i = m - 2; i >= 0; --i) rows[i] = rows[i + 1] + w[i];
  return Shape(rows);
}

}  // namespace

std::string Coupling::key() const {
  return "m" + std::to_string(m()) + "_" + factor1.str() + "x" + factor2.str() + "-" + target.str();
}

Coupling sector_coupling(int n, int k, int m) {
  return {symmetric_shape(n, m), dual_symmetric_shape(n, m), lambda_shape(k, m)};
}

Coupling square_coupling(int k, int l, int m) { return {lambda_shape(k, m), lambda_shape(k, m), lambda_shape(l, m)}; }

std::optional<int> expected_multiplicity(const Coupling& c) {
  const int m = c.m();
  if (m < 2) return std::nullopt;
  const int n = c.factor1[0];
  if (c.factor1 == symmetric_shape(n, m) && c.factor2 == dual_symmetric_shape(n, m)) {
    for (int k = 0; k <= n; ++k)
      if (c.target == lambda_shape(k, m)) return 1;
    return std::nullopt;
  }
  if (c.factor1 == c.factor2 && c.factor1[0] % 2 == 0 && c.factor1 == lambda_shape(c.factor1[0] / 2, m)) {
    const int k = c.factor1[0] / 2;
    for (int l = 0; l <= 2 * k + 1; ++l)
      if (c.target == lambda_shape(l, m)) return tensor_square_multiplicity(k, l, m);
  }
  return std::nullopt;
}

double CGTable::at(int i1, int i2, int iM, int r) const {
  if (!weights_add(b1->weights[i1], b2->weights[i2], bt->weights[iM])) return 0.0;
  const auto& P = pairs_of(iM);
  const long key = static_cast<long>(i1) * dim2() + i2;
  auto it = std::lower_bound(P.begin(), P.end(), key);
  if (it == P.end() || *it != key) return 0.0;
  return coeffs[iM][static_cast<size_t>(r) * P.size() + static_cast<size_t>(it - P.begin())];
}

std::span<const double> CGTable::column(int iM, int r) const {
  const size_t len = pairs_of(iM).size();
  return {coeffs[iM].data() + static_cast<size_t>(r) * len, len};
}

std::span<double> CGTable::column(int iM, int r) {
  const size_t len = pairs_of(iM).size();
  return {coeffs[iM].data() + static_cast<size_t>(r) * len, len};
}

double CGTable::coefficient(const GTPattern& M1, const GTPattern& M2, const GTPattern& M, int r) const {
  if (!(M1.top() == coupling.factor1) || !(M2.top() == coupling.factor2) || !(M.top() == coupling.target))
    fail(ErrorKind::Argument, "pattern does not belong to coupling " + coupling.key());
  if (r < 1 || r > multiplicity) fail(ErrorKind::Argument, "multiplicity index out of range");
  if (!weights_add(weight(M1), weight(M2), weight(M))) return 0.0;
  return at(b1->index_of(M1), b2->index_of(M2), bt->index_of(M), r - 1);
}

size_t CGTable::stored() const {
  size_t s = 0;
  for (const auto& c : coeffs) s += c.size();
  return s;
}

namespace {

// Skeleton with bases and pair lists; coefficients zeroed.
CGTable table_skeleton(const Coupling& c, int mult) {
  CGTable t;
  t.coupling = c;
  t.multiplicity = mult;
  t.b1 = irrep_basis(c.factor1);
  t.b2 = irrep_basis(c.factor2);
  t.bt = irrep_basis(c.target);
  t.pairs.resize(t.bt->groups.size());
  for (size_t g = 0; g < t.bt->groups.size(); ++g) t.pairs[g] = pairs_at(*t.b1, *t.b2, t.bt->group_weight[g]);
  t.coeffs.resize(t.bt->dim());
  for (int iM = 0; iM < t.bt->dim(); ++iM) t.coeffs[iM].assign(static_cast<size_t>(mult) * t.pairs_of(iM).size(), 0.0);
  return t;
}

}  // namespace

CGTable build_table(const Coupling& c) {
  if (c.factor1.m() != c.factor2.m() || c.factor1.m() != c.target.m())
    fail(ErrorKind::Coupling, "mode counts differ in coupling " + c.key());
  auto b1 = irrep_basis(c.factor1);
  auto b2 = irrep_basis(c.factor2);
  auto bt = irrep_basis(c.target);
  const int itop = bt->index_of(highest_pattern(c.target));
  auto hw = highest_weight_space(*b1, *b2, bt->weights[itop]);
  const int mult = static_cast<int>(hw.H.cols());
  if (mult == 0) fail(ErrorKind::Coupling, "target not contained in product: " + c.key());
  if (auto e = expected_multiplicity(c); e && *e != mult) {
    std::ostringstream os;
    os << "multiplicity " << mult << " found for " << c.key() << ", closed form gives " << *e;
    fail(ErrorKind::Numerical, os.str());
  }

  CGTable t = table_skeleton(c, mult);
  t.build_residual = hw.residual;
  const long d2 = b2->dim();
  std::vector<int> pair_pos(static_cast<size_t>(b1->dim()) * d2, -1);
  for (const auto& P : t.pairs)
    for (size_t q = 0; q < P.size(); ++q) pair_pos[P[q]] = static_cast<int>(q);

  if (t.pairs_of(itop) != hw.pairs) fail(ErrorKind::Numerical, "pair layout mismatch at highest weight");
  for (int r = 0; r < mult; ++r) {
    auto col = t.column(itop, r);
    for (size_t q = 0; q < col.size(); ++q) col[q] = hw.H(static_cast<long>(q), r);
  }

  // Lowering loses accuracy near the bottom of the weight diagram, where larger
  // irreps sharing a weight have bigger ladder elements and any leak into them
  // grows. The lower half is raised from the lowest-weight space instead and
  // rotated onto the copy basis fixed at the top, using the layer both halves reach.
  const long hmax = bt->height[bt->order.front()];
  const long hmin = bt->height[bt->order.back()];
  const long mid = (hmax + hmin + 1) / 2;
  long hov = hmax;
  for (int g : bt->order)
    if (bt->height[g] >= mid) hov = bt->height[g];

  using Store = std::vector<std::vector<double>>;
  Store low(bt->dim());
  auto col_of = [&](Store* st, int iM, int r) -> std::span<double> {
    if (!st) return t.column(iM, r);
    const size_t len = t.pairs_of(iM).size();
    return {(*st)[iM].data() + static_cast<size_t>(r) * len, len};
  };
  auto step = [&](int g, bool up, Store* st) {
    const auto& sys = up ? bt->up_systems[g] : bt->systems[g];
    const auto& lad1 = up ? b1->raise : b1->lower;
    const auto& lad2 = up ? b2->raise : b2->lower;
    const auto& Pg = t.pairs[g];
    for (int r = 0; r < mult; ++r) {
      Eigen::MatrixXd B = Eigen::MatrixXd::Zero(static_cast<long>(sys.rows.size()), static_cast<long>(Pg.size()));
      for (size_t ri = 0; ri < sys.rows.size(); ++ri) {
        const auto [l, P] = sys.rows[ri];
        const auto col = col_of(st, P, r);
        const auto& pairsP = t.pairs_of(P);
        for (size_t q = 0; q < pairsP.size(); ++q) {
          const double cv = col[q];
          if (cv == 0.0) continue;
          const long i1 = pairsP[q] / d2, i2 = pairsP[q] % d2;
          for (const auto& lw : lad1[l - 1][i1]) B(static_cast<long>(ri), pair_pos[lw.to * d2 + i2]) += cv * lw.value;
          for (const auto& lw : lad2[l - 1][i2]) B(static_cast<long>(ri), pair_pos[i1 * d2 + lw.to]) += cv * lw.value;
        }
      }
      Eigen::MatrixXd X = sys.pinv * B;
      for (size_t a = 0; a < bt->groups[g].size(); ++a) {
        auto dst = col_of(st, bt->groups[g][a], r);
        for (size_t q = 0; q < dst.size(); ++q) dst[q] = X(static_cast<long>(a), static_cast<long>(q));
      }
    }
  };

  for (int g : bt->order)
    if (bt->height[g] >= mid && !bt->systems[g].rows.empty()) step(g, false, nullptr);
  if (hmax == hmin) return t;

  const int glow = bt->order.back();
  auto lw = highest_weight_space(*b1, *b2, bt->group_weight[glow], true);
  if (lw.H.cols() != mult || lw.pairs != t.pairs[glow]) fail(ErrorKind::Numerical, "lowest-weight space mismatch for " + c.key());
  t.build_residual = std::max(t.build_residual, lw.residual);
  for (int g = 0; g < static_cast<int>(bt->groups.size()); ++g)
    if (bt->height[g] <= hov)
      for (int iM : bt->groups[g]) low[iM].assign(static_cast<size_t>(mult) * t.pairs[g].size(), 0.0);
  {
    const int ilow = bt->groups[glow][0];
    for (int r = 0; r < mult; ++r) {
      auto col = col_of(&low, ilow, r);
      for (size_t q = 0; q < col.size(); ++q) col[q] = lw.H(static_cast<long>(q), r);
    }
  }
  for (auto it = bt->order.rbegin(); it != bt->order.rend(); ++it)
    if (*it != glow && bt->height[*it] <= hov) step(*it, true, &low);

  // Orthogonal Procrustes on the overlap layer.
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(mult, mult);
  for (int g : bt->order) {
    if (bt->height[g] != hov) continue;
    for (int iM : bt->groups[g])
      for (int r = 0; r < mult; ++r)
        for (int s2 = 0; s2 < mult; ++s2) {
          const auto u = col_of(&low, iM, r);
          const auto v = t.column(iM, s2);
          double acc = 0.0;
          for (size_t q = 0; q < u.size(); ++q) acc += u[q] * v[q];
          K(r, s2) += acc;
        }
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(K, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::MatrixXd Q = svd.matrixU() * svd.matrixV().transpose();
  double mismatch = 0.0;
  for (int g = 0; g < static_cast<int>(bt->groups.size()); ++g) {
    if (bt->height[g] > hov) continue;
    for (int iM : bt->groups[g]) {
      const size_t len = t.pairs[g].size();
      for (size_t q = 0; q < len; ++q)
        for (int s2 = 0; s2 < mult; ++s2) {
          double v = 0.0;
          for (int r = 0; r < mult; ++r) v += low[iM][r * len + q] * Q(r, s2);
          if (bt->height[g] == hov)
            mismatch = std::max(mismatch, std::abs(v - t.column(iM, s2)[q]));
          else
            t.column(iM, s2)[q] = v;
        }
      low[iM].clear();
      low[iM].shrink_to_fit();
    }
  }
  if (mismatch > 1e-6) {
    std::ostringstream os;
    os << "halves disagree by " << mismatch << " for " << c.key();
    fail(ErrorKind::Numerical, os.str());
  }
  t.build_residual = std::max(t.build_residual, mismatch);
  return t;
}

VerifyReport verify_table(const CGTable& t) {
  VerifyReport rep;
  const long d2 = t.dim2();
  for (size_t g = 0; g < t.bt->groups.size(); ++g) {
    const auto& P = t.pairs[g];
    for (long key : P)
      if (!weights_add(t.b1->weights[key / d2], t.b2->weights[key % d2], t.bt->group_weight[g])) ++rep.selection_violations;
    const auto& members = t.bt->groups[g];
    const long cols = static_cast<long>(members.size()) * t.multiplicity;
    Eigen::MatrixXd C(static_cast<long>(P.size()), cols);
    for (size_t a = 0; a < members.size(); ++a)
      for (int r = 0; r < t.multiplicity; ++r) {
        auto col = t.column(members[a], r);
        for (size_t q = 0; q < col.size(); ++q) C(static_cast<long>(q), static_cast<long>(a) * t.multiplicity + r) = col[q];
      }
    Eigen::MatrixXd G = C.transpose() * C - Eigen::MatrixXd::Identity(cols, cols);
    for (long j = 0; j < cols; ++j)
      for (long i = 0; i < cols; ++i)
        if (std::abs(G(i, j)) > rep.column_dev) {
          rep.column_dev = std::abs(G(i, j));
          rep.worst_pattern = members[j / t.multiplicity];
          rep.worst_copy = static_cast<int>(j % t.multiplicity) + 1;
        }
  }
  return rep;
}

double verify_completeness(const std::vector<const CGTable*>& tables) {
  if (tables.empty()) return 1.0;
  const auto& b1 = *tables[0]->b1;
  const auto& b2 = *tables[0]->b2;
  for (auto* t : tables)
    if (!(t->coupling.factor1 == b1.shape) || !(t->coupling.factor2 == b2.shape))
      fail(ErrorKind::Argument, "completeness needs tables with common factors");
  // Every product weight.
  std::map<Weight, long> product_weights;
  for (int i1 = 0; i1 < b1.dim(); ++i1)
    for (size_t g2 = 0; g2 < b2.groups.size(); ++g2) {
      Weight w = b1.weights[i1];
      for (size_t j = 0; j < w.size(); ++j) w[j] += b2.group_weight[g2][j];
      product_weights[w] += static_cast<long>(b2.groups[g2].size());
    }
  double dev = 0.0;
  for (const auto& [w, count] : product_weights) {
    std::vector<long> P = pairs_at(b1, b2, w);
    std::vector<std::span<const double>> cols;
    for (auto* t : tables) {
      const int g = t->bt->group_of_weight(w);
      if (g < 0) continue;
      for (int iM : t->bt->groups[g])
        for (int r = 0; r < t->multiplicity; ++r) cols.push_back(t->column(iM, r));
    }
    if (static_cast<long>(cols.size()) != count) return 1.0;
    Eigen::MatrixXd C(count, count);
    for (long j = 0; j < count; ++j)
      for (long q = 0; q < count; ++q) C(q, j) = cols[j][q];
    Eigen::MatrixXd R = C * C.transpose() - Eigen::MatrixXd::Identity(count, count);
    dev = std::max(dev, R.cwiseAbs().maxCoeff());
  }
  return dev;
}

std::vector<std::pair<Shape, int>> decompose_product(const Shape& f1, const Shape& f2) {
  auto b1 = irrep_basis(f1);
  auto b2 = irrep_basis(f2);
  std::map<Weight, int> dominant;
  for (size_t g1 = 0; g1 < b1->groups.size(); ++g1)
    for (size_t g2 = 0; g2 < b2->groups.size(); ++g2) {
      Weight w = b1->group_weight[g1];
      bool dom = true;
      for (size_t j = 0; j < w.size(); ++j) {
        w[j] += b2->group_weight[g2][j];
        dom = dom && w[j] >= 0;
      }
      if (dom) dominant.emplace(w, 0);
    }
  std::vector<std::pair<Shape, int>> out;
  for (auto it = dominant.rbegin(); it != dominant.rend(); ++it) {
    const int mult = static_cast<int>(highest_weight_space(*b1, *b2, it->first).H.cols());
    if (mult > 0) out.emplace_back(shape_from_dynkin(it->first), mult);
  }
  return out;
}

CompletenessReport verify_product_completeness(const Shape& f1, const Shape& f2, double batch_limit) {
  CompletenessReport rep;
  const auto dec = decompose_product(f1, f2);
  rep.irreps = static_cast<int>(dec.size());
  rep.dim_product = dim_weyl(f1) * dim_weyl(f2);
  for (const auto& [sh, mu] : dec) rep.dim_sum += dim_weyl(sh) * mu;
  if (rep.dim_sum != rep.dim_product) return rep;

  auto b1 = irrep_basis(f1);
  auto b2 = irrep_basis(f2);
  std::map<Weight, long> sizes;
  for (size_t g1 = 0; g1 < b1->groups.size(); ++g1)
    for (size_t g2 = 0; g2 < b2->groups.size(); ++g2) {
      Weight w = b1->group_weight[g1];
      for (size_t j = 0; j < w.size(); ++j) w[j] += b2->group_weight[g2][j];
      sizes[w] += static_cast<long>(b1->groups[g1].size() * b2->groups[g2].size());
    }

  // Weight batches small enough to hold every column of every component at once.
  std::vector<std::vector<Weight>> batches(1);
  double held = 0.0;
  for (const auto& [w, p] : sizes) {
    const double cost = static_cast<double>(p) * p;
    if (held > 0.0 && held + cost > batch_limit) {
      batches.emplace_back();
      held = 0.0;
    }
    batches.back().push_back(w);
    held += cost;
  }
  rep.batches = static_cast<int>(batches.size());

  double dev = 0.0;
  for (size_t bi = 0; bi < batches.size(); ++bi) {
    std::map<Weight, Eigen::MatrixXd> C;
    std::map<Weight, long> filled;
    for (const auto& w : batches[bi]) {
      C.emplace(w, Eigen::MatrixXd(sizes[w], sizes[w]));
      filled[w] = 0;
    }
    for (const auto& [sh, mu] : dec) {
      const CGTable t = build_table({f1, f2, sh});
      if (bi == 0) rep.column_dev = std::max(rep.column_dev, verify_table(t).column_dev);
      for (int iM = 0; iM < t.bt->dim(); ++iM) {
        auto it = C.find(t.bt->weights[iM]);
        if (it == C.end()) continue;
        long& f = filled[it->first];
        for (int r = 0; r < t.multiplicity; ++r) {
          const auto col = t.column(iM, r);
          if (f >= it->second.cols()) return rep;  // more columns than product states
          for (size_t q = 0; q < col.size(); ++q) it->second(static_cast<long>(q), f) = col[q];
          ++f;
        }
      }
    }
    for (auto& [w, M] : C) {
      if (filled[w] != M.cols()) return rep;
      Eigen::MatrixXd R = Eigen::MatrixXd::Identity(M.rows(), M.rows());
      R.selfadjointView<Eigen::Lower>().rankUpdate(M, -1.0);
      dev = std::max(dev, R.triangularView<Eigen::Lower>().toDenseMatrix().cwiseAbs().maxCoeff());
    }
  }
  rep.row_dev = dev;
  return rep;
}

// ---- cache ----

namespace {

uint64_t fnv1a(const std::string& s) {
  uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string cache_file(const Coupling& c, const std::string& dir) {
  std::string name = c.key();
  for (char& ch : name)
    if (ch == '(' || ch == ')' || ch == ',') ch = (ch == ',') ? '.' : '_';
  return (std::filesystem::path(dir) / (name + ".cg")).string();
}

}  // namespace

std::string cache_directory() {
  const char* d = std::getenv("PRB_CG_CACHE");
  return d ? std::string(d) : std::string();
}

bool cache_store(const CGTable& t, const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  std::string payload;
  payload.reserve(t.stored() * 32);
  long count = 0;
  char buf[96];
  const long d2 = t.dim2();
  for (int iM = 0; iM < t.bt->dim(); ++iM) {
    const auto& P = t.pairs_of(iM);
    for (int r = 0; r < t.multiplicity; ++r) {
      auto col = t.column(iM, r);
      for (size_t q = 0; q < P.size(); ++q) {
        if (col[q] == 0.0) continue;
        std::snprintf(buf, sizeof buf, "%ld %ld %d %d %.17g\n", P[q] / d2, P[q] % d2, iM, r + 1, col[q]);
        payload += buf;
        ++count;
      }
    }
  }
  const std::string path = cache_file(t.coupling, dir);
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary);
    if (!os) return false;
    os << "prbcg1 " << t.coupling.key() << ' ' << t.multiplicity << ' ' << count << ' ' << std::hex << fnv1a(payload) << std::dec
       << '\n'
       << payload;
    if (!os) return false;
  }
  std::filesystem::rename(tmp, path, ec);
  return !ec;
}

std::optional<CGTable> cache_load(const Coupling& c, const std::string& dir) {
  std::ifstream is(cache_file(c, dir), std::ios::binary);
  if (!is) return std::nullopt;
  std::string header;
  if (!std::getline(is, header)) return std::nullopt;
  std::istringstream hs(header);
  std::string magic, key, sum;
  int mult = 0;
  long count = 0;
  if (!(hs >> magic >> key >> mult >> count >> sum) || magic != "prbcg1" || key != c.key() || mult < 1) return std::nullopt;
  std::string payload((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  std::ostringstream want;
  want << std::hex << fnv1a(payload);
  if (want.str() != sum) return std::nullopt;

  CGTable t;
  try {
    t = table_skeleton(c, mult);
  } catch (const Error&) {
    return std::nullopt;
  }
  std::istringstream ps(payload);
  long i1, i2, seen = 0;
  int iM, r;
  std::string val;
  while (ps >> i1 >> i2 >> iM >> r >> val) {
    if (iM < 0 || iM >= t.bt->dim() || r < 1 || r > mult) return std::nullopt;
    const auto& P = t.pairs_of(iM);
    const long key2 = i1 * t.dim2() + i2;
    auto it = std::lower_bound(P.begin(), P.end(), key2);
    if (it == P.end() || *it != key2) return std::nullopt;
    t.column(iM, r - 1)[static_cast<size_t>(it - P.begin())] = std::strtod(val.c_str(), nullptr);
    ++seen;
  }
  if (seen != count) return std::nullopt;
  return t;
}

namespace {
std::mutex store_mu;
std::map<Coupling, std::shared_ptr<const CGTable>>& store() {
  static std::map<Coupling, std::shared_ptr<const CGTable>> s;
  return s;
}
}  // namespace

std::shared_ptr<const CGTable> get_table(const Coupling& c) {
  {
    std::lock_guard<std::mutex> lock(store_mu);
    auto it = store().find(c);
    if (it != store().end()) return it->second;
  }
  const std::string dir = cache_directory();
  std::shared_ptr<const CGTable> t;
  if (!dir.empty())
    if (auto loaded = cache_load(c, dir)) t = std::make_shared<const CGTable>(std::move(*loaded));
  if (!t) {
    t = std::make_shared<const CGTable>(build_table(c));
    if (!dir.empty()) cache_store(*t, dir);
  }
  std::lock_guard<std::mutex> lock(store_mu);
  return store().emplace(c, t).first->second;
}

void clear_table_store() {
  std::lock_guard<std::mutex> lock(store_mu);
  store().clear();
}

}  // namespace prb
