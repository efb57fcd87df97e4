#include <algorithm>
#include <cmath>
#include <mutex>

#include "prb/cg.hpp"
#include "prb/errors.hpp"

namespace prb {

double lowering_element(const GTPattern& M, int k, int l) {
  const int m = M.m();
  if (l < 1 || l >= m || k < 1 || k > l) return 0.0;
  const long mk = M(k, l);
  // Interlacing of the lowered pattern.
  if (mk - 1 < M(k + 1, l + 1)) return 0.0;
  if (k <= l - 1 && mk - 1 < M(k, l - 1)) return 0.0;

  long double num = -1.0L;
  for (int kp = 1; kp <= l + 1; ++kp) num *= static_cast<long double>(M(kp, l + 1) - mk + k - kp + 1);
  for (int kp = 1; kp <= l - 1; ++kp) num *= static_cast<long double>(M(kp, l - 1) - mk + k - kp);
  long double den = 1.0L;
  for (int kp = 1; kp <= l; ++kp) {
    if (kp == k) continue;
    den *= static_cast<long double>(M(kp, l) - mk + k - kp + 1) * static_cast<long double>(M(kp, l) - mk + k - kp);
  }
  const long double q = num / den;
  return q > 0 ? static_cast<double>(std::sqrt(q)) : 0.0;
}

namespace {

Weight add_root(const Weight& w, int l, int sign) {
  Weight out = w;
  const int n = static_cast<int>(w.size());
  out[l - 1] += 2 * sign;
  if (l - 2 >= 0) out[l - 2] -= sign;
  if (l < n) out[l] -= sign;
  return out;
}

}  // namespace

IrrepBasis::IrrepBasis(const Shape& s) : shape(s), m(s.m()) {
  patterns = enumerate_patterns(shape);
  const int d = dim();
  weights.resize(d);
  for (int i = 0; i < d; ++i) {
    weights[i] = weight(patterns[i]);
    group_index_.emplace(weights[i], 0);
  }
  int gid = 0;
  for (auto& [w, id] : group_index_) {
    id = gid++;
    group_weight.push_back(w);
  }
  groups.resize(gid);
  group_of.resize(d);
  pos_in_group.resize(d);
  for (int i = 0; i < d; ++i) {
    const int g = group_index_.at(weights[i]);
    group_of[i] = g;
    pos_in_group[i] = static_cast<int>(groups[g].size());
    groups[g].push_back(i);
  }
  height.assign(gid, 0);
  for (int g = 0; g < gid; ++g) height[g] = patterns[groups[g][0]].bottom_sum(m - 1);
  order.resize(gid);
  for (int g = 0; g < gid; ++g) order[g] = g;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (height[a] != height[b]) return height[a] > height[b];
    return group_weight[a] > group_weight[b];
  });

  lower.assign(m - 1, std::vector<std::vector<Ladder>>(d));
  raise.assign(m - 1, std::vector<std::vector<Ladder>>(d));
  for (int i = 0; i < d; ++i) {
    for (int l = 1; l < m; ++l) {
      for (int k = 1; k <= l; ++k) {
        const double v = lowering_element(patterns[i], k, l);
        if (v == 0.0) continue;
        GTPattern L = patterns[i];
        L(k, l) -= 1;
        const int j = index_of(L);
        if (j < 0) fail(ErrorKind::Numerical, "lowered pattern missing from basis");
        lower[l - 1][i].push_back({j, v});
        raise[l - 1][j].push_back({i, v});
      }
    }
  }

  auto make_system = [&](int g, int sign) {
    GroupSystem sys;
    const auto& ladder = sign > 0 ? lower : raise;
    for (int l = 1; l < m; ++l) {
      const int gp = group_of_weight(add_root(group_weight[g], l, sign));
      if (gp < 0) continue;
      for (int P : groups[gp])
        if (!ladder[l - 1][P].empty()) sys.rows.push_back({l, P});
    }
    if (sys.rows.empty()) return sys;
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(static_cast<long>(sys.rows.size()), static_cast<long>(groups[g].size()));
    for (size_t r = 0; r < sys.rows.size(); ++r) {
      const auto [l, P] = sys.rows[r];
      for (const auto& e : ladder[l - 1][P]) A(static_cast<long>(r), pos_in_group[e.to]) += e.value;
    }
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(A);
    if (cod.rank() < A.cols()) fail(ErrorKind::Numerical, "ladder system is rank deficient for " + shape.str());
    sys.pinv = cod.pseudoInverse();
    return sys;
  };
  systems.resize(gid);
  up_systems.resize(gid);
  for (int g = 0; g < gid; ++g) {
    systems[g] = make_system(g, +1);
    up_systems[g] = make_system(g, -1);
  }
}

int IrrepBasis::index_of(const GTPattern& M) const {
  auto it = std::lower_bound(patterns.begin(), patterns.end(), M);
  if (it == patterns.end() || !(*it == M)) return -1;
  return static_cast<int>(it - patterns.begin());
}

int IrrepBasis::group_of_weight(const Weight& w) const {
  auto it = group_index_.find(w);
  return it == group_index_.end() ? -1 : it->second;
}

std::shared_ptr<const IrrepBasis> irrep_basis(const Shape& shape) {
  static std::mutex mu;
  static std::map<Shape, std::shared_ptr<const IrrepBasis>> cache;
  {
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(shape);
    if (it != cache.end()) return it->second;
  }
  auto b = std::make_shared<const IrrepBasis>(shape);
  std::lock_guard<std::mutex> lock(mu);
  return cache.emplace(shape, b).first->second;
}

}  // namespace prb
