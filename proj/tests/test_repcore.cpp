#include <doctest.h>

#include <functional>
#include <set>

#include "prb/errors.hpp"
#include "prb/repcore.hpp"

using namespace prb;

namespace {

// Brute force: every triangular array under the top row, kept if it interlaces.
long brute_count(const Shape& s, bool zero_only) {
  const int m = s.m();
  GTPattern P(m);
  for (int i = 1; i <= m; ++i) P(i, m) = s[i - 1];
  long count = 0;
  std::vector<std::pair<int, int>> slots;
  for (int j = m - 1; j >= 1; --j)
    for (int i = 1; i <= j; ++i) slots.push_back({i, j});
  std::function<void(size_t)> rec = [&](size_t q) {
    if (q == slots.size()) {
      if (!P.interlaces()) return;
      if (zero_only && !is_zero_weight(P)) return;
      ++count;
      return;
    }
    for (int v = 0; v <= s[0]; ++v) {
      P(slots[q].first, slots[q].second) = v;
      rec(q + 1);
    }
  };
  rec(0);
  return count;
}

}  // namespace

TEST_CASE("pattern enumeration and dimensions") {
  CHECK(enumerate_patterns(Shape({1, 0})).size() == 2);
  CHECK(enumerate_patterns(Shape({2, 1, 0})).size() == 8);
  CHECK(enumerate_patterns(Shape({0, 0})).size() == 1);
  CHECK(dim_weyl(Shape({4, 2, 0})) == 27);
  CHECK(dim_weyl(Shape({6, 3, 0})) == 64);
  for (int n = 0; n <= 5; ++n) CHECK(dim_weyl(Shape({n, 0})) == n + 1);
  CHECK(dim_lambda({0, 5}) == 1);
  CHECK(dim_lambda({1, 3}) == 8);
  CHECK(dim_lambda({1, 2}) == 3);
  CHECK(dim_sector(2, 2) == 3);
  CHECK(dim_sector(4, 4) == 35);
  CHECK(dim_sector(0, 3) == 1);
  CHECK_THROWS_AS(Shape({1, 2, 0}), Error);
  CHECK_THROWS_AS(dim_lambda({1, 1}), Error);
}

TEST_CASE("enumeration agrees with brute force and Weyl formula") {
  for (const auto& s : {Shape({2, 1, 0}), Shape({3, 1, 1, 0}), Shape({4, 2, 2, 0}), Shape({3, 3, 0})}) {
    const auto pats = enumerate_patterns(s);
    CHECK(static_cast<long>(pats.size()) == brute_count(s, false));
    CHECK(BigInt(pats.size()) == dim_weyl(s));
    CHECK(std::is_sorted(pats.begin(), pats.end()));
  }
}

TEST_CASE("sector dimension identity") {
  for (int m = 2; m <= 8; ++m)
    for (int n = 0; n <= m; ++n) {
      BigInt sum = 0;
      for (int k = 0; k <= n; ++k) {
        CHECK(dim_lambda({k, m}) == dim_weyl(lambda_shape(k, m)));
        sum += dim_lambda({k, m});
      }
      CHECK(sum == binomial(n + m - 1, n) * binomial(n + m - 1, n));
    }
}

TEST_CASE("zero-weight multiplicity against brute-force counts") {
  CHECK(zero_weight_multiplicity(3, 2) == 1);
  CHECK(zero_weight_multiplicity(1, 3) == 2);
  CHECK(zero_weight_multiplicity(2, 3) == 3);
  for (int m = 2; m <= 4; ++m)
    for (int k = 0; k <= 3; ++k) CHECK(zero_weight_multiplicity(k, m) == brute_count(lambda_shape(k, m), true));
}

TEST_CASE("fock and GT conversions") {
  const auto P = fock_to_gt({3, 2, 1});
  CHECK(P.bottom_sum(1) == 3);
  CHECK(P.row_sum(2) == 5);
  CHECK(P.row_sum(3) == 6);
  CHECK(gt_to_fock(P) == FockVector{3, 2, 1});
  const auto Z = fock_to_gt({0, 0, 0});
  for (int v : Z.flat()) CHECK(v == 0);
  for (int m = 2; m <= 4; ++m)
    for (const auto& v : sector_basis(3, m)) CHECK(gt_to_fock(fock_to_gt(v)) == v);
  // Tableau weight of a symmetric pattern is the occupation vector.
  const auto tw = tableau_weight(fock_to_gt({2, 0, 1, 1}));
  CHECK(tw == std::vector<long>{2, 0, 1, 1});
  CHECK_THROWS_AS(gt_to_fock(highest_pattern(Shape({2, 1, 0}))), Error);
}

TEST_CASE("weights") {
  CHECK(weight(GTPattern(3)) == Weight{0, 0});
  for (const auto& v : sector_basis(3, 3)) {
    const auto M = fock_to_gt(v);
    const auto tw = tableau_weight(M);
    const auto w = weight(M);
    for (int j = 0; j < 2; ++j) CHECK(w[j] == tw[j] - tw[j + 1]);
  }
}

TEST_CASE("dual patterns and phases") {
  CHECK(dual_phase(highest_pattern(lambda_shape(2, 3))) == 0);
  const auto Z = dual_pattern(GTPattern(3));
  for (int v : Z.flat()) CHECK(v == 0);
  for (int m = 2; m <= 4; ++m)
    for (const auto& v : sector_basis(2, m)) {
      const auto D = dual_pattern(fock_to_gt(v));
      CHECK(D.top() == dual_symmetric_shape(2, m));
      CHECK(D.interlaces());
      CHECK(dual_pattern(D) == fock_to_gt(v));
      // Dual state carries the opposite weight.
      const auto w = weight(fock_to_gt(v)), wd = weight(D);
      for (size_t j = 0; j < w.size(); ++j) CHECK(w[j] == -wd[j]);
    }
}

TEST_CASE("decompositions") {
  const auto d = decompose_omega(3, 3);
  REQUIRE(d.size() == 4);
  CHECK(d[3].shape() == Shape({6, 3, 0}));
  CHECK(decompose_omega(0, 4).size() == 1);
  CHECK(tensor_square_multiplicity(2, 1, 4) == 2);
  CHECK(tensor_square_multiplicity(1, 3, 3) == 0);
  CHECK(tensor_square_multiplicity(2, 1, 2) == 1);
}
