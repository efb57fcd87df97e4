#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "prb/cg.hpp"
#include "prb/errors.hpp"
#include "su2_oracle.hpp"

using namespace prb;

namespace {

// Doubled magnetic number of an SU(2) pattern.
int su2_tm(const GTPattern& P) { return 2 * P(1, 1) - P(1, 2) - P(2, 2); }

// Largest deviation from the Racah oracle, after fixing the global sign on the
// largest coefficient.
double su2_deviation(const CGTable& t) {
  const int tj1 = t.coupling.factor1[0] - t.coupling.factor1[1];
  const int tj2 = t.coupling.factor2[0] - t.coupling.factor2[1];
  const int tJ = t.coupling.target[0] - t.coupling.target[1];
  double sign = 0.0, best = 0.0, dev = 0.0;
  for (int pass = 0; pass < 2; ++pass)
    for (int iM = 0; iM < t.bt->dim(); ++iM)
      for (int i1 = 0; i1 < t.b1->dim(); ++i1)
        for (int i2 = 0; i2 < t.b2->dim(); ++i2) {
          const double ours = t.at(i1, i2, iM, 0);
          const double ref = su2::cg(tj1, su2_tm(t.b1->patterns[i1]), tj2, su2_tm(t.b2->patterns[i2]), tJ,
                                     su2_tm(t.bt->patterns[iM]));
          if (pass == 0 && std::abs(ref) > best) {
            best = std::abs(ref);
            sign = (ours * ref > 0) ? 1.0 : -1.0;
          }
          if (pass == 1) dev = std::max(dev, std::abs(ours - sign * ref));
        }
  return dev;
}

}  // namespace

TEST_CASE("SU(2) tables match the Racah formula") {
  const auto t = build_table({Shape({1, 0}), Shape({1, 0}), Shape({2, 0})});
  GTPattern up(2), down(2), mid(2);
  up(1, 2) = 1;
  up(1, 1) = 1;
  down(1, 2) = 1;
  mid(1, 2) = 2;
  mid(1, 1) = 1;
  CHECK(std::abs(t.coefficient(up, down, mid, 1)) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-14));
  for (const auto& c : {Coupling{Shape({2, 0}), Shape({2, 0}), Shape({2, 0})}, Coupling{Shape({3, 0}), Shape({2, 0}), Shape({3, 0})},
                        Coupling{Shape({3, 0}), Shape({3, 0}), Shape({4, 0})}, Coupling{Shape({4, 0}), Shape({4, 0}), Shape({0, 0})}}) {
    CAPTURE(c.key());
    CHECK(su2_deviation(build_table(c)) < 1e-13);
  }
}

TEST_CASE("SU(2) sector coupling n=1, k=1") {
  const auto t = build_table(sector_coupling(1, 1, 2));
  GTPattern z(2);
  z(1, 2) = 2;
  z(1, 1) = 1;
  const int iz = t.bt->index_of(z);
  const auto col = t.column(iz, 0);
  REQUIRE(col.size() == 2);
  CHECK(std::abs(col[0]) == doctest::Approx(1.0 / std::sqrt(2.0)));
  // Triplet zero state: <1/2 1/2; 1/2 -1/2|1 0> = <1/2 -1/2; 1/2 1/2|1 0>.
  CHECK(col[0] * col[1] == doctest::Approx(0.5));
}

TEST_CASE("sector and square tables verify") {
  for (int m = 2; m <= 3; ++m)
    for (int n = 1; n <= m; ++n)
      for (int k = 0; k <= n; ++k) {
        const auto t = build_table(sector_coupling(n, k, m));
        CAPTURE(t.coupling.key());
        CHECK(t.multiplicity == 1);
        CHECK(verify_table(t).pass());
      }
  const auto t = build_table(square_coupling(1, 1, 3));
  CHECK(t.multiplicity == 2);
  CHECK(verify_table(t).pass());
}

TEST_CASE("perturbed table fails verification") {
  auto t = build_table(sector_coupling(2, 2, 2));
  CHECK(verify_table(t).pass());
  t.coeffs[3][0] += 1e-6;
  const auto rep = verify_table(t);
  CHECK_FALSE(rep.pass());
  CHECK(rep.worst_pattern == 3);
}

TEST_CASE("coefficient conventions") {
  const auto t = build_table(square_coupling(1, 1, 3));
  const auto& b = *t.b1;
  // Weight-violating triple.
  CHECK(t.coefficient(b.patterns[0], b.patterns[0], t.bt->patterns[0], 1) == 0.0);
  const int itop = t.bt->index_of(highest_pattern(t.coupling.target));
  for (int r = 0; r < t.multiplicity; ++r) {
    const auto col = t.column(itop, r);
    for (double v : col)
      if (std::abs(v) > 1e-12) {
        CHECK(v > 0.0);
        break;
      }
  }
  const auto again = build_table(square_coupling(1, 1, 3));
  CHECK(again.coeffs == t.coeffs);
  CHECK_THROWS_AS(t.coefficient(b.patterns[0], b.patterns[0], highest_pattern(Shape({4, 2, 0})), 1), Error);
  CHECK_THROWS_AS(build_table({Shape({1, 0, 0}), Shape({1, 0, 0}), Shape({3, 0, 0})}), Error);
}

TEST_CASE("row relation over complete decompositions") {
  for (int m = 2; m <= 3; ++m)
    for (int n = 1; n <= 3; ++n) {
      std::vector<CGTable> ts;
      for (int k = 0; k <= n; ++k) ts.push_back(build_table(sector_coupling(n, k, m)));
      std::vector<const CGTable*> ptr;
      for (auto& t : ts) ptr.push_back(&t);
      CHECK(verify_completeness(ptr) < 1e-12);
      ptr.pop_back();
      CHECK(verify_completeness(ptr) == 1.0);
    }
  for (int k = 1; k <= 2; ++k) {
    const auto rep = verify_product_completeness(lambda_shape(k, 3), lambda_shape(k, 3));
    CHECK(rep.dim_sum == rep.dim_product);
    CHECK(rep.row_dev < 1e-12);
    CHECK(rep.column_dev < 1e-12);
  }
}

TEST_CASE("decompose_product dimensions") {
  const auto d = decompose_product(lambda_shape(2, 3), lambda_shape(2, 3));
  BigInt sum = 0;
  for (const auto& [s, mu] : d) {
    sum += dim_weyl(s) * mu;
    for (int l = 0; l <= 4; ++l)
      if (s == lambda_shape(l, 3)) CHECK(mu == tensor_square_multiplicity(2, l, 3));
  }
  CHECK(sum == 27 * 27);
}

TEST_CASE("dual phases intertwine the conjugate lowering operators") {
  for (int m = 2; m <= 4; ++m)
    for (int n = 1; n <= 3; ++n) {
      const auto bs = irrep_basis(symmetric_shape(n, m));
      const auto bd = irrep_basis(dual_symmetric_shape(n, m));
      for (int c = 0; c < bs->dim(); ++c) {
        const int ec = parity_sign(dual_phase(bs->patterns[c]));
        const int D = bd->index_of(dual_pattern(bs->patterns[c]));
        REQUIRE(D >= 0);
        for (int l = 1; l < m; ++l) {
          // conj(tau) lowers with -E_{l,l+1}^T; the dual basis must reproduce it.
          size_t expected = 0;
          for (int c2 = 0; c2 < bs->dim(); ++c2)
            for (const auto& e : bs->lower[l - 1][c2])
              if (e.to == c) ++expected;
          CHECK(bd->lower[l - 1][D].size() == expected);
          for (const auto& e : bd->lower[l - 1][D]) {
            const int c2 = bs->index_of(dual_pattern(bd->patterns[e.to]));
            REQUIRE(c2 >= 0);
            const int ec2 = parity_sign(dual_phase(bs->patterns[c2]));
            double v = 0.0;
            for (const auto& f : bs->lower[l - 1][c2])
              if (f.to == c) v = f.value;
            CHECK(e.value == doctest::Approx(-ec * ec2 * v).epsilon(1e-13));
          }
        }
      }
    }
}

TEST_CASE("cache round trip and corruption") {
  const auto dir = std::filesystem::temp_directory_path() / "prb_cg_cache_test";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  const auto t = build_table(square_coupling(1, 2, 3));
  REQUIRE(cache_store(t, dir.string()));
  auto back = cache_load(t.coupling, dir.string());
  REQUIRE(back.has_value());
  CHECK(back->coeffs == t.coeffs);
  CHECK(back->pairs == t.pairs);
  CHECK(back->multiplicity == t.multiplicity);
  for (const auto& f : std::filesystem::directory_iterator(dir)) {
    std::fstream io(f.path(), std::ios::in | std::ios::out | std::ios::binary);
    io.seekp(-9, std::ios::end);
    io.put('\x7f');
  }
  CHECK_FALSE(cache_load(t.coupling, dir.string()).has_value());
  CHECK_FALSE(cache_load(square_coupling(1, 1, 3), dir.string()).has_value());
  std::filesystem::remove_all(dir);
}
