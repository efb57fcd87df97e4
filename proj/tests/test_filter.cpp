#include <doctest.h>

#include <cmath>
#include <sstream>

#include "prb/errors.hpp"
#include "prb/filter.hpp"
#include "su2_oracle.hpp"

using namespace prb;

namespace {

ExperimentRecord record(int len, const CMatrix& g, FockVector out, bool survived = true) {
  ExperimentRecord r;
  r.seq_len = len;
  r.product = g;
  r.outcome = std::move(out);
  r.survived = survived;
  return r;
}

}  // namespace

TEST_CASE("frame eigenvalue closed form") {
  for (int k = 0; k <= 5; ++k) CHECK(frame_eigenvalue_exact({k, 2}) == BigRational(1, 2 * k + 1));
  CHECK(frame_eigenvalue_exact({0, 4}) == 1);
  CHECK(frame_eigenvalue_exact({2, 3}) == BigRational(1, 9));
  for (int m = 2; m <= 3; ++m)
    for (int n = 1; n <= m; ++n)
      for (int k = 0; k <= n; ++k) CHECK(std::abs(frame_eigenvalue_cg(k, n, m) - frame_eigenvalue_pnr({k, m})) < 1e-12);
}

TEST_CASE("trivial irrep and particle loss") {
  Rng rng = stream_rng(2, 0);
  const auto ctx = FilterContext::build(2, 2, {1, 1});
  for (int t = 0; t < 5; ++t) {
    const CMatrix g = haar_unitary(2, rng);
    for (const auto& out : sector(2, 2)) CHECK(filter_pnr(ctx, 0, out, g) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(filter_pnr(ctx, 1, {1, 0}, g) == 0.0);
    CHECK(filter_pnr(ctx, 2, {0, 0}, g) == 0.0);
  }
  CHECK(filter_indicator({1, 1}, 2) == 1);
  CHECK(filter_indicator({0, 0}, 2) == 0);
  CHECK_THROWS_AS(ctx.irrep(5), Error);
  CHECK_THROWS_AS(filter_pnr(ctx, 1, {1, 1, 0}, haar_unitary(3, rng)), Error);
  CHECK_THROWS_AS(FilterContext::build(2, 3, {1, 1}), Error);
}

TEST_CASE("collision-free input has no lambda_1 component") {
  for (int n = 2; n <= 4; ++n) {
    FockVector in(n, 1);
    const auto ctx = FilterContext::build(n, n, in, {1});
    for (double x : ctx.irrep(1).x) CHECK(x == 0.0);
    CHECK(ctx.irrep(1).overlap == 0.0);
  }
}

TEST_CASE("SU(2) filter matches the spin formula") {
  Rng rng = stream_rng(4, 0);
  for (int n = 1; n <= 3; ++n)
    for (int a = 0; a <= n; ++a) {
      const auto ctx = FilterContext::build(n, 2, {a, n - a});
      for (int t = 0; t < 100; ++t) {
        const CMatrix g = haar_unitary(2, rng);
        for (int k = 0; k <= n; ++k)
          for (int x = 0; x <= n; ++x) {
            const double ours = filter_pnr(ctx, k, {x, n - x}, g);
            const double ref = su2::filter(n, k, a, x, g(0, 0));
            CHECK(std::abs(ours - ref) < 1e-8);
          }
      }
    }
}

TEST_CASE("filter weights do not depend on target basis signs") {
  Rng rng = stream_rng(8, 0);
  const FockVector in{2, 1, 0};
  const auto ctx = FilterContext::build(3, 3, in);
  for (int k = 0; k <= 3; ++k) {
    const auto sl = sector_slice(3, k, 3);
    std::vector<double> sign(sl->zero.size());
    for (double& s : sign) s = uniform01(rng) < 0.5 ? -1.0 : 1.0;
    const int i0 = sector_index(in);
    for (int c = 0; c < sl->dim(); ++c) {
      double acc = 0.0;
      for (size_t z = 0; z < sign.size(); ++z) {
        const double c0 = std::abs(sl->c[i0][z]) < 1e-12 ? 0.0 : sl->c[i0][z];
        acc += (sign[z] * c0) * (sign[z] * sl->c[c][z]);
      }
      CHECK(ctx.irrep(k).x[c] == doctest::Approx(sl->eps[i0] * sl->eps[c] * acc).epsilon(1e-13));
    }
  }
}

TEST_CASE("estimator edge cases") {
  const auto ctx = FilterContext::build(2, 2, {1, 1});
  const CMatrix I = CMatrix::Identity(2, 2);
  std::vector<ExperimentRecord> recs;
  for (int i = 0; i < 10; ++i) recs.push_back(record(1, I, {1, 1}));
  FilterSpec spec;
  spec.k = 2;
  auto sig = estimate_signal(recs, spec, &ctx, 2);
  REQUIRE(sig.points.size() == 1);
  CHECK(*sig.points[0].stderr_ == 0.0);
  CHECK(sig.filter_id == "lambda_2");

  // Lost shots are skipped under post-selection and counted otherwise.
  recs.push_back(record(1, I, {1, 0}, false));
  recs.push_back(record(2, I, {0, 1}, false));
  sig = estimate_signal(recs, spec, &ctx, 2);
  REQUIRE(sig.points.size() == 2);
  CHECK(sig.points[0].count_used == 10);
  CHECK(sig.points[0].count_total == 11);
  CHECK_FALSE(sig.points[1].estimate.has_value());
  CHECK_FALSE(sig.warnings.empty());
  spec.post_select = false;
  const auto all = estimate_signal(recs, spec, &ctx, 2);
  CHECK(*all.points[0].estimate == doctest::Approx(*sig.points[0].estimate * 10.0 / 11.0));
  CHECK(*all.points[1].estimate == 0.0);

  FilterSpec ind;
  ind.kind = FilterSpec::Kind::Indicator;
  const auto is = estimate_signal(recs, ind, nullptr, 2);
  CHECK(*is.points[0].estimate == doctest::Approx(10.0 / 11.0));

  auto mixed = recs;
  mixed.push_back(record(1, CMatrix::Identity(3, 3), {1, 1, 0}));
  CHECK_THROWS_AS(estimate_signal(mixed, spec, &ctx, 2), Error);
  auto inconsistent = recs;
  inconsistent.push_back(record(1, I, {1, 0}, true));
  CHECK_THROWS_AS(estimate_signal(inconsistent, ind, nullptr, 2), Error);
}

TEST_CASE("serial and parallel estimates agree; CSV round trip") {
  SimConfig c;
  c.n = 2;
  c.m = 3;
  c.input = {1, 1, 0};
  c.lengths = {1, 2, 4};
  c.shots = 300;
  c.loss.kind = LossModel::Kind::Uniform;
  c.loss.sqrt_p = 0.9;
  const auto recs = simulate(c);
  const auto ctx = FilterContext::build(2, 3, c.input);
  for (int k = 0; k <= 2; ++k) {
    FilterSpec spec;
    spec.k = k;
    const auto a = estimate_signal(recs, spec, &ctx, 2, Exec::Serial);
    const auto b = estimate_signal(recs, spec, &ctx, 2, Exec::Parallel);
    REQUIRE(a.points.size() == 3);
    for (size_t i = 0; i < a.points.size(); ++i) {
      CHECK(*a.points[i].estimate == *b.points[i].estimate);
      CHECK(*a.points[i].stderr_ == *b.points[i].stderr_);
    }
    std::stringstream ss;
    write_signal_csv(ss, a);
    const auto back = read_signal_csv(ss);
    CHECK(back.filter_id == a.filter_id);
    REQUIRE(back.points.size() == a.points.size());
    for (size_t i = 0; i < a.points.size(); ++i) {
      CHECK(back.points[i].seq_len == a.points[i].seq_len);
      CHECK(*back.points[i].estimate == *a.points[i].estimate);
      CHECK(back.points[i].count_used == a.points[i].count_used);
    }
  }
  RBSignal gap;
  gap.filter_id = "lambda_1";
  gap.points.push_back({3, std::nullopt, std::nullopt, 0, 5});
  std::stringstream ss;
  write_signal_csv(ss, gap);
  const auto back = read_signal_csv(ss);
  CHECK_FALSE(back.points[0].estimate.has_value());
  std::stringstream junk("seq_len,estimate\nx,y\n");
  CHECK_THROWS_AS(read_signal_csv(junk), Error);
}

TEST_CASE("pairwise sum") {
  std::vector<double> v(1000, 0.1);
  CHECK(pairwise_sum(v) == doctest::Approx(100.0).epsilon(1e-14));
  CHECK(pairwise_sum(std::vector<double>{}) == 0.0);
}
