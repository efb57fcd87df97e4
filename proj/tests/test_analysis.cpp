#include <doctest.h>

#include <cmath>

#include "prb/analysis.hpp"
#include "prb/errors.hpp"
#include "su2_oracle.hpp"

using namespace prb;

TEST_CASE("exact exponential recovery") {
  std::vector<double> l;
  for (int i = 1; i <= 10; ++i) l.push_back(i);
  for (double r : {0.5, 0.9, 0.99})
    for (double A : {0.1, -0.1, 1.0, -1.0}) {
      std::vector<double> y;
      for (double x : l) y.push_back(A * std::pow(r, x));
      const auto f = fit_exponential(l, y, {});
      CAPTURE(r);
      CAPTURE(A);
      CHECK(std::abs(f.A - A) < 1e-12);
      CHECK(std::abs(f.r - r) < 1e-12);
    }
  RBSignal s;
  for (int i = 1; i <= 8; ++i) s.points.push_back({i, 0.7 * std::pow(0.9, i), 1e-3, 100, 100});
  s.points.push_back({9, std::nullopt, std::nullopt, 0, 100});
  const auto f = fit_exponential(s);
  CHECK(f.points == 8);
  CHECK(std::abs(f.r - 0.9) < 1e-12);
  CHECK(to_json(f).at("r").get<double>() == f.r);
}

TEST_CASE("noisy and degenerate fits") {
  Rng rng = stream_rng(1, 0);
  std::normal_distribution<double> nd(0.0, 1e-3);
  std::vector<double> l, y, sg;
  for (int i = 1; i <= 10; ++i) {
    l.push_back(i);
    y.push_back(0.5 + nd(rng));
    sg.push_back(1e-3);
  }
  const auto c = fit_exponential(l, y, sg);
  CHECK(std::abs(c.r - 1.0) < 3 * c.se_r + 1e-6);
  CHECK(c.se_r > 0.0);
  CHECK_THROWS_AS(fit_exponential({1, 1}, {0.5, 0.4}, {}), Error);
  CHECK_THROWS_AS(fit_exponential({1, 2}, {0.5}, {}), Error);
}

TEST_CASE("fidelity and combined weight") {
  std::map<int, double> all;
  for (int k = 0; k <= 3; ++k) all[k] = 1.0;
  const auto f = rb_fidelity(all, 3, 3);
  CHECK(f.fidelity == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(f.covered == doctest::Approx(1.0).epsilon(1e-14));
  const auto one = rb_fidelity({{2, 0.8}}, 3, 3);
  CHECK(one.fidelity == doctest::Approx(27.0 * 0.8 / 100.0));
  CHECK_THROWS_AS(rb_fidelity({{4, 1.0}}, 3, 3), Error);

  CHECK(std::abs(combined_weight(5, 10, 3) - 0.999245) < 1e-5);
  CHECK(combined_weight(4, 4, 5) == 1.0);
  for (int m = 2; m <= 6; ++m)
    for (int n = 1; n <= m; ++n) {
      const BigInt D = dim_sector(n, m);
      BigInt top = 0;
      for (int u = 1; u <= n + 1; ++u) {
        top += dim_lambda({n - u + 1, m});
        CHECK(combined_weight_exact(n, m, u) == BigRational(top, D * D));
      }
    }
  CHECK_THROWS_AS(combined_weight(3, 3, 0), Error);
}

TEST_CASE("minimum sequence length") {
  AnalysisConfig c;
  c.alpha = std::exp(-2.0);
  c.delta = 0.2;
  CHECK(min_sequence_length(c, {0, 3}) == 5);
  AnalysisConfig d = c;
  d.delta = 0.1;
  CHECK(min_sequence_length(c, {2, 3}) >= min_sequence_length(d, {2, 3}));
  d.delta = 0.3;
  CHECK_THROWS_AS(min_sequence_length(d, {0, 3}), Error);
}

TEST_CASE("first moments") {
  CHECK(first_moment(1, 1, 2, {1, 0}) == doctest::Approx(0.5));
  CHECK(std::abs(first_moment(1, 3, 3, {1, 1, 1})) < 1e-15);
  for (int m = 2; m <= 4; ++m)
    for (int n = 1; n <= std::min(m, 3); ++n)
      for (const auto& in : sector(n, m)) {
        double s = 0.0;
        for (int k = 0; k <= n; ++k) s += first_moment(k, n, m, in);
        CHECK(std::abs(s - 1.0) < 1e-10);
      }
}

TEST_CASE("second moments against the spin formula and bounds") {
  for (int n = 1; n <= 3; ++n)
    for (int a = 0; a <= n; ++a)
      for (int k = 0; k <= n; ++k) {
        CAPTURE(n);
        CAPTURE(k);
        CHECK(std::abs(second_moment(k, n, 2, {a, n - a}) - su2::second_moment(n, k, a)) < 1e-8);
        CHECK(std::abs(first_moment(k, n, 2, {a, n - a}) - su2::first_moment(n, k, a)) < 1e-12);
      }
  for (int n = 2; n <= 3; ++n)
    for (int k = 0; k <= n; ++k) {
      const FockVector in(n, 1);
      const double f = first_moment(k, n, n, in), s = second_moment(k, n, n, in);
      const double sk = frame_eigenvalue_pnr({k, n});
      CHECK(s >= f * f - 1e-10);
      CHECK(s <= 1.0 / (sk * sk) + 1e-10);
      CHECK(second_moment(k, n, n, in, Exec::Serial) == doctest::Approx(s).epsilon(1e-12));
    }
  CHECK_THROWS_AS(second_moment(1, 2, 2, {1, 0}), Error);
}

TEST_CASE("second moment against sampling, n=m=2, k=2") {
  const FockVector in{1, 1};
  const auto ctx = FilterContext::build(2, 2, in, {2});
  Rng rng = stream_rng(77, 0);
  const int N = 10000;
  double s = 0, s2 = 0;
  for (int i = 0; i < N; ++i) {
    const CMatrix g = haar_unitary(2, rng);
    const auto p = outcome_distribution(g, in);
    double u = uniform01(rng), acc = 0;
    size_t pick = p.size() - 1;
    for (size_t j = 0; j < p.size(); ++j)
      if (u < (acc += p[j])) {
        pick = j;
        break;
      }
    const double f = filter_pnr(ctx, 2, sector(2, 2)[pick], g);
    s += f * f;
    s2 += f * f * f * f;
  }
  const double mean = s / N, se = std::sqrt((s2 / N - mean * mean) / N);
  CHECK(std::abs(mean - second_moment(2, 2, 2, in)) < 5 * se);
}

TEST_CASE("sample complexity") {
  CHECK(sample_complexity(0.0, 0.1, 0.05) == 0);
  CHECK(sample_complexity(1.0, 0.1, 0.05) == 2000);
  CHECK(sample_complexity(1.0, 0.2, 0.05) < sample_complexity(1.0, 0.1, 0.05));
  CHECK(sample_complexity(1.0, 0.1, 0.1) < sample_complexity(1.0, 0.1, 0.05));
  CHECK_THROWS_AS(sample_complexity(-1.0, 0.1, 0.05), Error);
}
