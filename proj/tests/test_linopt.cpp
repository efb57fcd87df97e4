#include <doctest.h>

#include <cmath>
#include <map>

#include "prb/errors.hpp"
#include "prb/linopt.hpp"

using namespace prb;

namespace {

CMatrix random_complex(int r, Rng& rng) {
  std::normal_distribution<double> nd;
  CMatrix A(r, r);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j) A(i, j) = {nd(rng), nd(rng)};
  return A;
}

// Exact outcome law under per-mode pure loss, propagated as a density matrix on
// every Fock state with at most n particles.
std::map<FockVector, double> kraus_oracle(const std::vector<CMatrix>& gates, const std::vector<double>& tp,
                                          const FockVector& input, const LossModel& loss) {
  const int n = total(input), m = static_cast<int>(input.size());
  std::vector<FockVector> basis;
  for (int k = 0; k <= n; ++k)
    for (const auto& v : sector(k, m)) basis.push_back(v);
  const int D = static_cast<int>(basis.size());
  std::map<FockVector, int> idx;
  for (int i = 0; i < D; ++i) idx[basis[i]] = i;
  CMatrix rho = CMatrix::Zero(D, D);
  rho(idx[input], idx[input]) = 1.0;

  auto lose = [&](double eta) {
    for (int mode = 0; mode < m; ++mode) {
      CMatrix out = CMatrix::Zero(D, D);
      for (int k = 0; k <= n; ++k) {
        CMatrix K = CMatrix::Zero(D, D);
        for (int i = 0; i < D; ++i) {
          const int c = basis[i][mode];
          if (k > c) continue;
          FockVector w = basis[i];
          w[mode] -= k;
          const double binom = std::tgamma(c + 1.0) / (std::tgamma(k + 1.0) * std::tgamma(c - k + 1.0));
          K(idx[w], i) = std::sqrt(binom * std::pow(eta, c - k) * std::pow(1 - eta, k));
        }
        out += K * rho * K.adjoint();
      }
      rho = out;
    }
  };
  auto evolve = [&](const CMatrix& g) {
    CMatrix U = CMatrix::Zero(D, D);
    for (int i = 0; i < D; ++i)
      for (int j = 0; j < D; ++j)
        if (total(basis[i]) == total(basis[j])) U(i, j) = amplitude(g, basis[i], basis[j]);
    rho = U * rho * U.adjoint();
  };
  lose(loss.sqrt_p_sp * loss.sqrt_p_sp);
  for (size_t j = 0; j < gates.size(); ++j) {
    evolve(gates[j]);
    lose(tp[j] * tp[j]);
  }
  lose(loss.sqrt_p_m * loss.sqrt_p_m);
  std::map<FockVector, double> p;
  for (int i = 0; i < D; ++i) p[basis[i]] = rho(i, i).real();
  return p;
}

}  // namespace

TEST_CASE("permanent examples and errors") {
  CHECK(std::abs(permanent(CMatrix::Identity(5, 5)) - 1.0) < 1e-14);
  CHECK(std::abs(permanent(CMatrix::Ones(3, 3)) - 6.0) < 1e-13);
  CHECK(std::abs(permanent(CMatrix(0, 0)) - 1.0) == 0.0);
  CHECK_THROWS_AS(permanent(CMatrix::Ones(2, 3)), Error);
}

TEST_CASE("Ryser matches the permutation sum") {
  Rng rng = stream_rng(11, 0);
  for (int trial = 0; trial < 200; ++trial) {
    const int r = 1 + trial % 7;
    const CMatrix A = random_complex(r, rng);
    const cplx ref = permanent_naive(A);
    CHECK(std::abs(permanent(A) - ref) <= 1e-9 * std::max(1.0, std::abs(ref)));
  }
  for (int r : {12, 13, 14}) {
    const CMatrix A = random_complex(r, rng);
    const cplx a = permanent(A), b = permanent_parallel(A);
    CHECK(std::abs(a - b) <= 1e-10 * std::abs(a));
  }
}

TEST_CASE("submatrix and amplitudes") {
  Rng rng = stream_rng(3, 0);
  const CMatrix g = haar_unitary(3, rng);
  CHECK(submatrix(g, {1, 1, 1}, {1, 1, 1}).isApprox(g));
  const CMatrix g2 = haar_unitary(2, rng);
  const CMatrix S = submatrix(g2, {1, 1}, {2, 0});
  REQUIRE(S.rows() == 2);
  CHECK(S(0, 0) == g2(0, 0));
  CHECK(S(0, 1) == g2(0, 0));
  CHECK(S(1, 0) == g2(1, 0));
  CHECK(submatrix(g, {0, 0, 0}, {0, 0, 0}).size() == 0);
  CHECK(std::abs(amplitude(g, {0, 0, 0}, {0, 0, 0}) - 1.0) < 1e-15);
  CHECK_THROWS_AS(submatrix(g, {1, 0, 0}, {1, 1, 0}), Error);
  CHECK(std::abs(amplitude(CMatrix::Identity(3, 3), {2, 0, 1}, {2, 0, 1}) - 1.0) < 1e-14);
  CMatrix bs(2, 2);
  bs << 1, 1, 1, -1;
  bs /= std::sqrt(2.0);
  CHECK(std::abs(amplitude(bs, {1, 1}, {1, 1})) < 1e-15);
  CHECK(std::norm(amplitude(bs, {2, 0}, {1, 1})) == doctest::Approx(0.5));
}

TEST_CASE("sector representation is unitary and multiplicative") {
  Rng rng = stream_rng(5, 0);
  for (int m = 2; m <= 4; ++m)
    for (int n = 1; n <= m; ++n) {
      const CMatrix g = haar_unitary(m, rng), h = haar_unitary(m, rng);
      const auto& B = sector(n, m);
      const int D = static_cast<int>(B.size());
      CMatrix T(D, D), Tg(D, D), Th(D, D);
      for (int i = 0; i < D; ++i)
        for (int j = 0; j < D; ++j) {
          Tg(i, j) = amplitude(g, B[i], B[j]);
          Th(i, j) = amplitude(h, B[i], B[j]);
          T(i, j) = amplitude(g * h, B[i], B[j]);
        }
      CHECK((Tg.adjoint() * Tg - CMatrix::Identity(D, D)).norm() < 1e-10);
      CHECK((Tg * Th - T).norm() < 1e-10);
    }
}

TEST_CASE("outcome distributions") {
  Rng rng = stream_rng(6, 0);
  for (int m = 2; m <= 5; ++m)
    for (int n = 1; n <= m; ++n) {
      const auto p = outcome_distribution(haar_unitary(m, rng), sector(n, m)[0]);
      double s = 0.0;
      for (double x : p) s += x;
      CHECK(std::abs(s - 1.0) < 1e-9);
    }
  const auto id = outcome_distribution(CMatrix::Identity(3, 3), {1, 0, 2});
  CHECK(id[sector_index({1, 0, 2})] == doctest::Approx(1.0));
  CMatrix perm = CMatrix::Zero(3, 3);
  perm(1, 0) = perm(2, 1) = perm(0, 2) = 1.0;
  const auto pp = outcome_distribution(perm, {2, 1, 0});
  CHECK(pp[sector_index({0, 2, 1})] == doctest::Approx(1.0));
  CHECK_THROWS_AS(outcome_distribution(CMatrix::Identity(4, 4), {4, 0, 0, 0}, 10), Error);
}

TEST_CASE("Haar sampling") {
  Rng a = stream_rng(9, 4), b = stream_rng(9, 4);
  const CMatrix U = haar_unitary(4, a);
  CHECK(U == haar_unitary(4, b));
  CHECK(unitarity_defect(U) < 1e-10);
  // E|U_11|^2 = 1/m and E|U_11|^4 = 2/(m(m+1)).
  Rng rng = stream_rng(10, 0);
  const int m = 3, N = 40000;
  double s2 = 0, s4 = 0;
  for (int i = 0; i < N; ++i) {
    const double x = std::norm(haar_unitary(m, rng)(0, 0));
    s2 += x;
    s4 += x * x;
  }
  CHECK(std::abs(s2 / N - 1.0 / m) < 5 * std::sqrt(1.0 / (N * 18.0)));
  CHECK(s4 / N == doctest::Approx(2.0 / (m * (m + 1))).epsilon(0.03));
  CHECK(unitarity_defect(composite_local_unitary(4, rng)) < 1e-12);
}

TEST_CASE("compose") {
  Rng rng = stream_rng(12, 0);
  const CMatrix U = haar_unitary(3, rng), V = haar_unitary(3, rng);
  CHECK(compose({U}) == U);
  CHECK((compose({U, U.adjoint()}) - CMatrix::Identity(3, 3)).norm() < 1e-10);
  CHECK((compose({U, V}) - V * U).norm() < 1e-14);
  CHECK_THROWS_AS(compose({2.0 * U}), Error);
}

TEST_CASE("simulation contracts") {
  SimConfig c;
  c.n = 2;
  c.m = 3;
  c.input = {1, 1, 0};
  c.lengths = {1, 3};
  c.shots = 50;
  c.measure = Measure::Identity;
  for (const auto& r : simulate(c)) CHECK(r.outcome == c.input);

  c.measure = Measure::Haar;
  c.loss.kind = LossModel::Kind::Uniform;
  c.loss.sqrt_p = 0.9;
  const auto a = simulate(c, Exec::Serial), b = simulate(c, Exec::Parallel);
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].outcome == b[i].outcome);
    CHECK(a[i].product == b[i].product);
  }

  SimConfig bad = c;
  bad.input = {1, 0, 0};
  CHECK_THROWS_AS(simulate(bad), Error);
  bad = c;
  bad.loss.sqrt_p = 1.5;
  CHECK_THROWS_AS(simulate(bad), Error);
  bad = c;
  bad.lengths = {};
  CHECK_THROWS_AS(simulate(bad), Error);
}

TEST_CASE("uniform loss survival rate") {
  SimConfig c;
  c.n = 3;
  c.m = 3;
  c.input = {1, 1, 1};
  c.lengths = {2};
  c.shots = 20000;
  c.loss.kind = LossModel::Kind::Uniform;
  c.loss.sqrt_p = 0.95;
  c.loss.sqrt_p_sp = 0.99;
  const auto recs = simulate(c);
  double kept = 0;
  for (const auto& r : recs) kept += r.survived;
  const double q = 0.99 * 0.99 * std::pow(0.95, 4);
  const double expect = std::pow(q, 3);
  CHECK(std::abs(kept / c.shots - expect) < 4 * std::sqrt(expect * (1 - expect) / c.shots));
}

TEST_CASE("lossy sequences match a Kraus density-matrix oracle") {
  Rng grng = stream_rng(21, 0);
  LossModel loss;
  loss.kind = LossModel::Kind::GateRandom;
  loss.sqrt_p_sp = 0.97;
  loss.sqrt_p_m = 0.93;
  for (const FockVector& input : {FockVector{1, 1}, FockVector{2, 0}, FockVector{1, 0}}) {
    const std::vector<CMatrix> gates = {haar_unitary(2, grng), haar_unitary(2, grng)};
    const std::vector<double> tp = {0.9, 0.8};
    const auto exact = kraus_oracle(gates, tp, input, loss);
    std::map<FockVector, double> emp;
    Rng rng = stream_rng(22, 0);
    const int N = 100000;
    int flag_errors = 0;
    for (int s = 0; s < N; ++s) {
      const auto r = run_sequence(gates, tp, input, loss, rng, false);
      emp[r.outcome] += 1.0 / N;
      flag_errors += r.survived != (total(r.outcome) == total(input));
    }
    CHECK(flag_errors == 0);
    double tv = 0.0;
    for (const auto& [v, p] : exact) tv += 0.5 * std::abs(p - (emp.count(v) ? emp[v] : 0.0));
    CAPTURE(input);
    CHECK(tv <= 2e-2);
  }
}
