#include "prb/linopt.hpp"

#include <omp.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <mutex>
#include <numeric>

#include "prb/errors.hpp"

namespace prb {

double unitarity_defect(const CMatrix& U) {
  if (U.rows() != U.cols()) return INFINITY;
  return (U.adjoint() * U - CMatrix::Identity(U.rows(), U.cols())).cwiseAbs().maxCoeff();
}

PassiveUnitary::PassiveUnitary(CMatrix U, double tol) : U_(std::move(U)) {
  if (U_.rows() != U_.cols() || U_.rows() < 1) fail(ErrorKind::Argument, "passive unitary must be square");
  if (unitarity_defect(U_) > tol) fail(ErrorKind::Numerical, "matrix is not unitary within tolerance");
}

cplx permanent(const CMatrix& A) {
  if (A.rows() != A.cols()) fail(ErrorKind::Argument, "permanent needs a square matrix");
  const int n = static_cast<int>(A.rows());
  if (n == 0) return 1.0;
  if (n > 62) fail(ErrorKind::Size, "permanent size too large");
  std::vector<cplx> rowsum(n, 0.0);
  cplx total = 0.0;
  const uint64_t end = uint64_t{1} << n;
  for (uint64_t k = 1; k < end; ++k) {
    const int j = std::countr_zero(k);
    const uint64_t gray = k ^ (k >> 1);
    if (gray & (uint64_t{1} << j))
      for (int i = 0; i < n; ++i) rowsum[i] += A(i, j);
    else
      for (int i = 0; i < n; ++i) rowsum[i] -= A(i, j);
    cplx prod = rowsum[0];
    for (int i = 1; i < n; ++i) prod *= rowsum[i];
    if (std::popcount(gray) & 1)
      total -= prod;
    else
      total += prod;
  }
  return (n & 1) ? -total : total;
}

cplx permanent_parallel(const CMatrix& A) {
  if (A.rows() != A.cols()) fail(ErrorKind::Argument, "permanent needs a square matrix");
  const int n = static_cast<int>(A.rows());
  if (n < 12) return permanent(A);
  if (n > 62) fail(ErrorKind::Size, "permanent size too large");
  const uint64_t end = uint64_t{1} << n;
  const int chunks = 256;
  std::vector<cplx> partial(chunks, 0.0);
#pragma omp parallel for schedule(dynamic)
  for (int c = 0; c < chunks; ++c) {
    const uint64_t lo = std::max<uint64_t>(1, end / chunks * c);
    const uint64_t hi = (c == chunks - 1) ? end : end / chunks * (c + 1);
    std::vector<cplx> rowsum(n, 0.0);
    const uint64_t g0 = (lo - 1) ^ ((lo - 1) >> 1);
    for (int j = 0; j < n; ++j)
      if (g0 & (uint64_t{1} << j))
        for (int i = 0; i < n; ++i) rowsum[i] += A(i, j);
    cplx acc = 0.0;
    for (uint64_t k = lo; k < hi; ++k) {
      const int j = std::countr_zero(k);
      const uint64_t gray = k ^ (k >> 1);
      if (gray & (uint64_t{1} << j))
        for (int i = 0; i < n; ++i) rowsum[i] += A(i, j);
      else
        for (int i = 0; i < n; ++i) rowsum[i] -= A(i, j);
      cplx prod = rowsum[0];
      for (int i = 1; i < n; ++i) prod *= rowsum[i];
      if (std::popcount(gray) & 1)
        acc -= prod;
      else
        acc += prod;
    }
    partial[c] = acc;
  }
  cplx total = 0.0;
  for (const auto& p : partial) total += p;
  return (n & 1) ? -total : total;
}

cplx permanent_naive(const CMatrix& A) {
  if (A.rows() != A.cols()) fail(ErrorKind::Argument, "permanent needs a square matrix");
  const int n = static_cast<int>(A.rows());
  std::vector<int> p(n);
  std::iota(p.begin(), p.end(), 0);
  cplx total = 0.0;
  do {
    cplx prod = 1.0;
    for (int i = 0; i < n; ++i) prod *= A(i, p[i]);
    total += prod;
  } while (std::next_permutation(p.begin(), p.end()));
  return total;
}

CMatrix submatrix(const CMatrix& g, const FockVector& n_out, const FockVector& n_in) {
  const int m = static_cast<int>(g.rows());
  if (static_cast<int>(n_out.size()) != m || static_cast<int>(n_in.size()) != m)
    fail(ErrorKind::Argument, "Fock vector length differs from mode count");
  const int n = total(n_in);
  if (total(n_out) != n) fail(ErrorKind::Argument, "particle numbers differ in submatrix");
  std::vector<int> rows, cols;
  for (int i = 0; i < m; ++i)
    for (int c = 0; c < n_out[i]; ++c) rows.push_back(i);
  for (int j = 0; j < m; ++j)
    for (int c = 0; c < n_in[j]; ++c) cols.push_back(j);
  CMatrix S(n, n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) S(a, b) = g(rows[a], cols[b]);
  return S;
}

cplx amplitude(const CMatrix& g, const FockVector& n_out, const FockVector& n_in) {
  return permanent(submatrix(g, n_out, n_in)) / std::sqrt(multi_factorial(n_out) * multi_factorial(n_in));
}

namespace {

struct SectorInfo {
  std::vector<FockVector> basis;
  std::map<FockVector, int> index;
};

const SectorInfo& sector_info(int n, int m) {
  static std::mutex mu;
  static std::map<std::pair<int, int>, std::unique_ptr<SectorInfo>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[{n, m}];
  if (!slot) {
    slot = std::make_unique<SectorInfo>();
    slot->basis = sector_basis(n, m);
    for (size_t i = 0; i < slot->basis.size(); ++i) slot->index[slot->basis[i]] = static_cast<int>(i);
  }
  return *slot;
}

}  // namespace

const std::vector<FockVector>& sector(int n, int m) { return sector_info(n, m).basis; }

int sector_index(const FockVector& v) {
  const auto& info = sector_info(total(v), static_cast<int>(v.size()));
  auto it = info.index.find(v);
  return it == info.index.end() ? -1 : it->second;
}

std::vector<double> outcome_distribution(const CMatrix& g, const FockVector& n_in, size_t cap) {
  const int n = total(n_in), m = static_cast<int>(g.rows());
  if (dim_sector(n, m) > BigInt(cap)) fail(ErrorKind::Size, "sector dimension exceeds cap");
  const auto& basis = sector(n, m);
  std::vector<double> p(basis.size());
  double s = 0.0;
  for (size_t i = 0; i < basis.size(); ++i) {
    p[i] = std::norm(amplitude(g, basis[i], n_in));
    s += p[i];
  }
  if (std::abs(s - 1.0) > 1e-9) fail(ErrorKind::Numerical, "outcome distribution not normalised");
  for (auto& x : p) x /= s;
  return p;
}

CMatrix haar_unitary(int m, Rng& rng) {
  if (m < 1) fail(ErrorKind::Argument, "haar_unitary needs m >= 1");
  std::normal_distribution<double> nd(0.0, 1.0);
  CMatrix Z(m, m);
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < m; ++i) {
      const double re = nd(rng);
      const double im = nd(rng);
      Z(i, j) = cplx(re, im) / std::sqrt(2.0);
    }
  Eigen::HouseholderQR<CMatrix> qr(Z);
  CMatrix Q = qr.householderQ();
  const CMatrix& R = qr.matrixQR();
  for (int j = 0; j < m; ++j) {
    const cplx d = R(j, j);
    const double a = std::abs(d);
    Q.col(j) *= (a > 0 ? d / a : cplx(1.0));
  }
  return Q;
}

CMatrix composite_local_unitary(int m, Rng& rng) {
  if (m < 2) return haar_unitary(m, rng);
  std::uniform_int_distribution<int> pick(0, m * (m - 1) / 2 - 1);
  int p = pick(rng), a = 0;
  while (p >= m - 1 - a) {
    p -= m - 1 - a;
    ++a;
  }
  const int b = a + 1 + p;
  CMatrix block = haar_unitary(2, rng);
  CMatrix U = CMatrix::Identity(m, m);
  U(a, a) = block(0, 0);
  U(a, b) = block(0, 1);
  U(b, a) = block(1, 0);
  U(b, b) = block(1, 1);
  for (int i = 0; i < m; ++i) U.row(i) *= std::polar(1.0, 2.0 * M_PI * uniform01(rng));
  return U;
}

CMatrix compose(const std::vector<CMatrix>& factors) {
  if (factors.empty()) fail(ErrorKind::Argument, "compose needs at least one factor");
  CMatrix P = factors[0];
  for (size_t i = 1; i < factors.size(); ++i) {
    if (factors[i].rows() != P.rows() || factors[i].cols() != P.cols()) fail(ErrorKind::Argument, "factor dimensions differ");
    P = factors[i] * P;
  }
  if (unitarity_defect(P) > 1e-9) fail(ErrorKind::Numerical, "composed product lost unitarity");
  return P;
}

void LossModel::validate() const {
  auto ok = [](double x) { return x > 0.0 && x <= 1.0; };
  if (!ok(sqrt_p_sp) || !ok(sqrt_p_m)) fail(ErrorKind::Config, "SPAM transmittivities must lie in (0, 1]");
  if (kind == Kind::Uniform && !ok(sqrt_p)) fail(ErrorKind::Config, "sqrt_p must lie in (0, 1]");
  if (kind == Kind::GateRandom && (!ok(range_lo) || !ok(range_hi) || range_lo > range_hi))
    fail(ErrorKind::Config, "gate-random range must satisfy 0 < a <= b <= 1");
}

void SimConfig::validate() const {
  if (m < 1) fail(ErrorKind::Config, "m must be positive");
  if (n < 0) fail(ErrorKind::Config, "n must be non-negative");
  if (static_cast<int>(input.size()) != m) fail(ErrorKind::Config, "input length differs from m");
  for (int c : input)
    if (c < 0) fail(ErrorKind::Config, "negative input occupation");
  if (total(input) != n) fail(ErrorKind::Config, "input particle count differs from n");
  if (lengths.empty()) fail(ErrorKind::Config, "lengths must be non-empty");
  for (int l : lengths)
    if (l < 1) fail(ErrorKind::Config, "sequence lengths must be positive");
  if (shots < 1) fail(ErrorKind::Config, "shots must be positive");
  loss.validate();
}

ExperimentRecord run_sequence(const std::vector<CMatrix>& gates, const std::vector<double>& sqrt_p_gates,
                              const FockVector& input, const LossModel& loss, Rng& rng, bool keep_factors) {
  ExperimentRecord rec;
  rec.seq_len = static_cast<int>(gates.size());
  rec.product = compose(gates);
  if (keep_factors) rec.factors = gates;
  double q = loss.sqrt_p_sp * loss.sqrt_p_sp * loss.sqrt_p_m * loss.sqrt_p_m;
  for (double t : sqrt_p_gates) q *= t * t;

  const int n = total(input), m = static_cast<int>(input.size());
  const auto p = outcome_distribution(rec.product, input);
  const double u = uniform01(rng);
  double acc = 0.0;
  size_t pick = p.size() - 1;
  for (size_t i = 0; i < p.size(); ++i) {
    acc += p[i];
    if (u < acc) {
      pick = i;
      break;
    }
  }
  rec.outcome = sector(n, m)[pick];
  if (q < 1.0) {
    for (int i = 0; i < m; ++i) rec.outcome[i] = std::binomial_distribution<int>(rec.outcome[i], q)(rng);
  }
  rec.survived = total(rec.outcome) == n;
  return rec;
}

namespace {

ExperimentRecord simulate_shot(const SimConfig& cfg, int length, uint64_t stream) {
  Rng rng = stream_rng(cfg.seed, stream);
  std::vector<CMatrix> gates;
  std::vector<double> tp;
  gates.reserve(length);
  for (int j = 0; j < length; ++j) {
    switch (cfg.measure) {
      case Measure::Haar:
        gates.push_back(haar_unitary(cfg.m, rng));
        break;
      case Measure::CompositeLocal:
        gates.push_back(composite_local_unitary(cfg.m, rng));
        break;
      case Measure::Identity:
        gates.push_back(CMatrix::Identity(cfg.m, cfg.m));
        break;
    }
    switch (cfg.loss.kind) {
      case LossModel::Kind::None:
        tp.push_back(1.0);
        break;
      case LossModel::Kind::Uniform:
        tp.push_back(cfg.loss.sqrt_p);
        break;
      case LossModel::Kind::GateRandom:
        tp.push_back(cfg.loss.range_lo + (cfg.loss.range_hi - cfg.loss.range_lo) * uniform01(rng));
        break;
    }
  }
  return run_sequence(gates, tp, cfg.input, cfg.loss, rng, cfg.store_factors);
}

}  // namespace

std::vector<ExperimentRecord> simulate(const SimConfig& cfg, Exec exec) {
  cfg.validate();
  const long T = cfg.shots;
  const long L = static_cast<long>(cfg.lengths.size());
  std::vector<ExperimentRecord> out(static_cast<size_t>(T * L));
  // Warm the sector cache before threads start.
  (void)sector(cfg.n, cfg.m);
  const long total_shots = T * L;
  if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(dynamic, 64)
    for (long s = 0; s < total_shots; ++s)
      out[s] = simulate_shot(cfg, cfg.lengths[s / T], (static_cast<uint64_t>(s / T) << 40) | static_cast<uint64_t>(s % T));
  } else {
    for (long s = 0; s < total_shots; ++s)
      out[s] = simulate_shot(cfg, cfg.lengths[s / T], (static_cast<uint64_t>(s / T) << 40) | static_cast<uint64_t>(s % T));
  }
  return out;
}

}  // namespace prb
