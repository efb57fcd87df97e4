#include "prb/heterodyne.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>

#include "contract.hpp"
#include "prb/errors.hpp"
#include "prb/analysis.hpp"
#include "prb/filter.hpp"

namespace prb {

namespace {

double factorial(int a) {
  double f = 1.0;
  for (int i = 2; i <= a; ++i) f *= i;
  return f;
}

// Coefficients C_{a, bbar}^M for every ordered pair of sector states, dense over lambda_k.
struct PairCoefficients {
  int D = 0;
  int dim = 0;
  std::vector<std::vector<double>> v;  // v[a * D + b]
  std::vector<int> eps;
  const std::vector<double>& at(int a, int b) const { return v[static_cast<size_t>(a) * D + b]; }
};

PairCoefficients pair_coefficients(int n, int k, int m) {
  const auto sl = sector_slice(n, k, m);
  const CGTable& t = *sl->table;
  PairCoefficients pc;
  pc.D = sl->dim();
  pc.dim = t.bt->dim();
  pc.eps = sl->eps;
  pc.v.resize(static_cast<size_t>(pc.D) * pc.D);
  for (int a = 0; a < pc.D; ++a)
    for (int b = 0; b < pc.D; ++b) {
      auto& out = pc.v[static_cast<size_t>(a) * pc.D + b];
      out.assign(pc.dim, 0.0);
      const int db = sl->dual_index[b];
      Weight w = t.b1->weights[a];
      for (size_t j = 0; j < w.size(); ++j) w[j] += t.b2->weights[db][j];
      const int g = t.bt->group_of_weight(w);
      if (g < 0) continue;
      for (int M : t.bt->groups[g]) out[M] = t.at(a, db, M, 0);
    }
  return pc;
}

// Index of x + y - z in the sector, or -1.
int shifted(const std::vector<FockVector>& basis, int x, int y, int z) {
  FockVector v(basis[x].size());
  for (size_t j = 0; j < v.size(); ++j) {
    v[j] = basis[x][j] + basis[y][j] - basis[z][j];
    if (v[j] < 0) return -1;
  }
  return sector_index(v);
}

// d * s_het before division: sum over a - b = c - d of I eps_b eps_d sum_M C_{a,bbar}^M C_{c,dbar}^M.
double het_frame_sum(int k, int n, int m) {
  if (m < 2) fail(ErrorKind::Domain, "heterodyne frame eigenvalue needs m >= 2");
  const PairCoefficients pc = pair_coefficients(n, k, m);
  const auto& basis = sector(n, m);
  double acc = 0.0;
  for (int a = 0; a < pc.D; ++a)
    for (int b = 0; b < pc.D; ++b)
      for (int c = 0; c < pc.D; ++c) {
        const int d = shifted(basis, c, b, a);
        if (d < 0) continue;
        const auto& u = pc.at(a, b);
        const auto& w = pc.at(c, d);
        double dot = 0.0;
        for (int M = 0; M < pc.dim; ++M) dot += u[M] * w[M];
        if (dot == 0.0) continue;
        acc += gaussian_moment({basis[a], basis[d], basis[c], basis[b]}) * pc.eps[b] * pc.eps[d] * dot;
      }
  return acc;
}

}  // namespace

double gaussian_moment(const std::vector<FockVector>& indices) {
  const size_t K = indices.size();
  if (K == 0 || K % 2 != 0) fail(ErrorKind::Argument, "gaussian_moment needs an even, positive number of indices");
  const size_t m = indices[0].size();
  const int n = total(indices[0]);
  double denom = 1.0;
  for (const auto& v : indices) {
    if (v.size() != m) fail(ErrorKind::Argument, "gaussian_moment indices differ in mode count");
    if (total(v) != n) fail(ErrorKind::Argument, "gaussian_moment indices differ in particle count");
    denom *= multi_factorial(v);
  }
  const double eta = K / 2.0;
  double out = 1.0 / std::sqrt(denom);
  for (size_t j = 0; j < m; ++j) {
    int a = 0, b = 0;
    for (size_t i = 0; i < K / 2; ++i) a += indices[i][j];
    for (size_t i = K / 2; i < K; ++i) b += indices[i][j];
    if (a != b) return 0.0;
    out *= M_PI * factorial(a) * std::pow(eta, -(a + 1));
  }
  return out;
}

cplx coherent_coefficient(const CoherentVector& alpha, const FockVector& n) {
  if (alpha.size() != n.size()) fail(ErrorKind::Argument, "coherent vector length differs from Fock vector");
  double u = 0.0;
  cplx p = 1.0;
  for (size_t j = 0; j < alpha.size(); ++j) {
    u += std::norm(alpha[j]);
    for (int c = 0; c < n[j]; ++c) p *= alpha[j];
  }
  return std::exp(-u / 2) * p / std::sqrt(multi_factorial(n));
}

cplx coherent_overlap(const CoherentVector& alpha, const CMatrix& g, const FockVector& c) {
  const auto& basis = sector(total(c), static_cast<int>(c.size()));
  cplx acc = 0.0;
  for (const auto& np : basis) acc += std::conj(coherent_coefficient(alpha, np)) * amplitude(g, np, c);
  return acc;
}

double frame_eigenvalue_het(int k, int n, int m) {
  return het_frame_sum(k, n, m) / to_double(dim_lambda({k, m}));
}

HetContext HetContext::build(int n, int m, const FockVector& input, std::vector<int> ks) {
  const FilterContext pnr = FilterContext::build(n, m, input, ks);
  HetContext ctx;
  ctx.n = n;
  ctx.m = m;
  ctx.input = input;
  for (const auto& [k, f] : pnr.irreps) {
    HetFilter h;
    h.k = k;
    h.s = frame_eigenvalue_het(k, n, m);
    if (!(h.s > 0.0)) fail(ErrorKind::Numerical, "heterodyne frame eigenvalue is not positive");
    h.x = f.x;
    ctx.irreps.emplace(k, std::move(h));
  }
  return ctx;
}

const HetFilter& HetContext::irrep(int k) const {
  auto it = irreps.find(k);
  if (it == irreps.end()) fail(ErrorKind::Argument, "heterodyne context has no irrep k=" + std::to_string(k));
  return it->second;
}

double filter_het(const HetContext& ctx, int k, const CoherentVector& alpha, const CMatrix& g) {
  if (static_cast<int>(alpha.size()) != ctx.m || g.rows() != ctx.m) fail(ErrorKind::Argument, "mode count differs from context");
  const HetFilter& f = ctx.irrep(k);
  const auto& basis = sector(ctx.n, ctx.m);
  std::vector<cplx> w(basis.size());
  for (size_t i = 0; i < basis.size(); ++i) w[i] = std::conj(coherent_coefficient(alpha, basis[i]));
  double acc = 0.0;
  for (size_t c = 0; c < basis.size(); ++c) {
    if (f.x[c] == 0.0) continue;
    cplx ov = 0.0;
    for (size_t i = 0; i < basis.size(); ++i) ov += w[i] * amplitude(g, basis[i], basis[c]);
    acc += f.x[c] * std::norm(ov);
  }
  return std::pow(M_PI, ctx.m) * acc / f.s;
}

double first_moment_het(int k, int n, int m, const FockVector& input) {
  // (1/(d s)) sum_M C^2 times the frame sum, which is d s itself.
  const double frame = het_frame_sum(k, n, m);
  const double d = to_double(dim_lambda({k, m}));
  const double s = frame / d;
  return first_moment(k, n, m, input) * frame / (d * s);
}

double second_moment_het(int k, int n, int m, const FockVector& input) {
  const int i0 = sector_index(input);
  if (i0 < 0 || total(input) != n) fail(ErrorKind::Argument, "input is not a sector state");
  const auto& basis = sector(n, m);
  const PairCoefficients pk = pair_coefficients(n, k, m);
  const auto sk = sector_slice(n, k, m);
  const int dk = pk.dim;
  std::vector<double> c0 = sk->c[i0];
  for (double& x : c0)
    if (std::abs(x) < 1e-12) x = 0.0;
  const auto a0 = detail::densify(dk, sk->zero, c0);

  struct Channel {
    double inv_d;
    std::shared_ptr<const CGTable> sq;
    PairCoefficients pl;
    std::vector<double> U;
  };
  std::vector<Channel> ch;
  for (int l = 0; l <= std::min(n, 2 * k); ++l) {
    if (tensor_square_multiplicity(k, l, m) == 0) continue;
    Channel c;
    c.inv_d = 1.0 / to_double(dim_lambda({l, m}));
    try {
      c.sq = get_table(square_coupling(k, l, m));
    } catch (const Error& e) {
      fail(ErrorKind::Dependency, std::string("missing square table: ") + e.what());
    }
    const auto sl = sector_slice(n, l, m);
    c.U.assign(c.sq->multiplicity, 0.0);
    bool any = false;
    for (int r = 0; r < c.sq->multiplicity; ++r) {
      for (size_t z = 0; z < sl->zero.size(); ++z) {
        const double y = sl->c[i0][z];
        if (std::abs(y) < 1e-12) continue;
        c.U[r] += y * detail::square_contract(*c.sq, sl->zero[z], r, a0, a0);
      }
      if (c.U[r] != 0.0) any = true;
    }
    if (!any) continue;
    c.pl = pair_coefficients(n, l, m);
    ch.push_back(std::move(c));
  }

  const int D = pk.D;
  const long outer = static_cast<long>(D) * D;
  std::vector<double> term(outer, 0.0);
#pragma omp parallel for schedule(dynamic)
  for (long p1 = 0; p1 < outer; ++p1) {
    const int n1 = static_cast<int>(p1 / D), m1 = static_cast<int>(p1 % D);
    const auto& a = pk.at(n1, m1);
    double acc = 0.0;
    for (int n2 = 0; n2 < D; ++n2)
      for (int m2 = 0; m2 < D; ++m2) {
        const auto& b = pk.at(n2, m2);
        for (const auto& c : ch) {
          std::vector<double> z(c.pl.dim, 0.0);
          bool any = false;
          for (int m3 = 0; m3 < D; ++m3) {
            // n3 = n1 + n2 + m3 - m1 - m2
            FockVector v(m);
            bool ok = true;
            for (int j = 0; j < m && ok; ++j) {
              v[j] = basis[n1][j] + basis[n2][j] + basis[m3][j] - basis[m1][j] - basis[m2][j];
              ok = v[j] >= 0;
            }
            if (!ok) continue;
            const int n3 = sector_index(v);
            if (n3 < 0) continue;
            const double I = gaussian_moment({basis[m1], basis[m2], basis[n3], basis[n1], basis[n2], basis[m3]});
            if (I == 0.0) continue;
            const double sg = pk.eps[m1] * pk.eps[m2] * pk.eps[m3] * I;
            const auto& y = c.pl.at(n3, m3);
            for (int R = 0; R < c.pl.dim; ++R)
              if (y[R] != 0.0) {
                z[R] += sg * y[R];
                any = true;
              }
          }
          if (!any) continue;
          double inner = 0.0;
          for (int r = 0; r < static_cast<int>(c.U.size()); ++r) {
            if (c.U[r] == 0.0) continue;
            double v = 0.0;
            for (int R = 0; R < c.pl.dim; ++R)
              if (z[R] != 0.0) v += z[R] * detail::square_contract(*c.sq, R, r, a, b);
            inner += c.U[r] * v;
          }
          acc += c.inv_d * inner;
        }
      }
    term[p1] = acc;
  }
  const double s = frame_eigenvalue_het(k, n, m);
  return std::pow(M_PI, m) * sk->eps[i0] * pairwise_sum(term) / (s * s);
}

CoherentVector sample_husimi(const CMatrix& g, const FockVector& input, Rng& rng) {
  const int n = total(input), m = static_cast<int>(input.size());
  const auto& basis = sector(n, m);
  std::vector<cplx> psi(basis.size());
  for (size_t i = 0; i < basis.size(); ++i) psi[i] = amplitude(g, basis[i], input);
  std::gamma_distribution<double> radial(n + m, 1.0);
  std::normal_distribution<double> nd(0.0, 1.0);
  for (int attempt = 0; attempt < 1000000; ++attempt) {
    const double u = radial(rng);
    CoherentVector alpha(m);
    double norm = 0.0;
    for (int j = 0; j < m; ++j) {
      const double re = nd(rng);
      const double im = nd(rng);
      alpha[j] = cplx(re, im);
      norm += re * re + im * im;
    }
    const double scale = std::sqrt(u / norm);
    for (auto& a : alpha) a *= scale;
    // <alpha_n|psi> without the Gaussian factor, against ||alpha_n||^2 = u^n / n!.
    cplx ov = 0.0;
    for (size_t i = 0; i < basis.size(); ++i) {
      cplx p = 1.0;
      for (int j = 0; j < m; ++j)
        for (int c = 0; c < basis[i][j]; ++c) p *= std::conj(alpha[j]);
      ov += p / std::sqrt(multi_factorial(basis[i])) * psi[i];
    }
    const double accept = std::norm(ov) * factorial(n) / std::pow(u, n);
    if (uniform01(rng) < accept) return alpha;
  }
  fail(ErrorKind::Numerical, "Husimi rejection sampler did not accept");
}

std::vector<HetRecord> simulate_het(const SimConfig& cfg, Exec exec) {
  cfg.validate();
  const long T = cfg.shots;
  const long total_shots = T * static_cast<long>(cfg.lengths.size());
  std::vector<HetRecord> out(total_shots);
  (void)sector(cfg.n, cfg.m);
  auto shot = [&](long s) {
    const int len = cfg.lengths[s / T];
    Rng rng = stream_rng(cfg.seed, (static_cast<uint64_t>(s / T) << 40) | static_cast<uint64_t>(s % T));
    std::vector<CMatrix> gates;
    for (int j = 0; j < len; ++j) {
      if (cfg.measure == Measure::Haar)
        gates.push_back(haar_unitary(cfg.m, rng));
      else if (cfg.measure == Measure::CompositeLocal)
        gates.push_back(composite_local_unitary(cfg.m, rng));
      else
        gates.push_back(CMatrix::Identity(cfg.m, cfg.m));
    }
    HetRecord r;
    r.seq_len = len;
    r.product = compose(gates);
    r.alpha = sample_husimi(r.product, cfg.input, rng);
    out[s] = std::move(r);
  };
  if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(dynamic, 16)
    for (long s = 0; s < total_shots; ++s) shot(s);
  } else {
    for (long s = 0; s < total_shots; ++s) shot(s);
  }
  return out;
}

}  // namespace prb
