#include "prb/analysis.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>

#include "contract.hpp"
#include "prb/errors.hpp"

namespace prb {

namespace {

constexpr double kRmax = 1.0 + 1e-6;

struct Problem {
  std::vector<double> l, y, w;
};

double weighted_residual(const Problem& p, double A, double r, std::vector<double>* res = nullptr) {
  double s = 0.0;
  if (res) res->resize(p.l.size());
  for (size_t i = 0; i < p.l.size(); ++i) {
    const double e = std::sqrt(p.w[i]) * (p.y[i] - A * std::pow(r, p.l[i]));
    if (res) (*res)[i] = e;
    s += e * e;
  }
  return std::sqrt(s);
}

}  // namespace

FitResult fit_exponential(const std::vector<double>& l, const std::vector<double>& y, const std::vector<double>& sigma) {
  if (l.size() != y.size() || (!sigma.empty() && sigma.size() != y.size()))
    fail(ErrorKind::Argument, "fit inputs have different lengths");
  Problem p;
  bool unit = sigma.empty();
  for (double s : sigma)
    if (!(s > 0.0) || !std::isfinite(s)) unit = true;
  for (size_t i = 0; i < l.size(); ++i) {
    if (!std::isfinite(y[i])) continue;
    p.l.push_back(l[i]);
    p.y.push_back(y[i]);
    p.w.push_back(unit ? 1.0 : 1.0 / (sigma[i] * sigma[i]));
  }
  std::vector<double> distinct = p.l;
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (distinct.size() < 2) fail(ErrorKind::Fit, "exponential fit needs at least 2 distinct lengths");

  // Log-linear start on |y| with weights w y^2 (delta method); sign goes into A.
  double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0, sgn = 0;
  for (size_t i = 0; i < p.l.size(); ++i) {
    sgn += p.w[i] * p.y[i];
    if (p.y[i] == 0.0) continue;
    const double wi = p.w[i] * p.y[i] * p.y[i];
    const double ly = std::log(std::abs(p.y[i]));
    sw += wi;
    sx += wi * p.l[i];
    sy += wi * ly;
    sxx += wi * p.l[i] * p.l[i];
    sxy += wi * p.l[i] * ly;
  }
  double A = 0.0, r = 1.0;
  const double det = sw * sxx - sx * sx;
  if (sw > 0 && det > 1e-300 * std::max(1.0, sw * sxx)) {
    const double slope = (sw * sxy - sx * sy) / det;
    r = std::exp(slope);
    A = std::exp((sy - slope * sx) / sw);
  } else {
    double s = 0, t = 0;
    for (size_t i = 0; i < p.y.size(); ++i) {
      s += p.w[i] * std::abs(p.y[i]);
      t += p.w[i];
    }
    A = s / t;
  }
  if (sgn < 0) A = -A;
  r = std::clamp(r, 1e-12, kRmax);

  FitResult out;
  out.points = static_cast<int>(p.l.size());
  double lambda = 1e-3;
  std::vector<double> res;
  double f = weighted_residual(p, A, r, &res);
  const double yscale = [&] {
    double s = 0;
    for (size_t i = 0; i < p.y.size(); ++i) s += p.w[i] * p.y[i] * p.y[i];
    return std::sqrt(s);
  }();
  bool converged = false;
  Eigen::Matrix2d JtJ;
  for (int it = 0; it < 200; ++it) {
    out.iterations = it + 1;
    Eigen::Matrix2d H = Eigen::Matrix2d::Zero();
    Eigen::Vector2d g = Eigen::Vector2d::Zero();
    double jn = 0.0;
    for (size_t i = 0; i < p.l.size(); ++i) {
      const double sw_i = std::sqrt(p.w[i]);
      const double rl = std::pow(r, p.l[i]);
      Eigen::Vector2d J(sw_i * rl, sw_i * A * p.l[i] * (p.l[i] == 0 ? 0.0 : std::pow(r, p.l[i] - 1)));
      H += J * J.transpose();
      g += J * res[i];
      jn += J.squaredNorm();
    }
    JtJ = H;
    // At the upper bound with the data pulling r further up, only A is free.
    const bool pinned = r >= kRmax && g(1) * H(0, 0) - g(0) * H(0, 1) > 0.0;
    if (pinned) {
      g(1) = 0.0;
      H(0, 1) = H(1, 0) = 0.0;
    }
    if (f <= 1e-15 * std::max(yscale, 1e-300) || g.norm() <= 1e-10 * std::sqrt(jn) * std::max(f, 1e-300)) {
      converged = true;
      break;
    }
    bool improved = false;
    for (int tries = 0; tries < 60; ++tries) {
      Eigen::Matrix2d D = H;
      D(0, 0) += lambda * std::max(H(0, 0), 1e-300);
      D(1, 1) += lambda * std::max(H(1, 1), 1e-300);
      const Eigen::Vector2d step = D.ldlt().solve(g);
      const double An = A + step(0);
      const double rn = std::clamp(r + step(1), 1e-12, kRmax);
      std::vector<double> rs;
      const double fn = weighted_residual(p, An, rn, &rs);
      if (fn < f || (fn == f && std::abs(An - A) + std::abs(rn - r) == 0.0)) {
        const bool stalled = std::abs(An - A) <= 1e-15 * std::abs(A) && std::abs(rn - r) <= 1e-15 * std::abs(r);
        A = An;
        r = rn;
        f = fn;
        res = std::move(rs);
        lambda = std::max(lambda * 0.3, 1e-12);
        improved = true;
        if (stalled) converged = true;
        break;
      }
      lambda *= 10.0;
    }
    if (!improved) {
      // No descent direction left at working precision.
      converged = true;
      break;
    }
    if (converged) break;
  }
  if (!converged) fail(ErrorKind::Fit, "exponential fit did not converge in 200 iterations");
  out.A = A;
  out.r = r;
  out.residual = f;
  const int dof = std::max(out.points - 2, 1);
  const double scale = unit ? f * f / dof : 1.0;
  Eigen::FullPivLU<Eigen::Matrix2d> lu(JtJ);
  if (lu.isInvertible()) {
    const Eigen::Matrix2d cov = lu.inverse() * scale;
    out.se_A = std::sqrt(std::max(cov(0, 0), 0.0));
    out.se_r = std::sqrt(std::max(cov(1, 1), 0.0));
  }
  return out;
}

FitResult fit_exponential(const RBSignal& signal) {
  std::vector<double> l, y, s;
  bool have_all = true;
  for (const auto& p : signal.points) {
    if (!p.estimate) continue;
    l.push_back(p.seq_len);
    y.push_back(*p.estimate);
    s.push_back(p.stderr_.value_or(0.0));
    if (!(s.back() > 0.0)) have_all = false;
  }
  if (!have_all) s.clear();
  return fit_exponential(l, y, s);
}

FidelityResult rb_fidelity(const std::map<int, double>& rates, int n, int m) {
  const double D = to_double(dim_sector(n, m));
  FidelityResult out;
  for (const auto& [k, r] : rates) {
    if (k < 0 || k > n) fail(ErrorKind::Argument, "rate given for k outside 0..n");
    const double d = to_double(dim_lambda({k, m}));
    out.fidelity += d * r;
    out.covered += d;
  }
  out.fidelity /= D * D;
  out.covered /= D * D;
  return out;
}

BigRational combined_weight_exact(int n, int m, int u) {
  if (u < 1 || u > n + 1) fail(ErrorKind::Domain, "combined_weight needs 1 <= u <= n+1");
  BigRational prod = 1;
  for (int i = 1; i <= u; ++i) prod *= BigRational(n - i + 1, n + m - i);
  return 1 - prod * prod;
}

double combined_weight(int n, int m, int u) { return to_double(combined_weight_exact(n, m, u)); }

long min_sequence_length(const AnalysisConfig& cfg, const IrrepLabel& label) {
  if (!(cfg.delta > 0.0 && cfg.delta <= 0.2)) fail(ErrorKind::Domain, "delta must lie in (0, 1/5]");
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) fail(ErrorKind::Domain, "alpha must lie in (0, 1)");
  const double ds = to_double(BigRational(dim_lambda(label)) / frame_eigenvalue_exact(label));
  const double v = (std::log(ds) + 2.0 * std::log(1.0 / cfg.alpha) + 4.0) / (2.0 * std::log(1.0 / (2.0 * cfg.delta)));
  return static_cast<long>(std::ceil(v - 1e-12 * std::abs(v)));
}

double first_moment(int k, int n, int m, const FockVector& input) {
  const auto sl = sector_slice(n, k, m);
  const int i0 = sector_index(input);
  if (i0 < 0) fail(ErrorKind::Argument, "input is not a sector state");
  double acc = 0.0;
  for (double v : sl->c[i0]) acc += v * v;
  return acc;
}

double second_moment(int k, int n, int m, const FockVector& input, Exec exec) {
  const auto sk = sector_slice(n, k, m);
  const int i0 = sector_index(input);
  if (i0 < 0 || total(input) != n) fail(ErrorKind::Argument, "input is not a sector state");
  const int dk = sk->table->bt->dim();
  auto pruned = [](std::vector<double> v) {
    for (double& x : v)
      if (std::abs(x) < 1e-12) x = 0.0;
    return v;
  };
  const auto a0 = detail::densify(dk, sk->zero, pruned(sk->c[i0]));

  struct Channel {
    double inv_d;
    std::shared_ptr<const CGTable> sq;
    std::shared_ptr<const SectorSlice> sl;
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
    c.sl = sector_slice(n, l, m);
    c.U.assign(c.sq->multiplicity, 0.0);
    bool any = false;
    for (int r = 0; r < c.sq->multiplicity; ++r) {
      for (size_t z = 0; z < c.sl->zero.size(); ++z) {
        const double y = c.sl->c[i0][z];
        if (std::abs(y) < 1e-12) continue;
        c.U[r] += y * detail::square_contract(*c.sq, c.sl->zero[z], r, a0, a0);
      }
      if (c.U[r] != 0.0) any = true;
    }
    if (any) ch.push_back(std::move(c));
  }

  const int D = sk->dim();
  std::vector<double> term(D, 0.0);
  auto eval = [&](int N) {
    const auto aN = detail::densify(dk, sk->zero, sk->c[N]);
    double g = 0.0;
    for (const auto& c : ch) {
      double inner = 0.0;
      for (int r = 0; r < static_cast<int>(c.U.size()); ++r) {
        if (c.U[r] == 0.0) continue;
        double v = 0.0;
        for (size_t z = 0; z < c.sl->zero.size(); ++z) {
          const double y = c.sl->c[N][z];
          if (y == 0.0) continue;
          v += y * detail::square_contract(*c.sq, c.sl->zero[z], r, aN, aN);
        }
        inner += c.U[r] * v;
      }
      g += c.inv_d * inner;
    }
    term[N] = sk->eps[N] * g;
  };
  if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(dynamic)
    for (int N = 0; N < D; ++N) eval(N);
  } else {
    for (int N = 0; N < D; ++N) eval(N);
  }
  const double s = frame_eigenvalue_pnr({k, m});
  return sk->eps[i0] * pairwise_sum(term) / (s * s);
}

long sample_complexity(double variance, double eps, double delta) {
  if (variance < 0.0) fail(ErrorKind::Domain, "variance must be non-negative");
  if (!(eps > 0.0 && eps < 1.0) || !(delta > 0.0 && delta < 1.0)) fail(ErrorKind::Domain, "eps and delta must lie in (0, 1)");
  const double v = variance / (eps * eps * delta);
  return static_cast<long>(std::ceil(v - 1e-9 * v));
}

nlohmann::json to_json(const FitResult& f) {
  return {{"A", f.A}, {"r", f.r}, {"residual", f.residual}, {"se_A", f.se_A}, {"se_r", f.se_r},
          {"iterations", f.iterations}, {"points", f.points}};
}

}  // namespace prb
