#include "prb/filter.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <mutex>
#include <ostream>
#include <sstream>

#include "prb/errors.hpp"

namespace prb {

BigRational frame_eigenvalue_exact(const IrrepLabel& label) {
  if (label.m < 2) fail(ErrorKind::Domain, "frame eigenvalue needs m >= 2");
  if (label.k < 0) fail(ErrorKind::Domain, "frame eigenvalue needs k >= 0");
  const BigInt num = label.m - 1;
  const BigInt den = BigInt(2 * label.k + label.m - 1) * binomial(label.k + label.m - 2, label.k);
  return BigRational(num, den);
}

double frame_eigenvalue_pnr(const IrrepLabel& label) { return to_double(frame_eigenvalue_exact(label)); }

std::shared_ptr<const SectorSlice> sector_slice(int n, int k, int m) {
  static std::mutex mu;
  static std::map<std::tuple<int, int, int>, std::shared_ptr<const SectorSlice>> cache;
  {
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find({n, k, m});
    if (it != cache.end()) return it->second;
  }
  if (k < 0 || k > n) fail(ErrorKind::Argument, "irrep index k must lie in 0..n");
  auto s = std::make_shared<SectorSlice>();
  s->n = n;
  s->m = m;
  s->k = k;
  s->table = get_table(sector_coupling(n, k, m));
  const auto& bt = *s->table->bt;
  for (int i = 0; i < bt.dim(); ++i)
    if (is_zero_weight(bt.patterns[i])) s->zero.push_back(i);
  const auto& b1 = *s->table->b1;
  const auto& b2 = *s->table->b2;
  for (int c = 0; c < b1.dim(); ++c) {
    const GTPattern& N = b1.patterns[c];
    const int d = b2.index_of(dual_pattern(N));
    if (d < 0) fail(ErrorKind::Numerical, "dual pattern missing from conjugate basis");
    s->dual_index.push_back(d);
    s->eps.push_back(parity_sign(dual_phase(N)));
    std::vector<double> row(s->zero.size());
    for (size_t z = 0; z < s->zero.size(); ++z) row[z] = s->table->at(c, d, s->zero[z], 0);
    s->c.push_back(std::move(row));
  }
  std::lock_guard<std::mutex> lock(mu);
  return cache.emplace(std::make_tuple(n, k, m), s).first->second;
}

double frame_eigenvalue_cg(int k, int n, int m) {
  const auto s = sector_slice(n, k, m);
  double acc = 0.0;
  for (const auto& row : s->c)
    for (double v : row) acc += v * v;
  return acc / to_double(dim_lambda({k, m}));
}

FilterContext FilterContext::build(int n, int m, const FockVector& input, std::vector<int> ks) {
  if (m < 2) fail(ErrorKind::Domain, "filters need m >= 2");
  if (static_cast<int>(input.size()) != m || total(input) != n) fail(ErrorKind::Argument, "input is not in the (n, m) sector");
  FilterContext ctx;
  ctx.n = n;
  ctx.m = m;
  ctx.input = input;
  ctx.input_index = sector_index(input);
  if (ks.empty())
    for (int k = 0; k <= n; ++k) ks.push_back(k);
  for (int k : ks) {
    const auto sl = sector_slice(n, k, m);
    ctx.eps0 = sl->eps[ctx.input_index];
    IrrepFilter f;
    f.k = k;
    f.s = frame_eigenvalue_pnr({k, m});
    f.c0 = sl->c[ctx.input_index];
    for (double& v : f.c0)
      if (std::abs(v) < 1e-12) v = 0.0;
    for (double v : f.c0) f.overlap += v * v;
    f.x.assign(sl->dim(), 0.0);
    for (int c = 0; c < sl->dim(); ++c) {
      double acc = 0.0;
      for (size_t z = 0; z < f.c0.size(); ++z) acc += f.c0[z] * sl->c[c][z];
      f.x[c] = ctx.eps0 * sl->eps[c] * acc;
    }
    ctx.irreps.emplace(k, std::move(f));
  }
  return ctx;
}

const IrrepFilter& FilterContext::irrep(int k) const {
  auto it = irreps.find(k);
  if (it == irreps.end()) fail(ErrorKind::Argument, "filter context has no irrep k=" + std::to_string(k));
  return it->second;
}

double filter_pnr(const FilterContext& ctx, int k, const FockVector& outcome, const CMatrix& g) {
  if (static_cast<int>(outcome.size()) != ctx.m || g.rows() != ctx.m) fail(ErrorKind::Argument, "mode count differs from filter context");
  if (total(outcome) != ctx.n) return 0.0;
  const IrrepFilter& f = ctx.irrep(k);
  const auto& basis = sector(ctx.n, ctx.m);
  double acc = 0.0;
  for (size_t c = 0; c < basis.size(); ++c) {
    if (f.x[c] == 0.0) continue;
    acc += f.x[c] * std::norm(amplitude(g, outcome, basis[c]));
  }
  return acc / f.s;
}

int filter_indicator(const FockVector& outcome, int n) { return total(outcome) == n ? 1 : 0; }

std::string FilterSpec::id() const {
  if (kind == Kind::Indicator) return "indicator";
  return "lambda_" + std::to_string(k) + (post_select ? "" : "_all");
}

double pairwise_sum(std::span<const double> xs) {
  if (xs.size() <= 8) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s;
  }
  const size_t h = xs.size() / 2;
  return pairwise_sum(xs.subspan(0, h)) + pairwise_sum(xs.subspan(h));
}

RBSignal estimate_signal(const std::vector<ExperimentRecord>& records, const FilterSpec& spec, const FilterContext* ctx,
                         int n, Exec exec) {
  const bool irrep = spec.kind == FilterSpec::Kind::Irrep;
  if (irrep && !ctx) fail(ErrorKind::Argument, "irrep filter needs a filter context");
  if (ctx) n = ctx->n;
  int m = ctx ? ctx->m : -1;
  for (const auto& r : records) {
    if (m < 0) m = static_cast<int>(r.product.rows());
    if (r.product.rows() != m || static_cast<int>(r.outcome.size()) != m)
      fail(ErrorKind::Data, "records mix different mode counts");
    const int t = total(r.outcome);
    if (t > n || r.survived != (t == n)) fail(ErrorKind::Data, "record particle count inconsistent with n=" + std::to_string(n));
  }

  const long N = static_cast<long>(records.size());
  std::vector<double> value(N, 0.0);
  std::vector<char> used(N, 0);
  auto eval = [&](long i) {
    const auto& r = records[i];
    if (!irrep) {
      value[i] = filter_indicator(r.outcome, n);
      used[i] = 1;
      return;
    }
    if (spec.post_select && !r.survived) return;
    used[i] = 1;
    value[i] = r.survived ? filter_pnr(*ctx, spec.k, r.outcome, r.product) : 0.0;
  };
  if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(dynamic, 16)
    for (long i = 0; i < N; ++i) eval(i);
  } else {
    for (long i = 0; i < N; ++i) eval(i);
  }

  std::map<int, std::vector<long>> groups;
  for (long i = 0; i < N; ++i) groups[records[i].seq_len].push_back(i);

  RBSignal sig;
  sig.filter_id = spec.id();
  for (const auto& [len, idx] : groups) {
    SignalPoint p;
    p.seq_len = len;
    p.count_total = static_cast<long>(idx.size());
    std::vector<double> xs;
    for (long i : idx)
      if (used[i]) xs.push_back(value[i]);
    p.count_used = static_cast<long>(xs.size());
    if (xs.empty()) {
      sig.warnings.push_back("no usable records at length " + std::to_string(len));
      sig.points.push_back(p);
      continue;
    }
    const double mean = pairwise_sum(xs) / xs.size();
    std::vector<double> dev(xs.size());
    for (size_t j = 0; j < xs.size(); ++j) dev[j] = (xs[j] - mean) * (xs[j] - mean);
    const double var = xs.size() > 1 ? pairwise_sum(dev) / (xs.size() - 1) : 0.0;
    p.estimate = mean;
    p.stderr_ = std::sqrt(var / xs.size());
    sig.points.push_back(p);
  }
  return sig;
}

void write_signal_csv(std::ostream& os, const RBSignal& s) {
  os << "seq_len,estimate,stderr,count_used,filter_id\n";
  char buf[64];
  for (const auto& p : s.points) {
    os << p.seq_len << ',';
    if (p.estimate) {
      std::snprintf(buf, sizeof buf, "%.17g", *p.estimate);
      os << buf;
    }
    os << ',';
    if (p.stderr_) {
      std::snprintf(buf, sizeof buf, "%.17g", *p.stderr_);
      os << buf;
    }
    os << ',' << p.count_used << ',' << s.filter_id << '\n';
  }
}

RBSignal read_signal_csv(std::istream& is) {
  RBSignal s;
  std::string line;
  if (!std::getline(is, line) || line.rfind("seq_len,estimate,stderr,count_used,filter_id", 0) != 0)
    fail(ErrorKind::Data, "signal CSV header missing");
  long no = 1;
  while (std::getline(is, line)) {
    ++no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() == 4 && line.back() == ',') f.emplace_back();
    if (f.size() != 5) fail(ErrorKind::Data, "signal CSV line " + std::to_string(no) + " has wrong field count");
    SignalPoint p;
    try {
      p.seq_len = std::stoi(f[0]);
      if (!f[1].empty()) p.estimate = std::stod(f[1]);
      if (!f[2].empty()) p.stderr_ = std::stod(f[2]);
      p.count_used = std::stol(f[3]);
    } catch (const std::exception&) {
      fail(ErrorKind::Data, "signal CSV line " + std::to_string(no) + " is malformed");
    }
    s.filter_id = f[4];
    s.points.push_back(p);
  }
  return s;
}

}  // namespace prb
