#include "prb/repcore.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "prb/errors.hpp"

namespace prb {

Shape::Shape(std::vector<int> rows) : rows_(std::move(rows)) {
  if (rows_.size() < 1) fail(ErrorKind::Shape, "shape needs at least one row");
  for (size_t i = 0; i + 1 < rows_.size(); ++i)
    if (rows_[i] < rows_[i + 1]) fail(ErrorKind::Shape, "shape rows must be weakly decreasing: " + str());
  if (rows_.back() != 0) fail(ErrorKind::Shape, "shape must end in 0: " + str());
}

std::string Shape::str() const {
  std::ostringstream os;
  os << '(';
  for (size_t i = 0; i < rows_.size(); ++i) os << (i ? "," : "") << rows_[i];
  os << ')';
  return os.str();
}

Shape IrrepLabel::shape() const { return lambda_shape(k, m); }

Shape lambda_shape(int k, int m) {
  if (m < 2 || k < 0) fail(ErrorKind::Domain, "lambda_k needs k >= 0, m >= 2");
  std::vector<int> r(m, k);
  r[0] = 2 * k;
  r[m - 1] = 0;
  return Shape(r);
}

Shape symmetric_shape(int n, int m) {
  if (m < 1 || n < 0) fail(ErrorKind::Domain, "symmetric shape needs n >= 0, m >= 1");
  std::vector<int> r(m, 0);
  if (m > 1) r[0] = n;
  return Shape(r);
}

Shape dual_symmetric_shape(int n, int m) {
  if (m < 2 || n < 0) fail(ErrorKind::Domain, "dual shape needs n >= 0, m >= 2");
  std::vector<int> r(m, n);
  r[m - 1] = 0;
  return Shape(r);
}

long GTPattern::row_sum(int j) const {
  if (j <= 0 || j > m_) return 0;
  long s = 0;
  for (int i = 1; i <= j; ++i) s += (*this)(i, j);
  return s;
}

long GTPattern::bottom_sum(int k) const {
  long s = 0;
  for (int j = 1; j <= k; ++j) s += row_sum(j);
  return s;
}

Shape GTPattern::top() const {
  std::vector<int> r(m_);
  for (int i = 1; i <= m_; ++i) r[i - 1] = (*this)(i, m_);
  return Shape(r);
}

bool GTPattern::interlaces() const {
  for (int j = 1; j < m_; ++j)
    for (int i = 1; i <= j; ++i)
      if ((*this)(i, j + 1) < (*this)(i, j) || (*this)(i, j) < (*this)(i + 1, j + 1)) return false;
  return true;
}

std::string GTPattern::str() const {
  std::ostringstream os;
  for (int j = m_; j >= 1; --j) {
    os << '[';
    for (int i = 1; i <= j; ++i) os << (i > 1 ? " " : "") << (*this)(i, j);
    os << ']';
  }
  return os.str();
}

namespace {

void fill_rows(GTPattern& M, int j, std::vector<GTPattern>& out) {
  if (j == 0) {
    out.push_back(M);
    return;
  }
  // Choose row j given row j+1, entry by entry.
  auto rec = [&](auto&& self, int i) -> void {
    if (i > j) {
      fill_rows(M, j - 1, out);
      return;
    }
    for (int v = M(i + 1, j + 1); v <= M(i, j + 1); ++v) {
      M(i, j) = v;
      self(self, i + 1);
    }
  };
  rec(rec, 1);
}

}  // namespace

std::vector<GTPattern> enumerate_patterns(const Shape& shape) {
  const int m = shape.m();
  GTPattern M(m);
  for (int i = 1; i <= m; ++i) M(i, m) = shape[i - 1];
  std::vector<GTPattern> out;
  fill_rows(M, m - 1, out);
  std::sort(out.begin(), out.end());
  return out;
}

BigInt binomial(long n, long k) {
  if (k < 0 || n < 0 || k > n) return 0;
  k = std::min(k, n - k);
  BigInt r = 1;
  for (long i = 1; i <= k; ++i) {
    r *= (n - k + i);
    r /= i;
  }
  return r;
}

BigInt dim_weyl(const Shape& shape) {
  const int m = shape.m();
  BigInt num = 1, den = 1;
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j) {
      num *= (shape[i] - shape[j] + j - i);
      den *= (j - i);
    }
  return num / den;
}

BigInt dim_lambda(const IrrepLabel& label) {
  const int k = label.k, m = label.m;
  if (m < 2) fail(ErrorKind::Domain, "dim_lambda needs m >= 2");
  if (k < 0) fail(ErrorKind::Domain, "dim_lambda needs k >= 0");
  BigInt c = binomial(k + m - 2, k);
  BigInt num = BigInt(2 * k + m - 1) * c * c;
  return num / (m - 1);
}

BigInt dim_sector(int n, int m) {
  if (n < 0 || m < 1) fail(ErrorKind::Domain, "dim_sector needs n >= 0, m >= 1");
  return binomial(n + m - 1, n);
}

Weight weight(const GTPattern& M) {
  const int m = M.m();
  Weight w(m - 1);
  for (int j = 1; j < m; ++j) w[j - 1] = static_cast<int>(2 * M.row_sum(j) - M.row_sum(j - 1) - M.row_sum(j + 1));
  return w;
}

std::vector<long> tableau_weight(const GTPattern& M) {
  std::vector<long> w(M.m());
  for (int j = 1; j <= M.m(); ++j) w[j - 1] = M.row_sum(j) - M.row_sum(j - 1);
  return w;
}

bool is_zero_weight(const GTPattern& M) {
  // All tableau weights equal.
  const long first = M.row_sum(1);
  for (int j = 2; j <= M.m(); ++j)
    if (M.row_sum(j) - M.row_sum(j - 1) != first) return false;
  return true;
}

GTPattern fock_to_gt(const FockVector& v) {
  const int m = static_cast<int>(v.size());
  if (m < 1) fail(ErrorKind::Argument, "empty Fock vector");
  GTPattern M(m);
  int acc = 0;
  for (int j = 1; j <= m; ++j) {
    if (v[j - 1] < 0) fail(ErrorKind::Argument, "negative occupation");
    acc += v[j - 1];
    M(1, j) = acc;
  }
  return M;
}

FockVector gt_to_fock(const GTPattern& M) {
  const int m = M.m();
  FockVector v(m);
  for (int j = 1; j <= m; ++j) {
    for (int i = 2; i <= j; ++i)
      if (M(i, j) != 0) fail(ErrorKind::Argument, "pattern is not of symmetric shape: " + M.str());
    v[j - 1] = M(1, j) - (j > 1 ? M(1, j - 1) : 0);
    if (v[j - 1] < 0) fail(ErrorKind::Argument, "pattern does not interlace: " + M.str());
  }
  return v;
}

GTPattern highest_pattern(const Shape& shape) {
  const int m = shape.m();
  GTPattern M(m);
  for (int j = 1; j <= m; ++j)
    for (int i = 1; i <= j; ++i) M(i, j) = shape[i - 1];
  return M;
}

GTPattern dual_pattern(const GTPattern& M) {
  const int m = M.m();
  const int top = M(1, m);
  GTPattern D(m);
  for (int l = 1; l <= m; ++l)
    for (int i = 1; i <= l; ++i) D(i, l) = top - M(l - i + 1, l);
  return D;
}

long dual_phase(const GTPattern& M) {
  const int m = M.m();
  return M.bottom_sum(m - 1) - highest_pattern(M.top()).bottom_sum(m - 1);
}

std::vector<IrrepLabel> decompose_omega(int n, int m) {
  if (n < 0 || m < 2) fail(ErrorKind::Domain, "decompose_omega needs n >= 0, m >= 2");
  std::vector<IrrepLabel> out;
  for (int k = 0; k <= n; ++k) out.push_back({k, m});
  return out;
}

int tensor_square_multiplicity(int k, int l, int m) {
  if (m < 2 || k < 0 || l < 0) fail(ErrorKind::Domain, "tensor_square_multiplicity needs m >= 2, k, l >= 0");
  if (m == 2) return l <= 2 * k ? 1 : 0;
  if (l <= k) return l + 1;
  if (l <= 2 * k) return 2 * k - l + 1;
  return 0;
}

BigInt zero_weight_multiplicity(int k, int m) {
  if (m < 2 || k < 0) fail(ErrorKind::Domain, "zero_weight_multiplicity needs k >= 0, m >= 2");
  return binomial(k + m - 2, k);
}

std::vector<FockVector> sector_basis(int n, int m) {
  if (m == 1) return {FockVector{n}};
  std::vector<FockVector> out;
  for (const auto& M : enumerate_patterns(symmetric_shape(n, m))) out.push_back(gt_to_fock(M));
  return out;
}

int total(const FockVector& v) { return std::accumulate(v.begin(), v.end(), 0); }

double multi_factorial(const FockVector& v) {
  double f = 1.0;
  for (int c : v)
    for (int i = 2; i <= c; ++i) f *= i;
  return f;
}

}  // namespace prb
