#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <compare>
#include <cstdint>
#include <string>
#include <vector>

namespace prb {

using BigInt = boost::multiprecision::cpp_int;
using BigRational = boost::multiprecision::cpp_rational;

using FockVector = std::vector<int>;
using Weight = std::vector<int>;

// Weakly decreasing top row of m entries, last entry 0.
class Shape {
 public:
  Shape() = default;
  explicit Shape(std::vector<int> rows);

  int m() const { return static_cast<int>(rows_.size()); }
  int operator[](int i) const { return rows_[i]; }
  const std::vector<int>& rows() const { return rows_; }
  std::string str() const;

  bool operator==(const Shape&) const = default;
  auto operator<=>(const Shape&) const = default;

 private:
  std::vector<int> rows_;
};

struct IrrepLabel {
  int k = 0;
  int m = 2;
  Shape shape() const;
  bool operator==(const IrrepLabel&) const = default;
};

// Shapes used by the protocol.
Shape lambda_shape(int k, int m);           // (2k, k, ..., k, 0)
Shape symmetric_shape(int n, int m);        // (n, 0, ..., 0)
Shape dual_symmetric_shape(int n, int m);   // (n, ..., n, 0)

// Triangular pattern; row j (1-based) has j entries, stored bottom row first.
class GTPattern {
 public:
  GTPattern() = default;
  explicit GTPattern(int m) : m_(m), e_(static_cast<size_t>(m * (m + 1) / 2), 0) {}

  int m() const { return m_; }
  // 1-based (i, j) with 1 <= i <= j <= m.
  int operator()(int i, int j) const { return e_[offset(j) + i - 1]; }
  int& operator()(int i, int j) { return e_[offset(j) + i - 1]; }
  const std::vector<int>& flat() const { return e_; }

  long row_sum(int j) const;
  // Sum of all entries in rows 1..k.
  long bottom_sum(int k) const;
  Shape top() const;
  bool interlaces() const;
  std::string str() const;

  bool operator==(const GTPattern&) const = default;
  // Canonical order: lexicographic on the flat list, bottom row most significant.
  bool operator<(const GTPattern& o) const { return e_ < o.e_; }

  static size_t offset(int j) { return static_cast<size_t>((j - 1) * j / 2); }

 private:
  int m_ = 0;
  std::vector<int> e_;
};

std::vector<GTPattern> enumerate_patterns(const Shape& shape);

BigInt binomial(long n, long k);
BigInt dim_weyl(const Shape& shape);
BigInt dim_lambda(const IrrepLabel& label);
BigInt dim_sector(int n, int m);

Weight weight(const GTPattern& M);
// Tableau weight w^T_j = row_sum(j) - row_sum(j-1), j = 1..m.
std::vector<long> tableau_weight(const GTPattern& M);
bool is_zero_weight(const GTPattern& M);

GTPattern fock_to_gt(const FockVector& v);
FockVector gt_to_fock(const GTPattern& M);

GTPattern highest_pattern(const Shape& shape);
GTPattern dual_pattern(const GTPattern& M);
long dual_phase(const GTPattern& M);
// (-1)^phi as +-1.
inline int parity_sign(long phi) { return (phi % 2 == 0) ? 1 : -1; }

std::vector<IrrepLabel> decompose_omega(int n, int m);
int tensor_square_multiplicity(int k, int l, int m);
BigInt zero_weight_multiplicity(int k, int m);

// Fock states of the (n, m) sector in canonical GT order.
std::vector<FockVector> sector_basis(int n, int m);
int total(const FockVector& v);
double multi_factorial(const FockVector& v);

inline double to_double(const BigInt& x) { return x.convert_to<double>(); }
inline double to_double(const BigRational& x) { return x.convert_to<double>(); }

}  // namespace prb
