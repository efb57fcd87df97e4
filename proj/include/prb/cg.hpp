#pragma once

#include <Eigen/Dense>

#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "prb/repcore.hpp"

namespace prb {

struct Ladder {
  int to;
  double value;
};

// <M - e_{k,l}| E_{l+1,l} |M>; zero when the lowered pattern does not interlace.
double lowering_element(const GTPattern& M, int k, int l);

// Everything about one irrep needed for coupling: basis, weight groups,
// ladder operators, and the per-weight lowering systems.
class IrrepBasis {
 public:
  explicit IrrepBasis(const Shape& shape);

  Shape shape;
  int m;
  std::vector<GTPattern> patterns;
  std::vector<Weight> weights;
  std::vector<int> group_of;       // pattern -> weight group
  std::vector<int> pos_in_group;   // pattern -> position within its group
  std::vector<Weight> group_weight;
  std::vector<std::vector<int>> groups;
  std::vector<int> order;          // groups by decreasing height
  std::vector<long> height;        // per group
  // lower[l-1][i]: patterns reached from i by E_{l+1,l}; raise is the transpose.
  std::vector<std::vector<std::vector<Ladder>>> lower, raise;

  // Rows (l, source pattern) whose lowering lands in a group, with the
  // pseudo-inverse of the resulting matrix (empty for the top group).
  struct GroupSystem {
    std::vector<std::pair<int, int>> rows;
    Eigen::MatrixXd pinv;
  };
  std::vector<GroupSystem> systems;
  // Same with raising from the groups one root below.
  std::vector<GroupSystem> up_systems;

  int dim() const { return static_cast<int>(patterns.size()); }
  int index_of(const GTPattern& M) const;  // -1 when absent
  int group_of_weight(const Weight& w) const;

 private:
  std::map<Weight, int> group_index_;
};

std::shared_ptr<const IrrepBasis> irrep_basis(const Shape& shape);

struct Coupling {
  Shape factor1, factor2, target;
  int m() const { return target.m(); }
  std::string key() const;
  bool operator==(const Coupling&) const = default;
  auto operator<=>(const Coupling&) const = default;
};

// tau_n x conj(tau_n) -> lambda_k
Coupling sector_coupling(int n, int k, int m);
// lambda_k x lambda_k -> lambda_l
Coupling square_coupling(int k, int l, int m);
// Closed-form multiplicity for the two protocol couplings, if recognised.
std::optional<int> expected_multiplicity(const Coupling& c);

class CGTable {
 public:
  Coupling coupling;
  int multiplicity = 0;
  std::shared_ptr<const IrrepBasis> b1, b2, bt;
  // Product pairs (i1 * dim2 + i2), sorted, for every weight group of the target.
  std::vector<std::vector<long>> pairs;
  // coeffs[M] holds multiplicity consecutive blocks, one per copy, aligned with pairs[group(M)].
  std::vector<std::vector<double>> coeffs;

  int dim2() const { return b2->dim(); }
  // Index form, r is 0-based.
  double at(int i1, int i2, int iM, int r) const;
  std::span<const double> column(int iM, int r) const;
  std::span<double> column(int iM, int r);
  const std::vector<long>& pairs_of(int iM) const { return pairs[bt->group_of[iM]]; }
  // Pattern form, r in 1..multiplicity.
  double coefficient(const GTPattern& M1, const GTPattern& M2, const GTPattern& M, int r) const;
  size_t stored() const;
  double build_residual = 0.0;
};

CGTable build_table(const Coupling& c);

struct VerifyReport {
  double column_dev = 0.0;   // max |sum_{M1,M2} C^{M,r} C^{M',r'} - delta|
  long selection_violations = 0;
  int worst_pattern = -1;
  int worst_copy = -1;
  bool pass(double tol = 1e-10) const { return column_dev < tol && selection_violations == 0; }
};

VerifyReport verify_table(const CGTable& t);
// Row relation across a complete set of tables for the same factors.
double verify_completeness(const std::vector<const CGTable*>& tables);

// Dominant highest weights of a product, with multiplicities found numerically.
std::vector<std::pair<Shape, int>> decompose_product(const Shape& f1, const Shape& f2);

// Row relation over the full decomposition of f1 x f2, building every component.
// Product weights are processed in batches holding at most batch_limit
// coefficients; each batch rebuilds the components.
struct CompletenessReport {
  double row_dev = 1.0;  // max |sum_{lambda,M,r} C C - delta|; 1 when incomplete
  BigInt dim_product = 0, dim_sum = 0;
  int irreps = 0;
  int batches = 0;
  double column_dev = 0.0;  // worst column relation among the components
};
CompletenessReport verify_product_completeness(const Shape& f1, const Shape& f2, double batch_limit = 2e8);

// On-disk cache.
std::string cache_directory();  // $PRB_CG_CACHE or empty
bool cache_store(const CGTable& t, const std::string& dir);
std::optional<CGTable> cache_load(const Coupling& c, const std::string& dir);

// Process-wide table store: memory, then disk cache, then build.
std::shared_ptr<const CGTable> get_table(const Coupling& c);
void clear_table_store();

}  // namespace prb
