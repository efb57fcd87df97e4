#pragma once

#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "prb/cg.hpp"
#include "prb/linopt.hpp"
#include "prb/repcore.hpp"

namespace prb {

// PNR frame-operator eigenvalue (m-1) / ((2k+m-1) C(k+m-2, k)).
BigRational frame_eigenvalue_exact(const IrrepLabel& label);
double frame_eigenvalue_pnr(const IrrepLabel& label);
// Same quantity from the coupling table: (1/d) sum_N sum_M (C_{N,Nbar}^M)^2.
double frame_eigenvalue_cg(int k, int n, int m);

// Diagonal slice of tau_n x conj(tau_n) -> lambda_k: for every sector state c,
// the coefficients C_{c,cbar}^M on the zero-weight patterns M of lambda_k.
struct SectorSlice {
  int n = 0, m = 0, k = 0;
  std::shared_ptr<const CGTable> table;
  std::vector<int> zero;               // zero-weight target pattern indices
  std::vector<std::vector<double>> c;  // c[state][z]
  std::vector<int> dual_index;         // state -> index of its dual pattern in factor 2
  std::vector<int> eps;                // state -> (-1)^phi of the dual pattern
  int dim() const { return static_cast<int>(c.size()); }
};
std::shared_ptr<const SectorSlice> sector_slice(int n, int k, int m);

struct IrrepFilter {
  int k = 0;
  double s = 0.0;
  std::vector<double> c0;  // input coefficients on zero-weight patterns
  std::vector<double> x;   // per sector state weight of |amplitude|^2
  double overlap = 0.0;    // sum_M (C_{N0,N0bar}^M)^2
};

// Immutable after build; safe to share across threads.
class FilterContext {
 public:
  static FilterContext build(int n, int m, const FockVector& input, std::vector<int> ks = {});
  int n = 0, m = 0;
  FockVector input;
  int input_index = -1;
  int eps0 = 1;
  std::map<int, IrrepFilter> irreps;
  const IrrepFilter& irrep(int k) const;
};

double filter_pnr(const FilterContext& ctx, int k, const FockVector& outcome, const CMatrix& g);
int filter_indicator(const FockVector& outcome, int n);

struct FilterSpec {
  enum class Kind { Irrep, Indicator };
  Kind kind = Kind::Irrep;
  int k = 0;
  bool post_select = true;
  std::string id() const;
};

struct SignalPoint {
  int seq_len = 0;
  std::optional<double> estimate;  // missing when nothing was usable
  std::optional<double> stderr_;
  long count_used = 0;
  long count_total = 0;
};

struct RBSignal {
  std::string filter_id;
  std::vector<SignalPoint> points;
  std::vector<std::string> warnings;
};

// Pairwise summation; the result depends only on the order of xs.
double pairwise_sum(std::span<const double> xs);

// ctx may be null for the indicator; n is then taken from `n`.
RBSignal estimate_signal(const std::vector<ExperimentRecord>& records, const FilterSpec& spec, const FilterContext* ctx,
                         int n, Exec exec = Exec::Parallel);

void write_signal_csv(std::ostream& os, const RBSignal& s);
RBSignal read_signal_csv(std::istream& is);

}  // namespace prb
