#pragma once

#include <map>
#include <vector>

#include "prb/linopt.hpp"
#include "prb/records.hpp"
#include "prb/repcore.hpp"

namespace prb {

using CoherentVector = std::vector<cplx>;

// I({n_i}) = (prod n_i!)^{-1/2} int d^2alpha e^{-(K/2)|alpha|^2} conj(alpha)^{n_1+..+n_{K/2}} alpha^{n_{K/2+1}+..+n_K},
// over Lebesgue measure on C^m, evaluated mode by mode.
double gaussian_moment(const std::vector<FockVector>& indices);

// <n|alpha> for the n-particle layer: e^{-|alpha|^2/2} alpha^n / sqrt(n!).
cplx coherent_coefficient(const CoherentVector& alpha, const FockVector& n);
// <alpha| tau(g) |c>
cplx coherent_overlap(const CoherentVector& alpha, const CMatrix& g, const FockVector& c);

double frame_eigenvalue_het(int k, int n, int m);

struct HetFilter {
  int k = 0;
  double s = 0.0;
  std::vector<double> x;
};

class HetContext {
 public:
  static HetContext build(int n, int m, const FockVector& input, std::vector<int> ks = {});
  int n = 0, m = 0;
  FockVector input;
  std::map<int, HetFilter> irreps;
  const HetFilter& irrep(int k) const;
};

// Normalised so its mean under the outcome density |<alpha|psi>|^2 / pi^m is sum_M C^2.
double filter_het(const HetContext& ctx, int k, const CoherentVector& alpha, const CMatrix& g);

double first_moment_het(int k, int n, int m, const FockVector& input);
double second_moment_het(int k, int n, int m, const FockVector& input);

// One draw from |<alpha| tau(g) |input>|^2 / pi^m by rejection from a Gamma(n+m) radial envelope.
CoherentVector sample_husimi(const CMatrix& g, const FockVector& input, Rng& rng);

// Loss-free heterodyne experiment; config loss settings are ignored.
std::vector<HetRecord> simulate_het(const SimConfig& cfg, Exec exec = Exec::Parallel);

}  // namespace prb
