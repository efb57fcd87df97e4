#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "prb/repcore.hpp"
#include "prb/rng.hpp"

namespace prb {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;

enum class Exec { Serial, Parallel };

// m x m unitary, checked at construction.
class PassiveUnitary {
 public:
  PassiveUnitary() = default;
  explicit PassiveUnitary(CMatrix U, double tol = 1e-10);
  int m() const { return static_cast<int>(U_.rows()); }
  const CMatrix& matrix() const { return U_; }

 private:
  CMatrix U_;
};

double unitarity_defect(const CMatrix& U);

cplx permanent(const CMatrix& A);           // Ryser, Gray-code order
cplx permanent_parallel(const CMatrix& A);  // Ryser, Gray-code chunks over threads
cplx permanent_naive(const CMatrix& A);     // sum over permutations

CMatrix submatrix(const CMatrix& g, const FockVector& n_out, const FockVector& n_in);
cplx amplitude(const CMatrix& g, const FockVector& n_out, const FockVector& n_in);

// Sector basis, cached; same order as sector_basis().
const std::vector<FockVector>& sector(int n, int m);
int sector_index(const FockVector& v);  // position in sector(|v|, m)

std::vector<double> outcome_distribution(const CMatrix& g, const FockVector& n_in, size_t cap = 100000);

CMatrix haar_unitary(int m, Rng& rng);
// Random beam splitter on two random modes followed by random phases on all modes.
CMatrix composite_local_unitary(int m, Rng& rng);
// factors in application order g_1, ..., g_l; returns g_l ... g_1.
CMatrix compose(const std::vector<CMatrix>& factors);

struct LossModel {
  enum class Kind { None, Uniform, GateRandom };
  Kind kind = Kind::None;
  double sqrt_p = 1.0;
  double range_lo = 1.0, range_hi = 1.0;
  double sqrt_p_sp = 1.0, sqrt_p_m = 1.0;
  void validate() const;
};

enum class Measure { Haar, CompositeLocal, Identity };

struct SimConfig {
  int n = 0, m = 0;
  FockVector input;
  std::vector<int> lengths;
  long shots = 0;
  LossModel loss;
  uint64_t seed = 1;
  Measure measure = Measure::Haar;
  bool store_factors = false;
  void validate() const;
};

struct ExperimentRecord {
  int seq_len = 0;
  CMatrix product;
  std::vector<CMatrix> factors;
  FockVector outcome;
  bool survived = true;
};

// One shot for a fixed gate sequence and per-gate transmittivities.
ExperimentRecord run_sequence(const std::vector<CMatrix>& gates, const std::vector<double>& sqrt_p_gates,
                              const FockVector& input, const LossModel& loss, Rng& rng, bool keep_factors);

std::vector<ExperimentRecord> simulate(const SimConfig& cfg, Exec exec = Exec::Parallel);

}  // namespace prb
