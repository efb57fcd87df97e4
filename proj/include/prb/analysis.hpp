#pragma once

#include <map>
#include <vector>

#include <json.hpp>

#include "prb/filter.hpp"
#include "prb/linopt.hpp"
#include "prb/repcore.hpp"

namespace prb {

struct FitResult {
  double A = 0.0;
  double r = 0.0;
  double residual = 0.0;  // weighted residual norm
  double se_A = 0.0, se_r = 0.0;
  int iterations = 0;
  int points = 0;
};

// A r^l by weighted log-linear start and damped Gauss-Newton.
FitResult fit_exponential(const RBSignal& signal);
// Weights 1/sigma^2; pass empty sigma for unit weights.
FitResult fit_exponential(const std::vector<double>& l, const std::vector<double>& y, const std::vector<double>& sigma);

struct FidelityResult {
  double fidelity = 0.0;
  double covered = 0.0;  // sum of d_k over provided k, relative to dim^2
};
FidelityResult rb_fidelity(const std::map<int, double>& rates, int n, int m);

BigRational combined_weight_exact(int n, int m, int u);
double combined_weight(int n, int m, int u);

struct AnalysisConfig {
  double delta = 0.2;
  double alpha = 0.1;
  double eps = 0.1;
  double confidence = 0.05;
  int u = 1;
};
long min_sequence_length(const AnalysisConfig& cfg, const IrrepLabel& label);

double first_moment(int k, int n, int m, const FockVector& input);
double second_moment(int k, int n, int m, const FockVector& input, Exec exec = Exec::Parallel);
long sample_complexity(double variance, double eps, double delta);

nlohmann::json to_json(const FitResult& f);

}  // namespace prb
