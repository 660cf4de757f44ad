#pragma once

#include <optional>
#include <span>
#include <vector>

namespace toolmotion {

struct SvmParams {
  double C = 1.0;
  std::optional<double> gamma;  ///< default 1 / (d * mean training variance)
  bool balanced = true;         ///< per-class C inversely proportional to class frequency
  double tolerance = 1e-6;      ///< KKT violation at termination
  long max_iterations = 10'000'000;
};

/// Solution of min 1/2 a'Qa - e'a  s.t.  y'a = 0, 0 <= a_i <= C_i.
struct DualSolution {
  std::vector<double> alpha;
  double rho = 0.0;  ///< decision(x) = sum a_i y_i K(x_i, x) - rho
  double objective = 0.0;
  long iterations = 0;
};

/// SMO with second-order working-set selection. `q` is the row-major n*n matrix
/// Q_ij = y_i y_j K_ij; labels are +1 / -1.
DualSolution solve_svm_dual(std::span<const double> q, std::span<const int> y, std::span<const double> c,
                            double tolerance, long max_iterations);

/// Value of the dual objective for a given alpha.
double dual_objective(std::span<const double> q, std::span<const double> alpha);

struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;
  std::vector<std::size_t> kept;  ///< input dimensions with nonzero training variance

  std::vector<double> apply(std::span<const double> x) const;
};

struct SvmModel {
  Standardizer standardizer;
  double gamma = 1.0;
  double c_positive = 1.0;
  double c_negative = 1.0;
  std::vector<std::vector<double>> support_vectors;  ///< standardized
  std::vector<double> coefficients;                  ///< alpha_i * y_i
  double bias = 0.0;                                 ///< decision = sum coef_i K(sv_i, x) + bias
  std::vector<std::size_t> support_indices;          ///< training rows
  double dual_objective = 0.0;

  double decision(std::span<const double> x) const;
};

double rbf_kernel(std::span<const double> a, std::span<const double> b, double gamma);

/// Labels are +1 (expert) / -1 (novice). Throws SingleClass when one class is missing.
/// Zero-variance dimensions are dropped with a warning.
SvmModel train_svm(std::span<const std::vector<double>> x, std::span<const int> y, const SvmParams& params);

struct SvmPrediction {
  int label = 1;
  double margin = 0.0;
};

/// Sign of the decision function; |f| < 1e-12 resolves to +1.
SvmPrediction predict_svm(const SvmModel& model, std::span<const double> x);

}  // namespace toolmotion
