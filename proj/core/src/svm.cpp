#include "toolmotion/svm.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "toolmotion/error.hpp"

namespace toolmotion {

namespace {

constexpr double kTau = 1e-12;
constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

double dual_objective(std::span<const double> q, std::span<const double> alpha) {
  const std::size_t n = alpha.size();
  double quad = 0.0;
  double lin = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    lin += alpha[i];
    if (alpha[i] == 0.0) continue;
    for (std::size_t j = 0; j < n; ++j) quad += alpha[i] * q[i * n + j] * alpha[j];
  }
  return 0.5 * quad - lin;
}

DualSolution solve_svm_dual(std::span<const double> q, std::span<const int> y, std::span<const double> c,
                            double tolerance, long max_iterations) {
  const std::size_t n = y.size();
  DualSolution sol;
  sol.alpha.assign(n, 0.0);
  std::vector<double> grad(n, -1.0);  // Q a - e
  std::vector<double>& a = sol.alpha;
  auto Q = [&](std::size_t i, std::size_t j) { return q[i * n + j]; };

  while (sol.iterations < max_iterations) {
    // first index: maximal violating -y G over the "up" set
    double gmax = -kInf;
    std::ptrdiff_t i_sel = -1;
    for (std::size_t t = 0; t < n; ++t) {
      if (y[t] == 1) {
        if (a[t] < c[t] && -grad[t] >= gmax) {
          gmax = -grad[t];
          i_sel = static_cast<std::ptrdiff_t>(t);
        }
      } else if (a[t] > 0.0 && grad[t] >= gmax) {
        gmax = grad[t];
        i_sel = static_cast<std::ptrdiff_t>(t);
      }
    }
    // second index: largest objective decrease over the "low" set
    double gmax2 = -kInf;
    double best = kInf;
    std::ptrdiff_t j_sel = -1;
    for (std::size_t t = 0; t < n; ++t) {
      if (y[t] == 1) {
        if (a[t] > 0.0) {
          const double diff = gmax + grad[t];
          gmax2 = std::max(gmax2, grad[t]);
          if (diff > 0.0 && i_sel >= 0) {
            const auto i = static_cast<std::size_t>(i_sel);
            const double quad = Q(i, i) + Q(t, t) - 2.0 * y[i] * Q(i, t);
            const double obj = -(diff * diff) / (quad > 0.0 ? quad : kTau);
            if (obj <= best) {
              best = obj;
              j_sel = static_cast<std::ptrdiff_t>(t);
            }
          }
        }
      } else if (a[t] < c[t]) {
        const double diff = gmax - grad[t];
        gmax2 = std::max(gmax2, -grad[t]);
        if (diff > 0.0 && i_sel >= 0) {
          const auto i = static_cast<std::size_t>(i_sel);
          const double quad = Q(i, i) + Q(t, t) + 2.0 * y[i] * Q(i, t);
          const double obj = -(diff * diff) / (quad > 0.0 ? quad : kTau);
          if (obj <= best) {
            best = obj;
            j_sel = static_cast<std::ptrdiff_t>(t);
          }
        }
      }
    }
    if (i_sel < 0 || j_sel < 0 || gmax + gmax2 < tolerance) break;

    const auto i = static_cast<std::size_t>(i_sel);
    const auto j = static_cast<std::size_t>(j_sel);
    const double old_ai = a[i];
    const double old_aj = a[j];
    const double ci = c[i];
    const double cj = c[j];

    if (y[i] != y[j]) {
      double quad = Q(i, i) + Q(j, j) + 2.0 * Q(i, j);
      if (quad <= 0.0) quad = kTau;
      const double delta = (-grad[i] - grad[j]) / quad;
      const double diff = a[i] - a[j];
      a[i] += delta;
      a[j] += delta;
      if (diff > 0.0) {
        if (a[j] < 0.0) {
          a[j] = 0.0;
          a[i] = diff;
        }
      } else if (a[i] < 0.0) {
        a[i] = 0.0;
        a[j] = -diff;
      }
      if (diff > ci - cj) {
        if (a[i] > ci) {
          a[i] = ci;
          a[j] = ci - diff;
        }
      } else if (a[j] > cj) {
        a[j] = cj;
        a[i] = cj + diff;
      }
    } else {
      double quad = Q(i, i) + Q(j, j) - 2.0 * Q(i, j);
      if (quad <= 0.0) quad = kTau;
      const double delta = (grad[i] - grad[j]) / quad;
      const double sum = a[i] + a[j];
      a[i] -= delta;
      a[j] += delta;
      if (sum > ci) {
        if (a[i] > ci) {
          a[i] = ci;
          a[j] = sum - ci;
        }
      } else if (a[j] < 0.0) {
        a[j] = 0.0;
        a[i] = sum;
      }
      if (sum > cj) {
        if (a[j] > cj) {
          a[j] = cj;
          a[i] = sum - cj;
        }
      } else if (a[i] < 0.0) {
        a[i] = 0.0;
        a[j] = sum;
      }
    }

    const double dai = a[i] - old_ai;
    const double daj = a[j] - old_aj;
    for (std::size_t t = 0; t < n; ++t) grad[t] += Q(i, t) * dai + Q(j, t) * daj;
    ++sol.iterations;
  }
  if (sol.iterations >= max_iterations) {
    spdlog::warn("SMO stopped at the iteration limit ({})", max_iterations);
  }

  // bias from free vectors, else the midpoint of the feasible interval
  double ub = kInf;
  double lb = -kInf;
  double sum_free = 0.0;
  std::size_t n_free = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const double yg = y[t] * grad[t];
    if (a[t] >= c[t]) {
      if (y[t] == -1) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else if (a[t] <= 0.0) {
      if (y[t] == 1) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else {
      ++n_free;
      sum_free += yg;
    }
  }
  sol.rho = n_free > 0 ? sum_free / static_cast<double>(n_free) : 0.5 * (ub + lb);

  double obj = 0.0;
  for (std::size_t t = 0; t < n; ++t) obj += a[t] * (grad[t] - 1.0);
  sol.objective = 0.5 * obj;
  return sol;
}

std::vector<double> Standardizer::apply(std::span<const double> x) const {
  std::vector<double> out;
  out.reserve(kept.size());
  for (std::size_t k = 0; k < kept.size(); ++k) {
    const std::size_t d = kept[k];
    out.push_back((x[d] - mean[k]) / scale[k]);
  }
  return out;
}

double rbf_kernel(std::span<const double> a, std::span<const double> b, double gamma) {
  double sq = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    sq += d * d;
  }
  return std::exp(-gamma * sq);
}

double SvmModel::decision(std::span<const double> x) const {
  const std::vector<double> z = standardizer.apply(x);
  double f = bias;
  for (std::size_t s = 0; s < support_vectors.size(); ++s) {
    f += coefficients[s] * rbf_kernel(support_vectors[s], z, gamma);
  }
  return f;
}

SvmModel train_svm(std::span<const std::vector<double>> x, std::span<const int> y, const SvmParams& params) {
  const std::size_t n = x.size();
  if (n != y.size()) throw Error(ErrorKind::SchemaError, "feature and label counts differ");
  const auto n_pos = static_cast<std::size_t>(std::count(y.begin(), y.end(), 1));
  const auto n_neg = static_cast<std::size_t>(std::count(y.begin(), y.end(), -1));
  if (n_pos + n_neg != n) throw Error(ErrorKind::SchemaError, "labels must be +1 or -1");
  if (n_pos == 0 || n_neg == 0) throw Error(ErrorKind::SingleClass, "training data holds a single class");
  const std::size_t dims = x.front().size();

  SvmModel model;
  // standardization on training rows only
  for (std::size_t d = 0; d < dims; ++d) {
    double mean = 0.0;
    for (const auto& row : x) mean += row[d];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (const auto& row : x) var += (row[d] - mean) * (row[d] - mean);
    var /= static_cast<double>(n);
    const double sd = std::sqrt(var);
    if (!(sd > 1e-12 * std::max(1.0, std::abs(mean)))) {
      spdlog::warn("DegenerateFeature: dimension {} has zero training variance and is dropped", d);
      continue;
    }
    model.standardizer.kept.push_back(d);
    model.standardizer.mean.push_back(mean);
    model.standardizer.scale.push_back(sd);
  }

  std::vector<std::vector<double>> z;
  z.reserve(n);
  for (const auto& row : x) z.push_back(model.standardizer.apply(row));
  const std::size_t dz = model.standardizer.kept.size();

  if (params.gamma) {
    model.gamma = *params.gamma;
  } else if (dz > 0) {
    double mean_var = 0.0;
    for (std::size_t k = 0; k < dz; ++k) {
      double m = 0.0, v = 0.0;
      for (const auto& row : z) m += row[k];
      m /= static_cast<double>(n);
      for (const auto& row : z) v += (row[k] - m) * (row[k] - m);
      mean_var += v / static_cast<double>(n);
    }
    mean_var /= static_cast<double>(dz);
    model.gamma = 1.0 / (static_cast<double>(dz) * mean_var);
  }

  model.c_positive = params.C;
  model.c_negative = params.C;
  if (params.balanced) {
    model.c_positive = params.C * static_cast<double>(n) / (2.0 * static_cast<double>(n_pos));
    model.c_negative = params.C * static_cast<double>(n) / (2.0 * static_cast<double>(n_neg));
  }

  std::vector<double> q(n * n);
  std::vector<double> c(n);
  for (std::size_t i = 0; i < n; ++i) {
    c[i] = y[i] == 1 ? model.c_positive : model.c_negative;
    for (std::size_t j = 0; j <= i; ++j) {
      const double k = rbf_kernel(z[i], z[j], model.gamma);
      q[i * n + j] = q[j * n + i] = y[i] * y[j] * k;
    }
  }

  const DualSolution sol = solve_svm_dual(q, y, c, params.tolerance, params.max_iterations);
  for (std::size_t i = 0; i < n; ++i) {
    if (sol.alpha[i] > 0.0) {
      model.support_vectors.push_back(z[i]);
      model.coefficients.push_back(sol.alpha[i] * y[i]);
      model.support_indices.push_back(i);
    }
  }
  model.bias = -sol.rho;
  model.dual_objective = sol.objective;
  if (!std::isfinite(model.bias)) throw Error(ErrorKind::NumericFailure, "SVM bias is not finite");
  return model;
}

SvmPrediction predict_svm(const SvmModel& model, std::span<const double> x) {
  const double f = model.decision(x);
  SvmPrediction p;
  p.margin = f;
  p.label = (f > 0.0 || std::abs(f) < 1e-12) ? 1 : -1;
  return p;
}

}  // namespace toolmotion
