#include "toolmotion/hmm.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "toolmotion/error.hpp"

namespace toolmotion {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kMinOccupancy = 1e-10;

struct ScaledPass {
  std::vector<std::vector<double>> alpha;  // [t][state], each row sums to 1
  std::vector<std::vector<double>> emit;   // exp(log b - shift[t])
  std::vector<double> scale;               // c_t
  double log_likelihood = 0.0;
};

ScaledPass forward_pass(const GaussianHmm& m, const ObservationSequence& seq) {
  const int k = m.n_states();
  const std::size_t len = seq.size();
  ScaledPass p;
  p.alpha.assign(len, std::vector<double>(static_cast<std::size_t>(k), 0.0));
  p.emit.assign(len, std::vector<double>(static_cast<std::size_t>(k), 0.0));
  p.scale.assign(len, 0.0);
  for (std::size_t t = 0; t < len; ++t) {
    std::vector<double> logb(static_cast<std::size_t>(k));
    double shift = kNegInf;
    for (int j = 0; j < k; ++j) {
      logb[j] = m.log_emission(j, seq[t]);
      shift = std::max(shift, logb[j]);
    }
    if (!std::isfinite(shift)) {
      p.log_likelihood = kNegInf;
      return p;
    }
    for (int j = 0; j < k; ++j) p.emit[t][j] = std::exp(logb[j] - shift);
    double c = 0.0;
    for (int j = 0; j < k; ++j) {
      double a = 0.0;
      if (t == 0) {
        a = m.initial[j];
      } else {
        for (int i = 0; i < k; ++i) a += p.alpha[t - 1][i] * m.transition[i][j];
      }
      p.alpha[t][j] = a * p.emit[t][j];
      c += p.alpha[t][j];
    }
    if (!(c > 0.0)) {
      p.log_likelihood = kNegInf;
      return p;
    }
    for (int j = 0; j < k; ++j) p.alpha[t][j] /= c;
    p.scale[t] = c;
    p.log_likelihood += std::log(c) + shift;
  }
  return p;
}

struct Accumulators {
  std::vector<double> initial;
  std::vector<std::vector<double>> trans_num;
  std::vector<double> trans_den;
  std::vector<double> occupancy;
  std::vector<std::vector<double>> sum;
  std::vector<std::vector<double>> sum_sq;

  Accumulators(int k, std::size_t d)
      : initial(k, 0.0),
        trans_num(k, std::vector<double>(k, 0.0)),
        trans_den(k, 0.0),
        occupancy(k, 0.0),
        sum(k, std::vector<double>(d, 0.0)),
        sum_sq(k, std::vector<double>(d, 0.0)) {}
};

// E-step for one sequence; returns its log-likelihood.
double accumulate(const GaussianHmm& m, const ObservationSequence& seq, Accumulators& acc) {
  const int k = m.n_states();
  const std::size_t len = seq.size();
  const std::size_t d = m.dims();
  const ScaledPass p = forward_pass(m, seq);
  if (!std::isfinite(p.log_likelihood)) return p.log_likelihood;

  std::vector<std::vector<double>> beta(len, std::vector<double>(static_cast<std::size_t>(k), 1.0));
  for (std::size_t t = len - 1; t-- > 0;) {
    for (int i = 0; i < k; ++i) {
      double b = 0.0;
      for (int j = 0; j < k; ++j) b += m.transition[i][j] * p.emit[t + 1][j] * beta[t + 1][j];
      beta[t][i] = b / p.scale[t + 1];
    }
  }
  for (std::size_t t = 0; t < len; ++t) {
    double norm = 0.0;
    std::vector<double> gamma(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) {
      gamma[i] = p.alpha[t][i] * beta[t][i];
      norm += gamma[i];
    }
    for (int i = 0; i < k; ++i) {
      const double g = gamma[i] / norm;
      if (t == 0) acc.initial[i] += g;
      if (t + 1 < len) acc.trans_den[i] += g;
      acc.occupancy[i] += g;
      for (std::size_t e = 0; e < d; ++e) {
        acc.sum[i][e] += g * seq[t][e];
        acc.sum_sq[i][e] += g * seq[t][e] * seq[t][e];
      }
    }
    if (t + 1 < len) {
      for (int i = 0; i < k; ++i) {
        for (int j = 0; j < k; ++j) {
          acc.trans_num[i][j] +=
              p.alpha[t][i] * m.transition[i][j] * p.emit[t + 1][j] * beta[t + 1][j] / p.scale[t + 1];
        }
      }
    }
  }
  return p.log_likelihood;
}

GaussianHmm maximize(const GaussianHmm& old, const Accumulators& acc, double floor) {
  GaussianHmm m = old;
  const int k = old.n_states();
  const std::size_t d = old.dims();
  const double init_total = std::accumulate(acc.initial.begin(), acc.initial.end(), 0.0);
  for (int i = 0; i < k; ++i) m.initial[i] = init_total > 0.0 ? acc.initial[i] / init_total : old.initial[i];
  for (int i = 0; i < k; ++i) {
    if (acc.trans_den[i] > kMinOccupancy) {
      double row = 0.0;
      for (int j = 0; j < k; ++j) row += acc.trans_num[i][j];
      for (int j = 0; j < k; ++j) m.transition[i][j] = acc.trans_num[i][j] / row;
    }
    if (acc.occupancy[i] > kMinOccupancy) {
      for (std::size_t e = 0; e < d; ++e) {
        const double mean = acc.sum[i][e] / acc.occupancy[i];
        const double var = acc.sum_sq[i][e] / acc.occupancy[i] - mean * mean;
        m.means[i][e] = mean;
        m.variances[i][e] = std::max(var, floor);
      }
    }
  }
  return m;
}

std::vector<const ObservationSequence*> usable(std::span<const ObservationSequence> sequences, std::size_t min_len) {
  std::vector<const ObservationSequence*> out;
  for (const auto& s : sequences) {
    if (s.size() >= min_len) out.push_back(&s);
  }
  return out;
}

// Lloyd's k-means on standardized pooled observations, seeded at score quantiles.
GaussianHmm initialize(const std::vector<const ObservationSequence*>& seqs, const HmmParams& params) {
  std::vector<const Observation*> pooled;
  for (const auto* s : seqs) {
    for (const auto& o : *s) pooled.push_back(&o);
  }
  const std::size_t n = pooled.size();
  const std::size_t d = pooled.front()->size();
  const int k = params.n_states;

  std::vector<double> mean(d, 0.0), sd(d, 0.0);
  for (const auto* o : pooled) {
    for (std::size_t e = 0; e < d; ++e) mean[e] += (*o)[e];
  }
  for (auto& v : mean) v /= static_cast<double>(n);
  for (const auto* o : pooled) {
    for (std::size_t e = 0; e < d; ++e) sd[e] += ((*o)[e] - mean[e]) * ((*o)[e] - mean[e]);
  }
  std::vector<double> pooled_var(d);
  for (std::size_t e = 0; e < d; ++e) {
    pooled_var[e] = sd[e] / static_cast<double>(n);
    sd[e] = std::sqrt(pooled_var[e]);
    if (!(sd[e] > 0.0)) sd[e] = 1.0;
  }
  std::vector<std::vector<double>> z(n, std::vector<double>(d));
  std::vector<double> score(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t e = 0; e < d; ++e) {
      z[i][e] = ((*pooled[i])[e] - mean[e]) / sd[e];
      score[i] += z[i][e];
    }
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return score[a] < score[b]; });

  std::vector<std::vector<double>> centers(static_cast<std::size_t>(k));
  for (int c = 0; c < k; ++c) {
    const double q = (2.0 * c + 1.0) / (2.0 * k);
    const auto pos = std::min(n - 1, static_cast<std::size_t>(q * static_cast<double>(n)));
    centers[c] = z[order[pos]];
  }

  auto sqdist = [&](const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t e = 0; e < d; ++e) s += (a[e] - b[e]) * (a[e] - b[e]);
    return s;
  };

  std::vector<int> assign(n, -1);
  for (int iter = 0; iter < 100; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      int best = 0;
      double best_d = sqdist(z[i], centers[0]);
      for (int c = 1; c < k; ++c) {
        const double dd = sqdist(z[i], centers[c]);
        if (dd < best_d) {
          best_d = dd;
          best = c;
        }
      }
      if (assign[i] != best) {
        assign[i] = best;
        changed = true;
      }
    }
    std::vector<std::size_t> count(static_cast<std::size_t>(k), 0);
    for (int c = 0; c < k; ++c) centers[c].assign(d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      ++count[assign[i]];
      for (std::size_t e = 0; e < d; ++e) centers[assign[i]][e] += z[i][e];
    }
    for (int c = 0; c < k; ++c) {
      if (count[c] > 0) {
        for (auto& v : centers[c]) v /= static_cast<double>(count[c]);
        continue;
      }
      // empty cluster: reseed at the point farthest from its own center
      std::size_t far = 0;
      double far_d = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        const int a = assign[i];
        if (count[a] <= 1) continue;
        const double dd = sqdist(z[i], centers[a]);
        if (dd > far_d) {
          far_d = dd;
          far = i;
        }
      }
      if (far_d < 0.0) {
        centers[c] = z[order[n / 2]];
        continue;
      }
      --count[assign[far]];
      assign[far] = c;
      count[c] = 1;
      centers[c] = z[far];
      changed = true;
    }
    if (!changed) break;
  }

  GaussianHmm m;
  m.initial.assign(static_cast<std::size_t>(k), 1.0 / k);
  m.transition.assign(static_cast<std::size_t>(k), std::vector<double>(static_cast<std::size_t>(k), 0.0));
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      m.transition[i][j] = k == 1 ? 1.0 : (i == j ? 0.8 : 0.2 / (k - 1));
    }
  }
  m.means.assign(static_cast<std::size_t>(k), std::vector<double>(d, 0.0));
  m.variances.assign(static_cast<std::size_t>(k), std::vector<double>(d, 0.0));
  std::vector<std::size_t> count(static_cast<std::size_t>(k), 0);
  for (std::size_t i = 0; i < n; ++i) {
    ++count[assign[i]];
    for (std::size_t e = 0; e < d; ++e) m.means[assign[i]][e] += (*pooled[i])[e];
  }
  for (int c = 0; c < k; ++c) {
    if (count[c] == 0) {
      m.means[c] = mean;
      continue;
    }
    for (auto& v : m.means[c]) v /= static_cast<double>(count[c]);
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t e = 0; e < d; ++e) {
      const double dv = (*pooled[i])[e] - m.means[assign[i]][e];
      m.variances[assign[i]][e] += dv * dv;
    }
  }
  for (int c = 0; c < k; ++c) {
    for (std::size_t e = 0; e < d; ++e) {
      const double v = count[c] >= 2 ? m.variances[c][e] / static_cast<double>(count[c]) : pooled_var[e];
      m.variances[c][e] = std::max(v, params.variance_floor);
    }
  }
  return m;
}

}  // namespace

double GaussianHmm::log_emission(int state, std::span<const double> obs) const {
  const auto& mu = means[state];
  const auto& var = variances[state];
  double ll = 0.0;
  for (std::size_t e = 0; e < mu.size(); ++e) {
    const double diff = obs[e] - mu[e];
    ll -= 0.5 * (std::log(2.0 * std::numbers::pi * var[e]) + diff * diff / var[e]);
  }
  return ll;
}

double GaussianHmm::log_likelihood(const ObservationSequence& seq) const {
  return forward_pass(*this, seq).log_likelihood;
}

ObservationSequence GaussianHmm::sample(std::size_t length, std::mt19937_64& rng) const {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto draw = [&](const std::vector<double>& probs) {
    const double u = unit(rng);
    double acc = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      acc += probs[i];
      if (u < acc) return static_cast<int>(i);
    }
    return static_cast<int>(probs.size()) - 1;
  };
  ObservationSequence seq;
  seq.reserve(length);
  int state = draw(initial);
  for (std::size_t t = 0; t < length; ++t) {
    if (t > 0) state = draw(transition[state]);
    Observation o(dims());
    for (std::size_t e = 0; e < o.size(); ++e) o[e] = means[state][e] + std::sqrt(variances[state][e]) * normal(rng);
    seq.push_back(std::move(o));
  }
  return seq;
}

GaussianHmm train_hmm(std::span<const ObservationSequence> sequences, const HmmParams& params,
                      HmmTrainingTrace* trace) {
  const auto seqs = usable(sequences, 2);
  if (seqs.empty()) throw Error(ErrorKind::EmptyClass, "no training sequence of length >= 2");
  const std::size_t d = seqs.front()->front().size();
  for (const auto* s : seqs) {
    for (const auto& o : *s) {
      if (o.size() != d) throw Error(ErrorKind::SchemaError, "observation dimensions differ");
    }
  }

  GaussianHmm model = initialize(seqs, params);
  HmmTrainingTrace local;
  HmmTrainingTrace& tr = trace ? *trace : local;
  tr = HmmTrainingTrace{};

  double prev = kNegInf;
  for (int iter = 0; iter < params.max_iterations; ++iter) {
    Accumulators acc(model.n_states(), d);
    double ll = 0.0;
    for (const auto* s : seqs) ll += accumulate(model, *s, acc);
    if (!std::isfinite(ll)) throw Error(ErrorKind::NumericFailure, "training log-likelihood is not finite");
    tr.log_likelihoods.push_back(ll);
    if (std::isfinite(prev) && ll < prev - 1e-9 * std::max(1.0, std::abs(prev))) tr.monotone = false;
    if (std::isfinite(prev) && ll - prev < params.convergence) {
      tr.converged = true;
      break;
    }
    prev = ll;
    model = maximize(model, acc, params.variance_floor);
    tr.iterations = iter + 1;
  }
  return model;
}

HmmClassifier train_hmm_classifier(std::span<const ObservationSequence> expert,
                                   std::span<const ObservationSequence> novice, const HmmParams& params) {
  const auto e = usable(expert, 3);
  const auto n = usable(novice, 3);
  if (e.size() < 2 || n.size() < 2) {
    throw Error(ErrorKind::EmptyClass,
                fmt::format("each class needs >= 2 sequences of length >= 3 (expert {}, novice {})", e.size(),
                            n.size()));
  }
  auto collect = [](const std::vector<const ObservationSequence*>& v) {
    std::vector<ObservationSequence> out;
    for (const auto* s : v) out.push_back(*s);
    return out;
  };
  HmmClassifier c;
  c.expert = train_hmm(collect(e), params);
  c.novice = train_hmm(collect(n), params);
  return c;
}

HmmPrediction predict_hmm(const HmmClassifier& models, std::span<const ObservationSequence> sequences) {
  HmmPrediction p;
  std::size_t total = 0;
  for (const auto& s : sequences) {
    if (s.empty()) continue;
    p.expert_score += models.expert.log_likelihood(s);
    p.novice_score += models.novice.log_likelihood(s);
    total += s.size();
  }
  if (total > 0) {
    p.expert_score /= static_cast<double>(total);
    p.novice_score /= static_cast<double>(total);
  }
  p.label = p.novice_score > p.expert_score ? -1 : 1;
  return p;
}

}  // namespace toolmotion
