#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace toolmotion {

using Observation = std::vector<double>;
using ObservationSequence = std::vector<Observation>;

struct HmmParams {
  int n_states = 3;
  int max_iterations = 200;
  double convergence = 1e-6;     ///< stop when the log-likelihood gains less than this
  double variance_floor = 1e-6;
};

/// Hidden Markov model with one diagonal Gaussian per state.
struct GaussianHmm {
  std::vector<double> initial;                  ///< [state]
  std::vector<std::vector<double>> transition;  ///< [from][to], rows sum to 1
  std::vector<std::vector<double>> means;       ///< [state][dim]
  std::vector<std::vector<double>> variances;   ///< [state][dim]

  int n_states() const { return static_cast<int>(initial.size()); }
  std::size_t dims() const { return means.empty() ? 0 : means.front().size(); }

  double log_emission(int state, std::span<const double> obs) const;
  /// Scaled forward algorithm; -inf for an impossible sequence, 0 for an empty one.
  double log_likelihood(const ObservationSequence& seq) const;

  ObservationSequence sample(std::size_t length, std::mt19937_64& rng) const;
};

struct HmmTrainingTrace {
  std::vector<double> log_likelihoods;  ///< total training log-likelihood before each M-step
  int iterations = 0;
  bool converged = false;
  bool monotone = true;  ///< no decrease beyond 1e-9 relative
};

/// Baum-Welch from a deterministic k-means start. Throws EmptyClass when
/// `sequences` is empty or every sequence is shorter than 2 observations.
GaussianHmm train_hmm(std::span<const ObservationSequence> sequences, const HmmParams& params,
                      HmmTrainingTrace* trace = nullptr);

/// Per-class models; label +1 = expert, -1 = novice.
struct HmmClassifier {
  GaussianHmm expert;
  GaussianHmm novice;
};

/// Training sequences per class; each class needs >= 2 sequences of length >= 3.
HmmClassifier train_hmm_classifier(std::span<const ObservationSequence> expert,
                                   std::span<const ObservationSequence> novice, const HmmParams& params);

struct HmmPrediction {
  int label = 1;
  double expert_score = 0.0;  ///< length-normalized log-likelihood
  double novice_score = 0.0;
};

/// argmax of length-normalized forward log-likelihood summed over the sequences;
/// ties resolve to expert.
HmmPrediction predict_hmm(const HmmClassifier& models, std::span<const ObservationSequence> sequences);

}  // namespace toolmotion
