#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "toolmotion/acquisition.hpp"
#include "toolmotion/features.hpp"
#include "toolmotion/hmm.hpp"
#include "toolmotion/svm.hpp"

namespace toolmotion {

/// One classification sample: one operator's share of one trial.
struct DatasetRow {
  std::string trial_id;
  std::string operator_id;
  SkillClass label = SkillClass::Expert;
  FeatureVector features;
  std::vector<ObservationSequence> sequences;  ///< per sub-trial (curvature, duration, hull increment)
};

struct Dataset {
  std::vector<DatasetRow> rows;
};

/// Throws SchemaError on an empty dataset, duplicate (trial, operator) rows, or an
/// operator whose label differs between rows.
void validate_dataset(const Dataset& ds);

enum class Scheme { TO, UO };
enum class ClassifierKind { Svm, Hmm };
enum class Feature { Scc, Sdc, Cr };

std::string_view to_string(Scheme s);
std::string_view to_string(ClassifierKind k);
Scheme parse_scheme(std::string_view s);
ClassifierKind parse_classifier(std::string_view s);

/// +1 for expert, -1 for novice.
int label_sign(SkillClass c);
SkillClass label_of(int sign);

/// Selected feature components in {scc, sdc, cr} order.
std::vector<double> select_features(const FeatureVector& fv, std::span<const Feature> features);

struct ConfusionMatrix {
  /// counts[predicted][actual], index 0 = expert, 1 = novice.
  std::array<std::array<long, 2>, 2> counts{};

  void add(SkillClass predicted, SkillClass actual);
  long total() const;
  bool operator==(const ConfusionMatrix&) const = default;
};

struct Metrics {
  double micro = 0.0;       ///< percent correct
  double macro = 0.0;       ///< mean per-class true-positive rate, percent
  double tpr_expert = 0.0;  ///< percent; NaN without expert rows
  double tpr_novice = 0.0;  ///< percent; NaN without novice rows
};

/// Nonnegative weights laid out like ConfusionMatrix::counts, e.g. per-class
/// percentages whose columns each sum to 100.
struct RateMatrix {
  std::array<std::array<double, 2>, 2> weights{};
};

/// Throws EmptyMatrix when every entry is zero. Macro averages the classes present.
Metrics metrics(const ConfusionMatrix& cm);
/// Also throws SchemaError on a negative or non-finite weight.
Metrics metrics(const RateMatrix& rm);

struct Fold {
  std::string held_out;           ///< trial id (TO) or operator id (UO)
  std::vector<std::size_t> train;  ///< row indices
  std::vector<std::size_t> test;
};

/// Folds ordered by held-out key; throws InsufficientFolds below 2 groups.
std::vector<Fold> make_folds(const Dataset& ds, Scheme scheme);

/// Empty when the folds are clean, otherwise a description of the first violation:
/// a test row whose trial (TO) or operator (UO) also appears in training, or test
/// rows not covering the dataset exactly once.
std::string fold_hygiene_violation(const Dataset& ds, Scheme scheme, std::span<const Fold> folds);

struct RowPrediction {
  std::size_t row = 0;
  std::size_t fold = 0;
  SkillClass predicted = SkillClass::Expert;
  double score = 0.0;  ///< SVM margin, or expert minus novice HMM score
};

struct ClassifierConfig {
  SvmParams svm;
  HmmParams hmm;
};

struct CvResult {
  ConfusionMatrix confusion;
  std::vector<Fold> folds;
  std::vector<RowPrediction> predictions;  ///< in fold order, then row order
};

/// Trains and predicts once per fold; training never sees the held-out rows.
/// A fold whose training data lacks a class predicts the class that is present.
CvResult cross_validate(const Dataset& ds, Scheme scheme, ClassifierKind kind, std::span<const Feature> features,
                        const ClassifierConfig& cfg);

/// JSON report with the columns "Only SCC", "Only SDC", "Only CR" and "Overall".
/// `only` restricts the columns by key (scc, sdc, cr, overall); empty keeps all four.
std::string classification_report(const Dataset& ds, Scheme scheme, ClassifierKind kind,
                                   const ClassifierConfig& cfg, std::span<const std::string> only = {});

}  // namespace toolmotion
