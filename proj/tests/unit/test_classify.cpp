#include <fmt/format.h>

#include <cmath>
#include <json.hpp>
#include <set>

#include "test_helpers.hpp"
#include "toolmotion/classify.hpp"

using namespace toolmotion;
using namespace toolmotion::testing;

namespace {

constexpr std::array<Feature, 3> kAll{Feature::Scc, Feature::Sdc, Feature::Cr};

DatasetRow row(const std::string& trial, const std::string& op, SkillClass label, FeatureVector fv = {}) {
  DatasetRow r;
  r.trial_id = trial;
  r.operator_id = op;
  r.label = label;
  r.features = fv;
  return r;
}

/// Experts near (0.01, 0.02, 8), novices near (0.03, 0.01, 4), with small jitter.
Dataset separable_dataset(std::uint64_t seed, int trials = 16) {
  auto rng = make_rng(seed);
  std::normal_distribution<double> jitter(0.0, 0.05);
  Dataset ds;
  for (int t = 0; t < trials; ++t) {
    const std::string trial = fmt::format("T{:02d}", t);
    const std::string expert = fmt::format("E{}", t % 3 + 1);
    const std::string novice = fmt::format("N{}", t % 4 + 1);
    ds.rows.push_back(row(trial, expert, SkillClass::Expert,
                          {0.01 * (1 + jitter(rng)), 0.02 * (1 + jitter(rng)), 8 * (1 + jitter(rng)), 15}));
    if (t % 2 == 0) {
      ds.rows.push_back(row(trial, novice, SkillClass::Novice,
                            {0.03 * (1 + jitter(rng)), 0.01 * (1 + jitter(rng)), 4 * (1 + jitter(rng)), 15}));
    }
  }
  return ds;
}

/// Random labelled rows where each operator keeps one label.
Dataset random_dataset(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> n_trials(2, 12);
  std::uniform_int_distribution<int> n_ops(2, 6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int ops = n_ops(rng);
  Dataset ds;
  for (int t = 0, nt = n_trials(rng); t < nt; ++t) {
    for (int o = 0; o < ops; ++o) {
      if (u(rng) < 0.4) continue;
      ds.rows.push_back(row(fmt::format("T{}", t), fmt::format("S{}", o),
                            o % 2 == 0 ? SkillClass::Expert : SkillClass::Novice, {u(rng), u(rng), u(rng), 10}));
    }
  }
  if (ds.rows.empty()) ds.rows.push_back(row("T0", "S0", SkillClass::Expert));
  return ds;
}

}  // namespace

TEST(Metrics, ConfusionCountsByHand) {
  ConfusionMatrix cm;
  cm.counts = {{{3, 1}, {2, 4}}};
  const Metrics m = metrics(cm);
  EXPECT_DOUBLE_EQ(m.tpr_expert, 60.0);
  EXPECT_DOUBLE_EQ(m.tpr_novice, 80.0);
  EXPECT_DOUBLE_EQ(m.micro, 70.0);
  EXPECT_DOUBLE_EQ(m.macro, 70.0);
  EXPECT_EQ(cm.total(), 10);
}

TEST(Metrics, AddTalliesPredictedAgainstActual) {
  ConfusionMatrix cm;
  cm.add(SkillClass::Expert, SkillClass::Novice);
  cm.add(SkillClass::Novice, SkillClass::Novice);
  EXPECT_EQ(cm.counts[0][1], 1);
  EXPECT_EQ(cm.counts[1][1], 1);
  EXPECT_EQ(cm.total(), 2);
}

TEST(Metrics, ReferenceRateMatricesGiveExpectedMacro) {
  EXPECT_NEAR(metrics(RateMatrix{{{{55.3, 11.1}, {44.7, 88.9}}}}).macro, 72.1, 0.05);
  EXPECT_NEAR(metrics(RateMatrix{{{{63.2, 16.7}, {36.8, 83.3}}}}).macro, 73.25, 0.05);
}

TEST(Metrics, RateAndCountFormsAgree) {
  ConfusionMatrix cm;
  cm.counts = {{{7, 2}, {5, 9}}};
  RateMatrix rm;
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) rm.weights[i][j] = static_cast<double>(cm.counts[i][j]);
  }
  const Metrics a = metrics(cm);
  const Metrics b = metrics(rm);
  EXPECT_DOUBLE_EQ(a.micro, b.micro);
  EXPECT_DOUBLE_EQ(a.macro, b.macro);
}

TEST(Metrics, SingleClassAndErrors) {
  ConfusionMatrix only_experts;
  only_experts.counts = {{{3, 0}, {1, 0}}};
  const Metrics m = metrics(only_experts);
  EXPECT_DOUBLE_EQ(m.macro, 75.0);
  EXPECT_TRUE(std::isnan(m.tpr_novice));
  EXPECT_ERROR_KIND(metrics(ConfusionMatrix{}), ErrorKind::EmptyMatrix);
  EXPECT_ERROR_KIND(metrics(RateMatrix{{{{-1.0, 1.0}, {1.0, 1.0}}}}), ErrorKind::SchemaError);
  EXPECT_ERROR_KIND(metrics(RateMatrix{{{{NAN, 1.0}, {1.0, 1.0}}}}), ErrorKind::SchemaError);
}

TEST(Labels, SignsAndParsing) {
  EXPECT_EQ(label_sign(SkillClass::Expert), 1);
  EXPECT_EQ(label_sign(SkillClass::Novice), -1);
  EXPECT_EQ(label_of(1), SkillClass::Expert);
  EXPECT_EQ(label_of(-1), SkillClass::Novice);
  EXPECT_EQ(parse_scheme("TO"), Scheme::TO);
  EXPECT_EQ(parse_scheme("uo"), Scheme::UO);
  EXPECT_EQ(parse_classifier("hmm"), ClassifierKind::Hmm);
  EXPECT_ERROR_KIND(parse_scheme("LOO"), ErrorKind::ParseError);
  EXPECT_ERROR_KIND(parse_classifier("knn"), ErrorKind::ParseError);
}

TEST(FeatureSelection, KeepsCanonicalOrder) {
  const FeatureVector fv{1, 2, 3, 4};
  const std::array<Feature, 2> picked{Feature::Cr, Feature::Scc};
  EXPECT_EQ(select_features(fv, picked), (std::vector<double>{1, 3}));
  EXPECT_EQ(select_features(fv, kAll), (std::vector<double>{1, 2, 3}));
}

TEST(Dataset, ValidationErrors) {
  Dataset ds;
  EXPECT_ERROR_KIND(validate_dataset(ds), ErrorKind::SchemaError);
  ds.rows = {row("T1", "A", SkillClass::Expert), row("T1", "A", SkillClass::Expert)};
  EXPECT_ERROR_KIND(validate_dataset(ds), ErrorKind::SchemaError);
  ds.rows = {row("T1", "A", SkillClass::Expert), row("T2", "A", SkillClass::Novice)};
  EXPECT_ERROR_KIND(validate_dataset(ds), ErrorKind::SchemaError);
  ds.rows = {row("T1", "A", SkillClass::Expert), row("T1", "B", SkillClass::Novice)};
  EXPECT_NO_THROW(validate_dataset(ds));
}

TEST(Folds, TrialOutGroupsByTrial) {
  Dataset ds;
  ds.rows = {row("T2", "E1", SkillClass::Expert), row("T1", "N1", SkillClass::Novice),
             row("T1", "E1", SkillClass::Expert), row("T3", "N2", SkillClass::Novice)};
  const auto folds = make_folds(ds, Scheme::TO);
  ASSERT_EQ(folds.size(), 3u);
  EXPECT_EQ(folds[0].held_out, "T1");
  EXPECT_EQ(folds[0].test, (std::vector<std::size_t>{2, 1}));
  EXPECT_EQ(folds[0].train, (std::vector<std::size_t>{0, 3}));
  EXPECT_EQ(folds[2].held_out, "T3");
}

TEST(Folds, OperatorOutGroupsByOperator) {
  Dataset ds;
  ds.rows = {row("T1", "E1", SkillClass::Expert), row("T1", "N1", SkillClass::Novice),
             row("T2", "E1", SkillClass::Expert), row("T3", "N2", SkillClass::Novice)};
  const auto folds = make_folds(ds, Scheme::UO);
  ASSERT_EQ(folds.size(), 3u);
  EXPECT_EQ(folds[0].held_out, "E1");
  EXPECT_EQ(folds[0].test, (std::vector<std::size_t>{0, 2}));
}

TEST(Folds, SingleGroupIsInsufficient) {
  Dataset ds;
  ds.rows = {row("T1", "E1", SkillClass::Expert), row("T2", "E1", SkillClass::Expert)};
  EXPECT_ERROR_KIND(make_folds(ds, Scheme::UO), ErrorKind::InsufficientFolds);
  EXPECT_NO_THROW(make_folds(ds, Scheme::TO));
  ds.rows = {row("T1", "E1", SkillClass::Expert), row("T1", "N1", SkillClass::Novice)};
  EXPECT_ERROR_KIND(make_folds(ds, Scheme::TO), ErrorKind::InsufficientFolds);
}

TEST(Folds, HygieneHoldsAndDetectsLeaksProperty) {
  auto rng = make_rng(91);
  for (int trial = 0; trial < 200; ++trial) {
    const Dataset ds = random_dataset(rng);
    for (Scheme scheme : {Scheme::TO, Scheme::UO}) {
      std::vector<Fold> folds;
      try {
        folds = make_folds(ds, scheme);
      } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::InsufficientFolds);
        continue;
      }
      EXPECT_EQ(fold_hygiene_violation(ds, scheme, folds), "");
      std::set<std::size_t> tested;
      for (const Fold& f : folds) {
        EXPECT_EQ(f.train.size() + f.test.size(), ds.rows.size());
        tested.insert(f.test.begin(), f.test.end());
      }
      EXPECT_EQ(tested.size(), ds.rows.size());

      auto leaked = folds;
      leaked[0].train.push_back(leaked[0].test.front());
      EXPECT_NE(fold_hygiene_violation(ds, scheme, leaked), "");
      auto dropped = folds;
      dropped.back().test.pop_back();
      EXPECT_NE(fold_hygiene_violation(ds, scheme, dropped), "");
    }
  }
}

TEST(CrossValidate, SeparableDataIsClassifiedCorrectly) {
  const Dataset ds = separable_dataset(92);
  for (Scheme scheme : {Scheme::TO, Scheme::UO}) {
    const CvResult cv = cross_validate(ds, scheme, ClassifierKind::Svm, kAll, {});
    EXPECT_EQ(cv.confusion.total(), static_cast<long>(ds.rows.size()));
    EXPECT_EQ(cv.predictions.size(), ds.rows.size());
    EXPECT_GE(metrics(cv.confusion).macro, 95.0) << to_string(scheme);
  }
}

TEST(CrossValidate, FoldWithoutAClassPredictsThePresentOne) {
  Dataset ds;
  ds.rows = {row("T1", "E1", SkillClass::Expert, {0, 0, 1, 9}), row("T2", "E2", SkillClass::Expert, {0, 0, 2, 9}),
             row("T3", "N1", SkillClass::Novice, {1, 1, 0, 9})};
  const CvResult cv = cross_validate(ds, Scheme::UO, ClassifierKind::Svm, kAll, {});
  for (const RowPrediction& p : cv.predictions) {
    if (ds.rows[p.row].operator_id == "N1") EXPECT_EQ(p.predicted, SkillClass::Expert);
  }
}

TEST(CrossValidate, ParallelFoldsAreDeterministic) {
  const Dataset ds = separable_dataset(93, 24);
  const CvResult a = cross_validate(ds, Scheme::TO, ClassifierKind::Svm, kAll, {});
  const CvResult b = cross_validate(ds, Scheme::TO, ClassifierKind::Svm, kAll, {});
  ASSERT_EQ(a.predictions.size(), b.predictions.size());
  for (std::size_t i = 0; i < a.predictions.size(); ++i) {
    EXPECT_EQ(a.predictions[i].row, b.predictions[i].row);
    EXPECT_EQ(a.predictions[i].score, b.predictions[i].score);
  }
  EXPECT_EQ(a.confusion, b.confusion);
}

TEST(CrossValidate, EmptyFeatureSelectionRejected) {
  EXPECT_ERROR_KIND(cross_validate(separable_dataset(94), Scheme::TO, ClassifierKind::Svm, {}, {}),
                    ErrorKind::SchemaError);
}

TEST(Report, ColumnsAndSubsets) {
  const Dataset ds = separable_dataset(95);
  const auto full = nlohmann::json::parse(classification_report(ds, Scheme::TO, ClassifierKind::Svm, {}));
  ASSERT_EQ(full["columns"].size(), 4u);
  EXPECT_EQ(full["columns"][0]["name"], "Only SCC");
  EXPECT_EQ(full["columns"][3]["name"], "Overall");
  EXPECT_EQ(full["scheme"], "TO");
  EXPECT_EQ(full["rows"], ds.rows.size());
  const auto& overall = full["columns"][3];
  EXPECT_EQ(overall["predictions"].size(), ds.rows.size());
  const long total = overall["counts"]["E|E"].get<long>() + overall["counts"]["E|N"].get<long>() +
                     overall["counts"]["N|E"].get<long>() + overall["counts"]["N|N"].get<long>();
  EXPECT_EQ(total, static_cast<long>(ds.rows.size()));
  EXPECT_NEAR(overall["percent"]["E|E"].get<double>() + overall["percent"]["N|E"].get<double>(), 100.0, 1e-9);

  const std::vector<std::string> only{"cr"};
  const auto subset = nlohmann::json::parse(classification_report(ds, Scheme::UO, ClassifierKind::Svm, {}, only));
  ASSERT_EQ(subset["columns"].size(), 1u);
  EXPECT_EQ(subset["columns"][0]["name"], "Only CR");

  const std::vector<std::string> bogus{"speed"};
  EXPECT_ERROR_KIND(classification_report(ds, Scheme::TO, ClassifierKind::Svm, {}, bogus), ErrorKind::SchemaError);
  EXPECT_EQ(classification_report(ds, Scheme::TO, ClassifierKind::Svm, {}),
            classification_report(ds, Scheme::TO, ClassifierKind::Svm, {}));
}
