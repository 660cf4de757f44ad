#include "toolmotion/classify.hpp"

#include <fmt/format.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include "toolmotion/error.hpp"
#include "toolmotion/parallel.hpp"

namespace toolmotion {

namespace {

std::size_t class_index(SkillClass c) { return c == SkillClass::Expert ? 0 : 1; }

std::size_t feature_index(Feature f) {
  switch (f) {
    case Feature::Scc: return 0;
    case Feature::Sdc: return 1;
    case Feature::Cr: return 2;
  }
  return 0;
}

std::vector<ObservationSequence> select_sequences(const std::vector<ObservationSequence>& seqs,
                                                  std::span<const Feature> features) {
  std::vector<ObservationSequence> out;
  out.reserve(seqs.size());
  for (const auto& s : seqs) {
    ObservationSequence sel;
    sel.reserve(s.size());
    for (const auto& o : s) {
      Observation v;
      for (Feature f : features) v.push_back(o.at(feature_index(f)));
      sel.push_back(std::move(v));
    }
    out.push_back(std::move(sel));
  }
  return out;
}

// Predictions for the test rows of one fold.
std::vector<RowPrediction> run_fold(const Dataset& ds, const Fold& fold, std::size_t fold_index, ClassifierKind kind,
                                    std::span<const Feature> features, const ClassifierConfig& cfg) {
  std::vector<RowPrediction> out;
  std::set<SkillClass> present;
  for (std::size_t r : fold.train) present.insert(ds.rows[r].label);

  auto constant = [&](SkillClass c) {
    spdlog::warn("fold '{}' trains on a single class; predicting {}", fold.held_out, to_string(c));
    for (std::size_t r : fold.test) out.push_back({r, fold_index, c, 0.0});
    return out;
  };
  if (present.size() == 1) return constant(*present.begin());

  if (kind == ClassifierKind::Svm) {
    std::vector<std::vector<double>> x;
    std::vector<int> y;
    for (std::size_t r : fold.train) {
      x.push_back(select_features(ds.rows[r].features, features));
      y.push_back(label_sign(ds.rows[r].label));
    }
    const SvmModel model = train_svm(x, y, cfg.svm);
    for (std::size_t r : fold.test) {
      const SvmPrediction p = predict_svm(model, select_features(ds.rows[r].features, features));
      out.push_back({r, fold_index, label_of(p.label), p.margin});
    }
    return out;
  }

  std::vector<ObservationSequence> expert, novice;
  for (std::size_t r : fold.train) {
    auto seqs = select_sequences(ds.rows[r].sequences, features);
    auto& dst = ds.rows[r].label == SkillClass::Expert ? expert : novice;
    for (auto& s : seqs) {
      if (s.size() >= 3) dst.push_back(std::move(s));
    }
  }
  if (expert.size() < 2 && novice.size() >= 2) return constant(SkillClass::Novice);
  if (novice.size() < 2 && expert.size() >= 2) return constant(SkillClass::Expert);
  const HmmClassifier models = train_hmm_classifier(expert, novice, cfg.hmm);
  for (std::size_t r : fold.test) {
    const auto seqs = select_sequences(ds.rows[r].sequences, features);
    const HmmPrediction p = predict_hmm(models, seqs);
    out.push_back({r, fold_index, label_of(p.label), p.expert_score - p.novice_score});
  }
  return out;
}

nlohmann::json number_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

}  // namespace

void validate_dataset(const Dataset& ds) {
  if (ds.rows.empty()) throw Error(ErrorKind::SchemaError, "dataset has no rows");
  std::set<std::pair<std::string, std::string>> seen;
  std::map<std::string, SkillClass> labels;
  for (const DatasetRow& r : ds.rows) {
    if (!seen.emplace(r.trial_id, r.operator_id).second) {
      throw Error(ErrorKind::SchemaError, fmt::format("duplicate row for trial '{}' operator '{}'", r.trial_id,
                                                      r.operator_id));
    }
    const auto [it, inserted] = labels.emplace(r.operator_id, r.label);
    if (!inserted && it->second != r.label) {
      throw Error(ErrorKind::SchemaError, fmt::format("operator '{}' carries both labels", r.operator_id));
    }
  }
}

std::string_view to_string(Scheme s) { return s == Scheme::TO ? "TO" : "UO"; }
std::string_view to_string(ClassifierKind k) { return k == ClassifierKind::Svm ? "svm" : "hmm"; }

Scheme parse_scheme(std::string_view s) {
  if (s == "TO" || s == "to") return Scheme::TO;
  if (s == "UO" || s == "uo") return Scheme::UO;
  throw Error(ErrorKind::ParseError, fmt::format("unknown scheme '{}'", s));
}

ClassifierKind parse_classifier(std::string_view s) {
  if (s == "svm") return ClassifierKind::Svm;
  if (s == "hmm") return ClassifierKind::Hmm;
  throw Error(ErrorKind::ParseError, fmt::format("unknown classifier '{}'", s));
}

int label_sign(SkillClass c) { return c == SkillClass::Expert ? 1 : -1; }
SkillClass label_of(int sign) { return sign > 0 ? SkillClass::Expert : SkillClass::Novice; }

std::vector<double> select_features(const FeatureVector& fv, std::span<const Feature> features) {
  auto wanted = [&](Feature f) { return std::find(features.begin(), features.end(), f) != features.end(); };
  std::vector<double> out;
  if (wanted(Feature::Scc)) out.push_back(fv.scc);
  if (wanted(Feature::Sdc)) out.push_back(fv.sdc);
  if (wanted(Feature::Cr)) out.push_back(fv.cr);
  return out;
}

void ConfusionMatrix::add(SkillClass predicted, SkillClass actual) { ++counts[class_index(predicted)][class_index(actual)]; }

long ConfusionMatrix::total() const { return counts[0][0] + counts[0][1] + counts[1][0] + counts[1][1]; }

Metrics metrics(const RateMatrix& rm) {
  const auto& w = rm.weights;
  for (const auto& row : w) {
    for (double v : row) {
      if (!(v >= 0.0) || !std::isfinite(v)) throw Error(ErrorKind::SchemaError, "rate entries must be finite and >= 0");
    }
  }
  const double total = w[0][0] + w[0][1] + w[1][0] + w[1][1];
  if (total <= 0.0) throw Error(ErrorKind::EmptyMatrix, "confusion matrix is empty");
  Metrics m;
  m.micro = 100.0 * (w[0][0] + w[1][1]) / total;
  const double n_expert = w[0][0] + w[1][0];
  const double n_novice = w[0][1] + w[1][1];
  const double nan = std::numeric_limits<double>::quiet_NaN();
  m.tpr_expert = n_expert > 0.0 ? 100.0 * w[0][0] / n_expert : nan;
  m.tpr_novice = n_novice > 0.0 ? 100.0 * w[1][1] / n_novice : nan;
  double sum = 0.0;
  int present = 0;
  for (double tpr : {m.tpr_expert, m.tpr_novice}) {
    if (std::isnan(tpr)) continue;
    sum += tpr;
    ++present;
  }
  m.macro = sum / present;
  return m;
}

Metrics metrics(const ConfusionMatrix& cm) {
  RateMatrix rm;
  for (int p = 0; p < 2; ++p) {
    for (int a = 0; a < 2; ++a) rm.weights[p][a] = static_cast<double>(cm.counts[p][a]);
  }
  return metrics(rm);
}

std::vector<Fold> make_folds(const Dataset& ds, Scheme scheme) {
  std::map<std::string, std::vector<std::size_t>> groups;
  std::vector<std::size_t> order(ds.rows.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& ra = ds.rows[a];
    const auto& rb = ds.rows[b];
    return std::tie(ra.trial_id, ra.operator_id) < std::tie(rb.trial_id, rb.operator_id);
  });
  for (std::size_t r : order) {
    const DatasetRow& row = ds.rows[r];
    groups[scheme == Scheme::TO ? row.trial_id : row.operator_id].push_back(r);
  }
  if (groups.size() < 2) {
    throw Error(ErrorKind::InsufficientFolds,
                fmt::format("{} needs at least 2 {}, got {}", to_string(scheme),
                            scheme == Scheme::TO ? "trials" : "operators", groups.size()));
  }
  std::vector<Fold> folds;
  for (const auto& [key, test] : groups) {
    Fold f;
    f.held_out = key;
    f.test = test;
    for (std::size_t r : order) {
      const DatasetRow& row = ds.rows[r];
      if ((scheme == Scheme::TO ? row.trial_id : row.operator_id) != key) f.train.push_back(r);
    }
    folds.push_back(std::move(f));
  }
  return folds;
}

std::string fold_hygiene_violation(const Dataset& ds, Scheme scheme, std::span<const Fold> folds) {
  std::vector<int> seen(ds.rows.size(), 0);
  for (const Fold& f : folds) {
    std::set<std::string> train_keys;
    std::set<std::size_t> train_rows(f.train.begin(), f.train.end());
    for (std::size_t r : f.train) {
      train_keys.insert(scheme == Scheme::TO ? ds.rows[r].trial_id : ds.rows[r].operator_id);
    }
    for (std::size_t r : f.test) {
      if (r >= ds.rows.size()) return fmt::format("fold '{}' tests unknown row {}", f.held_out, r);
      ++seen[r];
      if (train_rows.count(r)) return fmt::format("fold '{}' trains and tests on row {}", f.held_out, r);
      const std::string& key = scheme == Scheme::TO ? ds.rows[r].trial_id : ds.rows[r].operator_id;
      if (train_keys.count(key)) {
        return fmt::format("fold '{}': {} '{}' of test row {} appears in training", f.held_out,
                           scheme == Scheme::TO ? "trial" : "operator", key, r);
      }
    }
  }
  for (std::size_t r = 0; r < seen.size(); ++r) {
    if (seen[r] != 1) return fmt::format("row {} is tested {} times", r, seen[r]);
  }
  return {};
}

CvResult cross_validate(const Dataset& ds, Scheme scheme, ClassifierKind kind, std::span<const Feature> features,
                        const ClassifierConfig& cfg) {
  validate_dataset(ds);
  if (features.empty()) throw Error(ErrorKind::SchemaError, "no features selected");
  CvResult result;
  result.folds = make_folds(ds, scheme);
  if (const std::string v = fold_hygiene_violation(ds, scheme, result.folds); !v.empty()) {
    throw Error(ErrorKind::SchemaError, "fold hygiene: " + v);
  }

  const std::size_t n_folds = result.folds.size();
  std::vector<std::vector<RowPrediction>> per_fold(n_folds);
  parallel_for(n_folds, [&](std::size_t f) {
    per_fold[f] = run_fold(ds, result.folds[f], f, kind, features, cfg);
  });

  for (std::size_t f = 0; f < n_folds; ++f) {
    for (const RowPrediction& p : per_fold[f]) {
      result.confusion.add(p.predicted, ds.rows[p.row].label);
      result.predictions.push_back(p);
    }
  }
  return result;
}

std::string classification_report(const Dataset& ds, Scheme scheme, ClassifierKind kind,
                                   const ClassifierConfig& cfg, std::span<const std::string> only) {
  struct Column {
    const char* key;
    const char* name;
    std::vector<Feature> features;
  };
  const std::vector<Column> all_columns = {
      {"scc", "Only SCC", {Feature::Scc}},
      {"sdc", "Only SDC", {Feature::Sdc}},
      {"cr", "Only CR", {Feature::Cr}},
      {"overall", "Overall", {Feature::Scc, Feature::Sdc, Feature::Cr}},
  };
  for (const std::string& key : only) {
    const bool known = std::any_of(all_columns.begin(), all_columns.end(),
                                   [&](const Column& c) { return key == c.key; });
    if (!known) throw Error(ErrorKind::SchemaError, fmt::format("unknown report column '{}'", key));
  }
  std::vector<Column> columns;
  for (const Column& c : all_columns) {
    if (only.empty() || std::find(only.begin(), only.end(), c.key) != only.end()) columns.push_back(c);
  }

  nlohmann::ordered_json report;
  report["scheme"] = std::string(to_string(scheme));
  report["classifier"] = std::string(to_string(kind));
  nlohmann::ordered_json hyper;
  if (kind == ClassifierKind::Svm) {
    hyper["kernel"] = "rbf";
    hyper["C"] = cfg.svm.C;
    hyper["gamma"] = cfg.svm.gamma ? nlohmann::json(*cfg.svm.gamma) : nlohmann::json("1/(d*mean_variance)");
    hyper["balanced"] = cfg.svm.balanced;
    hyper["tolerance"] = cfg.svm.tolerance;
  } else {
    hyper["states"] = cfg.hmm.n_states;
    hyper["max_iterations"] = cfg.hmm.max_iterations;
    hyper["convergence"] = cfg.hmm.convergence;
    hyper["variance_floor"] = cfg.hmm.variance_floor;
  }
  report["hyperparameters"] = hyper;
  report["rows"] = ds.rows.size();

  nlohmann::ordered_json cols = nlohmann::ordered_json::array();
  for (const Column& col : columns) {
    const CvResult cv = cross_validate(ds, scheme, kind, col.features, cfg);
    const Metrics m = metrics(cv.confusion);
    nlohmann::ordered_json c;
    c["name"] = col.name;
    const auto& k = cv.confusion.counts;
    c["counts"] = {{"E|E", k[0][0]}, {"E|N", k[0][1]}, {"N|E", k[1][0]}, {"N|N", k[1][1]}};
    const double n_e = static_cast<double>(k[0][0] + k[1][0]);
    const double n_n = static_cast<double>(k[0][1] + k[1][1]);
    auto pct = [](double a, double b) { return b > 0.0 ? 100.0 * a / b : std::numeric_limits<double>::quiet_NaN(); };
    c["percent"] = {{"E|E", number_or_null(pct(static_cast<double>(k[0][0]), n_e))},
                    {"E|N", number_or_null(pct(static_cast<double>(k[0][1]), n_n))},
                    {"N|E", number_or_null(pct(static_cast<double>(k[1][0]), n_e))},
                    {"N|N", number_or_null(pct(static_cast<double>(k[1][1]), n_n))}};
    c["micro"] = m.micro;
    c["macro"] = m.macro;
    nlohmann::ordered_json preds = nlohmann::ordered_json::array();
    for (const RowPrediction& p : cv.predictions) {
      const DatasetRow& row = ds.rows[p.row];
      preds.push_back({{"fold", cv.folds[p.fold].held_out},
                       {"trial_id", row.trial_id},
                       {"operator_id", row.operator_id},
                       {"actual", std::string(to_string(row.label))},
                       {"predicted", std::string(to_string(p.predicted))},
                       {"score", number_or_null(p.score)}});
    }
    c["predictions"] = preds;
    cols.push_back(c);
  }
  report["columns"] = cols;
  return report.dump(2) + "\n";
}

}  // namespace toolmotion
