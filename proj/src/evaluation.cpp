#include "affectflow/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "affectflow/csv.hpp"
#include "affectflow/error.hpp"

namespace affectflow {

std::string to_string(CVStrategy::Kind kind) {
  switch (kind) {
    case CVStrategy::Kind::KFold: return "kfold";
    case CVStrategy::Kind::StratifiedKFold: return "stratified-kfold";
    case CVStrategy::Kind::LOSO: return "loso";
  }
  return "?";
}

std::string to_string(ClassificationMode mode) {
  switch (mode) {
    case ClassificationMode::Train: return "train";
    case ClassificationMode::Test: return "test";
    case ClassificationMode::CrossValidate: return "cross-validation";
  }
  return "?";
}

std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), 0);
  std::mt19937_64 rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng() % i);
    std::swap(p[i - 1], p[j]);
  }
  return p;
}

namespace {

std::vector<Fold> folds_from_assignment(const std::vector<std::size_t>& fold_of, std::size_t k) {
  std::vector<Fold> folds(k);
  for (std::size_t i = 0; i < fold_of.size(); ++i) {
    for (std::size_t f = 0; f < k; ++f) (f == fold_of[i] ? folds[f].test : folds[f].train).push_back(i);
  }
  return folds;
}

}  // namespace

std::vector<Fold> make_folds(const CVStrategy& strategy, const FeatureMatrix& rows, const LabelVector* labels) {
  const std::size_t n = rows.rows.size();
  if (strategy.kind == CVStrategy::Kind::LOSO) {
    std::set<std::string> subjects;
    for (const auto& r : rows.rows) subjects.insert(r.subject_id);
    if (subjects.size() < 2) {
      fail(ErrorKind::TooFewSubjects, "leave-one-subject-out needs at least 2 subjects, found " +
                                          std::to_string(subjects.size()));
    }
    std::vector<Fold> folds;
    for (const auto& s : subjects) {
      Fold f;
      for (std::size_t i = 0; i < n; ++i) (rows.rows[i].subject_id == s ? f.test : f.train).push_back(i);
      folds.push_back(std::move(f));
    }
    return folds;
  }

  if (strategy.folds < 2) fail(ErrorKind::InvalidArgument, "k-fold needs at least 2 folds");
  const auto k = static_cast<std::size_t>(strategy.folds);
  if (n < k) fail(ErrorKind::TooFewRows, std::to_string(n) + " rows cannot fill " + std::to_string(k) + " folds");

  std::vector<std::size_t> fold_of(n);
  if (strategy.kind == CVStrategy::Kind::KFold) {
    const auto perm = seeded_permutation(n, strategy.shuffle_seed);
    // The first n % k folds take one extra row.
    std::size_t pos = 0;
    for (std::size_t f = 0; f < k; ++f) {
      const std::size_t size = n / k + (f < n % k ? 1 : 0);
      for (std::size_t j = 0; j < size; ++j) fold_of[perm[pos++]] = f;
    }
  } else {
    if (!labels) fail(ErrorKind::InvalidArgument, "stratified k-fold needs labels");
    if (labels->labels.size() != n) fail(ErrorKind::LengthMismatch, "labels do not match rows");
    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < n; ++i) by_class[labels->labels[i]].push_back(i);
    std::size_t next = 0;
    std::uint64_t salt = 0;
    for (auto& [cls, members] : by_class) {
      const auto perm = seeded_permutation(members.size(), strategy.shuffle_seed + 0x9e3779b97f4a7c15ULL * ++salt);
      for (auto p : perm) {
        fold_of[members[p]] = next;
        next = (next + 1) % k;
      }
    }
  }
  return folds_from_assignment(fold_of, k);
}

double binary_auc(std::span<const int> y_true, std::span<const double> scores, int positive_class) {
  if (y_true.size() != scores.size()) {
    fail(ErrorKind::LengthMismatch, std::to_string(y_true.size()) + " labels vs " + std::to_string(scores.size()) +
                                        " scores");
  }
  const std::size_t n = y_true.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Average ranks over tied groups.
  std::vector<double> rank(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double r = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
    for (std::size_t t = i; t <= j; ++t) rank[order[t]] = r;
    i = j + 1;
  }
  double pos = 0.0, rank_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (y_true[i] == positive_class) {
      pos += 1.0;
      rank_sum += rank[i];
    }
  }
  const double neg = static_cast<double>(n) - pos;
  if (pos == 0.0 || neg == 0.0) fail(ErrorKind::AUCUndefined, "only one class present in y_true");
  return (rank_sum - pos * (pos + 1.0) / 2.0) / (pos * neg);
}

Metrics metrics(std::span<const int> y_true, std::span<const int> y_pred, std::span<const int> classes,
                const Prediction* prediction) {
  if (y_true.size() != y_pred.size()) {
    fail(ErrorKind::LengthMismatch, std::to_string(y_true.size()) + " true labels vs " +
                                        std::to_string(y_pred.size()) + " predictions");
  }
  if (y_true.empty()) fail(ErrorKind::LengthMismatch, "no labels to score");
  std::set<int> universe(classes.begin(), classes.end());
  universe.insert(y_true.begin(), y_true.end());
  universe.insert(y_pred.begin(), y_pred.end());

  std::map<int, double> tp, fp, fn;
  double correct = 0.0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    if (y_true[i] == y_pred[i]) {
      correct += 1.0;
      tp[y_true[i]] += 1.0;
    } else {
      fp[y_pred[i]] += 1.0;
      fn[y_true[i]] += 1.0;
    }
  }
  Metrics m;
  const double n = static_cast<double>(y_true.size());
  m.accuracy = correct / n;
  double TP = 0, FP = 0, FN = 0, macro = 0.0;
  for (int c : universe) {
    TP += tp[c];
    FP += fp[c];
    FN += fn[c];
    const double denom = 2.0 * tp[c] + fp[c] + fn[c];
    macro += denom > 0.0 ? 2.0 * tp[c] / denom : 0.0;
  }
  m.f1_micro = (2.0 * TP + FP + FN) > 0.0 ? 2.0 * TP / (2.0 * TP + FP + FN) : 0.0;
  m.f1_macro = macro / static_cast<double>(universe.size());

  if (prediction && prediction->has_scores() && prediction->classes.size() == 2 && universe.size() <= 2) {
    if (prediction->scores.size() != y_true.size()) fail(ErrorKind::LengthMismatch, "scores do not match labels");
    std::vector<double> pos(y_true.size());
    for (std::size_t i = 0; i < pos.size(); ++i) pos[i] = prediction->scores[i][1];
    m.auc = binary_auc(y_true, pos, prediction->classes[1]);
  }
  return m;
}

namespace {

const char* const kMetricNames[] = {"accuracy", "f1_micro", "f1_macro", "auc"};

std::optional<double> metric_value(const Metrics& m, const std::string& name) {
  if (name == "accuracy") return m.accuracy;
  if (name == "f1_micro") return m.f1_micro;
  if (name == "f1_macro") return m.f1_macro;
  return m.auc;
}

void aggregate(ModelReport& r) {
  r.aggregate.clear();
  for (const char* name : kMetricNames) {
    std::vector<double> v;
    for (const auto& f : r.folds) {
      if (auto x = metric_value(f.values, name)) v.push_back(*x);
    }
    MetricSummary s;
    s.count = v.size();
    if (!v.empty()) {
      s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
      double ss = 0.0;
      for (double x : v) ss += (x - s.mean) * (x - s.mean);
      s.std = std::sqrt(ss / static_cast<double>(v.size()));
    }
    r.aggregate.emplace_back(name, s);
  }
}

/// AUC is reported absent (not fatal) for folds whose test rows hold one class.
Metrics fold_metrics(std::span<const int> y_true, const Prediction& p, std::span<const int> classes) {
  try {
    return metrics(y_true, p.labels, classes, &p);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::AUCUndefined) throw;
    Metrics m = metrics(y_true, p.labels, classes, nullptr);
    return m;
  }
}

std::vector<int> class_universe(const LabelVector& y) {
  std::set<int> s(y.labels.begin(), y.labels.end());
  for (const auto& [id, name] : y.class_names) s.insert(id);
  return {s.begin(), s.end()};
}

FeatureRow key_of(const FeatureRow& r) { return {r.subject_id, r.phase, r.window_index, {}}; }

void require_aligned(const LabeledFeatures& data) {
  if (data.matrix.rows.size() != data.labels.labels.size()) {
    fail(ErrorKind::LengthMismatch, std::to_string(data.matrix.rows.size()) + " rows but " +
                                        std::to_string(data.labels.labels.size()) + " labels");
  }
}

}  // namespace

PipelineOutput cross_validate(std::span<const ClassifierSpec> specs, const LabeledFeatures& data,
                              const CVStrategy& strategy, std::uint64_t seed) {
  if (specs.empty()) fail(ErrorKind::InvalidArgument, "no classifiers to evaluate");
  require_aligned(data);
  const auto folds = make_folds(strategy, data.matrix, &data.labels);
  const auto classes = class_universe(data.labels);

  PipelineOutput out;
  out.report.mode = to_string(ClassificationMode::CrossValidate);
  out.report.strategy = to_string(strategy.kind);
  out.y_true.class_names = data.labels.class_names;
  for (const auto& f : folds) {
    for (auto i : f.test) {
      out.y_true.labels.push_back(data.labels.labels[i]);
      out.row_keys.push_back(key_of(data.matrix.rows[i]));
    }
  }

  for (const auto& spec : specs) {
    ModelReport report{spec.name, {}, {}};
    std::vector<int> preds;
    std::vector<std::vector<double>> scores;
    bool all_scored = true;
    for (std::size_t k = 0; k < folds.size(); ++k) {
      const auto& f = folds[k];
      try {
        const auto train_x = data.matrix.select_rows(f.train);
        const auto train_y = data.labels.select(f.train);
        const auto test_x = data.matrix.select_rows(f.test);
        const auto test_y = data.labels.select(f.test);
        const auto model = fit(spec, train_x, train_y, seed + k);
        const auto p = model->predict(test_x);
        report.folds.push_back({std::to_string(k), fold_metrics(test_y.labels, p, classes), f.train.size(),
                                f.test.size()});
        preds.insert(preds.end(), p.labels.begin(), p.labels.end());
        // Scores are re-expressed over the full class universe so folds line up.
        if (p.has_scores()) {
          for (const auto& row : p.scores) {
            std::vector<double> full(classes.size(), 0.0);
            for (std::size_t c = 0; c < p.classes.size(); ++c) {
              full[static_cast<std::size_t>(std::lower_bound(classes.begin(), classes.end(), p.classes[c]) -
                                            classes.begin())] = row[c];
            }
            scores.push_back(std::move(full));
          }
        } else {
          all_scored = false;
        }
      } catch (const Error& e) {
        throw Error(e.kind(), "model '" + spec.name + "', fold " + std::to_string(k) + ": " + e.detail());
      }
    }
    aggregate(report);
    out.report.models.push_back(std::move(report));
    out.y_pred.push_back(std::move(preds));
    out.scores.push_back(all_scored ? std::move(scores) : std::vector<std::vector<double>>{});
    out.fitted_models.push_back(fit(spec, data.matrix, data.labels, seed));
  }
  return out;
}

namespace {

PipelineOutput score_models(std::span<const FittedModelHandle> models, const LabeledFeatures& data,
                            const std::string& mode, const std::string& fold_name, std::size_t train_size) {
  require_aligned(data);
  const auto classes = class_universe(data.labels);
  PipelineOutput out;
  out.report.mode = mode;
  out.report.strategy = "none";
  out.y_true = data.labels;
  for (const auto& r : data.matrix.rows) out.row_keys.push_back(key_of(r));
  for (const auto& m : models) {
    const auto p = m->predict(data.matrix);
    ModelReport report{m->name(), {{fold_name, fold_metrics(data.labels.labels, p, classes), train_size,
                                    data.matrix.rows.size()}}, {}};
    aggregate(report);
    out.report.models.push_back(std::move(report));
    out.y_pred.push_back(p.labels);
    out.scores.push_back(p.scores);
    out.fitted_models.push_back(m);
  }
  return out;
}

}  // namespace

PipelineOutput train_models(std::span<const ClassifierSpec> specs, const LabeledFeatures& data, std::uint64_t seed) {
  if (specs.empty()) fail(ErrorKind::InvalidArgument, "no classifiers to train");
  require_aligned(data);
  std::vector<FittedModelHandle> models;
  for (const auto& spec : specs) models.push_back(fit(spec, data.matrix, data.labels, seed));
  return score_models(models, data, to_string(ClassificationMode::Train), "train", data.matrix.rows.size());
}

PipelineOutput test_models(std::span<const FittedModelHandle> models, const LabeledFeatures& data) {
  if (models.empty()) fail(ErrorKind::InvalidArgument, "test mode needs fitted models");
  return score_models(models, data, to_string(ClassificationMode::Test), "test", 0);
}

std::string format_report_text(const EvaluationReport& report) {
  std::ostringstream os;
  os << "mode: " << report.mode << "   strategy: " << report.strategy << "\n";
  auto cell = [](std::optional<double> v) {
    if (!v) return std::string("-");
    std::ostringstream s;
    s << std::fixed << std::setprecision(4) << *v;
    return s.str();
  };
  for (const auto& m : report.models) {
    os << "\nmodel " << m.model << "\n";
    os << std::left << std::setw(8) << "fold" << std::setw(8) << "train" << std::setw(8) << "test" << std::setw(10)
       << "accuracy" << std::setw(10) << "f1_micro" << std::setw(10) << "f1_macro" << "auc\n";
    for (const auto& f : m.folds) {
      os << std::setw(8) << f.fold << std::setw(8) << f.train_size << std::setw(8) << f.test_size << std::setw(10)
         << cell(f.values.accuracy) << std::setw(10) << cell(f.values.f1_micro) << std::setw(10)
         << cell(f.values.f1_macro) << cell(f.values.auc) << "\n";
    }
    for (const auto& [name, s] : m.aggregate) {
      os << "  " << std::setw(10) << name;
      if (s.count) os << "mean " << cell(s.mean) << "  std " << cell(s.std) << "  (" << s.count << " folds)\n";
      else os << "undefined\n";
    }
  }
  return os.str();
}

std::string format_report_csv(const EvaluationReport& report) {
  std::string out = "model,fold,metric,value\n";
  for (const auto& m : report.models) {
    for (const auto& f : m.folds) {
      for (const char* name : kMetricNames) {
        if (auto v = metric_value(f.values, name)) {
          out += m.model + "," + f.fold + "," + name + "," + csv::format_double(*v) + "\n";
        }
      }
    }
    for (const auto& [name, s] : m.aggregate) {
      if (!s.count) continue;
      out += m.model + ",mean," + name + "," + csv::format_double(s.mean) + "\n";
      out += m.model + ",std," + name + "," + csv::format_double(s.std) + "\n";
    }
  }
  return out;
}

}  // namespace affectflow
