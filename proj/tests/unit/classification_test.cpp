#include <doctest.h>

#include <numeric>
#include <set>

#include "affectflow/classifiers.hpp"
#include "affectflow/evaluation.hpp"
#include "test_support.hpp"

using namespace affectflow;
using namespace test_support;

namespace {

ClassifierSpec spec_of(Algorithm a, std::map<std::string, double> hp = {}, bool standardize = false) {
  ClassifierSpec s;
  s.name = to_string(a);
  s.algorithm = a;
  s.hyperparameters = std::move(hp);
  s.standardize = standardize;
  return s;
}

LabeledFeatures gaussian_clouds(Gen& g, int per_class, double sigma, double distance, int subjects = 4,
                                int classes = 2) {
  LabeledFeatures d;
  d.matrix.columns = {"a", "b"};
  for (int c = 0; c < classes; ++c) {
    for (int i = 0; i < per_class; ++i) {
      const double cx = distance * c;
      d.matrix.rows.push_back({"S" + std::to_string(i % subjects), "p" + std::to_string(c), static_cast<std::size_t>(i),
                               {cx + sigma * g.normal(), sigma * g.normal()}});
      d.labels.labels.push_back(c);
    }
  }
  return d;
}

/// Brute-force nearest neighbors: full sort by (distance, row index), then the
/// majority vote with ties to the smallest class id.
int knn_oracle(const Eigen::MatrixXd& X, const std::vector<int>& y, const Eigen::RowVectorXd& q, int k) {
  std::vector<std::pair<double, std::size_t>> d;
  for (Eigen::Index i = 0; i < X.rows(); ++i) d.push_back({(X.row(i) - q).squaredNorm(), static_cast<std::size_t>(i)});
  std::sort(d.begin(), d.end());
  std::map<int, int> votes;
  for (int i = 0; i < std::min<int>(k, static_cast<int>(d.size())); ++i) ++votes[y[d[i].second]];
  int best = -1, best_votes = -1;
  for (const auto& [c, v] : votes) {
    if (v > best_votes) {
      best = c;
      best_votes = v;
    }
  }
  return best;
}

FeatureMatrix keyed_rows(const std::vector<std::string>& subjects) {
  FeatureMatrix m;
  m.columns = {"x"};
  for (std::size_t i = 0; i < subjects.size(); ++i) m.rows.push_back({subjects[i], "p", i, {1.0 * i}});
  return m;
}

}  // namespace

// --- classifiers -------------------------------------------------------------

TEST_CASE("KNN stores the training set verbatim and predicts its own points") {
  Gen g(80);
  Eigen::MatrixXd X(20, 3);
  std::vector<int> y;
  for (int i = 0; i < 20; ++i) {
    for (int j = 0; j < 3; ++j) X(i, j) = g.normal();
    y.push_back(i % 3);
  }
  const auto model = fit_model(spec_of(Algorithm::KNN, {{"k_neighbors", 9}}), X, y);
  const auto* knn = dynamic_cast<const KnnModel*>(model.get());
  REQUIRE(knn != nullptr);
  CHECK(knn->training_set() == X);
  CHECK(knn->training_labels() == y);

  const auto one = fit_model(spec_of(Algorithm::KNN, {{"k_neighbors", 1}}), X, y);
  CHECK(one->predict(X).labels == y);
}

TEST_CASE("KNN majority vote and tie rules") {
  Eigen::MatrixXd X(3, 1);
  X << -1.0, 1.0, 1.0;
  const std::vector<int> y{0, 1, 1};
  Eigen::MatrixXd q(1, 1);
  q << 0.0;
  const auto p = fit_model(spec_of(Algorithm::KNN, {{"k_neighbors", 3}}), X, y)->predict(q);
  CHECK(p.labels[0] == 1);
  REQUIRE(p.has_scores());
  CHECK(p.scores[0][1] == doctest::Approx(2.0 / 3.0));

  // Equidistant 1:1 vote goes to the smaller class id.
  Eigen::MatrixXd X2(2, 1);
  X2 << -1.0, 1.0;
  CHECK(fit_model(spec_of(Algorithm::KNN, {{"k_neighbors", 2}}), X2, std::vector<int>{1, 0})->predict(q).labels[0] == 0);
  // Distance tie at k=1 goes to the lower row index.
  CHECK(fit_model(spec_of(Algorithm::KNN, {{"k_neighbors", 1}}), X2, std::vector<int>{1, 0})->predict(q).labels[0] == 1);
}

TEST_CASE("KNN agrees with a brute-force neighbor oracle") {
  Gen g(81);
  int mismatches = 0;
  for (int trial = 0; trial < 150; ++trial) {
    const auto n = g.integer(2, 200);
    const auto dims = g.integer(1, 6);
    const auto classes = g.integer(2, 4);
    Eigen::MatrixXd X(n, dims);
    std::vector<int> y;
    // Integer grids produce plenty of exact distance ties.
    const bool grid = g.coin();
    for (long i = 0; i < n; ++i) {
      for (long j = 0; j < dims; ++j) X(i, j) = grid ? static_cast<double>(g.integer(-3, 3)) : g.normal();
      y.push_back(static_cast<int>(i < classes ? i : g.integer(0, classes - 1)));
    }
    const int k = static_cast<int>(g.integer(1, std::min<long>(n, 15)));
    const auto model = fit_model(spec_of(Algorithm::KNN, {{"k_neighbors", k}}), X, y);
    Eigen::MatrixXd Q(20, dims);
    for (long i = 0; i < 20; ++i) {
      for (long j = 0; j < dims; ++j) Q(i, j) = grid ? static_cast<double>(g.integer(-3, 3)) : g.normal();
    }
    const auto p = model->predict(Q);
    for (long i = 0; i < 20; ++i) mismatches += p.labels[i] != knn_oracle(X, y, Q.row(i), k);
  }
  CHECK(mismatches == 0);
}

TEST_CASE("entropy tree on four separable points is a stump") {
  Eigen::MatrixXd X(4, 2);
  X << 0, 5, 1, 3, 10, 4, 11, 6;
  const std::vector<int> y{0, 0, 1, 1};
  const auto model = fit_model(spec_of(Algorithm::DecisionTree, {}), X, y);
  const auto* tree = dynamic_cast<const DecisionTreeModel*>(model.get());
  REQUIRE(tree != nullptr);
  CHECK(tree->depth() == 1);
  CHECK(model->predict(X).labels == y);
}

TEST_CASE("tree leaf frequencies are probabilities and max_depth is honoured") {
  Gen g(82);
  Eigen::MatrixXd X(200, 2);
  std::vector<int> y;
  for (int i = 0; i < 200; ++i) {
    X(i, 0) = g.normal();
    X(i, 1) = g.normal();
    y.push_back(static_cast<int>(g.integer(0, 2)));
  }
  ClassifierSpec s = spec_of(Algorithm::DecisionTree, {{"max_depth", 3}});
  s.options["criterion"] = "gini";
  const auto model = fit_model(s, X, y);
  CHECK(dynamic_cast<const DecisionTreeModel&>(*model).depth() <= 3);
  const auto p = model->predict(X);
  for (const auto& row : p.scores) {
    CHECK(std::accumulate(row.begin(), row.end(), 0.0) == doctest::Approx(1.0));
    for (double v : row) CHECK((v >= 0.0 && v <= 1.0));
  }
}

TEST_CASE("LDA separates well-separated Gaussian clouds") {
  Gen g(83);
  const auto train = gaussian_clouds(g, 200, 0.5, 4.0);
  const auto test = gaussian_clouds(g, 200, 0.5, 4.0);
  const auto model = fit(spec_of(Algorithm::LDA), train.matrix, train.labels);
  const auto p = model->predict(test.matrix);
  const auto m = metrics(test.labels.labels, p.labels);
  CHECK(m.accuracy >= 0.99);
  for (const auto& row : p.scores) CHECK(std::accumulate(row.begin(), row.end(), 0.0) == doctest::Approx(1.0));
}

TEST_CASE("LDA survives a constant (singular) column") {
  Eigen::MatrixXd X(6, 2);
  X << 0, 1, 0.2, 1, 0.1, 1, 3, 1, 3.2, 1, 2.9, 1;
  const std::vector<int> y{0, 0, 0, 1, 1, 1};
  CHECK(fit_model(spec_of(Algorithm::LDA), X, y)->predict(X).labels == y);
}

TEST_CASE("logistic regression learns a linear boundary") {
  Gen g(84);
  const auto train = gaussian_clouds(g, 100, 1.0, 4.0);
  const auto model = fit(spec_of(Algorithm::LogisticRegression), train.matrix, train.labels);
  CHECK(metrics(train.labels.labels, model->predict(train.matrix).labels).accuracy >= 0.95);
}

TEST_CASE("ensemble scores are the equal-weight mean of member scores") {
  Gen g(85);
  const auto d = gaussian_clouds(g, 30, 1.5, 2.0);
  const auto X = to_eigen(d.matrix);
  ClassifierSpec ens = spec_of(Algorithm::AveragingEnsemble);
  ens.members = {spec_of(Algorithm::KNN, {{"k_neighbors", 5}}), spec_of(Algorithm::LDA),
                 spec_of(Algorithm::LogisticRegression)};
  const auto pe = fit_model(ens, X, d.labels.labels)->predict(X);
  std::vector<Prediction> members;
  for (const auto& m : ens.members) members.push_back(fit_model(m, X, d.labels.labels)->predict(X));
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    for (std::size_t c = 0; c < pe.classes.size(); ++c) {
      double mean = 0.0;
      for (const auto& p : members) mean += p.scores[i][c];
      mean /= members.size();
      CHECK(pe.scores[i][c] == doctest::Approx(mean));
    }
    const auto argmax = std::max_element(pe.scores[i].begin(), pe.scores[i].end()) - pe.scores[i].begin();
    CHECK(pe.labels[i] == pe.classes[argmax]);
  }
}

TEST_CASE("fit and predict errors") {
  FeatureMatrix m;
  m.columns = {"a", "b"};
  m.rows = {{"S1", "p", 0, {1.0, 2.0}}, {"S1", "p", 1, {2.0, 3.0}}};
  CHECK_THROWS_KIND(fit(spec_of(Algorithm::KNN), m, LabelVector{{1, 1}, {}}), ErrorKind::SingleClass);
  const auto model = fit(spec_of(Algorithm::KNN, {{"k_neighbors", 1}}), m, LabelVector{{0, 1}, {}});
  FeatureMatrix other = m;
  other.columns = {"b", "a"};
  CHECK_THROWS_KIND(model->predict(other), ErrorKind::SchemaMismatch);
  FeatureMatrix categorical = m;
  categorical.rows[0].values[0] = Category{"x"};
  CHECK_THROWS_KIND(fit(spec_of(Algorithm::KNN), categorical, LabelVector{{0, 1}, {}}), ErrorKind::NonNumericFeature);
  CHECK_THROWS_KIND(algorithm_from_string("random-forest"), ErrorKind::InvalidArgument);
}

TEST_CASE("custom algorithms plug in through the fit/predict contract") {
  struct Constant : Model {
    Prediction predict(const Eigen::MatrixXd& X) const override {
      return {std::vector<int>(static_cast<std::size_t>(X.rows()), 7), {}, {}};
    }
  };
  ClassifierSpec s;
  s.name = "const";
  s.algorithm = Algorithm::Custom;
  s.custom = std::make_shared<CustomAlgorithm>(CustomAlgorithm{
      "const", [](const Eigen::MatrixXd&, std::span<const int>, std::uint64_t) { return std::make_shared<Constant>(); }});
  Eigen::MatrixXd X(2, 1);
  X << 0, 1;
  CHECK(fit_model(s, X, std::vector<int>{0, 1})->predict(X).labels == std::vector<int>{7, 7});
}

// --- folds -----------------------------------------------------------------

TEST_CASE("fold examples") {
  std::vector<std::string> fifteen;
  for (int s = 0; s < 15; ++s) {
    for (int r = 0; r < 3; ++r) fifteen.push_back("S" + std::to_string(s));
  }
  CHECK(make_folds(CVStrategy{CVStrategy::Kind::LOSO}, keyed_rows(fifteen)).size() == 15);

  const auto ten = make_folds(CVStrategy{CVStrategy::Kind::KFold, 5, 1}, keyed_rows(std::vector<std::string>(10, "S")));
  REQUIRE(ten.size() == 5);
  for (const auto& f : ten) CHECK(f.test.size() == 2);

  CHECK_THROWS_KIND(make_folds(CVStrategy{CVStrategy::Kind::LOSO}, keyed_rows({"S1", "S1"})), ErrorKind::TooFewSubjects);
  CHECK_THROWS_KIND(make_folds(CVStrategy{CVStrategy::Kind::KFold, 5, 0}, keyed_rows({"S1", "S2"})),
                    ErrorKind::TooFewRows);
}

TEST_CASE("fold laws: disjoint, covering, balanced and leak-free over 10000 cases") {
  Gen g(86);
  long violations = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    const auto n = g.integer(2, 60);
    const auto subject_count = g.integer(1, 8);
    std::vector<std::string> subjects;
    LabelVector labels;
    for (long i = 0; i < n; ++i) {
      subjects.push_back("S" + std::to_string(g.integer(0, subject_count - 1)));
      labels.labels.push_back(static_cast<int>(g.integer(0, 2)));
    }
    const auto rows = keyed_rows(subjects);
    const std::set<std::string> distinct(subjects.begin(), subjects.end());
    const auto kind_pick = g.integer(0, 2);
    CVStrategy strategy{kind_pick == 0   ? CVStrategy::Kind::LOSO
                        : kind_pick == 1 ? CVStrategy::Kind::KFold
                                         : CVStrategy::Kind::StratifiedKFold,
                        static_cast<int>(g.integer(2, 10)), static_cast<std::uint64_t>(g.integer(0, 1 << 20))};
    std::vector<Fold> folds;
    try {
      folds = make_folds(strategy, rows, &labels);
    } catch (const affectflow::Error& e) {
      const bool expected = (strategy.kind == CVStrategy::Kind::LOSO && distinct.size() < 2 &&
                             e.kind() == ErrorKind::TooFewSubjects) ||
                            (strategy.kind != CVStrategy::Kind::LOSO && n < strategy.folds &&
                             e.kind() == ErrorKind::TooFewRows);
      violations += expected ? 0 : 1;
      continue;
    }
    std::vector<int> seen(static_cast<std::size_t>(n), 0);
    std::size_t min_size = n, max_size = 0;
    for (const auto& f : folds) {
      std::set<std::size_t> test(f.test.begin(), f.test.end());
      violations += std::is_sorted(f.test.begin(), f.test.end()) ? 0 : 1;
      violations += f.train.size() + f.test.size() == static_cast<std::size_t>(n) ? 0 : 1;
      for (auto i : f.train) violations += test.count(i);
      for (auto i : f.test) ++seen[i];
      min_size = std::min(min_size, f.test.size());
      max_size = std::max(max_size, f.test.size());
      if (strategy.kind == CVStrategy::Kind::LOSO) {
        std::set<std::string> test_subjects, train_subjects;
        for (auto i : f.test) test_subjects.insert(subjects[i]);
        for (auto i : f.train) train_subjects.insert(subjects[i]);
        violations += test_subjects.size() == 1 ? 0 : 1;
        for (const auto& s : test_subjects) violations += train_subjects.count(s);
      }
    }
    for (int c : seen) violations += c == 1 ? 0 : 1;
    if (strategy.kind == CVStrategy::Kind::LOSO) {
      violations += folds.size() == distinct.size() ? 0 : 1;
    } else {
      violations += folds.size() == static_cast<std::size_t>(strategy.folds) ? 0 : 1;
      if (strategy.kind == CVStrategy::Kind::KFold) violations += max_size - min_size <= 1 ? 0 : 1;
    }
  }
  CHECK(violations == 0);
}

TEST_CASE("seeded permutations are deterministic permutations") {
  const auto a = seeded_permutation(100, 42);
  CHECK(a == seeded_permutation(100, 42));
  CHECK(a != seeded_permutation(100, 43));
  auto sorted = a;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size(); ++i) CHECK(sorted[i] == i);
}

// --- metrics -----------------------------------------------------------------

TEST_CASE("metric examples") {
  const std::vector<int> t{0, 1, 1, 0}, p{0, 1, 0, 0};
  const auto m = metrics(t, p);
  CHECK(m.accuracy == 0.75);
  CHECK(m.f1_micro == 0.75);
  // class 0: P=2/3 R=1 F1=0.8; class 1: P=1 R=0.5 F1=2/3.
  CHECK(m.f1_macro == doctest::Approx((0.8 + 2.0 / 3.0) / 2.0));
  CHECK_THROWS_KIND(metrics(t, std::vector<int>{0, 1}), ErrorKind::LengthMismatch);

  const std::vector<int> y{0, 0, 1, 1};
  CHECK(binary_auc(y, std::vector<double>{0.1, 0.2, 0.8, 0.9}, 1) == 1.0);
  CHECK(binary_auc(y, std::vector<double>{0.9, 0.8, 0.2, 0.1}, 1) == 0.0);
  CHECK(binary_auc(y, std::vector<double>{0.5, 0.5, 0.5, 0.5}, 1) == 0.5);
  CHECK_THROWS_KIND(binary_auc(std::vector<int>{1, 1}, std::vector<double>{0.1, 0.2}, 1), ErrorKind::AUCUndefined);

  // A class in the universe with neither instances nor predictions contributes 0.
  const std::vector<int> universe{0, 1, 2};
  CHECK(metrics(t, t, universe).f1_macro == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("AUC of label-independent scores is near one half") {
  Gen g(87);
  std::vector<int> y;
  std::vector<double> s;
  for (int i = 0; i < 2000; ++i) {
    y.push_back(static_cast<int>(g.integer(0, 1)));
    s.push_back(g.uniform());
  }
  CHECK(std::abs(binary_auc(y, s, 1) - 0.5) <= 0.05);
}

TEST_CASE("AUC matches the trapezoidal ROC area and is invariant to monotone transforms") {
  Gen g(88);
  for (int trial = 0; trial < 300; ++trial) {
    const auto n = g.integer(2, 80);
    std::vector<int> y;
    std::vector<double> s;
    for (long i = 0; i < n; ++i) {
      y.push_back(i < 2 ? static_cast<int>(i) : static_cast<int>(g.integer(0, 1)));
      s.push_back(std::round(g.uniform() * 10.0) / 10.0);  // coarse scores -> ties
    }
    // Trapezoid over ROC points at each distinct threshold.
    std::vector<double> thresholds(s.begin(), s.end());
    std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
    const double pos = std::count(y.begin(), y.end(), 1), neg = static_cast<double>(n) - pos;
    double area = 0.0, fpr0 = 0.0, tpr0 = 0.0;
    for (double th : thresholds) {
      double tp = 0, fp = 0;
      for (long i = 0; i < n; ++i) {
        if (s[i] >= th) (y[i] == 1 ? tp : fp) += 1;
      }
      const double tpr = tp / pos, fpr = fp / neg;
      area += (fpr - fpr0) * (tpr + tpr0) / 2.0;
      fpr0 = fpr;
      tpr0 = tpr;
    }
    const double auc = binary_auc(y, s, 1);
    CHECK(auc == doctest::Approx(area).epsilon(1e-12));
    std::vector<double> transformed;
    for (double v : s) transformed.push_back(std::exp(3.0 * v) - 7.0);
    CHECK(binary_auc(y, transformed, 1) == doctest::Approx(auc).epsilon(1e-12));
  }
}

TEST_CASE("micro F1 equals accuracy on random multiclass predictions") {
  Gen g(89);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto n = g.integer(1, 50);
    const auto k = g.integer(2, 6);
    std::vector<int> t, p;
    for (long i = 0; i < n; ++i) {
      t.push_back(static_cast<int>(g.integer(0, k - 1)));
      p.push_back(static_cast<int>(g.integer(0, k - 1)));
    }
    const auto m = metrics(t, p);
    CHECK(m.f1_micro == doctest::Approx(m.accuracy).epsilon(1e-12));
  }
}

// --- cross-validation --------------------------------------------------------

TEST_CASE("separable data gives perfect accuracy on every fold") {
  Gen g(90);
  const auto d = gaussian_clouds(g, 40, 0.2, 10.0);
  const std::vector<ClassifierSpec> specs{spec_of(Algorithm::KNN, {{"k_neighbors", 3}}, true),
                                          spec_of(Algorithm::DecisionTree), spec_of(Algorithm::LDA)};
  for (auto kind : {CVStrategy::Kind::KFold, CVStrategy::Kind::LOSO}) {
    const auto out = cross_validate(specs, d, CVStrategy{kind, 5, 3});
    for (const auto& model : out.report.models) {
      for (const auto& f : model.folds) CHECK(f.values.accuracy == 1.0);
    }
    CHECK(out.y_true.labels.size() == d.labels.labels.size());
    CHECK(out.fitted_models.size() == specs.size());
  }
}

TEST_CASE("shuffled labels give chance accuracy") {
  Gen g(91);
  auto d = gaussian_clouds(g, 100, 1.0, 3.0);
  const auto perm = seeded_permutation(d.labels.labels.size(), 5);
  const auto original = d.labels.labels;
  for (std::size_t i = 0; i < perm.size(); ++i) d.labels.labels[i] = original[perm[i]];
  const std::vector<ClassifierSpec> specs{spec_of(Algorithm::KNN, {{"k_neighbors", 9}}, true)};
  const auto out = cross_validate(specs, d, CVStrategy{CVStrategy::Kind::KFold, 5, 1});
  for (const auto& [name, s] : out.report.models[0].aggregate) {
    if (name == "accuracy") CHECK(std::abs(s.mean - 0.5) <= 0.1);
  }
}

TEST_CASE("cross-validation is deterministic and its CSV report is byte-identical") {
  Gen g(92);
  const auto d = gaussian_clouds(g, 30, 1.5, 2.0);
  const std::vector<ClassifierSpec> specs{spec_of(Algorithm::KNN, {{"k_neighbors", 5}}, true),
                                          spec_of(Algorithm::LogisticRegression)};
  const CVStrategy strategy{CVStrategy::Kind::StratifiedKFold, 4, 17};
  const auto a = cross_validate(specs, d, strategy, 3);
  const auto b = cross_validate(specs, d, strategy, 3);
  CHECK(format_report_csv(a.report) == format_report_csv(b.report));
  CHECK(a.y_pred == b.y_pred);
  CHECK(format_report_text(a.report).find("accuracy") != std::string::npos);
}

TEST_CASE("train and test modes") {
  Gen g(93);
  const auto train = gaussian_clouds(g, 50, 0.5, 4.0);
  const auto test = gaussian_clouds(g, 50, 0.5, 4.0);
  const std::vector<ClassifierSpec> specs{spec_of(Algorithm::LDA)};
  const auto trained = train_models(specs, train);
  REQUIRE(trained.fitted_models.size() == 1);
  CHECK(trained.report.mode == "train");
  const auto tested = test_models(trained.fitted_models, test);
  CHECK(tested.report.mode == "test");
  CHECK(tested.report.models[0].folds[0].values.accuracy >= 0.99);
  REQUIRE(tested.report.models[0].folds[0].values.auc.has_value());
}

TEST_CASE("single-class test folds report AUC as absent") {
  LabeledFeatures d;
  d.matrix.columns = {"x"};
  // Subject A holds only class 0, subject B only class 1 -> LOSO test folds are single-class.
  for (int i = 0; i < 6; ++i) {
    d.matrix.rows.push_back({i < 3 ? "A" : "B", "p", static_cast<std::size_t>(i), {1.0 * i}});
    d.labels.labels.push_back(i < 3 ? 0 : 1);
  }
  d.matrix.rows.push_back({"C", "p", 0, {0.5}});
  d.labels.labels.push_back(0);
  d.matrix.rows.push_back({"C", "p", 1, {4.5}});
  d.labels.labels.push_back(1);
  const std::vector<ClassifierSpec> specs{spec_of(Algorithm::KNN, {{"k_neighbors", 1}})};
  const auto out = cross_validate(specs, d, CVStrategy{CVStrategy::Kind::LOSO});
  const auto& folds = out.report.models[0].folds;
  REQUIRE(folds.size() == 3);
  CHECK_FALSE(folds[0].values.auc.has_value());
  CHECK_FALSE(folds[1].values.auc.has_value());
  CHECK(folds[2].values.auc.has_value());
}
