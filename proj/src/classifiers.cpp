#include "affectflow/classifiers.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <set>

#include "affectflow/error.hpp"

namespace affectflow {

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::KNN: return "knn";
    case Algorithm::DecisionTree: return "decision-tree";
    case Algorithm::LDA: return "lda";
    case Algorithm::LogisticRegression: return "logistic-regression";
    case Algorithm::AveragingEnsemble: return "averaging-ensemble";
    case Algorithm::Custom: return "custom";
  }
  return "?";
}

Algorithm algorithm_from_string(const std::string& name) {
  for (auto a : {Algorithm::KNN, Algorithm::DecisionTree, Algorithm::LDA, Algorithm::LogisticRegression,
                 Algorithm::AveragingEnsemble, Algorithm::Custom}) {
    if (to_string(a) == name) return a;
  }
  fail(ErrorKind::InvalidArgument, "unknown classifier algorithm '" + name + "'");
}

namespace {

double hyper(const ClassifierSpec& spec, const std::string& key, double fallback) {
  auto it = spec.hyperparameters.find(key);
  return it == spec.hyperparameters.end() ? fallback : it->second;
}

std::vector<int> sorted_classes(std::span<const int> y) {
  std::set<int> s(y.begin(), y.end());
  return {s.begin(), s.end()};
}

std::size_t class_slot(const std::vector<int>& classes, int label) {
  return static_cast<std::size_t>(std::lower_bound(classes.begin(), classes.end(), label) - classes.begin());
}

/// Highest score wins; ties go to the smaller class id (earlier slot).
int argmax_class(const std::vector<int>& classes, const std::vector<double>& scores) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < scores.size(); ++c) {
    if (scores[c] > scores[best]) best = c;
  }
  return classes[best];
}

class StandardizedModel : public Model {
 public:
  StandardizedModel(Eigen::RowVectorXd mean, Eigen::RowVectorXd scale, std::shared_ptr<const Model> inner)
      : mean_(std::move(mean)), scale_(std::move(scale)), inner_(std::move(inner)) {}

  Prediction predict(const Eigen::MatrixXd& X) const override {
    Eigen::MatrixXd Z = (X.rowwise() - mean_).array().rowwise() / scale_.array();
    return inner_->predict(Z);
  }

 private:
  Eigen::RowVectorXd mean_;
  Eigen::RowVectorXd scale_;
  std::shared_ptr<const Model> inner_;
};

struct Standardizer {
  Eigen::RowVectorXd mean;
  Eigen::RowVectorXd scale;

  static Standardizer from(const Eigen::MatrixXd& X) {
    Standardizer s;
    const double n = static_cast<double>(X.rows());
    s.mean = X.colwise().mean();
    s.scale = ((X.rowwise() - s.mean).array().square().colwise().sum() / n).sqrt().matrix();
    for (Eigen::Index j = 0; j < s.scale.size(); ++j) {
      if (!(s.scale(j) > 1e-12)) s.scale(j) = 1.0;
    }
    return s;
  }

  Eigen::MatrixXd apply(const Eigen::MatrixXd& X) const {
    return (X.rowwise() - mean).array().rowwise() / scale.array();
  }
};

// ---------------------------------------------------------------- LDA

class LdaModel : public Model {
 public:
  LdaModel(Eigen::MatrixXd weights, Eigen::VectorXd bias, std::vector<int> classes)
      : W_(std::move(weights)), b_(std::move(bias)), classes_(std::move(classes)) {}

  Prediction predict(const Eigen::MatrixXd& X) const override {
    Prediction p;
    p.classes = classes_;
    const Eigen::MatrixXd D = (X * W_).rowwise() + b_.transpose();
    for (Eigen::Index i = 0; i < D.rows(); ++i) {
      const double m = D.row(i).maxCoeff();
      std::vector<double> s(classes_.size());
      double total = 0.0;
      for (std::size_t c = 0; c < s.size(); ++c) total += s[c] = std::exp(D(i, static_cast<Eigen::Index>(c)) - m);
      for (double& v : s) v /= total;
      p.labels.push_back(argmax_class(classes_, s));
      p.scores.push_back(std::move(s));
    }
    return p;
  }

 private:
  Eigen::MatrixXd W_;
  Eigen::VectorXd b_;
  std::vector<int> classes_;
};

std::shared_ptr<const Model> fit_lda(const ClassifierSpec& spec, const Eigen::MatrixXd& X, std::span<const int> y,
                                     const std::vector<int>& classes) {
  const auto d = X.cols();
  const auto K = static_cast<Eigen::Index>(classes.size());
  Eigen::MatrixXd means = Eigen::MatrixXd::Zero(K, d);
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(K);
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const auto c = static_cast<Eigen::Index>(class_slot(classes, y[static_cast<std::size_t>(i)]));
    means.row(c) += X.row(i);
    counts(c) += 1.0;
  }
  for (Eigen::Index c = 0; c < K; ++c) means.row(c) /= counts(c);
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(d, d);
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const auto c = static_cast<Eigen::Index>(class_slot(classes, y[static_cast<std::size_t>(i)]));
    const Eigen::RowVectorXd r = X.row(i) - means.row(c);
    S.noalias() += r.transpose() * r;
  }
  const double dof = X.rows() > K ? static_cast<double>(X.rows() - K) : static_cast<double>(X.rows());
  S /= dof;
  S.diagonal().array() += hyper(spec, "ridge", 1e-6);
  const Eigen::LDLT<Eigen::MatrixXd> solver(S);
  const Eigen::MatrixXd W = solver.solve(means.transpose());  // d x K
  Eigen::VectorXd b(K);
  const double n = static_cast<double>(X.rows());
  for (Eigen::Index c = 0; c < K; ++c) {
    b(c) = -0.5 * means.row(c).dot(W.col(c)) + std::log(counts(c) / n);
  }
  return std::make_shared<LdaModel>(W, b, classes);
}

// ---------------------------------------------------------------- logistic regression

class LogisticModel : public Model {
 public:
  LogisticModel(Eigen::MatrixXd W, Eigen::RowVectorXd b, std::vector<int> classes)
      : W_(std::move(W)), b_(std::move(b)), classes_(std::move(classes)) {}

  static Eigen::MatrixXd softmax(const Eigen::MatrixXd& Z) {
    Eigen::MatrixXd P(Z.rows(), Z.cols());
    for (Eigen::Index i = 0; i < Z.rows(); ++i) {
      const Eigen::RowVectorXd e = (Z.row(i).array() - Z.row(i).maxCoeff()).exp();
      P.row(i) = e / e.sum();
    }
    return P;
  }

  Prediction predict(const Eigen::MatrixXd& X) const override {
    Prediction p;
    p.classes = classes_;
    const Eigen::MatrixXd P = softmax((X * W_).rowwise() + b_);
    for (Eigen::Index i = 0; i < P.rows(); ++i) {
      std::vector<double> s(static_cast<std::size_t>(P.cols()));
      for (Eigen::Index c = 0; c < P.cols(); ++c) s[static_cast<std::size_t>(c)] = P(i, c);
      p.labels.push_back(argmax_class(classes_, s));
      p.scores.push_back(std::move(s));
    }
    return p;
  }

 private:
  Eigen::MatrixXd W_;
  Eigen::RowVectorXd b_;
  std::vector<int> classes_;
};

std::shared_ptr<const Model> fit_logistic(const ClassifierSpec& spec, const Eigen::MatrixXd& X,
                                          std::span<const int> y, const std::vector<int>& classes) {
  const auto iterations = static_cast<int>(hyper(spec, "iterations", 500));
  const double step = hyper(spec, "step", 0.1);
  const auto n = X.rows();
  const auto K = static_cast<Eigen::Index>(classes.size());
  Eigen::MatrixXd Y = Eigen::MatrixXd::Zero(n, K);
  for (Eigen::Index i = 0; i < n; ++i) {
    Y(i, static_cast<Eigen::Index>(class_slot(classes, y[static_cast<std::size_t>(i)]))) = 1.0;
  }
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(X.cols(), K);
  Eigen::RowVectorXd b = Eigen::RowVectorXd::Zero(K);
  for (int it = 0; it < iterations; ++it) {
    const Eigen::MatrixXd G = LogisticModel::softmax((X * W).rowwise() + b) - Y;
    W -= step * (X.transpose() * G) / static_cast<double>(n);
    b -= step * G.colwise().sum() / static_cast<double>(n);
  }
  return std::make_shared<LogisticModel>(W, b, classes);
}

// ---------------------------------------------------------------- decision tree

struct TreeBuilder {
  const Eigen::MatrixXd& X;
  std::vector<std::size_t> slot;  // class slot per row
  std::size_t K;
  bool gini;
  int max_depth;
  std::size_t min_split;
  std::vector<DecisionTreeModel::Node> nodes;

  double impurity(const std::vector<double>& counts, double total) const {
    if (total <= 0.0) return 0.0;
    double h = gini ? 1.0 : 0.0;
    for (double c : counts) {
      if (c <= 0.0) continue;
      const double p = c / total;
      h += gini ? -p * p : -p * std::log2(p);
    }
    return h;
  }

  int build(std::vector<std::size_t> rows, int depth) {
    std::vector<double> counts(K, 0.0);
    for (auto r : rows) counts[slot[r]] += 1.0;
    const double total = static_cast<double>(rows.size());
    DecisionTreeModel::Node node;
    node.class_freq.resize(K);
    for (std::size_t c = 0; c < K; ++c) node.class_freq[c] = counts[c] / total;
    const int index = static_cast<int>(nodes.size());
    nodes.push_back(node);

    const double parent = impurity(counts, total);
    if (parent <= 0.0 || rows.size() < min_split || (max_depth >= 0 && depth >= max_depth)) return index;

    // Exhaustive search; the first strictly better (feature, threshold) wins,
    // so ties go to the lower feature index and then the lower threshold.
    double best_gain = 1e-12;
    int best_feature = -1;
    double best_threshold = 0.0;
    std::vector<std::pair<double, std::size_t>> order(rows.size());
    for (Eigen::Index f = 0; f < X.cols(); ++f) {
      for (std::size_t i = 0; i < rows.size(); ++i) order[i] = {X(static_cast<Eigen::Index>(rows[i]), f), slot[rows[i]]};
      std::sort(order.begin(), order.end());
      std::vector<double> left(K, 0.0);
      for (std::size_t i = 0; i + 1 < order.size(); ++i) {
        left[order[i].second] += 1.0;
        if (!(order[i + 1].first > order[i].first)) continue;
        const double nl = static_cast<double>(i + 1);
        const double nr = total - nl;
        std::vector<double> right(K);
        for (std::size_t c = 0; c < K; ++c) right[c] = counts[c] - left[c];
        const double gain = parent - (nl / total) * impurity(left, nl) - (nr / total) * impurity(right, nr);
        if (gain > best_gain) {
          best_gain = gain;
          best_feature = static_cast<int>(f);
          best_threshold = 0.5 * (order[i].first + order[i + 1].first);
        }
      }
    }
    if (best_feature < 0) return index;

    std::vector<std::size_t> l, r;
    for (auto row : rows) (X(static_cast<Eigen::Index>(row), best_feature) <= best_threshold ? l : r).push_back(row);
    nodes[static_cast<std::size_t>(index)].feature = best_feature;
    nodes[static_cast<std::size_t>(index)].threshold = best_threshold;
    const int li = build(std::move(l), depth + 1);
    const int ri = build(std::move(r), depth + 1);
    nodes[static_cast<std::size_t>(index)].left = li;
    nodes[static_cast<std::size_t>(index)].right = ri;
    return index;
  }
};

std::shared_ptr<const Model> fit_tree(const ClassifierSpec& spec, const Eigen::MatrixXd& X, std::span<const int> y,
                                      const std::vector<int>& classes) {
  auto crit = spec.options.count("criterion") ? spec.options.at("criterion") : std::string("entropy");
  if (crit != "entropy" && crit != "gini") fail(ErrorKind::InvalidArgument, "unknown tree criterion '" + crit + "'");
  TreeBuilder b{X, {}, classes.size(), crit == "gini", static_cast<int>(hyper(spec, "max_depth", -1)),
                static_cast<std::size_t>(std::max(2.0, hyper(spec, "min_samples_split", 2))), {}};
  for (int label : y) b.slot.push_back(class_slot(classes, label));
  std::vector<std::size_t> rows(static_cast<std::size_t>(X.rows()));
  std::iota(rows.begin(), rows.end(), 0);
  b.build(std::move(rows), 0);
  return std::make_shared<DecisionTreeModel>(std::move(b.nodes), classes);
}

// ---------------------------------------------------------------- ensemble

class EnsembleModel : public Model {
 public:
  EnsembleModel(std::vector<std::shared_ptr<const Model>> members, std::vector<int> classes)
      : members_(std::move(members)), classes_(std::move(classes)) {}

  Prediction predict(const Eigen::MatrixXd& X) const override {
    const auto n = static_cast<std::size_t>(X.rows());
    Prediction p;
    p.classes = classes_;
    p.scores.assign(n, std::vector<double>(classes_.size(), 0.0));
    for (const auto& m : members_) {
      const auto mp = m->predict(X);
      for (std::size_t i = 0; i < n; ++i) {
        if (mp.has_scores()) {
          for (std::size_t c = 0; c < mp.classes.size(); ++c) {
            p.scores[i][class_slot(classes_, mp.classes[c])] += mp.scores[i][c];
          }
        } else {
          p.scores[i][class_slot(classes_, mp.labels[i])] += 1.0;
        }
      }
    }
    const double w = 1.0 / static_cast<double>(members_.size());
    for (auto& row : p.scores) {
      for (double& v : row) v *= w;
      p.labels.push_back(argmax_class(classes_, row));
    }
    return p;
  }

 private:
  std::vector<std::shared_ptr<const Model>> members_;
  std::vector<int> classes_;
};

}  // namespace

// ---------------------------------------------------------------- KNN

KnnModel::KnnModel(Eigen::MatrixXd X, std::vector<int> y, int k)
    : X_(std::move(X)), Xt_(X_.transpose()), y_(std::move(y)), classes_(sorted_classes(y_)), k_(k) {
  if (k_ < 1) fail(ErrorKind::InvalidArgument, "k_neighbors must be at least 1");
}

Prediction KnnModel::predict(const Eigen::MatrixXd& Q) const {
  Prediction p;
  p.classes = classes_;
  const auto n = static_cast<std::size_t>(X_.rows());
  const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(k_), n);
  const auto d = static_cast<std::size_t>(X_.cols());
  std::vector<std::pair<double, std::size_t>> dist(n);
  std::vector<double> query(d);
  for (Eigen::Index q = 0; q < Q.rows(); ++q) {
    for (std::size_t j = 0; j < d; ++j) query[j] = Q(q, static_cast<Eigen::Index>(j));
    for (std::size_t i = 0; i < n; ++i) {
      const double* x = Xt_.data() + i * d;
      double s = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        const double diff = x[j] - query[j];
        s += diff * diff;
      }
      dist[i] = {s, i};
    }
    // (distance, row) ordering breaks distance ties by the lower row index.
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
    std::vector<double> votes(classes_.size(), 0.0);
    for (std::size_t j = 0; j < k; ++j) votes[class_slot(classes_, y_[dist[j].second])] += 1.0;
    for (double& v : votes) v /= static_cast<double>(k);
    p.labels.push_back(argmax_class(classes_, votes));
    p.scores.push_back(std::move(votes));
  }
  return p;
}

DecisionTreeModel::DecisionTreeModel(std::vector<Node> nodes, std::vector<int> classes)
    : nodes_(std::move(nodes)), classes_(std::move(classes)) {}

Prediction DecisionTreeModel::predict(const Eigen::MatrixXd& X) const {
  Prediction p;
  p.classes = classes_;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    std::size_t at = 0;
    while (nodes_[at].feature >= 0) {
      at = static_cast<std::size_t>(X(i, nodes_[at].feature) <= nodes_[at].threshold ? nodes_[at].left
                                                                                      : nodes_[at].right);
    }
    p.labels.push_back(argmax_class(classes_, nodes_[at].class_freq));
    p.scores.push_back(nodes_[at].class_freq);
  }
  return p;
}

int DecisionTreeModel::depth() const {
  std::function<int(int)> walk = [&](int i) -> int {
    const auto& n = nodes_[static_cast<std::size_t>(i)];
    return n.feature < 0 ? 0 : 1 + std::max(walk(n.left), walk(n.right));
  };
  return nodes_.empty() ? 0 : walk(0);
}

// ---------------------------------------------------------------- entry points

Eigen::MatrixXd to_eigen(const FeatureMatrix& matrix) {
  Eigen::MatrixXd X(static_cast<Eigen::Index>(matrix.rows.size()), static_cast<Eigen::Index>(matrix.columns.size()));
  for (std::size_t i = 0; i < matrix.rows.size(); ++i) {
    const auto& row = matrix.rows[i];
    if (row.values.size() != matrix.columns.size()) {
      fail(ErrorKind::SchemaMismatch, "row " + std::to_string(i) + " has " + std::to_string(row.values.size()) +
                                          " values for " + std::to_string(matrix.columns.size()) + " columns");
    }
    for (std::size_t j = 0; j < row.values.size(); ++j) {
      const auto* d = std::get_if<double>(&row.values[j]);
      if (!d) {
        fail(ErrorKind::NonNumericFeature, "column '" + matrix.columns[j] + "' of row " + row.subject_id + "/" +
                                               row.phase + "/" + std::to_string(row.window_index) +
                                               (is_absent(row.values[j]) ? " is absent" : " is categorical"));
      }
      X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = *d;
    }
  }
  return X;
}

std::shared_ptr<const Model> fit_model(const ClassifierSpec& spec, const Eigen::MatrixXd& X, std::span<const int> y,
                                       std::uint64_t seed) {
  if (static_cast<std::size_t>(X.rows()) != y.size()) {
    fail(ErrorKind::LengthMismatch, std::to_string(X.rows()) + " rows but " + std::to_string(y.size()) + " labels");
  }
  const auto classes = sorted_classes(y);
  if (classes.size() < 2) fail(ErrorKind::SingleClass, "training labels contain a single class");
  if (!X.allFinite()) fail(ErrorKind::NonNumericFeature, "training matrix holds non-finite values");

  if (spec.algorithm == Algorithm::AveragingEnsemble) {
    if (spec.members.empty()) fail(ErrorKind::InvalidArgument, "ensemble '" + spec.name + "' has no members");
    std::vector<std::shared_ptr<const Model>> members;
    for (const auto& m : spec.members) members.push_back(fit_model(m, X, y, seed));
    return std::make_shared<EnsembleModel>(std::move(members), classes);
  }

  const bool standardize = spec.standardize || spec.algorithm == Algorithm::LogisticRegression;
  std::optional<Standardizer> st;
  if (standardize) st = Standardizer::from(X);
  const Eigen::MatrixXd Z = st ? st->apply(X) : X;

  std::shared_ptr<const Model> inner;
  switch (spec.algorithm) {
    case Algorithm::KNN:
      inner = std::make_shared<KnnModel>(Z, std::vector<int>(y.begin(), y.end()),
                                         static_cast<int>(hyper(spec, "k_neighbors", 9)));
      break;
    case Algorithm::DecisionTree: inner = fit_tree(spec, Z, y, classes); break;
    case Algorithm::LDA: inner = fit_lda(spec, Z, y, classes); break;
    case Algorithm::LogisticRegression: inner = fit_logistic(spec, Z, y, classes); break;
    case Algorithm::Custom:
      if (!spec.custom || !spec.custom->fit) fail(ErrorKind::InvalidArgument, "custom classifier '" + spec.name + "' has no fit");
      inner = spec.custom->fit(Z, y, seed);
      if (!inner) fail(ErrorKind::InvalidArgument, "custom classifier '" + spec.name + "' returned no model");
      break;
    case Algorithm::AveragingEnsemble: break;
  }
  if (!st) return inner;
  return std::make_shared<StandardizedModel>(st->mean, st->scale, std::move(inner));
}

FittedModelHandle fit(const ClassifierSpec& spec, const FeatureMatrix& X, const LabelVector& y, std::uint64_t seed) {
  if (X.rows.size() != y.labels.size()) {
    fail(ErrorKind::LengthMismatch, std::to_string(X.rows.size()) + " rows but " + std::to_string(y.labels.size()) +
                                        " labels");
  }
  auto model = fit_model(spec, to_eigen(X), y.labels, seed);
  return std::make_shared<const FittedModel>(spec.name, X.columns, sorted_classes(y.labels), std::move(model));
}

FittedModel::FittedModel(std::string name, std::vector<std::string> columns, std::vector<int> classes,
                         std::shared_ptr<const Model> model)
    : name_(std::move(name)), columns_(std::move(columns)), classes_(std::move(classes)), model_(std::move(model)) {}

Prediction FittedModel::predict(const FeatureMatrix& X) const {
  if (X.columns != columns_) {
    std::string detail = "model '" + name_ + "' expects " + std::to_string(columns_.size()) + " columns";
    for (std::size_t j = 0; j < std::max(columns_.size(), X.columns.size()); ++j) {
      const std::string a = j < columns_.size() ? columns_[j] : "<none>";
      const std::string b = j < X.columns.size() ? X.columns[j] : "<none>";
      if (a != b) {
        detail += "; column " + std::to_string(j) + " is '" + b + "', expected '" + a + "'";
        break;
      }
    }
    fail(ErrorKind::SchemaMismatch, detail);
  }
  return model_->predict(to_eigen(X));
}

}  // namespace affectflow
