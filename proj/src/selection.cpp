#include "affectflow/selection.hpp"

#include <map>
#include <set>

#include "affectflow/error.hpp"
#include "affectflow/evaluation.hpp"

namespace affectflow {

FeatureMatrix one_hot_encode(const FeatureMatrix& matrix) {
  std::vector<std::size_t> numeric, categorical;
  for (std::size_t j = 0; j < matrix.columns.size(); ++j) {
    (matrix.column_is_categorical(j) ? categorical : numeric).push_back(j);
  }
  if (categorical.empty()) return matrix;

  std::vector<std::vector<std::string>> tags(categorical.size());
  FeatureMatrix out;
  for (auto j : numeric) out.columns.push_back(matrix.columns[j]);
  for (std::size_t c = 0; c < categorical.size(); ++c) {
    std::set<std::string> distinct;
    for (const auto& row : matrix.rows) {
      if (const auto* cat = std::get_if<Category>(&row.values[categorical[c]])) distinct.insert(cat->tag);
    }
    tags[c].assign(distinct.begin(), distinct.end());
    for (const auto& t : tags[c]) out.columns.push_back(matrix.columns[categorical[c]] + "=" + t);
  }
  for (const auto& row : matrix.rows) {
    FeatureRow r{row.subject_id, row.phase, row.window_index, {}};
    r.values.reserve(out.columns.size());
    for (auto j : numeric) r.values.push_back(row.values[j]);
    for (std::size_t c = 0; c < categorical.size(); ++c) {
      const auto& v = row.values[categorical[c]];
      const auto* cat = std::get_if<Category>(&v);
      for (const auto& t : tags[c]) {
        if (cat) r.values.emplace_back(cat->tag == t ? 1.0 : 0.0);
        else r.values.emplace_back(std::monostate{});
      }
    }
    out.rows.push_back(std::move(r));
  }
  return out;
}

SelectionResult sequential_forward_selection(const FeatureMatrix& matrix, const LabelVector& labels,
                                             const ClassifierSpec& scorer, std::size_t k, int cv_folds,
                                             std::uint64_t seed) {
  const std::size_t d = matrix.columns.size();
  if (k == 0 || k >= d) {
    fail(ErrorKind::KTooLarge, "k = " + std::to_string(k) + " must satisfy 0 < k < " + std::to_string(d) +
                                   " (column count)");
  }
  const Eigen::MatrixXd X = to_eigen(matrix);
  if (labels.labels.size() != matrix.rows.size()) fail(ErrorKind::LengthMismatch, "labels do not match rows");

  CVStrategy strategy{CVStrategy::Kind::StratifiedKFold, cv_folds, seed};
  const auto folds = make_folds(strategy, matrix, &labels);

  auto cv_accuracy = [&](const std::vector<std::size_t>& cols) {
    double total = 0.0;
    for (std::size_t f = 0; f < folds.size(); ++f) {
      const auto& fold = folds[f];
      Eigen::MatrixXd Xtr(static_cast<Eigen::Index>(fold.train.size()), static_cast<Eigen::Index>(cols.size()));
      Eigen::MatrixXd Xte(static_cast<Eigen::Index>(fold.test.size()), static_cast<Eigen::Index>(cols.size()));
      std::vector<int> ytr, yte;
      for (std::size_t i = 0; i < fold.train.size(); ++i) {
        for (std::size_t c = 0; c < cols.size(); ++c) {
          Xtr(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) =
              X(static_cast<Eigen::Index>(fold.train[i]), static_cast<Eigen::Index>(cols[c]));
        }
        ytr.push_back(labels.labels[fold.train[i]]);
      }
      for (std::size_t i = 0; i < fold.test.size(); ++i) {
        for (std::size_t c = 0; c < cols.size(); ++c) {
          Xte(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) =
              X(static_cast<Eigen::Index>(fold.test[i]), static_cast<Eigen::Index>(cols[c]));
        }
        yte.push_back(labels.labels[fold.test[i]]);
      }
      const auto p = fit_model(scorer, Xtr, ytr, seed + f)->predict(Xte);
      std::size_t correct = 0;
      for (std::size_t i = 0; i < yte.size(); ++i) correct += p.labels[i] == yte[i];
      total += static_cast<double>(correct) / static_cast<double>(yte.size());
    }
    return total / static_cast<double>(folds.size());
  };

  SelectionResult result;
  std::vector<std::size_t> selected;
  std::vector<bool> used(d, false);
  while (selected.size() < k) {
    std::size_t best = d;
    double best_score = -1.0;
    for (std::size_t j = 0; j < d; ++j) {
      if (used[j]) continue;
      auto cols = selected;
      cols.push_back(j);
      const double s = cv_accuracy(cols);
      if (s > best_score) {
        best_score = s;
        best = j;
      }
    }
    used[best] = true;
    selected.push_back(best);
    result.steps.push_back({best, matrix.columns[best], best_score});
  }
  result.matrix = matrix.select_columns(selected);
  return result;
}

}  // namespace affectflow
