#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "affectflow/data_model.hpp"

namespace affectflow {

/// Labels for each row, plus per-row class scores aligned with `classes`
/// (empty when the model does not produce them).
struct Prediction {
  std::vector<int> labels;
  std::vector<int> classes;
  std::vector<std::vector<double>> scores;

  bool has_scores() const noexcept { return !scores.empty(); }
};

/// A trained model over a plain numeric matrix. Implementations are immutable.
class Model {
 public:
  virtual ~Model() = default;
  virtual Prediction predict(const Eigen::MatrixXd& X) const = 0;
};

/// User-supplied algorithm: fit returns an immutable model.
struct CustomAlgorithm {
  std::string name;
  std::function<std::shared_ptr<const Model>(const Eigen::MatrixXd& X, std::span<const int> y, std::uint64_t seed)> fit;
};

enum class Algorithm { KNN, DecisionTree, LDA, LogisticRegression, AveragingEnsemble, Custom };

std::string to_string(Algorithm a);
Algorithm algorithm_from_string(const std::string& name);  // throws InvalidArgument

/// Hyperparameters by algorithm:
///   KNN: k_neighbors (9)
///   DecisionTree: criterion "entropy" | "gini" (entropy), max_depth (unlimited), min_samples_split (2)
///   LDA: ridge (1e-6)
///   LogisticRegression: iterations (500), step (0.1)
struct ClassifierSpec {
  std::string name;
  Algorithm algorithm = Algorithm::KNN;
  std::map<std::string, double> hyperparameters;
  std::map<std::string, std::string> options;
  std::vector<ClassifierSpec> members;  // AveragingEnsemble only
  std::shared_ptr<const CustomAlgorithm> custom;
  /// z-score features with the training statistics before fitting; logistic
  /// regression always standardizes.
  bool standardize = true;
};

/// A fitted model bound to the feature columns it was trained on.
class FittedModel {
 public:
  FittedModel(std::string name, std::vector<std::string> columns, std::vector<int> classes,
              std::shared_ptr<const Model> model);

  const std::string& name() const noexcept { return name_; }
  const std::vector<std::string>& columns() const noexcept { return columns_; }
  const std::vector<int>& classes() const noexcept { return classes_; }
  const Model& model() const noexcept { return *model_; }

  /// Throws SchemaMismatch when the matrix columns differ from the training
  /// columns, NonNumericFeature on absent or categorical cells.
  Prediction predict(const FeatureMatrix& X) const;

 private:
  std::string name_;
  std::vector<std::string> columns_;
  std::vector<int> classes_;
  std::shared_ptr<const Model> model_;
};

using FittedModelHandle = std::shared_ptr<const FittedModel>;

/// Throws NonNumericFeature, LengthMismatch, SingleClass.
FittedModelHandle fit(const ClassifierSpec& spec, const FeatureMatrix& X, const LabelVector& y,
                      std::uint64_t seed = 0);

/// Same as fit() but on a bare matrix; used by ensembles and selection.
std::shared_ptr<const Model> fit_model(const ClassifierSpec& spec, const Eigen::MatrixXd& X, std::span<const int> y,
                                       std::uint64_t seed = 0);

/// Throws NonNumericFeature when any cell is absent or categorical.
Eigen::MatrixXd to_eigen(const FeatureMatrix& matrix);

/// Exposed for inspection: a KNN model keeps its (possibly standardized) training set.
class KnnModel : public Model {
 public:
  KnnModel(Eigen::MatrixXd X, std::vector<int> y, int k);
  Prediction predict(const Eigen::MatrixXd& X) const override;
  const Eigen::MatrixXd& training_set() const noexcept { return X_; }
  const std::vector<int>& training_labels() const noexcept { return y_; }

 private:
  Eigen::MatrixXd X_;
  Eigen::MatrixXd Xt_;  // one training row per column, contiguous
  std::vector<int> y_;
  std::vector<int> classes_;
  int k_;
};

/// Exposed for inspection: tree depth and node count.
class DecisionTreeModel : public Model {
 public:
  struct Node {
    int feature = -1;  // -1 for a leaf
    double threshold = 0.0;
    int left = -1, right = -1;
    std::vector<double> class_freq;
  };

  DecisionTreeModel(std::vector<Node> nodes, std::vector<int> classes);
  Prediction predict(const Eigen::MatrixXd& X) const override;
  int depth() const;
  std::size_t node_count() const noexcept { return nodes_.size(); }

 private:
  std::vector<Node> nodes_;
  std::vector<int> classes_;
};

}  // namespace affectflow
