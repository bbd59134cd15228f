#pragma once

#include <cstdint>
#include <vector>

#include "affectflow/classifiers.hpp"
#include "affectflow/data_model.hpp"

namespace affectflow {

/// A column is categorical iff any of its cells is a Category. Each such
/// column with k distinct tags becomes k 0/1 columns named `col=tag` (tags in
/// sorted order). Numeric columns keep their order and come first; absent
/// cells stay absent in every indicator of their group.
FeatureMatrix one_hot_encode(const FeatureMatrix& matrix);

struct SelectionStep {
  std::size_t column = 0;  // index into the input matrix
  std::string name;
  double score = 0.0;      // mean cross-validated accuracy after adding it
};

struct SelectionResult {
  FeatureMatrix matrix;  // the k selected columns, in selection order
  std::vector<SelectionStep> steps;
};

/// Greedy forward selection: starting empty, repeatedly add the column whose
/// addition maximizes mean stratified cv accuracy of `scorer`. Ties go to the
/// lower column index. Throws KTooLarge unless 0 < k < column count, and
/// NonNumericFeature when the matrix is not fully numeric.
SelectionResult sequential_forward_selection(const FeatureMatrix& matrix, const LabelVector& labels,
                                             const ClassifierSpec& scorer, std::size_t k, int cv_folds = 5,
                                             std::uint64_t seed = 0);

}  // namespace affectflow
