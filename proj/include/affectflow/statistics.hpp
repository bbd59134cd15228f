#pragma once

#include <span>

namespace affectflow {

/// Population-form moments plus the least-squares slope against time (units/s).
struct StatisticalFeatures {
  double mean = 0, median = 0, std = 0, var = 0, min = 0, max = 0, slope = 0;
};

/// Samples taken at a uniform rate `fs_hz` (slope is per second).
StatisticalFeatures statistical_features(std::span<const double> values, double fs_hz = 1.0);

double mean_of(std::span<const double> v);
double median_of(std::span<const double> v);
/// Population variance.
double variance_of(std::span<const double> v);

/// Least-squares slope of v against t.
double least_squares_slope(std::span<const double> t, std::span<const double> v);

}  // namespace affectflow
