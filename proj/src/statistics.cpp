#include "affectflow/statistics.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "affectflow/error.hpp"

namespace affectflow {

double mean_of(std::span<const double> v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double median_of(std::span<const double> v) {
  if (v.empty()) return 0.0;
  std::vector<double> c(v.begin(), v.end());
  const std::size_t mid = c.size() / 2;
  std::nth_element(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(mid), c.end());
  const double upper = c[mid];
  if (c.size() % 2 == 1) return upper;
  const double lower = *std::max_element(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

double variance_of(std::span<const double> v) {
  if (v.empty()) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size());
}

double least_squares_slope(std::span<const double> t, std::span<const double> v) {
  const double mt = mean_of(t), mv = mean_of(v);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    sxy += (t[i] - mt) * (v[i] - mv);
    sxx += (t[i] - mt) * (t[i] - mt);
  }
  return sxx > 0.0 ? sxy / sxx : 0.0;
}

StatisticalFeatures statistical_features(std::span<const double> values, double fs_hz) {
  if (values.size() < 2) fail(ErrorKind::TooFewSamples, "statistical features need at least 2 samples");
  StatisticalFeatures f;
  f.mean = mean_of(values);
  f.median = median_of(values);
  f.var = variance_of(values);
  f.std = std::sqrt(f.var);
  auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  f.min = *lo;
  f.max = *hi;
  // Closed form for t_i = i / fs: centred time sums avoid building a time vector.
  const double n = static_cast<double>(values.size());
  const double tc = (n - 1.0) / 2.0;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double d = static_cast<double>(i) - tc;
    sxy += d * (values[i] - f.mean);
    sxx += d * d;
  }
  f.slope = sxy / sxx * fs_hz;
  return f;
}

}  // namespace affectflow
