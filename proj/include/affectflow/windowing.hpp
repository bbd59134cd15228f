#pragma once

#include <cstddef>
#include <vector>

#include "affectflow/data_model.hpp"

namespace affectflow {

struct WindowingPolicy {
  double window_s = 60.0;
  double step_s = 30.0;
  bool drop_incomplete = true;

  /// Throws InvalidArgument unless 0 < step_s <= window_s.
  void validate() const;
};

/// Sample range [begin, end) covering [t_begin, t_end) seconds from the series start.
struct WindowSpan {
  std::size_t index = 0;
  std::size_t begin = 0;
  std::size_t end = 0;
  double t_begin = 0.0;
  double t_end = 0.0;

  std::size_t size() const noexcept { return end - begin; }
};

/// floor((T - window) / step) + 1 complete windows; with drop_incomplete off a
/// trailing partial window is added when the complete ones stop short of T.
std::size_t window_count(double duration_s, const WindowingPolicy& policy);

/// Throws SeriesTooShort when drop_incomplete and the series is shorter than one window.
std::vector<WindowSpan> window_spans(const TimeSeries& series, const WindowingPolicy& policy);

std::vector<TimeSeries> segment(const TimeSeries& series, const WindowingPolicy& policy);

}  // namespace affectflow
