#include "affectflow/windowing.hpp"

#include <algorithm>
#include <cmath>

#include "affectflow/csv.hpp"
#include "affectflow/error.hpp"

namespace affectflow {

void WindowingPolicy::validate() const {
  if (!(window_s > 0.0) || !(step_s > 0.0) || step_s > window_s) {
    fail(ErrorKind::InvalidArgument, "windowing needs 0 < step_s <= window_s (got window " +
                                         csv::format_double(window_s) + " s, step " +
                                         csv::format_double(step_s) + " s)");
  }
}

namespace {
constexpr double kSlack = 1e-9;
}

std::size_t window_count(double duration_s, const WindowingPolicy& policy) {
  policy.validate();
  if (duration_s + kSlack < policy.window_s) return policy.drop_incomplete ? 0 : (duration_s > 0 ? 1 : 0);
  const double span = (duration_s - policy.window_s) / policy.step_s;
  const auto complete = static_cast<std::size_t>(std::floor(span + kSlack)) + 1;
  if (policy.drop_incomplete) return complete;
  const double covered = static_cast<double>(complete - 1) * policy.step_s + policy.window_s;
  return covered + kSlack < duration_s ? complete + 1 : complete;
}

std::vector<WindowSpan> window_spans(const TimeSeries& series, const WindowingPolicy& policy) {
  const double duration = series.duration_s();
  const std::size_t count = window_count(duration, policy);
  if (count == 0) {
    fail(ErrorKind::SeriesTooShort, series.subject_id() + "/" + series.phase() + "/" +
                                        series.modality().name + ": " + csv::format_double(duration) +
                                        " s recording is shorter than the " +
                                        csv::format_double(policy.window_s) + " s window");
  }
  auto t = series.timestamps();
  const double t0 = t.front();
  const double eps = 1e-6 / series.sample_rate_hz();
  auto index_at = [&](double offset) {
    auto it = std::lower_bound(t.begin(), t.end(), t0 + offset - eps);
    return static_cast<std::size_t>(it - t.begin());
  };
  std::vector<WindowSpan> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    WindowSpan w;
    w.index = k;
    w.t_begin = static_cast<double>(k) * policy.step_s;
    w.t_end = std::min(w.t_begin + policy.window_s, duration);
    w.begin = index_at(w.t_begin);
    w.end = std::max(index_at(w.t_end), w.begin);
    out.push_back(w);
  }
  return out;
}

std::vector<TimeSeries> segment(const TimeSeries& series, const WindowingPolicy& policy) {
  std::vector<TimeSeries> out;
  auto t = series.timestamps();
  auto v = series.values();
  for (const auto& w : window_spans(series, policy)) {
    out.emplace_back(series.subject_id(), series.phase(), series.modality(),
                     std::vector<double>(t.begin() + static_cast<std::ptrdiff_t>(w.begin),
                                         t.begin() + static_cast<std::ptrdiff_t>(w.end)),
                     std::vector<double>(v.begin() + static_cast<std::ptrdiff_t>(w.begin),
                                         v.begin() + static_cast<std::ptrdiff_t>(w.end)),
                     series.sample_rate_hz());
  }
  return out;
}

}  // namespace affectflow
