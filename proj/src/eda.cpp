#include "affectflow/eda.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "affectflow/error.hpp"
#include "affectflow/filters.hpp"

namespace affectflow {

EDADecomposition decompose_eda(const TimeSeries& eda, double tonic_cutoff_hz) {
  require_valid(eda);
  const double cutoff[] = {tonic_cutoff_hz};
  auto tonic = apply_zero_phase(design_butterworth(FilterKind::Lowpass, 2, cutoff, eda.sample_rate_hz()), eda);
  auto x = eda.values();
  auto t = tonic.values();
  std::vector<double> phasic(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) phasic[i] = x[i] - t[i];
  auto phasic_series = eda.with_values(std::move(phasic));
  return {std::move(tonic), std::move(phasic_series)};
}

std::vector<SCREvent> detect_scr(std::span<const double> x, double min_amplitude_us, std::span<const double> raw,
                                 std::size_t rise_samples) {
  std::vector<SCREvent> events;
  if (x.size() < 3) return events;
  if (!raw.empty() && raw.size() != x.size()) {
    fail(ErrorKind::LengthMismatch, "raw EDA and phasic component differ in length");
  }
  const double delta = std::max(min_amplitude_us, 0.0);

  // Hysteresis peak picking: a maximum is confirmed once the signal falls
  // `delta` below it, a minimum once it rises `delta` above it.
  std::vector<std::size_t> maxima;
  double mx = -std::numeric_limits<double>::infinity(), mn = std::numeric_limits<double>::infinity();
  std::size_t mx_pos = 0;
  bool look_for_max = true;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double v = x[i];
    if (v > mx) {
      mx = v;
      mx_pos = i;
    }
    if (v < mn) mn = v;
    if (look_for_max) {
      if (v < mx - delta || (delta == 0.0 && v < mx)) {
        maxima.push_back(mx_pos);
        mn = v;
        look_for_max = false;
      }
    } else if (v > mn + delta || (delta == 0.0 && v > mn)) {
      mx = v;
      mx_pos = i;
      look_for_max = true;
    }
  }
  // A rise that has not fallen back by the end still counts if it is a true local maximum.
  if (look_for_max && mx_pos > 0 && mx_pos + 1 < x.size() && (maxima.empty() || maxima.back() != mx_pos)) {
    maxima.push_back(mx_pos);
  }

  std::size_t previous = 0;
  for (std::size_t p : maxima) {
    auto onset_it = std::min_element(x.begin() + static_cast<std::ptrdiff_t>(previous),
                                     x.begin() + static_cast<std::ptrdiff_t>(p) + 1);
    const auto onset = static_cast<std::size_t>(onset_it - x.begin());
    const double amplitude = x[p] - *onset_it;
    // Measured from the raw minimum shortly before the peak: after a large
    // response the raw trace is still decaying at the phasic onset, and over
    // long spans tonic drift alone can exceed the threshold.
    bool raw_rises = true;
    if (!raw.empty()) {
      const std::size_t from = rise_samples > 0 && p > rise_samples ? std::max(onset, p - rise_samples) : onset;
      raw_rises = raw[p] - *std::min_element(raw.begin() + static_cast<std::ptrdiff_t>(from),
                                             raw.begin() + static_cast<std::ptrdiff_t>(p) + 1) >=
                  min_amplitude_us;
    }
    if (p > onset && amplitude >= min_amplitude_us && amplitude > 0.0 && raw_rises) {
      events.push_back({onset, p, amplitude});
    }
    previous = p;
  }
  return events;
}

SCRSummary summarize_scr(std::span<const SCREvent> events, std::size_t begin, std::size_t end,
                         double duration_s) {
  SCRSummary s;
  double total = 0.0;
  for (const auto& e : events) {
    if (e.peak >= begin && e.peak < end) {
      ++s.count;
      total += e.amplitude_us;
    }
  }
  s.rate_per_min = duration_s > 0.0 ? static_cast<double>(s.count) / (duration_s / 60.0) : 0.0;
  s.mean_amplitude_us = s.count ? total / static_cast<double>(s.count) : 0.0;
  return s;
}

SCRSummary scr_events(const TimeSeries& eda, double min_amplitude_us, double tonic_cutoff_hz) {
  const auto parts = decompose_eda(eda, tonic_cutoff_hz);
  const auto rise = static_cast<std::size_t>(std::lround(kScrRiseWindowS * eda.sample_rate_hz()));
  const auto events = detect_scr(parts.phasic.values(), min_amplitude_us, eda.values(), rise);
  return summarize_scr(events, 0, eda.size(), eda.duration_s());
}

}  // namespace affectflow
