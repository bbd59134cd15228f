#include "affectflow/resp.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "affectflow/error.hpp"
#include "affectflow/statistics.hpp"

namespace affectflow {

namespace {

struct Crossing {
  double time_s;
  std::size_t index;
  bool upward;
};

}  // namespace

RespFeatures resp_features(std::span<const double> x, double fs_hz) {
  if (x.size() < 3) fail(ErrorKind::NoBreathsDetected, "respiration window too short");
  const double hysteresis = 0.1 * std::sqrt(variance_of(x));

  // Crossing time is interpolated at the last sign change before the signal
  // leaves the hysteresis band.
  std::vector<Crossing> crossings;
  int state = 0;
  std::size_t last_sign_change = 0;
  for (std::size_t i = 1; i < x.size(); ++i) {
    if ((x[i - 1] < 0.0) != (x[i] < 0.0)) last_sign_change = i;
    int next = state;
    if (x[i] > hysteresis && hysteresis > 0.0) next = 1;
    else if (x[i] < -hysteresis && hysteresis > 0.0) next = -1;
    if (next != state) {
      if (state != 0 && last_sign_change > 0) {
        const std::size_t j = last_sign_change;
        const double frac = x[j - 1] / (x[j - 1] - x[j]);
        crossings.push_back({(static_cast<double>(j - 1) + frac) / fs_hz, j, next == 1});
      }
      state = next;
    }
  }

  std::vector<double> cycles;
  const Crossing* prev_up = nullptr;
  for (const auto& c : crossings) {
    if (!c.upward) continue;
    if (prev_up) cycles.push_back(c.time_s - prev_up->time_s);
    prev_up = &c;
  }
  if (cycles.size() < 2) {
    fail(ErrorKind::NoBreathsDetected, std::to_string(cycles.size()) + " full breathing cycle(s) found");
  }

  // Extrema between consecutive crossings: a crest after an upward crossing,
  // a trough after a downward one.
  struct Extremum {
    double time_s;
    double value;
    bool crest;
  };
  std::vector<Extremum> extrema;
  for (std::size_t k = 0; k + 1 < crossings.size(); ++k) {
    const auto b = x.begin() + static_cast<std::ptrdiff_t>(crossings[k].index);
    const auto e = x.begin() + static_cast<std::ptrdiff_t>(crossings[k + 1].index);
    if (b >= e) continue;
    const bool crest = crossings[k].upward;
    auto it = crest ? std::max_element(b, e) : std::min_element(b, e);
    extrema.push_back({static_cast<double>(it - x.begin()) / fs_hz, *it, crest});
  }

  std::vector<double> inhale, exhale, maxima, minima;
  for (const auto& e : extrema) (e.crest ? maxima : minima).push_back(e.value);
  for (std::size_t k = 0; k + 1 < extrema.size(); ++k) {
    const double d = extrema[k + 1].time_s - extrema[k].time_s;
    if (!extrema[k].crest && extrema[k + 1].crest) inhale.push_back(d);
    if (extrema[k].crest && !extrema[k + 1].crest) exhale.push_back(d);
  }
  if (inhale.empty() || exhale.empty()) fail(ErrorKind::NoBreathsDetected, "no complete inhale/exhale pair");

  RespFeatures f;
  f.inhale_mean_s = mean_of(inhale);
  f.inhale_std_s = std::sqrt(variance_of(inhale));
  f.exhale_mean_s = mean_of(exhale);
  f.exhale_std_s = std::sqrt(variance_of(exhale));
  f.inhale_exhale_ratio = f.inhale_mean_s / f.exhale_mean_s;
  f.breath_rate_per_min = 60.0 / mean_of(cycles);
  f.breath_count = static_cast<double>(cycles.size());
  f.maxima_mean = mean_of(maxima);
  f.maxima_std = std::sqrt(variance_of(maxima));
  f.minima_mean = mean_of(minima);
  f.minima_std = std::sqrt(variance_of(minima));
  return f;
}

}  // namespace affectflow
