#pragma once

#include <span>

namespace affectflow {

struct RespFeatures {
  double inhale_mean_s = 0, inhale_std_s = 0;
  double exhale_mean_s = 0, exhale_std_s = 0;
  double inhale_exhale_ratio = 0;
  double breath_rate_per_min = 0;
  double breath_count = 0;
  double maxima_mean = 0, maxima_std = 0;
  double minima_mean = 0, minima_std = 0;
};

/// Breaths are delimited by alternating zero crossings of a band-passed
/// (zero-mean) respiration trace, with hysteresis at 10 % of its standard
/// deviation. Inhalation runs from a trough to the next crest, exhalation
/// from a crest to the next trough. Throws NoBreathsDetected when fewer than
/// two full cycles are present.
RespFeatures resp_features(std::span<const double> values, double fs_hz);

}  // namespace affectflow
