#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "affectflow/data_model.hpp"

namespace affectflow {

/// Skin conductance level (tonic) and response (phasic) components.
struct EDADecomposition {
  TimeSeries tonic;
  TimeSeries phasic;
};

/// tonic = zero-phase order-2 Butterworth lowpass at `tonic_cutoff_hz`;
/// phasic = signal - tonic, so the two always sum back to the input.
EDADecomposition decompose_eda(const TimeSeries& eda, double tonic_cutoff_hz = 0.05);

struct SCREvent {
  std::size_t onset = 0;
  std::size_t peak = 0;
  double amplitude_us = 0.0;
};

/// Longest onset-to-peak rise checked on the undecomposed signal.
inline constexpr double kScrRiseWindowS = 2.5;

/// Peaks found with hysteresis `min_amplitude_us`; each event's amplitude is
/// its rise from the lowest point since the previous peak. Only events with
/// amplitude >= min_amplitude_us are returned. When the undecomposed signal
/// `raw` is given, an event must also rise by min_amplitude_us there within
/// the last `rise_samples` samples before its peak (0: since the onset),
/// which rejects the rebound the lowpass split leaves after large responses.
std::vector<SCREvent> detect_scr(std::span<const double> phasic, double min_amplitude_us,
                                 std::span<const double> raw = {}, std::size_t rise_samples = 0);

struct SCRSummary {
  std::size_t count = 0;
  double rate_per_min = 0.0;
  double mean_amplitude_us = 0.0;  // 0 when there are no events
};

/// Decomposes `eda`, detects responses with the raw-rise check and
/// summarizes them over the whole series.
SCRSummary scr_events(const TimeSeries& eda, double min_amplitude_us = 0.01, double tonic_cutoff_hz = 0.05);

/// Summary of the events whose peaks fall in [begin, end), over `duration_s`.
SCRSummary summarize_scr(std::span<const SCREvent> events, std::size_t begin, std::size_t end,
                         double duration_s);

}  // namespace affectflow
