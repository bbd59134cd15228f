#include "affectflow/emg.hpp"

#include <algorithm>
#include <cmath>

#include "affectflow/error.hpp"
#include "affectflow/filters.hpp"
#include "affectflow/spectral.hpp"

namespace affectflow {

std::vector<double> emg_band_energies(std::span<const double> x, double fs_hz, const EmgOptions& options) {
  if (fs_hz < 2.0 * options.band_max_hz) {
    fail(ErrorKind::SampleRateTooLow, "EMG band energies up to " + std::to_string(options.band_max_hz) +
                                          " Hz need fs >= " + std::to_string(2.0 * options.band_max_hz) +
                                          " Hz, got " + std::to_string(fs_hz));
  }
  if (options.band_count < 1) fail(ErrorKind::InvalidArgument, "EMG band count must be positive");
  const auto sub = std::max<std::size_t>(2, static_cast<std::size_t>(std::lround(options.subwindow_s * fs_hz)));
  const std::size_t len = std::min(sub, x.size());
  if (len < 2) fail(ErrorKind::TooFewSamples, "EMG window too short");

  const double width = options.band_max_hz / options.band_count;
  std::vector<double> energy(static_cast<std::size_t>(options.band_count), 0.0);
  std::size_t blocks = 0;
  for (std::size_t start = 0; start + len <= x.size(); start += len) {
    const auto p = hann_power_spectrum(x.subspan(start, len));
    for (std::size_t k = 0; k < p.size(); ++k) {
      const double f = static_cast<double>(k) * fs_hz / static_cast<double>(len);
      if (f > options.band_max_hz) break;
      auto band = static_cast<std::size_t>(f / width);
      band = std::min(band, energy.size() - 1);
      energy[band] += p[k];
    }
    ++blocks;
  }
  for (double& e : energy) e /= static_cast<double>(blocks);
  return energy;
}

StatisticalFeatures emg_subwindow_statistics(std::span<const double> x, double fs_hz, const EmgOptions& options) {
  const auto sub = std::max<std::size_t>(2, static_cast<std::size_t>(std::lround(options.subwindow_s * fs_hz)));
  const std::size_t len = std::min(sub, x.size());
  if (len < 2) fail(ErrorKind::TooFewSamples, "EMG window too short");
  StatisticalFeatures acc;
  std::size_t blocks = 0;
  for (std::size_t start = 0; start + len <= x.size(); start += len) {
    const auto s = statistical_features(x.subspan(start, len), fs_hz);
    acc.mean += s.mean;
    acc.median += s.median;
    acc.std += s.std;
    acc.var += s.var;
    acc.min += s.min;
    acc.max += s.max;
    acc.slope += s.slope;
    ++blocks;
  }
  const double n = static_cast<double>(blocks);
  for (double* v : {&acc.mean, &acc.median, &acc.std, &acc.var, &acc.min, &acc.max, &acc.slope}) *v /= n;
  return acc;
}

EmgPeakFeatures emg_peak_features(std::span<const double> x) {
  EmgPeakFeatures f;
  if (x.size() < 3) return f;
  const double threshold = mean_of(x) + std::sqrt(variance_of(x));
  std::vector<double> amps;
  for (std::size_t i = 1; i + 1 < x.size(); ++i) {
    if (x[i] > x[i - 1] && x[i] >= x[i + 1] && x[i] > threshold) amps.push_back(x[i]);
  }
  f.count = static_cast<double>(amps.size());
  if (!amps.empty()) {
    f.mean_amplitude = mean_of(amps);
    f.std_amplitude = std::sqrt(variance_of(amps));
    f.max_amplitude = *std::max_element(amps.begin(), amps.end());
  }
  return f;
}

EmgFeatures emg_features(std::span<const double> raw, double fs_hz, const EmgOptions& options) {
  if (fs_hz < 2.0 * options.band_max_hz) {
    fail(ErrorKind::SampleRateTooLow, "EMG features need fs >= " + std::to_string(2.0 * options.band_max_hz) + " Hz");
  }
  const double hp_cut[] = {options.highpass_hz};
  const double lp_cut[] = {options.lowpass_hz};
  const auto hp = filtfilt(design_butterworth(FilterKind::Highpass, 4, hp_cut, fs_hz), raw);
  const auto lp = filtfilt(design_butterworth(FilterKind::Lowpass, 4, lp_cut, fs_hz), raw);
  EmgFeatures f;
  f.highpassed = emg_subwindow_statistics(hp, fs_hz, options);
  f.band_energy = emg_band_energies(hp, fs_hz, options);
  f.lowpassed = statistical_features(lp, fs_hz);
  f.peaks = emg_peak_features(lp);
  return f;
}

}  // namespace affectflow
