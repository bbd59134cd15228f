#pragma once

#include <span>
#include <vector>

namespace affectflow {

/// One-sided power spectral density.
struct Spectrum {
  std::vector<double> freqs_hz;
  std::vector<double> density;

  /// Integral of the density over [lo, hi] by the trapezoid rule, with the
  /// density linearly interpolated at the band edges so adjacent bands add up
  /// exactly.
  double band_power(double lo_hz, double hi_hz) const;
};

/// Welch estimate: Hann-tapered segments of `segment_len` samples (the whole
/// signal when shorter), 50 % overlap, per-segment mean removal.
Spectrum welch_psd(std::span<const double> x, double fs_hz, std::size_t segment_len);

/// |X(k)|^2 / N for k = 0..N/2 of a Hann-tapered block, summed by caller into bands.
std::vector<double> hann_power_spectrum(std::span<const double> x);

}  // namespace affectflow
