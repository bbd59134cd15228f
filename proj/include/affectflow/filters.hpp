#pragma once

#include <complex>
#include <span>
#include <vector>

#include "affectflow/data_model.hpp"

namespace affectflow {

enum class FilterKind { Lowpass, Highpass, Bandpass, Bandstop, Notch };

std::string_view to_string(FilterKind kind);

/// One second-order section, a0 normalized to 1:
/// H(z) = (b0 + b1 z^-1 + b2 z^-2) / (1 + a1 z^-1 + a2 z^-2)
struct Biquad {
  double b0 = 1, b1 = 0, b2 = 0, a1 = 0, a2 = 0;

  /// Poles strictly inside the unit circle (stability triangle).
  bool stable() const noexcept { return std::abs(a2) < 1.0 && std::abs(a1) < 1.0 + a2; }
  std::complex<double> response(double omega) const noexcept;
};

struct FilterDesign {
  FilterKind kind = FilterKind::Lowpass;
  int order = 0;
  std::vector<double> cutoffs_hz;
  double fs_hz = 0.0;
};

struct FilterCoefficients {
  std::vector<Biquad> sections;
  FilterDesign design;

  /// Single-pass complex response at `f_hz`.
  std::complex<double> response(double f_hz) const noexcept;
  /// Single-pass gain in dB.
  double gain_db(double f_hz) const noexcept;
  bool stable() const noexcept;
  /// Largest pole magnitude over all sections.
  double max_pole_radius() const noexcept;
};

/// Butterworth design as cascaded second-order sections (bilinear transform
/// with frequency pre-warping). Bandpass and bandstop of order N have 2N poles.
FilterCoefficients design_butterworth(FilterKind kind, int order, std::span<const double> cutoffs_hz,
                                      double fs_hz);

/// Second-order notch whose forward-backward response is -3 dB at
/// f0 +/- f0/(2q) and has a transmission zero at f0.
FilterCoefficients design_notch(double f0_hz, double q, double fs_hz);

/// Causal cascade filtering from zero initial state.
std::vector<double> filter_forward(const FilterCoefficients& coeffs, std::span<const double> x);

/// Forward-backward filtering with odd-reflected padding and steady-state
/// initial conditions. Output length equals input length.
std::vector<double> filtfilt(const FilterCoefficients& coeffs, std::span<const double> x);

/// Padding length used by filtfilt for a signal of `n` samples.
std::size_t filtfilt_padding(const FilterCoefficients& coeffs, std::size_t n);

/// Zero-phase filtering of a uniform series sampled at coeffs.design.fs_hz.
TimeSeries apply_zero_phase(const FilterCoefficients& coeffs, const TimeSeries& series);

TimeSeries notch_powerline(const TimeSeries& series, double f0_hz = 50.0, double q = 30.0);

/// Linear interpolation onto t0 + k / target_fs; downsampling first applies
/// an order-4 zero-phase anti-alias lowpass at 0.45 * target_fs.
TimeSeries resample_series(const TimeSeries& series, double target_fs_hz);

}  // namespace affectflow
