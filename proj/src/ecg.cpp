#include "affectflow/ecg.hpp"

#include <algorithm>
#include <cmath>

#include "affectflow/error.hpp"
#include "affectflow/filters.hpp"
#include "affectflow/statistics.hpp"

namespace affectflow {

RRSeries RRSeries::from_beat_times(std::vector<double> beat_times_s) {
  RRSeries r;
  for (std::size_t i = 1; i < beat_times_s.size(); ++i) {
    const double d = beat_times_s[i] - beat_times_s[i - 1];
    if (!(d > 0.0)) fail(ErrorKind::InvalidArgument, "beat times must be strictly increasing");
    r.rr_s.push_back(d);
  }
  r.beat_times_s = std::move(beat_times_s);
  return r;
}

std::vector<std::size_t> detect_r_peaks(const TimeSeries& ecg, const RPeakOptions& options) {
  const double fs = ecg.sample_rate_hz();
  if (fs < 100.0) {
    fail(ErrorKind::SampleRateTooLow, "R-peak detection needs fs >= 100 Hz, got " + std::to_string(fs));
  }
  if (!ecg.is_uniform()) fail(ErrorKind::NonUniformSeries, "R-peak detection needs a uniform series");
  const std::size_t n = ecg.size();
  if (n < 8) fail(ErrorKind::NoBeatsDetected, "series too short");

  const double band[] = {options.band_lo_hz, options.band_hi_hz};
  const auto bp = filtfilt(design_butterworth(FilterKind::Bandpass, 2, band, fs), ecg.values());

  std::vector<double> energy(n, 0.0);
  for (std::size_t i = 2; i + 2 < n; ++i) {
    const double d = (-bp[i - 2] - 2.0 * bp[i - 1] + 2.0 * bp[i + 1] + bp[i + 2]) * fs / 8.0;
    energy[i] = d * d;
  }

  // Centred moving-window integration (the band-pass is zero-phase, so the
  // integrator is centred too to keep the energy peak on the QRS).
  const auto width = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(options.integration_window_s * fs)));
  std::vector<double> prefix(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + energy[i];
  std::vector<double> mwi(n);
  const std::size_t half = width / 2;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i >= half ? i - half : 0;
    const std::size_t hi = std::min(n, i + (width - half));
    mwi[i] = (prefix[hi] - prefix[lo]) / static_cast<double>(width);
  }
  const double peak_max = *std::max_element(mwi.begin(), mwi.end());
  if (!(peak_max > 1e-300)) fail(ErrorKind::NoBeatsDetected, "no QRS energy in signal");

  std::vector<std::size_t> candidates;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (mwi[i] > mwi[i - 1] && mwi[i] >= mwi[i + 1]) candidates.push_back(i);
  }

  const std::size_t learn = std::min(n, static_cast<std::size_t>(2.0 * fs));
  double spki = *std::max_element(mwi.begin(), mwi.begin() + static_cast<std::ptrdiff_t>(learn)) / 3.0;
  double npki = mean_of(std::span<const double>(mwi.data(), learn)) / 2.0;
  double threshold = npki + 0.25 * (spki - npki);
  const auto refractory = static_cast<std::size_t>(std::lround(options.refractory_s * fs));

  std::vector<std::size_t> beats;
  for (std::size_t c : candidates) {
    const double v = mwi[c];
    if (v > threshold) {
      if (!beats.empty() && c - beats.back() < refractory) {
        if (v > mwi[beats.back()]) {
          beats.back() = c;
          spki = 0.125 * v + 0.875 * spki;
        }
      } else {
        if (beats.size() >= 2) {
          const std::size_t m = std::min<std::size_t>(8, beats.size() - 1);
          const double rr_avg =
              static_cast<double>(beats.back() - beats[beats.size() - 1 - m]) / static_cast<double>(m);
          if (static_cast<double>(c - beats.back()) > 1.66 * rr_avg) {
            // Search back for a missed beat between the last one and this one.
            const std::size_t lo = beats.back() + refractory;
            const std::size_t hi = c >= refractory ? c - refractory : 0;
            std::size_t best = 0;
            double best_v = 0.5 * threshold;
            for (auto it = std::lower_bound(candidates.begin(), candidates.end(), lo);
                 it != candidates.end() && *it <= hi; ++it) {
              if (mwi[*it] > best_v) {
                best_v = mwi[*it];
                best = *it;
              }
            }
            if (best != 0) {
              beats.push_back(best);
              spki = 0.25 * best_v + 0.75 * spki;
            }
          }
        }
        beats.push_back(c);
        spki = 0.125 * v + 0.875 * spki;
      }
    } else {
      npki = 0.125 * v + 0.875 * npki;
    }
    threshold = npki + 0.25 * (spki - npki);
  }

  // Localize R on the band-passed trace around each integrator peak.
  const auto reach = static_cast<std::size_t>(std::lround(0.075 * fs));
  std::vector<std::size_t> peaks;
  for (std::size_t b : beats) {
    const std::size_t lo = b >= reach ? b - reach : 0;
    const std::size_t hi = std::min(n, b + reach + 1);
    auto it = std::max_element(bp.begin() + static_cast<std::ptrdiff_t>(lo), bp.begin() + static_cast<std::ptrdiff_t>(hi));
    const auto p = static_cast<std::size_t>(it - bp.begin());
    if (!peaks.empty() && p - peaks.back() < refractory) {
      if (bp[p] > bp[peaks.back()]) peaks.back() = p;
      continue;
    }
    if (!peaks.empty() && p <= peaks.back()) continue;
    peaks.push_back(p);
  }
  if (peaks.size() < 2) {
    fail(ErrorKind::NoBeatsDetected, ecg.subject_id() + "/" + ecg.phase() + ": " +
                                         std::to_string(peaks.size()) + " R-peak(s) found");
  }
  return peaks;
}

HrvTimeFeatures hrv_time_features(const RRSeries& rr) {
  const auto& x = rr.rr_s;
  if (x.size() < 3) {
    fail(ErrorKind::TooFewBeats, "HRV time features need at least 3 RR intervals, got " + std::to_string(x.size()));
  }
  HrvTimeFeatures f;
  std::vector<double> hr(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) hr[i] = 60.0 / x[i];
  f.hr_mean_bpm = mean_of(hr);
  f.hr_std_bpm = std::sqrt(variance_of(hr));
  double ss = 0.0;
  for (std::size_t i = 0; i + 1 < x.size(); ++i) ss += (x[i + 1] - x[i]) * (x[i + 1] - x[i]);
  f.rmssd_s = std::sqrt(ss / static_cast<double>(x.size() - 1));
  f.rr_mean_s = mean_of(x);
  f.rr_median_s = median_of(x);
  f.rr_var_s2 = variance_of(x);
  f.rr_std_s = std::sqrt(f.rr_var_s2);
  f.sdnn_s = f.rr_std_s;
  return f;
}

std::vector<HrvBand> default_hrv_bands() {
  return {{"ULF", 0.01, 0.04}, {"LF", 0.04, 0.15}, {"HF", 0.15, 0.4}, {"UHF", 0.4, 1.0}};
}

std::vector<double> natural_cubic_spline(std::span<const double> x, std::span<const double> y,
                                         std::span<const double> at) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n) fail(ErrorKind::InvalidArgument, "spline needs >= 2 matching knots");
  // Second derivatives via the tridiagonal system (Thomas algorithm).
  std::vector<double> m(n, 0.0);
  if (n > 2) {
    std::vector<double> c(n, 0.0), d(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
      const double h0 = x[i] - x[i - 1], h1 = x[i + 1] - x[i];
      const double a = h0, b = 2.0 * (h0 + h1), cc = h1;
      const double r = 6.0 * ((y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0);
      const double denom = b - a * c[i - 1];
      c[i] = cc / denom;
      d[i] = (r - a * d[i - 1]) / denom;
    }
    for (std::size_t i = n - 2; i >= 1; --i) m[i] = d[i] - c[i] * m[i + 1];
  }
  std::vector<double> out(at.size());
  std::size_t j = 0;
  for (std::size_t k = 0; k < at.size(); ++k) {
    const double t = std::clamp(at[k], x.front(), x.back());
    while (j + 2 < n && x[j + 1] < t) ++j;
    const double h = x[j + 1] - x[j];
    const double a = (x[j + 1] - t) / h, b = (t - x[j]) / h;
    out[k] = a * y[j] + b * y[j + 1] + ((a * a * a - a) * m[j] + (b * b * b - b) * m[j + 1]) * h * h / 6.0;
  }
  return out;
}

Spectrum rr_spectrum(const RRSeries& rr, const HrvFreqOptions& options) {
  if (rr.rr_s.size() < 3 || rr.beat_times_s.size() != rr.rr_s.size() + 1) {
    fail(ErrorKind::TooFewBeats, "frequency-domain HRV needs at least 3 RR intervals");
  }
  std::span<const double> knots(rr.beat_times_s.data() + 1, rr.rr_s.size());
  const double t0 = knots.front(), t1 = knots.back();
  const auto count = static_cast<std::size_t>(std::floor((t1 - t0) * options.tachogram_hz + 1e-9)) + 1;
  std::vector<double> grid(count);
  for (std::size_t k = 0; k < count; ++k) grid[k] = t0 + static_cast<double>(k) / options.tachogram_hz;
  const auto tachogram = natural_cubic_spline(knots, rr.rr_s, grid);
  const auto seg = static_cast<std::size_t>(std::lround(options.segment_s * options.tachogram_hz));
  return welch_psd(tachogram, options.tachogram_hz, seg);
}

std::map<std::string, double> hrv_band_powers(const RRSeries& rr, std::span<const HrvBand> bands,
                                              const HrvFreqOptions& options) {
  const Spectrum s = rr_spectrum(rr, options);
  std::map<std::string, double> out;
  for (const auto& b : bands) out[b.name] = s.band_power(b.lo_hz, b.hi_hz);
  return out;
}

HrvFreqFeatures hrv_freq_features(const RRSeries& rr, std::span<const HrvBand> bands,
                                  const HrvFreqOptions& options) {
  if (rr.beat_times_s.size() < 2 ||
      rr.beat_times_s.back() - rr.beat_times_s.front() < options.min_span_s - 1e-9) {
    fail(ErrorKind::TooFewBeats, "beats span less than " + std::to_string(options.min_span_s) + " s");
  }
  auto has = [&](const char* name) {
    return std::any_of(bands.begin(), bands.end(), [&](const HrvBand& b) { return b.name == name; });
  };
  if (!has("LF") || !has("HF")) fail(ErrorKind::InvalidArgument, "HRV bands must include LF and HF");
  HrvFreqFeatures f;
  f.band_power = hrv_band_powers(rr, bands, options);
  const double hf = f.band_power.at("HF");
  if (!(hf > 1e-20)) fail(ErrorKind::DegenerateSpectrum, "HF band power is zero");
  f.lf_hf_ratio = f.band_power.at("LF") / hf;
  return f;
}

}  // namespace affectflow
