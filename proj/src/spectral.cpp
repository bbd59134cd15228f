#include "affectflow/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>

#include "affectflow/error.hpp"

namespace affectflow {

namespace {

// Real-to-complex transform of a fixed length. Plans are created with
// FFTW_ESTIMATE, which does not touch the buffers.
class RealFft {
 public:
  explicit RealFft(std::size_t n)
      : n_(n),
        in_(fftw_alloc_real(n)),
        out_(fftw_alloc_complex(n / 2 + 1)) {
    plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), in_.get(), out_.get(), FFTW_ESTIMATE);
    if (!plan_) fail(ErrorKind::InvalidArgument, "FFT plan creation failed");
  }
  ~RealFft() { fftw_destroy_plan(plan_); }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  double* input() { return in_.get(); }

  /// |X(k)|^2 for k = 0..n/2.
  std::vector<double> power() {
    fftw_execute(plan_);
    std::vector<double> p(n_ / 2 + 1);
    for (std::size_t k = 0; k < p.size(); ++k) p[k] = out_[k][0] * out_[k][0] + out_[k][1] * out_[k][1];
    return p;
  }

 private:
  struct RealFree {
    void operator()(double* p) const { fftw_free(p); }
  };
  struct ComplexFree {
    void operator()(fftw_complex* p) const { fftw_free(p); }
  };
  std::size_t n_;
  std::unique_ptr<double[], RealFree> in_;
  std::unique_ptr<fftw_complex[], ComplexFree> out_;
  fftw_plan plan_ = nullptr;
};

std::vector<double> hann(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n));
  }
  return w;
}

}  // namespace

double Spectrum::band_power(double lo_hz, double hi_hz) const {
  if (freqs_hz.size() < 2 || !(hi_hz > lo_hz)) return 0.0;
  lo_hz = std::max(lo_hz, freqs_hz.front());
  hi_hz = std::min(hi_hz, freqs_hz.back());
  if (!(hi_hz > lo_hz)) return 0.0;
  auto at = [&](double f) {
    auto it = std::upper_bound(freqs_hz.begin(), freqs_hz.end(), f);
    std::size_t j = it == freqs_hz.end() ? freqs_hz.size() - 1 : static_cast<std::size_t>(it - freqs_hz.begin());
    j = std::max<std::size_t>(j, 1);
    const double a = (f - freqs_hz[j - 1]) / (freqs_hz[j] - freqs_hz[j - 1]);
    return density[j - 1] + a * (density[j] - density[j - 1]);
  };
  double total = 0.0;
  double f_prev = lo_hz, d_prev = at(lo_hz);
  for (std::size_t k = 0; k < freqs_hz.size(); ++k) {
    if (freqs_hz[k] <= lo_hz) continue;
    if (freqs_hz[k] >= hi_hz) break;
    total += 0.5 * (d_prev + density[k]) * (freqs_hz[k] - f_prev);
    f_prev = freqs_hz[k];
    d_prev = density[k];
  }
  total += 0.5 * (d_prev + at(hi_hz)) * (hi_hz - f_prev);
  return total;
}

Spectrum welch_psd(std::span<const double> x, double fs_hz, std::size_t segment_len) {
  const std::size_t n = x.size();
  if (n < 2) fail(ErrorKind::TooFewSamples, "Welch PSD needs at least 2 samples");
  const std::size_t seg = std::clamp<std::size_t>(segment_len, 2, n);
  const std::size_t step = std::max<std::size_t>(seg - seg / 2, 1);
  const auto w = hann(seg);
  double w_energy = 0.0;
  for (double v : w) w_energy += v * v;

  RealFft fft(seg);
  Spectrum s;
  s.freqs_hz.resize(seg / 2 + 1);
  s.density.assign(seg / 2 + 1, 0.0);
  for (std::size_t k = 0; k < s.freqs_hz.size(); ++k) {
    s.freqs_hz[k] = static_cast<double>(k) * fs_hz / static_cast<double>(seg);
  }
  std::size_t segments = 0;
  for (std::size_t start = 0; start + seg <= n; start += step) {
    double mean = 0.0;
    for (std::size_t i = 0; i < seg; ++i) mean += x[start + i];
    mean /= static_cast<double>(seg);
    for (std::size_t i = 0; i < seg; ++i) fft.input()[i] = (x[start + i] - mean) * w[i];
    auto p = fft.power();
    for (std::size_t k = 0; k < p.size(); ++k) s.density[k] += p[k];
    ++segments;
  }
  const double scale = 1.0 / (fs_hz * w_energy * static_cast<double>(segments));
  for (std::size_t k = 0; k < s.density.size(); ++k) {
    const bool edge = k == 0 || (seg % 2 == 0 && k == seg / 2);
    s.density[k] *= scale * (edge ? 1.0 : 2.0);
  }
  return s;
}

std::vector<double> hann_power_spectrum(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 2) fail(ErrorKind::TooFewSamples, "power spectrum needs at least 2 samples");
  const auto w = hann(n);
  RealFft fft(n);
  for (std::size_t i = 0; i < n; ++i) fft.input()[i] = x[i] * w[i];
  auto p = fft.power();
  for (double& v : p) v /= static_cast<double>(n);
  return p;
}

}  // namespace affectflow
