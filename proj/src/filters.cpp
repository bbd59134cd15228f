#include "affectflow/filters.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "affectflow/error.hpp"

namespace affectflow {

using cd = std::complex<double>;
constexpr double pi = std::numbers::pi;

std::string_view to_string(FilterKind kind) {
  switch (kind) {
    case FilterKind::Lowpass: return "lowpass";
    case FilterKind::Highpass: return "highpass";
    case FilterKind::Bandpass: return "bandpass";
    case FilterKind::Bandstop: return "bandstop";
    case FilterKind::Notch: return "notch";
  }
  return "unknown";
}

std::complex<double> Biquad::response(double omega) const noexcept {
  const cd z1 = std::polar(1.0, -omega);
  const cd z2 = z1 * z1;
  return (b0 + b1 * z1 + b2 * z2) / (1.0 + a1 * z1 + a2 * z2);
}

std::complex<double> FilterCoefficients::response(double f_hz) const noexcept {
  const double omega = 2.0 * pi * f_hz / design.fs_hz;
  cd h = 1.0;
  for (const auto& s : sections) h *= s.response(omega);
  return h;
}

double FilterCoefficients::gain_db(double f_hz) const noexcept {
  return 20.0 * std::log10(std::abs(response(f_hz)));
}

bool FilterCoefficients::stable() const noexcept {
  return std::all_of(sections.begin(), sections.end(), [](const Biquad& s) { return s.stable(); });
}

double FilterCoefficients::max_pole_radius() const noexcept {
  double r = 0.0;
  for (const auto& s : sections) {
    // roots of z^2 + a1 z + a2
    const cd disc = std::sqrt(cd(s.a1 * s.a1 - 4.0 * s.a2, 0.0));
    r = std::max({r, std::abs((-s.a1 + disc) / 2.0), std::abs((-s.a1 - disc) / 2.0)});
  }
  return r;
}

namespace {

cd bilinear(cd s, double k) { return (k + s) / (k - s); }

// Biquad from two digital poles (a conjugate pair or two reals) and given numerator.
Biquad section_from_poles(cd p1, cd p2, double b0, double b1, double b2) {
  Biquad q;
  q.b0 = b0;
  q.b1 = b1;
  q.b2 = b2;
  q.a1 = -(p1 + p2).real();
  q.a2 = (p1 * p2).real();
  return q;
}

Biquad first_order_section(cd p, double b0, double b1) {
  Biquad q;
  q.b0 = b0;
  q.b1 = b1;
  q.a1 = -p.real();
  return q;
}

void normalize_at(Biquad& q, double omega) {
  const double g = std::abs(q.response(omega));
  q.b0 /= g;
  q.b1 /= g;
  q.b2 /= g;
}

void check_cutoff(double f, double fs) {
  if (!(f > 0.0) || !(f < fs / 2.0)) {
    fail(ErrorKind::CutoffOutOfRange, "cutoff " + std::to_string(f) + " Hz outside (0, " +
                                          std::to_string(fs / 2.0) + ") for fs " +
                                          std::to_string(fs) + " Hz");
  }
}

}  // namespace

FilterCoefficients design_butterworth(FilterKind kind, int order, std::span<const double> cutoffs_hz,
                                      double fs_hz) {
  if (order < 1 || order > 24) fail(ErrorKind::InvalidOrder, "order " + std::to_string(order));
  if (!(fs_hz > 0.0)) fail(ErrorKind::InvalidArgument, "sample rate must be positive");
  const bool two_edges = kind == FilterKind::Bandpass || kind == FilterKind::Bandstop;
  if (kind == FilterKind::Notch) fail(ErrorKind::InvalidArgument, "use design_notch for notch filters");
  if (cutoffs_hz.size() != (two_edges ? 2u : 1u)) {
    fail(ErrorKind::InvalidArgument, std::string(to_string(kind)) + " needs " +
                                         (two_edges ? "two cutoffs" : "one cutoff"));
  }
  for (double f : cutoffs_hz) check_cutoff(f, fs_hz);
  if (two_edges && !(cutoffs_hz[0] < cutoffs_hz[1])) {
    fail(ErrorKind::CutoffOutOfRange, "band edges must be increasing");
  }

  const double k = 2.0 * fs_hz;
  auto warp = [&](double f) { return k * std::tan(pi * f / fs_hz); };

  // Analog prototype poles on the left half of the unit circle; index i and
  // order-1-i are conjugates, the middle one is real for odd orders.
  std::vector<cd> proto(static_cast<std::size_t>(order));
  for (int i = 0; i < order; ++i) {
    proto[static_cast<std::size_t>(i)] = std::polar(1.0, pi * (2.0 * i + 1.0 + order) / (2.0 * order));
  }
  const int pairs = order / 2;
  const bool has_real = order % 2 == 1;

  FilterCoefficients out;
  out.design = {kind, order, std::vector<double>(cutoffs_hz.begin(), cutoffs_hz.end()), fs_hz};

  switch (kind) {
    case FilterKind::Lowpass:
    case FilterKind::Highpass: {
      const bool low = kind == FilterKind::Lowpass;
      const double wc = warp(cutoffs_hz[0]);
      auto analog = [&](cd p) { return low ? wc * p : wc / p; };
      const double ref = low ? 0.0 : pi;
      for (int i = 0; i < pairs; ++i) {
        cd z = bilinear(analog(proto[static_cast<std::size_t>(i)]), k);
        Biquad q = low ? section_from_poles(z, std::conj(z), 1, 2, 1)
                       : section_from_poles(z, std::conj(z), 1, -2, 1);
        normalize_at(q, ref);
        out.sections.push_back(q);
      }
      if (has_real) {
        cd z = bilinear(analog(cd(-1.0, 0.0)), k);
        Biquad q = low ? first_order_section(z, 1, 1) : first_order_section(z, 1, -1);
        normalize_at(q, ref);
        out.sections.push_back(q);
      }
      break;
    }
    case FilterKind::Bandpass:
    case FilterKind::Bandstop: {
      const bool pass = kind == FilterKind::Bandpass;
      const double w1 = warp(cutoffs_hz[0]);
      const double w2 = warp(cutoffs_hz[1]);
      const double bw = w2 - w1;
      const double w0sq = w1 * w2;
      const double omega0 = 2.0 * std::atan(std::sqrt(w0sq) / k);
      // Each prototype pole maps to the two roots of s^2 - c s + w0^2.
      auto roots = [&](cd p) {
        const cd c = pass ? p * bw : bw / p;
        const cd d = std::sqrt(c * c - 4.0 * w0sq);
        return std::pair<cd, cd>{(c + d) / 2.0, (c - d) / 2.0};
      };
      const double nb1 = pass ? 0.0 : -2.0 * std::cos(omega0);
      const double nb2 = pass ? -1.0 : 1.0;
      const double ref = pass ? omega0 : 0.0;
      auto push = [&](cd za, cd zb) {
        Biquad q = section_from_poles(za, zb, 1.0, nb1, nb2);
        normalize_at(q, ref);
        out.sections.push_back(q);
      };
      for (int i = 0; i < pairs; ++i) {
        auto [s1, s2] = roots(proto[static_cast<std::size_t>(i)]);
        cd z1 = bilinear(s1, k), z2 = bilinear(s2, k);
        push(z1, std::conj(z1));
        push(z2, std::conj(z2));
      }
      if (has_real) {
        auto [s1, s2] = roots(cd(-1.0, 0.0));
        push(bilinear(s1, k), bilinear(s2, k));
      }
      break;
    }
    case FilterKind::Notch:
      break;
  }
  return out;
}

FilterCoefficients design_notch(double f0_hz, double q, double fs_hz) {
  if (!(fs_hz > 0.0)) fail(ErrorKind::InvalidArgument, "sample rate must be positive");
  check_cutoff(f0_hz, fs_hz);
  if (!(q > 0.0)) fail(ErrorKind::InvalidArgument, "notch quality factor must be positive");

  const double k = 2.0 * fs_hz;
  const double w0 = k * std::tan(pi * f0_hz / fs_hz);
  // Forward-backward magnitude is |H|^2, so the single-pass |H|^2 must be at
  // least 10^(-3/20) at both edges (2.9 dB leaves room for rounding). Take the
  // smallest analog Q that satisfies both.
  const double c = std::pow(10.0, -2.9 / 20.0);
  double analog_q = 0.0;
  for (double edge : {f0_hz - f0_hz / (2.0 * q), f0_hz + f0_hz / (2.0 * q)}) {
    if (!(edge > 0.0) || !(edge < fs_hz / 2.0)) continue;
    const double we = k * std::tan(pi * edge / fs_hz);
    analog_q = std::max(analog_q, w0 * we * std::sqrt(c / (1.0 - c)) / std::abs(w0 * w0 - we * we));
  }
  if (analog_q <= 0.0) analog_q = q;

  const double k2 = k * k, w02 = w0 * w0, damp = w0 * k / analog_q;
  const double d0 = k2 + damp + w02;
  Biquad s;
  s.b0 = (k2 + w02) / d0;
  s.b1 = 2.0 * (w02 - k2) / d0;
  s.b2 = s.b0;
  s.a1 = s.b1;
  s.a2 = (k2 - damp + w02) / d0;

  FilterCoefficients out;
  out.sections.push_back(s);
  out.design = {FilterKind::Notch, 2, {f0_hz}, fs_hz};
  return out;
}

namespace {

struct SectionState {
  double s1 = 0.0, s2 = 0.0;
};

void run_cascade(const FilterCoefficients& coeffs, std::vector<double>& x,
                 std::vector<SectionState> state) {
  for (std::size_t i = 0; i < coeffs.sections.size(); ++i) {
    const Biquad& q = coeffs.sections[i];
    double s1 = state[i].s1, s2 = state[i].s2;
    for (double& v : x) {
      const double in = v;
      const double y = q.b0 * in + s1;
      s1 = q.b1 * in - q.a1 * y + s2;
      s2 = q.b2 * in - q.a2 * y;
      v = y;
    }
  }
}

// Steady-state section states for a unit step at the cascade input.
std::vector<SectionState> step_state(const FilterCoefficients& coeffs) {
  std::vector<SectionState> zi(coeffs.sections.size());
  double scale = 1.0;
  for (std::size_t i = 0; i < coeffs.sections.size(); ++i) {
    const Biquad& q = coeffs.sections[i];
    const double g = (q.b0 + q.b1 + q.b2) / (1.0 + q.a1 + q.a2);
    zi[i].s1 = scale * (g - q.b0);
    zi[i].s2 = scale * (q.b2 - q.a2 * g);
    scale *= g;
  }
  return zi;
}

std::vector<SectionState> scaled(std::vector<SectionState> zi, double by) {
  for (auto& s : zi) {
    s.s1 *= by;
    s.s2 *= by;
  }
  return zi;
}

}  // namespace

std::vector<double> filter_forward(const FilterCoefficients& coeffs, std::span<const double> x) {
  std::vector<double> y(x.begin(), x.end());
  run_cascade(coeffs, y, std::vector<SectionState>(coeffs.sections.size()));
  return y;
}

std::size_t filtfilt_padding(const FilterCoefficients& coeffs, std::size_t n) {
  if (n < 2) return 0;
  // At least 3 x order samples; extended until the slowest pole has decayed
  // by 1e-6 so low cutoffs are not dominated by edge transients.
  std::size_t pad = static_cast<std::size_t>(3 * std::max(coeffs.design.order, 1));
  const double r = coeffs.max_pole_radius();
  if (r > 0.0 && r < 1.0) {
    const double settle = std::ceil(std::log(1e-6) / std::log(r));
    if (settle > static_cast<double>(pad)) pad = static_cast<std::size_t>(std::min(settle, 1e9));
  }
  return std::min(pad, n - 1);
}

std::vector<double> filtfilt(const FilterCoefficients& coeffs, std::span<const double> x) {
  const std::size_t n = x.size();
  if (n == 0) return {};
  if (n == 1) return {x[0] * std::abs(coeffs.response(0.0)) * std::abs(coeffs.response(0.0))};
  const std::size_t pad = filtfilt_padding(coeffs, n);

  std::vector<double> ext;
  ext.reserve(n + 2 * pad);
  for (std::size_t i = pad; i >= 1; --i) ext.push_back(2.0 * x[0] - x[i]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t i = 1; i <= pad; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 1 - i]);

  const auto zi = step_state(coeffs);
  run_cascade(coeffs, ext, scaled(zi, ext.front()));
  std::reverse(ext.begin(), ext.end());
  run_cascade(coeffs, ext, scaled(zi, ext.front()));
  std::reverse(ext.begin(), ext.end());

  return std::vector<double>(ext.begin() + static_cast<std::ptrdiff_t>(pad),
                             ext.begin() + static_cast<std::ptrdiff_t>(pad + n));
}

namespace {

void require_uniform_at(const TimeSeries& series, double fs) {
  if (std::abs(series.sample_rate_hz() - fs) > 1e-6 * fs) {
    fail(ErrorKind::SampleRateMismatch, series.subject_id() + "/" + series.phase() + "/" +
                                            series.modality().name + ": series at " +
                                            std::to_string(series.sample_rate_hz()) +
                                            " Hz, filter designed for " + std::to_string(fs) + " Hz");
  }
  if (!series.is_uniform()) {
    fail(ErrorKind::NonUniformSeries, series.subject_id() + "/" + series.phase() + "/" +
                                          series.modality().name + " must be resampled before filtering");
  }
}

}  // namespace

TimeSeries apply_zero_phase(const FilterCoefficients& coeffs, const TimeSeries& series) {
  require_uniform_at(series, coeffs.design.fs_hz);
  return series.with_values(filtfilt(coeffs, series.values()));
}

TimeSeries notch_powerline(const TimeSeries& series, double f0_hz, double q) {
  return apply_zero_phase(design_notch(f0_hz, q, series.sample_rate_hz()), series);
}

namespace {

std::vector<double> interpolate_linear(std::span<const double> t, std::span<const double> v,
                                       std::span<const double> grid) {
  std::vector<double> out(grid.size());
  std::size_t j = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double g = grid[i];
    while (j + 2 < t.size() && t[j + 1] <= g) ++j;
    const double span = t[j + 1] - t[j];
    double a = (g - t[j]) / span;
    a = std::clamp(a, 0.0, 1.0);
    out[i] = v[j] + a * (v[j + 1] - v[j]);
    if (g == t[j + 1]) out[i] = v[j + 1];
    if (g == t[j]) out[i] = v[j];
  }
  return out;
}

std::vector<double> grid_over(double t0, double t_end, double fs) {
  const auto count = static_cast<std::size_t>(std::floor((t_end - t0) * fs + 1e-9)) + 1;
  std::vector<double> g(count);
  for (std::size_t k = 0; k < count; ++k) g[k] = t0 + static_cast<double>(k) / fs;
  return g;
}

}  // namespace

TimeSeries resample_series(const TimeSeries& series, double target_fs_hz) {
  if (!(target_fs_hz > 0.0)) fail(ErrorKind::InvalidArgument, "target sample rate must be positive");
  require_valid(series);
  TimeSeries source = series;
  const double t0 = series.timestamps().front();
  const double t_end = series.timestamps().back();

  if (!source.is_uniform()) {
    // Regularize at the native (median) rate before any filtering.
    auto grid = grid_over(t0, t_end, source.sample_rate_hz());
    auto vals = interpolate_linear(series.timestamps(), series.values(), grid);
    source = TimeSeries(series.subject_id(), series.phase(), series.modality(), std::move(grid),
                        std::move(vals), series.sample_rate_hz());
  }
  if (target_fs_hz < source.sample_rate_hz() * (1.0 - 1e-9)) {
    const double cutoff = 0.45 * target_fs_hz;
    if (cutoff < source.sample_rate_hz() / 2.0) {
      const double edges[] = {cutoff};
      source = apply_zero_phase(design_butterworth(FilterKind::Lowpass, 4, edges, source.sample_rate_hz()),
                                source);
    }
  }
  auto grid = grid_over(t0, t_end, target_fs_hz);
  if (grid.size() < 2) fail(ErrorKind::SeriesTooShort, "resampled series would have fewer than 2 samples");
  auto vals = interpolate_linear(source.timestamps(), source.values(), grid);
  return TimeSeries(series.subject_id(), series.phase(), series.modality(), std::move(grid),
                    std::move(vals), target_fs_hz);
}

}  // namespace affectflow
