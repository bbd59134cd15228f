#include <doctest.h>

#include <algorithm>

#include "affectflow/eda.hpp"
#include "affectflow/emg.hpp"
#include "affectflow/resp.hpp"
#include "affectflow/statistics.hpp"
#include "affectflow/synth.hpp"
#include "affectflow/windowing.hpp"
#include "test_support.hpp"

using namespace affectflow;
using namespace test_support;

namespace {

/// Bi-exponential transient with rise and decay time constants, peak normalized to 1.
double scr_shape(double dt, double tr = 1.0, double td = 4.0) {
  if (dt < 0.0) return 0.0;
  const double tp = std::log(td / tr) * tr * td / (td - tr);
  const double peak = std::exp(-tp / td) - std::exp(-tp / tr);
  return (std::exp(-dt / td) - std::exp(-dt / tr)) / peak;
}

double phasic_peak_fraction(double tr, double td) {
  const double fs = 32.0;
  std::vector<double> x(static_cast<std::size_t>(fs * 120));
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double t = static_cast<double>(i) / fs;
    x[i] = 3.0 + 0.01 * t + 0.5 * scr_shape(t - 60.0, tr, td);
  }
  const auto d = decompose_eda(uniform_series(x, fs, "EDA"));
  const auto& p = d.phasic.values();
  return *std::max_element(p.begin(), p.end()) / 0.5;
}

}  // namespace

// --- EDA -------------------------------------------------------------------

TEST_CASE("tonic plus phasic reconstructs the input") {
  Gen g(2);
  for (int trial = 0; trial < 20; ++trial) {
    const auto n = static_cast<std::size_t>(g.integer(64, 4000));
    std::vector<double> x(n);
    double level = g.uniform(1.0, 10.0);
    for (auto& v : x) v = (level += 0.01 * g.normal());
    const auto d = decompose_eda(uniform_series(x, 32.0, "EDA"));
    for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(d.tonic.values()[i] + d.phasic.values()[i] - x[i]) <= 1e-6);
  }
}

TEST_CASE("a slow ramp is tonic") {
  std::vector<double> x(32 * 300);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = 2.0 + 3.0 * static_cast<double>(i) / static_cast<double>(x.size());
  const auto d = decompose_eda(uniform_series(x, 32.0, "EDA"));
  double worst = 0.0;
  for (double v : d.phasic.values()) worst = std::max(worst, std::abs(v));
  CHECK(worst < 0.02 * 3.0);
}

// A 1 s rise / 4 s decay response has much of its energy below the 0.05 Hz
// split, so only about half of its peak stays phasic.
TEST_CASE("a generator-shaped SCR keeps about half of its peak in the phasic component") {
  const double f = phasic_peak_fraction(1.0, 4.0);
  CHECK(f >= 0.5);
  CHECK(f < 0.9);
}

TEST_CASE("SCR events: injected responses, flat input and sub-threshold responses") {
  SynthSpec spec;
  spec.duration_s = 60.0;
  spec.eda.drift_us = 0.0;
  spec.eda.scr_times_s = {8.0, 26.0, 44.0};
  spec.eda.scr_amplitudes_us = {0.5, 0.5, 0.5};
  const auto three = scr_events(synth_eda(spec).series, 0.01);
  CHECK(three.count == 3);
  CHECK(three.rate_per_min == doctest::Approx(3.0).epsilon(0.01));
  CHECK(three.mean_amplitude_us == doctest::Approx(0.5).epsilon(0.1));

  CHECK(scr_events(uniform_series(std::vector<double>(32 * 60, 4.0), 32.0, "EDA"), 0.01).count == 0);

  spec.eda.scr_amplitudes_us = {0.005, 0.005, 0.005};
  CHECK(scr_events(synth_eda(spec).series, 0.01).count == 0);
}

TEST_CASE("non-overlapping SCRs at least twice the threshold are recovered exactly") {
  Gen g(55);
  int wrong = 0;
  for (int trial = 0; trial < 100; ++trial) {
    SynthSpec spec;
    spec.seed = static_cast<std::uint64_t>(trial);
    spec.duration_s = g.uniform(60.0, 300.0);
    spec.eda.scl_baseline_us = g.uniform(1.0, 15.0);
    spec.eda.drift_us = g.uniform(0.0, 0.3);
    const double threshold = g.uniform(0.01, 0.1);
    for (double t = g.uniform(2.0, 10.0); t < spec.duration_s - 20.0; t += g.uniform(15.0, 40.0)) {
      spec.eda.scr_times_s.push_back(t);
      spec.eda.scr_amplitudes_us.push_back(g.uniform(2.0 * threshold, 1.5));
    }
    const auto sig = synth_eda(spec);
    const auto found = scr_events(sig.series, threshold);
    if (found.count != sig.truth.scr_count) {
      ++wrong;
      MESSAGE("trial " << trial << ": " << found.count << " found, " << sig.truth.scr_count << " injected");
    }
  }
  CHECK(wrong == 0);
}

TEST_CASE("summarize_scr counts peaks inside the range") {
  const std::vector<SCREvent> events{{0, 10, 0.2}, {20, 30, 0.4}, {40, 50, 0.6}};
  const auto s = summarize_scr(events, 10, 50, 30.0);
  CHECK(s.count == 2);
  CHECK(s.rate_per_min == doctest::Approx(4.0));
  CHECK(s.mean_amplitude_us == doctest::Approx(0.3));
}

// --- RESP ------------------------------------------------------------------

TEST_CASE("sinusoidal breathing at 15 breaths/min") {
  const auto x = sine(0.25, 32.0, 32 * 120);
  const auto f = resp_features(x, 32.0);
  CHECK(f.breath_rate_per_min == doctest::Approx(15.0).epsilon(0.5 / 15.0));
  CHECK(f.inhale_exhale_ratio == doctest::Approx(1.0).epsilon(0.05));
  CHECK(f.maxima_mean == doctest::Approx(1.0).epsilon(0.01));
  CHECK(f.minima_mean == doctest::Approx(-1.0).epsilon(0.01));
}

TEST_CASE("breathing rate follows the generator across rates") {
  for (double bpm : {8.0, 12.0, 18.0, 24.0}) {
    SynthSpec spec;
    spec.duration_s = 120.0;
    spec.resp.breaths_per_min = bpm;
    const auto sig = synth_resp(spec);
    std::vector<double> centered(sig.series.values().begin(), sig.series.values().end());
    const double m = mean_of(centered);
    for (auto& v : centered) v -= m;
    const auto f = resp_features(centered, spec.resp.fs_hz);
    CAPTURE(bpm);
    CHECK(f.breath_rate_per_min == doctest::Approx(bpm).epsilon(0.5 / bpm));
    CHECK(f.inhale_mean_s < f.exhale_mean_s);  // inhale_fraction 0.4
  }
}

TEST_CASE("flat respiration has no breaths") {
  CHECK_THROWS_KIND(resp_features(std::vector<double>(32 * 60, 0.0), 32.0), ErrorKind::NoBreathsDetected);
}

// --- EMG -------------------------------------------------------------------

TEST_CASE("white-noise EMG spreads energy evenly across bands") {
  Gen g(9);
  std::vector<double> x(1000 * 60);
  for (auto& v : x) v = g.normal();
  const auto e = emg_band_energies(x, 1000.0);
  REQUIRE(e.size() == 10);
  const auto [lo, hi] = std::minmax_element(e.begin(), e.end());
  CHECK(*hi / *lo < 2.0);
}

TEST_CASE("a 100 Hz tone lands in its own band") {
  const auto x = sine(100.0, 1000.0, 1000 * 60);
  const auto e = emg_band_energies(x, 1000.0);
  double total = 0.0;
  for (double v : e) total += v;
  CHECK(e[2] >= 0.8 * total);  // 70-105 Hz
}

TEST_CASE("EMG below 700 Hz sampling is rejected") {
  CHECK_THROWS_KIND(emg_band_energies(std::vector<double>(250 * 60, 0.0), 250.0), ErrorKind::SampleRateTooLow);
  CHECK_THROWS_KIND(emg_features(std::vector<double>(250 * 60, 0.0), 250.0), ErrorKind::SampleRateTooLow);
}

TEST_CASE("EMG peak features and subwindow statistics") {
  const std::vector<double> x{0, 0, 5, 0, 0, 0, 7, 0, 0, 0};
  const auto p = emg_peak_features(x);
  CHECK(p.count == 2);
  CHECK(p.max_amplitude == 7.0);
  CHECK(p.mean_amplitude == doctest::Approx(6.0));

  // Two 5 s blocks with constant values 1 and 3: per-block std is 0.
  std::vector<double> blocks(10, 1.0);
  std::fill(blocks.begin() + 5, blocks.end(), 3.0);
  const auto s = emg_subwindow_statistics(blocks, 1.0);
  CHECK(s.mean == doctest::Approx(2.0));
  CHECK(s.std == doctest::Approx(0.0));
}

TEST_CASE("emg_features fills both groups") {
  Gen g(10);
  std::vector<double> x(1000 * 20);
  for (auto& v : x) v = 0.05 * g.normal();
  const auto f = emg_features(x, 1000.0);
  CHECK(f.band_energy.size() == 10);
  CHECK(f.highpassed.std > 0.0);
  CHECK(f.lowpassed.std > 0.0);
  CHECK(f.peaks.count > 0.0);
}

// --- statistics ------------------------------------------------------------

TEST_CASE("statistical features on small cases") {
  const std::vector<double> x{1, 2, 3};
  const auto s = statistical_features(x, 1.0);
  CHECK(s.mean == 2.0);
  CHECK(s.median == 2.0);
  CHECK(s.var == doctest::Approx(2.0 / 3.0));
  CHECK(s.slope == doctest::Approx(1.0));
  CHECK(s.min == 1.0);
  CHECK(s.max == 3.0);

  const auto c = statistical_features(std::vector<double>(7, 4.5), 10.0);
  CHECK(c.std == 0.0);
  CHECK(c.slope == 0.0);

  CHECK_THROWS_KIND(statistical_features(std::vector<double>{1.0}), ErrorKind::TooFewSamples);
  CHECK(median_of(std::vector<double>{4, 1, 3, 2}) == 2.5);
}

TEST_CASE("slope matches the normal-equation oracle") {
  Gen g(12);
  for (int trial = 0; trial < 200; ++trial) {
    const auto n = static_cast<std::size_t>(g.integer(2, 300));
    const double fs = g.uniform(0.5, 1000.0);
    const auto y = g.uniforms(n, -100.0, 100.0);
    // Normal equations for y = a + b t in closed form.
    long double st = 0, sy = 0, stt = 0, sty = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const long double t = static_cast<long double>(i) / fs;
      st += t;
      sy += y[i];
      stt += t * t;
      sty += t * y[i];
    }
    const double b = static_cast<double>((n * sty - st * sy) / (n * stt - st * st));
    const auto s = statistical_features(y, fs);
    CHECK(std::abs(s.slope - b) <= 1e-9 * std::max(1.0, std::abs(b)));
  }
}

// --- windowing -------------------------------------------------------------

TEST_CASE("window counts on the worked examples") {
  WindowingPolicy p{60.0, 30.0, true};
  CHECK(window_count(180.0, p) == 5);
  CHECK(window_count(60.0, p) == 1);
  CHECK(segment(uniform_series(std::vector<double>(181 * 4, 0.0), 4.0), p).size() == 5);
  CHECK_THROWS_KIND(window_spans(uniform_series(std::vector<double>(59 * 4, 0.0), 4.0), p),
                    ErrorKind::SeriesTooShort);
  CHECK_THROWS_KIND((WindowingPolicy{30.0, 60.0, true}.validate()), ErrorKind::InvalidArgument);
  CHECK_THROWS_KIND((WindowingPolicy{30.0, 0.0, true}.validate()), ErrorKind::InvalidArgument);
}

TEST_CASE("windows follow the count law and span [k*step, k*step + window)") {
  Gen g(13);
  for (int trial = 0; trial < 300; ++trial) {
    const double fs = static_cast<double>(g.integer(1, 64));
    const double window = static_cast<double>(g.integer(1, 60));
    const double step = static_cast<double>(g.integer(1, static_cast<long>(window)));
    const auto n = static_cast<std::size_t>(g.integer(static_cast<long>(window * fs), static_cast<long>(400 * fs)));
    const auto series = uniform_series(std::vector<double>(n, 1.0), fs);
    const double T = static_cast<double>(n) / fs;
    const WindowingPolicy p{window, step, true};
    const auto spans = window_spans(series, p);
    CHECK(spans.size() == static_cast<std::size_t>(std::floor((T - window) / step + 1e-9)) + 1);
    for (std::size_t k = 0; k < spans.size(); ++k) {
      CHECK(spans[k].index == k);
      CHECK(spans[k].t_begin == doctest::Approx(k * step));
      CHECK(spans[k].t_end == doctest::Approx(k * step + window));
      CHECK(spans[k].size() == static_cast<std::size_t>(std::llround(window * fs)));
    }
    if (!spans.empty()) {
      const auto partial = window_spans(series, WindowingPolicy{window, step, false});
      CHECK(partial.size() >= spans.size());
      CHECK(partial.size() <= spans.size() + 1);
    }
  }
}
