#include <doctest.h>

#include <algorithm>

#include "affectflow/filters.hpp"
#include "affectflow/preprocessing.hpp"
#include "test_support.hpp"

using namespace affectflow;
using namespace test_support;

namespace {

FilterCoefficients butter(FilterKind kind, int order, std::vector<double> cutoffs, double fs) {
  return design_butterworth(kind, order, cutoffs, fs);
}

// Attenuation in dB of a tone through the zero-phase filter, measured by
// DFT correlation over the interior of a whole number of periods.
double measured_gain_db(const FilterCoefficients& c, double f_hz, double seconds = 40.0) {
  const double fs = c.design.fs_hz;
  const auto n = static_cast<std::size_t>(seconds * fs);
  const auto x = sine(f_hz, fs, n);
  const auto y = filtfilt(c, x);
  const std::size_t skip = n / 4;
  const std::span<const double> core(y.data() + skip, n - 2 * skip);
  const std::span<const double> ref(x.data() + skip, n - 2 * skip);
  return db(dft_amplitude(core, fs, f_hz) / dft_amplitude(ref, fs, f_hz));
}

}  // namespace

TEST_CASE("Butterworth designs hit -3 dB at every cutoff") {
  struct Case {
    FilterKind kind;
    int order;
    std::vector<double> cutoffs;
    double fs;
  };
  const std::vector<Case> cases{{FilterKind::Lowpass, 4, {5.0}, 700.0},    {FilterKind::Highpass, 2, {0.5}, 250.0},
                                {FilterKind::Highpass, 4, {10.0}, 1000.0}, {FilterKind::Bandpass, 2, {0.1, 0.35}, 32.0},
                                {FilterKind::Bandstop, 3, {45.0, 55.0}, 500.0}, {FilterKind::Lowpass, 1, {20.0}, 100.0}};
  for (const auto& c : cases) {
    const auto f = butter(c.kind, c.order, c.cutoffs, c.fs);
    CHECK(f.stable());
    for (double fc : c.cutoffs) CHECK(f.gain_db(fc) == doctest::Approx(-3.0103).epsilon(0.1 / 3.0));
  }
}

TEST_CASE("highpass order 2 at 0.5 Hz rejects DC") {
  const auto f = butter(FilterKind::Highpass, 2, {0.5}, 250.0);
  CHECK(f.gain_db(0.0) < -60.0);
}

TEST_CASE("design errors") {
  CHECK_THROWS_KIND(butter(FilterKind::Lowpass, 4, {400.0}, 700.0), ErrorKind::CutoffOutOfRange);
  CHECK_THROWS_KIND(butter(FilterKind::Lowpass, 0, {5.0}, 700.0), ErrorKind::InvalidOrder);
  CHECK_THROWS_KIND(butter(FilterKind::Bandpass, 2, {0.35, 0.1}, 32.0), ErrorKind::CutoffOutOfRange);
  CHECK_THROWS_KIND(butter(FilterKind::Bandpass, 2, {0.35}, 32.0), ErrorKind::InvalidArgument);
}

TEST_CASE("coefficient response matches an FFT of the impulse response") {
  for (const auto& f : {butter(FilterKind::Lowpass, 4, {5.0}, 700.0), butter(FilterKind::Bandpass, 2, {0.1, 0.35}, 32.0),
                        design_notch(50.0, 30.0, 700.0)}) {
    const std::size_t n = 1 << 16;
    std::vector<double> impulse(n, 0.0);
    impulse[0] = 1.0;
    const auto h = filter_forward(f, impulse);
    std::vector<std::complex<double>> a(h.begin(), h.end());
    const auto spectrum = fft(a);
    for (std::size_t k = 0; k < n / 2; k += 97) {
      const double freq = static_cast<double>(k) * f.design.fs_hz / static_cast<double>(n);
      CHECK(std::abs(spectrum[k]) == doctest::Approx(std::abs(f.response(freq))).epsilon(1e-6));
    }
  }
}

TEST_CASE("impulse responses decay below 1e-8 within 10 s") {
  for (const auto& f : {butter(FilterKind::Lowpass, 4, {5.0}, 700.0), butter(FilterKind::Highpass, 2, {0.5}, 250.0),
                        butter(FilterKind::Highpass, 4, {10.0}, 700.0), design_notch(50.0, 30.0, 700.0)}) {
    const auto n = static_cast<std::size_t>(10.0 * f.design.fs_hz);
    std::vector<double> impulse(n, 0.0);
    impulse[0] = 1.0;
    const auto h = filter_forward(f, impulse);
    const double tail = std::max(std::abs(h[n - 1]), std::abs(h[n - 2]));
    CHECK(tail < 1e-8);
  }
}

// The 0.1-0.35 Hz respiration bandpass has a pole time constant of several
// seconds, so no stable realization reaches 1e-8 after 10 s. Check instead
// that it settles within the horizon implied by its largest pole radius.
TEST_CASE("respiration bandpass settles within its pole-radius horizon") {
  for (double fs : {32.0, 700.0}) {
    const auto f = butter(FilterKind::Bandpass, 2, {0.1, 0.35}, fs);
    const double r = f.max_pole_radius();
    const auto horizon = static_cast<std::size_t>(std::ceil(std::log(1e-8) / std::log(r)));
    std::vector<double> impulse(horizon + 10, 0.0);
    impulse[0] = 1.0;
    const auto h = filter_forward(f, impulse);
    double tail = 0.0;
    for (std::size_t i = horizon; i < h.size(); ++i) tail = std::max(tail, std::abs(h[i]));
    CHECK(tail < 1e-8);
  }
}

TEST_CASE("filtfilt is linear") {
  Gen g(5);
  const auto f = butter(FilterKind::Bandpass, 2, {0.1, 0.35}, 32.0);
  for (int trial = 0; trial < 20; ++trial) {
    const auto n = static_cast<std::size_t>(g.integer(50, 2000));
    std::vector<double> x(n), y(n), mix(n);
    const double a = g.uniform(-3, 3), b = g.uniform(-3, 3);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = g.normal();
      y[i] = g.normal();
      mix[i] = a * x[i] + b * y[i];
    }
    const auto fx = filtfilt(f, x), fy = filtfilt(f, y), fm = filtfilt(f, mix);
    double scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) scale = std::max(scale, std::abs(fm[i]));
    for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(fm[i] - (a * fx[i] + b * fy[i])) <= 1e-9 * std::max(scale, 1.0));
  }
}

TEST_CASE("zero-phase filtering keeps the length and removes DC through a highpass") {
  const auto s = uniform_series(std::vector<double>(5000, 3.7), 250.0);
  const auto out = apply_zero_phase(butter(FilterKind::Highpass, 2, {0.5}, 250.0), s);
  REQUIRE(out.size() == s.size());
  for (double v : out.values()) CHECK(std::abs(v) < 1e-6);
  CHECK_THROWS_KIND(apply_zero_phase(butter(FilterKind::Highpass, 2, {0.5}, 500.0), s), ErrorKind::SampleRateMismatch);
}

TEST_CASE("zero-phase filtering introduces no delay") {
  const auto f = butter(FilterKind::Lowpass, 4, {5.0}, 700.0);
  const auto x = sine(1.0, 700.0, 7000);
  const auto y = filtfilt(f, x);
  // The 1 Hz passband tone keeps its phase: peak positions coincide.
  for (std::size_t i = 1000; i < 6000; ++i) CHECK(std::abs(y[i] - x[i]) < 1e-3);
}

TEST_CASE("5 Hz lowpass stopband and passband") {
  const auto f = butter(FilterKind::Lowpass, 4, {5.0}, 700.0);
  CHECK(measured_gain_db(f, 50.0) <= -40.0);
  CHECK(std::abs(measured_gain_db(f, 1.0)) <= 1.0);
}

TEST_CASE("powerline notch") {
  const auto s50 = uniform_series(sine(50.0, 700.0, 700 * 20), 700.0);
  const auto out50 = notch_powerline(s50, 50.0, 30.0);
  CHECK(db(rms_core(out50.values()) / rms_core(s50.values())) <= -30.0);
  const auto s10 = uniform_series(sine(10.0, 700.0, 700 * 20), 700.0);
  const auto out10 = notch_powerline(s10, 50.0, 30.0);
  CHECK(std::abs(db(rms_core(out10.values()) / rms_core(s10.values()))) <= 0.5);
  const auto notch = design_notch(50.0, 30.0, 700.0);
  for (double edge : {50.0 - 50.0 / 60.0, 50.0 + 50.0 / 60.0}) CHECK(measured_gain_db(notch, edge, 60.0) >= -3.0);
  CHECK_THROWS_KIND(notch_powerline(uniform_series(sine(1.0, 100.0, 500), 100.0), 60.0, 30.0),
                    ErrorKind::CutoffOutOfRange);
}

TEST_CASE("resampling") {
  const auto src = uniform_series(sine(1.0, 700.0, 700 * 10), 700.0);
  const auto out = resample_series(src, 250.0);
  auto t = out.timestamps();
  for (std::size_t i = 1; i < t.size(); ++i) CHECK(t[i] - t[i - 1] == doctest::Approx(0.004).epsilon(1e-9));
  double worst = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    worst = std::max(worst, std::abs(out.values()[i] - std::sin(2.0 * std::numbers::pi * t[i])));
  }
  CHECK(worst < 1e-3);

  const auto same = resample_series(src, 700.0);
  REQUIRE(same.size() == src.size());
  for (std::size_t i = 0; i < src.size(); ++i) CHECK(std::abs(same.values()[i] - src.values()[i]) < 1e-9);

  TimeSeries irregular("S1", "rest", modality("TEMP"), {0.0, 0.3, 1.0, 1.2, 2.0}, {0, 3, 10, 12, 20});
  const auto reg = resample_series(irregular, 10.0);
  CHECK(reg.is_uniform(1e-9));
  CHECK(reg.values()[5] == doctest::Approx(5.0));  // linear between (0.3, 3) and (1.0, 10)
}

TEST_CASE("default chains") {
  const auto resp = default_chain(Modality{"RESP", "", {}}, 700.0);
  REQUIRE(resp.size() == 1);
  const auto& bp = std::get<ButterworthStep>(resp[0]);
  CHECK(bp.kind == FilterKind::Bandpass);
  CHECK(bp.cutoffs_hz == std::vector<double>{0.1, 0.35});
  CHECK(default_chain(Modality{"TEMP", "", {}}, 4.0).empty());
  const auto eda = default_chain(Modality{"EDA", "", {}}, 700.0);
  REQUIRE(eda.size() == 1);
  CHECK(std::get<ButterworthStep>(eda[0]).cutoffs_hz == std::vector<double>{5.0});
  CHECK(std::get<ButterworthStep>(eda[0]).kind == FilterKind::Lowpass);
  const auto ecg = default_chain(Modality{"ECG", "", {}}, 250.0);
  REQUIRE(ecg.size() == 2);
  CHECK(std::get<ButterworthStep>(ecg[0]).kind == FilterKind::Highpass);
  CHECK(std::get<NotchStep>(ecg[1]).f0_hz == 50.0);
  CHECK(std::get<ButterworthStep>(default_chain(Modality{"EMG", "", {}}, 1000.0)[0]).cutoffs_hz[0] == 10.0);
  CHECK_THROWS_KIND(default_chain(Modality{"BVP", "", {}}, 64.0), ErrorKind::UnknownModality);
  // EDA sampled at 4 Hz: the 5 Hz lowpass is above Nyquist and left out.
  CHECK(default_chain(Modality{"EDA", "", {}}, 4.0).empty());
}

TEST_CASE("preprocess preserves shape and applies overrides") {
  SubjectBundle b;
  Gen g(9);
  for (const char* s : {"S1", "S2"}) {
    for (const auto& [m, fs] : {std::pair{"ECG", 250.0}, {"EDA", 32.0}, {"TEMP", 4.0}}) {
      std::vector<double> v(static_cast<std::size_t>(fs * 30));
      for (auto& x : v) x = g.normal();
      b.add(uniform_series(v, fs, m, s));
    }
  }
  std::map<std::string, PreprocessChain> custom;
  custom["EDA"] = {CustomStep{"negate", [](const TimeSeries& t) {
                     std::vector<double> v(t.values().begin(), t.values().end());
                     for (auto& x : v) x = -x;
                     return t.with_values(v);
                   }}};
  const auto out = preprocess(b, custom);
  CHECK(out.subject_count() == 2);
  CHECK(out.series_count() == 6);
  for (const auto& [subject, list] : b.entries()) {
    for (const auto& s : list) {
      const auto* o = out.find(subject, s.phase(), s.modality().name);
      REQUIRE(o != nullptr);
      CHECK(o->size() == s.size());
      if (s.modality().name == "EDA") CHECK(o->values()[7] == -s.values()[7]);
      if (s.modality().name == "TEMP") CHECK(o->values()[7] == s.values()[7]);
    }
  }
  PreprocessOptions opt;
  opt.resample_rate_hz = 2.0;
  const auto resampled = preprocess(b, {}, opt);
  CHECK(resampled.find("S1", "rest", "TEMP")->sample_rate_hz() == 2.0);
}

TEST_CASE("preprocess aggregates errors with context") {
  SubjectBundle b;
  b.add(uniform_series(std::vector<double>(100, 0.0), 10.0, "BVP", "S1"));
  b.add(uniform_series(std::vector<double>(100, 0.0), 10.0, "BVP", "S2"));
  try {
    preprocess(b, {});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::UnknownModality);
    const std::string msg = e.what();
    CHECK(msg.find("S1/rest/BVP") != std::string::npos);
    CHECK(msg.find("S2/rest/BVP") != std::string::npos);
  }
}

TEST_CASE("default ECG chain removes powerline interference and keeps QRS amplitude") {
  const double fs = 500.0;
  const std::size_t n = static_cast<std::size_t>(fs * 30);
  std::vector<double> clean(n, 0.0);
  for (double beat = 0.5; beat < 30.0; beat += 0.8) {
    for (std::size_t i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) / fs - beat;
      clean[i] += std::exp(-t * t / (2.0 * 0.01 * 0.01));
    }
  }
  const auto hum = sine(50.0, fs, n, 0.3);
  std::vector<double> noisy(n);
  for (std::size_t i = 0; i < n; ++i) noisy[i] = clean[i] + hum[i];
  const auto s = uniform_series(noisy, fs, "ECG");
  const auto out = apply_chain(default_chain(s.modality(), fs), s);
  const auto clean_out = apply_chain(default_chain(s.modality(), fs), uniform_series(clean, fs, "ECG"));
  std::vector<double> residual(n);
  for (std::size_t i = 0; i < n; ++i) residual[i] = out.values()[i] - clean_out.values()[i];
  CHECK(db(rms_core(residual) / rms_core(hum)) <= -30.0);
  for (double beat = 2.1; beat < 28.0; beat += 0.8) {
    const auto i = static_cast<std::size_t>(beat * fs);
    CHECK(out.values()[i] == doctest::Approx(clean[i]).epsilon(0.10));
  }
}
