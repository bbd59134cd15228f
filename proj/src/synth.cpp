#include "affectflow/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "affectflow/acquisition.hpp"
#include "affectflow/csv.hpp"
#include "affectflow/error.hpp"
#include "affectflow/filters.hpp"
#include "affectflow/labels.hpp"

namespace affectflow {

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double Rng::normal() {
  if (spare_) {
    const double v = *spare_;
    spare_.reset();
    return v;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
  return r * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  auto splitmix = [](std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  };
  std::uint64_t h = splitmix(seed);
  for (std::uint64_t w : {a, b, c}) h = splitmix(h ^ w);
  return h;
}

namespace {

enum ModalitySalt : std::uint64_t { kEcg = 11, kEda = 12, kResp = 13, kEmg = 14, kTemp = 15 };

double quantize(double v) { return std::round(v * 1e6) / 1e6; }

void require_rate(double value, const std::string& what) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    fail(ErrorKind::InvalidRate, what + " must be positive, got " + csv::format_double(value));
  }
}

std::size_t sample_count(double duration_s, double fs_hz) {
  return static_cast<std::size_t>(std::floor(duration_s * fs_hz + 1e-9));
}

TimeSeries make_series(const SynthSpec& spec, const std::string& modality, double fs, std::vector<double> values) {
  for (double& v : values) v = quantize(v);
  const auto& reg = SignalRegistry::builtin();
  return TimeSeries::uniform(spec.subject_id, spec.phase, reg.at(modality), 0.0, fs, std::move(values));
}

double rmssd_of(const std::vector<double>& rr) {
  double ss = 0.0;
  for (std::size_t i = 1; i < rr.size(); ++i) ss += (rr[i] - rr[i - 1]) * (rr[i] - rr[i - 1]);
  return rr.size() < 2 ? 0.0 : std::sqrt(ss / static_cast<double>(rr.size() - 1));
}

struct Wave {
  double offset_s, amplitude_mv, width_s;
};

constexpr Wave kPqrst[] = {
    {-0.16, 0.12, 0.025}, {-0.03, -0.12, 0.008}, {0.0, 1.0, 0.010}, {0.03, -0.25, 0.008}, {0.28, 0.30, 0.045}};

}  // namespace

SynthSignal synth_ecg(const SynthSpec& spec) {
  const auto& e = spec.ecg;
  if (!(e.hr_bpm >= 30.0 && e.hr_bpm <= 220.0)) {
    fail(ErrorKind::InvalidRate, "heart rate must lie in [30, 220] BPM, got " + csv::format_double(e.hr_bpm));
  }
  require_rate(e.fs_hz, "ECG sample rate");
  require_rate(spec.duration_s, "duration");
  if (e.rmssd_target_s < 0.0) fail(ErrorKind::InvalidRate, "RMSSD target must be non-negative");

  Rng rng(mix_seed(spec.seed, kEcg));
  const double base = 60.0 / e.hr_bpm;
  const auto n_est = static_cast<std::size_t>(std::ceil(spec.duration_s / base)) + 4;
  std::vector<double> jitter(n_est);
  for (double& j : jitter) j = rng.normal();
  double mean = 0.0;
  for (double j : jitter) mean += j;
  mean /= static_cast<double>(n_est);
  for (double& j : jitter) j -= mean;

  // Rescale the jitter until the intervals that fit in the recording carry
  // exactly the target RMSSD (the kept count can shift as intervals change).
  std::vector<double> beats;
  double scale = 0.0;
  if (e.rmssd_target_s > 0.0) {
    const double r = rmssd_of(jitter);
    scale = r > 0.0 ? e.rmssd_target_s / r : 0.0;
  }
  for (int pass = 0; pass < 6; ++pass) {
    beats.clear();
    double t = base / 2.0;
    std::size_t i = 0;
    while (t < spec.duration_s && i < n_est) {
      beats.push_back(t);
      t += std::max(base + scale * jitter[i++], 0.25 * base);
    }
    if (e.rmssd_target_s <= 0.0 || beats.size() < 3) break;
    std::vector<double> rr;
    for (std::size_t k = 1; k < beats.size(); ++k) rr.push_back(beats[k] - beats[k - 1]);
    const double got = rmssd_of(rr);
    if (got <= 0.0 || std::abs(got - e.rmssd_target_s) <= 1e-6 * e.rmssd_target_s) break;
    scale *= e.rmssd_target_s / got;
  }

  const std::size_t n = sample_count(spec.duration_s, e.fs_hz);
  std::vector<double> x(n, 0.0);
  for (double b : beats) {
    const auto lo = static_cast<std::ptrdiff_t>(std::floor((b - 0.4) * e.fs_hz));
    const auto hi = static_cast<std::ptrdiff_t>(std::ceil((b + 0.5) * e.fs_hz));
    for (auto k = std::max<std::ptrdiff_t>(lo, 0); k < std::min<std::ptrdiff_t>(hi, static_cast<std::ptrdiff_t>(n)); ++k) {
      const double t = static_cast<double>(k) / e.fs_hz - b;
      for (const auto& w : kPqrst) {
        const double z = (t - w.offset_s) / w.width_s;
        x[static_cast<std::size_t>(k)] += w.amplitude_mv * std::exp(-0.5 * z * z);
      }
    }
  }
  double power = 0.0;
  for (double v : x) power += v * v;
  power /= static_cast<double>(std::max<std::size_t>(n, 1));
  const double sigma = std::sqrt(power / std::pow(10.0, e.noise_snr_db / 10.0));
  for (double& v : x) v += sigma * rng.normal();

  SynthSignal out{make_series(spec, "ECG", e.fs_hz, std::move(x)), {}};
  out.truth.beat_times_s = std::move(beats);
  out.truth.class_label = spec.class_label;
  return out;
}

SynthSignal synth_eda(const SynthSpec& spec) {
  const auto& e = spec.eda;
  require_rate(e.fs_hz, "EDA sample rate");
  require_rate(spec.duration_s, "duration");
  if (e.scr_times_s.size() != e.scr_amplitudes_us.size()) {
    fail(ErrorKind::InvalidArgument, "SCR times and amplitudes differ in length");
  }
  for (std::size_t i = 0; i < e.scr_times_s.size(); ++i) {
    if (!(e.scr_times_s[i] >= 0.0 && e.scr_times_s[i] < spec.duration_s)) {
      fail(ErrorKind::SCROutOfRange, "SCR onset " + csv::format_double(e.scr_times_s[i]) + " s outside [0, " +
                                         csv::format_double(spec.duration_s) + ")");
    }
    if (!(e.scr_amplitudes_us[i] > 0.0)) {
      fail(ErrorKind::SCROutOfRange, "SCR amplitude must be positive, got " +
                                         csv::format_double(e.scr_amplitudes_us[i]));
    }
  }
  constexpr double rise = 1.0, decay = 4.0;
  const double t_peak = std::log(decay / rise) * rise * decay / (decay - rise);
  const double norm = std::exp(-t_peak / decay) - std::exp(-t_peak / rise);

  Rng rng(mix_seed(spec.seed, kEda));
  const double drift_phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const std::size_t n = sample_count(spec.duration_s, e.fs_hz);
  std::vector<double> x(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) / e.fs_hz;
    double v = e.scl_baseline_us + e.drift_us * std::sin(2.0 * std::numbers::pi * 0.003 * t + drift_phase);
    for (std::size_t i = 0; i < e.scr_times_s.size(); ++i) {
      const double d = t - e.scr_times_s[i];
      if (d > 0.0) v += e.scr_amplitudes_us[i] * (std::exp(-d / decay) - std::exp(-d / rise)) / norm;
    }
    if (e.noise_us > 0.0) v += e.noise_us * rng.normal();
    x[k] = v;
  }
  SynthSignal out{make_series(spec, "EDA", e.fs_hz, std::move(x)), {}};
  out.truth.scr_times_s = e.scr_times_s;
  out.truth.scr_count = e.scr_times_s.size();
  out.truth.class_label = spec.class_label;
  return out;
}

SynthSignal synth_resp(const SynthSpec& spec) {
  const auto& r = spec.resp;
  require_rate(r.fs_hz, "RESP sample rate");
  require_rate(r.breaths_per_min, "breathing rate");
  require_rate(spec.duration_s, "duration");
  if (!(r.inhale_fraction > 0.0 && r.inhale_fraction < 1.0)) {
    fail(ErrorKind::InvalidArgument, "inhale fraction must lie in (0, 1)");
  }
  Rng rng(mix_seed(spec.seed, kResp));
  const double period = 60.0 / r.breaths_per_min;
  const std::size_t n = sample_count(spec.duration_s, r.fs_hz);
  std::vector<double> x(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) / r.fs_hz;
    const double u = t / period - std::floor(t / period);
    const double f = r.inhale_fraction;
    const double v = u < f ? -std::cos(std::numbers::pi * u / f) : std::cos(std::numbers::pi * (u - f) / (1.0 - f));
    x[k] = r.amplitude * v + r.noise * rng.normal();
  }
  SynthSignal out{make_series(spec, "RESP", r.fs_hz, std::move(x)), {}};
  out.truth.breath_count = static_cast<std::size_t>(std::floor(spec.duration_s / period + 1e-9));
  out.truth.class_label = spec.class_label;
  return out;
}

SynthSignal synth_emg(const SynthSpec& spec) {
  const auto& m = spec.emg;
  require_rate(m.fs_hz, "EMG sample rate");
  require_rate(spec.duration_s, "duration");
  Rng rng(mix_seed(spec.seed, kEmg));
  const std::size_t n = sample_count(spec.duration_s, m.fs_hz);
  std::vector<double> x(n, 0.0);
  if (m.band_profile.empty()) {
    for (double& v : x) v = m.amplitude_mv * rng.normal();
  } else {
    const double width = 350.0 / static_cast<double>(m.band_profile.size());
    std::vector<double> noise(n);
    for (std::size_t b = 0; b < m.band_profile.size(); ++b) {
      if (m.band_profile[b] == 0.0) continue;
      for (double& v : noise) v = rng.normal();
      const double lo = width * static_cast<double>(b), hi = width * static_cast<double>(b + 1);
      if (hi >= m.fs_hz / 2.0) fail(ErrorKind::InvalidRate, "EMG band profile exceeds the Nyquist frequency");
      const auto coeffs = b == 0 ? design_butterworth(FilterKind::Lowpass, 4, std::vector<double>{hi}, m.fs_hz)
                                 : design_butterworth(FilterKind::Bandpass, 4, std::vector<double>{lo, hi}, m.fs_hz);
      const auto y = filtfilt(coeffs, noise);
      for (std::size_t k = 0; k < n; ++k) x[k] += m.amplitude_mv * m.band_profile[b] * y[k];
    }
  }
  SynthSignal out{make_series(spec, "EMG", m.fs_hz, std::move(x)), {}};
  out.truth.class_label = spec.class_label;
  return out;
}

SynthSignal synth_temp(const SynthSpec& spec) {
  const auto& c = spec.temp;
  require_rate(c.fs_hz, "TEMP sample rate");
  require_rate(spec.duration_s, "duration");
  Rng rng(mix_seed(spec.seed, kTemp));
  const std::size_t n = sample_count(spec.duration_s, c.fs_hz);
  std::vector<double> x(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) / c.fs_hz;
    x[k] = c.baseline_c + c.slope_c_per_min * t / 60.0 + c.noise_c * rng.normal();
  }
  SynthSignal out{make_series(spec, "TEMP", c.fs_hz, std::move(x)), {}};
  out.truth.class_label = spec.class_label;
  return out;
}

SynthSignal synth_signal(const SynthSpec& spec, const std::string& modality) {
  const auto m = canonical_modality_name(modality);
  if (m == "ECG") return synth_ecg(spec);
  if (m == "EDA") return synth_eda(spec);
  if (m == "RESP") return synth_resp(spec);
  if (m == "EMG") return synth_emg(spec);
  if (m == "TEMP") return synth_temp(spec);
  fail(ErrorKind::UnknownModality, "no generator for modality '" + modality + "'");
}

PhaseRecipe phase_recipe(const std::string& name) {
  if (name == "rest" || name == "baseline") return {};
  if (name == "stress") return {25.0, 0.5, 4.0, 4.0, 1.5, -0.1, true};
  if (name == "amusement") return {8.0, 0.85, 2.0, 2.0, 1.0, 0.0, false};
  fail(ErrorKind::InvalidArgument, "unknown phase recipe '" + name + "' (rest, baseline, stress, amusement)");
}

void validate_synth_dataset_spec(const SynthDatasetSpec& spec) {
  if (spec.subjects == 0) fail(ErrorKind::InvalidArgument, "at least one subject is required");
  if (spec.subject_prefix.empty() || spec.subject_prefix.find('_') != std::string::npos) {
    fail(ErrorKind::InvalidArgument, "subject prefix must be non-empty and free of '_'");
  }
  if (spec.phases.empty()) fail(ErrorKind::InvalidArgument, "at least one phase is required");
  std::set<std::string> names;
  for (const auto& p : spec.phases) {
    if (p.name.empty() || p.name.find('_') != std::string::npos || p.name.find('/') != std::string::npos) {
      fail(ErrorKind::InvalidArgument, "phase name '" + p.name + "' must be non-empty and free of '_' and '/'");
    }
    if (!names.insert(p.name).second) fail(ErrorKind::InvalidArgument, "duplicate phase '" + p.name + "'");
    phase_recipe(p.recipe);
  }
  if (spec.modalities.empty()) fail(ErrorKind::InvalidArgument, "at least one modality is required");
  require_rate(spec.duration_s, "duration");
  for (const auto& m : spec.modalities) {
    const auto name = canonical_modality_name(m);
    if (name != "ECG" && name != "EDA" && name != "RESP" && name != "EMG" && name != "TEMP") {
      fail(ErrorKind::UnknownModality, "no generator for modality '" + m + "'");
    }
    auto it = spec.fs_hz.find(name);
    if (it == spec.fs_hz.end()) fail(ErrorKind::InvalidRate, "no sample rate for " + name);
    require_rate(it->second, name + " sample rate");
  }
  for (auto [v, what] : {std::pair{spec.hr_bpm, "hr_bpm"}, {spec.rmssd_s, "rmssd_s"}, {spec.scl_us, "scl_us"},
                         {spec.scr_amplitude_us, "scr_amplitude_us"}, {spec.breaths_per_min, "breaths_per_min"}}) {
    require_rate(v, what);
  }
  if (!(spec.scr_per_min >= 0.0)) fail(ErrorKind::InvalidRate, "scr_per_min must be non-negative");
  if (!(spec.subject_spread >= 0.0 && spec.subject_spread < 1.0)) {
    fail(ErrorKind::InvalidArgument, "subject_spread must lie in [0, 1)");
  }
}

static std::string subject_name(const SynthDatasetSpec& spec, std::size_t subject) {
  return spec.subject_prefix + std::to_string(subject + 1);
}

SynthSpec subject_phase_spec(const SynthDatasetSpec& spec, std::size_t subject, std::size_t phase) {
  const auto& ph = spec.phases.at(phase);
  const auto recipe = phase_recipe(ph.recipe);
  Rng person(mix_seed(spec.seed, 1, subject));
  auto vary = [&](double mean) { return mean * (1.0 + spec.subject_spread * person.uniform(-1.0, 1.0)); };

  SynthSpec s;
  s.subject_id = subject_name(spec, subject);
  s.phase = ph.name;
  s.duration_s = spec.duration_s;
  s.seed = mix_seed(spec.seed, 2, subject, phase);
  s.class_label = ph.class_label;
  auto rate = [&](const char* m) { return spec.fs_hz.count(m) ? spec.fs_hz.at(m) : 1.0; };

  const double hr = vary(spec.hr_bpm), rmssd = vary(spec.rmssd_s), scl = vary(spec.scl_us);
  const double scr_rate = vary(spec.scr_per_min), scr_amp = vary(spec.scr_amplitude_us);
  const double breaths = vary(spec.breaths_per_min), temp = vary(spec.temp_c);

  s.ecg = {std::clamp(hr + recipe.hr_delta_bpm, 30.0, 220.0), rmssd * recipe.rmssd_factor, spec.snr_db, rate("ECG")};

  s.eda.scl_baseline_us = scl;
  s.eda.fs_hz = rate("EDA");
  Rng events(mix_seed(s.seed, 99));
  const auto count = static_cast<std::size_t>(std::lround(scr_rate * recipe.scr_rate_factor * spec.duration_s / 60.0));
  const double spacing = count ? spec.duration_s / static_cast<double>(count) : 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    s.eda.scr_times_s.push_back((static_cast<double>(i) + 0.5 + 0.3 * events.uniform(-1.0, 1.0)) * spacing);
    s.eda.scr_amplitudes_us.push_back(scr_amp * events.uniform(0.6, 1.4));
  }

  s.resp.breaths_per_min = breaths + recipe.resp_delta_bpm;
  s.resp.fs_hz = rate("RESP");
  s.emg.amplitude_mv = 0.05 * recipe.emg_factor;
  s.emg.fs_hz = rate("EMG");
  s.temp.baseline_c = temp;
  s.temp.slope_c_per_min = recipe.temp_slope_c_per_min;
  s.temp.fs_hz = rate("TEMP");
  return s;
}

SynthDatasetResult synth_dataset(const SynthDatasetSpec& spec, const std::filesystem::path& root) {
  validate_synth_dataset_spec(spec);
  SynthDatasetResult result;
  std::string manifest = "subject,phase,modality,key,value\n";
  auto record = [&](const std::string& subj, const std::string& phase, const std::string& mod, const std::string& key,
                    double value) {
    manifest += subj + "," + phase + "," + mod + "," + key + "," + csv::format_double(value) + "\n";
  };

  for (std::size_t s = 0; s < spec.subjects; ++s) {
    const std::string subject = subject_name(spec, s);
    std::vector<SelfReport> reports;
    for (std::size_t p = 0; p < spec.phases.size(); ++p) {
      const auto sp = subject_phase_spec(spec, s, p);
      const auto& phase = spec.phases[p].name;
      record(subject, phase, "-", "class_label", spec.phases[p].class_label);
      for (const auto& m : spec.modalities) {
        const auto mod = canonical_modality_name(m);
        const auto sig = synth_signal(sp, mod);
        write_csv_signal(sig.series, signal_file_path(root, subject, phase, mod));
        ++result.signal_files;
        if (mod == "ECG") {
          const auto& b = sig.truth.beat_times_s;
          std::vector<double> rr;
          for (std::size_t i = 1; i < b.size(); ++i) rr.push_back(b[i] - b[i - 1]);
          double mean_rr = 0.0;
          for (double r : rr) mean_rr += r;
          mean_rr /= static_cast<double>(std::max<std::size_t>(rr.size(), 1));
          record(subject, phase, mod, "beat_count", static_cast<double>(b.size()));
          record(subject, phase, mod, "hr_bpm", rr.empty() ? 0.0 : 60.0 / mean_rr);
          record(subject, phase, mod, "rmssd_s", rmssd_of(rr));
        } else if (mod == "EDA") {
          record(subject, phase, mod, "scr_count", static_cast<double>(sig.truth.scr_count));
        } else if (mod == "RESP") {
          record(subject, phase, mod, "breath_count", static_cast<double>(sig.truth.breath_count));
        }
      }
      const bool stressed = phase_recipe(spec.phases[p].recipe).stressed;
      Rng q(mix_seed(spec.seed, 3, s, p));
      const double suds = std::round(stressed ? q.uniform(60.0, 90.0) : q.uniform(5.0, 35.0));
      const double stai = std::round(stressed ? q.uniform(50.0, 65.0) : q.uniform(25.0, 37.0));
      reports.push_back({subject, phase, "SUDS", suds});
      reports.push_back({subject, phase, "STAI", stai});
    }
    if (spec.write_reports) {
      csv::write_file(report_file_path(root, subject).string(), format_self_reports(reports));
      ++result.report_files;
    }
  }
  result.manifest = root / "manifest.csv";
  csv::write_file(result.manifest.string(), manifest);
  return result;
}

}  // namespace affectflow
