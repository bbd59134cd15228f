#include "affectflow/features.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <tuple>
#include <utility>

#include "affectflow/error.hpp"
#include "affectflow/filters.hpp"
#include "affectflow/resp.hpp"
#include "affectflow/statistics.hpp"

namespace affectflow {

namespace {

struct Failure {
  ErrorKind kind;
  std::string message;
};

template <class T>
struct Lazy {
  std::optional<T> value;
  std::optional<Failure> failure;

  template <class F>
  const T& get(F&& compute) {
    if (failure) throw Error(failure->kind, failure->message);
    if (!value) {
      try {
        value.emplace(compute());
      } catch (const Error& e) {
        failure = Failure{e.kind(), e.detail()};
        throw;
      }
    }
    return *value;
  }
};

double param(const std::map<std::string, double>& p, const std::string& key, double fallback) {
  auto it = p.find(key);
  return it == p.end() ? fallback : it->second;
}

}  // namespace

struct SignalContext::Caches {
  Lazy<std::vector<std::size_t>> peaks;
  Lazy<EDADecomposition> eda;
  std::map<double, std::vector<SCREvent>> scr;
  Lazy<std::vector<double>> emg_hp;
  Lazy<std::vector<double>> emg_lp;
  std::map<std::pair<std::string, std::size_t>, Lazy<std::any>> memo;
};

SignalContext::SignalContext(const TimeSeries& series, const ExtractionSettings& settings)
    : series_(series), settings_(settings), caches_(std::make_unique<Caches>()) {}

SignalContext::~SignalContext() = default;

std::span<const double> SignalContext::window_values(const WindowSpan& w) const {
  return series_.values().subspan(w.begin, w.size());
}

TimeSeries SignalContext::window_series(const WindowSpan& w) const {
  auto t = series_.timestamps().subspan(w.begin, w.size());
  auto v = window_values(w);
  return TimeSeries(series_.subject_id(), series_.phase(), series_.modality(), {t.begin(), t.end()},
                    {v.begin(), v.end()}, series_.sample_rate_hz());
}

const std::any& SignalContext::memo_any(const std::string& key, std::size_t window,
                                        const std::function<std::any()>& compute) {
  return caches_->memo[{key, window}].get(compute);
}

const std::vector<std::size_t>& SignalContext::r_peaks() {
  return caches_->peaks.get([&] { return detect_r_peaks(series_, settings_.r_peaks); });
}

RRSeries SignalContext::window_rr(const WindowSpan& w) {
  const auto& peaks = r_peaks();
  auto t = series_.timestamps();
  std::vector<double> beats;
  for (auto it = std::lower_bound(peaks.begin(), peaks.end(), w.begin); it != peaks.end() && *it < w.end; ++it) {
    beats.push_back(t[*it]);
  }
  return RRSeries::from_beat_times(std::move(beats));
}

const HrvTimeFeatures& SignalContext::hrv_time(const WindowSpan& w) {
  return memo<HrvTimeFeatures>("hrv_time", w, [&] { return hrv_time_features(window_rr(w)); });
}

const Spectrum& SignalContext::rr_spectrum(const WindowSpan& w) {
  return memo<Spectrum>("rr_spectrum", w, [&] {
    const auto rr = window_rr(w);
    const double window_len = static_cast<double>(w.size()) / series_.sample_rate_hz();
    const double need = settings_.hrv_min_span_fraction * window_len;
    const double span = rr.beat_times_s.size() < 2 ? 0.0 : rr.beat_times_s.back() - rr.beat_times_s.front();
    if (rr.rr_s.size() < 3 || span < need) {
      fail(ErrorKind::TooFewBeats, "beats span " + std::to_string(span) + " s, need " + std::to_string(need) + " s");
    }
    return affectflow::rr_spectrum(rr, settings_.hrv_freq);
  });
}

std::span<const double> SignalContext::tonic() {
  return caches_->eda.get([&] { return decompose_eda(series_, settings_.eda_tonic_cutoff_hz); }).tonic.values();
}

std::span<const double> SignalContext::phasic() {
  return caches_->eda.get([&] { return decompose_eda(series_, settings_.eda_tonic_cutoff_hz); }).phasic.values();
}

const std::vector<SCREvent>& SignalContext::scr_events(double min_amplitude_us) {
  auto it = caches_->scr.find(min_amplitude_us);
  if (it == caches_->scr.end()) {
    const auto rise = static_cast<std::size_t>(std::lround(kScrRiseWindowS * series_.sample_rate_hz()));
    it = caches_->scr.emplace(min_amplitude_us, detect_scr(phasic(), min_amplitude_us, series_.values(), rise)).first;
  }
  return it->second;
}

SCRSummary SignalContext::window_scr(const WindowSpan& w, double min_amplitude_us) {
  return summarize_scr(scr_events(min_amplitude_us), w.begin, w.end,
                       static_cast<double>(w.size()) / series_.sample_rate_hz());
}

std::span<const double> SignalContext::emg_highpassed() {
  return caches_->emg_hp.get([&] {
    const double cut[] = {settings_.emg.highpass_hz};
    return filtfilt(design_butterworth(FilterKind::Highpass, 4, cut, series_.sample_rate_hz()), series_.values());
  });
}

std::span<const double> SignalContext::emg_lowpassed() {
  return caches_->emg_lp.get([&] {
    const double cut[] = {settings_.emg.lowpass_hz};
    return filtfilt(design_butterworth(FilterKind::Lowpass, 4, cut, series_.sample_rate_hz()), series_.values());
  });
}

namespace {

using Params = std::map<std::string, double>;
using BuiltinFn = std::function<FeatureValue(SignalContext&, const WindowSpan&, const Params&)>;

struct Builtin {
  std::string id;
  std::string modality;
  BuiltinFn fn;
};

using StatField = double StatisticalFeatures::*;

const std::vector<std::pair<std::string, StatField>>& stat_fields() {
  static const std::vector<std::pair<std::string, StatField>> fields = {
      {"mean", &StatisticalFeatures::mean}, {"median", &StatisticalFeatures::median},
      {"std", &StatisticalFeatures::std},   {"var", &StatisticalFeatures::var},
      {"min", &StatisticalFeatures::min},   {"max", &StatisticalFeatures::max},
      {"slope", &StatisticalFeatures::slope}};
  return fields;
}

const StatisticalFeatures& raw_stats(SignalContext& c, const WindowSpan& w) {
  return c.memo<StatisticalFeatures>("raw_stats", w, [&] {
    return statistical_features(c.window_values(w), c.series().sample_rate_hz());
  });
}

void require_emg_rate(const SignalContext& c) {
  const double need = 2.0 * c.settings().emg.band_max_hz;
  if (c.series().sample_rate_hz() < need) {
    fail(ErrorKind::SampleRateTooLow, "EMG features need fs >= " + std::to_string(need) + " Hz, got " +
                                          std::to_string(c.series().sample_rate_hz()));
  }
}

const HrvBand& named_band(const SignalContext& c, const std::string& name) {
  for (const auto& b : c.settings().hrv_bands) {
    if (b.name == name) return b;
  }
  fail(ErrorKind::InvalidArgument, "no HRV band named " + name);
}

std::vector<Builtin> make_builtins() {
  std::vector<Builtin> out;
  auto add = [&](std::string id, std::string modality, BuiltinFn fn) {
    out.push_back({std::move(id), std::move(modality), std::move(fn)});
  };
  auto add_raw_stats = [&](const std::string& prefix, const std::string& modality, bool with_slope) {
    for (const auto& [name, field] : stat_fields()) {
      if (name == "slope" && !with_slope) continue;
      add(prefix + "_" + name, modality,
          [field = field](SignalContext& c, const WindowSpan& w, const Params&) { return FeatureValue(raw_stats(c, w).*field); });
    }
  };

  // ECG
  add_raw_stats("ecg", "ECG", false);
  using HT = HrvTimeFeatures;
  const std::vector<std::pair<std::string, double HT::*>> hrv_time = {
      {"hr_mean", &HT::hr_mean_bpm}, {"hr_std", &HT::hr_std_bpm},   {"rmssd", &HT::rmssd_s},
      {"sdnn", &HT::sdnn_s},         {"rr_mean", &HT::rr_mean_s},   {"rr_median", &HT::rr_median_s},
      {"rr_std", &HT::rr_std_s},     {"rr_var", &HT::rr_var_s2}};
  for (const auto& [id, field] : hrv_time) {
    add(id, "ECG", [field = field](SignalContext& c, const WindowSpan& w, const Params&) { return FeatureValue(c.hrv_time(w).*field); });
  }
  for (const auto& [id, band] : std::vector<std::pair<std::string, std::string>>{
           {"hrv_ulf", "ULF"}, {"hrv_lf", "LF"}, {"hrv_hf", "HF"}, {"hrv_uhf", "UHF"}}) {
    add(id, "ECG", [band = band](SignalContext& c, const WindowSpan& w, const Params& p) {
      const auto& spectrum = c.rr_spectrum(w);
      double lo = p.count("lo_hz") ? p.at("lo_hz") : named_band(c, band).lo_hz;
      double hi = p.count("hi_hz") ? p.at("hi_hz") : named_band(c, band).hi_hz;
      return FeatureValue(spectrum.band_power(lo, hi));
    });
  }
  add("lf_hf_ratio", "ECG", [](SignalContext& c, const WindowSpan& w, const Params&) {
    const auto& spectrum = c.rr_spectrum(w);
    const auto& lf = named_band(c, "LF");
    const auto& hf = named_band(c, "HF");
    const double hf_power = spectrum.band_power(hf.lo_hz, hf.hi_hz);
    if (!(hf_power > 1e-20)) fail(ErrorKind::DegenerateSpectrum, "HF power is zero");
    return FeatureValue(spectrum.band_power(lf.lo_hz, lf.hi_hz) / hf_power);
  });

  // EDA
  add_raw_stats("eda", "EDA", true);
  auto slice_stats = [](SignalContext& c, const WindowSpan& w, const std::string& key, std::span<const double> full) {
    return c.memo<StatisticalFeatures>(key, w, [&] {
      return statistical_features(full.subspan(w.begin, w.size()), c.series().sample_rate_hz());
    });
  };
  for (const auto& [name, field] : stat_fields()) {
    if (name != "mean" && name != "std" && name != "slope") continue;
    add("scl_" + name, "EDA", [field = field, slice_stats](SignalContext& c, const WindowSpan& w, const Params&) {
      return FeatureValue(slice_stats(c, w, "tonic_stats", c.tonic()).*field);
    });
  }
  for (const auto& [name, field] : stat_fields()) {
    if (name != "mean" && name != "std") continue;
    add("phasic_" + name, "EDA", [field = field, slice_stats](SignalContext& c, const WindowSpan& w, const Params&) {
      return FeatureValue(slice_stats(c, w, "phasic_stats", c.phasic()).*field);
    });
  }
  auto scr = [](SignalContext& c, const WindowSpan& w, const Params& p) {
    return c.window_scr(w, param(p, "min_amplitude_us", c.settings().scr_min_amplitude_us));
  };
  add("scr_count", "EDA", [scr](SignalContext& c, const WindowSpan& w, const Params& p) {
    return FeatureValue(static_cast<double>(scr(c, w, p).count));
  });
  add("scr_rate", "EDA", [scr](SignalContext& c, const WindowSpan& w, const Params& p) {
    return FeatureValue(scr(c, w, p).rate_per_min);
  });
  add("scr_mean_amplitude", "EDA", [scr](SignalContext& c, const WindowSpan& w, const Params& p) {
    return FeatureValue(scr(c, w, p).mean_amplitude_us);
  });

  // EMG, group A on the high-passed trace
  for (const auto& [name, field] : stat_fields()) {
    add("emg_" + name, "EMG", [field = field](SignalContext& c, const WindowSpan& w, const Params&) {
      require_emg_rate(c);
      return FeatureValue(c.memo<StatisticalFeatures>("emg_hp_stats", w, [&] {
        return emg_subwindow_statistics(c.emg_highpassed().subspan(w.begin, w.size()), c.series().sample_rate_hz(),
                                        c.settings().emg);
      }).*field);
    });
  }
  for (int k = 0; k < EmgOptions{}.band_count; ++k) {
    add("emg_band_" + std::to_string(k), "EMG", [k](SignalContext& c, const WindowSpan& w, const Params&) {
      const auto& e = c.memo<std::vector<double>>("emg_bands", w, [&] {
        return emg_band_energies(c.emg_highpassed().subspan(w.begin, w.size()), c.series().sample_rate_hz(),
                                 c.settings().emg);
      });
      if (static_cast<std::size_t>(k) >= e.size()) fail(ErrorKind::InvalidArgument, "EMG band index out of range");
      return FeatureValue(e[static_cast<std::size_t>(k)]);
    });
  }
  // EMG, group B on the low-passed trace
  for (const auto& [name, field] : stat_fields()) {
    if (name == "slope") continue;
    add("emg_lp_" + name, "EMG", [field = field, slice_stats](SignalContext& c, const WindowSpan& w, const Params&) {
      return FeatureValue(slice_stats(c, w, "emg_lp_stats", c.emg_lowpassed()).*field);
    });
  }
  using EP = EmgPeakFeatures;
  for (const auto& [id, field] : std::vector<std::pair<std::string, double EP::*>>{
           {"emg_peak_count", &EP::count}, {"emg_peak_mean", &EP::mean_amplitude},
           {"emg_peak_std", &EP::std_amplitude}, {"emg_peak_max", &EP::max_amplitude}}) {
    add(id, "EMG", [field = field](SignalContext& c, const WindowSpan& w, const Params&) {
      return FeatureValue(c.memo<EmgPeakFeatures>("emg_peaks", w, [&] {
        return emg_peak_features(c.emg_lowpassed().subspan(w.begin, w.size()));
      }).*field);
    });
  }

  // RESP
  using RF = RespFeatures;
  for (const auto& [id, field] : std::vector<std::pair<std::string, double RF::*>>{
           {"resp_inhale_mean", &RF::inhale_mean_s}, {"resp_inhale_std", &RF::inhale_std_s},
           {"resp_exhale_mean", &RF::exhale_mean_s}, {"resp_exhale_std", &RF::exhale_std_s},
           {"resp_ie_ratio", &RF::inhale_exhale_ratio}, {"resp_rate", &RF::breath_rate_per_min},
           {"resp_max_mean", &RF::maxima_mean},       {"resp_max_std", &RF::maxima_std},
           {"resp_min_mean", &RF::minima_mean},       {"resp_min_std", &RF::minima_std}}) {
    add(id, "RESP", [field = field](SignalContext& c, const WindowSpan& w, const Params&) {
      return FeatureValue(c.memo<RespFeatures>("resp", w, [&] {
        return resp_features(c.window_values(w), c.series().sample_rate_hz());
      }).*field);
    });
  }

  // TEMP
  add_raw_stats("temp", "TEMP", true);
  return out;
}

const std::vector<Builtin>& builtins() {
  static const std::vector<Builtin> table = make_builtins();
  return table;
}

}  // namespace

std::vector<std::string> builtin_feature_ids() {
  std::vector<std::string> ids;
  for (const auto& b : builtins()) ids.push_back(b.id);
  return ids;
}

FeatureCatalogEntry builtin_feature(const std::string& id, std::map<std::string, double> parameters,
                                    std::string column_name) {
  for (const auto& b : builtins()) {
    if (b.id != id) continue;
    FeatureCatalogEntry e;
    e.name = column_name.empty() ? id : std::move(column_name);
    e.modality = b.modality;
    e.computation = id;
    e.parameters = std::move(parameters);
    e.compute = [fn = b.fn, p = e.parameters](SignalContext& c, const WindowSpan& w) { return fn(c, w, p); };
    return e;
  }
  fail(ErrorKind::UnknownFeature, "no built-in feature named '" + id + "'");
}

FeatureCatalogEntry custom_feature(std::string name, std::string modality,
                                   std::function<FeatureValue(const TimeSeries& window)> fn) {
  if (name.empty()) fail(ErrorKind::InvalidArgument, "custom feature needs a name");
  if (!fn) fail(ErrorKind::InvalidArgument, "custom feature '" + name + "' has no function");
  FeatureCatalogEntry e;
  e.name = std::move(name);
  e.modality = canonical_modality_name(modality);
  e.computation = "custom";
  e.compute = [fn = std::move(fn)](SignalContext& c, const WindowSpan& w) { return fn(c.window_series(w)); };
  return e;
}

std::vector<std::string> feature_preset_names() { return {"stress-ecg-eda", "chest"}; }

std::vector<FeatureCatalogEntry> feature_preset(const std::string& name) {
  std::vector<FeatureCatalogEntry> out;
  if (name == "stress-ecg-eda") {
    for (const char* id : {"ecg_mean", "ecg_median", "ecg_std", "ecg_var", "hr_mean", "rmssd", "sdnn", "hrv_hf",
                           "hrv_lf", "lf_hf_ratio", "eda_mean", "eda_std", "scl_mean", "scr_rate"}) {
      out.push_back(builtin_feature(id));
    }
  } else if (name == "chest") {
    for (const auto& id : builtin_feature_ids()) out.push_back(builtin_feature(id));
  } else {
    fail(ErrorKind::UnknownFeature, "no feature preset named '" + name + "'");
  }
  return out;
}

namespace {

FeatureValue average_cells(const std::vector<FeatureValue>& cells) {
  double sum = 0.0;
  std::size_t numeric = 0;
  std::map<std::string, std::size_t> tally;
  for (const auto& v : cells) {
    if (const auto* d = std::get_if<double>(&v)) {
      sum += *d;
      ++numeric;
    } else if (const auto* c = std::get_if<Category>(&v)) {
      ++tally[c->tag];
    }
  }
  if (numeric > 0) return sum / static_cast<double>(numeric);
  if (tally.empty()) return std::monostate{};
  // Mode; ties resolve to the lexicographically smallest tag.
  auto best = tally.begin();
  for (auto it = tally.begin(); it != tally.end(); ++it) {
    if (it->second > best->second) best = it;
  }
  return Category{best->first};
}

}  // namespace

ExtractionResult extract_features(const SubjectBundle& bundle, std::span<const FeatureCatalogEntry> catalog,
                                  const ExtractionConfig& config) {
  if (catalog.empty()) fail(ErrorKind::InvalidArgument, "feature catalog is empty");
  std::set<std::string> names;
  std::vector<std::string> modalities;
  for (const auto& e : catalog) {
    if (!names.insert(e.name).second) fail(ErrorKind::InvalidArgument, "duplicate feature column '" + e.name + "'");
    if (!e.compute) fail(ErrorKind::InvalidArgument, "feature '" + e.name + "' has no computation");
    const auto m = canonical_modality_name(e.modality);
    if (std::find(modalities.begin(), modalities.end(), m) == modalities.end()) modalities.push_back(m);
  }
  config.default_policy.validate();
  for (const auto& [m, p] : config.per_modality) p.validate();
  auto policy_for = [&](const std::string& m) -> const WindowingPolicy& {
    for (const auto& [name, p] : config.per_modality) {
      if (canonical_modality_name(name) == m) return p;
    }
    return config.default_policy;
  };

  ExtractionResult result;
  for (const auto& e : catalog) result.matrix.columns.push_back(e.name);

  std::map<std::tuple<std::string, std::string, std::string, std::string>, std::size_t> issue_index;
  auto note = [&](const std::string& subject, const std::string& phase, const std::string& feature,
                  const std::string& message) {
    const auto key = std::make_tuple(subject, phase, feature, message);
    auto it = issue_index.find(key);
    if (it == issue_index.end()) {
      issue_index.emplace(key, result.issues.size());
      result.issues.push_back({subject, phase, feature, message, 1});
    } else {
      ++result.issues[it->second].windows;
    }
  };

  for (const auto& [subject, series_list] : bundle.entries()) {
    (void)series_list;
    for (const auto& phase : bundle.phases_of(subject)) {
      std::map<std::string, std::unique_ptr<SignalContext>> contexts;
      std::map<std::string, std::vector<WindowSpan>> spans;
      std::size_t n_windows = 0;
      for (const auto& m : modalities) {
        const TimeSeries* s = bundle.find(subject, phase, m);
        if (!s) fail(ErrorKind::InvalidArgument, subject + "/" + phase + " has no " + m + " series");
        spans[m] = window_spans(*s, policy_for(m));
        contexts[m] = std::make_unique<SignalContext>(*s, config.settings);
        n_windows = std::max(n_windows, spans[m].size());
      }

      std::vector<FeatureRow> rows(n_windows);
      for (std::size_t k = 0; k < n_windows; ++k) {
        rows[k].subject_id = subject;
        rows[k].phase = phase;
        rows[k].window_index = k;
        rows[k].values.reserve(catalog.size());
      }
      for (const auto& e : catalog) {
        const auto m = canonical_modality_name(e.modality);
        auto& ctx = *contexts[m];
        const auto& ws = spans[m];
        for (std::size_t k = 0; k < n_windows; ++k) {
          FeatureValue v;
          if (k >= ws.size()) {
            note(subject, phase, e.name, m + " has no window " + std::to_string(k));
          } else {
            try {
              v = e.compute(ctx, ws[k]);
            } catch (const std::exception& ex) {
              note(subject, phase, e.name, ex.what());
            }
          }
          if (const auto* d = std::get_if<double>(&v); d && !std::isfinite(*d)) {
            note(subject, phase, e.name, "non-finite value");
            v = std::monostate{};
          }
          rows[k].values.push_back(std::move(v));
        }
      }

      if (config.calculate_average) {
        FeatureRow avg{subject, phase, 0, {}};
        for (std::size_t j = 0; j < catalog.size(); ++j) {
          std::vector<FeatureValue> cells;
          cells.reserve(rows.size());
          for (const auto& r : rows) cells.push_back(r.values[j]);
          avg.values.push_back(average_cells(cells));
        }
        result.matrix.rows.push_back(std::move(avg));
      } else {
        for (auto& r : rows) result.matrix.rows.push_back(std::move(r));
      }
    }
  }
  return result;
}

}  // namespace affectflow
