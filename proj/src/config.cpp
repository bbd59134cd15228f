#include "affectflow/config.hpp"

#include <algorithm>
#include <functional>
#include <set>

#include <json.hpp>

#include "affectflow/csv.hpp"
#include "affectflow/error.hpp"

namespace affectflow {

namespace {

using json = nlohmann::json;

// Collects every schema violation as "path: message".
class Checker {
 public:
  void error(const std::string& path, const std::string& message) { errors_.push_back(path + ": " + message); }

  bool object(const json& j, const std::string& path) {
    if (j.is_object()) return true;
    error(path, "expected an object");
    return false;
  }

  void keys(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
    for (const auto& [key, value] : j.items()) {
      (void)value;
      if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
        error(path, "unknown key '" + key + "'");
      }
    }
  }

  double number(const json& obj, const std::string& path, const char* key, double fallback,
                const std::function<bool(double)>& ok = {}, const char* requirement = "") {
    if (!obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    if (!v.is_number()) {
      error(path + "." + key, "expected a number");
      return fallback;
    }
    const double d = v.get<double>();
    if (ok && !ok(d)) {
      error(path + "." + key, std::string("must be ") + requirement);
      return fallback;
    }
    return d;
  }

  std::int64_t integer(const json& obj, const std::string& path, const char* key, std::int64_t fallback,
                       std::int64_t min_value) {
    if (!obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    if (!v.is_number_integer()) {
      error(path + "." + key, "expected an integer");
      return fallback;
    }
    const auto i = v.get<std::int64_t>();
    if (i < min_value) {
      error(path + "." + key, "must be at least " + std::to_string(min_value));
      return fallback;
    }
    return i;
  }

  std::string text(const json& obj, const std::string& path, const char* key, std::string fallback) {
    if (!obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    if (!v.is_string()) {
      error(path + "." + key, "expected a string");
      return fallback;
    }
    return v.get<std::string>();
  }

  bool boolean(const json& obj, const std::string& path, const char* key, bool fallback) {
    if (!obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    if (!v.is_boolean()) {
      error(path + "." + key, "expected true or false");
      return fallback;
    }
    return v.get<bool>();
  }

  std::vector<std::string> strings(const json& obj, const std::string& path, const char* key) {
    std::vector<std::string> out;
    if (!obj.contains(key)) return out;
    const auto& v = obj.at(key);
    if (!v.is_array()) {
      error(path + "." + key, "expected an array of strings");
      return out;
    }
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (v[i].is_string()) {
        out.push_back(v[i].get<std::string>());
      } else {
        error(path + "." + key + "[" + std::to_string(i) + "]", "expected a string");
      }
    }
    return out;
  }

  std::uint64_t seed(const json& obj, const std::string& path, const char* key, std::uint64_t fallback) {
    if (!obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    error(path + "." + key, "expected a non-negative integer");
    return fallback;
  }

  /// Runs `fn`, turning library errors into schema violations at `path`.
  template <class F>
  void guard(const std::string& path, F&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      error(path, e.detail());
    }
  }

  void finish(const char* what) const {
    if (errors_.empty()) return;
    std::string message = std::string("invalid ") + what + " (" + std::to_string(errors_.size()) + " problem" +
                          (errors_.size() == 1 ? "" : "s") + ")";
    for (const auto& e : errors_) message += "\n  " + e;
    fail(ErrorKind::ConfigError, message);
  }

 private:
  std::vector<std::string> errors_;
};

json parse_json(std::string_view text, const char* what) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    fail(ErrorKind::ConfigError, std::string(what) + " is not valid JSON: " + e.what());
  }
}

auto positive = [](double v) { return v > 0.0; };

// ---- pipeline sections ----

std::optional<PreprocessStep> parse_step(const json& j, const std::string& path, Checker& c) {
  if (!c.object(j, path)) return std::nullopt;
  const auto op = c.text(j, path, "op", "");
  if (op == "lowpass" || op == "highpass" || op == "bandpass" || op == "bandstop") {
    c.keys(j, path, {"op", "order", "cutoff_hz"});
    ButterworthStep s;
    s.kind = op == "lowpass"    ? FilterKind::Lowpass
             : op == "highpass" ? FilterKind::Highpass
             : op == "bandpass" ? FilterKind::Bandpass
                                : FilterKind::Bandstop;
    s.order = static_cast<int>(c.integer(j, path, "order", 2, 1));
    const bool two = op == "bandpass" || op == "bandstop";
    const json* cut = j.contains("cutoff_hz") ? &j.at("cutoff_hz") : nullptr;
    if (!cut) {
      c.error(path + ".cutoff_hz", "required");
    } else if (!two && cut->is_number() && cut->get<double>() > 0.0) {
      s.cutoffs_hz = {cut->get<double>()};
    } else if (two && cut->is_array() && cut->size() == 2 && (*cut)[0].is_number() && (*cut)[1].is_number() &&
               (*cut)[0].get<double>() > 0.0 && (*cut)[0].get<double>() < (*cut)[1].get<double>()) {
      s.cutoffs_hz = {(*cut)[0].get<double>(), (*cut)[1].get<double>()};
    } else {
      c.error(path + ".cutoff_hz", two ? "expected [low, high] with 0 < low < high" : "expected a positive number");
    }
    return s;
  }
  if (op == "notch") {
    c.keys(j, path, {"op", "f0_hz", "q"});
    return NotchStep{c.number(j, path, "f0_hz", 50.0, positive, "positive"),
                     c.number(j, path, "q", 30.0, positive, "positive")};
  }
  if (op == "resample") {
    c.keys(j, path, {"op", "fs_hz"});
    if (!j.contains("fs_hz")) c.error(path + ".fs_hz", "required");
    return ResampleStep{c.number(j, path, "fs_hz", 1.0, positive, "positive")};
  }
  c.error(path + ".op", "expected lowpass, highpass, bandpass, bandstop, notch or resample");
  return std::nullopt;
}

StagePtr parse_preprocessing(const json& j, Checker& c) {
  auto stage = std::make_shared<PreprocessorStage>();
  const std::string path = "preprocessing";
  if (!c.object(j, path)) return stage;
  c.keys(j, path, {"resample_hz", "powerline_hz", "notch_q", "chains"});
  if (j.contains("resample_hz")) stage->options.resample_rate_hz = c.number(j, path, "resample_hz", 1.0, positive, "positive");
  stage->options.defaults.powerline_hz =
      c.number(j, path, "powerline_hz", 50.0, [](double v) { return v == 50.0 || v == 60.0; }, "50 or 60");
  stage->options.defaults.notch_q = c.number(j, path, "notch_q", 30.0, positive, "positive");
  if (j.contains("chains") && c.object(j.at("chains"), path + ".chains")) {
    for (const auto& [modality, steps] : j.at("chains").items()) {
      const auto p = path + ".chains." + modality;
      if (!steps.is_array()) {
        c.error(p, "expected an array of steps");
        continue;
      }
      PreprocessChain chain;
      for (std::size_t i = 0; i < steps.size(); ++i) {
        if (auto s = parse_step(steps[i], p + "[" + std::to_string(i) + "]", c)) chain.push_back(*s);
      }
      stage->chains[canonical_modality_name(modality)] = std::move(chain);
    }
  }
  return stage;
}

WindowingPolicy parse_policy(const json& j, const std::string& path, WindowingPolicy base, Checker& c) {
  base.window_s = c.number(j, path, "window_s", base.window_s, positive, "positive");
  base.step_s = c.number(j, path, "step_s", base.step_s, positive, "positive");
  base.drop_incomplete = c.boolean(j, path, "drop_incomplete", base.drop_incomplete);
  c.guard(path, [&] { base.validate(); });
  return base;
}

StagePtr parse_features(const json* j, const std::vector<std::string>& signal_types, Checker& c) {
  auto stage = std::make_shared<FeatureExtractorStage>();
  const std::string path = "features";
  const json empty = json::object();
  const json& f = j ? *j : empty;
  if (!c.object(f, path)) return stage;
  c.keys(f, path, {"window_s", "step_s", "drop_incomplete", "average", "per_modality", "preset", "catalog",
                   "settings"});
  auto& cfg = stage->config;
  cfg.default_policy = parse_policy(f, path, cfg.default_policy, c);
  cfg.calculate_average = c.boolean(f, path, "average", cfg.calculate_average);
  if (f.contains("per_modality") && c.object(f.at("per_modality"), path + ".per_modality")) {
    for (const auto& [modality, policy] : f.at("per_modality").items()) {
      const auto p = path + ".per_modality." + modality;
      if (!c.object(policy, p)) continue;
      c.keys(policy, p, {"window_s", "step_s", "drop_incomplete"});
      cfg.per_modality[canonical_modality_name(modality)] = parse_policy(policy, p, cfg.default_policy, c);
    }
  }
  if (f.contains("settings") && c.object(f.at("settings"), path + ".settings")) {
    const auto& s = f.at("settings");
    const auto p = path + ".settings";
    c.keys(s, p, {"scr_min_amplitude_us", "eda_tonic_cutoff_hz", "hrv_min_span_fraction"});
    cfg.settings.scr_min_amplitude_us =
        c.number(s, p, "scr_min_amplitude_us", cfg.settings.scr_min_amplitude_us, positive, "positive");
    cfg.settings.eda_tonic_cutoff_hz =
        c.number(s, p, "eda_tonic_cutoff_hz", cfg.settings.eda_tonic_cutoff_hz, positive, "positive");
    cfg.settings.hrv_min_span_fraction = c.number(
        s, p, "hrv_min_span_fraction", cfg.settings.hrv_min_span_fraction,
        [](double v) { return v > 0.0 && v <= 1.0; }, "in (0, 1]");
  }

  if (f.contains("preset") && f.contains("catalog")) c.error(path, "give either 'preset' or 'catalog', not both");
  if (f.contains("preset")) {
    const auto name = c.text(f, path, "preset", "");
    c.guard(path + ".preset", [&] { stage->catalog = feature_preset(name); });
  } else if (f.contains("catalog")) {
    const auto& cat = f.at("catalog");
    if (!cat.is_array() || cat.empty()) c.error(path + ".catalog", "expected a non-empty array");
    for (std::size_t i = 0; cat.is_array() && i < cat.size(); ++i) {
      const auto p = path + ".catalog[" + std::to_string(i) + "]";
      const auto& e = cat[i];
      if (e.is_string()) {
        c.guard(p, [&] { stage->catalog.push_back(builtin_feature(e.get<std::string>())); });
        continue;
      }
      if (!c.object(e, p)) continue;
      c.keys(e, p, {"id", "name", "params"});
      const auto id = c.text(e, p, "id", "");
      if (id.empty()) c.error(p + ".id", "required");
      std::map<std::string, double> params;
      if (e.contains("params") && c.object(e.at("params"), p + ".params")) {
        for (const auto& [k, v] : e.at("params").items()) {
          if (v.is_number()) {
            params[k] = v.get<double>();
          } else {
            c.error(p + ".params." + k, "expected a number");
          }
        }
      }
      if (!id.empty()) c.guard(p, [&] { stage->catalog.push_back(builtin_feature(id, params, c.text(e, p, "name", ""))); });
    }
  } else {
    std::set<std::string> wanted;
    for (const auto& s : signal_types) wanted.insert(canonical_modality_name(s));
    for (const auto& id : builtin_feature_ids()) {
      auto entry = builtin_feature(id);
      if (wanted.count(entry.modality)) stage->catalog.push_back(std::move(entry));
    }
  }
  std::set<std::string> names;
  for (const auto& e : stage->catalog) {
    if (!names.insert(e.name).second) c.error(path, "duplicate feature column '" + e.name + "'");
  }
  return stage;
}

StagePtr parse_labels(const json& j, Checker& c) {
  auto stage = std::make_shared<LabelGeneratorStage>();
  const std::string path = "labels";
  if (!c.object(j, path)) return stage;
  c.keys(j, path, {"rule", "phase_to_class", "class_names", "questionnaire", "threshold", "range"});
  auto& rule = stage->rule;
  const auto kind = c.text(j, path, "rule", "");
  if (kind == "phase-map") {
    rule.kind = LabelRule::Kind::PhaseMap;
    if (!j.contains("phase_to_class")) c.error(path + ".phase_to_class", "required for phase-map");
  } else if (kind == "fixed-threshold") {
    rule.kind = LabelRule::Kind::FixedThreshold;
  } else if (kind == "dynamic-threshold") {
    rule.kind = LabelRule::Kind::DynamicThreshold;
  } else {
    c.error(path + ".rule", "expected phase-map, fixed-threshold or dynamic-threshold");
  }
  if (j.contains("phase_to_class") && c.object(j.at("phase_to_class"), path + ".phase_to_class")) {
    for (const auto& [phase, cls] : j.at("phase_to_class").items()) {
      if (cls.is_number_integer()) {
        rule.phase_to_class[phase] = cls.get<int>();
      } else {
        c.error(path + ".phase_to_class." + phase, "expected an integer class id");
      }
    }
  }
  if (j.contains("class_names") && c.object(j.at("class_names"), path + ".class_names")) {
    for (const auto& [id, name] : j.at("class_names").items()) {
      const auto parsed = csv::parse_double(id);
      if (!parsed || *parsed != static_cast<int>(*parsed) || !name.is_string()) {
        c.error(path + ".class_names." + id, "expected an integer key and a string name");
        continue;
      }
      rule.class_names[static_cast<int>(*parsed)] = name.get<std::string>();
    }
  }
  rule.questionnaire = c.text(j, path, "questionnaire", "");
  std::transform(rule.questionnaire.begin(), rule.questionnaire.end(), rule.questionnaire.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::toupper(ch)); });
  rule.threshold = c.number(j, path, "threshold", rule.threshold);
  if (j.contains("range")) {
    const auto& r = j.at("range");
    if (r.is_array() && r.size() == 2 && r[0].is_number() && r[1].is_number() && r[0].get<double>() < r[1].get<double>()) {
      rule.range = ScoreRange{r[0].get<double>(), r[1].get<double>()};
    } else {
      c.error(path + ".range", "expected [low, high] with low < high");
    }
  }
  return stage;
}

ClassifierSpec parse_model(const json& j, const std::string& path, Checker& c) {
  ClassifierSpec spec;
  if (!c.object(j, path)) return spec;
  c.keys(j, path, {"name", "algorithm", "hyperparameters", "options", "standardize", "members"});
  const auto algorithm = c.text(j, path, "algorithm", "");
  c.guard(path + ".algorithm", [&] { spec.algorithm = algorithm_from_string(algorithm); });
  if (spec.algorithm == Algorithm::Custom) c.error(path + ".algorithm", "custom algorithms cannot be configured from a file");
  spec.name = c.text(j, path, "name", algorithm);
  spec.standardize = c.boolean(j, path, "standardize", true);
  if (j.contains("hyperparameters") && c.object(j.at("hyperparameters"), path + ".hyperparameters")) {
    for (const auto& [k, v] : j.at("hyperparameters").items()) {
      if (v.is_number()) {
        spec.hyperparameters[k] = v.get<double>();
      } else {
        c.error(path + ".hyperparameters." + k, "expected a number");
      }
    }
  }
  if (j.contains("options") && c.object(j.at("options"), path + ".options")) {
    for (const auto& [k, v] : j.at("options").items()) {
      if (v.is_string()) {
        spec.options[k] = v.get<std::string>();
      } else {
        c.error(path + ".options." + k, "expected a string");
      }
    }
  }
  if (spec.algorithm == Algorithm::KNN && spec.hyperparameters.count("k_neighbors") &&
      spec.hyperparameters["k_neighbors"] < 1) {
    c.error(path + ".hyperparameters.k_neighbors", "must be at least 1");
  }
  if (j.contains("members")) {
    const auto& m = j.at("members");
    if (!m.is_array()) c.error(path + ".members", "expected an array of models");
    for (std::size_t i = 0; m.is_array() && i < m.size(); ++i) {
      spec.members.push_back(parse_model(m[i], path + ".members[" + std::to_string(i) + "]", c));
    }
  }
  if (spec.algorithm == Algorithm::AveragingEnsemble && spec.members.empty()) {
    c.error(path + ".members", "an ensemble needs at least one member");
  }
  return spec;
}

StagePtr parse_selection(const json& j, Checker& c) {
  auto stage = std::make_shared<FeatureSelectorStage>();
  const std::string path = "selection";
  if (!c.object(j, path)) return stage;
  c.keys(j, path, {"k", "cv_folds", "scorer"});
  if (!j.contains("k")) c.error(path + ".k", "required");
  stage->k = static_cast<std::size_t>(c.integer(j, path, "k", 1, 1));
  stage->cv_folds = static_cast<int>(c.integer(j, path, "cv_folds", 5, 2));
  if (j.contains("scorer")) {
    stage->scorer = parse_model(j.at("scorer"), path + ".scorer", c);
  } else {
    stage->scorer.name = "knn";
    stage->scorer.algorithm = Algorithm::KNN;
  }
  return stage;
}

StagePtr parse_classification(const json& j, std::uint64_t seed, Checker& c) {
  auto stage = std::make_shared<ClassificationStage>();
  const std::string path = "classification";
  if (!c.object(j, path)) return stage;
  c.keys(j, path, {"mode", "cv", "models"});
  const auto mode = c.text(j, path, "mode", "cross-validation");
  if (mode == "cross-validation") {
    stage->mode = ClassificationMode::CrossValidate;
  } else if (mode == "train") {
    stage->mode = ClassificationMode::Train;
  } else if (mode == "test") {
    c.error(path + ".mode", "test mode needs fitted models, which a config file cannot supply");
  } else {
    c.error(path + ".mode", "expected cross-validation or train");
  }
  stage->strategy.shuffle_seed = seed;
  if (j.contains("cv") && c.object(j.at("cv"), path + ".cv")) {
    const auto& cv = j.at("cv");
    const auto p = path + ".cv";
    c.keys(cv, p, {"kind", "folds", "shuffle_seed"});
    const auto kind = c.text(cv, p, "kind", "kfold");
    if (kind == "kfold") {
      stage->strategy.kind = CVStrategy::Kind::KFold;
    } else if (kind == "stratified-kfold") {
      stage->strategy.kind = CVStrategy::Kind::StratifiedKFold;
    } else if (kind == "loso") {
      stage->strategy.kind = CVStrategy::Kind::LOSO;
    } else {
      c.error(p + ".kind", "expected kfold, stratified-kfold or loso");
    }
    stage->strategy.folds = static_cast<int>(c.integer(cv, p, "folds", 5, 2));
    stage->strategy.shuffle_seed = c.seed(cv, p, "shuffle_seed", seed);
  }
  if (!j.contains("models") || !j.at("models").is_array() || j.at("models").empty()) {
    c.error(path + ".models", "expected a non-empty array of models");
  } else {
    std::set<std::string> names;
    const auto& models = j.at("models");
    for (std::size_t i = 0; i < models.size(); ++i) {
      const auto p = path + ".models[" + std::to_string(i) + "]";
      stage->models.push_back(parse_model(models[i], p, c));
      if (!names.insert(stage->models.back().name).second) {
        c.error(p + ".name", "duplicate model name '" + stage->models.back().name + "'");
      }
    }
  }
  return stage;
}

const std::vector<std::pair<StageKind, const char*>> kSections{
    {StageKind::Acquisition, "dataset"},        {StageKind::Preprocessor, "preprocessing"},
    {StageKind::FeatureExtractor, "features"},  {StageKind::LabelGenerator, "labels"},
    {StageKind::FeatureSelector, "selection"},  {StageKind::Classification, "classification"}};

}  // namespace

PipelineConfig parse_pipeline_config(std::string_view json_text, const ConfigOverrides& overrides) {
  const auto doc = parse_json(json_text, "pipeline config");
  Checker c;
  PipelineConfig out;
  if (!c.object(doc, "$")) c.finish("pipeline config");
  c.keys(doc, "$", {"$schema", "description", "seed", "strict", "stages", "dataset", "preprocessing", "features",
                    "labels", "selection", "classification", "output"});
  const auto seed = overrides.seed ? *overrides.seed : c.seed(doc, "$", "seed", 0);
  out.spec.seed = seed;
  out.spec.strict = overrides.strict.value_or(false) || c.boolean(doc, "$", "strict", false);

  // Stage list: explicit, or every present section in canonical order.
  std::vector<StageKind> kinds;
  if (doc.contains("stages")) {
    for (const auto& name : c.strings(doc, "$", "stages")) {
      auto it = std::find_if(kSections.begin(), kSections.end(),
                             [&](const auto& s) { return to_string(s.first) == name; });
      if (it == kSections.end()) {
        c.error("$.stages", "unknown stage '" + name + "'");
      } else {
        kinds.push_back(it->first);
      }
    }
  } else {
    for (const auto& [kind, section] : kSections) {
      const bool always = kind == StageKind::Preprocessor || kind == StageKind::FeatureExtractor;
      if (always || doc.contains(section)) kinds.push_back(kind);
    }
  }

  std::vector<std::string> signal_types;
  for (StageKind kind : kinds) {
    const char* section = std::find_if(kSections.begin(), kSections.end(),
                                       [&](const auto& s) { return s.first == kind; })->second;
    const json* j = doc.contains(section) ? &doc.at(section) : nullptr;
    const bool optional = kind == StageKind::Preprocessor || kind == StageKind::FeatureExtractor;
    if (!j && !optional) {
      c.error(std::string("$.") + section, "required by stage " + to_string(kind));
      continue;
    }
    switch (kind) {
      case StageKind::Acquisition: {
        auto stage = std::make_shared<AcquisitionStage>();
        if (c.object(*j, "dataset")) {
          c.keys(*j, "dataset", {"root", "signal_types", "registry"});
          stage->root = overrides.dataset_root ? *overrides.dataset_root
                                               : std::filesystem::path(c.text(*j, "dataset", "root", ""));
          if (stage->root.empty()) c.error("dataset.root", "required");
          stage->signal_types = c.strings(*j, "dataset", "signal_types");
          if (stage->signal_types.empty()) c.error("dataset.signal_types", "expected a non-empty array");
          for (auto& s : stage->signal_types) s = canonical_modality_name(s);
          signal_types = stage->signal_types;
          if (j->contains("registry")) stage->registry_file = c.text(*j, "dataset", "registry", "");
        }
        out.spec.stages.push_back(stage);
        break;
      }
      case StageKind::Preprocessor: {
        const json empty = json::object();
        out.spec.stages.push_back(parse_preprocessing(j ? *j : empty, c));
        break;
      }
      case StageKind::FeatureExtractor:
        out.spec.stages.push_back(parse_features(j, signal_types, c));
        break;
      case StageKind::LabelGenerator:
        out.spec.stages.push_back(parse_labels(*j, c));
        break;
      case StageKind::FeatureSelector:
        out.spec.stages.push_back(parse_selection(*j, c));
        break;
      case StageKind::Classification:
        out.spec.stages.push_back(parse_classification(*j, seed, c));
        break;
    }
    out.stage_names.push_back(to_string(kind));
  }

  bool checkpoints = false;
  if (doc.contains("output") && c.object(doc.at("output"), "output")) {
    const auto& o = doc.at("output");
    c.keys(o, "output", {"dir", "checkpoints"});
    out.output_dir = c.text(o, "output", "dir", out.output_dir.string());
    checkpoints = c.boolean(o, "output", "checkpoints", false);
  }
  if (overrides.output_dir) out.output_dir = *overrides.output_dir;
  if (checkpoints) out.spec.checkpoint_dir = out.output_dir / "checkpoints";
  c.finish("pipeline config");
  return out;
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path, const ConfigOverrides& overrides) {
  return parse_pipeline_config(csv::read_file(path.string()), overrides);
}

SynthDatasetSpec parse_synth_spec(std::string_view json_text, std::optional<std::uint64_t> seed) {
  const auto doc = parse_json(json_text, "synthetic dataset spec");
  Checker c;
  SynthDatasetSpec spec;
  if (!c.object(doc, "$")) c.finish("synthetic dataset spec");
  c.keys(doc, "$", {"$schema", "description", "subjects", "subject_prefix", "phases", "modalities", "duration_s",
                    "seed", "population", "subject_spread", "fs_hz", "write_reports"});
  spec.subjects = static_cast<std::size_t>(c.integer(doc, "$", "subjects", 4, 1));
  spec.subject_prefix = c.text(doc, "$", "subject_prefix", spec.subject_prefix);
  if (doc.contains("phases")) {
    const auto& phases = doc.at("phases");
    if (!phases.is_array() || phases.empty()) c.error("$.phases", "expected a non-empty array");
    spec.phases.clear();
    for (std::size_t i = 0; phases.is_array() && i < phases.size(); ++i) {
      const auto p = "$.phases[" + std::to_string(i) + "]";
      if (!c.object(phases[i], p)) continue;
      c.keys(phases[i], p, {"name", "recipe", "class_label"});
      SynthPhase phase;
      phase.name = c.text(phases[i], p, "name", "");
      phase.recipe = c.text(phases[i], p, "recipe", phase.name);
      phase.class_label = static_cast<int>(c.integer(phases[i], p, "class_label", 0, 0));
      spec.phases.push_back(phase);
    }
  }
  if (doc.contains("modalities")) spec.modalities = c.strings(doc, "$", "modalities");
  spec.duration_s = c.number(doc, "$", "duration_s", spec.duration_s, positive, "positive");
  spec.seed = seed ? *seed : c.seed(doc, "$", "seed", spec.seed);
  spec.subject_spread = c.number(doc, "$", "subject_spread", spec.subject_spread);
  spec.write_reports = c.boolean(doc, "$", "write_reports", spec.write_reports);
  if (doc.contains("population") && c.object(doc.at("population"), "$.population")) {
    const auto& p = doc.at("population");
    c.keys(p, "$.population", {"hr_bpm", "rmssd_s", "snr_db", "scl_us", "scr_per_min", "scr_amplitude_us",
                               "breaths_per_min", "temp_c"});
    spec.hr_bpm = c.number(p, "$.population", "hr_bpm", spec.hr_bpm);
    spec.rmssd_s = c.number(p, "$.population", "rmssd_s", spec.rmssd_s);
    spec.snr_db = c.number(p, "$.population", "snr_db", spec.snr_db);
    spec.scl_us = c.number(p, "$.population", "scl_us", spec.scl_us);
    spec.scr_per_min = c.number(p, "$.population", "scr_per_min", spec.scr_per_min);
    spec.scr_amplitude_us = c.number(p, "$.population", "scr_amplitude_us", spec.scr_amplitude_us);
    spec.breaths_per_min = c.number(p, "$.population", "breaths_per_min", spec.breaths_per_min);
    spec.temp_c = c.number(p, "$.population", "temp_c", spec.temp_c);
  }
  if (doc.contains("fs_hz") && c.object(doc.at("fs_hz"), "$.fs_hz")) {
    for (const auto& [m, v] : doc.at("fs_hz").items()) {
      if (v.is_number() && v.get<double>() > 0.0) {
        spec.fs_hz[canonical_modality_name(m)] = v.get<double>();
      } else {
        c.error("$.fs_hz." + m, "must be a positive number");
      }
    }
  }
  c.finish("synthetic dataset spec");
  try {
    validate_synth_dataset_spec(spec);
  } catch (const Error& e) {
    fail(ErrorKind::ConfigError, "invalid synthetic dataset spec: " + e.detail());
  }
  return spec;
}

SynthDatasetSpec load_synth_spec(const std::filesystem::path& path, std::optional<std::uint64_t> seed) {
  return parse_synth_spec(csv::read_file(path.string()), seed);
}

}  // namespace affectflow
