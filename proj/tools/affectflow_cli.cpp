// affectflow command-line front end.
//
// Exit codes:
//   validate  0 ok, 1 I/O failure, 2 dataset violations
//   synth     0 ok, 1 I/O failure, 2 spec error
//   run       0 ok, 1 I/O failure, 2 config error, 3 pipeline build error, 4 stage error

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "affectflow/acquisition.hpp"
#include "affectflow/config.hpp"
#include "affectflow/csv.hpp"
#include "affectflow/error.hpp"
#include "affectflow/labels.hpp"
#include "affectflow/pipeline.hpp"
#include "affectflow/synth.hpp"

namespace fs = std::filesystem;
using namespace affectflow;

namespace {

struct GlobalFlags {
  std::optional<std::uint64_t> seed;
  bool strict = false;
  std::optional<fs::path> out;
};

int cmd_validate(const fs::path& root, const std::optional<fs::path>& registry_file, const GlobalFlags& flags) {
  std::string report;
  int violations = 0;
  try {
    const auto registry = registry_file ? SignalRegistry::from_file(*registry_file) : SignalRegistry::builtin();
    DatasetIndex index;
    try {
      index = scan_dataset(root, registry);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::IOFailure) throw;
      std::cout << "violation " << root.string() << ": " << e.what() << "\n";
      return 2;
    }
    for (const auto& [subject, files] : index.subjects) {
      for (const auto& f : files) {
        try {
          load_csv_signal(f.path, f.modality, subject, f.phase);
          report += "ok " + f.path.string() + "\n";
        } catch (const Error& e) {
          if (e.kind() == ErrorKind::IOFailure) throw;
          report += "violation " + f.path.string() + ": " + e.what() + "\n";
          ++violations;
        }
      }
      if (files.empty()) {
        report += "violation " + (root / subject).string() + ": no signal files\n";
        ++violations;
      }
    }
    for (const auto& [subject, path] : index.report_files) {
      try {
        load_self_reports(path, subject);
        report += "ok " + path.string() + "\n";
      } catch (const Error& e) {
        if (e.kind() == ErrorKind::IOFailure) throw;
        report += "violation " + path.string() + ": " + e.what() + "\n";
        ++violations;
      }
    }
    for (const auto& s : index.skipped) report += "skipped " + s.path.string() + ": " + s.reason + "\n";
    report += std::to_string(index.subjects.size()) + " subjects, " + std::to_string(index.file_count()) +
              " signal files, " + std::to_string(violations) + " violations\n";
    std::cout << report;
    if (flags.out) {
      fs::create_directories(*flags.out);
      csv::write_file((*flags.out / "validate_report.txt").string(), report);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return violations == 0 ? 0 : 2;
}

int cmd_synth(const fs::path& spec_file, const fs::path& out_root, const GlobalFlags& flags) {
  SynthDatasetSpec spec;
  try {
    spec = load_synth_spec(spec_file, flags.seed);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.kind() == ErrorKind::IOFailure ? 1 : 2;
  }
  try {
    const auto result = synth_dataset(spec, out_root);
    std::cout << "wrote " << result.signal_files << " signal files and " << result.report_files
              << " report files under " << out_root.string() << "\nmanifest " << result.manifest.string() << "\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

std::string dropped_csv(const RunLog& log) {
  std::string out = "subject,phase,window,reason\n";
  for (const auto& d : log.dropped_rows) {
    std::string reason = d.reason;
    std::replace(reason.begin(), reason.end(), ',', ';');
    out += d.subject_id + "," + d.phase + "," + std::to_string(d.window_index) + "," + reason + "\n";
  }
  return out;
}

std::string exclusions_csv(const RunLog& log) {
  std::string out = "kind,item,detail\n";
  for (const auto& e : log.excluded_subjects) {
    std::string missing;
    for (const auto& m : e.missing) missing += (missing.empty() ? "" : " ") + m;
    out += "excluded-subject," + e.subject + ",missing " + missing + "\n";
  }
  for (const auto& s : log.skipped_files) out += "skipped-file," + s.path.string() + "," + s.reason + "\n";
  return out;
}

std::string issues_csv(const RunLog& log) {
  std::string out = "subject,phase,feature,windows,message\n";
  for (const auto& i : log.extraction_issues) {
    std::string message = i.message;
    std::replace(message.begin(), message.end(), ',', ';');
    out += i.subject_id + "," + i.phase + "," + i.feature + "," + std::to_string(i.windows) + "," + message + "\n";
  }
  return out;
}

std::string predictions_csv(const PipelineOutput& out) {
  std::string text = "subject,phase,window,y_true";
  for (const auto& m : out.report.models) text += "," + m.model;
  text += "\n";
  for (std::size_t i = 0; i < out.y_true.labels.size(); ++i) {
    const auto& key = out.row_keys.at(i);
    text += key.subject_id + "," + key.phase + "," + std::to_string(key.window_index) + "," +
            std::to_string(out.y_true.labels[i]);
    for (const auto& pred : out.y_pred) text += "," + std::to_string(pred.at(i));
    text += "\n";
  }
  return text;
}

int cmd_run(const fs::path& config_file, const std::optional<fs::path>& data_root, const GlobalFlags& flags) {
  ConfigOverrides overrides;
  overrides.seed = flags.seed;
  if (flags.strict) overrides.strict = true;
  overrides.dataset_root = data_root;
  overrides.output_dir = flags.out;

  PipelineConfig config;
  try {
    config = load_pipeline_config(config_file, overrides);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.kind() == ErrorKind::IOFailure ? 1 : 2;
  }

  std::optional<Pipeline> pipeline;
  try {
    pipeline.emplace(build_pipeline(config.spec));
  } catch (const Error& e) {
    std::cerr << "error: pipeline build failed: " << e.what() << "\n";
    return 3;
  }

  PipelineRun run;
  const auto started = std::chrono::steady_clock::now();
  try {
    run = run_pipeline(*pipeline);
  } catch (const StageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.kind() == ErrorKind::IOFailure ? 1 : 4;
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

  try {
    const auto& dir = config.output_dir;
    fs::create_directories(dir);
    const auto text = format_report_text(run.output.report);
    csv::write_file((dir / "report.txt").string(), text);
    csv::write_file((dir / "report.csv").string(), format_report_csv(run.output.report));
    csv::write_file((dir / "predictions.csv").string(), predictions_csv(run.output));
    csv::write_file((dir / "dropped_rows.csv").string(), dropped_csv(run.log));
    csv::write_file((dir / "exclusions.csv").string(), exclusions_csv(run.log));
    csv::write_file((dir / "extraction_issues.csv").string(), issues_csv(run.log));
    if (!run.log.selection.empty()) {
      std::string sel = "step,column,score\n";
      for (std::size_t i = 0; i < run.log.selection.size(); ++i) {
        sel += std::to_string(i) + "," + run.log.selection[i].name + "," +
               csv::format_double(run.log.selection[i].score) + "\n";
      }
      csv::write_file((dir / "selection.csv").string(), sel);
    }
    std::cout << text;
    std::cout << "stages:";
    for (const auto& t : run.trace) std::cout << " " << t.name;
    std::cout << "\n" << run.log.dropped_rows.size() << " dropped rows, " << run.log.excluded_subjects.size()
              << " excluded subjects, " << run.log.skipped_files.size() << " skipped files\n";
    std::cout << "reports written to " << dir.string() << " (" << std::fixed << std::setprecision(2) << seconds
              << " s)\n";
  } catch (const std::exception& e) {
    std::cerr << "error: writing reports: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"affectflow: affect-recognition pipelines over physiological signals"};
  app.require_subcommand(1);
  GlobalFlags flags;
  std::uint64_t seed = 0;
  std::string out;
  auto* seed_opt = app.add_option("--seed", seed, "Override the random seed");
  app.add_flag("--strict", flags.strict, "Escalate exclusions and missing reports to errors");
  auto* out_opt = app.add_option("--out", out, "Output directory");
  app.fallthrough();

  std::string validate_root, registry;
  auto* validate = app.add_subcommand("validate", "Check a dataset folder against the layout and CSV contract");
  validate->add_option("root", validate_root, "Dataset root")->required();
  auto* registry_opt = validate->add_option("--registry", registry, "Modality metadata file");

  std::string spec_file, synth_out;
  auto* synth = app.add_subcommand("synth", "Write a synthetic dataset from a JSON spec");
  synth->add_option("spec", spec_file, "Synthetic dataset spec")->required();
  synth->add_option("out", synth_out, "Output root")->required();

  std::string config_file, data_root;
  auto* run = app.add_subcommand("run", "Run a JSON pipeline config");
  run->add_option("config", config_file, "Pipeline config")->required();
  auto* data_opt = run->add_option("--data", data_root, "Override the dataset root");

  CLI11_PARSE(app, argc, argv);
  if (*seed_opt) flags.seed = seed;
  if (*out_opt) flags.out = fs::path(out);

  if (*validate) {
    return cmd_validate(validate_root, *registry_opt ? std::optional<fs::path>(registry) : std::nullopt, flags);
  }
  if (*synth) return cmd_synth(spec_file, synth_out, flags);
  if (*run) return cmd_run(config_file, *data_opt ? std::optional<fs::path>(data_root) : std::nullopt, flags);
  return 1;
}
