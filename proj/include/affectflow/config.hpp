#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "affectflow/pipeline.hpp"
#include "affectflow/synth.hpp"

namespace affectflow {

/// Overrides applied on top of a config document (command-line flags).
struct ConfigOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<bool> strict;
  std::optional<std::filesystem::path> dataset_root;
  std::optional<std::filesystem::path> output_dir;
};

struct PipelineConfig {
  PipelineSpec spec;
  std::filesystem::path output_dir = "affectflow-out";
  std::vector<std::string> stage_names;
};

/// Parses and validates a JSON pipeline document without touching the file
/// system. Every problem is collected; a ConfigError lists them by JSON path.
/// Stages run in the order of the optional "stages" array, or else the
/// canonical order of the sections present.
PipelineConfig parse_pipeline_config(std::string_view json_text, const ConfigOverrides& overrides = {});

/// Throws IOFailure when the file cannot be read.
PipelineConfig load_pipeline_config(const std::filesystem::path& path, const ConfigOverrides& overrides = {});

/// JSON synthetic-dataset document. Structural problems and values rejected
/// by validate_synth_dataset_spec both raise ConfigError.
SynthDatasetSpec parse_synth_spec(std::string_view json_text, std::optional<std::uint64_t> seed = std::nullopt);
SynthDatasetSpec load_synth_spec(const std::filesystem::path& path, std::optional<std::uint64_t> seed = std::nullopt);

}  // namespace affectflow
