#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "affectflow/data_model.hpp"

namespace affectflow {

struct SelfReport {
  std::string subject_id;
  std::string phase;
  std::string questionnaire;  // "SUDS", "STAI", or any other tag
  double score = 0.0;
};

/// Parses `{subject}_reports.csv` text: header `phase,questionnaire,score`.
/// Throws MissingHeader, NonNumericCell, DuplicateEntry.
std::vector<SelfReport> parse_self_reports(const std::string& text, const std::string& subject_id);
std::vector<SelfReport> load_self_reports(const std::filesystem::path& path, const std::string& subject_id);
std::string format_self_reports(std::span<const SelfReport> reports);

struct ScoreRange {
  double lo = 0.0;
  double hi = 0.0;
};

inline constexpr ScoreRange kSudsRange{0.0, 100.0};
inline constexpr ScoreRange kStaiRange{20.0, 80.0};

/// (subject, phase) -> class id.
using PhaseKey = std::pair<std::string, std::string>;
using ReportLabels = std::map<PhaseKey, int>;

/// Throws UnmappedPhase on the first row whose phase is not in the map.
LabelVector generate_phase_labels(const FeatureMatrix& matrix, const std::map<std::string, int>& phase_to_class,
                                  std::map<int, std::string> class_names = {});

/// score >= threshold -> 1. Every report must be SUDS (WrongQuestionnaire)
/// and inside [0, 100] (InvalidReport).
ReportLabels suds_fixed_threshold(std::span<const SelfReport> reports, double threshold = 50.0);

/// Per subject, theta = mean of that subject's scores; score >= theta -> 1.
/// Equality is judged with a relative slack of 1e-9 so that shifting all of a
/// subject's scores by a constant cannot flip a tie through rounding.
/// Throws WrongQuestionnaire, InvalidReport, InsufficientReports (< 2 reports).
ReportLabels stai_dynamic_threshold(std::span<const SelfReport> reports, ScoreRange range = kStaiRange);

struct LabelRule {
  enum class Kind { PhaseMap, FixedThreshold, DynamicThreshold, Custom };
  Kind kind = Kind::PhaseMap;
  std::map<std::string, int> phase_to_class;
  std::map<int, std::string> class_names;
  std::string questionnaire;  // defaults: SUDS for fixed, STAI for dynamic
  double threshold = 50.0;
  ScoreRange range{};         // zero width means the questionnaire's default
  std::function<int(const FeatureRow&)> custom;
};

std::string to_string(LabelRule::Kind kind);

struct LabelingResult {
  LabeledFeatures data;
  std::vector<DroppedRow> dropped;
};

/// Labels every row. With report-based rules, rows whose (subject, phase) has
/// no report are dropped and listed, or raise MissingReport when `strict`.
LabelingResult attach_labels(const FeatureMatrix& matrix, const LabelRule& rule,
                             std::span<const SelfReport> reports = {}, bool strict = false);

}  // namespace affectflow
