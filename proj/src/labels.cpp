#include "affectflow/labels.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <optional>
#include <set>

#include "affectflow/csv.hpp"
#include "affectflow/error.hpp"

namespace affectflow {

std::vector<SelfReport> parse_self_reports(const std::string& text, const std::string& subject_id) {
  auto all = csv::lines(text);
  std::size_t first = 0;
  while (first < all.size() && csv::trim(all[first]).empty()) ++first;
  if (first == all.size()) fail(ErrorKind::MissingHeader, "phase (empty report file)");

  std::optional<std::size_t> p_col, q_col, s_col;
  auto header = csv::split(all[first]);
  for (std::size_t c = 0; c < header.size(); ++c) {
    auto name = csv::trim(header[c]);
    if (name == "phase") p_col = c;
    else if (name == "questionnaire") q_col = c;
    else if (name == "score") s_col = c;
  }
  if (!p_col) fail(ErrorKind::MissingHeader, "phase");
  if (!q_col) fail(ErrorKind::MissingHeader, "questionnaire");
  if (!s_col) fail(ErrorKind::MissingHeader, "score");
  const std::size_t need = std::max({*p_col, *q_col, *s_col}) + 1;

  std::vector<SelfReport> out;
  std::set<std::pair<std::string, std::string>> seen;
  std::size_t row = 0;
  for (std::size_t i = first + 1; i < all.size(); ++i) {
    if (csv::trim(all[i]).empty()) continue;
    ++row;
    auto cells = csv::split(all[i]);
    if (cells.size() < need) fail(ErrorKind::NonNumericCell, "row " + std::to_string(row) + ": missing cell");
    auto score = csv::parse_double(cells[*s_col]);
    if (!score || !std::isfinite(*score)) {
      fail(ErrorKind::NonNumericCell, "row " + std::to_string(row) + ": '" + std::string(all[i]) + "'");
    }
    SelfReport r{subject_id, std::string(csv::trim(cells[*p_col])), std::string(csv::trim(cells[*q_col])), *score};
    std::transform(r.questionnaire.begin(), r.questionnaire.end(), r.questionnaire.begin(),
                   [](unsigned char ch) { return static_cast<char>(std::toupper(ch)); });
    if (!seen.insert({r.phase, r.questionnaire}).second) {
      fail(ErrorKind::DuplicateEntry, "row " + std::to_string(row) + ": second " + r.questionnaire +
                                          " report for phase " + r.phase);
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<SelfReport> load_self_reports(const std::filesystem::path& path, const std::string& subject_id) {
  const std::string text = csv::read_file(path.string());
  try {
    return parse_self_reports(text, subject_id);
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.detail());
  }
}

std::string format_self_reports(std::span<const SelfReport> reports) {
  std::string out = "phase,questionnaire,score\n";
  for (const auto& r : reports) out += r.phase + "," + r.questionnaire + "," + csv::format_double(r.score) + "\n";
  return out;
}

LabelVector generate_phase_labels(const FeatureMatrix& matrix, const std::map<std::string, int>& phase_to_class,
                                  std::map<int, std::string> class_names) {
  LabelVector out;
  out.labels.reserve(matrix.rows.size());
  for (const auto& row : matrix.rows) {
    auto it = phase_to_class.find(row.phase);
    if (it == phase_to_class.end()) fail(ErrorKind::UnmappedPhase, row.phase);
    out.labels.push_back(it->second);
  }
  // Unnamed classes are named after the phases mapped to them.
  for (const auto& [phase, cls] : phase_to_class) {
    if (class_names.count(cls)) continue;
    std::string joined;
    for (const auto& [p, c] : phase_to_class) {
      if (c == cls) joined += (joined.empty() ? "" : "+") + p;
    }
    class_names[cls] = joined;
  }
  out.class_names = std::move(class_names);
  return out;
}

namespace {

void check_questionnaire(std::span<const SelfReport> reports, const std::string& expected, ScoreRange range) {
  for (const auto& r : reports) {
    if (r.questionnaire != expected) {
      fail(ErrorKind::WrongQuestionnaire, r.subject_id + "/" + r.phase + ": expected " + expected + ", got " +
                                              r.questionnaire);
    }
    if (!(r.score >= range.lo && r.score <= range.hi)) {
      fail(ErrorKind::InvalidReport, r.subject_id + "/" + r.phase + ": " + expected + " score " +
                                         csv::format_double(r.score) + " outside [" + csv::format_double(range.lo) +
                                         ", " + csv::format_double(range.hi) + "]");
    }
  }
}

void insert_unique(ReportLabels& out, const SelfReport& r, int label) {
  if (!out.emplace(PhaseKey{r.subject_id, r.phase}, label).second) {
    fail(ErrorKind::DuplicateEntry, "two reports for " + r.subject_id + "/" + r.phase);
  }
}

ReportLabels fixed_threshold(std::span<const SelfReport> reports, const std::string& questionnaire, double threshold,
                             ScoreRange range) {
  check_questionnaire(reports, questionnaire, range);
  ReportLabels out;
  for (const auto& r : reports) insert_unique(out, r, r.score >= threshold ? 1 : 0);
  return out;
}

ReportLabels dynamic_threshold(std::span<const SelfReport> reports, const std::string& questionnaire,
                               ScoreRange range) {
  check_questionnaire(reports, questionnaire, range);
  std::map<std::string, std::vector<const SelfReport*>> by_subject;
  for (const auto& r : reports) by_subject[r.subject_id].push_back(&r);
  ReportLabels out;
  for (const auto& [subject, list] : by_subject) {
    if (list.size() < 2) {
      fail(ErrorKind::InsufficientReports, subject + " has " + std::to_string(list.size()) + " " + questionnaire +
                                               " report(s), need at least 2");
    }
    double sum = 0.0;
    for (const auto* r : list) sum += r->score;
    const double theta = sum / static_cast<double>(list.size());
    const double slack = 1e-9 * std::max(1.0, std::abs(theta));
    for (const auto* r : list) insert_unique(out, *r, r->score >= theta - slack ? 1 : 0);
  }
  return out;
}

ScoreRange effective_range(ScoreRange r, const std::string& questionnaire) {
  if (r.hi > r.lo) return r;
  if (questionnaire == "SUDS") return kSudsRange;
  if (questionnaire == "STAI") return kStaiRange;
  return {-std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
}

}  // namespace

ReportLabels suds_fixed_threshold(std::span<const SelfReport> reports, double threshold) {
  return fixed_threshold(reports, "SUDS", threshold, kSudsRange);
}

ReportLabels stai_dynamic_threshold(std::span<const SelfReport> reports, ScoreRange range) {
  return dynamic_threshold(reports, "STAI", range);
}

std::string to_string(LabelRule::Kind kind) {
  switch (kind) {
    case LabelRule::Kind::PhaseMap: return "phase-map";
    case LabelRule::Kind::FixedThreshold: return "fixed-threshold";
    case LabelRule::Kind::DynamicThreshold: return "dynamic-threshold";
    case LabelRule::Kind::Custom: return "custom";
  }
  return "?";
}

LabelingResult attach_labels(const FeatureMatrix& matrix, const LabelRule& rule, std::span<const SelfReport> reports,
                             bool strict) {
  LabelingResult result;
  auto& out = result.data;

  if (rule.kind == LabelRule::Kind::PhaseMap) {
    out.matrix = matrix;
    out.labels = generate_phase_labels(matrix, rule.phase_to_class, rule.class_names);
    return result;
  }
  if (rule.kind == LabelRule::Kind::Custom) {
    if (!rule.custom) fail(ErrorKind::InvalidArgument, "custom label rule has no function");
    out.matrix = matrix;
    for (const auto& row : matrix.rows) {
      const int label = rule.custom(row);
      out.labels.labels.push_back(label);
      if (!rule.class_names.count(label)) out.labels.class_names[label] = "class " + std::to_string(label);
    }
    for (const auto& [id, name] : rule.class_names) out.labels.class_names[id] = name;
    return result;
  }

  const bool fixed = rule.kind == LabelRule::Kind::FixedThreshold;
  const std::string questionnaire = !rule.questionnaire.empty() ? rule.questionnaire : (fixed ? "SUDS" : "STAI");
  std::vector<SelfReport> relevant;
  for (const auto& r : reports) {
    if (r.questionnaire == questionnaire) relevant.push_back(r);
  }
  const ScoreRange range = effective_range(rule.range, questionnaire);
  const ReportLabels by_phase = fixed ? fixed_threshold(relevant, questionnaire, rule.threshold, range)
                                      : dynamic_threshold(relevant, questionnaire, range);

  out.matrix.columns = matrix.columns;
  for (const auto& row : matrix.rows) {
    auto it = by_phase.find({row.subject_id, row.phase});
    if (it == by_phase.end()) {
      if (strict) fail(ErrorKind::MissingReport, "no " + questionnaire + " report for " + row.subject_id + "/" + row.phase);
      result.dropped.push_back({row.subject_id, row.phase, row.window_index, "no " + questionnaire + " report"});
      continue;
    }
    out.matrix.rows.push_back(row);
    out.labels.labels.push_back(it->second);
  }
  out.labels.class_names = rule.class_names;
  if (!out.labels.class_names.count(0)) out.labels.class_names[0] = "non-stress";
  if (!out.labels.class_names.count(1)) out.labels.class_names[1] = "stress";
  return result;
}

}  // namespace affectflow
