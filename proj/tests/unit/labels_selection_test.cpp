#include <doctest.h>

#include <set>

#include "affectflow/evaluation.hpp"
#include "affectflow/labels.hpp"
#include "affectflow/selection.hpp"
#include "test_support.hpp"

using namespace affectflow;
using namespace test_support;

namespace {

FeatureMatrix phase_rows(const std::vector<std::string>& subjects, const std::vector<std::string>& phases) {
  FeatureMatrix m;
  m.columns = {"x"};
  double v = 0.0;
  for (const auto& s : subjects) {
    for (const auto& p : phases) m.rows.push_back({s, p, 0, {v++}});
  }
  return m;
}

SelfReport report(const std::string& subject, const std::string& phase, const std::string& q, double score) {
  return {subject, phase, q, score};
}

ClassifierSpec knn(int k) {
  ClassifierSpec s;
  s.name = "knn";
  s.algorithm = Algorithm::KNN;
  s.hyperparameters["k_neighbors"] = k;
  return s;
}

/// Mean stratified cv accuracy of `scorer` on the given columns, computed via
/// the public cross-validation entry point rather than the selector's loop.
double cv_score(const FeatureMatrix& m, const LabelVector& y, const std::vector<std::size_t>& cols,
                const ClassifierSpec& scorer, int folds, std::uint64_t seed) {
  LabeledFeatures d;
  for (auto c : cols) d.matrix.columns.push_back(m.columns[c]);
  for (const auto& r : m.rows) {
    FeatureRow row{r.subject_id, r.phase, r.window_index, {}};
    for (auto c : cols) row.values.push_back(r.values[c]);
    d.matrix.rows.push_back(row);
  }
  d.labels = y;
  const std::vector<ClassifierSpec> specs{scorer};
  const auto out = cross_validate(specs, d, CVStrategy{CVStrategy::Kind::StratifiedKFold, folds, seed}, seed);
  for (const auto& [name, summary] : out.report.models.at(0).aggregate) {
    if (name == "accuracy") return summary.mean;
  }
  throw std::runtime_error("no accuracy");
}

std::vector<std::size_t> greedy_oracle(const FeatureMatrix& m, const LabelVector& y, const ClassifierSpec& scorer,
                                       std::size_t k, int folds, std::uint64_t seed) {
  std::vector<std::size_t> chosen;
  while (chosen.size() < k) {
    double best = -1.0;
    std::size_t best_col = 0;
    for (std::size_t c = 0; c < m.columns.size(); ++c) {
      if (std::find(chosen.begin(), chosen.end(), c) != chosen.end()) continue;
      auto trial = chosen;
      trial.push_back(c);
      const double s = cv_score(m, y, trial, scorer, folds, seed);
      if (s > best) {
        best = s;
        best_col = c;
      }
    }
    chosen.push_back(best_col);
  }
  return chosen;
}

}  // namespace

// --- phase labels ------------------------------------------------------------

TEST_CASE("phase maps give three-class and merged binary labels") {
  const auto m = phase_rows({"S1", "S2"}, {"baseline", "stress", "amusement"});
  const auto three = generate_phase_labels(m, {{"baseline", 0}, {"stress", 1}, {"amusement", 2}});
  CHECK(three.labels == std::vector<int>{0, 1, 2, 0, 1, 2});
  CHECK(validate_labels(three, m).ok());
  const auto two = generate_phase_labels(m, {{"baseline", 0}, {"amusement", 0}, {"stress", 1}});
  CHECK(two.labels == std::vector<int>{0, 1, 0, 0, 1, 0});

  const auto bad = phase_rows({"S1"}, {"baseline", "recovery"});
  CHECK_THROWS_KIND(generate_phase_labels(bad, {{"baseline", 0}, {"stress", 1}}), ErrorKind::UnmappedPhase);
}

// --- SUDS ------------------------------------------------------------------

TEST_CASE("SUDS fixed threshold boundary table") {
  const std::vector<std::pair<double, int>> table{{0.0, 0}, {49.9, 0}, {49.999, 0}, {50.0, 1}, {50.001, 1}, {100.0, 1}};
  std::vector<SelfReport> reports;
  for (std::size_t i = 0; i < table.size(); ++i) reports.push_back(report("S1", "p" + std::to_string(i), "SUDS", table[i].first));
  const auto labels = suds_fixed_threshold(reports);
  for (std::size_t i = 0; i < table.size(); ++i) {
    CAPTURE(table[i].first);
    CHECK(labels.at({"S1", "p" + std::to_string(i)}) == table[i].second);
  }
}

TEST_CASE("SUDS errors") {
  CHECK_THROWS_KIND(suds_fixed_threshold(std::vector<SelfReport>{report("S1", "a", "STAI", 40)}),
                    ErrorKind::WrongQuestionnaire);
  CHECK_THROWS_KIND(suds_fixed_threshold(std::vector<SelfReport>{report("S1", "a", "SUDS", 101)}),
                    ErrorKind::InvalidReport);
}

TEST_CASE("raising a SUDS score never flips its label from 1 to 0") {
  Gen g(70);
  for (int trial = 0; trial < 2000; ++trial) {
    const double a = g.uniform(0.0, 100.0);
    const double b = g.uniform(a, 100.0);
    const auto la = suds_fixed_threshold(std::vector<SelfReport>{report("S", "p", "SUDS", a)}).at({"S", "p"});
    const auto lb = suds_fixed_threshold(std::vector<SelfReport>{report("S", "p", "SUDS", b)}).at({"S", "p"});
    CHECK(lb >= la);
  }
}

// --- STAI ------------------------------------------------------------------

TEST_CASE("STAI dynamic threshold hand-computed table") {
  // S1: theta = 45 -> 30:0, 45:1, 60:1.  S2: theta = 35 -> 34:0, 36:1.  S3: all equal -> all 1.
  const std::vector<SelfReport> reports{
      report("S1", "rest", "STAI", 30), report("S1", "mid", "STAI", 45),   report("S1", "stress", "STAI", 60),
      report("S2", "rest", "STAI", 34), report("S2", "stress", "STAI", 36), report("S3", "rest", "STAI", 40),
      report("S3", "stress", "STAI", 40)};
  const std::map<PhaseKey, int> expected{{{"S1", "rest"}, 0}, {{"S1", "mid"}, 1},   {{"S1", "stress"}, 1},
                                         {{"S2", "rest"}, 0}, {{"S2", "stress"}, 1}, {{"S3", "rest"}, 1},
                                         {{"S3", "stress"}, 1}};
  CHECK(stai_dynamic_threshold(reports) == expected);

  const std::vector<SelfReport> suds_scale{report("S1", "rest", "STAI", 10), report("S1", "stress", "STAI", 20)};
  const auto wide = stai_dynamic_threshold(suds_scale, ScoreRange{0, 100});
  CHECK(wide.at({"S1", "rest"}) == 0);
  CHECK(wide.at({"S1", "stress"}) == 1);
}

TEST_CASE("STAI errors") {
  CHECK_THROWS_KIND(stai_dynamic_threshold(std::vector<SelfReport>{report("S1", "rest", "STAI", 40)}),
                    ErrorKind::InsufficientReports);
  CHECK_THROWS_KIND(stai_dynamic_threshold(std::vector<SelfReport>{report("S1", "rest", "STAI", 10),
                                                                   report("S1", "stress", "STAI", 40)}),
                    ErrorKind::InvalidReport);
  CHECK_THROWS_KIND(stai_dynamic_threshold(std::vector<SelfReport>{report("S1", "rest", "SUDS", 30),
                                                                   report("S1", "stress", "SUDS", 40)}),
                    ErrorKind::WrongQuestionnaire);
}

TEST_CASE("STAI labels are invariant to shifting one subject's scores") {
  Gen g(71);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<SelfReport> base;
    const auto subjects = g.integer(1, 4);
    for (long s = 0; s < subjects; ++s) {
      const auto phases = g.integer(2, 5);
      // Tied scores are common in questionnaires; draw integers half the time.
      const bool integral = g.coin();
      for (long p = 0; p < phases; ++p) {
        double v = g.uniform(20.0, 60.0);
        if (integral) v = std::round(v / 5.0) * 5.0;
        base.push_back(report("S" + std::to_string(s), "p" + std::to_string(p), "STAI", v));
      }
    }
    const auto before = stai_dynamic_threshold(base, ScoreRange{-1000, 1000});
    const std::string target = "S" + std::to_string(g.integer(0, subjects - 1));
    const double shift = g.uniform(-15.0, 15.0);
    auto shifted = base;
    for (auto& r : shifted) {
      if (r.subject_id == target) r.score += shift;
    }
    CHECK(stai_dynamic_threshold(shifted, ScoreRange{-1000, 1000}) == before);
  }
}

// --- attach_labels and report files -------------------------------------------

TEST_CASE("attach_labels drop policy, strict mode and custom rules") {
  const auto m = phase_rows({"S1", "S2"}, {"rest", "stress"});
  LabelRule phase;
  phase.phase_to_class = {{"rest", 0}, {"stress", 1}};
  const auto all = attach_labels(m, phase);
  CHECK(all.data.labels.labels.size() == 4);
  CHECK(all.dropped.empty());

  LabelRule suds;
  suds.kind = LabelRule::Kind::FixedThreshold;
  const std::vector<SelfReport> reports{report("S1", "rest", "SUDS", 10), report("S1", "stress", "SUDS", 70),
                                        report("S2", "rest", "SUDS", 20)};
  const auto lenient = attach_labels(m, suds, reports);
  CHECK(lenient.data.matrix.rows.size() == 3);
  REQUIRE(lenient.dropped.size() == 1);
  CHECK(lenient.dropped[0].subject_id == "S2");
  CHECK(lenient.data.labels.labels == std::vector<int>{0, 1, 0});
  CHECK(validate_labels(lenient.data.labels, lenient.data.matrix).ok());
  CHECK_THROWS_KIND(attach_labels(m, suds, reports, true), ErrorKind::MissingReport);

  LabelRule custom;
  custom.kind = LabelRule::Kind::Custom;
  custom.custom = [](const FeatureRow& r) { return std::get<double>(r.values[0]) > 1.5 ? 1 : 0; };
  CHECK(attach_labels(m, custom).data.labels.labels == std::vector<int>{0, 0, 1, 1});
}

TEST_CASE("self-report files round trip and reject malformed content") {
  const std::vector<SelfReport> reports{report("S1", "rest", "SUDS", 12.5), report("S1", "stress", "STAI", 55)};
  const auto text = format_self_reports(reports);
  const auto back = parse_self_reports(text, "S1");
  REQUIRE(back.size() == 2);
  CHECK(back[0].questionnaire == "SUDS");
  CHECK(back[1].score == 55.0);
  CHECK_THROWS_KIND(parse_self_reports("phase,score\nrest,1\n", "S1"), ErrorKind::MissingHeader);
  CHECK_THROWS_KIND(parse_self_reports("phase,questionnaire,score\nrest,SUDS,x\n", "S1"), ErrorKind::NonNumericCell);
  CHECK_THROWS_KIND(parse_self_reports("phase,questionnaire,score\nrest,SUDS,1\nrest,SUDS,2\n", "S1"),
                    ErrorKind::DuplicateEntry);
}

// --- one-hot ---------------------------------------------------------------

TEST_CASE("one-hot encoding examples") {
  FeatureMatrix m;
  m.columns = {"device", "x"};
  m.rows = {{"S1", "a", 0, {Category{"wrist"}, 1.0}},
            {"S1", "b", 0, {Category{"chest"}, 2.0}},
            {"S1", "c", 0, {Category{"wrist"}, 3.0}}};
  const auto e = one_hot_encode(m);
  CHECK(e.columns == std::vector<std::string>{"x", "device=chest", "device=wrist"});
  for (const auto& r : e.rows) CHECK(std::get<double>(r.values[1]) + std::get<double>(r.values[2]) == 1.0);

  FeatureMatrix numeric;
  numeric.columns = {"a", "b"};
  numeric.rows = {{"S1", "a", 0, {1.0, 2.0}}};
  const auto same = one_hot_encode(numeric);
  CHECK(same.columns == numeric.columns);
  CHECK(std::get<double>(same.rows[0].values[1]) == 2.0);

  FeatureMatrix single;
  single.columns = {"site"};
  single.rows = {{"S1", "a", 0, {Category{"lab"}}}, {"S2", "a", 0, {Category{"lab"}}}};
  const auto one = one_hot_encode(single);
  CHECK(one.columns == std::vector<std::string>{"site=lab"});
  for (const auto& r : one.rows) CHECK(std::get<double>(r.values[0]) == 1.0);
}

TEST_CASE("one-hot groups sum to exactly one on random matrices") {
  Gen g(72);
  for (int trial = 0; trial < 200; ++trial) {
    FeatureMatrix m;
    const auto cols = g.integer(1, 5);
    std::vector<bool> categorical;
    for (long c = 0; c < cols; ++c) {
      m.columns.push_back("c" + std::to_string(c));
      categorical.push_back(g.coin());
    }
    const auto rows = g.integer(1, 20);
    for (long r = 0; r < rows; ++r) {
      FeatureRow row{"S1", "p", static_cast<std::size_t>(r), {}};
      for (long c = 0; c < cols; ++c) {
        if (categorical[c]) {
          row.values.push_back(Category{"v" + std::to_string(g.integer(0, 3))});
        } else {
          row.values.push_back(g.normal());
        }
      }
      m.rows.push_back(row);
    }
    const auto e = one_hot_encode(m);
    std::map<std::string, std::vector<std::size_t>> groups;
    for (std::size_t c = 0; c < e.columns.size(); ++c) {
      const auto eq = e.columns[c].find('=');
      if (eq != std::string::npos) groups[e.columns[c].substr(0, eq)].push_back(c);
    }
    std::size_t numeric = 0;
    for (bool b : categorical) numeric += b ? 0 : 1;
    CHECK(e.columns.size() >= numeric + groups.size());
    for (const auto& r : e.rows) {
      for (const auto& [_, idx] : groups) {
        double sum = 0.0;
        for (auto c : idx) sum += std::get<double>(r.values[c]);
        CHECK(sum == 1.0);
      }
    }
  }
}

// --- sequential forward selection -----------------------------------------------

TEST_CASE("SFS picks a dominant column") {
  Gen g(73);
  FeatureMatrix m;
  m.columns = {"signal", "noise1", "noise2"};
  LabelVector y;
  for (int i = 0; i < 40; ++i) {
    const int label = i % 2;
    m.rows.push_back({"S" + std::to_string(i), "p", 0, {label * 10.0 + g.uniform(), g.normal(), g.normal()}});
    y.labels.push_back(label);
  }
  const auto r = sequential_forward_selection(m, y, knn(3), 1);
  REQUIRE(r.steps.size() == 1);
  CHECK(r.steps[0].column == 0);
  CHECK(r.matrix.columns == std::vector<std::string>{"signal"});
  CHECK(r.steps[0].score == 1.0);
}

TEST_CASE("SFS matches an independent greedy replay") {
  Gen g(74);
  for (int trial = 0; trial < 4; ++trial) {
    FeatureMatrix m;
    for (int c = 0; c < 5; ++c) m.columns.push_back("f" + std::to_string(c));
    LabelVector y;
    const std::vector<double> weight{0.3, 1.2, 0.0, 0.8, 0.5};
    for (int i = 0; i < 60; ++i) {
      const int label = static_cast<int>(g.integer(0, 1));
      FeatureRow row{"S" + std::to_string(i), "p", 0, {}};
      for (int c = 0; c < 5; ++c) row.values.push_back(label * weight[c] + g.normal());
      m.rows.push_back(row);
      y.labels.push_back(label);
    }
    const auto seed = static_cast<std::uint64_t>(trial);
    const auto r = sequential_forward_selection(m, y, knn(5), 2, 5, seed);
    const auto oracle = greedy_oracle(m, y, knn(5), 2, 5, seed);
    REQUIRE(r.steps.size() == 2);
    CHECK(r.steps[0].column == oracle[0]);
    CHECK(r.steps[1].column == oracle[1]);
    CHECK(r.steps[1].score == doctest::Approx(cv_score(m, y, oracle, knn(5), 5, seed)));

    // Same inputs, same selection.
    const auto again = sequential_forward_selection(m, y, knn(5), 2, 5, seed);
    CHECK(again.steps[0].column == r.steps[0].column);
    CHECK(again.steps[1].column == r.steps[1].column);
  }
}

TEST_CASE("SFS rejects k out of range and categorical input") {
  FeatureMatrix m;
  m.columns = {"a", "b", "c", "d"};
  LabelVector y;
  for (int i = 0; i < 10; ++i) {
    m.rows.push_back({"S1", "p", static_cast<std::size_t>(i), {1.0 * i, 2.0, 3.0, 4.0}});
    y.labels.push_back(i % 2);
  }
  CHECK_THROWS_KIND(sequential_forward_selection(m, y, knn(1), 5), ErrorKind::KTooLarge);
  CHECK_THROWS_KIND(sequential_forward_selection(m, y, knn(1), 4), ErrorKind::KTooLarge);
  CHECK_THROWS_KIND(sequential_forward_selection(m, y, knn(1), 0), ErrorKind::KTooLarge);
  m.rows[0].values[1] = Category{"x"};
  CHECK_THROWS_KIND(sequential_forward_selection(m, y, knn(1), 2), ErrorKind::NonNumericFeature);
}
