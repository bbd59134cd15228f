#include <doctest.h>

#include "affectflow/acquisition.hpp"
#include "affectflow/csv.hpp"
#include "affectflow/data_model.hpp"
#include "test_support.hpp"

using namespace affectflow;
using namespace test_support;

TEST_CASE("validate_time_series accepts a conforming series") {
  TimeSeries s("S1", "rest", modality("ECG"), {0.0, 0.004, 0.008}, {1, 2, 3}, 250.0);
  CHECK(validate_time_series(s).ok());
}

TEST_CASE("validate_time_series reports the first non-increasing timestamp") {
  TimeSeries s("S1", "rest", modality("ECG"), {0.0, 0.0, 0.004}, {1, 2, 3}, 250.0);
  const auto r = validate_time_series(s);
  REQUIRE_FALSE(r.ok());
  CHECK(r.violations.front().describe() == "non-increasing at index 1");
}

TEST_CASE("validate_time_series reports a length mismatch") {
  TimeSeries s("S1", "rest", modality("ECG"), {0.0, 0.004, 0.008}, {1, 2}, 250.0);
  const auto r = validate_time_series(s);
  REQUIRE_FALSE(r.ok());
  CHECK(r.violations.front().what == "length mismatch");
}

TEST_CASE("irregular timestamps give the median-delta sample rate") {
  TimeSeries s("S1", "rest", modality("EDA"), {0.0, 0.5, 1.0, 1.4, 2.0}, {1, 2, 3, 4, 5});
  CHECK(s.sample_rate_hz() == doctest::Approx(2.0));
  CHECK_FALSE(s.is_uniform());
}

TEST_CASE("uniform series deltas equal 1/fs") {
  const auto s = uniform_series(std::vector<double>(1000, 0.0), 700.0);
  CHECK(s.is_uniform(1e-9));
  CHECK(s.duration_s() == doctest::Approx(1000.0 / 700.0));
}

TEST_CASE("SubjectBundle rejects duplicate phase and modality") {
  SubjectBundle b;
  b.add(uniform_series({1, 2, 3}, 4.0, "ECG"));
  b.add(uniform_series({1, 2, 3}, 4.0, "EDA"));
  CHECK_THROWS_KIND(b.add(uniform_series({1, 2, 3}, 4.0, "ECG")), ErrorKind::DuplicateEntry);
  CHECK(b.series_count() == 2);
}

TEST_CASE("merging disjoint bundles sums the subject counts") {
  Gen g(3);
  for (int trial = 0; trial < 50; ++trial) {
    SubjectBundle a, b;
    const auto na = g.integer(0, 5), nb = g.integer(0, 5);
    for (long i = 0; i < na; ++i) a.add(uniform_series({1, 2}, 1.0, "ECG", "A" + std::to_string(i)));
    for (long i = 0; i < nb; ++i) b.add(uniform_series({1, 2}, 1.0, "ECG", "B" + std::to_string(i)));
    CHECK(a.merged(b).subject_count() == static_cast<std::size_t>(na + nb));
  }
  SubjectBundle a, b;
  a.add(uniform_series({1, 2}, 1.0, "ECG", "S1"));
  b.add(uniform_series({1, 2}, 1.0, "EDA", "S1"));
  CHECK_THROWS_KIND(a.merged(b), ErrorKind::DuplicateEntry);
}

TEST_CASE("feature matrix validation catches width, key and mixed-type violations") {
  FeatureMatrix m;
  m.columns = {"a", "b"};
  m.rows.push_back({"S1", "rest", 0, {1.0, Category{"x"}}});
  CHECK(validate_feature_matrix(m).ok());
  m.rows.push_back({"S1", "rest", 0, {2.0, 3.0}});
  const auto r = validate_feature_matrix(m);
  CHECK(r.violations.size() == 2);  // duplicate key + mixed column b
  m.rows.push_back({"S1", "rest", 1, {2.0}});
  CHECK(validate_feature_matrix(m).violations.size() == 3);
}

TEST_CASE("label vector validation") {
  FeatureMatrix m;
  m.columns = {"a"};
  m.rows = {{"S1", "rest", 0, {1.0}}, {"S1", "stress", 0, {2.0}}};
  LabelVector y{{0, 1}, {{0, "rest"}, {1, "stress"}}};
  CHECK(validate_labels(y, m).ok());
  y.labels.push_back(1);
  CHECK_FALSE(validate_labels(y, m).ok());
  y.labels = {0, 2};
  CHECK_FALSE(validate_labels(y, m).ok());
}

TEST_CASE("drop_incomplete_rows removes rows with absent cells and keeps labels aligned") {
  LabeledFeatures d;
  d.matrix.columns = {"a", "b"};
  d.matrix.rows = {{"S1", "rest", 0, {1.0, 2.0}}, {"S1", "rest", 1, {1.0, std::monostate{}}}, {"S1", "rest", 2, {3.0, 4.0}}};
  d.labels = {{0, 1, 1}, {{0, "a"}, {1, "b"}}};
  const auto dropped = drop_incomplete_rows(d);
  REQUIRE(dropped.size() == 1);
  CHECK(dropped[0].window_index == 1);
  CHECK(d.matrix.rows.size() == 2);
  CHECK(d.labels.labels == std::vector<int>{0, 1});
}

TEST_CASE("CSV round trip reproduces timestamps and values bit-exactly") {
  Gen g(11);
  for (int trial = 0; trial < 200; ++trial) {
    const auto n = static_cast<std::size_t>(g.integer(2, 60));
    std::vector<double> t(n), v(n);
    double at = g.uniform(0.0, 10.0);
    for (std::size_t i = 0; i < n; ++i) {
      at += g.uniform(1e-4, 0.5);
      t[i] = at;
      v[i] = g.normal() * std::pow(10.0, static_cast<double>(g.integer(-6, 6)));
    }
    TimeSeries s("S1", "rest", modality("EDA"), t, v);
    const auto back = parse_csv_signal(format_csv_signal(s), modality("EDA"), "S1", "rest");
    REQUIRE(back.size() == n);
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(back.timestamps()[i] == t[i]);
      CHECK(back.values()[i] == v[i]);
    }
  }
}

TEST_CASE("csv::format_double is the shortest round-trip text") {
  CHECK(csv::format_double(0.1) == "0.1");
  CHECK(csv::format_double(1.0) == "1");
  CHECK(csv::parse_double(csv::format_double(1.0 / 3.0)).value() == 1.0 / 3.0);
  CHECK_FALSE(csv::parse_double("abc").has_value());
  CHECK_FALSE(csv::parse_double("1.5x").has_value());
}
