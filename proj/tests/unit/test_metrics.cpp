// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The respnet Authors

#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "respnet/error.hpp"
#include "respnet/metrics.hpp"

using namespace respnet;
namespace fs = std::filesystem;

TEST_SUITE("evaluation") {

TEST_CASE("published score pairs") {
  const Scores a = scores(0.81, 0.91);
  CHECK(a.as == doctest::Approx(0.86).epsilon(0.005));
  CHECK(a.hs == doctest::Approx(0.86).epsilon(0.005));
  CHECK(a.score == doctest::Approx(0.86).epsilon(0.005));
  const Scores b = scores(0.66, 0.59);
  // Published to two decimals; 0.625 rounds half up.
  constexpr double kHalfUlp = 0.005 + 1e-12;
  CHECK(std::abs(b.as - 0.63) <= kHalfUlp);
  CHECK(std::abs(b.hs - 0.62) <= kHalfUlp);
}

TEST_CASE("score arithmetic corner cases") {
  const Scores z = scores(0.0, 0.0);
  CHECK(z.as == 0.0);
  CHECK(z.hs == 0.0);
  CHECK(z.score == 0.0);
  const Scores one = scores(1.0, 1.0);
  CHECK(one.score == 1.0);
  const Scores half = scores(1.0, 0.0);
  CHECK(half.as == 0.5);
  CHECK(half.hs == 0.0);
  CHECK(half.score == 0.25);
}

TEST_CASE("task specs and label mapping") {
  const TaskSpec t11 = task_spec(TaskId::T1_1);
  CHECK(t11.class_names == std::vector<std::string>{"Normal", "Adventitious"});
  CHECK(t11.map("N") == 0);
  for (const char* l : {"Rho", "W", "Str", "CC", "FC", "B"}) CHECK(t11.map(l) == 1);
  const TaskSpec t12 = task_spec(TaskId::T1_2);
  CHECK(t12.num_classes() == 7);
  CHECK(t12.map("FC") == 5);
  const TaskSpec t21 = task_spec(TaskId::T2_1);
  CHECK(t21.map("N") == 0);
  CHECK(t21.map("CAS") == 1);
  CHECK(t21.map("DAS") == 1);
  CHECK(t21.map("CD") == 1);
  CHECK(t21.map("PQ") == 2);
  const TaskSpec t22 = task_spec(TaskId::T2_2);
  CHECK(t22.level == Level::Record);
  CHECK(t22.map("CD") == 3);
  CHECK_THROWS_AS(t22.map("Rho"), DataError);
  CHECK_THROWS_AS(t11.map("CAS"), DataError);
  CHECK(parse_task("2-1") == TaskId::T2_1);
  CHECK_THROWS_AS(parse_task("3-1"), InvalidConfig);
}

TEST_CASE("se credits only exact adventitious hits") {
  // 2-2: N CAS DAS CD PQ
  const std::vector<std::size_t> truth{0, 0, 1, 1, 2, 3, 4};
  const std::vector<std::size_t> pred{0, 1, 1, 2, 2, 0, 4};
  const ScoreReport r = evaluate_predictions(task_spec(TaskId::T2_2), truth, pred);
  CHECK(r.sp == doctest::Approx(0.5));
  CHECK(r.se == doctest::Approx(3.0 / 5.0));
  const Scores s = scores(r.se, r.sp);
  CHECK(r.as == s.as);
  CHECK(r.hs == s.hs);
  CHECK(r.score == s.score);
  CHECK(r.per_class_recall == std::vector<double>{0.5, 0.5, 1.0, 0.0, 1.0});
  CHECK(r.confusion.at(3, 0) == 1);
  CHECK(r.confusion.total() == 7);
}

TEST_CASE("perfect predictions score one") {
  const std::vector<std::size_t> labels{0, 1, 2, 3, 4, 0};
  const ScoreReport r = evaluate_predictions(task_spec(TaskId::T2_2), labels, labels);
  CHECK(r.score == 1.0);
  CHECK(r.flags.empty());
}

TEST_CASE("degenerate splits are flagged, not fatal") {
  const std::vector<std::size_t> normals{0, 0};
  const ScoreReport r = evaluate_predictions(task_spec(TaskId::T1_1), normals, normals);
  CHECK(r.se == 0.0);
  CHECK(r.sp == 1.0);
  REQUIRE(r.flags.size() == 1);
  CHECK(r.flags[0].find("SE") == 0);
  const std::vector<std::size_t> advs{1, 1};
  const ScoreReport q = evaluate_predictions(task_spec(TaskId::T1_1), advs, advs);
  REQUIRE(q.flags.size() == 1);
  CHECK(q.flags[0].find("SP") == 0);
}

TEST_CASE("confusion rejects bad input") {
  const std::vector<std::size_t> a{0, 1}, b{0};
  CHECK_THROWS_AS(confusion(a, b, 2), InvalidInput);
  const std::vector<std::size_t> c{0, 2};
  CHECK_THROWS_AS(confusion(a, c, 2), InvalidInput);
}

TEST_CASE("argmax ties go to the lowest index") {
  CHECK(argmax(std::vector<double>{0.2, 0.4, 0.4}) == 1);
  CHECK(argmax(std::vector<double>{1.0}) == 0);
}

TEST_CASE("report json round trip") {
  const std::vector<std::size_t> truth{0, 1, 2, 0}, pred{0, 2, 2, 1};
  const ScoreReport r = evaluate_predictions(task_spec(TaskId::T2_1), truth, pred);
  const ScoreReport back = report_from_json(report_to_json(r));
  CHECK(back.task == "2-1");
  CHECK(back.class_names == r.class_names);
  CHECK(back.confusion == r.confusion);
  CHECK(back.se == r.se);
  CHECK(back.sp == r.sp);
  CHECK(back.score == r.score);
  CHECK(back.per_class_recall == r.per_class_recall);
  CHECK(report_to_json(back) == report_to_json(r));
  CHECK_THROWS_AS(report_from_json("{\"task\": 1}"), FormatError);
}

TEST_CASE("prediction csv round trip") {
  const fs::path dir = fs::temp_directory_path() / "respnet_unit_pred";
  fs::create_directories(dir);
  const std::vector<PredictionRow> rows{{"a", "N", "CAS", {0.25, 0.75}}, {"b", "PQ", "PQ", {0.5, 0.5}}};
  write_predictions_csv(dir / "p.csv", {"x", "y"}, rows);
  const auto back = read_predictions_csv(dir / "p.csv");
  REQUIRE(back.size() == 2);
  CHECK(back[0].id == "a");
  CHECK(back[0].prediction == "CAS");
  CHECK(back[1].truth == "PQ");
  CHECK(back[0].probabilities == rows[0].probabilities);
}

}  // TEST_SUITE
