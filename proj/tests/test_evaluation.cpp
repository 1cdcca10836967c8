#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <string>
#include <vector>

#include <json.hpp>

#include "cclink/annotations.hpp"
#include "cclink/evaluation.hpp"
#include "cclink/rng.hpp"

using namespace cclink;

namespace {

TypedSpan ts(uint32_t start, uint32_t end, const std::string& concept_id = "") {
  return TypedSpan{CharSpan{start, end}, concept_id};
}

std::string fixture(const std::string& name) {
  return std::string(CCLINK_FIXTURE_DIR) + "/" + name;
}

// Random disjoint typed spans within [0, 60).
std::vector<TypedSpan> random_spans(Rng& rng) {
  std::vector<TypedSpan> spans;
  uint32_t pos = 0;
  size_t count = rng.next_below(4);
  for (size_t i = 0; i < count && pos + 2 < 60; i++) {
    uint32_t start = pos + static_cast<uint32_t>(rng.next_below(5));
    uint32_t len = 1 + static_cast<uint32_t>(rng.next_below(8));
    if (start + len > 60) break;
    const char* ids[] = {"c001", "c002", "c003"};
    spans.push_back(ts(start, start + len, ids[rng.next_below(3)]));
    pos = start + len + 1;
  }
  return spans;
}

}  // namespace

TEST_CASE("perfect match scores 1.0 in every mode") {
  std::vector<TypedSpan> gold = {ts(0, 10, "fever")};
  std::vector<TypedSpan> pred = {ts(0, 10, "fever")};
  for (EvalMode mode : {EvalMode::partial, EvalMode::exact, EvalMode::type}) {
    EvalCounts counts = align(gold, pred, mode);
    CHECK(counts.cor == 1);
    CHECK(counts.inc + counts.par + counts.mis + counts.spu == 0);
    ModeScores s = score(counts, mode);
    CHECK(s.precision == 1.0);
    CHECK(s.recall == 1.0);
    CHECK(s.f1 == 1.0);
  }
}

TEST_CASE("boundary error: partial credit, exact miss, type hit") {
  std::vector<TypedSpan> gold = {ts(0, 10, "fever")};
  std::vector<TypedSpan> pred = {ts(0, 5, "fever")};
  CHECK(align(gold, pred, EvalMode::partial).par == 1);
  CHECK(align(gold, pred, EvalMode::exact).inc == 1);
  CHECK(align(gold, pred, EvalMode::type).cor == 1);
}

TEST_CASE("missing prediction counts MIS everywhere") {
  std::vector<TypedSpan> gold = {ts(0, 10, "fever")};
  for (EvalMode mode : {EvalMode::partial, EvalMode::exact, EvalMode::type}) {
    EvalCounts counts = align(gold, {}, mode);
    CHECK(counts.mis == 1);
    CHECK(counts.cor + counts.inc + counts.par + counts.spu == 0);
  }
}

TEST_CASE("score formulas and zero-denominator rules") {
  EvalCounts counts;
  counts.par = 1;
  ModeScores s = score(counts, EvalMode::partial);
  CHECK(s.precision == 0.5);
  CHECK(s.recall == 0.5);
  CHECK(s.f1 == 0.5);

  EvalCounts none;
  none.mis = 3;
  s = score(none, EvalMode::partial);
  CHECK(s.precision == 0.0);
  CHECK(s.recall == 0.0);
  CHECK(s.f1 == 0.0);

  EvalCounts empty;
  s = score(empty, EvalMode::exact);
  CHECK(s.precision == 0.0);
  CHECK(s.recall == 0.0);
}

TEST_CASE("ties go to the earlier gold span, then the earlier prediction") {
  // Both golds overlap the prediction by 2: the earlier gold wins.
  std::vector<TypedSpan> gold = {ts(0, 4, "c001"), ts(6, 10, "c002")};
  std::vector<TypedSpan> pred = {ts(2, 8, "c002")};
  EvalCounts counts = align(gold, pred, EvalMode::type);
  CHECK(counts.inc == 1);  // pred c002 against gold c001
  CHECK(counts.mis == 1);

  // Both predictions overlap the gold by 5: the earlier one aligns.
  gold = {ts(0, 10, "c001")};
  pred = {ts(0, 5, "c002"), ts(5, 10, "c001")};
  counts = align(gold, pred, EvalMode::type);
  CHECK(counts.inc == 1);
  CHECK(counts.spu == 1);
}

TEST_CASE("adjacent spans do not overlap") {
  std::vector<TypedSpan> gold = {ts(0, 5, "c001")};
  std::vector<TypedSpan> pred = {ts(5, 9, "c001")};
  EvalCounts counts = align(gold, pred, EvalMode::partial);
  CHECK(counts.mis == 1);
  CHECK(counts.spu == 1);
}

TEST_CASE("overlapping spans within one list are rejected") {
  std::vector<TypedSpan> bad = {ts(0, 6, "c001"), ts(4, 9, "c002")};
  CHECK_THROWS_AS(align(bad, {}, EvalMode::partial), Error);
  CHECK_THROWS_AS(align({}, bad, EvalMode::partial), Error);
}

TEST_CASE("type mode requires concept ids") {
  std::vector<TypedSpan> gold = {ts(0, 5, "c001")};
  std::vector<TypedSpan> untyped = {ts(0, 5)};
  CHECK_THROWS_AS(align(gold, untyped, EvalMode::type), Error);
  CHECK_THROWS_AS(align(untyped, gold, EvalMode::type), Error);
  // Partial and exact modes do not care.
  CHECK(align(gold, untyped, EvalMode::partial).cor == 1);
}

TEST_CASE("hand-tallied fixture matches exactly") {
  EvalReport report = evaluate_corpus(fixture("scoring_gold.jsonl"), fixture("scoring_pred.jsonl"));

  CHECK(report.partial.counts.cor == 13);
  CHECK(report.partial.counts.inc == 0);
  CHECK(report.partial.counts.par == 10);
  CHECK(report.partial.counts.mis == 6);
  CHECK(report.partial.counts.spu == 5);
  CHECK(report.partial.scores.precision == doctest::Approx(9.0 / 14.0).epsilon(1e-12));
  CHECK(report.partial.scores.recall == doctest::Approx(18.0 / 29.0).epsilon(1e-12));
  CHECK(report.partial.scores.f1 == doctest::Approx(12.0 / 19.0).epsilon(1e-12));

  CHECK(report.exact.counts.cor == 13);
  CHECK(report.exact.counts.inc == 10);
  CHECK(report.exact.counts.par == 0);
  CHECK(report.exact.counts.mis == 6);
  CHECK(report.exact.counts.spu == 5);
  CHECK(report.exact.scores.precision == doctest::Approx(13.0 / 28.0).epsilon(1e-12));
  CHECK(report.exact.scores.recall == doctest::Approx(13.0 / 29.0).epsilon(1e-12));
  CHECK(report.exact.scores.f1 == doctest::Approx(26.0 / 57.0).epsilon(1e-12));

  REQUIRE(report.type.has_value());
  CHECK(report.type->counts.cor == 15);
  CHECK(report.type->counts.inc == 8);
  CHECK(report.type->counts.par == 0);
  CHECK(report.type->counts.mis == 6);
  CHECK(report.type->counts.spu == 5);
  CHECK(report.type->scores.precision == doctest::Approx(15.0 / 28.0).epsilon(1e-12));
  CHECK(report.type->scores.recall == doctest::Approx(15.0 / 29.0).epsilon(1e-12));
  CHECK(report.type->scores.f1 == doctest::Approx(10.0 / 19.0).epsilon(1e-12));
}

TEST_CASE("gold file scored against itself is perfect") {
  EvalReport report = evaluate_corpus(fixture("scoring_gold.jsonl"), fixture("scoring_gold.jsonl"));
  CHECK(report.partial.scores.f1 == 1.0);
  CHECK(report.exact.scores.f1 == 1.0);
  REQUIRE(report.type.has_value());
  CHECK(report.type->scores.f1 == 1.0);
}

TEST_CASE("empty prediction file gives zero scores") {
  std::string path = "/tmp/cclink_eval_empty.jsonl";
  write_file(path, "");
  EvalReport report = evaluate_corpus(fixture("scoring_gold.jsonl"), path);
  CHECK(report.partial.scores.precision == 0.0);
  CHECK(report.partial.scores.recall == 0.0);
  CHECK(report.partial.counts.mis == 29);
  std::remove(path.c_str());
}

TEST_CASE("predictions for unknown records are an error") {
  std::string path = "/tmp/cclink_eval_unknown.jsonl";
  write_file(path, "{\"record_id\":\"ghost\",\"annotations\":[{\"start\":0,\"end\":3,\"concept\":\"c001\"}]}\n");
  CHECK_THROWS_AS(evaluate_corpus(fixture("scoring_gold.jsonl"), path), Error);
  std::remove(path.c_str());
}

TEST_CASE("flat linked-mention predictions are accepted") {
  std::string path = "/tmp/cclink_eval_flat.jsonl";
  std::string lines;
  lines += "{\"record_id\":\"r01\",\"start\":0,\"end\":10,\"concept\":\"c001\",\"score\":0.9,\"source\":\"model\"}\n";
  lines += "{\"record_id\":\"r07\",\"start\":0,\"end\":5,\"concept\":\"c001\",\"score\":1.0,\"source\":\"exact\"}\n";
  lines += "{\"record_id\":\"r07\",\"start\":7,\"end\":12,\"concept\":\"c003\",\"score\":0.4,\"source\":\"model\"}\n";
  write_file(path, lines);
  EvalReport report = evaluate_corpus(fixture("scoring_gold.jsonl"), path);
  // r01 correct; r07 has one correct and one type-wrong; everything else missed.
  REQUIRE(report.type.has_value());
  CHECK(report.type->counts.cor == 2);
  CHECK(report.type->counts.inc == 1);
  CHECK(report.exact.counts.cor == 3);
  CHECK(report.partial.counts.mis == 26);
  std::remove(path.c_str());
}

TEST_CASE("missing pred concepts disable the type block only") {
  std::string path = "/tmp/cclink_eval_untyped.jsonl";
  write_file(path, "{\"record_id\":\"r01\",\"annotations\":[{\"start\":0,\"end\":10}]}\n");
  EvalReport report = evaluate_corpus(fixture("scoring_gold.jsonl"), path);
  CHECK_FALSE(report.type.has_value());
  CHECK(report.exact.counts.cor == 1);
  nlohmann::json obj = nlohmann::json::parse(report.to_json());
  CHECK(obj.at("type").is_null());
  CHECK(obj.at("partial").at("counts").at("cor").get<int>() == 1);
  std::remove(path.c_str());
}

TEST_CASE("mode dominance, symmetry, and score bounds hold on random inputs") {
  Rng rng(123);
  for (int trial = 0; trial < 3000; trial++) {
    std::vector<TypedSpan> gold = random_spans(rng);
    std::vector<TypedSpan> pred = random_spans(rng);

    EvalCounts partial_counts = align(gold, pred, EvalMode::partial);
    EvalCounts exact_counts = align(gold, pred, EvalMode::exact);
    EvalCounts type_counts = align(gold, pred, EvalMode::type);
    ModeScores partial_scores = score(partial_counts, EvalMode::partial);
    ModeScores exact_scores = score(exact_counts, EvalMode::exact);

    // Partial credit can only help.
    CHECK(partial_scores.f1 >= exact_scores.f1 - 1e-12);

    // Swapping sides swaps MIS and SPU and keeps the aligned classes.
    EvalCounts swapped = align(pred, gold, EvalMode::partial);
    CHECK(swapped.cor == partial_counts.cor);
    CHECK(swapped.par == partial_counts.par);
    CHECK(swapped.mis == partial_counts.spu);
    CHECK(swapped.spu == partial_counts.mis);

    for (const ModeScores& s : {partial_scores, exact_scores, score(type_counts, EvalMode::type)}) {
      CHECK(s.precision >= 0.0);
      CHECK(s.precision <= 1.0);
      CHECK(s.recall >= 0.0);
      CHECK(s.recall <= 1.0);
      CHECK(s.f1 >= 0.0);
      // Harmonic mean never exceeds either input.
      CHECK(s.f1 <= std::max(s.precision, s.recall) + 1e-12);
    }
  }
}

TEST_CASE("record order does not change corpus scores") {
  std::vector<AnnotatedRecord> gold = read_annotated(fixture("scoring_gold.jsonl"));
  std::vector<AnnotatedRecord> pred = read_annotated(fixture("scoring_pred.jsonl"));
  EvalReport forward = evaluate_records(gold, pred);
  std::reverse(gold.begin(), gold.end());
  std::reverse(pred.begin(), pred.end());
  EvalReport reversed = evaluate_records(gold, pred);
  CHECK(forward.partial.scores.f1 == reversed.partial.scores.f1);
  CHECK(forward.exact.counts.cor == reversed.exact.counts.cor);
  CHECK(forward.type->counts.inc == reversed.type->counts.inc);
}
