#include "cclink/evaluation.hpp"

#include <algorithm>
#include <map>

#include <json.hpp>

namespace cclink {

using nlohmann::json;

namespace {

void check_disjoint(const std::vector<TypedSpan>& spans, const char* side) {
  for (size_t i = 1; i < spans.size(); i++) {
    if (spans[i].span.start < spans[i - 1].span.end)
      throw data_error(std::string(side) + " spans overlap: [" +
                       std::to_string(spans[i - 1].span.start) + ", " +
                       std::to_string(spans[i - 1].span.end) + ") and [" +
                       std::to_string(spans[i].span.start) + ", " +
                       std::to_string(spans[i].span.end) + ")");
  }
}

std::vector<TypedSpan> sorted_spans(std::vector<TypedSpan> spans, const char* side) {
  std::sort(spans.begin(), spans.end(),
            [](const TypedSpan& a, const TypedSpan& b) { return a.span.start < b.span.start; });
  check_disjoint(spans, side);
  return spans;
}

}  // namespace

EvalCounts align(const std::vector<TypedSpan>& gold_in, const std::vector<TypedSpan>& pred_in,
                 EvalMode mode) {
  std::vector<TypedSpan> gold = sorted_spans(gold_in, "gold");
  std::vector<TypedSpan> pred = sorted_spans(pred_in, "predicted");

  if (mode == EvalMode::type) {
    for (const TypedSpan& s : gold)
      if (s.concept_id.empty()) throw data_error("type scoring: gold span without concept id");
    for (const TypedSpan& s : pred)
      if (s.concept_id.empty()) throw data_error("type scoring: predicted span without concept id");
  }

  // Candidate pairs with any overlap, preferring larger overlap, then the
  // earlier gold span, then the earlier prediction.
  struct Pair {
    uint32_t overlap;
    uint32_t g, p;
  };
  std::vector<Pair> pairs;
  for (uint32_t g = 0; g < gold.size(); g++) {
    for (uint32_t p = 0; p < pred.size(); p++) {
      uint32_t ov = span_overlap(gold[g].span, pred[p].span);
      if (ov > 0) pairs.push_back(Pair{ov, g, p});
    }
  }
  std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
    if (a.overlap != b.overlap) return a.overlap > b.overlap;
    if (a.g != b.g) return a.g < b.g;
    return a.p < b.p;
  });

  std::vector<bool> gold_used(gold.size(), false), pred_used(pred.size(), false);
  EvalCounts counts;
  for (const Pair& pair : pairs) {
    if (gold_used[pair.g] || pred_used[pair.p]) continue;
    gold_used[pair.g] = true;
    pred_used[pair.p] = true;
    bool identical = gold[pair.g].span == pred[pair.p].span;
    switch (mode) {
      case EvalMode::partial:
        if (identical)
          counts.cor++;
        else
          counts.par++;
        break;
      case EvalMode::exact:
        if (identical)
          counts.cor++;
        else
          counts.inc++;
        break;
      case EvalMode::type:
        if (gold[pair.g].concept_id == pred[pair.p].concept_id)
          counts.cor++;
        else
          counts.inc++;
        break;
    }
  }
  for (uint32_t g = 0; g < gold.size(); g++)
    if (!gold_used[g]) counts.mis++;
  for (uint32_t p = 0; p < pred.size(); p++)
    if (!pred_used[p]) counts.spu++;
  return counts;
}

ModeScores score(const EvalCounts& counts, EvalMode mode) {
  double credit = static_cast<double>(counts.cor);
  if (mode == EvalMode::partial) credit += 0.5 * static_cast<double>(counts.par);
  ModeScores s;
  uint64_t actual = counts.actual();
  uint64_t possible = counts.possible();
  s.precision = actual ? credit / static_cast<double>(actual) : 0.0;
  s.recall = possible ? credit / static_cast<double>(possible) : 0.0;
  s.f1 = (s.precision + s.recall) > 0
             ? 2.0 * s.precision * s.recall / (s.precision + s.recall)
             : 0.0;
  return s;
}

EvalReport evaluate_records(const std::vector<AnnotatedRecord>& gold,
                            const std::vector<AnnotatedRecord>& pred) {
  std::map<std::string, const AnnotatedRecord*> pred_by_id;
  for (const AnnotatedRecord& rec : pred) {
    if (!pred_by_id.emplace(rec.record_id, &rec).second)
      throw data_error("evaluate: duplicate prediction record " + rec.record_id);
  }
  std::map<std::string, bool> gold_ids;
  for (const AnnotatedRecord& rec : gold) gold_ids[rec.record_id] = true;
  for (const AnnotatedRecord& rec : pred) {
    if (!gold_ids.count(rec.record_id))
      throw data_error("evaluate: prediction for unknown record " + rec.record_id);
  }

  auto spans_of = [](const AnnotatedRecord* rec) {
    std::vector<TypedSpan> spans;
    if (rec) {
      for (const SpanAnnotation& ann : rec->annotations)
        spans.push_back(TypedSpan{ann.span, ann.concept_id});
    }
    return spans;
  };

  bool typed = true;
  for (const AnnotatedRecord& rec : gold)
    for (const SpanAnnotation& ann : rec.annotations)
      if (ann.concept_id.empty()) typed = false;
  for (const AnnotatedRecord& rec : pred)
    for (const SpanAnnotation& ann : rec.annotations)
      if (ann.concept_id.empty()) typed = false;

  EvalCounts partial_counts, exact_counts, type_counts;
  for (const AnnotatedRecord& rec : gold) {
    auto it = pred_by_id.find(rec.record_id);
    const AnnotatedRecord* p = it == pred_by_id.end() ? nullptr : it->second;
    std::vector<TypedSpan> gold_spans = spans_of(&rec);
    std::vector<TypedSpan> pred_spans = spans_of(p);
    try {
      partial_counts += align(gold_spans, pred_spans, EvalMode::partial);
      exact_counts += align(gold_spans, pred_spans, EvalMode::exact);
      if (typed) type_counts += align(gold_spans, pred_spans, EvalMode::type);
    } catch (const Error& e) {
      throw Error(e.kind(), "record " + rec.record_id + ": " + e.what());
    }
  }

  EvalReport report;
  report.partial = ModeResult{partial_counts, score(partial_counts, EvalMode::partial)};
  report.exact = ModeResult{exact_counts, score(exact_counts, EvalMode::exact)};
  if (typed) report.type = ModeResult{type_counts, score(type_counts, EvalMode::type)};
  return report;
}

namespace {

// The prediction side accepts either the grouped annotation format or flat
// linked-mention lines; sniff the first data line.
bool looks_flat(const std::string& path) {
  std::vector<std::string> lines = split_lines(read_file(path));
  for (const std::string& line : lines) {
    if (line.empty()) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::exception&) {
      return false;  // let the structured reader report the error
    }
    return !obj.contains("annotations");
  }
  return false;
}

std::vector<AnnotatedRecord> group_linked(const std::vector<LinkedMention>& mentions) {
  std::map<std::string, AnnotatedRecord> grouped;
  for (const LinkedMention& m : mentions) {
    AnnotatedRecord& rec = grouped[m.record_id];
    rec.record_id = m.record_id;
    SpanAnnotation ann;
    ann.span = m.span;
    ann.concept_id = m.concept_id;
    rec.annotations.push_back(std::move(ann));
  }
  std::vector<AnnotatedRecord> records;
  records.reserve(grouped.size());
  for (auto& entry : grouped) records.push_back(std::move(entry.second));
  return records;
}

json mode_json(const ModeResult& mode) {
  json counts;
  counts["cor"] = mode.counts.cor;
  counts["inc"] = mode.counts.inc;
  counts["par"] = mode.counts.par;
  counts["mis"] = mode.counts.mis;
  counts["spu"] = mode.counts.spu;
  json obj;
  obj["counts"] = std::move(counts);
  obj["precision"] = mode.scores.precision;
  obj["recall"] = mode.scores.recall;
  obj["f1"] = mode.scores.f1;
  return obj;
}

}  // namespace

std::string EvalReport::to_json() const {
  json obj;
  obj["partial"] = mode_json(partial);
  obj["exact"] = mode_json(exact);
  obj["type"] = type ? mode_json(*type) : json(nullptr);
  return obj.dump(2) + "\n";
}

EvalReport evaluate_corpus(const std::string& gold_path, const std::string& pred_path) {
  std::vector<AnnotatedRecord> gold = read_annotated(gold_path);
  std::vector<AnnotatedRecord> pred = looks_flat(pred_path)
                                          ? group_linked(read_linked(pred_path))
                                          : read_annotated(pred_path);
  return evaluate_records(gold, pred);
}

}  // namespace cclink
