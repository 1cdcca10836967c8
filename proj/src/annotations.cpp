#include "cclink/annotations.hpp"

#include <set>

#include <json.hpp>

#include "cclink/textprep.hpp"

namespace cclink {

using nlohmann::json;

const char* match_stage_name(MatchStage stage) {
  switch (stage) {
    case MatchStage::exact: return "exact";
    case MatchStage::approx: return "approx";
    case MatchStage::embedding: return "embedding";
    case MatchStage::none: break;
  }
  return "none";
}

MatchStage match_stage_from_name(const std::string& name) {
  if (name == "exact") return MatchStage::exact;
  if (name == "approx") return MatchStage::approx;
  if (name == "embedding") return MatchStage::embedding;
  if (name == "none") return MatchStage::none;
  throw data_error("unknown match stage \"" + name + "\"");
}

namespace {

json parse_line(const std::string& path, size_t line_no, const std::string& line) {
  try {
    return json::parse(line);
  } catch (const json::exception& e) {
    throw data_error(path, line_no, std::string("bad JSON: ") + e.what());
  }
}

CharSpan span_from(const json& obj, const std::string& path, size_t line_no) {
  CharSpan span;
  span.start = obj.at("start").get<uint32_t>();
  span.end = obj.at("end").get<uint32_t>();
  if (span.end <= span.start)
    throw data_error(path, line_no, "empty or inverted span [" + std::to_string(span.start) +
                                        ", " + std::to_string(span.end) + ")");
  return span;
}

}  // namespace

std::vector<Record> read_corpus(const std::string& path) {
  std::vector<std::string> lines = split_lines(read_file(path));
  std::vector<Record> records;
  std::set<std::string> seen;
  for (size_t i = 0; i < lines.size(); i++) {
    if (lines[i].empty()) continue;
    json obj = parse_line(path, i + 1, lines[i]);
    try {
      Record rec;
      rec.id = obj.at("id").get<std::string>();
      rec.text = normalize(obj.at("text").get<std::string>());
      if (rec.id.empty()) throw data_error(path, i + 1, "empty record id");
      if (rec.text.empty()) throw data_error(path, i + 1, "record " + rec.id + " has empty text");
      if (!seen.insert(rec.id).second)
        throw data_error(path, i + 1, "duplicate record id " + rec.id);
      records.push_back(std::move(rec));
    } catch (const json::exception& e) {
      throw data_error(path, i + 1, std::string("bad record: ") + e.what());
    }
  }
  return records;
}

void write_corpus(const std::string& path, const std::vector<Record>& records) {
  std::string out;
  for (const Record& rec : records) {
    json obj;
    obj["id"] = rec.id;
    obj["text"] = rec.text;
    out += obj.dump();
    out += '\n';
  }
  write_file(path, out);
}

std::vector<AnnotatedRecord> read_annotated(const std::string& path) {
  std::vector<std::string> lines = split_lines(read_file(path));
  std::vector<AnnotatedRecord> records;
  std::set<std::string> seen;
  for (size_t i = 0; i < lines.size(); i++) {
    if (lines[i].empty()) continue;
    json obj = parse_line(path, i + 1, lines[i]);
    try {
      AnnotatedRecord rec;
      rec.record_id = obj.at("record_id").get<std::string>();
      if (!seen.insert(rec.record_id).second)
        throw data_error(path, i + 1, "duplicate record id " + rec.record_id);
      if (obj.contains("text")) rec.text = obj.at("text").get<std::string>();
      for (const json& ann_obj : obj.value("annotations", json::array())) {
        SpanAnnotation ann;
        ann.span = span_from(ann_obj, path, i + 1);
        ann.concept_id = ann_obj.value("concept", "");
        ann.confidence = ann_obj.value("confidence", 1.0);
        ann.stage = match_stage_from_name(ann_obj.value("stage", "none"));
        if (ann.confidence <= 0 || ann.confidence > 1)
          throw data_error(path, i + 1, "confidence out of (0, 1]");
        rec.annotations.push_back(std::move(ann));
      }
      for (const json& span_obj : obj.value("unmatched_spans", json::array()))
        rec.unmatched.push_back(span_from(span_obj, path, i + 1));
      records.push_back(std::move(rec));
    } catch (const json::exception& e) {
      throw data_error(path, i + 1, std::string("bad annotation record: ") + e.what());
    }
  }
  return records;
}

void write_annotated(const std::string& path, const std::vector<AnnotatedRecord>& records) {
  std::string out;
  for (const AnnotatedRecord& rec : records) {
    json obj;
    obj["record_id"] = rec.record_id;
    if (!rec.text.empty()) obj["text"] = rec.text;
    json anns = json::array();
    for (const SpanAnnotation& ann : rec.annotations) {
      json a;
      a["start"] = ann.span.start;
      a["end"] = ann.span.end;
      if (!ann.concept_id.empty()) a["concept"] = ann.concept_id;
      if (ann.stage != MatchStage::none) {
        a["confidence"] = ann.confidence;
        a["stage"] = match_stage_name(ann.stage);
      }
      anns.push_back(std::move(a));
    }
    obj["annotations"] = std::move(anns);
    if (!rec.unmatched.empty()) {
      json spans = json::array();
      for (const CharSpan& span : rec.unmatched) {
        json s;
        s["start"] = span.start;
        s["end"] = span.end;
        spans.push_back(std::move(s));
      }
      obj["unmatched_spans"] = std::move(spans);
    }
    out += obj.dump();
    out += '\n';
  }
  write_file(path, out);
}

std::vector<LinkedMention> read_linked(const std::string& path) {
  std::vector<std::string> lines = split_lines(read_file(path));
  std::vector<LinkedMention> mentions;
  for (size_t i = 0; i < lines.size(); i++) {
    if (lines[i].empty()) continue;
    json obj = parse_line(path, i + 1, lines[i]);
    try {
      LinkedMention m;
      m.record_id = obj.at("record_id").get<std::string>();
      m.span = span_from(obj, path, i + 1);
      m.concept_id = obj.at("concept").get<std::string>();
      m.score = obj.value("score", 0.0);
      std::string source = obj.value("source", "model");
      if (source == "exact")
        m.source = LinkedMention::Source::exact_match;
      else if (source == "model")
        m.source = LinkedMention::Source::model;
      else
        throw data_error(path, i + 1, "unknown link source \"" + source + "\"");
      mentions.push_back(std::move(m));
    } catch (const json::exception& e) {
      throw data_error(path, i + 1, std::string("bad linked mention: ") + e.what());
    }
  }
  return mentions;
}

void write_linked(const std::string& path, const std::vector<LinkedMention>& mentions) {
  std::string out;
  for (const LinkedMention& m : mentions) {
    json obj;
    obj["record_id"] = m.record_id;
    obj["start"] = m.span.start;
    obj["end"] = m.span.end;
    obj["concept"] = m.concept_id;
    obj["score"] = m.score;
    obj["source"] = m.source == LinkedMention::Source::exact_match ? "exact" : "model";
    out += obj.dump();
    out += '\n';
  }
  write_file(path, out);
}

}  // namespace cclink
