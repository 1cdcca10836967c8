#pragma once

// Annotation records shared across the weak labeler, tagger, linker, and
// scorer, plus their JSONL readers/writers.

#include <string>
#include <vector>

#include "cclink/common.hpp"

namespace cclink {

// Which matcher stage produced an annotation. `none` covers gold labels and
// plain extracted mentions.
enum class MatchStage { none, exact, approx, embedding };

const char* match_stage_name(MatchStage stage);
MatchStage match_stage_from_name(const std::string& name);

struct SpanAnnotation {
  CharSpan span;
  std::string concept_id;  // empty when the span carries no concept
  double confidence = 1.0;
  MatchStage stage = MatchStage::none;
};

// One record's worth of annotations: weak labels, gold labels, or extracted
// mentions all use this shape. `unmatched` lists chunk spans the matcher
// could not resolve; the tagger down-weights tokens inside them.
struct AnnotatedRecord {
  std::string record_id;
  std::string text;
  std::vector<SpanAnnotation> annotations;
  std::vector<CharSpan> unmatched;
};

// A concept decision for one extracted mention, written one JSON object per
// line by the linking step.
struct LinkedMention {
  enum class Source { exact_match, model };
  std::string record_id;
  CharSpan span;
  std::string concept_id;
  double score = 0;
  Source source = Source::model;
};

// Corpus files: {"id": ..., "text": ...} per line. Text is normalized on
// read so spans computed downstream are stable.
std::vector<Record> read_corpus(const std::string& path);
void write_corpus(const std::string& path, const std::vector<Record>& records);

// Annotation files: {"record_id", "text", "annotations": [{"start","end",
// "concept","confidence","stage"}], "unmatched_spans": [{"start","end"}]}
// per line, with absent fields omitted.
std::vector<AnnotatedRecord> read_annotated(const std::string& path);
void write_annotated(const std::string& path, const std::vector<AnnotatedRecord>& records);

// Linked-mention files: flat {"record_id","start","end","concept","score",
// "source"} per line.
std::vector<LinkedMention> read_linked(const std::string& path);
void write_linked(const std::string& path, const std::vector<LinkedMention>& mentions);

}  // namespace cclink
