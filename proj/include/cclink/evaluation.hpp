#pragma once

// Span-level scorer with three modes: Partial (half credit for boundary
// overlap), Exact (boundaries must match), and Type (boundary overlap plus
// the right concept). Counts follow the COR/INC/PAR/MIS/SPU scheme; corpus
// scores are micro-averaged.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cclink/annotations.hpp"
#include "cclink/common.hpp"

namespace cclink {

enum class EvalMode { partial, exact, type };

struct EvalCounts {
  uint64_t cor = 0;  // correct
  uint64_t inc = 0;  // incorrect (aligned but wrong for the mode)
  uint64_t par = 0;  // partial boundary credit (Partial mode only)
  uint64_t mis = 0;  // gold span with no aligned prediction
  uint64_t spu = 0;  // prediction with no aligned gold span

  uint64_t possible() const { return cor + inc + par + mis; }
  uint64_t actual() const { return cor + inc + par + spu; }

  EvalCounts& operator+=(const EvalCounts& other) {
    cor += other.cor;
    inc += other.inc;
    par += other.par;
    mis += other.mis;
    spu += other.spu;
    return *this;
  }
};

struct ModeScores {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
};

struct ModeResult {
  EvalCounts counts;
  ModeScores scores;
};

struct EvalReport {
  ModeResult partial;
  ModeResult exact;
  // Present only when every span on both sides carries a concept id.
  std::optional<ModeResult> type;

  std::string to_json() const;
};

// A span with an optional concept id, the scorer's input unit.
struct TypedSpan {
  CharSpan span;
  std::string concept_id;
};

// Aligns gold and predicted spans greedily by maximal character overlap
// (ties: earlier gold span, then earlier prediction) and classifies each
// pair under the given mode. Spans within each list must be disjoint; Type
// mode requires concept ids on every span.
EvalCounts align(const std::vector<TypedSpan>& gold, const std::vector<TypedSpan>& pred,
                 EvalMode mode);

// Precision/recall/F1 for counts produced under `mode`. Partial mode grants
// half credit for PAR; zero denominators give 0.
ModeScores score(const EvalCounts& counts, EvalMode mode);

// Scores a predictions file against a gold file. Both are JSONL; the
// predictions side may be either the grouped annotation format or the flat
// linked-mention format. Every prediction's record id must exist in the
// gold file; gold records without predictions count as all-missed.
EvalReport evaluate_corpus(const std::string& gold_path, const std::string& pred_path);

// Same, over already-loaded data. Pred records are matched to gold records
// by record id.
EvalReport evaluate_records(const std::vector<AnnotatedRecord>& gold,
                            const std::vector<AnnotatedRecord>& pred);

}  // namespace cclink
