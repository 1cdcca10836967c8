#pragma once

// End-to-end experiment orchestration: generate ontology and corpora, train
// embeddings, weak-label, train the tagger and the linker, extract and link
// on the held-out corpus, score everything. The CLI `pipeline` subcommand is
// a thin wrapper over run_pipeline; tests call it directly. All artifacts
// land in cfg.work_dir under fixed names so repeated runs can be compared
// byte for byte.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "cclink/config.hpp"
#include "cclink/evaluation.hpp"
#include "cclink/matcher.hpp"

namespace cclink {

struct PipelineResult {
  std::string work_dir;
  size_t concepts = 0;  // after merging
  size_t train_records = 0;
  size_t gold_records = 0;
  MatchDiagnostics weak_diag;

  // Span-only scores for the tagger's mentions against gold.
  EvalReport extraction;
  // Typed scores after linking.
  EvalReport linking;

  std::vector<std::pair<std::string, std::string>> artifacts;  // name -> path
  std::vector<std::pair<std::string, double>> timings;         // stage -> seconds

  // Summary for stdout: scores, counts, artifact paths, timings. The
  // on-disk report.json deliberately excludes timings so identical runs
  // stay byte-identical.
  std::string to_json() const;
};

PipelineResult run_pipeline(const PipelineConfig& cfg, uint32_t workers = 1);

}  // namespace cclink
