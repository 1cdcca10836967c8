#pragma once

// One flat key=value config file for the whole pipeline. Every tunable in
// the library surfaces here under a dotted key with a documented default;
// unknown keys are rejected so typos fail loudly instead of silently
// running defaults. Command-line flags override file values.

#include <cstdint>
#include <string>
#include <vector>

#include "cclink/embedding.hpp"
#include "cclink/linker.hpp"
#include "cclink/matcher.hpp"
#include "cclink/synthcorpus.hpp"
#include "cclink/tagger.hpp"
#include "cclink/textprep.hpp"

namespace cclink {

struct PipelineConfig {
  SeparatorConfig separators;
  MatchConfig match;
  StageSet stages;
  EmbeddingConfig embedding;

  // tagger.separators and linker.separators are ignored as stored here;
  // the pipeline copies the shared `separators` block in when it builds
  // models, so there is exactly one separator definition per run.
  TaggerConfig tagger;
  LinkerConfig linker;

  TrainStrategy strategy = TrainStrategy::weak_only;
  std::string refine = "none";         // none | exact | exact-approx
  std::string link_mode = "ensemble";  // ensemble | model | exact

  OntologySpec ontology;
  // The stock experiment corrupts characters and fuses records; every other
  // noise channel stays off unless the config turns it on.
  NoiseConfig noise{.typo_rate = 0.05, .no_punct_prob = 0.4};
  double abbrev_fraction = 0.3;
  size_t train_records = 10000;
  size_t gold_records = 1000;

  // Experiment seed: corpus generation uses it directly; module seeds stay
  // separate keys so a single stage can be re-rolled in isolation.
  uint64_t seed = 42;

  std::string work_dir = "out";
};

// Sets one dotted key ("tagger.epochs") from its string form. Unknown keys
// and unparseable values are config errors naming the key.
void set_config_key(PipelineConfig& cfg, const std::string& key, const std::string& value);

// Parses a key=value file: one assignment per line, blank lines and
// full-line # comments allowed. Values keep inner whitespace.
PipelineConfig load_pipeline_config(const std::string& path);

// Every key with its current value and a one-line description, in key
// order. Round-trips through load_pipeline_config.
std::string dump_pipeline_config(const PipelineConfig& cfg);

}  // namespace cclink
