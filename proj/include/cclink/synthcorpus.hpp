#pragma once

// Seeded generators for synthetic ontologies and chief-complaint-style
// corpora with exact gold annotations. Real triage text cannot ship with the
// repository, so every experiment and acceptance check runs against records
// built here: separator-joined complaint chunks with typos, shorthand,
// fillers, and records whose punctuation is missing entirely. Everything is
// a pure function of (config, seed).

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "cclink/annotations.hpp"
#include "cclink/ontology.hpp"
#include "cclink/rng.hpp"
#include "cclink/textprep.hpp"

namespace cclink {

struct OntologySpec {
  uint32_t concepts = 692;

  // Of the total, this many are generated as children of root concepts
  // (specializations sharing the parent's head word). Merging them back via
  // merge_children leaves concepts - children entries.
  uint32_t children = 191;

  // Synonym variants sampled per concept, uniform in [min, max]. Variants
  // that collide with an existing surface anywhere in the ontology are
  // skipped, so these are upper bounds.
  uint32_t synonyms_min = 1;
  uint32_t synonyms_max = 3;

  uint64_t seed = 1;
};

// Pronounceable synthetic ontology: mostly "<modifier> <head>" canonicals
// with shared head words, plus derived synonyms (initialisms, slashed
// initialisms, vowel-dropped stems, reorderings, fused forms).
Ontology generate_ontology(const OntologySpec& spec);

// Ids of every concept with a parent: the merge_children argument that
// collapses a generated ontology back to its roots.
std::vector<std::string> child_concept_ids(const Ontology& ont);

struct NoiseConfig {
  // Per-character edit probability; see corrupt_string.
  double typo_rate = 0.0;

  // Weights over a concept's synonym list (canonical first). Lists longer
  // than the weights reuse the last weight; empty means uniform.
  std::vector<double> synonym_sample = {};

  // Surface form -> out-of-vocabulary shorthand. Applied with probability
  // abbrev_rate when the sampled surface has an entry.
  std::map<std::string, std::string> abbreviation_map = {};
  double abbrev_rate = 0.0;

  // Probability that a finished record loses all its active separators
  // (replaced by spaces, offsets remapped).
  double no_punct_prob = 0.0;

  std::vector<std::string> filler_vocab = {"severe", "r", "l", "x3", "days"};
  double filler_rate = 0.0;

  // Weights for sampling 1, 2, 3, ... entities per record.
  std::vector<double> entities_per_record = {0.45, 0.3, 0.17, 0.08};

  // Plural-style inflection of a rendered surface ("fevers").
  double inflect_rate = 0.0;

  // Probability that two concepts sharing a head word render as one
  // "moda/modb head" construction. Gold marks both mentions; the matcher is
  // expected to miss the left one.
  double shared_token_rate = 0.0;
};

struct SynthCorpus {
  std::vector<Record> corpus;
  std::vector<AnnotatedRecord> gold;  // concept-bearing, confidence 1
};

// Renders n_records records against the ontology. Gold spans cover each
// rendered surface as emitted (after shorthand, inflection, and typos) and
// always lie on token boundaries of the final text.
SynthCorpus generate_corpus(const Ontology& ont, size_t n_records, const NoiseConfig& noise,
                            uint64_t seed, const SeparatorConfig& separators = {});

// Per character, with probability typo_rate, one of: substitute an adjacent
// keyboard character, transpose with the next character, delete, duplicate.
// Spaces and punctuation pass through untouched, the result is never empty,
// and whenever an edit fires the result differs from the input, so at
// typo_rate 1 any string with an alphanumeric character comes back changed.
std::string corrupt_string(const std::string& s, double typo_rate, Rng& rng);

// Out-of-vocabulary shorthands (initialisms, slashed initialisms, vowel
// drops) for a deterministic sample of concepts, keyed by the canonical they
// replace. Skips anything that is already a synonym of some concept.
std::map<std::string, std::string> derive_abbreviations(const Ontology& ont, double fraction,
                                                        uint64_t seed);

}  // namespace cclink
