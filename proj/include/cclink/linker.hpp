#pragma once

// Concept classifier for extracted mentions: a multinomial log-linear model
// over the full ontology concept list. Features keep four disjoint groups
// (mention words + phrase embedding, mention character n-grams, left
// context, right context); the directional context groups are never pooled,
// and context windows stop at active separators because the neighboring
// chunk is a different complaint. link_ensemble consults the exact synonym
// table first and only falls back to the model.

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "cclink/annotations.hpp"
#include "cclink/embedding.hpp"
#include "cclink/ontology.hpp"
#include "cclink/textprep.hpp"

namespace cclink {

struct LinkerConfig {
  SeparatorConfig separators;

  // Context tokens per side; truncated at the record edge or the nearest
  // active separator, whichever comes first.
  uint32_t context_window = 2;

  uint32_t char_ngram_min = 2;
  uint32_t char_ngram_max = 4;

  uint32_t hash_bits = 18;
  double lr = 0.3;
  uint32_t epochs = 8;
  uint64_t seed = 1;
};

// Human-readable feature groups for one mention. The model hashes these;
// tests read them directly.
struct FeatureBundle {
  std::vector<std::string> mention_words;
  std::vector<std::string> mention_char_ngrams;
  std::vector<std::string> left_context;   // "severe@-1" (nearest first)
  std::vector<std::string> right_context;  // "since@+1"
};

// Feature groups for the mention at `span`. The span must lie inside the
// record and cover whole tokens.
FeatureBundle featurize_mention(const Record& rec, const CharSpan& span,
                                const LinkerConfig& cfg);

struct LinkerTrainReport {
  std::vector<double> epoch_loss;  // weighted mean negative log likelihood
  size_t examples = 0;
};

class LinkerModel {
 public:
  // Argmax concept with its normalized probability; ties go to the
  // lexicographically smaller concept id. source is always Model.
  LinkedMention link(const Record& rec, const CharSpan& span, const EmbeddingTable* emb) const;

  // Full softmax distribution in classes() order, for verification.
  std::vector<double> class_distribution(const Record& rec, const CharSpan& span,
                                         const EmbeddingTable* emb) const;

  const std::vector<std::string>& classes() const { return classes_; }

  void save(const std::string& path) const;
  static LinkerModel load(const std::string& path);

  uint64_t fingerprint() const;
  uint64_t ontology_fingerprint() const { return ont_fingerprint_; }
  uint64_t embedding_fingerprint() const { return emb_fingerprint_; }
  const SeparatorConfig& separators() const { return cfg_.separators; }
  const LinkerConfig& config() const { return cfg_; }

  // Touched feature rows; empty for an untrained or zero-weight-trained
  // model, which scores every class uniformly.
  size_t touched_buckets() const { return rows_.size(); }
  const std::vector<float>& dense_weights() const { return dense_rows_; }

 private:
  friend LinkerModel train_linker(const std::vector<AnnotatedRecord>&, const Ontology&,
                                  const LinkerConfig&, const EmbeddingTable*,
                                  LinkerTrainReport*);

  std::string serialize() const;
  void score_mention(const Record& rec, const CharSpan& span, const EmbeddingTable* emb,
                     std::vector<double>* out) const;

  LinkerConfig cfg_;
  uint32_t dense_dim_ = 0;
  uint64_t ont_fingerprint_ = 0;
  uint64_t emb_fingerprint_ = 0;
  std::vector<std::string> classes_;  // sorted concept ids
  // Feature-major storage: one per-class weight row per touched bucket.
  // Untouched buckets are implicit zero rows.
  std::unordered_map<uint32_t, std::vector<float>> rows_;
  std::vector<float> dense_rows_;  // dense_dim x classes, feature-major
};

// Trains on every concept-bearing annotation in `data`, weighting each
// example by its confidence. Annotations must carry concept ids known to
// `ont`. The embedding table is optional; when given, the mention's phrase
// vector joins the mention feature group.
LinkerModel train_linker(const std::vector<AnnotatedRecord>& data, const Ontology& ont,
                         const LinkerConfig& cfg, const EmbeddingTable* emb,
                         LinkerTrainReport* report = nullptr);

// Exact-match-first ensemble: a mention whose text is a known synonym links
// to that concept at score 1.0; everything else goes through the model. The
// ontology must be the one the model was trained against.
LinkedMention link_ensemble(const Ontology& ont, const LinkerModel& model, const Record& rec,
                            const CharSpan& span, const EmbeddingTable* emb);

}  // namespace cclink
