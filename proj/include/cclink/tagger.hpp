#pragma once

// BIO mention tagger: a log-linear per-token 3-way scorer with first-order
// transitions, trained on weak or gold annotations with confidence-weighted
// label smoothing. Decoding is a constrained Viterbi pass (no O->I, no
// leading I, separators forced O) followed by span assembly with an I->B
// repair for any stray inside tag.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "cclink/annotations.hpp"
#include "cclink/embedding.hpp"
#include "cclink/matcher.hpp"
#include "cclink/textprep.hpp"

namespace cclink {

enum class BioTag : uint8_t { B = 0, I = 1, O = 2 };

char bio_tag_letter(BioTag tag);

struct TaggedSequence {
  std::string record_id;
  std::vector<Token> tokens;
  std::vector<BioTag> tags;
  std::vector<float> weights;  // per-token training confidence in [0,1]
};

struct TaggerConfig {
  SeparatorConfig separators;

  // Label smoothing: epsilon = min(epsilon_max, 1 - confidence). The cap
  // keeps the gold tag's target probability at 0.8 or above even for
  // zero-confidence labels.
  double epsilon_max = 0.3;

  // O tokens inside chunks the matcher could not resolve may actually be
  // unrecognized entities, so their "outside" supervision is discounted.
  double w_unmatched = 0.3;

  // Ablation switch: one-hot targets regardless of confidence. Token loss
  // weights still apply.
  bool hard_labels = false;

  double lr = 0.2;
  uint32_t epochs = 12;

  // When positive, every epoch also trains on a separator-dropped copy of
  // each instance that contains at least one active separator.
  double augment_drop_p = 0.0;

  // Hashed feature space size is 1 << hash_bits.
  uint32_t hash_bits = 18;

  uint64_t seed = 1;
};

enum class TrainStrategy {
  weak_only,   // weak labels only
  supervised,  // gold labels only
  fine_tune,   // weak first, then gold
};

const char* train_strategy_name(TrainStrategy strategy);
TrainStrategy train_strategy_from_name(const std::string& name);

// A decoded mention: a maximal B I* token run. Token indices are inclusive
// and never land on separator tokens.
struct Mention {
  std::string record_id;
  CharSpan span;
  uint32_t first_token = 0;
  uint32_t last_token = 0;
};

struct TaggerTrainReport {
  // Weighted mean cross-entropy per epoch; for fine_tune the weak phase
  // epochs come first, then the gold phase.
  std::vector<double> epoch_loss;
  size_t instances = 0;
  size_t tokens = 0;
};

// Smoothed target distribution over (B, I, O) for a token labeled `tag` at
// the given confidence: q(k) = (1-eps) * [k == tag] + eps/3.
std::array<double, 3> smooth_targets(BioTag tag, double confidence, double epsilon_max);

// Converts one annotated record into a tagged token sequence. First token of
// each annotated span gets B, the rest I, everything else (separators
// included) O. B/I tokens carry the annotation's confidence as weight, O
// tokens 1.0, except O tokens inside unmatched chunk spans which carry
// cfg.w_unmatched.
TaggedSequence encode_bio(const AnnotatedRecord& rec, const TaggerConfig& cfg);

// Assembles mentions from a tag sequence. An I whose predecessor is neither
// B nor I starts a new mention as if it were B.
std::vector<Mention> mentions_from_tags(const std::string& record_id,
                                        const std::vector<Token>& tokens,
                                        const std::vector<BioTag>& tags);

// CoNLL-style dump: "token<TAB>tag<TAB>weight" lines, blank line between
// records.
std::string bio_tsv(const std::vector<TaggedSequence>& data);

class TaggerModel {
 public:
  // Highest-scoring valid tag path. Separator tokens are forced O; the path
  // never starts with I and never transitions O->I. Ties prefer O, then B.
  std::vector<BioTag> viterbi_tags(const std::vector<Token>& tokens,
                                   const EmbeddingTable* emb) const;

  std::vector<Mention> decode(const Record& rec, const EmbeddingTable* emb) const;

  void save(const std::string& path) const;
  static TaggerModel load(const std::string& path);

  uint64_t fingerprint() const;

  // Hash of the feature template set and tokenizer settings; loading a model
  // file whose hash differs from what this build computes is an error.
  uint64_t template_hash() const;

  // Fingerprint of the embedding table used in training, 0 when trained
  // without one. decode() refuses a table with a different fingerprint.
  uint64_t embedding_fingerprint() const { return emb_fingerprint_; }

  const SeparatorConfig& separators() const { return sep_; }
  TrainStrategy strategy() const { return strategy_; }

  // Raw parameters, exposed so tests can verify initialization properties.
  const std::vector<float>& emission_weights() const { return weights_; }
  const std::array<double, 9>& transition_scores() const { return transitions_; }

 private:
  friend TaggerModel train_tagger(const std::vector<AnnotatedRecord>&,
                                  const std::vector<AnnotatedRecord>&, TrainStrategy,
                                  const TaggerConfig&, const EmbeddingTable*,
                                  TaggerTrainReport*);

  std::string serialize() const;

  SeparatorConfig sep_;
  uint32_t hash_bits_ = 18;
  uint32_t dense_dim_ = 0;  // embedding dimension, 0 when none
  uint64_t emb_fingerprint_ = 0;
  TrainStrategy strategy_ = TrainStrategy::weak_only;
  uint64_t seed_ = 1;
  uint32_t epochs_ = 0;
  // Row-major [from][to] log-probability deviations from the uniform
  // transition; exactly zero for an untrained model.
  std::array<double, 9> transitions_ = {};
  // 3 rows (B, I, O), each hash_dim + dense_dim wide.
  std::vector<float> weights_;
};

// Trains a tagger. weak_only uses `weak`, supervised uses `gold`, fine_tune
// runs a weak phase followed by a gold phase with a continued learning-rate
// schedule. The embedding table is optional; when given, each word token
// contributes its embedding as dense features and the model remembers the
// table's fingerprint.
TaggerModel train_tagger(const std::vector<AnnotatedRecord>& weak,
                         const std::vector<AnnotatedRecord>& gold, TrainStrategy strategy,
                         const TaggerConfig& cfg, const EmbeddingTable* emb,
                         TaggerTrainReport* report = nullptr);

// Precision filter over decoded mentions: keep a mention only if its text
// matches the ontology exactly, or (exact_approx mode) approximately.
enum class RefineMode { exact_only, exact_approx };

RefineMode refine_mode_from_name(const std::string& name);

std::vector<Mention> refine_with_matcher(const std::vector<Mention>& mentions, const Record& rec,
                                         const Ontology& ont, const MatchConfig& cfg,
                                         RefineMode mode);

}  // namespace cclink
