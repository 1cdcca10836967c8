#pragma once

// Staged chunk-to-concept matching. Chunks flow through exact lookup, then
// approximate character-n-gram matching, then embedding cosine matching;
// the first enabled stage that fires wins and later stages never see the
// chunk. Unmatched chunks are reported so downstream training can discount
// them.

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "cclink/annotations.hpp"
#include "cclink/embedding.hpp"
#include "cclink/ontology.hpp"
#include "cclink/textprep.hpp"

namespace cclink {

struct MatchConfig {
  double tau_approx = 0.7;
  double tau_emb = 0.85;
  uint32_t ngram_size = 3;
};

struct StageSet {
  bool exact = true;
  bool approx = true;
  bool embedding = true;

  bool any() const { return exact || approx || embedding; }
};

// Comma-separated stage names ("exact,approx,embedding", or the short forms
// "s1,s2,s3"); unknown names are a config error.
StageSet parse_stages(const std::string& spec_text);

// Jaccard similarity between the character-n-gram sets of a and b. Strings
// shorter than n fall back to exact equality (1.0 or 0.0).
double ngram_jaccard(const std::string& a, const std::string& b, uint32_t n);

// A concept hit from a single stage, before span information is attached.
struct StageHit {
  std::string concept_id;
  double confidence = 0;
  MatchStage stage = MatchStage::none;
};

// Inverted character-n-gram index over all ontology synonyms. best() is
// equivalent to brute-force ngram_jaccard against every synonym with ties
// broken by longer synonym, then smaller concept id.
class ApproxIndex {
 public:
  ApproxIndex(const Ontology& ont, uint32_t ngram_size);

  // Best-scoring synonym regardless of threshold; nullopt only when nothing
  // scores above zero.
  struct Hit {
    std::string concept_id;
    std::string synonym;
    double score = 0;
  };
  std::optional<Hit> best(const std::string& chunk) const;

  uint32_t ngram_size() const { return ngram_size_; }

 private:
  uint32_t ngram_size_;
  std::vector<std::string> synonyms_;     // sorted
  std::vector<std::string> concept_ids_;  // parallel to synonyms_
  std::vector<uint32_t> gram_counts_;     // distinct grams per synonym
  std::unordered_map<std::string, uint32_t> short_synonyms_;  // below n: exact only
  std::unordered_map<std::string, std::vector<uint32_t>> postings_;
};

// Precomputed phrase vectors for every synonym, for the embedding stage.
class EmbeddingMatchIndex {
 public:
  EmbeddingMatchIndex(const Ontology& ont, const EmbeddingTable& emb);

  struct Hit {
    std::string concept_id;
    std::string synonym;
    double cosine = 0;
  };
  // Highest-cosine synonym; nullopt when the chunk's phrase vector is zero.
  std::optional<Hit> best(const std::string& chunk) const;

 private:
  const EmbeddingTable* emb_;
  std::vector<std::string> synonyms_;
  std::vector<std::string> concept_ids_;
  std::vector<std::vector<float>> vectors_;
  std::vector<bool> zero_;  // synonyms whose phrase vector is itself zero
};

struct MatchDiagnostics {
  size_t chunks = 0;
  size_t exact_hits = 0;
  size_t approx_hits = 0;
  size_t embedding_hits = 0;
  size_t unmatched = 0;
  size_t zero_vector_chunks = 0;
};

// Bundles the three stages behind one call. The embedding table may be null
// when the embedding stage is disabled.
class ChunkMatcher {
 public:
  ChunkMatcher(const Ontology& ont, const MatchConfig& cfg, const StageSet& stages,
               const EmbeddingTable* emb);

  // Matches one chunk's text. Updates diagnostics when given.
  std::optional<StageHit> match(const std::string& chunk_text, MatchDiagnostics* diag = nullptr) const;

  const Ontology& ontology() const { return *ont_; }

 private:
  const Ontology* ont_;
  MatchConfig cfg_;
  StageSet stages_;
  const EmbeddingTable* emb_;
  std::optional<ApproxIndex> approx_;
  std::optional<EmbeddingMatchIndex> embedding_;
};

// Splits each record into chunks and matches them, producing one weak
// annotation per matched chunk and recording unmatched chunk spans.
std::vector<AnnotatedRecord> generate_weak_labels(const std::vector<Record>& corpus,
                                                  const ChunkMatcher& matcher,
                                                  const SeparatorConfig& sep_cfg,
                                                  MatchDiagnostics* diag = nullptr,
                                                  uint32_t workers = 1);

}  // namespace cclink
