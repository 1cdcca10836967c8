#pragma once

// Subword-aware word embeddings trained with skip-gram negative sampling.
// A word's vector is the mean of its own row and the rows of its character
// n-grams, so misspellings and unseen shorthand still land near their
// intended word. Training is single-threaded and fully deterministic.

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "cclink/common.hpp"

namespace cclink {

struct EmbeddingConfig {
  uint32_t dim = 100;
  uint32_t window = 3;
  uint32_t epochs = 5;
  uint32_t negatives = 5;
  uint32_t min_count = 1;
  uint32_t subword_min = 3;
  uint32_t subword_max = 5;
  // Character n-grams hash into this many buckets. Only buckets actually
  // touched by the training vocabulary get a stored row; the rest are
  // implicit zero vectors.
  uint64_t bucket_count = 1ull << 20;
  double lr = 0.05;
  // Frequent-word subsampling threshold; 0 disables. Off by default: the
  // synthetic vocabularies here are small, so every word counts as frequent
  // and subsampling would throw away most of the corpus.
  double subsample = 0.0;
  uint64_t seed = 1;
};

struct EmbeddingTrainReport {
  std::vector<double> epoch_loss;  // mean negative log likelihood per sample
  size_t vocab_size = 0;
  size_t used_buckets = 0;
  size_t token_count = 0;
};

class EmbeddingTable {
 public:
  uint32_t dim() const { return dim_; }
  size_t vocab_size() const { return words_.size(); }
  size_t used_buckets() const { return bucket_ids_.size(); }

  bool has_word(const std::string& word) const { return word_index_.count(word) != 0; }

  // Mean of the word row (if in vocabulary) and the rows of its character
  // n-grams that exist in the table. Out-of-vocabulary words with no n-gram
  // coverage come back as the zero vector.
  std::vector<float> word_vector(const std::string& word) const;
  void word_vector_into(const std::string& word, float* out) const;

  // Mean of the per-token vectors; invariant under repeating the token list.
  std::vector<float> phrase_vector(const std::vector<std::string>& tokens) const;
  // Convenience: splits into word tokens first.
  std::vector<float> phrase_vector(const std::string& phrase) const;

  void save(const std::string& path) const;
  static EmbeddingTable load(const std::string& path);

  // One "word v1 v2 ..." line per vocabulary word, for eyeballing.
  void export_text(const std::string& path) const;

  // Hash of the full serialized table, computed once when the table is
  // built or loaded; models trained on top of these embeddings store it
  // and refuse to run with different ones.
  uint64_t fingerprint() const { return fingerprint_; }

 private:
  friend EmbeddingTable train_embeddings(const std::vector<Record>&, const EmbeddingConfig&,
                                         EmbeddingTrainReport*);

  std::string serialize() const;

  uint32_t dim_ = 0;
  uint32_t subword_min_ = 3;
  uint32_t subword_max_ = 5;
  uint64_t bucket_count_ = 0;
  std::vector<std::string> words_;            // frequency-sorted vocabulary
  std::vector<uint64_t> counts_;              // training counts, parallel to words_
  std::unordered_map<std::string, uint32_t> word_index_;
  std::vector<uint64_t> bucket_ids_;          // sorted ids of materialized buckets
  std::unordered_map<uint64_t, uint32_t> bucket_index_;
  std::vector<float> word_rows_;              // vocab x dim
  std::vector<float> gram_rows_;              // used_buckets x dim
  uint64_t fingerprint_ = 0;
};

EmbeddingTable train_embeddings(const std::vector<Record>& corpus, const EmbeddingConfig& cfg,
                                EmbeddingTrainReport* report = nullptr);

// Character n-grams of "<word>" with lengths in [min, max], in order of
// occurrence. Shared by training and lookup.
std::vector<std::string> subword_ngrams(const std::string& word, uint32_t min_len, uint32_t max_len);

// Cosine similarity with a zero-vector guard: either norm 0 yields 0.
double cosine(const std::vector<float>& a, const std::vector<float>& b);

}  // namespace cclink
