#include "cclink/matcher.hpp"

#include <algorithm>
#include <set>
#include <thread>

namespace cclink {

namespace {

// Distinct character n-grams of s, sorted. Empty when s is shorter than n.
std::vector<std::string> distinct_ngrams(const std::string& s, uint32_t n) {
  std::vector<std::string> grams;
  if (s.size() < n) return grams;
  for (size_t i = 0; i + n <= s.size(); i++) grams.push_back(s.substr(i, n));
  std::sort(grams.begin(), grams.end());
  grams.erase(std::unique(grams.begin(), grams.end()), grams.end());
  return grams;
}

}  // namespace

StageSet parse_stages(const std::string& spec_text) {
  StageSet stages{false, false, false};
  size_t pos = 0;
  while (pos <= spec_text.size()) {
    size_t comma = spec_text.find(',', pos);
    if (comma == std::string::npos) comma = spec_text.size();
    std::string name = spec_text.substr(pos, comma - pos);
    if (name == "exact" || name == "s1")
      stages.exact = true;
    else if (name == "approx" || name == "s2")
      stages.approx = true;
    else if (name == "embedding" || name == "s3")
      stages.embedding = true;
    else if (!name.empty())
      throw config_error("unknown matcher stage \"" + name + "\"");
    pos = comma + 1;
  }
  if (!stages.any()) throw config_error("no matcher stages enabled");
  return stages;
}

double ngram_jaccard(const std::string& a, const std::string& b, uint32_t n) {
  if (a.size() < n || b.size() < n) return a == b ? 1.0 : 0.0;
  std::vector<std::string> ga = distinct_ngrams(a, n);
  std::vector<std::string> gb = distinct_ngrams(b, n);
  size_t shared = 0;
  size_t i = 0, j = 0;
  while (i < ga.size() && j < gb.size()) {
    int cmp = ga[i].compare(gb[j]);
    if (cmp == 0) {
      shared++;
      i++;
      j++;
    } else if (cmp < 0) {
      i++;
    } else {
      j++;
    }
  }
  return static_cast<double>(shared) / static_cast<double>(ga.size() + gb.size() - shared);
}

ApproxIndex::ApproxIndex(const Ontology& ont, uint32_t ngram_size) : ngram_size_(ngram_size) {
  if (ngram_size < 2) throw config_error("approx matcher: ngram_size must be >= 2");
  for (const auto& [synonym, concept_id] : ont.sorted_synonyms()) {
    uint32_t idx = static_cast<uint32_t>(synonyms_.size());
    synonyms_.push_back(synonym);
    concept_ids_.push_back(concept_id);
    if (synonym.size() < ngram_size) {
      gram_counts_.push_back(0);
      short_synonyms_.emplace(synonym, idx);
      continue;
    }
    std::vector<std::string> grams = distinct_ngrams(synonym, ngram_size);
    gram_counts_.push_back(static_cast<uint32_t>(grams.size()));
    for (const std::string& gram : grams) postings_[gram].push_back(idx);
  }
}

std::optional<ApproxIndex::Hit> ApproxIndex::best(const std::string& chunk) const {
  // Short chunks can only equal a short synonym (the equality fallback).
  if (chunk.size() < ngram_size_) {
    auto it = short_synonyms_.find(chunk);
    if (it == short_synonyms_.end()) return std::nullopt;
    return Hit{concept_ids_[it->second], synonyms_[it->second], 1.0};
  }

  std::vector<std::string> grams = distinct_ngrams(chunk, ngram_size_);
  // Shared-gram tally per candidate synonym. Postings hold distinct grams,
  // so each increment corresponds to one intersection element.
  std::unordered_map<uint32_t, uint32_t> shared;
  for (const std::string& gram : grams) {
    auto it = postings_.find(gram);
    if (it == postings_.end()) continue;
    for (uint32_t idx : it->second) shared[idx]++;
  }
  if (shared.empty()) return std::nullopt;

  const uint32_t chunk_grams = static_cast<uint32_t>(grams.size());
  bool have = false;
  Hit best_hit;
  for (const auto& [idx, common] : shared) {
    double score = static_cast<double>(common) /
                   static_cast<double>(chunk_grams + gram_counts_[idx] - common);
    bool better = false;
    if (!have) {
      better = true;
    } else if (score != best_hit.score) {
      better = score > best_hit.score;
    } else if (synonyms_[idx].size() != best_hit.synonym.size()) {
      better = synonyms_[idx].size() > best_hit.synonym.size();
    } else if (concept_ids_[idx] != best_hit.concept_id) {
      better = concept_ids_[idx] < best_hit.concept_id;
    } else {
      better = synonyms_[idx] < best_hit.synonym;
    }
    if (better) {
      have = true;
      best_hit = Hit{concept_ids_[idx], synonyms_[idx], score};
    }
  }
  return best_hit;
}

EmbeddingMatchIndex::EmbeddingMatchIndex(const Ontology& ont, const EmbeddingTable& emb)
    : emb_(&emb) {
  for (const auto& [synonym, concept_id] : ont.sorted_synonyms()) {
    synonyms_.push_back(synonym);
    concept_ids_.push_back(concept_id);
    vectors_.push_back(emb.phrase_vector(synonym));
    bool zero = true;
    for (float v : vectors_.back())
      if (v != 0.0f) zero = false;
    zero_.push_back(zero);
  }
}

std::optional<EmbeddingMatchIndex::Hit> EmbeddingMatchIndex::best(const std::string& chunk) const {
  std::vector<float> vec = emb_->phrase_vector(chunk);
  bool zero = true;
  for (float v : vec)
    if (v != 0.0f) zero = false;
  if (zero) return std::nullopt;

  bool have = false;
  Hit best_hit;
  for (size_t i = 0; i < synonyms_.size(); i++) {
    if (zero_[i]) continue;
    double cos = cosine(vec, vectors_[i]);
    bool better = false;
    if (!have) {
      better = true;
    } else if (cos != best_hit.cosine) {
      better = cos > best_hit.cosine;
    } else if (synonyms_[i].size() != best_hit.synonym.size()) {
      better = synonyms_[i].size() > best_hit.synonym.size();
    } else if (concept_ids_[i] != best_hit.concept_id) {
      better = concept_ids_[i] < best_hit.concept_id;
    } else {
      better = synonyms_[i] < best_hit.synonym;
    }
    if (better) {
      have = true;
      best_hit = Hit{concept_ids_[i], synonyms_[i], cos};
    }
  }
  if (!have) return std::nullopt;
  return best_hit;
}

ChunkMatcher::ChunkMatcher(const Ontology& ont, const MatchConfig& cfg, const StageSet& stages,
                           const EmbeddingTable* emb)
    : ont_(&ont), cfg_(cfg), stages_(stages), emb_(emb) {
  if (cfg.tau_approx <= 0 || cfg.tau_approx > 1 || cfg.tau_emb <= 0 || cfg.tau_emb > 1)
    throw config_error("matcher thresholds must lie in (0, 1]");
  if (!stages.any()) throw config_error("no matcher stages enabled");
  if (stages.approx) approx_.emplace(ont, cfg.ngram_size);
  if (stages.embedding) {
    if (!emb) throw config_error("embedding stage enabled but no embedding table given");
    embedding_.emplace(ont, *emb);
  }
}

std::optional<StageHit> ChunkMatcher::match(const std::string& chunk_text,
                                            MatchDiagnostics* diag) const {
  if (diag) diag->chunks++;

  if (stages_.exact) {
    if (const std::string* id = ont_->lookup_exact(chunk_text)) {
      if (diag) diag->exact_hits++;
      return StageHit{*id, 1.0, MatchStage::exact};
    }
  }
  if (stages_.approx) {
    std::optional<ApproxIndex::Hit> hit = approx_->best(chunk_text);
    if (hit && hit->score >= cfg_.tau_approx) {
      if (diag) diag->approx_hits++;
      return StageHit{hit->concept_id, hit->score, MatchStage::approx};
    }
  }
  if (stages_.embedding) {
    std::optional<EmbeddingMatchIndex::Hit> hit = embedding_->best(chunk_text);
    if (!hit) {
      if (diag) diag->zero_vector_chunks++;
    } else if (hit->cosine >= cfg_.tau_emb) {
      double confidence = std::min(std::max(hit->cosine, 0.0), 1.0);
      if (confidence > 0) {
        if (diag) diag->embedding_hits++;
        return StageHit{hit->concept_id, confidence, MatchStage::embedding};
      }
    }
  }
  if (diag) diag->unmatched++;
  return std::nullopt;
}

namespace {

AnnotatedRecord weak_label_record(const Record& rec, const ChunkMatcher& matcher,
                                  const SeparatorConfig& sep_cfg, MatchDiagnostics* diag) {
  AnnotatedRecord out;
  out.record_id = rec.id;
  out.text = rec.text;
  std::vector<Token> tokens = tokenize(rec.text, sep_cfg);
  for (const Chunk& chunk : split_chunks(tokens)) {
    std::string text = chunk_text(rec.text, chunk);
    std::optional<StageHit> hit = matcher.match(text, diag);
    if (hit) {
      SpanAnnotation ann;
      ann.span = chunk.span;
      ann.concept_id = hit->concept_id;
      ann.confidence = hit->confidence;
      ann.stage = hit->stage;
      out.annotations.push_back(std::move(ann));
    } else {
      out.unmatched.push_back(chunk.span);
    }
  }
  return out;
}

}  // namespace

std::vector<AnnotatedRecord> generate_weak_labels(const std::vector<Record>& corpus,
                                                  const ChunkMatcher& matcher,
                                                  const SeparatorConfig& sep_cfg,
                                                  MatchDiagnostics* diag, uint32_t workers) {
  std::vector<AnnotatedRecord> out(corpus.size());
  if (workers <= 1 || corpus.size() < 2 * workers) {
    for (size_t i = 0; i < corpus.size(); i++)
      out[i] = weak_label_record(corpus[i], matcher, sep_cfg, diag);
    return out;
  }

  // Fan out over stripes; per-record work is pure and results land in
  // record order, so output is identical to the sequential path.
  std::vector<MatchDiagnostics> partial(workers);
  std::vector<std::thread> threads;
  for (uint32_t w = 0; w < workers; w++) {
    threads.emplace_back([&, w]() {
      for (size_t i = w; i < corpus.size(); i += workers)
        out[i] = weak_label_record(corpus[i], matcher, sep_cfg, diag ? &partial[w] : nullptr);
    });
  }
  for (std::thread& th : threads) th.join();
  if (diag) {
    for (const MatchDiagnostics& p : partial) {
      diag->chunks += p.chunks;
      diag->exact_hits += p.exact_hits;
      diag->approx_hits += p.approx_hits;
      diag->embedding_hits += p.embedding_hits;
      diag->unmatched += p.unmatched;
      diag->zero_vector_chunks += p.zero_vector_chunks;
    }
  }
  return out;
}

}  // namespace cclink
