#include "cclink/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <map>

#include "binio.hpp"
#include "cclink/rng.hpp"
#include "cclink/textprep.hpp"

namespace cclink {

namespace {

constexpr int kSigmoidTableSize = 1024;
constexpr double kMaxExp = 6.0;

// Precomputed sigmoid, the usual word2vec trick. Values outside [-6, 6]
// clamp to 0/1.
struct SigmoidTable {
  float values[kSigmoidTableSize];
  SigmoidTable() {
    for (int i = 0; i < kSigmoidTableSize; i++) {
      double x = (2.0 * kMaxExp * i) / kSigmoidTableSize - kMaxExp;
      values[i] = static_cast<float>(1.0 / (1.0 + std::exp(-x)));
    }
  }
  float operator()(double x) const {
    if (x <= -kMaxExp) return 0.0f;
    if (x >= kMaxExp) return 1.0f;
    int idx = static_cast<int>((x + kMaxExp) / (2.0 * kMaxExp) * kSigmoidTableSize);
    if (idx >= kSigmoidTableSize) idx = kSigmoidTableSize - 1;
    return values[idx];
  }
};

const SigmoidTable& sigmoid_table() {
  static SigmoidTable table;
  return table;
}

}  // namespace

std::vector<std::string> subword_ngrams(const std::string& word, uint32_t min_len, uint32_t max_len) {
  std::string padded = "<" + word + ">";
  std::vector<std::string> grams;
  for (size_t start = 0; start < padded.size(); start++) {
    for (uint32_t len = min_len; len <= max_len && start + len <= padded.size(); len++) {
      grams.push_back(padded.substr(start, len));
    }
  }
  return grams;
}

double cosine(const std::vector<float>& a, const std::vector<float>& b) {
  if (a.size() != b.size()) throw data_error("cosine: dimension mismatch");
  double dot = 0, na = 0, nb = 0;
  for (size_t i = 0; i < a.size(); i++) {
    dot += static_cast<double>(a[i]) * b[i];
    na += static_cast<double>(a[i]) * a[i];
    nb += static_cast<double>(b[i]) * b[i];
  }
  if (na == 0 || nb == 0) return 0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

void EmbeddingTable::word_vector_into(const std::string& word, float* out) const {
  for (uint32_t d = 0; d < dim_; d++) out[d] = 0.0f;
  size_t rows = 0;
  auto it = word_index_.find(word);
  if (it != word_index_.end()) {
    const float* row = &word_rows_[static_cast<size_t>(it->second) * dim_];
    for (uint32_t d = 0; d < dim_; d++) out[d] += row[d];
    rows++;
  }
  for (const std::string& gram : subword_ngrams(word, subword_min_, subword_max_)) {
    uint64_t bucket = fnv1a64(gram) % bucket_count_;
    auto git = bucket_index_.find(bucket);
    if (git == bucket_index_.end()) continue;
    const float* row = &gram_rows_[static_cast<size_t>(git->second) * dim_];
    for (uint32_t d = 0; d < dim_; d++) out[d] += row[d];
    rows++;
  }
  if (rows > 1) {
    float inv = 1.0f / static_cast<float>(rows);
    for (uint32_t d = 0; d < dim_; d++) out[d] *= inv;
  }
}

std::vector<float> EmbeddingTable::word_vector(const std::string& word) const {
  std::vector<float> out(dim_, 0.0f);
  word_vector_into(word, out.data());
  return out;
}

std::vector<float> EmbeddingTable::phrase_vector(const std::vector<std::string>& tokens) const {
  std::vector<float> out(dim_, 0.0f);
  if (tokens.empty()) return out;
  std::vector<float> buf(dim_);
  for (const std::string& tok : tokens) {
    word_vector_into(tok, buf.data());
    for (uint32_t d = 0; d < dim_; d++) out[d] += buf[d];
  }
  float inv = 1.0f / static_cast<float>(tokens.size());
  for (uint32_t d = 0; d < dim_; d++) out[d] *= inv;
  return out;
}

std::vector<float> EmbeddingTable::phrase_vector(const std::string& phrase) const {
  return phrase_vector(word_split(phrase));
}

std::string EmbeddingTable::serialize() const {
  ByteWriter w;
  w.raw("CCEM", 4);
  w.u32(1);  // version
  w.u32(dim_);
  w.u32(subword_min_);
  w.u32(subword_max_);
  w.u64(bucket_count_);
  w.u64(words_.size());
  w.u64(bucket_ids_.size());
  for (size_t i = 0; i < words_.size(); i++) {
    w.str(words_[i]);
    w.u64(counts_[i]);
  }
  w.f32s(word_rows_);
  for (uint64_t id : bucket_ids_) w.u64(id);
  w.f32s(gram_rows_);
  return w.out;
}

void EmbeddingTable::save(const std::string& path) const { write_file(path, serialize()); }

EmbeddingTable EmbeddingTable::load(const std::string& path) {
  std::string blob = read_file(path);
  ByteReader r{blob, 0, path};
  char magic[4];
  r.raw(magic, 4);
  if (std::memcmp(magic, "CCEM", 4) != 0) throw data_error(path + ": not an embedding table");
  uint32_t version = r.u32();
  if (version != 1) throw data_error(path + ": unsupported embedding format version");

  EmbeddingTable t;
  t.dim_ = r.u32();
  t.subword_min_ = r.u32();
  t.subword_max_ = r.u32();
  t.bucket_count_ = r.u64();
  uint64_t vocab = r.u64();
  uint64_t used = r.u64();
  t.words_.reserve(vocab);
  t.counts_.reserve(vocab);
  for (uint64_t i = 0; i < vocab; i++) {
    t.words_.push_back(r.str());
    t.counts_.push_back(r.u64());
    t.word_index_[t.words_.back()] = static_cast<uint32_t>(i);
  }
  r.f32s(t.word_rows_, vocab * t.dim_);
  t.bucket_ids_.reserve(used);
  for (uint64_t i = 0; i < used; i++) {
    t.bucket_ids_.push_back(r.u64());
    t.bucket_index_[t.bucket_ids_.back()] = static_cast<uint32_t>(i);
  }
  r.f32s(t.gram_rows_, used * t.dim_);
  if (r.pos != blob.size()) throw data_error(path + ": trailing bytes");
  t.fingerprint_ = fnv1a64(blob.data(), blob.size());
  return t;
}

void EmbeddingTable::export_text(const std::string& path) const {
  std::string out;
  char buf[32];
  for (size_t i = 0; i < words_.size(); i++) {
    out += words_[i];
    const float* row = &word_rows_[i * dim_];
    for (uint32_t d = 0; d < dim_; d++) {
      std::snprintf(buf, sizeof buf, " %.6g", static_cast<double>(row[d]));
      out += buf;
    }
    out += '\n';
  }
  write_file(path, out);
}

EmbeddingTable train_embeddings(const std::vector<Record>& corpus, const EmbeddingConfig& cfg,
                                EmbeddingTrainReport* report) {
  if (cfg.dim == 0 || cfg.epochs == 0 || cfg.window == 0)
    throw config_error("embedding: dim, epochs, and window must be >= 1");

  // Pass 1: vocabulary.
  std::map<std::string, uint64_t> counts;
  std::vector<std::vector<std::string>> sentences;
  sentences.reserve(corpus.size());
  uint64_t token_total = 0;
  for (const Record& rec : corpus) {
    sentences.push_back(word_split(normalize(rec.text)));
    for (const std::string& w : sentences.back()) counts[w]++;
    token_total += sentences.back().size();
  }

  EmbeddingTable t;
  t.dim_ = cfg.dim;
  t.subword_min_ = cfg.subword_min;
  t.subword_max_ = cfg.subword_max;
  t.bucket_count_ = cfg.bucket_count;

  std::vector<std::pair<std::string, uint64_t>> vocab(counts.begin(), counts.end());
  std::erase_if(vocab, [&](const auto& e) { return e.second < cfg.min_count; });
  std::sort(vocab.begin(), vocab.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  for (size_t i = 0; i < vocab.size(); i++) {
    t.words_.push_back(vocab[i].first);
    t.counts_.push_back(vocab[i].second);
    t.word_index_[vocab[i].first] = static_cast<uint32_t>(i);
  }

  // Materialize only the n-gram buckets the vocabulary can reach.
  std::vector<std::vector<uint64_t>> word_bucket_lists(t.words_.size());
  for (size_t i = 0; i < t.words_.size(); i++) {
    for (const std::string& gram : subword_ngrams(t.words_[i], cfg.subword_min, cfg.subword_max))
      word_bucket_lists[i].push_back(fnv1a64(gram) % cfg.bucket_count);
  }
  for (const auto& list : word_bucket_lists)
    t.bucket_ids_.insert(t.bucket_ids_.end(), list.begin(), list.end());
  std::sort(t.bucket_ids_.begin(), t.bucket_ids_.end());
  t.bucket_ids_.erase(std::unique(t.bucket_ids_.begin(), t.bucket_ids_.end()), t.bucket_ids_.end());
  for (size_t i = 0; i < t.bucket_ids_.size(); i++)
    t.bucket_index_[t.bucket_ids_[i]] = static_cast<uint32_t>(i);

  // Per-word input row lists (own row + gram rows), resolved once.
  std::vector<std::vector<uint32_t>> word_gram_rows(t.words_.size());
  for (size_t i = 0; i < t.words_.size(); i++) {
    for (uint64_t bucket : word_bucket_lists[i])
      word_gram_rows[i].push_back(t.bucket_index_.at(bucket));
  }

  size_t dim = cfg.dim;
  Rng rng(cfg.seed);
  t.word_rows_.resize(t.words_.size() * dim);
  for (float& v : t.word_rows_) v = static_cast<float>((rng.next_double() - 0.5) / dim);
  t.gram_rows_.resize(t.bucket_ids_.size() * dim);
  for (float& v : t.gram_rows_) v = static_cast<float>((rng.next_double() - 0.5) / dim);
  std::vector<float> out_rows(t.words_.size() * dim, 0.0f);

  // Unigram^0.75 table for negative sampling.
  std::vector<uint32_t> neg_table;
  {
    const size_t table_size = 1 << 20;
    double total = 0;
    for (uint64_t c : t.counts_) total += std::pow(static_cast<double>(c), 0.75);
    neg_table.reserve(table_size);
    if (!t.words_.empty() && total > 0) {
      size_t word = 0;
      double cum = std::pow(static_cast<double>(t.counts_[0]), 0.75) / total;
      for (size_t i = 0; i < table_size; i++) {
        neg_table.push_back(static_cast<uint32_t>(word));
        if (static_cast<double>(i) / table_size > cum && word + 1 < t.words_.size()) {
          word++;
          cum += std::pow(static_cast<double>(t.counts_[word]), 0.75) / total;
        }
      }
    }
  }

  // Sentences as vocabulary ids.
  std::vector<std::vector<uint32_t>> id_sentences(sentences.size());
  for (size_t s = 0; s < sentences.size(); s++) {
    for (const std::string& w : sentences[s]) {
      auto it = t.word_index_.find(w);
      if (it != t.word_index_.end()) id_sentences[s].push_back(it->second);
    }
  }

  const SigmoidTable& sigmoid = sigmoid_table();
  std::vector<float> hidden(dim), grad(dim);
  std::vector<size_t> order(id_sentences.size());
  for (size_t i = 0; i < order.size(); i++) order[i] = i;

  uint64_t planned = static_cast<uint64_t>(cfg.epochs) * std::max<uint64_t>(token_total, 1);
  uint64_t processed = 0;
  double alpha = cfg.lr;

  if (report) {
    report->vocab_size = t.words_.size();
    report->used_buckets = t.bucket_ids_.size();
    report->token_count = token_total;
    report->epoch_loss.clear();
  }

  std::vector<uint32_t> kept;
  for (uint32_t epoch = 0; epoch < cfg.epochs; epoch++) {
    shuffle(order, rng);
    double loss_sum = 0;
    uint64_t loss_count = 0;
    for (size_t si : order) {
      const std::vector<uint32_t>& sent = id_sentences[si];
      kept.clear();
      for (uint32_t id : sent) {
        processed++;
        if (cfg.subsample > 0) {
          double f = static_cast<double>(t.counts_[id]) / token_total;
          double keep = (std::sqrt(f / cfg.subsample) + 1.0) * cfg.subsample / f;
          if (keep < 1.0 && rng.next_double() > keep) continue;
        }
        kept.push_back(id);
      }
      if (processed % 10000 < sent.size()) {
        alpha = cfg.lr * (1.0 - static_cast<double>(processed) / (planned + 1));
        if (alpha < cfg.lr * 1e-4) alpha = cfg.lr * 1e-4;
      }

      for (size_t i = 0; i < kept.size(); i++) {
        uint32_t center = kept[i];
        size_t reach = 1 + rng.next_below(cfg.window);
        size_t lo = i > reach ? i - reach : 0;
        size_t hi = std::min(kept.size(), i + reach + 1);

        // Compose the center word's input vector from its row and gram rows.
        const std::vector<uint32_t>& gram_rows = word_gram_rows[center];
        size_t n_rows = 1 + gram_rows.size();
        {
          const float* row = &t.word_rows_[static_cast<size_t>(center) * dim];
          for (size_t d = 0; d < dim; d++) hidden[d] = row[d];
          for (uint32_t g : gram_rows) {
            const float* grow = &t.gram_rows_[static_cast<size_t>(g) * dim];
            for (size_t d = 0; d < dim; d++) hidden[d] += grow[d];
          }
          float inv = 1.0f / static_cast<float>(n_rows);
          for (size_t d = 0; d < dim; d++) hidden[d] *= inv;
        }
        std::fill(grad.begin(), grad.end(), 0.0f);
        bool touched = false;

        for (size_t j = lo; j < hi; j++) {
          if (j == i) continue;
          uint32_t context = kept[j];
          for (uint32_t n = 0; n <= cfg.negatives; n++) {
            uint32_t target;
            float label;
            if (n == 0) {
              target = context;
              label = 1.0f;
            } else {
              target = neg_table[rng.next_below(neg_table.size())];
              if (target == context) continue;
              label = 0.0f;
            }
            float* out_row = &out_rows[static_cast<size_t>(target) * dim];
            double score = 0;
            for (size_t d = 0; d < dim; d++) score += static_cast<double>(hidden[d]) * out_row[d];
            float pred = sigmoid(score);
            float g = static_cast<float>((label - pred) * alpha);
            for (size_t d = 0; d < dim; d++) {
              float old = out_row[d];
              grad[d] += g * old;
              out_row[d] += g * hidden[d];
            }
            touched = true;
            double p = label > 0.5f ? pred : 1.0f - pred;
            loss_sum += -std::log(std::max(p, 1e-10));
            loss_count++;
          }
        }

        if (touched) {
          float inv = 1.0f / static_cast<float>(n_rows);
          float* row = &t.word_rows_[static_cast<size_t>(center) * dim];
          for (size_t d = 0; d < dim; d++) row[d] += grad[d] * inv;
          for (uint32_t g : gram_rows) {
            float* grow = &t.gram_rows_[static_cast<size_t>(g) * dim];
            for (size_t d = 0; d < dim; d++) grow[d] += grad[d] * inv;
          }
        }
      }
    }
    if (report) report->epoch_loss.push_back(loss_count ? loss_sum / loss_count : 0.0);
  }

  std::string blob = t.serialize();
  t.fingerprint_ = fnv1a64(blob.data(), blob.size());
  return t;
}

}  // namespace cclink
