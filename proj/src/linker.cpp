#include "cclink/linker.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "binio.hpp"
#include "cclink/rng.hpp"

namespace cclink {

namespace {

constexpr uint32_t kModelVersion = 1;

uint64_t compute_template_hash(const LinkerConfig& cfg, uint32_t dense_dim) {
  std::string sig = "linker-features-v1;bias,mention-word,mention-char,left,right";
  sig += ";window=" + std::to_string(cfg.context_window);
  sig += ";ngram=" + std::to_string(cfg.char_ngram_min) + "-" + std::to_string(cfg.char_ngram_max);
  sig += ";hash_bits=" + std::to_string(cfg.hash_bits);
  sig += ";dense=" + std::to_string(dense_dim);
  sig += ";sep=" + cfg.separators.separators;
  sig += ";slash_min_run=" + std::to_string(cfg.separators.slash_min_run);
  sig += ";period_guard=" + std::to_string(cfg.separators.period_digit_guard ? 1 : 0);
  return fnv1a64(sig);
}

void hash_bundle(const FeatureBundle& bundle, uint32_t mask, std::vector<uint32_t>* out) {
  out->clear();
  out->push_back(static_cast<uint32_t>(fnv1a64("b") & mask));
  for (const std::string& w : bundle.mention_words)
    out->push_back(static_cast<uint32_t>(fnv1a64("mw=" + w) & mask));
  for (const std::string& g : bundle.mention_char_ngrams)
    out->push_back(static_cast<uint32_t>(fnv1a64("mc=" + g) & mask));
  for (const std::string& c : bundle.left_context)
    out->push_back(static_cast<uint32_t>(fnv1a64("l=" + c) & mask));
  for (const std::string& c : bundle.right_context)
    out->push_back(static_cast<uint32_t>(fnv1a64("r=" + c) & mask));
}

void validate_linker_config(const LinkerConfig& cfg) {
  if (cfg.char_ngram_min < 1 || cfg.char_ngram_min > cfg.char_ngram_max)
    throw config_error("linker: char n-gram sizes must satisfy 1 <= min <= max");
  if (cfg.hash_bits < 8 || cfg.hash_bits > 28)
    throw config_error("linker: hash_bits must be in [8, 28]");
  if (cfg.lr <= 0.0) throw config_error("linker: lr must be positive");
  if (cfg.epochs == 0) throw config_error("linker: epochs must be at least 1");
}

}  // namespace

FeatureBundle featurize_mention(const Record& rec, const CharSpan& span,
                                const LinkerConfig& cfg) {
  if (span.start >= span.end || span.end > rec.text.size())
    throw data_error("record " + rec.id + ": mention span [" + std::to_string(span.start) + "," +
                     std::to_string(span.end) + ") out of range");
  std::vector<Token> tokens = tokenize(rec.text, cfg.separators);

  ptrdiff_t first = -1, last = -1;
  FeatureBundle bundle;
  for (size_t t = 0; t < tokens.size(); t++) {
    const CharSpan& ts = tokens[t].span;
    if (ts.start < span.start || ts.end > span.end) continue;
    if (first < 0) first = static_cast<ptrdiff_t>(t);
    last = static_cast<ptrdiff_t>(t);
    if (tokens[t].is_word) bundle.mention_words.push_back(tokens[t].text);
  }
  if (first < 0)
    throw data_error("record " + rec.id + ": mention span [" + std::to_string(span.start) + "," +
                     std::to_string(span.end) + ") covers no tokens");

  std::string text = rec.text.substr(span.start, span.end - span.start);
  for (uint32_t n = cfg.char_ngram_min; n <= cfg.char_ngram_max; n++)
    for (size_t i = 0; i + n <= text.size(); i++)
      bundle.mention_char_ngrams.push_back(text.substr(i, n));

  for (uint32_t k = 1; k <= cfg.context_window; k++) {
    ptrdiff_t idx = first - static_cast<ptrdiff_t>(k);
    if (idx < 0 || tokens[idx].is_separator) break;
    bundle.left_context.push_back(tokens[idx].text + "@-" + std::to_string(k));
  }
  for (uint32_t k = 1; k <= cfg.context_window; k++) {
    size_t idx = static_cast<size_t>(last) + k;
    if (idx >= tokens.size() || tokens[idx].is_separator) break;
    bundle.right_context.push_back(tokens[idx].text + "@+" + std::to_string(k));
  }
  return bundle;
}

void LinkerModel::score_mention(const Record& rec, const CharSpan& span,
                                const EmbeddingTable* emb, std::vector<double>* out) const {
  if (emb_fingerprint_ != 0) {
    if (!emb)
      throw fingerprint_error("linker model was trained with embeddings but none were provided");
    if (emb->fingerprint() != emb_fingerprint_)
      throw fingerprint_error("embedding table does not match the one this linker was trained with");
  }
  size_t n = classes_.size();
  out->assign(n, 0.0);

  FeatureBundle bundle = featurize_mention(rec, span, cfg_);
  std::vector<uint32_t> sparse;
  hash_bundle(bundle, (1u << cfg_.hash_bits) - 1, &sparse);
  for (uint32_t idx : sparse) {
    auto it = rows_.find(idx);
    if (it == rows_.end()) continue;
    const std::vector<float>& row = it->second;
    for (size_t c = 0; c < n; c++) (*out)[c] += row[c];
  }
  if (dense_dim_ > 0) {
    std::vector<float> phrase = emb->phrase_vector(bundle.mention_words);
    for (size_t d = 0; d < dense_dim_; d++) {
      double x = phrase[d];
      if (x == 0.0) continue;
      const float* row = dense_rows_.data() + d * n;
      for (size_t c = 0; c < n; c++) (*out)[c] += row[c] * x;
    }
  }

  double mx = *std::max_element(out->begin(), out->end());
  double z = 0;
  for (double& v : *out) {
    v = std::exp(v - mx);
    z += v;
  }
  for (double& v : *out) v /= z;
}

std::vector<double> LinkerModel::class_distribution(const Record& rec, const CharSpan& span,
                                                    const EmbeddingTable* emb) const {
  std::vector<double> dist;
  score_mention(rec, span, emb, &dist);
  return dist;
}

LinkedMention LinkerModel::link(const Record& rec, const CharSpan& span,
                                const EmbeddingTable* emb) const {
  std::vector<double> dist;
  score_mention(rec, span, emb, &dist);
  size_t best = 0;
  for (size_t c = 1; c < dist.size(); c++)
    if (dist[c] > dist[best]) best = c;
  LinkedMention out;
  out.record_id = rec.id;
  out.span = span;
  out.concept_id = classes_[best];
  out.score = dist[best];
  out.source = LinkedMention::Source::model;
  return out;
}

std::string LinkerModel::serialize() const {
  ByteWriter w;
  w.raw("CCLK", 4);
  w.u32(kModelVersion);
  w.u64(compute_template_hash(cfg_, dense_dim_));
  w.u64(ont_fingerprint_);
  w.u64(emb_fingerprint_);
  w.u32(cfg_.context_window);
  w.u32(cfg_.char_ngram_min);
  w.u32(cfg_.char_ngram_max);
  w.u32(cfg_.hash_bits);
  w.u32(dense_dim_);
  w.u64(cfg_.seed);
  w.u32(cfg_.epochs);
  w.str(cfg_.separators.separators);
  w.u32(cfg_.separators.slash_min_run);
  w.u8(cfg_.separators.period_digit_guard ? 1 : 0);

  w.u32(static_cast<uint32_t>(classes_.size()));
  for (const std::string& id : classes_) w.str(id);

  std::vector<uint32_t> buckets;
  buckets.reserve(rows_.size());
  for (const auto& entry : rows_) buckets.push_back(entry.first);
  std::sort(buckets.begin(), buckets.end());
  w.u64(buckets.size());
  for (uint32_t b : buckets) {
    w.u32(b);
    w.f32s(rows_.at(b));
  }
  w.f32s(dense_rows_);
  return w.out;
}

void LinkerModel::save(const std::string& path) const { write_file(path, serialize()); }

LinkerModel LinkerModel::load(const std::string& path) {
  std::string blob = read_file(path);
  ByteReader r{blob, 0, path};
  char magic[4];
  r.raw(magic, 4);
  if (std::string(magic, 4) != "CCLK") throw data_error(path + ": not a linker model file");
  uint32_t version = r.u32();
  if (version != kModelVersion)
    throw data_error(path + ": unsupported linker model version " + std::to_string(version));

  LinkerModel m;
  uint64_t stored_template = r.u64();
  m.ont_fingerprint_ = r.u64();
  m.emb_fingerprint_ = r.u64();
  m.cfg_.context_window = r.u32();
  m.cfg_.char_ngram_min = r.u32();
  m.cfg_.char_ngram_max = r.u32();
  m.cfg_.hash_bits = r.u32();
  m.dense_dim_ = r.u32();
  m.cfg_.seed = r.u64();
  m.cfg_.epochs = r.u32();
  m.cfg_.separators.separators = r.str();
  m.cfg_.separators.slash_min_run = r.u32();
  m.cfg_.separators.period_digit_guard = r.u8() != 0;
  validate_linker_config(m.cfg_);
  if (stored_template != compute_template_hash(m.cfg_, m.dense_dim_))
    throw fingerprint_error(path + ": feature template mismatch");

  uint32_t class_count = r.u32();
  if (class_count == 0) throw data_error(path + ": empty class list");
  m.classes_.reserve(class_count);
  for (uint32_t i = 0; i < class_count; i++) m.classes_.push_back(r.str());

  uint64_t row_count = r.u64();
  uint32_t hash_dim_limit = 1u << m.cfg_.hash_bits;
  for (uint64_t i = 0; i < row_count; i++) {
    uint32_t bucket = r.u32();
    if (bucket >= hash_dim_limit) throw data_error(path + ": bucket index out of range");
    std::vector<float> row;
    r.f32s(row, class_count);
    m.rows_.emplace(bucket, std::move(row));
  }
  r.f32s(m.dense_rows_, static_cast<size_t>(m.dense_dim_) * class_count);
  if (r.pos != blob.size()) throw data_error(path + ": trailing bytes");
  return m;
}

uint64_t LinkerModel::fingerprint() const {
  std::string blob = serialize();
  return fnv1a64(blob.data(), blob.size());
}

LinkerModel train_linker(const std::vector<AnnotatedRecord>& data, const Ontology& ont,
                         const LinkerConfig& cfg, const EmbeddingTable* emb,
                         LinkerTrainReport* report) {
  validate_linker_config(cfg);
  if (ont.size() == 0) throw data_error("train_linker: ontology has no concepts");
  if (data.empty()) throw data_error("train_linker: no training records");

  LinkerModel model;
  model.cfg_ = cfg;
  model.dense_dim_ = emb ? emb->dim() : 0;
  model.ont_fingerprint_ = ont.fingerprint();
  model.emb_fingerprint_ = emb ? emb->fingerprint() : 0;
  for (const Concept& c : ont.concepts()) model.classes_.push_back(c.id);
  size_t n = model.classes_.size();
  model.dense_rows_.assign(static_cast<size_t>(model.dense_dim_) * n, 0.0f);

  std::unordered_map<std::string, uint32_t> class_index;
  for (size_t c = 0; c < n; c++) class_index.emplace(model.classes_[c], c);

  struct Example {
    std::vector<uint32_t> sparse;
    std::vector<float> dense;
    uint32_t target = 0;
    float weight = 1.0f;
  };
  std::vector<Example> examples;
  uint32_t mask = (1u << cfg.hash_bits) - 1;
  for (const AnnotatedRecord& rec : data) {
    Record r{rec.record_id, rec.text};
    for (const SpanAnnotation& ann : rec.annotations) {
      if (ann.concept_id.empty())
        throw data_error("record " + rec.record_id + ": training annotation without a concept");
      auto it = class_index.find(ann.concept_id);
      if (it == class_index.end())
        throw data_error("record " + rec.record_id + ": unknown concept " + ann.concept_id);
      if (ann.confidence < 0.0 || ann.confidence > 1.0)
        throw data_error("record " + rec.record_id + ": confidence outside [0, 1]");
      Example ex;
      FeatureBundle bundle = featurize_mention(r, ann.span, cfg);
      hash_bundle(bundle, mask, &ex.sparse);
      if (emb) ex.dense = emb->phrase_vector(bundle.mention_words);
      ex.target = it->second;
      ex.weight = static_cast<float>(ann.confidence);
      examples.push_back(std::move(ex));
    }
  }
  if (examples.empty()) throw data_error("train_linker: no concept-bearing annotations");

  if (report) {
    report->epoch_loss.clear();
    report->examples = examples.size();
  }

  std::vector<size_t> order(examples.size());
  for (size_t i = 0; i < order.size(); i++) order[i] = i;
  std::vector<double> scores(n);
  std::vector<double> grad(n);
  Rng root(cfg.seed);

  for (uint32_t e = 0; e < cfg.epochs; e++) {
    double alpha = cfg.lr * std::max(0.05, 1.0 - static_cast<double>(e) / cfg.epochs);
    Rng order_rng = root.fork(0x11e + e);
    shuffle(order, order_rng);

    double loss_sum = 0, weight_sum = 0;
    for (size_t i : order) {
      const Example& ex = examples[i];
      double w = ex.weight;
      if (w == 0.0) continue;

      std::fill(scores.begin(), scores.end(), 0.0);
      for (uint32_t idx : ex.sparse) {
        auto it = model.rows_.find(idx);
        if (it == model.rows_.end()) continue;
        const std::vector<float>& row = it->second;
        for (size_t c = 0; c < n; c++) scores[c] += row[c];
      }
      for (size_t d = 0; d < ex.dense.size(); d++) {
        double x = ex.dense[d];
        if (x == 0.0) continue;
        const float* row = model.dense_rows_.data() + d * n;
        for (size_t c = 0; c < n; c++) scores[c] += row[c] * x;
      }

      double mx = *std::max_element(scores.begin(), scores.end());
      double z = 0;
      for (size_t c = 0; c < n; c++) {
        grad[c] = std::exp(scores[c] - mx);
        z += grad[c];
      }
      double p_target = grad[ex.target] / z;
      loss_sum += w * -std::log(std::max(p_target, 1e-12));
      weight_sum += w;

      // grad currently holds unnormalized exps; finish p - y scaled by step.
      double scale = alpha * w;
      for (size_t c = 0; c < n; c++) grad[c] = scale * (grad[c] / z);
      grad[ex.target] -= scale;

      for (uint32_t idx : ex.sparse) {
        auto it = model.rows_.try_emplace(idx, std::vector<float>(n, 0.0f)).first;
        std::vector<float>& row = it->second;
        for (size_t c = 0; c < n; c++) row[c] -= static_cast<float>(grad[c]);
      }
      for (size_t d = 0; d < ex.dense.size(); d++) {
        double x = ex.dense[d];
        if (x == 0.0) continue;
        float* row = model.dense_rows_.data() + d * n;
        for (size_t c = 0; c < n; c++) row[c] -= static_cast<float>(grad[c] * x);
      }
    }
    if (report) report->epoch_loss.push_back(weight_sum > 0 ? loss_sum / weight_sum : 0.0);
  }
  return model;
}

LinkedMention link_ensemble(const Ontology& ont, const LinkerModel& model, const Record& rec,
                            const CharSpan& span, const EmbeddingTable* emb) {
  if (ont.fingerprint() != model.ontology_fingerprint())
    throw fingerprint_error("ontology does not match the one this linker was trained with");
  std::string text = rec.text.substr(span.start, span.end - span.start);
  if (const std::string* concept_id = ont.lookup_exact(text)) {
    LinkedMention out;
    out.record_id = rec.id;
    out.span = span;
    out.concept_id = *concept_id;
    out.score = 1.0;
    out.source = LinkedMention::Source::exact_match;
    return out;
  }
  return model.link(rec, span, emb);
}

}  // namespace cclink
