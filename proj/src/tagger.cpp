#include "cclink/tagger.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <unordered_map>

#include "binio.hpp"
#include "cclink/rng.hpp"

namespace cclink {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr uint32_t kModelVersion = 1;

// Collapsed character-class shape: letters -> a, digits -> d, punctuation
// stays itself. "x3" -> "ad", "99.9" -> "d.d".
std::string token_shape(const std::string& text) {
  std::string shape;
  char prev = '\0';
  for (char raw : text) {
    unsigned char c = static_cast<unsigned char>(raw);
    char cls;
    if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80)
      cls = 'a';
    else if (c >= '0' && c <= '9')
      cls = 'd';
    else
      cls = static_cast<char>(c);
    if (cls != prev) shape.push_back(cls);
    prev = cls;
  }
  return shape;
}

uint32_t bucket_of(const std::string& feature, uint32_t mask) {
  return static_cast<uint32_t>(fnv1a64(feature) & mask);
}

// Hashed sparse features for one token. All binary-valued.
void token_features(const std::vector<Token>& tokens, size_t t, uint32_t mask,
                    std::vector<uint32_t>* out) {
  const std::string& w = tokens[t].text;
  out->clear();
  out->push_back(bucket_of("b", mask));
  out->push_back(bucket_of("w=" + w, mask));
  out->push_back(bucket_of("sh=" + token_shape(w), mask));
  for (size_t k = 1; k <= 4 && k <= w.size(); k++) {
    out->push_back(bucket_of("p" + std::to_string(k) + "=" + w.substr(0, k), mask));
    out->push_back(bucket_of("s" + std::to_string(k) + "=" + w.substr(w.size() - k), mask));
  }
  for (size_t i = 0; i + 3 <= w.size(); i++)
    out->push_back(bucket_of("tg=" + w.substr(i, 3), mask));
  if (tokens[t].is_separator) out->push_back(bucket_of("sep", mask));
  static const int kOffsets[4] = {-2, -1, 1, 2};
  for (int off : kOffsets) {
    ptrdiff_t j = static_cast<ptrdiff_t>(t) + off;
    const std::string& neighbor =
        j < 0 ? std::string("<s>")
              : (j >= static_cast<ptrdiff_t>(tokens.size()) ? std::string("</s>") : tokens[j].text);
    out->push_back(bucket_of("w[" + std::to_string(off) + "]=" + neighbor, mask));
  }
}

uint64_t compute_template_hash(const SeparatorConfig& sep, uint32_t hash_bits,
                               uint32_t dense_dim) {
  std::string sig = "bio-features-v1;bias,word,shape,prefix<=4,suffix<=4,trigram,sep,ctx+-2";
  sig += ";hash_bits=" + std::to_string(hash_bits);
  sig += ";dense=" + std::to_string(dense_dim);
  sig += ";sep=" + sep.separators;
  sig += ";slash_min_run=" + std::to_string(sep.slash_min_run);
  sig += ";period_guard=" + std::to_string(sep.period_digit_guard ? 1 : 0);
  return fnv1a64(sig);
}

// Caches embedding vectors per distinct word so repeated tokens cost one
// lookup. Values live in a node-based map, so the pointers stay valid.
struct DenseCache {
  const EmbeddingTable* emb;
  std::unordered_map<std::string, std::vector<float>> vectors;

  const float* get(const Token& token) {
    if (!emb || !token.is_word) return nullptr;
    auto it = vectors.find(token.text);
    if (it == vectors.end())
      it = vectors.emplace(token.text, emb->word_vector(token.text)).first;
    return it->second.data();
  }
};

}  // namespace

char bio_tag_letter(BioTag tag) {
  switch (tag) {
    case BioTag::B: return 'B';
    case BioTag::I: return 'I';
    case BioTag::O: return 'O';
  }
  return '?';
}

const char* train_strategy_name(TrainStrategy strategy) {
  switch (strategy) {
    case TrainStrategy::weak_only: return "weak";
    case TrainStrategy::supervised: return "supervised";
    case TrainStrategy::fine_tune: return "finetune";
  }
  return "?";
}

TrainStrategy train_strategy_from_name(const std::string& name) {
  if (name == "weak") return TrainStrategy::weak_only;
  if (name == "supervised") return TrainStrategy::supervised;
  if (name == "finetune") return TrainStrategy::fine_tune;
  throw config_error("unknown training strategy \"" + name +
                     "\" (expected weak, supervised, or finetune)");
}

RefineMode refine_mode_from_name(const std::string& name) {
  if (name == "exact") return RefineMode::exact_only;
  if (name == "exact-approx") return RefineMode::exact_approx;
  throw config_error("unknown refine mode \"" + name + "\" (expected exact or exact-approx)");
}

std::array<double, 3> smooth_targets(BioTag tag, double confidence, double epsilon_max) {
  if (confidence < 0.0 || confidence > 1.0)
    throw data_error("smooth_targets: confidence " + std::to_string(confidence) +
                     " outside [0, 1]");
  double eps = std::min(epsilon_max, 1.0 - confidence);
  std::array<double, 3> q = {eps / 3.0, eps / 3.0, eps / 3.0};
  q[static_cast<size_t>(tag)] += 1.0 - eps;
  return q;
}

TaggedSequence encode_bio(const AnnotatedRecord& rec, const TaggerConfig& cfg) {
  if (rec.text.empty())
    throw data_error("record " + rec.record_id + ": no text to encode");

  TaggedSequence seq;
  seq.record_id = rec.record_id;
  seq.tokens = tokenize(rec.text, cfg.separators);
  seq.tags.assign(seq.tokens.size(), BioTag::O);
  seq.weights.assign(seq.tokens.size(), 1.0f);

  std::vector<SpanAnnotation> anns = rec.annotations;
  std::sort(anns.begin(), anns.end(),
            [](const SpanAnnotation& a, const SpanAnnotation& b) {
              return a.span.start < b.span.start;
            });
  for (size_t i = 0; i + 1 < anns.size(); i++) {
    if (anns[i].span.end > anns[i + 1].span.start)
      throw data_error("record " + rec.record_id + ": overlapping annotations [" +
                       std::to_string(anns[i].span.start) + "," +
                       std::to_string(anns[i].span.end) + ") and [" +
                       std::to_string(anns[i + 1].span.start) + "," +
                       std::to_string(anns[i + 1].span.end) + ")");
  }

  for (const SpanAnnotation& ann : anns) {
    if (ann.span.start >= ann.span.end || ann.span.end > rec.text.size())
      throw data_error("record " + rec.record_id + ": annotation span [" +
                       std::to_string(ann.span.start) + "," + std::to_string(ann.span.end) +
                       ") out of range");
    bool first = true;
    bool aligned_start = false, aligned_end = false;
    for (size_t t = 0; t < seq.tokens.size(); t++) {
      const CharSpan& ts = seq.tokens[t].span;
      if (ts.end <= ann.span.start || ts.start >= ann.span.end) continue;
      if (ts.start < ann.span.start || ts.end > ann.span.end)
        throw data_error("record " + rec.record_id + ": annotation span [" +
                         std::to_string(ann.span.start) + "," + std::to_string(ann.span.end) +
                         ") cuts through token \"" + seq.tokens[t].text + "\"");
      if (ts.start == ann.span.start) aligned_start = true;
      if (ts.end == ann.span.end) aligned_end = true;
      seq.tags[t] = first ? BioTag::B : BioTag::I;
      seq.weights[t] = static_cast<float>(ann.confidence);
      first = false;
    }
    if (first || !aligned_start || !aligned_end)
      throw data_error("record " + rec.record_id + ": annotation span [" +
                       std::to_string(ann.span.start) + "," + std::to_string(ann.span.end) +
                       ") not aligned to token boundaries");
  }

  for (size_t t = 0; t < seq.tokens.size(); t++) {
    if (seq.tags[t] != BioTag::O) continue;
    for (const CharSpan& span : rec.unmatched) {
      if (span_overlap(seq.tokens[t].span, span) > 0) {
        seq.weights[t] = static_cast<float>(cfg.w_unmatched);
        break;
      }
    }
  }
  return seq;
}

std::vector<Mention> mentions_from_tags(const std::string& record_id,
                                        const std::vector<Token>& tokens,
                                        const std::vector<BioTag>& tags) {
  if (tokens.size() != tags.size())
    throw data_error("mentions_from_tags: " + std::to_string(tokens.size()) + " tokens vs " +
                     std::to_string(tags.size()) + " tags");
  std::vector<Mention> mentions;
  ptrdiff_t open = -1;
  auto close = [&](size_t last) {
    if (open < 0) return;
    Mention m;
    m.record_id = record_id;
    m.first_token = static_cast<uint32_t>(open);
    m.last_token = static_cast<uint32_t>(last);
    m.span = {tokens[open].span.start, tokens[last].span.end};
    mentions.push_back(std::move(m));
    open = -1;
  };
  for (size_t t = 0; t < tags.size(); t++) {
    if (tags[t] == BioTag::B) {
      close(t - 1);
      open = static_cast<ptrdiff_t>(t);
    } else if (tags[t] == BioTag::I) {
      // Orphan I (after O or at the start) begins a mention as if it were B.
      if (open < 0) open = static_cast<ptrdiff_t>(t);
    } else {
      close(t - 1);
    }
  }
  close(tags.size() - 1);
  return mentions;
}

std::string bio_tsv(const std::vector<TaggedSequence>& data) {
  std::string out;
  char buf[48];
  for (size_t i = 0; i < data.size(); i++) {
    if (i > 0) out += '\n';
    const TaggedSequence& seq = data[i];
    for (size_t t = 0; t < seq.tokens.size(); t++) {
      std::snprintf(buf, sizeof buf, "%.6g", static_cast<double>(seq.weights[t]));
      out += seq.tokens[t].text;
      out += '\t';
      out += bio_tag_letter(seq.tags[t]);
      out += '\t';
      out += buf;
      out += '\n';
    }
  }
  return out;
}

uint64_t TaggerModel::template_hash() const {
  return compute_template_hash(sep_, hash_bits_, dense_dim_);
}

std::vector<BioTag> TaggerModel::viterbi_tags(const std::vector<Token>& tokens,
                                              const EmbeddingTable* emb) const {
  if (emb_fingerprint_ != 0) {
    if (!emb)
      throw fingerprint_error("tagger model was trained with embeddings but none were provided");
    if (emb->fingerprint() != emb_fingerprint_)
      throw fingerprint_error("embedding table does not match the one this tagger was trained with");
  }
  size_t n = tokens.size();
  if (n == 0) return {};

  uint32_t mask = (1u << hash_bits_) - 1;
  size_t hash_dim = size_t(1) << hash_bits_;
  size_t width = hash_dim + dense_dim_;
  DenseCache cache{emb_fingerprint_ != 0 ? emb : nullptr, {}};
  std::vector<uint32_t> sparse;

  auto emissions = [&](size_t t, double* out) {
    if (tokens[t].is_separator) {
      out[0] = kNegInf;
      out[1] = kNegInf;
      out[2] = 0.0;
      return;
    }
    token_features(tokens, t, mask, &sparse);
    const float* dense = cache.get(tokens[t]);
    for (size_t k = 0; k < 3; k++) {
      const float* row = weights_.data() + k * width;
      double s = 0;
      for (uint32_t idx : sparse) s += row[idx];
      if (dense)
        for (size_t d = 0; d < dense_dim_; d++) s += static_cast<double>(row[hash_dim + d]) * dense[d];
      out[k] = s;
    }
  };

  // Tags order their scores as (B, I, O); candidates are tried O, B, I so
  // that a fully tied column decodes to O.
  static const size_t kPreference[3] = {2, 0, 1};
  std::vector<std::array<double, 3>> dp(n);
  std::vector<std::array<uint8_t, 3>> back(n);

  double emit[3];
  emissions(0, emit);
  dp[0] = {emit[0], kNegInf, emit[2]};  // a path never starts with I
  for (size_t t = 1; t < n; t++) {
    emissions(t, emit);
    for (size_t k = 0; k < 3; k++) {
      double best = kNegInf;
      size_t best_j = 2;
      for (size_t j : kPreference) {
        if (j == 2 && k == 1) continue;  // O -> I forbidden
        double s = dp[t - 1][j] + transitions_[j * 3 + k];
        if (s > best) {
          best = s;
          best_j = j;
        }
      }
      dp[t][k] = best + emit[k];
      back[t][k] = static_cast<uint8_t>(best_j);
    }
  }

  double best = kNegInf;
  size_t best_k = 2;
  for (size_t k : kPreference) {
    if (dp[n - 1][k] > best) {
      best = dp[n - 1][k];
      best_k = k;
    }
  }
  std::vector<BioTag> tags(n);
  for (size_t t = n; t-- > 0;) {
    tags[t] = static_cast<BioTag>(best_k);
    if (t > 0) best_k = back[t][best_k];
  }
  return tags;
}

std::vector<Mention> TaggerModel::decode(const Record& rec, const EmbeddingTable* emb) const {
  std::vector<Token> tokens = tokenize(rec.text, sep_);
  std::vector<BioTag> tags = viterbi_tags(tokens, emb);
  return mentions_from_tags(rec.id, tokens, tags);
}

std::string TaggerModel::serialize() const {
  ByteWriter w;
  w.raw("CCTG", 4);
  w.u32(kModelVersion);
  w.u64(template_hash());
  w.u64(emb_fingerprint_);
  w.u32(hash_bits_);
  w.u32(dense_dim_);
  w.u8(static_cast<uint8_t>(strategy_));
  w.u64(seed_);
  w.u32(epochs_);
  w.str(sep_.separators);
  w.u32(sep_.slash_min_run);
  w.u8(sep_.period_digit_guard ? 1 : 0);
  for (double v : transitions_) w.f64(v);

  size_t hash_dim = size_t(1) << hash_bits_;
  size_t width = hash_dim + dense_dim_;
  // Only touched hash buckets get stored; the space is mostly zeros.
  uint64_t nonzero = 0;
  for (size_t j = 0; j < hash_dim; j++) {
    if (weights_[j] != 0.0f || weights_[width + j] != 0.0f || weights_[2 * width + j] != 0.0f)
      nonzero++;
  }
  w.u64(nonzero);
  for (size_t j = 0; j < hash_dim; j++) {
    float b = weights_[j], i = weights_[width + j], o = weights_[2 * width + j];
    if (b == 0.0f && i == 0.0f && o == 0.0f) continue;
    w.u32(static_cast<uint32_t>(j));
    w.raw(&b, sizeof b);
    w.raw(&i, sizeof i);
    w.raw(&o, sizeof o);
  }
  for (size_t k = 0; k < 3; k++)
    w.raw(weights_.data() + k * width + hash_dim, dense_dim_ * sizeof(float));
  return w.out;
}

void TaggerModel::save(const std::string& path) const { write_file(path, serialize()); }

TaggerModel TaggerModel::load(const std::string& path) {
  std::string blob = read_file(path);
  ByteReader r{blob, 0, path};
  char magic[4];
  r.raw(magic, 4);
  if (std::string(magic, 4) != "CCTG") throw data_error(path + ": not a tagger model file");
  uint32_t version = r.u32();
  if (version != kModelVersion)
    throw data_error(path + ": unsupported tagger model version " + std::to_string(version));

  TaggerModel m;
  uint64_t stored_template = r.u64();
  m.emb_fingerprint_ = r.u64();
  m.hash_bits_ = r.u32();
  m.dense_dim_ = r.u32();
  uint8_t strategy = r.u8();
  if (strategy > 2) throw data_error(path + ": bad strategy byte");
  m.strategy_ = static_cast<TrainStrategy>(strategy);
  m.seed_ = r.u64();
  m.epochs_ = r.u32();
  m.sep_.separators = r.str();
  m.sep_.slash_min_run = r.u32();
  m.sep_.period_digit_guard = r.u8() != 0;
  if (m.hash_bits_ < 8 || m.hash_bits_ > 28) throw data_error(path + ": bad hash_bits");
  for (double& v : m.transitions_) v = r.f64();

  if (stored_template != m.template_hash())
    throw fingerprint_error(path + ": feature template mismatch (file " +
                            std::to_string(stored_template) + ", this build " +
                            std::to_string(m.template_hash()) + ")");

  size_t hash_dim = size_t(1) << m.hash_bits_;
  size_t width = hash_dim + m.dense_dim_;
  m.weights_.assign(3 * width, 0.0f);
  uint64_t nonzero = r.u64();
  for (uint64_t i = 0; i < nonzero; i++) {
    uint32_t j = r.u32();
    if (j >= hash_dim) throw data_error(path + ": bucket index out of range");
    float b, in, o;
    r.raw(&b, sizeof b);
    r.raw(&in, sizeof in);
    r.raw(&o, sizeof o);
    m.weights_[j] = b;
    m.weights_[width + j] = in;
    m.weights_[2 * width + j] = o;
  }
  for (size_t k = 0; k < 3; k++)
    r.raw(m.weights_.data() + k * width + hash_dim, m.dense_dim_ * sizeof(float));
  if (r.pos != blob.size()) throw data_error(path + ": trailing bytes");
  return m;
}

uint64_t TaggerModel::fingerprint() const {
  std::string blob = serialize();
  return fnv1a64(blob.data(), blob.size());
}

namespace {

// One encoded training instance with its precomputed features.
struct Instance {
  TaggedSequence seq;
  std::vector<std::vector<uint32_t>> sparse;
  std::vector<const float*> dense;
  bool has_separator = false;
};

Instance prepare_instance(const AnnotatedRecord& rec, const TaggerConfig& cfg, uint32_t mask,
                          DenseCache* cache) {
  Instance inst;
  inst.seq = encode_bio(rec, cfg);
  size_t n = inst.seq.tokens.size();
  inst.sparse.resize(n);
  inst.dense.resize(n, nullptr);
  for (size_t t = 0; t < n; t++) {
    token_features(inst.seq.tokens, t, mask, &inst.sparse[t]);
    inst.dense[t] = cache->get(inst.seq.tokens[t]);
    if (inst.seq.tokens[t].is_separator) inst.has_separator = true;
  }
  return inst;
}

// Remaps one record through a separator-dropped rewrite of its text.
AnnotatedRecord remap_record(const AnnotatedRecord& rec, const DropResult& dropped) {
  AnnotatedRecord out;
  out.record_id = rec.record_id;
  out.text = dropped.text;
  for (const SpanAnnotation& ann : rec.annotations) {
    SpanAnnotation moved = ann;
    if (dropped.map.map_span(ann.span, &moved.span)) out.annotations.push_back(std::move(moved));
  }
  for (const CharSpan& span : rec.unmatched) {
    CharSpan moved;
    if (dropped.map.map_span(span, &moved)) out.unmatched.push_back(moved);
  }
  return out;
}

void validate_tagger_config(const TaggerConfig& cfg) {
  if (cfg.epsilon_max < 0.0 || cfg.epsilon_max > 1.0)
    throw config_error("tagger: epsilon_max must be in [0, 1]");
  if (cfg.w_unmatched < 0.0 || cfg.w_unmatched > 1.0)
    throw config_error("tagger: w_unmatched must be in [0, 1]");
  if (cfg.augment_drop_p < 0.0 || cfg.augment_drop_p > 1.0)
    throw config_error("tagger: augment_drop_p must be in [0, 1]");
  if (cfg.lr <= 0.0) throw config_error("tagger: lr must be positive");
  if (cfg.epochs == 0) throw config_error("tagger: epochs must be at least 1");
  if (cfg.hash_bits < 8 || cfg.hash_bits > 28)
    throw config_error("tagger: hash_bits must be in [8, 28]");
}

}  // namespace

TaggerModel train_tagger(const std::vector<AnnotatedRecord>& weak,
                         const std::vector<AnnotatedRecord>& gold, TrainStrategy strategy,
                         const TaggerConfig& cfg, const EmbeddingTable* emb,
                         TaggerTrainReport* report) {
  validate_tagger_config(cfg);

  std::vector<const std::vector<AnnotatedRecord>*> phases;
  switch (strategy) {
    case TrainStrategy::weak_only:
      if (weak.empty()) throw data_error("train_tagger: weak dataset is empty");
      phases = {&weak};
      break;
    case TrainStrategy::supervised:
      if (gold.empty()) throw data_error("train_tagger: gold dataset is empty");
      phases = {&gold};
      break;
    case TrainStrategy::fine_tune:
      if (weak.empty() || gold.empty())
        throw data_error("train_tagger: fine_tune needs both a weak and a gold dataset");
      phases = {&weak, &gold};
      break;
  }

  TaggerModel model;
  model.sep_ = cfg.separators;
  model.hash_bits_ = cfg.hash_bits;
  model.dense_dim_ = emb ? emb->dim() : 0;
  model.emb_fingerprint_ = emb ? emb->fingerprint() : 0;
  model.strategy_ = strategy;
  model.seed_ = cfg.seed;
  model.epochs_ = cfg.epochs;

  uint32_t mask = (1u << cfg.hash_bits) - 1;
  size_t hash_dim = size_t(1) << cfg.hash_bits;
  size_t width = hash_dim + model.dense_dim_;
  model.weights_.assign(3 * width, 0.0f);
  float* wb = model.weights_.data();
  float* wi = model.weights_.data() + width;
  float* wo = model.weights_.data() + 2 * width;
  float* rows[3] = {wb, wi, wo};

  DenseCache cache{emb, {}};
  std::array<double, 9> counts = {};
  size_t total_epochs = phases.size() * cfg.epochs;
  size_t epoch_index = 0;
  Rng root(cfg.seed);

  if (report) {
    report->epoch_loss.clear();
    report->instances = 0;
    report->tokens = 0;
  }

  for (size_t p = 0; p < phases.size(); p++) {
    std::vector<Instance> originals;
    originals.reserve(phases[p]->size());
    for (const AnnotatedRecord& rec : *phases[p])
      originals.push_back(prepare_instance(rec, cfg, mask, &cache));
    if (report) {
      report->instances += originals.size();
      for (const Instance& inst : originals) report->tokens += inst.seq.tokens.size();
    }

    for (uint32_t e = 0; e < cfg.epochs; e++, epoch_index++) {
      double alpha =
          cfg.lr * std::max(0.05, 1.0 - static_cast<double>(epoch_index) / total_epochs);

      // Each epoch sees every original instance, plus one freshly dropped
      // copy of each instance that has an active separator.
      std::vector<Instance> augmented;
      if (cfg.augment_drop_p > 0.0) {
        Rng drop_rng = root.fork(0xd209 + epoch_index);
        for (size_t i = 0; i < originals.size(); i++) {
          if (!originals[i].has_separator) continue;
          const AnnotatedRecord& rec = (*phases[p])[i];
          DropResult dropped = drop_separators(rec.text, cfg.separators, cfg.augment_drop_p, drop_rng);
          augmented.push_back(prepare_instance(remap_record(rec, dropped), cfg, mask, &cache));
        }
      }
      std::vector<const Instance*> todo;
      todo.reserve(originals.size() + augmented.size());
      for (const Instance& inst : originals) todo.push_back(&inst);
      for (const Instance& inst : augmented) todo.push_back(&inst);
      Rng order_rng = root.fork(0x0d5e + epoch_index);
      shuffle(todo, order_rng);

      double loss_sum = 0, weight_sum = 0;
      for (const Instance* inst : todo) {
        const TaggedSequence& seq = inst->seq;
        for (size_t t = 0; t < seq.tokens.size(); t++) {
          double w = seq.weights[t];
          if (t > 0)
            counts[static_cast<size_t>(seq.tags[t - 1]) * 3 + static_cast<size_t>(seq.tags[t])] += w;
          if (w == 0.0) continue;

          double s[3];
          for (size_t k = 0; k < 3; k++) {
            const float* row = rows[k];
            double acc = 0;
            for (uint32_t idx : inst->sparse[t]) acc += row[idx];
            if (inst->dense[t])
              for (size_t d = 0; d < model.dense_dim_; d++)
                acc += static_cast<double>(row[hash_dim + d]) * inst->dense[t][d];
            s[k] = acc;
          }
          double mx = std::max(s[0], std::max(s[1], s[2]));
          double e0 = std::exp(s[0] - mx), e1 = std::exp(s[1] - mx), e2 = std::exp(s[2] - mx);
          double z = e0 + e1 + e2;
          double prob[3] = {e0 / z, e1 / z, e2 / z};

          std::array<double, 3> q;
          if (cfg.hard_labels) {
            q = {0, 0, 0};
            q[static_cast<size_t>(seq.tags[t])] = 1.0;
          } else {
            q = smooth_targets(seq.tags[t], w, cfg.epsilon_max);
          }

          double ce = 0;
          for (size_t k = 0; k < 3; k++) ce -= q[k] * std::log(std::max(prob[k], 1e-12));
          loss_sum += w * ce;
          weight_sum += w;

          for (size_t k = 0; k < 3; k++) {
            double g = alpha * w * (prob[k] - q[k]);
            if (g == 0.0) continue;
            float* row = rows[k];
            for (uint32_t idx : inst->sparse[t]) row[idx] -= static_cast<float>(g);
            if (inst->dense[t])
              for (size_t d = 0; d < model.dense_dim_; d++)
                row[hash_dim + d] -= static_cast<float>(g * inst->dense[t][d]);
          }
        }
      }
      if (report) report->epoch_loss.push_back(weight_sum > 0 ? loss_sum / weight_sum : 0.0);
    }
  }

  // Transition scores: log-probability deviation from uniform, with add-one
  // smoothing. No observed transitions (or all-zero weights) leaves them at
  // exactly zero.
  for (size_t a = 0; a < 3; a++) {
    double rowsum = counts[a * 3] + counts[a * 3 + 1] + counts[a * 3 + 2];
    for (size_t b = 0; b < 3; b++) {
      model.transitions_[a * 3 + b] =
          std::log((counts[a * 3 + b] + 1.0) / (rowsum + 3.0)) - std::log(1.0 / 3.0);
    }
  }
  return model;
}

std::vector<Mention> refine_with_matcher(const std::vector<Mention>& mentions, const Record& rec,
                                         const Ontology& ont, const MatchConfig& cfg,
                                         RefineMode mode) {
  StageSet stages;
  stages.exact = true;
  stages.approx = mode == RefineMode::exact_approx;
  stages.embedding = false;
  ChunkMatcher matcher(ont, cfg, stages, nullptr);
  std::vector<Mention> kept;
  for (const Mention& m : mentions) {
    std::string text = rec.text.substr(m.span.start, m.span.end - m.span.start);
    if (matcher.match(text)) kept.push_back(m);
  }
  return kept;
}

}  // namespace cclink
