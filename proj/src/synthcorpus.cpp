#include "cclink/synthcorpus.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdio>
#include <unordered_set>

namespace cclink {

namespace {

bool is_ascii_alnum(char ch) {
  unsigned char u = static_cast<unsigned char>(ch);
  return std::isalnum(u) != 0;
}

// --- pronounceable word synthesis -----------------------------------------

const std::vector<std::string> kOnsets = {
    "b",  "d",  "f",  "g",  "h",  "k",  "l",  "m",  "n",  "p",
    "r",  "s",  "t",  "v",  "w",  "z",  "br", "dr", "fr", "gr",
    "kr", "pr", "tr", "st", "sp", "sk", "pl", "bl", "kl", "fl"};
const std::vector<std::string> kVowels = {"a", "e", "i", "o", "u", "ai", "ea", "io", "ou"};
const std::vector<std::string> kCodas = {"", "", "", "n", "r", "s", "l", "m", "x", "st", "nt"};

std::string make_word(Rng& rng, uint32_t min_syl, uint32_t max_syl) {
  uint32_t n = min_syl + static_cast<uint32_t>(rng.next_below(max_syl - min_syl + 1));
  std::string w;
  for (uint32_t i = 0; i < n; i++) {
    w += kOnsets[rng.next_below(kOnsets.size())];
    w += kVowels[rng.next_below(kVowels.size())];
  }
  w += kCodas[rng.next_below(kCodas.size())];
  return w;
}

std::string make_unique_word(Rng& rng, std::unordered_set<std::string>& used, uint32_t min_syl,
                             uint32_t max_syl) {
  for (int tries = 0; tries < 64; tries++) {
    std::string w = make_word(rng, min_syl, max_syl);
    if (used.insert(w).second) return w;
  }
  // The syllable space is far larger than any realistic pool, but stay
  // total: disambiguate with a numeric suffix.
  for (uint64_t n = 2;; n++) {
    std::string w = make_word(rng, min_syl, max_syl) + std::to_string(n);
    if (used.insert(w).second) return w;
  }
}

std::vector<std::string> words_of(const std::string& s) { return word_split(s); }

std::string initials_of(const std::vector<std::string>& words, const char* joiner) {
  std::string out;
  for (size_t i = 0; i < words.size(); i++) {
    if (i > 0) out += joiner;
    out += words[i][0];
  }
  return out;
}

std::string vowel_drop(const std::vector<std::string>& words) {
  std::string out;
  for (size_t i = 0; i < words.size(); i++) {
    if (i > 0) out += ' ';
    const std::string& w = words[i];
    out += w[0];
    for (size_t j = 1; j < w.size(); j++) {
      char ch = w[j];
      if (ch != 'a' && ch != 'e' && ch != 'i' && ch != 'o' && ch != 'u') out += ch;
    }
  }
  return out;
}

std::string fuse(const std::vector<std::string>& words) {
  std::string out;
  for (const std::string& w : words) out += w;
  return out;
}

std::string reorder(const std::vector<std::string>& words) {
  std::string out = words.back();
  for (size_t i = 0; i + 1 < words.size(); i++) out += ' ' + words[i];
  return out;
}

// --- keyboard adjacency for typo synthesis --------------------------------

const std::array<std::string, 4> kKeyRows = {"1234567890", "qwertyuiop", "asdfghjkl",
                                             "zxcvbnm"};

const std::array<std::string, 128>& adjacency_table() {
  static const std::array<std::string, 128> table = [] {
    std::array<std::string, 128> t{};
    for (size_t r = 0; r < kKeyRows.size(); r++) {
      const std::string& row = kKeyRows[r];
      for (size_t c = 0; c < row.size(); c++) {
        std::string& adj = t[static_cast<unsigned char>(row[c])];
        if (c > 0) adj += row[c - 1];
        if (c + 1 < row.size()) adj += row[c + 1];
        if (r > 0) adj += kKeyRows[r - 1][std::min(c, kKeyRows[r - 1].size() - 1)];
        if (r + 1 < kKeyRows.size()) adj += kKeyRows[r + 1][std::min(c, kKeyRows[r + 1].size() - 1)];
      }
    }
    return t;
  }();
  return table;
}

char adjacent_key(char ch, Rng& rng) {
  const std::string& adj = adjacency_table()[static_cast<unsigned char>(ch)];
  if (adj.empty()) return ch;
  return adj[rng.next_below(adj.size())];
}

// --- corpus assembly ------------------------------------------------------

void validate_rate(double v, const char* name) {
  if (v < 0.0 || v > 1.0)
    throw config_error(std::string("noise: ") + name + " must be in [0, 1]");
}

void validate_noise(const NoiseConfig& noise) {
  validate_rate(noise.typo_rate, "typo_rate");
  validate_rate(noise.abbrev_rate, "abbrev_rate");
  validate_rate(noise.no_punct_prob, "no_punct_prob");
  validate_rate(noise.filler_rate, "filler_rate");
  validate_rate(noise.inflect_rate, "inflect_rate");
  validate_rate(noise.shared_token_rate, "shared_token_rate");
  auto check_weights = [](const std::vector<double>& w, const char* name) {
    double total = 0;
    for (double v : w) {
      if (v < 0.0) throw config_error(std::string("noise: ") + name + " weights must be >= 0");
      total += v;
    }
    if (!w.empty() && total <= 0.0)
      throw config_error(std::string("noise: ") + name + " weights sum to zero");
  };
  check_weights(noise.entities_per_record, "entities_per_record");
  check_weights(noise.synonym_sample, "synonym_sample");
  if (noise.entities_per_record.empty())
    throw config_error("noise: entities_per_record must not be empty");
}

size_t sample_synonym(Rng& rng, size_t count, const std::vector<double>& weights) {
  if (count <= 1) return 0;
  if (weights.empty()) return rng.next_below(count);
  std::vector<double> w(count);
  for (size_t i = 0; i < count; i++) w[i] = weights[std::min(i, weights.size() - 1)];
  return rng.next_weighted(w.data(), w.size());
}

// Spacing that keeps the assembled record normalized: every variant leaves
// exactly one space between neighboring word characters.
std::string separator_rendering(char sep) {
  switch (sep) {
    case ',': return ", ";
    case ';': return "; ";
    case ':': return ": ";
    case '.': return ". ";
    case '?': return "? ";
    case '/': return "/";
    case '\\': return "\\";
    default: return std::string(" ") + sep + " ";
  }
}

double separator_weight(char sep) {
  switch (sep) {
    case ',': return 0.40;
    case ';': return 0.10;
    case '/': return 0.15;
    case '\\': return 0.02;
    case '+': return 0.06;
    case '&': return 0.08;
    case '|': return 0.03;
    case ':': return 0.05;
    case '.': return 0.08;
    case '?': return 0.03;
    default: return 0.05;
  }
}

// One rendered chunk-to-be with annotations in piece-local offsets.
struct Piece {
  std::string text;
  std::vector<SpanAnnotation> anns;
};

size_t edge_word_len(const std::string& text, bool front) {
  std::vector<std::string> words = words_of(text);
  if (words.empty()) return 0;
  return front ? words.front().size() : words.back().size();
}

char pick_separator(Rng& rng, const SeparatorConfig& sep_cfg, const std::string& prev,
                    const std::string& next) {
  const std::string& set = sep_cfg.separators;
  std::vector<double> w(set.size());
  for (size_t i = 0; i < set.size(); i++) w[i] = separator_weight(set[i]);
  char sep = set[rng.next_weighted(w.data(), w.size())];
  if (sep == '/' && (edge_word_len(prev, false) < sep_cfg.slash_min_run ||
                     edge_word_len(next, true) < sep_cfg.slash_min_run)) {
    // A slash here would not act as a separator; fall back to something
    // unconditional so zero-noise records always split cleanly.
    size_t alt = set.find(',');
    if (alt == std::string::npos)
      for (alt = 0; alt < set.size() && set[alt] == '/'; alt++) {}
    sep = alt < set.size() ? set[alt] : ',';
  }
  return sep;
}

}  // namespace

// --- ontology generation --------------------------------------------------

Ontology generate_ontology(const OntologySpec& spec) {
  if (spec.concepts < 1) throw config_error("ontology spec: need at least one concept");
  if (spec.children >= spec.concepts)
    throw config_error("ontology spec: children must be fewer than total concepts");
  if (spec.synonyms_min > spec.synonyms_max)
    throw config_error("ontology spec: synonyms_min exceeds synonyms_max");

  Rng root(spec.seed);
  Rng word_rng = root.fork(1);
  Rng struct_rng = root.fork(2);
  Rng syn_rng = root.fork(3);
  std::unordered_set<std::string> used;

  size_t n_heads = std::max<size_t>(8, spec.concepts / 12);
  std::vector<std::string> heads;
  heads.reserve(n_heads);
  for (size_t i = 0; i < n_heads; i++) heads.push_back(make_unique_word(word_rng, used, 1, 2));

  int width = std::max<int>(4, static_cast<int>(std::to_string(spec.concepts).size()));
  auto make_id = [width](uint32_t n) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "c%0*u", width, n);
    return std::string(buf);
  };

  uint32_t n_roots = spec.concepts - spec.children;
  std::vector<Concept> concepts;
  concepts.reserve(spec.concepts);

  for (uint32_t i = 0; i < spec.concepts; i++) {
    Concept c;
    c.id = make_id(i + 1);
    bool is_child = i >= n_roots;
    std::string head;
    if (is_child) {
      const Concept& parent = concepts[struct_rng.next_below(n_roots)];
      c.parent = parent.id;
      std::vector<std::string> pw = words_of(parent.canonical);
      head = pw.back();
    } else if (struct_rng.next_bool(0.8)) {
      head = heads[struct_rng.next_below(heads.size())];
    }

    if (head.empty()) {
      c.canonical = make_unique_word(word_rng, used, 2, 3);
    } else {
      for (int tries = 0;; tries++) {
        std::string mod = tries < 64 ? make_word(word_rng, 1, 3)
                                     : make_word(word_rng, 1, 3) + std::to_string(tries);
        std::string cand = mod + " " + head;
        if (used.insert(cand).second) {
          c.canonical = cand;
          break;
        }
      }
    }
    concepts.push_back(std::move(c));
  }

  // Second pass so no later canonical can race a synonym for its surface.
  for (Concept& c : concepts) {
    std::vector<std::string> words = words_of(c.canonical);
    std::vector<std::string> variants;
    if (words.size() >= 2) {
      variants.push_back(initials_of(words, ""));
      variants.push_back(initials_of(words, "/"));
      variants.push_back(fuse(words));
      variants.push_back(reorder(words));
    } else if (words[0].size() >= 4) {
      variants.push_back(words[0].substr(0, 3));
    }
    variants.push_back(vowel_drop(words));
    shuffle(variants, syn_rng);

    uint32_t want =
        spec.synonyms_min + static_cast<uint32_t>(syn_rng.next_below(
                                spec.synonyms_max - spec.synonyms_min + 1));
    for (const std::string& v : variants) {
      if (c.synonyms.size() >= want) break;
      if (v.empty() || v == c.canonical) continue;
      if (!used.insert(v).second) continue;
      c.synonyms.push_back(v);
    }
  }
  return Ontology::from_concepts(std::move(concepts));
}

std::vector<std::string> child_concept_ids(const Ontology& ont) {
  std::vector<std::string> out;
  for (const Concept& c : ont.concepts())
    if (!c.parent.empty()) out.push_back(c.id);
  return out;
}

// --- string corruption ----------------------------------------------------

std::string corrupt_string(const std::string& s, double typo_rate, Rng& rng) {
  if (s.empty()) throw data_error("corrupt_string: empty input");
  if (typo_rate < 0.0 || typo_rate > 1.0)
    throw config_error("corrupt_string: typo_rate must be in [0, 1]");

  std::string out;
  bool fired = false;
  size_t i = 0;
  while (i < s.size()) {
    char ch = s[i];
    if (!is_ascii_alnum(ch) || !rng.next_bool(typo_rate)) {
      out += ch;
      i++;
      continue;
    }
    uint64_t op = rng.next_below(4);
    if (op == 1 && i + 1 < s.size() && is_ascii_alnum(s[i + 1]) && s[i + 1] != ch) {
      out += s[i + 1];
      out += ch;
      i += 2;
    } else if (op == 2) {
      i++;
    } else if (op == 3) {
      out += ch;
      out += ch;
      i++;
    } else {  // substitute; also the fallback when a transpose has no partner
      out += adjacent_key(ch, rng);
      i++;
    }
    fired = true;
  }

  if (out.empty()) out = s.substr(0, 1);
  if (fired && out == s) {
    // Edits cancelled each other (a delete refilled by a duplicate); force
    // one visible substitution so a fired edit always leaves a trace.
    for (char& ch : out) {
      if (is_ascii_alnum(ch)) {
        ch = adjacent_key(ch, rng);
        break;
      }
    }
  }
  return out;
}

// --- corpus generation ----------------------------------------------------

SynthCorpus generate_corpus(const Ontology& ont, size_t n_records, const NoiseConfig& noise,
                            uint64_t seed, const SeparatorConfig& separators) {
  validate_noise(noise);
  if (ont.size() == 0) throw data_error("corpus generation needs a nonempty ontology");

  const std::vector<Concept>& cs = ont.concepts();

  // Concepts grouped by shared head word, for "moda/modb head" renderings.
  std::map<std::string, std::vector<size_t>> by_head;
  for (size_t i = 0; i < cs.size(); i++) {
    std::vector<std::string> words = words_of(cs[i].canonical);
    if (words.size() >= 2) by_head[words.back()].push_back(i);
  }
  std::vector<const std::vector<size_t>*> shared_heads;
  for (const auto& entry : by_head)
    if (entry.second.size() >= 2) shared_heads.push_back(&entry.second);

  auto render_entity = [&](Rng& r) {
    Piece piece;
    const Concept& c = cs[r.next_below(cs.size())];
    std::string surface = c.synonyms[sample_synonym(r, c.synonyms.size(), noise.synonym_sample)];
    if (r.next_bool(noise.abbrev_rate)) {
      auto it = noise.abbreviation_map.find(surface);
      if (it != noise.abbreviation_map.end()) surface = it->second;
    }
    if (r.next_bool(noise.inflect_rate)) surface += surface.back() == 's' ? "es" : "s";
    if (noise.typo_rate > 0) {
      std::string corrupted = normalize(corrupt_string(surface, noise.typo_rate, r));
      if (!corrupted.empty()) surface = corrupted;
    }

    if (!noise.filler_vocab.empty() && r.next_bool(noise.filler_rate))
      piece.text += noise.filler_vocab[r.next_below(noise.filler_vocab.size())] + " ";
    SpanAnnotation ann;
    ann.span.start = static_cast<uint32_t>(piece.text.size());
    piece.text += surface;
    ann.span.end = static_cast<uint32_t>(piece.text.size());
    ann.concept_id = c.id;
    piece.anns.push_back(std::move(ann));
    if (!noise.filler_vocab.empty() && r.next_bool(noise.filler_rate * 0.5))
      piece.text += " " + noise.filler_vocab[r.next_below(noise.filler_vocab.size())];
    return piece;
  };

  auto render_shared = [&](Rng& r) {
    const std::vector<size_t>& members = *shared_heads[r.next_below(shared_heads.size())];
    size_t ai = r.next_below(members.size());
    size_t bi = (ai + 1 + r.next_below(members.size() - 1)) % members.size();
    const Concept& a = cs[members[ai]];
    const Concept& b = cs[members[bi]];
    std::vector<std::string> a_words = words_of(a.canonical);
    std::string mod_a;
    for (size_t i = 0; i + 1 < a_words.size(); i++) mod_a += (i ? " " : "") + a_words[i];

    Piece piece;
    SpanAnnotation left;
    left.span = {0, static_cast<uint32_t>(mod_a.size())};
    left.concept_id = a.id;
    SpanAnnotation right;
    right.span = {static_cast<uint32_t>(mod_a.size() + 1),
                  static_cast<uint32_t>(mod_a.size() + 1 + b.canonical.size())};
    right.concept_id = b.id;
    piece.text = mod_a + "/" + b.canonical;
    piece.anns = {std::move(left), std::move(right)};
    return piece;
  };

  SynthCorpus out;
  out.corpus.reserve(n_records);
  out.gold.reserve(n_records);
  Rng root(seed);

  for (size_t rec_i = 0; rec_i < n_records; rec_i++) {
    Rng r = root.fork(rec_i);
    char idbuf[24];
    std::snprintf(idbuf, sizeof idbuf, "r%06zu", rec_i + 1);

    size_t k = 1 + r.next_weighted(noise.entities_per_record.data(),
                                   noise.entities_per_record.size());
    std::vector<Piece> pieces;
    for (size_t slot = 0; slot < k;) {
      if (slot + 1 < k && !shared_heads.empty() && r.next_bool(noise.shared_token_rate)) {
        pieces.push_back(render_shared(r));
        slot += 2;
      } else {
        pieces.push_back(render_entity(r));
        slot += 1;
      }
    }

    AnnotatedRecord gold;
    gold.record_id = idbuf;
    std::string text;
    for (size_t p = 0; p < pieces.size(); p++) {
      if (p > 0) {
        char sep = pick_separator(r, separators, pieces[p - 1].text, pieces[p].text);
        text += separator_rendering(sep);
      }
      uint32_t base = static_cast<uint32_t>(text.size());
      text += pieces[p].text;
      for (SpanAnnotation ann : pieces[p].anns) {
        ann.span.start += base;
        ann.span.end += base;
        gold.annotations.push_back(std::move(ann));
      }
    }

    if (r.next_bool(noise.no_punct_prob)) {
      DropResult dropped = drop_separators(text, separators, 1.0, r);
      for (SpanAnnotation& ann : gold.annotations) {
        CharSpan moved;
        if (!dropped.map.map_span(ann.span, &moved))
          throw data_error(std::string(idbuf) + ": gold span lost while dropping separators");
        ann.span = moved;
      }
      text = std::move(dropped.text);
    }

    gold.text = text;
    out.corpus.push_back({idbuf, text});
    out.gold.push_back(std::move(gold));
  }
  return out;
}

// --- derived shorthand ----------------------------------------------------

std::map<std::string, std::string> derive_abbreviations(const Ontology& ont, double fraction,
                                                        uint64_t seed) {
  validate_rate(fraction, "abbreviation fraction");
  std::map<std::string, std::string> out;
  Rng rng(seed);
  for (const Concept& c : ont.concepts()) {
    if (!rng.next_bool(fraction)) continue;
    std::vector<std::string> words = words_of(c.canonical);
    std::vector<std::string> candidates;
    if (words.size() >= 2) {
      candidates.push_back(initials_of(words, ""));
      candidates.push_back(initials_of(words, "/"));
    }
    candidates.push_back(vowel_drop(words));
    std::string pick = candidates[rng.next_below(candidates.size())];
    if (pick.empty() || pick == c.canonical || ont.lookup_exact(pick)) continue;
    out[c.canonical] = pick;
  }
  return out;
}

}  // namespace cclink
