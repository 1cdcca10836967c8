#include "cclink/config.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <sstream>

namespace cclink {

namespace {

std::string trim(const std::string& s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) b++;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) e--;
  return s.substr(b, e - b);
}

uint64_t parse_u64(const std::string& key, const std::string& value) {
  size_t used = 0;
  uint64_t out = 0;
  try {
    out = std::stoull(value, &used);
  } catch (const std::exception&) {
    used = std::string::npos;
  }
  if (used != value.size() || value.empty() || value[0] == '-')
    throw config_error(key + ": expected a non-negative integer, got \"" + value + "\"");
  return out;
}

double parse_real(const std::string& key, const std::string& value) {
  size_t used = 0;
  double out = 0;
  try {
    out = std::stod(value, &used);
  } catch (const std::exception&) {
    used = std::string::npos;
  }
  if (used != value.size() || value.empty())
    throw config_error(key + ": expected a number, got \"" + value + "\"");
  return out;
}

double parse_rate(const std::string& key, const std::string& value) {
  double out = parse_real(key, value);
  if (out < 0 || out > 1)
    throw config_error(key + ": expected a value in [0, 1], got " + value);
  return out;
}

bool parse_flag(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw config_error(key + ": expected true or false, got \"" + value + "\"");
}

std::vector<double> parse_real_list(const std::string& key, const std::string& value) {
  std::vector<double> out;
  if (trim(value).empty()) return out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_real(key, trim(item)));
  return out;
}

std::string format_real(double v) {
  std::ostringstream ss;
  ss << v;
  return ss.str();
}

std::string format_real_list(const std::vector<double>& vs) {
  std::string out;
  for (size_t i = 0; i < vs.size(); i++) out += (i ? "," : "") + format_real(vs[i]);
  return out;
}

std::vector<std::string> parse_word_list(const std::string& key, const std::string& value) {
  std::vector<std::string> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::string word = trim(item);
    if (word.empty()) throw config_error(key + ": empty entry in list");
    out.push_back(word);
  }
  return out;
}

std::string format_word_list(const std::vector<std::string>& ws) {
  std::string out;
  for (size_t i = 0; i < ws.size(); i++) out += (i ? "," : "") + ws[i];
  return out;
}

void check_separator_chars(const std::string& key, const std::string& value) {
  if (value.empty()) throw config_error(key + ": separator set must not be empty");
  for (size_t i = 0; i < value.size(); i++) {
    unsigned char ch = static_cast<unsigned char>(value[i]);
    if (std::isalnum(ch) || std::isspace(ch) || ch >= 0x80)
      throw config_error(key + ": separators must be ASCII punctuation");
    if (value.find(value[i], i + 1) != std::string::npos)
      throw config_error(key + std::string(": duplicate separator '") + value[i] + "'");
  }
}

std::string stages_text(const StageSet& stages) {
  std::string out;
  if (stages.exact) out += "exact";
  if (stages.approx) out += std::string(out.empty() ? "" : ",") + "approx";
  if (stages.embedding) out += std::string(out.empty() ? "" : ",") + "embedding";
  return out;
}

void check_mode_name(const std::string& key, const std::string& value,
                     const std::vector<std::string>& allowed) {
  if (std::find(allowed.begin(), allowed.end(), value) != allowed.end()) return;
  std::string options;
  for (size_t i = 0; i < allowed.size(); i++) options += (i ? ", " : "") + allowed[i];
  throw config_error(key + ": expected one of " + options + ", got \"" + value + "\"");
}

struct KeyDef {
  const char* key;
  const char* doc;
  std::function<void(PipelineConfig&, const std::string&)> set;
  std::function<std::string(const PipelineConfig&)> get;
};

const std::vector<KeyDef>& key_table() {
  static const std::vector<KeyDef> table = {
      {"seed", "experiment seed; corpus generation derives from it",
       [](PipelineConfig& c, const std::string& v) { c.seed = parse_u64("seed", v); },
       [](const PipelineConfig& c) { return std::to_string(c.seed); }},
      {"work_dir", "artifact directory for the pipeline subcommand",
       [](PipelineConfig& c, const std::string& v) { c.work_dir = v; },
       [](const PipelineConfig& c) { return c.work_dir; }},

      {"separators.chars", "characters that can split records into chunks",
       [](PipelineConfig& c, const std::string& v) {
         check_separator_chars("separators.chars", v);
         c.separators.separators = v;
       },
       [](const PipelineConfig& c) { return c.separators.separators; }},
      {"separators.slash_min_run", "min word length on both sides for '/' to separate",
       [](PipelineConfig& c, const std::string& v) {
         c.separators.slash_min_run =
             static_cast<uint32_t>(parse_u64("separators.slash_min_run", v));
       },
       [](const PipelineConfig& c) { return std::to_string(c.separators.slash_min_run); }},
      {"separators.period_digit_guard", "treat digit.digit as a decimal point, not a separator",
       [](PipelineConfig& c, const std::string& v) {
         c.separators.period_digit_guard = parse_flag("separators.period_digit_guard", v);
       },
       [](const PipelineConfig& c) {
         return std::string(c.separators.period_digit_guard ? "true" : "false");
       }},

      {"match.tau_approx", "character-n-gram Jaccard threshold for the approx stage",
       [](PipelineConfig& c, const std::string& v) {
         c.match.tau_approx = parse_rate("match.tau_approx", v);
       },
       [](const PipelineConfig& c) { return format_real(c.match.tau_approx); }},
      {"match.tau_emb", "cosine threshold for the embedding stage",
       [](PipelineConfig& c, const std::string& v) {
         c.match.tau_emb = parse_rate("match.tau_emb", v);
       },
       [](const PipelineConfig& c) { return format_real(c.match.tau_emb); }},
      {"match.ngram_size", "character n-gram size for approximate matching",
       [](PipelineConfig& c, const std::string& v) {
         c.match.ngram_size = static_cast<uint32_t>(parse_u64("match.ngram_size", v));
       },
       [](const PipelineConfig& c) { return std::to_string(c.match.ngram_size); }},
      {"match.stages", "enabled matcher stages, comma-separated",
       [](PipelineConfig& c, const std::string& v) { c.stages = parse_stages(v); },
       [](const PipelineConfig& c) { return stages_text(c.stages); }},

      {"embedding.dim", "embedding dimensionality",
       [](PipelineConfig& c, const std::string& v) {
         c.embedding.dim = static_cast<uint32_t>(parse_u64("embedding.dim", v));
       },
       [](const PipelineConfig& c) { return std::to_string(c.embedding.dim); }},
      {"embedding.window", "context window for skip-gram pairs",
       [](PipelineConfig& c, const std::string& v) {
         c.embedding.window = static_cast<uint32_t>(parse_u64("embedding.window", v));
       },
       [](const PipelineConfig& c) { return std::to_string(c.embedding.window); }},
      {"embedding.epochs", "embedding training epochs",
       [](PipelineConfig& c, const std::string& v) {
         c.embedding.epochs = static_cast<uint32_t>(parse_u64("embedding.epochs", v));
       },
       [](const PipelineConfig& c) { return std::to_string(c.embedding.epochs); }},
      {"embedding.negatives", "negative samples per observed pair",
       [](PipelineConfig& c, const std::string& v) {
         c.embedding.negatives = static_cast<uint32_t>(parse_u64("embedding.negatives", v));
       },
       [](const PipelineConfig& c) { return std::to_string(c.embedding.negatives); }},
      {"embedding.min_count", "minimum word frequency kept in the vocabulary",
       [](PipelineConfig& c, const std::string& v) {
         c.embedding.min_count = static_cast<uint32_t>(parse_u64("embedding.min_count", v));
       },
       [](const PipelineConfig& c) { return std::to_string(c.embedding.min_count); }},
      {"embedding.subword_min", "smallest character n-gram length",
       [](PipelineConfig& c, const std::string& v) {
         c.embedding.subword_min = static_cast<uint32_t>(parse_u64("embedding.subword_min", v));
       },
       [](const PipelineConfig& c) { return std::to_string(c.embedding.subword_min); }},
      {"embedding.subword_max", "largest character n-gram length",
       [](PipelineConfig& c, const std::string& v) {
         c.embedding.subword_max = static_cast<uint32_t>(parse_u64("embedding.subword_max", v));
       },
       [](const PipelineConfig& c) { return std::to_string(c.embedding.subword_max); }},
      {"embedding.buckets", "hash buckets for character n-grams",
       [](PipelineConfig& c, const std::string& v) {
         c.embedding.bucket_count = parse_u64("embedding.buckets", v);
       },
       [](const PipelineConfig& c) { return std::to_string(c.embedding.bucket_count); }},
      {"embedding.lr", "embedding learning rate",
       [](PipelineConfig& c, const std::string& v) {
         c.embedding.lr = parse_real("embedding.lr", v);
       },
       [](const PipelineConfig& c) { return format_real(c.embedding.lr); }},
      {"embedding.subsample", "frequent-word subsampling threshold, 0 disables",
       [](PipelineConfig& c, const std::string& v) {
         c.embedding.subsample = parse_real("embedding.subsample", v);
       },
       [](const PipelineConfig& c) { return format_real(c.embedding.subsample); }},
      {"embedding.seed", "embedding training seed",
       [](PipelineConfig& c, const std::string& v) {
         c.embedding.seed = parse_u64("embedding.seed", v);
       },
       [](const PipelineConfig& c) { return std::to_string(c.embedding.seed); }},

      {"tagger.epsilon_max", "label smoothing cap",
       [](PipelineConfig& c, const std::string& v) {
         c.tagger.epsilon_max = parse_rate("tagger.epsilon_max", v);
       },
       [](const PipelineConfig& c) { return format_real(c.tagger.epsilon_max); }},
      {"tagger.w_unmatched", "loss weight for O tokens inside unmatched chunks",
       [](PipelineConfig& c, const std::string& v) {
         c.tagger.w_unmatched = parse_rate("tagger.w_unmatched", v);
       },
       [](const PipelineConfig& c) { return format_real(c.tagger.w_unmatched); }},
      {"tagger.hard_labels", "ablation: one-hot targets instead of smoothed ones",
       [](PipelineConfig& c, const std::string& v) {
         c.tagger.hard_labels = parse_flag("tagger.hard_labels", v);
       },
       [](const PipelineConfig& c) {
         return std::string(c.tagger.hard_labels ? "true" : "false");
       }},
      {"tagger.lr", "tagger learning rate",
       [](PipelineConfig& c, const std::string& v) { c.tagger.lr = parse_real("tagger.lr", v); },
       [](const PipelineConfig& c) { return format_real(c.tagger.lr); }},
      {"tagger.epochs", "tagger epochs per training phase",
       [](PipelineConfig& c, const std::string& v) {
         c.tagger.epochs = static_cast<uint32_t>(parse_u64("tagger.epochs", v));
       },
       [](const PipelineConfig& c) { return std::to_string(c.tagger.epochs); }},
      {"tagger.augment_drop", "probability of training on a separator-dropped copy",
       [](PipelineConfig& c, const std::string& v) {
         c.tagger.augment_drop_p = parse_rate("tagger.augment_drop", v);
       },
       [](const PipelineConfig& c) { return format_real(c.tagger.augment_drop_p); }},
      {"tagger.hash_bits", "log2 of the tagger feature space",
       [](PipelineConfig& c, const std::string& v) {
         c.tagger.hash_bits = static_cast<uint32_t>(parse_u64("tagger.hash_bits", v));
       },
       [](const PipelineConfig& c) { return std::to_string(c.tagger.hash_bits); }},
      {"tagger.seed", "tagger training seed",
       [](PipelineConfig& c, const std::string& v) { c.tagger.seed = parse_u64("tagger.seed", v); },
       [](const PipelineConfig& c) { return std::to_string(c.tagger.seed); }},
      {"tagger.strategy", "training strategy: weak, supervised, or finetune",
       [](PipelineConfig& c, const std::string& v) { c.strategy = train_strategy_from_name(v); },
       [](const PipelineConfig& c) { return std::string(train_strategy_name(c.strategy)); }},
      {"tagger.refine", "extraction filter: none, exact, or exact-approx",
       [](PipelineConfig& c, const std::string& v) {
         check_mode_name("tagger.refine", v, {"none", "exact", "exact-approx"});
         c.refine = v;
       },
       [](const PipelineConfig& c) { return c.refine; }},

      {"linker.window", "context tokens per side for linking features",
       [](PipelineConfig& c, const std::string& v) {
         c.linker.context_window = static_cast<uint32_t>(parse_u64("linker.window", v));
       },
       [](const PipelineConfig& c) { return std::to_string(c.linker.context_window); }},
      {"linker.ngram_min", "smallest mention character n-gram",
       [](PipelineConfig& c, const std::string& v) {
         c.linker.char_ngram_min = static_cast<uint32_t>(parse_u64("linker.ngram_min", v));
       },
       [](const PipelineConfig& c) { return std::to_string(c.linker.char_ngram_min); }},
      {"linker.ngram_max", "largest mention character n-gram",
       [](PipelineConfig& c, const std::string& v) {
         c.linker.char_ngram_max = static_cast<uint32_t>(parse_u64("linker.ngram_max", v));
       },
       [](const PipelineConfig& c) { return std::to_string(c.linker.char_ngram_max); }},
      {"linker.hash_bits", "log2 of the linker feature space",
       [](PipelineConfig& c, const std::string& v) {
         c.linker.hash_bits = static_cast<uint32_t>(parse_u64("linker.hash_bits", v));
       },
       [](const PipelineConfig& c) { return std::to_string(c.linker.hash_bits); }},
      {"linker.lr", "linker learning rate",
       [](PipelineConfig& c, const std::string& v) { c.linker.lr = parse_real("linker.lr", v); },
       [](const PipelineConfig& c) { return format_real(c.linker.lr); }},
      {"linker.epochs", "linker training epochs",
       [](PipelineConfig& c, const std::string& v) {
         c.linker.epochs = static_cast<uint32_t>(parse_u64("linker.epochs", v));
       },
       [](const PipelineConfig& c) { return std::to_string(c.linker.epochs); }},
      {"linker.seed", "linker training seed",
       [](PipelineConfig& c, const std::string& v) { c.linker.seed = parse_u64("linker.seed", v); },
       [](const PipelineConfig& c) { return std::to_string(c.linker.seed); }},
      {"link.mode", "linking mode: ensemble, model, or exact",
       [](PipelineConfig& c, const std::string& v) {
         check_mode_name("link.mode", v, {"ensemble", "model", "exact"});
         c.link_mode = v;
       },
       [](const PipelineConfig& c) { return c.link_mode; }},

      {"synth.concepts", "generated ontology size before merging",
       [](PipelineConfig& c, const std::string& v) {
         c.ontology.concepts = static_cast<uint32_t>(parse_u64("synth.concepts", v));
       },
       [](const PipelineConfig& c) { return std::to_string(c.ontology.concepts); }},
      {"synth.children", "generated concepts folded into parents by the merge",
       [](PipelineConfig& c, const std::string& v) {
         c.ontology.children = static_cast<uint32_t>(parse_u64("synth.children", v));
       },
       [](const PipelineConfig& c) { return std::to_string(c.ontology.children); }},
      {"synth.synonyms_min", "minimum sampled synonym variants per concept",
       [](PipelineConfig& c, const std::string& v) {
         c.ontology.synonyms_min = static_cast<uint32_t>(parse_u64("synth.synonyms_min", v));
       },
       [](const PipelineConfig& c) { return std::to_string(c.ontology.synonyms_min); }},
      {"synth.synonyms_max", "maximum sampled synonym variants per concept",
       [](PipelineConfig& c, const std::string& v) {
         c.ontology.synonyms_max = static_cast<uint32_t>(parse_u64("synth.synonyms_max", v));
       },
       [](const PipelineConfig& c) { return std::to_string(c.ontology.synonyms_max); }},
      {"synth.ontology_seed", "ontology generation seed",
       [](PipelineConfig& c, const std::string& v) {
         c.ontology.seed = parse_u64("synth.ontology_seed", v);
       },
       [](const PipelineConfig& c) { return std::to_string(c.ontology.seed); }},
      {"synth.train_records", "generated training corpus size",
       [](PipelineConfig& c, const std::string& v) {
         c.train_records = parse_u64("synth.train_records", v);
       },
       [](const PipelineConfig& c) { return std::to_string(c.train_records); }},
      {"synth.gold_records", "generated held-out gold corpus size",
       [](PipelineConfig& c, const std::string& v) {
         c.gold_records = parse_u64("synth.gold_records", v);
       },
       [](const PipelineConfig& c) { return std::to_string(c.gold_records); }},
      {"synth.typo_rate", "per-character edit probability",
       [](PipelineConfig& c, const std::string& v) {
         c.noise.typo_rate = parse_rate("synth.typo_rate", v);
       },
       [](const PipelineConfig& c) { return format_real(c.noise.typo_rate); }},
      {"synth.no_punct_prob", "probability a record loses all separators",
       [](PipelineConfig& c, const std::string& v) {
         c.noise.no_punct_prob = parse_rate("synth.no_punct_prob", v);
       },
       [](const PipelineConfig& c) { return format_real(c.noise.no_punct_prob); }},
      {"synth.filler_rate", "probability of a filler token next to an entity",
       [](PipelineConfig& c, const std::string& v) {
         c.noise.filler_rate = parse_rate("synth.filler_rate", v);
       },
       [](const PipelineConfig& c) { return format_real(c.noise.filler_rate); }},
      {"synth.fillers", "filler vocabulary, comma-separated",
       [](PipelineConfig& c, const std::string& v) {
         c.noise.filler_vocab = parse_word_list("synth.fillers", v);
       },
       [](const PipelineConfig& c) { return format_word_list(c.noise.filler_vocab); }},
      {"synth.inflect_rate", "probability of plural-style inflection",
       [](PipelineConfig& c, const std::string& v) {
         c.noise.inflect_rate = parse_rate("synth.inflect_rate", v);
       },
       [](const PipelineConfig& c) { return format_real(c.noise.inflect_rate); }},
      {"synth.abbrev_rate", "probability of swapping in an unlisted shorthand",
       [](PipelineConfig& c, const std::string& v) {
         c.noise.abbrev_rate = parse_rate("synth.abbrev_rate", v);
       },
       [](const PipelineConfig& c) { return format_real(c.noise.abbrev_rate); }},
      {"synth.abbrev_fraction", "fraction of concepts given a derived shorthand",
       [](PipelineConfig& c, const std::string& v) {
         c.abbrev_fraction = parse_rate("synth.abbrev_fraction", v);
       },
       [](const PipelineConfig& c) { return format_real(c.abbrev_fraction); }},
      {"synth.shared_token_rate", "probability of a moda/modb head construction",
       [](PipelineConfig& c, const std::string& v) {
         c.noise.shared_token_rate = parse_rate("synth.shared_token_rate", v);
       },
       [](const PipelineConfig& c) { return format_real(c.noise.shared_token_rate); }},
      {"synth.entity_weights", "weights for 1,2,3,... entities per record",
       [](PipelineConfig& c, const std::string& v) {
         c.noise.entities_per_record = parse_real_list("synth.entity_weights", v);
       },
       [](const PipelineConfig& c) { return format_real_list(c.noise.entities_per_record); }},
      {"synth.synonym_weights", "sampling weights over a concept's synonym list",
       [](PipelineConfig& c, const std::string& v) {
         c.noise.synonym_sample = parse_real_list("synth.synonym_weights", v);
       },
       [](const PipelineConfig& c) { return format_real_list(c.noise.synonym_sample); }},
  };
  return table;
}

}  // namespace

void set_config_key(PipelineConfig& cfg, const std::string& key, const std::string& value) {
  for (const KeyDef& def : key_table()) {
    if (key == def.key) {
      def.set(cfg, value);
      return;
    }
  }
  throw config_error("unknown config key \"" + key + "\"");
}

PipelineConfig load_pipeline_config(const std::string& path) {
  std::string content = read_file(path);
  PipelineConfig cfg;
  size_t pos = 0;
  size_t line_no = 0;
  while (pos <= content.size()) {
    size_t eol = content.find('\n', pos);
    if (eol == std::string::npos) eol = content.size();
    std::string line = trim(content.substr(pos, eol - pos));
    pos = eol + 1;
    line_no++;
    if (line.empty() || line[0] == '#') continue;
    size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw config_error(path + ":" + std::to_string(line_no) + ": expected key = value");
    try {
      set_config_key(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const Error& e) {
      throw Error(e.kind(), path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return cfg;
}

std::string dump_pipeline_config(const PipelineConfig& cfg) {
  std::string out;
  for (const KeyDef& def : key_table()) {
    out += std::string("# ") + def.doc + "\n";
    out += std::string(def.key) + " = " + def.get(cfg) + "\n";
  }
  return out;
}

}  // namespace cclink
