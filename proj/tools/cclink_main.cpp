// cclink: every pipeline stage as a subcommand over a shared config file.
// Each subcommand prints a JSON summary to stdout. Exit codes map error
// kinds (1 config, 2 data, 3 fingerprint mismatch) so scripts can tell a
// bad flag from a corrupted model file.
#include <chrono>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cclink/config.hpp"
#include "cclink/linker.hpp"
#include "cclink/pipeline.hpp"
#include "cclink/synthcorpus.hpp"
#include "cclink/tagger.hpp"

namespace {

using namespace cclink;
using nlohmann::json;

std::string hex64(uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string stages_name(const StageSet& s) {
  std::string out;
  auto add = [&](bool on, const char* name) {
    if (!on) return;
    if (!out.empty()) out += ',';
    out += name;
  };
  add(s.exact, "s1");
  add(s.approx, "s2");
  add(s.embedding, "s3");
  return out;
}

// One flag reseeds every stage; the offsets keep per-stage streams distinct.
void apply_seed(PipelineConfig& cfg, uint64_t seed) {
  cfg.seed = seed;
  cfg.embedding.seed = seed + 2;
  cfg.tagger.seed = seed + 3;
  cfg.linker.seed = seed + 4;
  cfg.ontology.seed = seed + 5;
}

class Timer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

int emit(json obj, const Timer& timer) {
  obj["seconds"] = timer.seconds();
  std::cout << obj.dump(2) << "\n";
  return 0;
}

std::optional<EmbeddingTable> load_embeddings(const std::string& path) {
  if (path.empty()) return std::nullopt;
  return EmbeddingTable::load(path);
}

size_t annotation_count(const std::vector<AnnotatedRecord>& records) {
  size_t n = 0;
  for (const auto& rec : records) n += rec.annotations.size();
  return n;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Weakly supervised entity extraction and linking over separator-delimited text"};
  app.require_subcommand(0, 1);

  std::string config_path;
  app.add_option("--config", config_path, "Config file (key = value lines)");
  std::vector<std::string> overrides;
  app.add_option("--set", overrides, "Override one config key, e.g. --set tagger.epochs=4");
  uint64_t seed = 0;
  auto* seed_opt = app.add_option("--seed", seed, "Master seed; reseeds every stage");
  uint32_t workers = 1;
  app.add_option("--workers", workers, "Worker threads for per-record stages");
  bool print_config = false;
  app.add_flag("--print-config", print_config, "Print the effective config and exit");

  auto* sc_ont = app.add_subcommand("synth-ontology", "Generate a synthetic concept forest");
  sc_ont->fallthrough();
  std::string ont_out;
  sc_ont->add_option("--out", ont_out, "Ontology JSONL to write")->required();

  auto* sc_merge = app.add_subcommand("merge-ontology", "Fold child concepts into their parents");
  sc_merge->fallthrough();
  std::string merge_in, merge_out;
  sc_merge->add_option("--in", merge_in, "Ontology JSONL to read")->required();
  sc_merge->add_option("--out", merge_out, "Merged ontology JSONL to write")->required();

  auto* sc_corpus = app.add_subcommand("synth-corpus", "Generate noisy records with gold spans");
  sc_corpus->fallthrough();
  std::string corpus_ont, corpus_out, corpus_gold;
  uint64_t corpus_records = 0;
  sc_corpus->add_option("--ontology", corpus_ont, "Merged ontology JSONL")->required();
  sc_corpus->add_option("--out-corpus", corpus_out, "Corpus JSONL to write")->required();
  sc_corpus->add_option("--out-gold", corpus_gold, "Gold annotation JSONL to write")->required();
  auto* corpus_records_opt =
      sc_corpus->add_option("--records", corpus_records, "Record count (default synth.train_records)");

  auto* sc_emb = app.add_subcommand("train-embeddings", "Train subword embeddings on a corpus");
  sc_emb->fallthrough();
  std::string emb_corpus, emb_out;
  sc_emb->add_option("--corpus", emb_corpus, "Corpus JSONL")->required();
  sc_emb->add_option("--out", emb_out, "Embedding table to write")->required();

  auto* sc_weak = app.add_subcommand("weaklabel", "Split records and match chunks to concepts");
  sc_weak->fallthrough();
  std::string weak_ont, weak_corpus, weak_emb, weak_out, weak_stages;
  sc_weak->add_option("--ontology", weak_ont, "Merged ontology JSONL")->required();
  sc_weak->add_option("--corpus", weak_corpus, "Corpus JSONL")->required();
  sc_weak->add_option("--embeddings", weak_emb, "Embedding table (required for stage s3)");
  sc_weak->add_option("--out", weak_out, "Weak annotation JSONL to write")->required();
  auto* weak_stages_opt =
      sc_weak->add_option("--stages", weak_stages, "Matcher stages, e.g. s1 or s1,s2,s3");

  auto* sc_tagger = app.add_subcommand("train-tagger", "Train the extraction tagger");
  sc_tagger->fallthrough();
  std::string tag_weak, tag_gold, tag_emb, tag_out, tag_strategy, tag_drop;
  sc_tagger->add_option("--weak", tag_weak, "Weak annotation JSONL")->required();
  sc_tagger->add_option("--gold", tag_gold, "Gold annotation JSONL (supervised/finetune)");
  sc_tagger->add_option("--embeddings", tag_emb, "Embedding table");
  sc_tagger->add_option("--out", tag_out, "Tagger model to write")->required();
  auto* tag_strategy_opt =
      sc_tagger->add_option("--strategy", tag_strategy, "weak | supervised | finetune");
  auto* tag_drop_opt =
      sc_tagger->add_option("--augment-drop", tag_drop, "Separator-drop augmentation probability");

  auto* sc_linker = app.add_subcommand("train-linker", "Train the concept linker");
  sc_linker->fallthrough();
  std::string lnk_weak, lnk_ont, lnk_emb, lnk_out;
  sc_linker->add_option("--weak", lnk_weak, "Weak annotation JSONL")->required();
  sc_linker->add_option("--ontology", lnk_ont, "Merged ontology JSONL")->required();
  sc_linker->add_option("--embeddings", lnk_emb, "Embedding table");
  sc_linker->add_option("--out", lnk_out, "Linker model to write")->required();

  auto* sc_extract = app.add_subcommand("extract", "Decode mention spans with a trained tagger");
  sc_extract->fallthrough();
  std::string ext_model, ext_corpus, ext_emb, ext_ont, ext_out, ext_mode;
  sc_extract->add_option("--model", ext_model, "Tagger model")->required();
  sc_extract->add_option("--corpus", ext_corpus, "Corpus JSONL")->required();
  sc_extract->add_option("--embeddings", ext_emb, "Embedding table");
  sc_extract->add_option("--ontology", ext_ont, "Merged ontology JSONL (refine modes)");
  sc_extract->add_option("--out", ext_out, "Mention JSONL to write")->required();
  auto* ext_mode_opt =
      sc_extract->add_option("--mode", ext_mode, "Refine mode: none | exact | exact-approx");

  auto* sc_link = app.add_subcommand("link", "Assign concepts to extracted mentions");
  sc_link->fallthrough();
  std::string link_model, link_corpus, link_mentions, link_ont, link_emb, link_out, link_mode;
  sc_link->add_option("--model", link_model, "Linker model")->required();
  sc_link->add_option("--corpus", link_corpus, "Corpus JSONL")->required();
  sc_link->add_option("--mentions", link_mentions, "Mention JSONL from extract")->required();
  sc_link->add_option("--ontology", link_ont, "Merged ontology JSONL (ensemble/exact modes)");
  sc_link->add_option("--embeddings", link_emb, "Embedding table");
  sc_link->add_option("--out", link_out, "Linked mention JSONL to write")->required();
  auto* link_mode_opt =
      sc_link->add_option("--mode", link_mode, "Linking mode: ensemble | model | exact");

  auto* sc_pipe = app.add_subcommand("pipeline", "Run generate, train, extract, link, evaluate");
  sc_pipe->fallthrough();
  std::string pipe_work, pipe_stages, pipe_strategy, pipe_mode, pipe_drop;
  auto* pipe_work_opt = sc_pipe->add_option("--work-dir", pipe_work, "Artifact directory");
  auto* pipe_stages_opt = sc_pipe->add_option("--stages", pipe_stages, "Matcher stages");
  auto* pipe_strategy_opt =
      sc_pipe->add_option("--strategy", pipe_strategy, "weak | supervised | finetune");
  auto* pipe_mode_opt = sc_pipe->add_option("--mode", pipe_mode, "Linking mode");
  auto* pipe_drop_opt =
      sc_pipe->add_option("--augment-drop", pipe_drop, "Separator-drop augmentation probability");

  auto* sc_eval = app.add_subcommand("evaluate", "Score predictions against gold annotations");
  sc_eval->fallthrough();
  std::string eval_gold, eval_pred;
  sc_eval->add_option("--gold", eval_gold, "Gold annotation JSONL")->required();
  sc_eval->add_option("--pred", eval_pred, "Prediction JSONL (annotated or linked)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    PipelineConfig cfg;
    if (!config_path.empty()) cfg = load_pipeline_config(config_path);
    for (const std::string& kv : overrides) {
      size_t eq = kv.find('=');
      if (eq == std::string::npos)
        throw config_error("--set expects key=value, got \"" + kv + "\"");
      set_config_key(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (seed_opt->count()) apply_seed(cfg, seed);
    if (weak_stages_opt->count()) set_config_key(cfg, "match.stages", weak_stages);
    if (tag_strategy_opt->count()) set_config_key(cfg, "tagger.strategy", tag_strategy);
    if (tag_drop_opt->count()) set_config_key(cfg, "tagger.augment_drop", tag_drop);
    if (ext_mode_opt->count()) set_config_key(cfg, "tagger.refine", ext_mode);
    if (link_mode_opt->count()) set_config_key(cfg, "link.mode", link_mode);
    if (pipe_work_opt->count()) set_config_key(cfg, "work_dir", pipe_work);
    if (pipe_stages_opt->count()) set_config_key(cfg, "match.stages", pipe_stages);
    if (pipe_strategy_opt->count()) set_config_key(cfg, "tagger.strategy", pipe_strategy);
    if (pipe_mode_opt->count()) set_config_key(cfg, "link.mode", pipe_mode);
    if (pipe_drop_opt->count()) set_config_key(cfg, "tagger.augment_drop", pipe_drop);

    if (print_config) {
      std::cout << dump_pipeline_config(cfg);
      return 0;
    }
    if (app.get_subcommands().empty()) {
      std::cerr << app.help();
      return 1;
    }

    if (*sc_ont) {
      Timer timer;
      Ontology ont = generate_ontology(cfg.ontology);
      ont.save(ont_out);
      return emit({{"command", "synth-ontology"},
                   {"concepts", ont.size()},
                   {"children", child_concept_ids(ont).size()},
                   {"path", ont_out}},
                  timer);
    }

    if (*sc_merge) {
      Timer timer;
      Ontology full = Ontology::load(merge_in);
      auto children = child_concept_ids(full);
      Ontology merged = full.merge_children(children);
      merged.save(merge_out);
      return emit({{"command", "merge-ontology"},
                   {"concepts_in", full.size()},
                   {"merged_children", children.size()},
                   {"concepts_out", merged.size()},
                   {"path", merge_out}},
                  timer);
    }

    if (*sc_corpus) {
      Timer timer;
      Ontology ont = Ontology::load(corpus_ont);
      NoiseConfig noise = cfg.noise;
      noise.abbreviation_map = derive_abbreviations(ont, cfg.abbrev_fraction, cfg.seed + 7);
      size_t n = corpus_records_opt->count() ? corpus_records : cfg.train_records;
      SynthCorpus synth = generate_corpus(ont, n, noise, cfg.seed, cfg.separators);
      write_corpus(corpus_out, synth.corpus);
      write_annotated(corpus_gold, synth.gold);
      return emit({{"command", "synth-corpus"},
                   {"records", synth.corpus.size()},
                   {"annotations", annotation_count(synth.gold)},
                   {"corpus", corpus_out},
                   {"gold", corpus_gold}},
                  timer);
    }

    if (*sc_emb) {
      Timer timer;
      std::vector<Record> corpus = read_corpus(emb_corpus);
      EmbeddingTable emb = train_embeddings(corpus, cfg.embedding);
      emb.save(emb_out);
      return emit({{"command", "train-embeddings"},
                   {"records", corpus.size()},
                   {"dim", emb.dim()},
                   {"fingerprint", hex64(emb.fingerprint())},
                   {"path", emb_out}},
                  timer);
    }

    if (*sc_weak) {
      Timer timer;
      Ontology ont = Ontology::load(weak_ont);
      std::vector<Record> corpus = read_corpus(weak_corpus);
      std::optional<EmbeddingTable> emb = load_embeddings(weak_emb);
      if (cfg.stages.embedding && !emb)
        throw config_error("stage s3 needs --embeddings");
      ChunkMatcher matcher(ont, cfg.match, cfg.stages, emb ? &*emb : nullptr);
      MatchDiagnostics diag;
      std::vector<AnnotatedRecord> weak =
          generate_weak_labels(corpus, matcher, cfg.separators, &diag, workers);
      write_annotated(weak_out, weak);
      return emit({{"command", "weaklabel"},
                   {"stages", stages_name(cfg.stages)},
                   {"records", weak.size()},
                   {"annotations", annotation_count(weak)},
                   {"chunks", diag.chunks},
                   {"exact_hits", diag.exact_hits},
                   {"approx_hits", diag.approx_hits},
                   {"embedding_hits", diag.embedding_hits},
                   {"unmatched", diag.unmatched},
                   {"zero_vector_chunks", diag.zero_vector_chunks},
                   {"path", weak_out}},
                  timer);
    }

    if (*sc_tagger) {
      Timer timer;
      std::vector<AnnotatedRecord> weak = read_annotated(tag_weak);
      std::vector<AnnotatedRecord> gold;
      if (!tag_gold.empty()) gold = read_annotated(tag_gold);
      std::optional<EmbeddingTable> emb = load_embeddings(tag_emb);
      TaggerConfig tagger_cfg = cfg.tagger;
      tagger_cfg.separators = cfg.separators;
      TaggerTrainReport report;
      TaggerModel model =
          train_tagger(weak, gold, cfg.strategy, tagger_cfg, emb ? &*emb : nullptr, &report);
      model.save(tag_out);
      return emit({{"command", "train-tagger"},
                   {"strategy", train_strategy_name(cfg.strategy)},
                   {"instances", report.instances},
                   {"tokens", report.tokens},
                   {"epochs", report.epoch_loss.size()},
                   {"final_loss", report.epoch_loss.empty() ? 0.0 : report.epoch_loss.back()},
                   {"fingerprint", hex64(model.fingerprint())},
                   {"path", tag_out}},
                  timer);
    }

    if (*sc_linker) {
      Timer timer;
      std::vector<AnnotatedRecord> weak = read_annotated(lnk_weak);
      Ontology ont = Ontology::load(lnk_ont);
      std::optional<EmbeddingTable> emb = load_embeddings(lnk_emb);
      LinkerConfig linker_cfg = cfg.linker;
      linker_cfg.separators = cfg.separators;
      LinkerTrainReport report;
      LinkerModel model = train_linker(weak, ont, linker_cfg, emb ? &*emb : nullptr, &report);
      model.save(lnk_out);
      return emit({{"command", "train-linker"},
                   {"examples", report.examples},
                   {"epochs", report.epoch_loss.size()},
                   {"final_loss", report.epoch_loss.empty() ? 0.0 : report.epoch_loss.back()},
                   {"fingerprint", hex64(model.fingerprint())},
                   {"path", lnk_out}},
                  timer);
    }

    if (*sc_extract) {
      Timer timer;
      TaggerModel model = TaggerModel::load(ext_model);
      std::vector<Record> corpus = read_corpus(ext_corpus);
      std::optional<EmbeddingTable> emb = load_embeddings(ext_emb);
      std::optional<Ontology> ont;
      if (cfg.refine != "none") {
        if (ext_ont.empty())
          throw config_error("refine mode \"" + cfg.refine + "\" needs --ontology");
        ont = Ontology::load(ext_ont);
      }
      std::vector<AnnotatedRecord> preds;
      preds.reserve(corpus.size());
      size_t mentions = 0;
      for (const Record& rec : corpus) {
        std::vector<Mention> found = model.decode(rec, emb ? &*emb : nullptr);
        if (ont)
          found = refine_with_matcher(found, rec, *ont, cfg.match,
                                      refine_mode_from_name(cfg.refine));
        AnnotatedRecord pred;
        pred.record_id = rec.id;
        pred.text = rec.text;
        for (const Mention& m : found) {
          SpanAnnotation ann;
          ann.span = m.span;
          pred.annotations.push_back(ann);
        }
        mentions += pred.annotations.size();
        preds.push_back(std::move(pred));
      }
      write_annotated(ext_out, preds);
      return emit({{"command", "extract"},
                   {"refine", cfg.refine},
                   {"records", corpus.size()},
                   {"mentions", mentions},
                   {"path", ext_out}},
                  timer);
    }

    if (*sc_link) {
      Timer timer;
      LinkerModel model = LinkerModel::load(link_model);
      std::vector<Record> corpus = read_corpus(link_corpus);
      std::vector<AnnotatedRecord> mention_recs = read_annotated(link_mentions);
      std::optional<EmbeddingTable> emb = load_embeddings(link_emb);
      std::optional<Ontology> ont;
      if (cfg.link_mode != "model") {
        if (link_ont.empty())
          throw config_error("link mode \"" + cfg.link_mode + "\" needs --ontology");
        ont = Ontology::load(link_ont);
      }
      std::unordered_map<std::string, const Record*> by_id;
      for (const Record& rec : corpus) by_id[rec.id] = &rec;
      std::vector<LinkedMention> linked;
      size_t mentions = 0, skipped = 0;
      for (const AnnotatedRecord& mrec : mention_recs) {
        auto it = by_id.find(mrec.record_id);
        if (it == by_id.end())
          throw data_error("mention record \"" + mrec.record_id + "\" is not in the corpus");
        const Record& rec = *it->second;
        for (const SpanAnnotation& ann : mrec.annotations) {
          mentions++;
          if (cfg.link_mode == "exact") {
            std::string text = rec.text.substr(ann.span.start, ann.span.end - ann.span.start);
            const std::string* concept_id = ont->lookup_exact(text);
            if (!concept_id) {
              skipped++;
              continue;
            }
            LinkedMention lm;
            lm.record_id = rec.id;
            lm.span = ann.span;
            lm.concept_id = *concept_id;
            lm.score = 1.0;
            lm.source = LinkedMention::Source::exact_match;
            linked.push_back(std::move(lm));
          } else if (cfg.link_mode == "model") {
            linked.push_back(model.link(rec, ann.span, emb ? &*emb : nullptr));
          } else {
            linked.push_back(link_ensemble(*ont, model, rec, ann.span, emb ? &*emb : nullptr));
          }
        }
      }
      write_linked(link_out, linked);
      return emit({{"command", "link"},
                   {"mode", cfg.link_mode},
                   {"mentions", mentions},
                   {"linked", linked.size()},
                   {"skipped", skipped},
                   {"path", link_out}},
                  timer);
    }

    if (*sc_pipe) {
      PipelineResult result = run_pipeline(cfg, workers);
      std::cout << result.to_json();
      return 0;
    }

    if (*sc_eval) {
      EvalReport report = evaluate_corpus(eval_gold, eval_pred);
      std::cout << report.to_json();
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(e.kind());
  }
  return 0;
}
