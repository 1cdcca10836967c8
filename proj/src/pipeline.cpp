#include "cclink/pipeline.hpp"

#include <chrono>
#include <filesystem>

#include <json.hpp>

#include "cclink/linker.hpp"
#include "cclink/synthcorpus.hpp"
#include "cclink/tagger.hpp"

namespace cclink {

using nlohmann::json;

namespace {

json diag_json(const MatchDiagnostics& diag) {
  json obj;
  obj["chunks"] = diag.chunks;
  obj["exact_hits"] = diag.exact_hits;
  obj["approx_hits"] = diag.approx_hits;
  obj["embedding_hits"] = diag.embedding_hits;
  obj["unmatched"] = diag.unmatched;
  obj["zero_vector_chunks"] = diag.zero_vector_chunks;
  return obj;
}

class StageClock {
 public:
  explicit StageClock(PipelineResult* result) : result_(result) {}

  void lap(const std::string& name) {
    auto now = std::chrono::steady_clock::now();
    result_->timings.emplace_back(name, std::chrono::duration<double>(now - mark_).count());
    mark_ = now;
  }

 private:
  PipelineResult* result_;
  std::chrono::steady_clock::time_point mark_ = std::chrono::steady_clock::now();
};

}  // namespace

PipelineResult run_pipeline(const PipelineConfig& cfg, uint32_t workers) {
  PipelineResult result;
  result.work_dir = cfg.work_dir;
  std::filesystem::create_directories(cfg.work_dir);
  auto path_of = [&](const std::string& name) {
    std::string p = cfg.work_dir + "/" + name;
    result.artifacts.emplace_back(name, p);
    return p;
  };
  StageClock clock(&result);

  // Ontology: generate the full forest, then fold children into parents so
  // shorthand coined for a specialization resolves to the parent concept.
  Ontology full = generate_ontology(cfg.ontology);
  full.save(path_of("ontology_full.jsonl"));
  Ontology ont = full.merge_children(child_concept_ids(full));
  ont.save(path_of("ontology.jsonl"));
  result.concepts = ont.size();
  clock.lap("ontology");

  NoiseConfig noise = cfg.noise;
  noise.abbreviation_map = derive_abbreviations(ont, cfg.abbrev_fraction, cfg.seed + 7);
  SynthCorpus train = generate_corpus(ont, cfg.train_records, noise, cfg.seed, cfg.separators);
  SynthCorpus test = generate_corpus(ont, cfg.gold_records, noise, cfg.seed + 1, cfg.separators);
  write_corpus(path_of("train_corpus.jsonl"), train.corpus);
  write_annotated(path_of("train_gold.jsonl"), train.gold);
  write_corpus(path_of("test_corpus.jsonl"), test.corpus);
  write_annotated(path_of("test_gold.jsonl"), test.gold);
  result.train_records = train.corpus.size();
  result.gold_records = test.corpus.size();
  clock.lap("corpus");

  EmbeddingTable emb = train_embeddings(train.corpus, cfg.embedding);
  emb.save(path_of("embeddings.bin"));
  clock.lap("embeddings");

  ChunkMatcher matcher(ont, cfg.match, cfg.stages, &emb);
  std::vector<AnnotatedRecord> weak =
      generate_weak_labels(train.corpus, matcher, cfg.separators, &result.weak_diag, workers);
  write_annotated(path_of("weak_train.jsonl"), weak);
  clock.lap("weaklabel");

  TaggerConfig tagger_cfg = cfg.tagger;
  tagger_cfg.separators = cfg.separators;
  static const std::vector<AnnotatedRecord> kNoGold;
  const std::vector<AnnotatedRecord>& tagger_gold =
      cfg.strategy == TrainStrategy::weak_only ? kNoGold : train.gold;
  TaggerModel tagger = train_tagger(weak, tagger_gold, cfg.strategy, tagger_cfg, &emb);
  tagger.save(path_of("tagger.bin"));
  clock.lap("train-tagger");

  LinkerConfig linker_cfg = cfg.linker;
  linker_cfg.separators = cfg.separators;
  LinkerModel linker = train_linker(weak, ont, linker_cfg, &emb);
  linker.save(path_of("linker.bin"));
  clock.lap("train-linker");

  std::vector<std::vector<Mention>> mentions(test.corpus.size());
  std::vector<AnnotatedRecord> pred_spans(test.corpus.size());
  for (size_t i = 0; i < test.corpus.size(); i++) {
    const Record& rec = test.corpus[i];
    mentions[i] = tagger.decode(rec, &emb);
    if (cfg.refine != "none")
      mentions[i] = refine_with_matcher(mentions[i], rec, ont, cfg.match,
                                        refine_mode_from_name(cfg.refine));
    AnnotatedRecord& pred = pred_spans[i];
    pred.record_id = rec.id;
    pred.text = rec.text;
    for (const Mention& m : mentions[i]) {
      SpanAnnotation ann;
      ann.span = m.span;
      pred.annotations.push_back(std::move(ann));
    }
  }
  write_annotated(path_of("pred_mentions.jsonl"), pred_spans);
  result.extraction = evaluate_records(test.gold, pred_spans);
  clock.lap("extract");

  std::vector<LinkedMention> linked;
  std::vector<AnnotatedRecord> pred_linked(test.corpus.size());
  for (size_t i = 0; i < test.corpus.size(); i++) {
    const Record& rec = test.corpus[i];
    AnnotatedRecord& pred = pred_linked[i];
    pred.record_id = rec.id;
    pred.text = rec.text;
    for (const Mention& m : mentions[i]) {
      LinkedMention lm;
      if (cfg.link_mode == "exact") {
        std::string text = rec.text.substr(m.span.start, m.span.end - m.span.start);
        const std::string* concept_id = ont.lookup_exact(text);
        if (!concept_id) continue;
        lm.record_id = rec.id;
        lm.span = m.span;
        lm.concept_id = *concept_id;
        lm.score = 1.0;
        lm.source = LinkedMention::Source::exact_match;
      } else if (cfg.link_mode == "model") {
        lm = linker.link(rec, m.span, &emb);
      } else {
        lm = link_ensemble(ont, linker, rec, m.span, &emb);
      }
      SpanAnnotation ann;
      ann.span = lm.span;
      ann.concept_id = lm.concept_id;
      ann.confidence = lm.score;
      pred.annotations.push_back(std::move(ann));
      linked.push_back(std::move(lm));
    }
  }
  write_linked(path_of("pred_linked.jsonl"), linked);
  result.linking = evaluate_records(test.gold, pred_linked);
  clock.lap("link");

  json report;
  report["extraction"] = json::parse(result.extraction.to_json());
  report["linking"] = json::parse(result.linking.to_json());
  report["weak"] = diag_json(result.weak_diag);
  write_file(path_of("report.json"), report.dump(2) + "\n");

  return result;
}

std::string PipelineResult::to_json() const {
  json obj;
  obj["work_dir"] = work_dir;
  obj["concepts"] = concepts;
  obj["train_records"] = train_records;
  obj["gold_records"] = gold_records;
  obj["weak"] = diag_json(weak_diag);
  obj["extraction"] = json::parse(extraction.to_json());
  obj["linking"] = json::parse(linking.to_json());
  json arts = json::object();
  for (const auto& [name, path] : artifacts) arts[name] = path;
  obj["artifacts"] = arts;
  json times = json::object();
  for (const auto& [name, seconds] : timings) times[name] = seconds;
  obj["timings"] = times;
  return obj.dump(2) + "\n";
}

}  // namespace cclink
