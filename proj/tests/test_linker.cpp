#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <string>
#include <vector>

#include "cclink/linker.hpp"
#include "cclink/rng.hpp"

using namespace cclink;

namespace {

std::string temp_path(const std::string& name) {
  return std::string("/tmp/cclink_linker_test_") + name;
}

AnnotatedRecord make_rec(const std::string& id, const std::string& text,
                         std::vector<SpanAnnotation> anns = {}) {
  AnnotatedRecord rec;
  rec.record_id = id;
  rec.text = text;
  rec.annotations = std::move(anns);
  return rec;
}

SpanAnnotation ann(uint32_t start, uint32_t end, const std::string& concept_id,
                   double confidence = 1.0) {
  SpanAnnotation a;
  a.span = {start, end};
  a.concept_id = concept_id;
  a.confidence = confidence;
  return a;
}

Ontology mini_ontology() {
  auto concept_of = [](const std::string& id, const std::string& canonical,
                       std::vector<std::string> synonyms = {}) {
    Concept c;
    c.id = id;
    c.canonical = canonical;
    c.synonyms = std::move(synonyms);
    return c;
  };
  return Ontology::from_concepts({
      concept_of("c01", "fever"),
      concept_of("c02", "chills"),
      concept_of("c03", "headache"),
      concept_of("c04", "nausea"),
      concept_of("c05", "vomiting", {"emesis"}),
      concept_of("c06", "cough"),
      concept_of("c07", "chest pain", {"cp"}),
      concept_of("c08", "back pain"),
      concept_of("c09", "dizziness", {"dizzy"}),
      concept_of("c10", "sore throat"),
  });
}

// Seeded corpus of separator-joined complaints where every gold span carries
// its concept id, which is what the linker trains on.
std::vector<AnnotatedRecord> generate_labeled(const Ontology& ont, size_t count, uint64_t seed,
                                              double filler_p) {
  std::vector<std::pair<std::string, std::string>> surfaces;
  for (const Concept& c : ont.concepts())
    for (const std::string& s : c.synonyms) surfaces.emplace_back(s, c.id);
  std::sort(surfaces.begin(), surfaces.end());

  const std::vector<std::string> prefixes = {"mild", "severe", "slight"};
  const std::vector<std::string> suffixes = {"x3", "today", "tonight"};
  const std::vector<std::string> joiners = {", ", "/", " & ", "; "};

  std::vector<AnnotatedRecord> out;
  Rng root(seed);
  for (size_t i = 0; i < count; i++) {
    Rng r = root.fork(i);
    AnnotatedRecord rec = make_rec("m" + std::to_string(i), "");
    std::string text;
    size_t k = 1 + r.next_below(3);
    for (size_t j = 0; j < k; j++) {
      if (j > 0) text += joiners[r.next_below(joiners.size())];
      if (r.next_bool(filler_p)) text += prefixes[r.next_below(prefixes.size())] + " ";
      size_t pick = r.next_below(surfaces.size());
      uint32_t start = static_cast<uint32_t>(text.size());
      text += surfaces[pick].first;
      uint32_t end = static_cast<uint32_t>(text.size());
      if (r.next_bool(filler_p * 0.5)) text += " " + suffixes[r.next_below(suffixes.size())];
      rec.annotations.push_back(ann(start, end, surfaces[pick].second));
    }
    rec.text = text;
    out.push_back(std::move(rec));
  }
  return out;
}

size_t count_correct(const LinkerModel& model, const std::vector<AnnotatedRecord>& data,
                     const EmbeddingTable* emb, size_t* total) {
  size_t correct = 0;
  *total = 0;
  for (const AnnotatedRecord& rec : data) {
    Record r{rec.record_id, rec.text};
    for (const SpanAnnotation& a : rec.annotations) {
      (*total)++;
      if (model.link(r, a.span, emb).concept_id == a.concept_id) correct++;
    }
  }
  return correct;
}

}  // namespace

TEST_CASE("featurize_mention splits feature groups") {
  LinkerConfig cfg;

  SUBCASE("mention, left, and right stay separate") {
    Record rec{"r1", "severe chest pain since am"};
    FeatureBundle b = featurize_mention(rec, {7, 17}, cfg);
    CHECK(b.mention_words == std::vector<std::string>{"chest", "pain"});
    CHECK(b.left_context == std::vector<std::string>{"severe@-1"});
    CHECK(b.right_context == std::vector<std::string>{"since@+1", "am@+2"});
    // "chest pain" has 9 + 8 + 7 character n-grams of sizes 2..4.
    CHECK(b.mention_char_ngrams.size() == 24);
    CHECK(b.mention_char_ngrams[0] == "ch");
    CHECK(std::count(b.mention_char_ngrams.begin(), b.mention_char_ngrams.end(), "st p") == 1);
  }

  SUBCASE("window zero disables context") {
    LinkerConfig bare = cfg;
    bare.context_window = 0;
    Record rec{"r1", "severe chest pain since am"};
    FeatureBundle b = featurize_mention(rec, {7, 17}, bare);
    CHECK(b.left_context.empty());
    CHECK(b.right_context.empty());
    CHECK(b.mention_words == std::vector<std::string>{"chest", "pain"});
  }

  SUBCASE("record edges truncate context") {
    Record rec{"r2", "chest pain since am"};
    FeatureBundle b = featurize_mention(rec, {0, 10}, cfg);
    CHECK(b.left_context.empty());
    CHECK(b.right_context == std::vector<std::string>{"since@+1", "am@+2"});
  }

  SUBCASE("active separators truncate context") {
    Record left_sep{"r3", "fever, chest pain since am"};
    FeatureBundle b = featurize_mention(left_sep, {7, 17}, cfg);
    CHECK(b.left_context.empty());
    CHECK(b.right_context == std::vector<std::string>{"since@+1", "am@+2"});

    Record right_sep{"r4", "severe chest pain, fever"};
    FeatureBundle c = featurize_mention(right_sep, {7, 17}, cfg);
    CHECK(c.left_context == std::vector<std::string>{"severe@-1"});
    CHECK(c.right_context.empty());
  }

  SUBCASE("context entries are ordered nearest first") {
    LinkerConfig wide = cfg;
    wide.context_window = 3;
    Record rec{"r5", "a b c chest pain"};
    FeatureBundle b = featurize_mention(rec, {6, 16}, wide);
    CHECK(b.left_context == std::vector<std::string>{"c@-1", "b@-2", "a@-3"});
  }

  SUBCASE("inactive slashes stay inside the mention") {
    Record rec{"r6", "n/v today"};
    FeatureBundle b = featurize_mention(rec, {0, 3}, cfg);
    CHECK(b.mention_words == std::vector<std::string>{"n", "v"});
    CHECK(b.mention_char_ngrams == std::vector<std::string>{"n/", "/v", "n/v"});
    CHECK(b.right_context == std::vector<std::string>{"today@+1"});
  }

  SUBCASE("bad spans are rejected") {
    Record rec{"r7", "chest pain"};
    CHECK_THROWS_AS(featurize_mention(rec, {3, 3}, cfg), Error);
    CHECK_THROWS_AS(featurize_mention(rec, {0, 99}, cfg), Error);
    CHECK_THROWS_AS(featurize_mention(rec, {5, 6}, cfg), Error);  // only the space
  }
}

TEST_CASE("zero-weight training leaves the model uniform") {
  Ontology ont = mini_ontology();
  LinkerConfig cfg;
  cfg.epochs = 4;

  std::vector<AnnotatedRecord> data_a = {
      make_rec("a1", "fever", {ann(0, 5, "c01", 0.0)}),
      make_rec("a2", "chills today", {ann(0, 6, "c02", 0.0)}),
  };
  std::vector<AnnotatedRecord> data_b = {
      make_rec("b1", "severe cough", {ann(7, 12, "c06", 0.0)}),
  };

  LinkerModel m_a = train_linker(data_a, ont, cfg, nullptr);
  CHECK(m_a.touched_buckets() == 0);
  CHECK(m_a.dense_weights().empty());

  // Every class scores identically, so the distribution is exactly uniform
  // and the argmax tie resolves to the smallest concept id.
  Record probe{"p", "fever"};
  std::vector<double> dist = m_a.class_distribution(probe, {0, 5}, nullptr);
  REQUIRE(dist.size() == 10);
  for (double p : dist) CHECK(p == 1.0 / 10);
  LinkedMention best = m_a.link(probe, {0, 5}, nullptr);
  CHECK(best.concept_id == "c01");
  CHECK(best.score == 1.0 / 10);
  CHECK(best.source == LinkedMention::Source::model);

  // Weightless runs never touch a parameter, so two of them agree byte for
  // byte no matter what the examples were.
  LinkerModel m_b = train_linker(data_b, ont, cfg, nullptr);
  CHECK(m_a.fingerprint() == m_b.fingerprint());

  std::vector<Record> emb_corpus = {{"e1", "fever chills cough"}};
  EmbeddingConfig ecfg;
  ecfg.dim = 8;
  ecfg.epochs = 1;
  EmbeddingTable emb = train_embeddings(emb_corpus, ecfg);
  LinkerModel m_e = train_linker(data_a, ont, cfg, &emb);
  CHECK(m_e.touched_buckets() == 0);
  for (float v : m_e.dense_weights()) CHECK(v == 0.0f);
}

TEST_CASE("training separates surface forms") {
  Ontology ont = mini_ontology();
  std::vector<AnnotatedRecord> data = generate_labeled(ont, 150, 5, 0.3);
  LinkerConfig cfg;

  LinkerTrainReport report;
  LinkerModel model = train_linker(data, ont, cfg, nullptr, &report);

  size_t total = 0;
  size_t correct = count_correct(model, data, nullptr, &total);
  CHECK(total == report.examples);
  CHECK(static_cast<double>(correct) / total >= 0.95);

  CHECK(report.epoch_loss.size() == cfg.epochs);
  CHECK(report.epoch_loss.back() < report.epoch_loss.front());
  for (double loss : report.epoch_loss) CHECK(loss > 0.0);

  // Probabilities stay a proper distribution, including mass on classes the
  // prediction rejects.
  Record probe{"p", data[0].text};
  std::vector<double> dist = model.class_distribution(probe, data[0].annotations[0].span, nullptr);
  double sum = 0;
  for (double p : dist) {
    CHECK(p > 0.0);
    sum += p;
  }
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("classes never seen in training keep nonzero probability") {
  Ontology ont = mini_ontology();
  std::vector<AnnotatedRecord> data;
  for (int i = 0; i < 8; i++)
    data.push_back(make_rec("r" + std::to_string(i), "fever", {ann(0, 5, "c01")}));

  LinkerConfig cfg;
  LinkerModel model = train_linker(data, ont, cfg, nullptr);
  Record probe{"p", "fever"};
  std::vector<double> dist = model.class_distribution(probe, {0, 5}, nullptr);
  size_t c05 = 4;  // classes() is sorted, c05 sits at index 4
  REQUIRE(model.classes()[c05] == "c05");
  CHECK(dist[c05] > 0.0);
  CHECK(model.link(probe, {0, 5}, nullptr).concept_id == "c01");
}

TEST_CASE("directional context disambiguates identical mentions") {
  Ontology ont = mini_ontology();
  std::vector<AnnotatedRecord> data;
  for (int i = 0; i < 10; i++) {
    data.push_back(make_rec("cp" + std::to_string(i), "chest pain", {ann(6, 10, "c07")}));
    data.push_back(make_rec("bp" + std::to_string(i), "back pain", {ann(5, 9, "c08")}));
  }

  LinkerConfig cfg;
  LinkerModel full = train_linker(data, ont, cfg, nullptr);
  LinkerConfig blind = cfg;
  blind.context_window = 0;
  LinkerModel ablated = train_linker(data, ont, blind, nullptr);

  Record chest{"p1", "chest pain"};
  Record back{"p2", "back pain"};
  size_t full_correct = (full.link(chest, {6, 10}, nullptr).concept_id == "c07") +
                        (full.link(back, {5, 9}, nullptr).concept_id == "c08");
  size_t ablated_correct = (ablated.link(chest, {6, 10}, nullptr).concept_id == "c07") +
                           (ablated.link(back, {5, 9}, nullptr).concept_id == "c08");

  // Without context the two probes featurize identically, so exactly one of
  // the two conflicting labels can win.
  CHECK(full_correct == 2);
  CHECK(ablated_correct == 1);
}

TEST_CASE("training is deterministic per seed") {
  Ontology ont = mini_ontology();
  std::vector<AnnotatedRecord> data = generate_labeled(ont, 60, 17, 0.3);
  LinkerConfig cfg;
  cfg.epochs = 4;

  LinkerModel a = train_linker(data, ont, cfg, nullptr);
  LinkerModel b = train_linker(data, ont, cfg, nullptr);
  CHECK(a.fingerprint() == b.fingerprint());

  LinkerConfig other = cfg;
  other.seed = 2;
  LinkerModel c = train_linker(data, ont, other, nullptr);
  CHECK(a.fingerprint() != c.fingerprint());
}

TEST_CASE("model files round-trip and reject mismatches") {
  Ontology ont = mini_ontology();
  std::vector<AnnotatedRecord> data = generate_labeled(ont, 60, 23, 0.3);
  std::vector<Record> corpus;
  for (const AnnotatedRecord& rec : data) corpus.push_back({rec.record_id, rec.text});

  EmbeddingConfig ecfg;
  ecfg.dim = 16;
  ecfg.epochs = 2;
  EmbeddingTable emb = train_embeddings(corpus, ecfg);
  ecfg.seed = 9;
  EmbeddingTable other_emb = train_embeddings(corpus, ecfg);
  REQUIRE(emb.fingerprint() != other_emb.fingerprint());

  LinkerConfig cfg;
  cfg.epochs = 4;
  LinkerModel model = train_linker(data, ont, cfg, &emb);
  CHECK(model.ontology_fingerprint() == ont.fingerprint());
  CHECK(model.embedding_fingerprint() == emb.fingerprint());

  std::string path = temp_path("model.bin");
  model.save(path);
  LinkerModel back = LinkerModel::load(path);
  CHECK(back.fingerprint() == model.fingerprint());
  CHECK(back.classes() == model.classes());

  Record probe{"p", data[0].text};
  const CharSpan& span = data[0].annotations[0].span;
  LinkedMention orig = model.link(probe, span, &emb);
  LinkedMention reload = back.link(probe, span, &emb);
  CHECK(reload.concept_id == orig.concept_id);
  CHECK(reload.score == doctest::Approx(orig.score));

  // A model trained against one embedding table refuses every other one.
  CHECK_THROWS_AS(back.link(probe, span, &other_emb), Error);
  CHECK_THROWS_AS(back.link(probe, span, nullptr), Error);

  std::string blob = read_file(path);
  std::string tampered = blob;
  tampered[8] ^= 0x40;  // inside the feature template hash
  std::string bad_path = temp_path("tampered.bin");
  write_file(bad_path, tampered);
  try {
    LinkerModel::load(bad_path);
    FAIL("tampered template hash accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::fingerprint);
  }

  write_file(bad_path, blob.substr(0, blob.size() / 2));
  CHECK_THROWS_AS(LinkerModel::load(bad_path), Error);
  write_file(bad_path, blob + "x");
  CHECK_THROWS_AS(LinkerModel::load(bad_path), Error);
  std::remove(path.c_str());
  std::remove(bad_path.c_str());
}

TEST_CASE("exact synonym hits bypass the model") {
  Ontology ont = mini_ontology();
  std::vector<AnnotatedRecord> data = generate_labeled(ont, 150, 5, 0.3);
  LinkerConfig cfg;
  LinkerModel model = train_linker(data, ont, cfg, nullptr);

  // "cp" is a synonym, so the table answers before the model sees it.
  Record shorthand{"p1", "cp since am"};
  LinkedMention hit = link_ensemble(ont, model, shorthand, {0, 2}, nullptr);
  CHECK(hit.concept_id == "c07");
  CHECK(hit.score == 1.0);
  CHECK(hit.source == LinkedMention::Source::exact_match);

  // A typo misses the table and falls through to the model, which still
  // resolves it from shared character n-grams.
  Record typo{"p2", "fevr today"};
  LinkedMention miss = link_ensemble(ont, model, typo, {0, 4}, nullptr);
  CHECK(miss.source == LinkedMention::Source::model);
  CHECK(miss.concept_id == "c01");

  Ontology other = Ontology::from_concepts({{"x01", "fever", {}, ""}});
  try {
    link_ensemble(other, model, shorthand, {0, 2}, nullptr);
    FAIL("foreign ontology accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::fingerprint);
  }
}

TEST_CASE("invalid training input is rejected") {
  Ontology ont = mini_ontology();
  LinkerConfig cfg;

  CHECK_THROWS_AS(train_linker({}, ont, cfg, nullptr), Error);
  CHECK_THROWS_AS(train_linker({make_rec("r1", "fever")}, ont, cfg, nullptr), Error);
  CHECK_THROWS_AS(
      train_linker({make_rec("r1", "fever", {ann(0, 5, "")})}, ont, cfg, nullptr), Error);
  CHECK_THROWS_AS(
      train_linker({make_rec("r1", "fever", {ann(0, 5, "zz9")})}, ont, cfg, nullptr), Error);
  CHECK_THROWS_AS(
      train_linker({make_rec("r1", "fever", {ann(0, 5, "c01", 1.5)})}, ont, cfg, nullptr),
      Error);

  std::vector<AnnotatedRecord> ok = {make_rec("r1", "fever", {ann(0, 5, "c01")})};
  LinkerConfig bad = cfg;
  bad.char_ngram_min = 0;
  CHECK_THROWS_AS(train_linker(ok, ont, bad, nullptr), Error);
  bad = cfg;
  bad.char_ngram_min = 5;
  bad.char_ngram_max = 4;
  CHECK_THROWS_AS(train_linker(ok, ont, bad, nullptr), Error);
  bad = cfg;
  bad.hash_bits = 40;
  CHECK_THROWS_AS(train_linker(ok, ont, bad, nullptr), Error);
  bad = cfg;
  bad.lr = 0.0;
  CHECK_THROWS_AS(train_linker(ok, ont, bad, nullptr), Error);
  bad = cfg;
  bad.epochs = 0;
  CHECK_THROWS_AS(train_linker(ok, ont, bad, nullptr), Error);
}
