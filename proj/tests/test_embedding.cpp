#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <string>
#include <vector>

#include "cclink/common.hpp"
#include "cclink/embedding.hpp"

using namespace cclink;

namespace {

// Two topic clusters with disjoint context words; enough repetition for the
// trainer to pull cluster members together.
std::vector<Record> cluster_corpus() {
  std::vector<Record> corpus;
  std::vector<std::string> gastro = {"belly", "tummy", "stomach"};
  std::vector<std::string> gastro_ctx = {"cramping badly", "upset since lunch", "bloated tonight"};
  std::vector<std::string> resp = {"wheeze", "breath", "lungs"};
  std::vector<std::string> resp_ctx = {"short gasping", "tight rattling", "strained coughing"};
  int n = 0;
  for (int round = 0; round < 40; round++) {
    for (const std::string& w : gastro)
      for (const std::string& ctx : gastro_ctx)
        corpus.push_back({"g" + std::to_string(n++), w + " " + ctx});
    for (const std::string& w : resp)
      for (const std::string& ctx : resp_ctx)
        corpus.push_back({"p" + std::to_string(n++), w + " " + ctx});
  }
  return corpus;
}

EmbeddingConfig small_config() {
  EmbeddingConfig cfg;
  cfg.dim = 24;
  cfg.epochs = 6;
  cfg.seed = 17;
  return cfg;
}

}  // namespace

TEST_CASE("training is deterministic per seed") {
  std::vector<Record> corpus = cluster_corpus();
  EmbeddingConfig cfg = small_config();
  EmbeddingTable a = train_embeddings(corpus, cfg);
  EmbeddingTable b = train_embeddings(corpus, cfg);
  CHECK(a.fingerprint() == b.fingerprint());

  cfg.seed = 18;
  EmbeddingTable c = train_embeddings(corpus, cfg);
  CHECK(a.fingerprint() != c.fingerprint());
}

TEST_CASE("training loss decreases across epochs") {
  std::vector<Record> corpus = cluster_corpus();
  EmbeddingConfig cfg = small_config();
  EmbeddingTrainReport report;
  train_embeddings(corpus, cfg, &report);
  REQUIRE(report.epoch_loss.size() == cfg.epochs);
  CHECK(report.epoch_loss.back() < report.epoch_loss.front());
  for (size_t e = 1; e < report.epoch_loss.size(); e++) {
    // Small stochastic wobble is fine; systematic increase is not.
    CHECK(report.epoch_loss[e] <= report.epoch_loss[e - 1] * 1.05);
  }
}

TEST_CASE("co-occurring words end up closer than cross-topic words") {
  EmbeddingTable emb = train_embeddings(cluster_corpus(), small_config());
  double same = cosine(emb.word_vector("belly"), emb.word_vector("tummy"));
  double cross = cosine(emb.word_vector("belly"), emb.word_vector("wheeze"));
  CHECK(same > cross);
  CHECK(same > 0.3);
}

TEST_CASE("save/load round-trips exactly") {
  EmbeddingTable emb = train_embeddings(cluster_corpus(), small_config());
  std::string path = "/tmp/cclink_emb_roundtrip.bin";
  emb.save(path);
  EmbeddingTable back = EmbeddingTable::load(path);
  CHECK(back.fingerprint() == emb.fingerprint());
  CHECK(back.dim() == emb.dim());
  CHECK(back.vocab_size() == emb.vocab_size());
  CHECK(back.word_vector("belly") == emb.word_vector("belly"));
  CHECK(back.word_vector("unseenish") == emb.word_vector("unseenish"));
  std::remove(path.c_str());
}

TEST_CASE("corrupt files are rejected") {
  std::string path = "/tmp/cclink_emb_corrupt.bin";
  write_file(path, "definitely not an embedding table");
  CHECK_THROWS_AS(EmbeddingTable::load(path), Error);
  std::remove(path.c_str());
}

TEST_CASE("phrase vectors are token means") {
  EmbeddingTable emb = train_embeddings(cluster_corpus(), small_config());
  std::vector<float> single = emb.phrase_vector(std::vector<std::string>{"belly"});
  CHECK(single == emb.word_vector("belly"));

  // Repeating every token leaves the mean unchanged.
  std::vector<float> once = emb.phrase_vector(std::vector<std::string>{"belly", "cramping"});
  std::vector<float> twice =
      emb.phrase_vector(std::vector<std::string>{"belly", "cramping", "belly", "cramping"});
  REQUIRE(once.size() == twice.size());
  for (size_t d = 0; d < once.size(); d++) CHECK(once[d] == doctest::Approx(twice[d]).epsilon(1e-6));

  // String form splits on punctuation and whitespace.
  CHECK(emb.phrase_vector("belly/cramping") == emb.phrase_vector(std::vector<std::string>{"belly", "cramping"}));
}

TEST_CASE("subword composition covers unseen variants") {
  EmbeddingTable emb = train_embeddings(cluster_corpus(), small_config());
  CHECK_FALSE(emb.has_word("bellyz"));
  std::vector<float> oov = emb.word_vector("bellyz");
  bool all_zero = true;
  for (float v : oov)
    if (v != 0.0f) all_zero = false;
  CHECK_FALSE(all_zero);
  // Shared grams pull the misspelling toward its source word.
  CHECK(cosine(oov, emb.word_vector("belly")) > cosine(oov, emb.word_vector("wheeze")));

  // No shared grams at all: zero vector.
  std::vector<float> junk = emb.word_vector("qqqq");
  for (float v : junk) CHECK(v == 0.0f);
}

TEST_CASE("cosine guards zero vectors and rejects dim mismatch") {
  std::vector<float> zero(8, 0.0f);
  std::vector<float> unit(8, 0.0f);
  unit[0] = 1.0f;
  CHECK(cosine(zero, unit) == 0.0);
  CHECK(cosine(unit, unit) == doctest::Approx(1.0));
  std::vector<float> other(4, 1.0f);
  CHECK_THROWS_AS(cosine(unit, other), Error);
}

TEST_CASE("text export lists every vocabulary word") {
  EmbeddingTable emb = train_embeddings(cluster_corpus(), small_config());
  std::string path = "/tmp/cclink_emb_export.txt";
  emb.export_text(path);
  std::vector<std::string> lines = split_lines(read_file(path));
  CHECK(lines.size() == emb.vocab_size());
  bool found = false;
  for (const std::string& line : lines)
    if (line.rfind("belly ", 0) == 0) found = true;
  CHECK(found);
  std::remove(path.c_str());
}

TEST_CASE("degenerate configs are rejected") {
  std::vector<Record> corpus = cluster_corpus();
  EmbeddingConfig cfg = small_config();
  cfg.dim = 0;
  CHECK_THROWS_AS(train_embeddings(corpus, cfg), Error);
}

TEST_CASE("subword_ngrams pads with boundary markers") {
  std::vector<std::string> grams = subword_ngrams("ha", 3, 5);
  // "<ha>" has length 4: trigrams <ha, ha>, plus the whole padded form.
  CHECK(grams == std::vector<std::string>{"<ha", "<ha>", "ha>"});
}
