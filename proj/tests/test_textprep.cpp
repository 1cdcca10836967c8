#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <string>
#include <vector>

#include "cclink/rng.hpp"
#include "cclink/textprep.hpp"

using namespace cclink;

namespace {

std::vector<std::string> chunk_texts(const std::string& text, const SeparatorConfig& cfg) {
  std::vector<Token> tokens = tokenize(text, cfg);
  std::vector<std::string> out;
  for (const Chunk& c : split_chunks(tokens)) out.push_back(chunk_text(text, c));
  return out;
}

// Random printable strings with plenty of punctuation and whitespace.
std::string random_text(Rng& rng) {
  static const std::string alphabet = "abcdefghij0123456789,,;;//\\++&&||::..?\?()-  \t";
  size_t len = rng.next_below(40);
  std::string s;
  for (size_t i = 0; i < len; i++) s += alphabet[rng.next_below(alphabet.size())];
  return s;
}

}  // namespace

TEST_CASE("normalize lowercases, collapses whitespace, trims") {
  CHECK(normalize("Chest  Pain ") == "chest pain");
  CHECK(normalize("") == "");
  CHECK(normalize("  \t\n ") == "");
  CHECK(normalize("a\tb\nc") == "a b c");
  CHECK(normalize("ABC-Def") == "abc-def");
}

TEST_CASE("normalize is idempotent") {
  Rng rng(7);
  for (int i = 0; i < 500; i++) {
    std::string text = random_text(rng);
    std::string once = normalize(text);
    CHECK(normalize(once) == once);
  }
}

TEST_CASE("tokenize splits words and punctuation") {
  SeparatorConfig cfg;
  std::vector<Token> tokens = tokenize("neck/back pain", cfg);
  REQUIRE(tokens.size() == 4);
  CHECK(tokens[0].text == "neck");
  CHECK(tokens[0].is_word);
  CHECK(tokens[1].text == "/");
  CHECK(tokens[1].is_separator);
  CHECK(tokens[2].text == "back");
  CHECK(tokens[3].text == "pain");
  CHECK(tokens[3].span.start == 10);
  CHECK(tokens[3].span.end == 14);
}

TEST_CASE("short neighbors keep a slash inactive") {
  SeparatorConfig cfg;
  std::vector<Token> tokens = tokenize("n/d", cfg);
  REQUIRE(tokens.size() == 3);
  CHECK_FALSE(tokens[1].is_separator);

  // One long neighbor is not enough; both sides must clear the bar.
  tokens = tokenize("nausea/d", cfg);
  REQUIRE(tokens.size() == 3);
  CHECK_FALSE(tokens[1].is_separator);

  tokens = tokenize("nausea/vomiting", cfg);
  REQUIRE(tokens.size() == 3);
  CHECK(tokens[1].is_separator);
}

TEST_CASE("slash needs word neighbors on both sides") {
  SeparatorConfig cfg;
  // Spacing does not matter; the neighboring tokens do.
  std::vector<Token> tokens = tokenize("fever /chills", cfg);
  REQUIRE(tokens.size() == 3);
  CHECK(tokens[1].text == "/");
  CHECK(tokens[1].is_separator);

  // A slash with no left word token stays literal.
  tokens = tokenize("/fever", cfg);
  REQUIRE(tokens.size() == 2);
  CHECK_FALSE(tokens[0].is_separator);
}

TEST_CASE("period between digits is a decimal point") {
  SeparatorConfig cfg;
  std::vector<Token> tokens = tokenize("99.9", cfg);
  REQUIRE(tokens.size() == 3);
  CHECK_FALSE(tokens[1].is_separator);

  tokens = tokenize("fever. chills", cfg);
  REQUIRE(tokens.size() == 3);
  CHECK(tokens[1].text == ".");
  CHECK(tokens[1].is_separator);

  // Digit on one side only: still a separator.
  tokens = tokenize("x3. fever", cfg);
  CHECK(tokens[1].text == ".");
  CHECK(tokens[1].is_separator);
}

TEST_CASE("period guard can be disabled") {
  SeparatorConfig cfg;
  cfg.period_digit_guard = false;
  std::vector<Token> tokens = tokenize("99.9", cfg);
  REQUIRE(tokens.size() == 3);
  CHECK(tokens[1].is_separator);
}

TEST_CASE("other configured separators are always active") {
  SeparatorConfig cfg;
  for (char c : std::string(",;\\+&|:?")) {
    std::string text = std::string("ab") + c + "cd";
    std::vector<Token> tokens = tokenize(text, cfg);
    REQUIRE(tokens.size() == 3);
    CHECK(tokens[1].is_separator);
  }
  // '-' is not in the separator set.
  std::vector<Token> tokens = tokenize("light-headed", cfg);
  REQUIRE(tokens.size() == 3);
  CHECK_FALSE(tokens[1].is_separator);
}

TEST_CASE("token spans reconstruct the input") {
  SeparatorConfig cfg;
  Rng rng(11);
  for (int i = 0; i < 1000; i++) {
    std::string text = normalize(random_text(rng));
    std::vector<Token> tokens = tokenize(text, cfg);
    std::string rebuilt;
    uint32_t prev_end = 0;
    bool first = true;
    for (const Token& tok : tokens) {
      CHECK(tok.span.start < tok.span.end);
      if (!first) {
        CHECK(tok.span.start >= prev_end);
        for (uint32_t g = prev_end; g < tok.span.start; g++) rebuilt += ' ';
      }
      CHECK(tok.text == text.substr(tok.span.start, tok.span.end - tok.span.start));
      rebuilt += tok.text;
      prev_end = tok.span.end;
      first = false;
    }
    CHECK(rebuilt == text);
  }
}

TEST_CASE("split_chunks on separator punctuation") {
  SeparatorConfig cfg;
  CHECK(chunk_texts("urinary tract pain & dysuria", cfg) ==
        std::vector<std::string>{"urinary tract pain", "dysuria"});
  CHECK(chunk_texts("migraine with neck/back pain, fever", cfg) ==
        std::vector<std::string>{"migraine with neck", "back pain", "fever"});
  CHECK(chunk_texts("chills/body aches", cfg) ==
        std::vector<std::string>{"chills", "body aches"});
  CHECK(chunk_texts("fever", cfg) == std::vector<std::string>{"fever"});
  CHECK(chunk_texts("n/d", cfg) == std::vector<std::string>{"n/d"});
  CHECK(chunk_texts("temp 99.9, tylenol given", cfg) ==
        std::vector<std::string>{"temp 99.9", "tylenol given"});
}

TEST_CASE("empty and wordless runs are dropped") {
  SeparatorConfig cfg;
  CHECK(chunk_texts("fever,, cough", cfg) == std::vector<std::string>{"fever", "cough"});
  CHECK(chunk_texts(",,,", cfg) == std::vector<std::string>{});
  CHECK(chunk_texts("fever, ( , cough", cfg) == std::vector<std::string>{"fever", "cough"});
}

TEST_CASE("chunk spans are disjoint, ordered, and separator-free") {
  SeparatorConfig cfg;
  Rng rng(23);
  for (int i = 0; i < 1000; i++) {
    std::string text = normalize(random_text(rng));
    std::vector<Token> tokens = tokenize(text, cfg);
    std::vector<Chunk> chunks = split_chunks(tokens);
    uint32_t prev_end = 0;
    for (const Chunk& c : chunks) {
      CHECK(c.span.start >= prev_end);
      CHECK(c.span.start < c.span.end);
      bool has_word = false;
      for (uint32_t t = c.first_token; t <= c.last_token; t++) {
        CHECK_FALSE(tokens[t].is_separator);
        if (tokens[t].is_word) has_word = true;
      }
      CHECK(has_word);
      CHECK(c.span.start == tokens[c.first_token].span.start);
      CHECK(c.span.end == tokens[c.last_token].span.end);
      prev_end = c.span.end;
    }
  }
}

TEST_CASE("drop_separators with p=0 is the identity") {
  SeparatorConfig cfg;
  Rng rng(5);
  std::string text = "chest pain, fever/chills; n/d";
  DropResult result = drop_separators(text, cfg, 0.0, rng);
  CHECK(result.text == text);
  for (size_t i = 0; i < text.size(); i++) CHECK(result.map.target[i] == static_cast<int32_t>(i));
}

TEST_CASE("drop_separators with p=1 removes active separators only") {
  SeparatorConfig cfg;
  Rng rng(5);
  DropResult result = drop_separators("chest pain, fever/chills", cfg, 1.0, rng);
  CHECK(result.text == "chest pain fever chills");

  // The inactive slash in "n/d" survives even at p=1.
  Rng rng2(5);
  result = drop_separators("a, b/c", cfg, 1.0, rng2);
  CHECK(result.text == "a b/c");
}

TEST_CASE("drop_separators remaps spans through the edit") {
  SeparatorConfig cfg;
  Rng rng(5);
  std::string text = "chest pain, fever";
  DropResult result = drop_separators(text, cfg, 1.0, rng);
  REQUIRE(result.text == "chest pain fever");
  CharSpan fever{12, 17};
  CharSpan mapped;
  REQUIRE(result.map.map_span(fever, &mapped));
  CHECK(result.text.substr(mapped.start, mapped.end - mapped.start) == "fever");
  CharSpan chest{0, 10};
  REQUIRE(result.map.map_span(chest, &mapped));
  CHECK(result.text.substr(mapped.start, mapped.end - mapped.start) == "chest pain");
}

TEST_CASE("drop_separators is deterministic and monotone") {
  SeparatorConfig cfg;
  Rng rng_text(31);
  for (int i = 0; i < 300; i++) {
    std::string text = normalize(random_text(rng_text));
    Rng a(42 + i), b(42 + i);
    DropResult ra = drop_separators(text, cfg, 0.5, a);
    DropResult rb = drop_separators(text, cfg, 0.5, b);
    CHECK(ra.text == rb.text);
    REQUIRE(ra.map.target.size() == text.size());

    int32_t prev = -1;
    for (size_t j = 0; j < text.size(); j++) {
      int32_t t = ra.map.target[j];
      if (t < 0) continue;
      CHECK(t > prev);
      prev = t;
    }

    // Every word token's span must survive and re-slice to the same text.
    for (const Token& tok : tokenize(text, cfg)) {
      if (!tok.is_word) continue;
      CharSpan mapped;
      REQUIRE(ra.map.map_span(tok.span, &mapped));
      CHECK(ra.text.substr(mapped.start, mapped.end - mapped.start) == tok.text);
    }
  }
}

TEST_CASE("word_split extracts word tokens only") {
  CHECK(word_split("chest pain, fever/chills") ==
        std::vector<std::string>{"chest", "pain", "fever", "chills"});
  CHECK(word_split("n/d") == std::vector<std::string>{"n", "d"});
  CHECK(word_split("...") == std::vector<std::string>{});
  CHECK(word_split("") == std::vector<std::string>{});
}
