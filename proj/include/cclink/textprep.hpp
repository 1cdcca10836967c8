#pragma once

// Text preparation for free-text triage notes: lowercasing, tokenization,
// separator detection, and splitting records into candidate chunks. All span
// bookkeeping is in bytes into the normalized record text.

#include <cstdint>
#include <string>
#include <vector>

#include "cclink/common.hpp"
#include "cclink/rng.hpp"

namespace cclink {

struct SeparatorConfig {
  // Characters that can delimit symptom chunks. '-' is deliberately absent:
  // hyphens join compounds ("post-op") more often than they separate.
  std::string separators = ",;/\\+&|:.?";

  // A '/' only separates when both neighboring tokens are words of at least
  // this length. Keeps shorthand like "n/d" (nausea/diarrhea read as one
  // unit) intact while still splitting "neck/back".
  uint32_t slash_min_run = 2;

  // A '.' flanked by digits is a decimal point ("99.9"), never a separator.
  bool period_digit_guard = true;
};

struct Token {
  std::string text;
  CharSpan span;
  bool is_word = false;       // maximal alphanumeric run
  bool is_separator = false;  // punctuation acting as a chunk boundary here
};

// Contiguous token run between active separators. Token indices are
// inclusive; span covers from the first token's start to the last token's
// end, so any punctuation inside the run stays part of the chunk text.
struct Chunk {
  uint32_t first_token = 0;
  uint32_t last_token = 0;
  CharSpan span;
};

// Maps byte offsets of a record to offsets in a rewritten version of it.
// target[i] is the new position of original byte i, or -1 if that byte was
// removed (a dropped separator, a collapsed space).
struct OffsetMap {
  std::vector<int32_t> target;

  // Remaps a half-open span. Returns false if either endpoint byte did not
  // survive the rewrite.
  bool map_span(const CharSpan& in, CharSpan* out) const;
};

struct DropResult {
  std::string text;
  OffsetMap map;
};

// Lowercases ASCII letters, collapses whitespace runs to single spaces, and
// trims. Idempotent.
std::string normalize(const std::string& text);

// Splits normalized text into word tokens (maximal alphanumeric runs) and
// single-character punctuation tokens, then marks which punctuation tokens
// act as separators under cfg. Bytes >= 0x80 count as word characters so
// multi-byte sequences are never split.
std::vector<Token> tokenize(const std::string& text, const SeparatorConfig& cfg);

// Groups tokens into chunks: maximal runs between active separators. Runs
// without any word token (stray punctuation between two separators) are
// dropped.
std::vector<Chunk> split_chunks(const std::vector<Token>& tokens);

inline std::string chunk_text(const std::string& text, const Chunk& chunk) {
  return text.substr(chunk.span.start, chunk.span.end - chunk.span.start);
}

// Replaces each active separator with a space independently with probability
// p, then renormalizes. Used both as a training-time augmentation and by the
// corpus generator to simulate punctuation-free records. p = 0 yields the
// input unchanged with an identity map.
DropResult drop_separators(const std::string& text, const SeparatorConfig& cfg, double p, Rng& rng);

// Just the word tokens of a string (no punctuation, no spans). Separator
// configuration does not matter here; used for embedding lookups.
std::vector<std::string> word_split(const std::string& text);

}  // namespace cclink
