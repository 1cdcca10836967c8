#include "cclink/textprep.hpp"

namespace cclink {

namespace {

bool is_space_byte(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_digit_byte(unsigned char c) { return c >= '0' && c <= '9'; }

bool is_word_byte(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || is_digit_byte(c) || c >= 0x80;
}

// Lowercase + collapse whitespace, recording where each input byte lands.
// target[i] = -1 for bytes that do not survive. The surviving space of a
// collapsed run is attributed to the run's first byte, so normalizing an
// already-normalized string yields the identity map.
std::string normalize_with_map(const std::string& text, std::vector<int32_t>* target) {
  std::string out;
  out.reserve(text.size());
  target->assign(text.size(), -1);
  ptrdiff_t gap_start = -1;
  for (size_t i = 0; i < text.size(); i++) {
    unsigned char c = static_cast<unsigned char>(text[i]);
    if (is_space_byte(c)) {
      if (!out.empty() && gap_start < 0) gap_start = static_cast<ptrdiff_t>(i);
      continue;
    }
    if (gap_start >= 0) {
      (*target)[gap_start] = static_cast<int32_t>(out.size());
      out.push_back(' ');
      gap_start = -1;
    }
    (*target)[i] = static_cast<int32_t>(out.size());
    if (c >= 'A' && c <= 'Z') c = static_cast<unsigned char>(c - 'A' + 'a');
    out.push_back(static_cast<char>(c));
  }
  return out;
}

}  // namespace

bool OffsetMap::map_span(const CharSpan& in, CharSpan* out) const {
  if (in.end <= in.start || in.end > target.size()) return false;
  int32_t s = target[in.start];
  int32_t e = target[in.end - 1];
  if (s < 0 || e < 0) return false;
  out->start = static_cast<uint32_t>(s);
  out->end = static_cast<uint32_t>(e) + 1;
  return true;
}

std::string normalize(const std::string& text) {
  std::vector<int32_t> target;
  return normalize_with_map(text, &target);
}

std::vector<Token> tokenize(const std::string& text, const SeparatorConfig& cfg) {
  std::vector<Token> tokens;
  size_t i = 0;
  while (i < text.size()) {
    unsigned char c = static_cast<unsigned char>(text[i]);
    if (is_space_byte(c)) {
      i++;
      continue;
    }
    Token tok;
    tok.span.start = static_cast<uint32_t>(i);
    if (is_word_byte(c)) {
      size_t j = i;
      while (j < text.size() && is_word_byte(static_cast<unsigned char>(text[j]))) j++;
      tok.span.end = static_cast<uint32_t>(j);
      tok.is_word = true;
      i = j;
    } else {
      tok.span.end = static_cast<uint32_t>(i + 1);
      i++;
    }
    tok.text = text.substr(tok.span.start, tok.span.end - tok.span.start);
    tokens.push_back(std::move(tok));
  }

  // Second pass: decide which punctuation tokens actually separate, now that
  // neighboring tokens are known.
  for (size_t t = 0; t < tokens.size(); t++) {
    Token& tok = tokens[t];
    if (tok.is_word) continue;
    char c = tok.text[0];
    if (cfg.separators.find(c) == std::string::npos) continue;
    if (c == '/') {
      bool left_ok = t > 0 && tokens[t - 1].is_word &&
                     tokens[t - 1].text.size() >= cfg.slash_min_run;
      bool right_ok = t + 1 < tokens.size() && tokens[t + 1].is_word &&
                      tokens[t + 1].text.size() >= cfg.slash_min_run;
      tok.is_separator = left_ok && right_ok;
    } else if (c == '.' && cfg.period_digit_guard) {
      bool digit_left = tok.span.start > 0 &&
                        is_digit_byte(static_cast<unsigned char>(text[tok.span.start - 1]));
      bool digit_right = tok.span.end < text.size() &&
                         is_digit_byte(static_cast<unsigned char>(text[tok.span.end]));
      tok.is_separator = !(digit_left && digit_right);
    } else {
      tok.is_separator = true;
    }
  }
  return tokens;
}

std::vector<Chunk> split_chunks(const std::vector<Token>& tokens) {
  std::vector<Chunk> chunks;
  size_t run_start = 0;
  auto close_run = [&](size_t run_end) {
    // run is [run_start, run_end); keep it only if it contains a word token
    bool has_word = false;
    for (size_t t = run_start; t < run_end; t++) {
      if (tokens[t].is_word) has_word = true;
    }
    if (has_word) {
      Chunk chunk;
      chunk.first_token = static_cast<uint32_t>(run_start);
      chunk.last_token = static_cast<uint32_t>(run_end - 1);
      chunk.span.start = tokens[run_start].span.start;
      chunk.span.end = tokens[run_end - 1].span.end;
      chunks.push_back(chunk);
    }
  };
  for (size_t t = 0; t < tokens.size(); t++) {
    if (tokens[t].is_separator) {
      if (t > run_start) close_run(t);
      run_start = t + 1;
    }
  }
  if (run_start < tokens.size()) close_run(tokens.size());
  return chunks;
}

std::vector<std::string> word_split(const std::string& text) {
  std::vector<std::string> words;
  size_t i = 0;
  while (i < text.size()) {
    if (!is_word_byte(static_cast<unsigned char>(text[i]))) {
      i++;
      continue;
    }
    size_t j = i;
    while (j < text.size() && is_word_byte(static_cast<unsigned char>(text[j]))) j++;
    words.push_back(text.substr(i, j - i));
    i = j;
  }
  return words;
}

DropResult drop_separators(const std::string& text, const SeparatorConfig& cfg, double p, Rng& rng) {
  std::vector<Token> tokens = tokenize(text, cfg);
  std::string replaced = text;
  for (const Token& tok : tokens) {
    if (!tok.is_separator) continue;
    if (rng.next_double() < p) replaced[tok.span.start] = ' ';
  }

  DropResult result;
  result.text = normalize_with_map(replaced, &result.map.target);
  return result;
}

}  // namespace cclink
