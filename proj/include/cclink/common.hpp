#pragma once

// Shared plumbing: error type with exit-code categories, byte spans,
// file helpers, and the FNV-1a hash used for model fingerprints.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace cclink {

// Error categories map 1:1 onto process exit codes (see tools/cclink_main.cpp).
// Values double as CLI exit codes.
enum class ErrorKind {
  config = 1,       // bad flag/config value, missing input
  data = 2,         // malformed or inconsistent data file
  fingerprint = 3,  // model was built against different embeddings/ontology
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

inline Error config_error(const std::string& message) { return Error(ErrorKind::config, message); }
inline Error data_error(const std::string& message) { return Error(ErrorKind::data, message); }
inline Error data_error(const std::string& file, size_t line, const std::string& message) {
  return Error(ErrorKind::data, file + ":" + std::to_string(line) + ": " + message);
}
inline Error fingerprint_error(const std::string& message) { return Error(ErrorKind::fingerprint, message); }

// Half-open byte range [start, end) into a record's text.
struct CharSpan {
  uint32_t start = 0;
  uint32_t end = 0;

  uint32_t size() const { return end - start; }
  bool operator==(const CharSpan& other) const { return start == other.start && end == other.end; }
  bool operator!=(const CharSpan& other) const { return !(*this == other); }
  bool overlaps(const CharSpan& other) const { return start < other.end && other.start < end; }
};

// Number of bytes shared by two half-open spans.
inline uint32_t span_overlap(const CharSpan& a, const CharSpan& b) {
  uint32_t lo = a.start > b.start ? a.start : b.start;
  uint32_t hi = a.end < b.end ? a.end : b.end;
  return hi > lo ? hi - lo : 0;
}

struct Record {
  std::string id;
  std::string text;
};

// FNV-1a, 64 bit. Used to fingerprint ontologies and embedding tables so a
// model refuses to run against inputs it was not trained with.
inline uint64_t fnv1a64(const void* data, size_t size, uint64_t hash = 14695981039346656037ull) {
  const unsigned char* bytes = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < size; i++) {
    hash ^= bytes[i];
    hash *= 1099511628211ull;
  }
  return hash;
}

inline uint64_t fnv1a64(const std::string& s, uint64_t hash = 14695981039346656037ull) {
  return fnv1a64(s.data(), s.size(), hash);
}

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

// Splits on '\n', dropping a trailing empty line. "\r\n" endings are handled.
std::vector<std::string> split_lines(const std::string& content);

}  // namespace cclink
