#pragma once

// Little-endian byte packing for the binary model files. Internal to src/;
// each format owns its layout, these just keep the plumbing identical.

#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "cclink/common.hpp"

namespace cclink {

struct ByteWriter {
  std::string out;
  void raw(const void* data, size_t size) { out.append(static_cast<const char*>(data), size); }
  void u8(uint8_t v) { raw(&v, sizeof v); }
  void u32(uint32_t v) { raw(&v, sizeof v); }
  void u64(uint64_t v) { raw(&v, sizeof v); }
  void f64(double v) { raw(&v, sizeof v); }
  void f32s(const std::vector<float>& v) { raw(v.data(), v.size() * sizeof(float)); }
  void str(const std::string& s) {
    u32(static_cast<uint32_t>(s.size()));
    raw(s.data(), s.size());
  }
};

struct ByteReader {
  const std::string& in;
  size_t pos = 0;
  std::string where;

  void raw(void* data, size_t size) {
    if (pos + size > in.size()) throw data_error(where + ": truncated file");
    std::memcpy(data, in.data() + pos, size);
    pos += size;
  }
  uint8_t u8() {
    uint8_t v;
    raw(&v, sizeof v);
    return v;
  }
  uint32_t u32() {
    uint32_t v;
    raw(&v, sizeof v);
    return v;
  }
  uint64_t u64() {
    uint64_t v;
    raw(&v, sizeof v);
    return v;
  }
  double f64() {
    double v;
    raw(&v, sizeof v);
    return v;
  }
  void f32s(std::vector<float>& v, size_t count) {
    v.resize(count);
    raw(v.data(), count * sizeof(float));
  }
  std::string str() {
    uint32_t len = u32();
    std::string s(len, '\0');
    raw(s.data(), len);
    return s;
  }
};

}  // namespace cclink
