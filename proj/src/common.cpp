#include "cclink/common.hpp"

#include <fstream>
#include <sstream>

namespace cclink {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("cannot open " + path);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw data_error("cannot write " + path);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw data_error("short write to " + path);
}

std::vector<std::string> split_lines(const std::string& content) {
  std::vector<std::string> lines;
  size_t pos = 0;
  while (pos < content.size()) {
    size_t nl = content.find('\n', pos);
    if (nl == std::string::npos) nl = content.size();
    size_t end = nl;
    if (end > pos && content[end - 1] == '\r') end--;
    lines.push_back(content.substr(pos, end - pos));
    pos = nl + 1;
  }
  return lines;
}

}  // namespace cclink
