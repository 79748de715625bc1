#include "priornet/tsv.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>

namespace priornet {
namespace tsv {

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::IoError, "cannot open " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  if (!lines.empty() && lines.front().size() >= 3 &&
      static_cast<unsigned char>(lines.front()[0]) == 0xEF &&
      static_cast<unsigned char>(lines.front()[1]) == 0xBB &&
      static_cast<unsigned char>(lines.front()[2]) == 0xBF) {
    lines.front().erase(0, 3);
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  size_t start = 0;
  while (true) {
    const size_t pos = line.find(sep, start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

double parse_double(const std::string& token, const std::string& where) {
  if (token.empty()) fail(Errc::NonNumericCell, "empty cell at " + where);
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(token.c_str(), &end);
  if (end != token.c_str() + token.size() || errno == ERANGE)
    fail(Errc::NonNumericCell, "cannot parse '" + token + "' at " + where);
  if (!std::isfinite(v)) fail(Errc::NonNumericCell, "non-finite value at " + where);
  return v;
}

long parse_long(const std::string& token, const std::string& where) {
  if (token.empty()) fail(Errc::NonNumericCell, "empty cell at " + where);
  errno = 0;
  char* end = nullptr;
  const long v = std::strtol(token.c_str(), &end, 10);
  if (end != token.c_str() + token.size() || errno == ERANGE)
    fail(Errc::NonNumericCell, "cannot parse integer '" + token + "' at " + where);
  return v;
}

std::string fmt_g10(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", x);
  return buf;
}

std::string fmt_exact(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Errc::IoError, "cannot write " + path);
  out << content;
  if (!out) fail(Errc::IoError, "write failed for " + path);
}

}  // namespace tsv
}  // namespace priornet
