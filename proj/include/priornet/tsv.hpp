#pragma once

#include <string>
#include <vector>

#include "priornet/errors.hpp"

namespace priornet {
namespace tsv {

// Reads a whole text file into lines. Accepts Unix and Windows newlines;
// drops a UTF-8 BOM and trailing empty lines.
std::vector<std::string> read_lines(const std::string& path);

std::vector<std::string> split(const std::string& line, char sep = '\t');

// Strict numeric parsing; `where` goes into the error message.
double parse_double(const std::string& token, const std::string& where);
long parse_long(const std::string& token, const std::string& where);

// Deterministic float formatting. fmt_g10 is the 10-significant-digit form
// used by result tables; fmt_exact round-trips doubles bit-for-bit.
std::string fmt_g10(double x);
std::string fmt_exact(double x);

void write_file(const std::string& path, const std::string& content);

}  // namespace tsv
}  // namespace priornet
