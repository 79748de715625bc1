#pragma once

#include <stdexcept>
#include <string>

namespace priornet {

// Error identities referenced by tests and by the CLI exit-code mapping.
enum class Errc {
  BadArgument,
  ParseError,
  IoError,
  DuplicateGene,
  DuplicateSample,
  UnlabeledSample,
  NonNumericCell,
  TooFewReplicates,
  DegenerateVariances,
  RankDeficient,
  NotPositiveDefinite,
  ZeroDiagonal,
  EmptySignature,
  SchemaMismatch,
  ConvergenceFailure,
};

const char* errc_name(Errc c);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& msg)
      : std::runtime_error(std::string(errc_name(code)) + ": " + msg), code_(code) {}

  Errc code() const { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& msg) { throw Error(code, msg); }

}  // namespace priornet
