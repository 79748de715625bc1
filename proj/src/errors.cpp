#include "priornet/errors.hpp"

namespace priornet {

const char* errc_name(Errc c) {
  switch (c) {
    case Errc::BadArgument: return "BadArgument";
    case Errc::ParseError: return "ParseError";
    case Errc::IoError: return "IoError";
    case Errc::DuplicateGene: return "DuplicateGene";
    case Errc::DuplicateSample: return "DuplicateSample";
    case Errc::UnlabeledSample: return "UnlabeledSample";
    case Errc::NonNumericCell: return "NonNumericCell";
    case Errc::TooFewReplicates: return "TooFewReplicates";
    case Errc::DegenerateVariances: return "DegenerateVariances";
    case Errc::RankDeficient: return "RankDeficient";
    case Errc::NotPositiveDefinite: return "NotPositiveDefinite";
    case Errc::ZeroDiagonal: return "ZeroDiagonal";
    case Errc::EmptySignature: return "EmptySignature";
    case Errc::SchemaMismatch: return "SchemaMismatch";
    case Errc::ConvergenceFailure: return "ConvergenceFailure";
  }
  return "Error";
}

}  // namespace priornet
