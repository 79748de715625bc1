#pragma once

#include "priornet/ggm.hpp"

namespace priornet {

// Independent reference maximizer for small problems (p <= 4): multi-start
// Nelder-Mead over Cholesky-parameterized matrices followed by sign-pattern
// refinement with exact per-coordinate line searches. Shares no code with
// solve_multitask; used to verify it.
ConcentrationPair oracle_solve_small(const CovariancePair& S, const PenaltyWeights& weights);

}  // namespace priornet
