#pragma once

#include <cstddef>
#include <optional>

#include "ctstl/stl/formula.hpp"
#include "ctstl/stl/signal.hpp"

namespace ctstl::classic {

/// Min/max robustness on the sample grid. Temporal windows select samples
/// exactly as the smooth evaluator does, so the two are directly comparable.
double classical_robustness(const stl::Formula& f, const stl::SampledSignal& signal,
                            std::size_t ell);

/// classical_robustness >= 0; a robustness of exactly zero counts as satisfied.
bool boolean_satisfaction(const stl::Formula& f, const stl::SampledSignal& signal,
                          std::size_t ell);

/// Earliest sample at which an Eventually or Until obligation evaluated at ell
/// is discharged, or nullopt if it never is. Throws for other formula kinds.
std::optional<std::size_t> witness(const stl::Formula& f, const stl::SampledSignal& signal,
                                   std::size_t ell);

}  // namespace ctstl::classic
