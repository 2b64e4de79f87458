#pragma once

#include "opweight/cpmap.hpp"
#include "opweight/ksgns.hpp"
#include "opweight/rng.hpp"

namespace opweight {

// Random instances for property suites and tests. All draws are
// deterministic functions of the passed generator state.
Element random_element(const AlgebraSpec& spec, Rng& rng);
Element random_hermitian(const AlgebraSpec& spec, Rng& rng);
// A square x* x; positive by construction.
Element random_positive(const AlgebraSpec& spec, Rng& rng);
// Blockwise projection of random rank, conjugated by a random unitary.
Element random_projection(const AlgebraSpec& spec, Rng& rng);
Mat random_unitary(int n, Rng& rng);

// Completely positive map in bridge-conjugation form: for each pair of a
// source block and a target block, `terms` random rectangular bridges V
// contribute V* x V. Complete positivity is structural.
CpMap random_cp_map(const AlgebraSpec& source, const AlgebraSpec& target,
                    Rng& rng, int terms = 3);

// Weight whose table is a random completely positive map compressed to the
// corner of p.
Weight random_weight(const AlgebraSpec& A, const AlgebraSpec& B,
                     const Element& p, Rng& rng, int terms = 3);

}  // namespace opweight
