#pragma once

#include <utility>
#include <vector>

#include "opweight/cpmap.hpp"
#include "opweight/ksgns.hpp"
#include "opweight/report.hpp"

namespace opweight {

// Seed of the construction procedure: structure maps over an ideal basis
// together with the operator family that defines the target weight. The
// family members pair a positive contraction T_i on E with its map rho_i;
// the last T_i must be the identity, the finite stand-in for a family
// increasing to 1.
struct SeedData {
  AlgebraSpec A;
  AlgebraSpec B;
  ModulePtr E;
  ModulePtr freeB;
  std::vector<Element> N0;         // basis of a left ideal of A
  std::vector<ModuleMap> Lambda0;  // per N0 element, freeB -> E
  std::vector<std::pair<ModuleMap, CpMap>> family;
};

// Seed built from an existing triplet with the scaled family
// lambda_k * identity; lambdas must end at 1.
SeedData seed_from_triplet(const Weight& w, const KsgnsTriplet& t,
                           const std::vector<double>& lambdas);

// Closure of the seed: certifies the seed identities (density, the pairing
// identity of every family member, attainment of the unit), recovers the
// support projection of the ideal spanned by N0, and solves the action of
// every algebra basis element from the spanning columns, with post-hoc
// homomorphism checks. Throws SeedInconsistent with the offending residual.
KsgnsTriplet close_lambda(const SeedData& seed, double tol = kDefaultTol);

// The weight of a closed seed: value Lambda(b)* Lambda(a) at b* a, assembled
// over the corner basis. Well-definedness is certified on a kernel basis of
// the multiplication map, for every family member. Throws IllDefined.
Weight construct_weight(const SeedData& seed, double tol = kDefaultTol);

// Verified truncating net: the candidate elements u_i with their derived
// operators. S_i solves S_i Lambda(a) = Lambda(a u_i); T_i = S_i* S_i;
// w_i = S_i Lambda(p); v_i = T_i^{1/2} Lambda(p); rho_i is the dominated
// map of T_i. Every clause lands in the report; derivation failures are
// failed rows, never exceptions.
struct TruncatingNet {
  std::vector<Element> u;
  std::vector<ModuleMap> S;
  std::vector<ModuleMap> T;
  std::vector<ModuleMap> w;
  std::vector<ModuleMap> v;
  std::vector<CpMap> rho;
  Report rep;
};

TruncatingNet verify_truncating_net(const Weight& w, const KsgnsTriplet& t,
                                    const std::vector<Element>& net,
                                    double tol = kDefaultTol);

// Basis of the right ideal q·B: a maximal independent subset of {q e_beta},
// selected by column-pivoted QR in ascending base-index order.
std::vector<Element> right_ideal_basis(const AlgebraSpec& B, const Element& q,
                                       double tol = kDefaultTol);

// The quotient module over a right-ideal basis D of B: generators a (x) d
// with inner product d2* phi(a2* a1) d1, quotiented and orthonormalized,
// the left action theta of A, and the identification U: E -> MD with
// U(Lambda(a) d) = class of a (x) d. The report certifies U isometric on
// the generator span, the conjugation identities transporting theta to pi
// and the sampled dominated operators across U, and the operator bounds.
// Throws NotSurjective with the rank deficit when the generator classes
// fail to exhaust the quotient.
struct QuotientModule {
  std::vector<Element> D;
  ModulePtr MD;
  std::vector<ModuleMap> theta;  // per A basis element, MD -> MD
  ModuleMap U;                   // E -> MD
  Report rep;
};

QuotientModule build_quotient_module(const Weight& w, const KsgnsTriplet& t,
                                     const std::vector<Element>& D,
                                     double tol = kDefaultTol);

// Approximation recipe inside the ideal: approximate a from the span of K,
// rescale so the element norm never exceeds ||a|| and the structure-map
// norm never exceeds ||Lambda(a)|| (exact mode) or the slack bound (slack
// mode), and multiply by the net elements. Exact mode requires
// Lambda(a) != 0; slack mode requires ||Lambda(a)|| < slack_bound.
enum class CoreMode { kExactBound, kSlack };

std::vector<Element> core_approximation(const Weight& w, const KsgnsTriplet& t,
                                        const TruncatingNet& net,
                                        const std::vector<Element>& K,
                                        const Element& a, CoreMode mode,
                                        double slack_bound = 0.0,
                                        double tol = kDefaultTol);

// Convergence report of the net's map family: attainment of the weight at
// the last index, monotone decay of the residuals, domination of the weight
// over every member on positive corner elements, the same domination for
// sampled members of the bounded family, and transport of the compact
// values. Never throws; all verdicts are rows.
Report rho_family_convergence(const Weight& w, const KsgnsTriplet& t,
                              const TruncatingNet& net,
                              double tol = kDefaultTol);

}  // namespace opweight
