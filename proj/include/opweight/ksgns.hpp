#pragma once

#include <vector>

#include "opweight/hmodule.hpp"
#include "opweight/report.hpp"

namespace opweight {

class CpFamilySampler;

// Operator-valued weight from A into B, defined on the corner p·A·p of A.
// `p` is a projection; p = 1 means the weight is everywhere defined.
// coeffs[alpha] stores the value at p·e_alpha·p for the canonical basis
// element e_alpha of A, so the table is determined by, and determines, the
// restriction to the corner. Positivity of the induced Gram over the left
// ideal A·p is certified by build_canonical_ksgns, not assumed here.
struct Weight {
  AlgebraSpec A;
  AlgebraSpec B;
  Element p;
  std::vector<Element> coeffs;

  bool shape_valid() const;
};

// Builds a weight table from a projection and a value function on the corner.
Weight make_weight(const AlgebraSpec& A, const AlgebraSpec& B, const Element& p,
                   const std::vector<Element>& raw_coeffs,
                   double tol = kDefaultTol);

// Value of the weight at x, i.e. the stored linear map applied to p·x·p.
Element weight_apply(const Weight& w, const Element& x);

// Norm of the weight: ||phi(p)||, the value norm at the unit of the corner.
double weight_norm(const Weight& w);

// True iff p = 1 within tol, the everywhere-defined (dense) case.
bool densely_defined(const Weight& w, double tol = kDefaultTol);

// Pointwise sums and scalings of weights sharing A, B and p.
Weight weight_scale(double lambda, const Weight& w);
Weight weight_add(const Weight& w1, const Weight& w2);

// Basis of the left ideal A·p: a maximal independent subset of
// {e_alpha · p}, selected by column-pivoted QR and listed in ascending
// base-index order for determinism.
std::vector<Element> left_ideal_basis(const AlgebraSpec& A, const Element& p,
                                      double tol = kDefaultTol);

// A represented module E over B together with the structure maps of the
// weight: Lambda[i] sends the free rank-one module over B into E and
// realizes the i-th left-ideal basis element; pi[alpha] is the action of
// the alpha-th basis element of A on E. freeB is the shared source of the
// Lambda maps. Invariants (certified by verify_ksgns):
//   inner(Lambda(a1)b1, Lambda(a2)b2) = b2* phi(a2* a1) b1,
//   span{Lambda(a)b} = E,
//   pi is a *-homomorphism with pi(x) Lambda(a) = Lambda(x a).
struct KsgnsTriplet {
  AlgebraSpec A;
  AlgebraSpec B;
  Element p;
  ModulePtr E;
  ModulePtr freeB;
  std::vector<Element> N_basis;
  std::vector<ModuleMap> Lambda;
  std::vector<ModuleMap> pi;
};

// Coordinates of a in the stored left-ideal basis; throws Error when a is
// not in the span within tol.
Vec n_coords(const KsgnsTriplet& t, const Element& a, double tol = kDefaultTol);

// Structure map at an arbitrary ideal element a (B -> E).
ModuleMap lambda_of(const KsgnsTriplet& t, const Element& a,
                    double tol = kDefaultTol);

// Represented action at an arbitrary algebra element x (E -> E).
ModuleMap pi_of(const KsgnsTriplet& t, const Element& x);

// Least-squares W with W o from[i] = to[i] for every index; used for the
// uniqueness-up-to-unitary comparison of two triplets over the same weight.
ModuleMap intertwiner_solve(const std::vector<ModuleMap>& from,
                            const std::vector<ModuleMap>& to);

// Canonical construction: forms the free bimodule over the ideal basis,
// scalarizes the B-valued semi-inner product with the faithful trace,
// quotients by the kernel of the Gram (singular values below
// 1e-10 * sigma_max), orthonormalizes, and emits the module with its
// structure maps. Throws NotCompletelyPositive when the Gram has a
// negative eigenvalue beyond tolerance.
KsgnsTriplet build_canonical_ksgns(const Weight& w, double tol = kDefaultTol);

// Asserts the three defining invariants, the composed-form identities
//   phi(a2* a1) = Lambda(a2)* Lambda(a1),
//   ||Lambda(a)||^2 = ||phi(a* a)||,
//   pi(x) Lambda(a) = Lambda(x a) for all basis x of A,
// and uniqueness up to unitary against a fresh canonical build (isometry
// from Gram agreement, surjectivity, B-linearity). Never throws; failures
// are rows of the report.
Report verify_ksgns(const Weight& w, const KsgnsTriplet& t,
                    double tol = kDefaultTol);

// Representative vector of the compact module map Lambda(a): returns x with
// Lambda(a) b = x . b for all b, and checks phi(a* a) = inner(x, x) via the
// triplet's own composed form. Throws NoRepresentative when the residual
// exceeds tol.
Vec compactness_criterion(const Element& a, const KsgnsTriplet& t,
                          double tol = kDefaultTol);

// Lower semi-continuity evidence for an everywhere-defined weight: sampled
// domination rho(x) <= phi(x) over the dominated family, convergence of the
// canonical scaled subfamily lambda_n -> 1, the domain set-equality clause
// (marked as verified at the sample budget), and monotone-chain convergence
// along partial-unit chains x_i = a* u_i a. Throws NotDenselyDefined when
// p != 1.
Report check_lower_semicontinuity(const Weight& w, CpFamilySampler& sampler,
                                  double tol = kDefaultTol);

// Multiplier-extension facts in the unital finite model: the extension of
// phi coincides with phi, the extended positive domain equals the original,
// the closed structure map equals the original, the scaled subfamily
// converges, and adjoints converge along stabilizing sequences. Throws
// NotDenselyDefined when p != 1.
Report multiplier_extension_check(const Weight& w, CpFamilySampler& sampler,
                                  double tol = kDefaultTol);

}  // namespace opweight
