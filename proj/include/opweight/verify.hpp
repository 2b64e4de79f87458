#pragma once

#include <vector>

#include "opweight/algebra.hpp"
#include "opweight/hmodule.hpp"

namespace opweight {

// Scalar linear functional on A stored as a value table over the canonical
// basis. Positivity means the Gram [theta(e_i* e_j)] is PSD; it is certified
// by gns, never assumed.
struct Functional {
  AlgebraSpec A;
  std::vector<Complex> table;

  bool shape_valid() const;
};

Functional zero_functional(const AlgebraSpec& A);
Functional trace_functional(const AlgebraSpec& A);
Complex functional_apply(const Functional& f, const Element& x);
Functional functional_scale(double s, const Functional& f);
Functional functional_sub(const Functional& f1, const Functional& f2);

// Gram of the functional over the canonical basis, entry (i, j) =
// theta(e_i* e_j); PSD exactly when theta is positive on squares.
Mat functional_gram(const Functional& f);

// Cyclic representation of a positive functional: the quotient of A by the
// null space of the Gram, orthonormalized so H carries the standard inner
// product. pi[alpha] is left multiplication by the alpha-th basis element,
// v is the class of the unit, and theta(x) = v^H pi(x) v within 1e-10.
// Throws NotPositiveFunctional when the Gram has a negative eigenvalue.
struct GnsData {
  Functional theta;
  int dim = 0;
  std::vector<Mat> pi;
  Vec v;
};

GnsData gns(const Functional& theta, double tol = kDefaultTol);
Mat gns_pi_of(const GnsData& g, const Element& x);

// Basis of the commutant {X : X pi(x) = pi(x) X for all x} in the cyclic
// representation, orthonormal in the Frobenius inner product.
std::vector<Mat> gns_commutant_basis(const GnsData& g);

// Sesquilinear form on a left-ideal basis, linear in the first slot, with
// its dominating functional. values(i, j) = s(basis[i], basis[j]).
struct SesquilinearForm {
  AlgebraSpec A;
  std::vector<Element> basis;
  Mat values;
  Functional theta;
};

// The dominated form of a positive commutant operator T0 on the cyclic
// space: s(b_i, b_j) = <T0 q(b_i), q(b_j)>; dominated whenever T0 <= 1.
SesquilinearForm form_from_operator(const GnsData& g,
                                    const std::vector<Element>& basis,
                                    const Mat& T0);

// Reconstruction of the positive functional behind a dominated form: the
// operator T on the cyclic space with <T q(b_1), q(b_2)> = s(b_1, b_2),
// 0 <= T <= 1, T in the commutant, and omega(x) = <T pi(x) v, v>. Verifies
// omega <= theta and omega(b_j* b_i) = s(b_i, b_j) over the stored basis.
// Throws DominationViolated when the form exceeds the functional.
struct ReconstructedOmega {
  Functional omega;
  Mat T;
  GnsData rep;
  double residual = 0.0;
};

ReconstructedOmega reconstruct_omega(const SesquilinearForm& s,
                                     double tol = kDefaultTol);

// Equivalence of strong and scalar convergence for an increasing family
// below a positive limit: certifies the bound
//   ||(T - T_i) v||^2 <= 2 ||T|| ||<(T - T_i) v, v>||
// on every probe, and returns true iff the scalar residual chain decreases
// monotonically, the bound holds throughout, and both final residuals are at
// most tol. Throws DominationViolated when some member
// exceeds the limit, NotPositive when a member has a negative part.
bool strong_convergence_equiv(const std::vector<ModuleMap>& family,
                              const ModuleMap& limit,
                              const std::vector<Vec>& probes,
                              double tol = 1e-8);

// Limit of an increasing positive family: certifies monotonicity and the
// Cauchy bound on canonical probe vectors, then returns the last member as
// the limit witness. Throws NotMonotone.
ModuleMap monotone_limit(const std::vector<ModuleMap>& family,
                         double tol = kDefaultTol);

}  // namespace opweight
