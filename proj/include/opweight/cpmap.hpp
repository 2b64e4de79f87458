#pragma once

#include <optional>
#include <vector>

#include "opweight/ksgns.hpp"
#include "opweight/rng.hpp"

namespace opweight {

// Linear map from A into B stored as a value table over the canonical basis
// of A. Linearity is structural; *-compatibility and complete positivity are
// certified by the checks below, never assumed.
struct CpMap {
  AlgebraSpec source;
  AlgebraSpec target;
  std::vector<Element> coeffs;

  bool shape_valid() const;
};

CpMap cp_zero(const AlgebraSpec& source, const AlgebraSpec& target);
CpMap cp_from_weight(const Weight& w);
Element cp_apply(const CpMap& m, const Element& x);
CpMap cp_add(const CpMap& m1, const CpMap& m2);
CpMap cp_sub(const CpMap& m1, const CpMap& m2);
CpMap cp_scale(double s, const CpMap& m);
// Value norm at the unit; equals the map norm for completely positive maps.
double cp_norm(const CpMap& m);
// Worst basis residual of value(x*) = value(x)*.
double cp_star_defect(const CpMap& m);
// Every bounded linear map into a finite-dimensional unital target extends
// to multipliers continuously, so strictness carries no content here; the
// predicate is kept so call sites record the check explicitly.
bool is_strict(const CpMap& m);

// Amplified value matrices: one Hermitian matrix per target block, with
// entry ((i,r),(j,s)) = value(e_i* e_j)[block](r,s) over the full source
// basis. Positivity of all of them is complete positivity. The default
// driver fills rows in parallel; the serial twin is the reference kernel.
std::vector<Mat> amplified_value_blocks(const CpMap& m);
std::vector<Mat> amplified_value_blocks_serial(const CpMap& m);

// Complete-positivity verdict with witness extraction: when some amplified
// block has a negative direction, the eigenvector is folded into a tuple
// (b_i) with sum_{i,j} b_i* value(e_i* e_j) b_j not positive.
struct CpVerdict {
  bool cp = false;
  double min_eigenvalue = 0.0;
  double conj_defect = 0.0;
  int witness_block = -1;
  std::vector<Element> witness;
};

CpVerdict cp_verdict(const CpMap& m, double tol = kDefaultTol);
bool is_completely_positive(const CpMap& m, double tol = kDefaultTol);

// Member of the dominated family relative to a fixed triplet: the map rho,
// its intertwining operator T on E with
//   rho(a2* a1) = Lambda(a2)* T Lambda(a1),
// and the implementing vector v with T^{1/2} Lambda(a) = pi(a) v,
// ||v||^2 = ||rho at the corner unit||, rho(x) = v* pi(x) v on the corner.
struct DominatedMap {
  CpMap rho;
  ModuleMap T;
  ModuleMap v;
  int null_dim = 0;
};

// Recovers T by least squares over Hermitian matrices from the defining
// identities, minimum-Frobenius among solutions, then extracts v and runs
// the contract checks. The triplet must be in orthonormalized coordinates
// (scalar Gram = identity), which canonical builds produce. Throws NotInH
// with the failing residual when any check misses tol.
DominatedMap solve_T(const CpMap& rho, const KsgnsTriplet& t,
                     double tol = kDefaultTol);

// Builds the dominated map of a given positive commutant operator T:
// v = T^{1/2} Lambda(p), value table x -> v* pi(x) v.
DominatedMap rho_from_T(const KsgnsTriplet& t, const ModuleMap& T,
                        double tol = kDefaultTol);

// rho1 <= rho2 in the complete-positivity order.
bool order_leq(const CpMap& rho1, const CpMap& rho2, double tol = kDefaultTol);

// Join of two members of the bounded family: with max(lambda1, lambda2) <
// gamma < 1, passes both operators through s -> gamma s (1 - gamma s)^{-1},
// adds, and maps back through s -> s (1 + s)^{-1}. The result dominates
// gamma T_k and is dominated by gamma/(1-gamma) (T_1 + T_2); the scaled
// copies lambda_k rho_k are dominated by (max lambda_k / gamma) rho. gamma
// defaults to (1 + max(lambda1, lambda2)) / 2. Throws GammaOutOfRange.
DominatedMap directed_join(const KsgnsTriplet& t, const DominatedMap& r1,
                           const DominatedMap& r2, double lambda1,
                           double lambda2,
                           std::optional<double> gamma = std::nullopt,
                           double tol = kDefaultTol);

// Functional-calculus image under t -> t (1 + t)^{-1}; operator monotone on
// positive inputs, which the property tests exercise. Throws NotPositive.
Element cayley_monotone(const Element& t, double tol = kDefaultTol);
ModuleMap cayley_monotone(const ModuleMap& t, double tol = kDefaultTol);

// Deterministic sampler of the dominated family of a weight: random
// positive commutant operators normalized into [0, 1] (the bounded family),
// their scaled copies (the open-scaled family), and the scaled copies of
// the weight itself.
class CpFamilySampler {
 public:
  CpFamilySampler(const Weight& w, const KsgnsTriplet& t, double lambda,
                  uint64_t seed);

  const Weight& weight() const { return w_; }
  const KsgnsTriplet& triplet() const { return t_; }
  double lambda() const { return lambda_; }

  // Random member with 0 <= T <= 1.
  DominatedMap sample_f();
  // Scaled member lambda * (bounded member); strictly below the weight
  // whenever lambda < 1.
  DominatedMap sample_g();
  // s * weight with its exact operator T = s * identity.
  DominatedMap scaled_weight(double s) const;

 private:
  Weight w_;
  KsgnsTriplet t_;
  double lambda_;
  Rng rng_;
  std::vector<Mat> comm_;
};

// Convergence search along the scaled family: for each epsilon in the grid
// {1e-2, 1e-4, 1e-6}, accepts when the candidate scale
// lambda = 1 - epsilon/(2 ||x|| + 2), or one of the sampled bounded
// members, brings b* value(a) b within epsilon of x. False means not
// verified at the sample budget.
bool gs_limit_check(const Element& a, const Element& b, const Element& x,
                    CpFamilySampler& sampler, int samples = 50);

}  // namespace opweight
