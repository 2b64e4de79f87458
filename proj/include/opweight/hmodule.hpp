#pragma once

#include <memory>
#include <vector>

#include "opweight/algebra.hpp"

namespace opweight {

// Hilbert module over a matrix-block base, given by an explicit basis: per
// base-basis-element right-action matrices plus the stored base-valued Gram.
// Inner products are linear in the first variable: <x b, y> = <x, y> b and
// <x, y b> = b* <x, y>. Bounded maps between finite-dimensional modules are
// automatically adjointable, so no separate non-adjointable map type exists.
struct ModuleRep {
  AlgebraSpec base;
  int dim = 0;
  std::vector<Mat> action;                 // per base basis index, dim x dim
  std::vector<std::vector<Element>> gram;  // gram[i][j] = <e_i, e_j>
  // Trace scalarization: s(x, y) = trace<x, y> = y^H * scalar_gram * x, so
  // scalar_gram(i, j) = trace<e_j, e_i>. Hermitian positive definite.
  Mat scalar_gram;
};

using ModulePtr = std::shared_ptr<const ModuleRep>;

// Validates the module axioms (unit action, multiplicativity, Gram symmetry,
// action/Gram compatibility, amplified Gram positivity, nondegenerate
// scalarization) and caches the scalar Gram.
ModulePtr make_module(AlgebraSpec base, int dim, std::vector<Mat> action,
                      std::vector<std::vector<Element>> gram,
                      double tol = kDefaultTol);
// The base acting on itself with <x, y> = y* x.
ModulePtr free_module(const AlgebraSpec& base);

Mat action_of(const ModuleRep& mod, const Element& b);
Element inner(const ModuleRep& mod, const Vec& x, const Vec& y);
double vec_norm(const ModuleRep& mod, const Vec& x);
Complex scalar_inner(const ModuleRep& mod, const Vec& x, const Vec& y);

struct ModuleMap {
  ModulePtr source;
  ModulePtr target;
  Mat mat;  // target->dim x source->dim
};

ModuleMap identity_map(const ModulePtr& mod);
ModuleMap zero_map(const ModulePtr& source, const ModulePtr& target);
ModuleMap compose(const ModuleMap& f, const ModuleMap& g);  // f after g
ModuleMap map_add(const ModuleMap& f, const ModuleMap& g);
ModuleMap map_sub(const ModuleMap& f, const ModuleMap& g);
ModuleMap map_scale(Complex s, const ModuleMap& f);

// Largest commutation defect against the base action; 0 for module maps.
double b_linearity_defect(const ModuleMap& t);

// Adjoint from the base-valued defining identity <t x, y> = <x, t* y>, solved
// as a linear system over the coordinates. Raises NotAdjointable (with the
// residual) when no solution meets tol; finite nondegenerate modules always
// admit one, so the error marks corrupted input.
ModuleMap adjoint_solve(const ModuleMap& t, double tol = kDefaultTol);
double adjoint_defect(const ModuleMap& t, const ModuleMap& t_adj);

// For t from the free module: the vector x = t(1) with t(b) = x b; verifies
// the representative reproduces t and inner(x, x) matches t* t within tol.
// Raises NoRepresentative when the checks fail (unreachable for valid maps on
// a unital base; kept for contract parity).
Vec compact_rep(const ModuleMap& t, double tol = 1e-10);
// Left multiplication as a map on the free module.
ModuleMap left_mult_map(const ModulePtr& free_mod, const Element& a);
// Value of a free-module endomorphism at the unit, as a base element.
Element map_to_element(const ModuleMap& t);

// C*-norm of an adjointable map: largest generalized singular value of the
// matrix with respect to the source/target scalar Grams. Agrees with the
// abstract norm because trace scalarization embeds the bounded maps
// isometrically.
double op_norm(const ModuleMap& t);
double map_norm_diff(const ModuleMap& f, const ModuleMap& g);
double self_adjoint_defect(const ModuleMap& t);

// T = T* within tol and the scalarized quadratic form bounded below by
// -tol * max(1, ||T||).
bool positive_part_check(const ModuleMap& t, double tol = kDefaultTol);
// Smallest generalized eigenvalue of a self-adjoint map.
double map_min_eigenvalue(const ModuleMap& t);

// Functional calculus for self-adjoint module maps via the scalar-Gram pencil.
ModuleMap map_calculus(const ModuleMap& t,
                       const std::function<double(double)>& f);
ModuleMap sqrt_map(const ModuleMap& t, double tol = kDefaultTol);

// Kronecker module: basis e_i (x) f_j ordered second factor fastest, Gram and
// action built blockwise; dimensions multiply exactly.
ModulePtr tensor_module(const ModulePtr& e1, const ModulePtr& e2);
ModuleMap tensor_map(const ModuleMap& f, const ModuleMap& g,
                     const ModulePtr& source, const ModulePtr& target);

// Generalized Hermitian pencil S x = lambda H x with H positive definite;
// vectors are H-orthonormal.
struct PencilEig {
  Eigen::VectorXd values;  // ascending
  Mat vectors;
};
PencilEig pencil_eig(const Mat& s, const Mat& h);

// Basis of {M : M commutes with the base action and with every given matrix},
// computed as an SVD null space; deterministic.
std::vector<Mat> commutant_basis(const ModuleRep& mod,
                                 const std::vector<Mat>& mats);

// Process-wide observer for the positive-map bound
// ||T v||^2 <= ||T|| * ||<T v, v>||; records the worst violation seen so the
// acceptance gate can assert it globally.
double positive_map_bound_violation(const ModuleMap& t, const Vec& v);
void observe_positive_map_bound(const ModuleMap& t, const Vec& v);
// Scalar-level overloads for operators on a plain Hilbert space.
double positive_map_bound_violation(const Mat& t, const Vec& v);
void observe_positive_map_bound(const Mat& t, const Vec& v);
double worst_positive_map_bound_violation();
long positive_map_bound_observations();
void reset_positive_map_bound_observer();

}  // namespace opweight
