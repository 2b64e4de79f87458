#include "opweight/verify.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "opweight/algebra.hpp"
#include "opweight/errors.hpp"
#include "opweight/ksgns.hpp"
#include "opweight/rng.hpp"
#include "opweight/sampling.hpp"

namespace opweight {
namespace {

// Evaluation at the (0, 0) entry of the first block; positive because that
// entry of x* x is a column norm.
Functional corner_functional(const AlgebraSpec& spec) {
  Functional f;
  f.A = spec;
  for (int alpha = 0; alpha < spec.dim(); ++alpha) {
    f.table.push_back(basis_element(spec, alpha).blocks[0](0, 0));
  }
  return f;
}

// Blockwise trace against a strictly positive density; faithful by
// construction.
Functional density_functional(const AlgebraSpec& spec, Rng& rng) {
  const Element d = add(random_positive(spec, rng), 0.05 * unit(spec));
  Functional f;
  f.A = spec;
  for (int alpha = 0; alpha < spec.dim(); ++alpha) {
    const Element e = basis_element(spec, alpha);
    Complex v = 0.0;
    for (std::size_t b = 0; b < e.blocks.size(); ++b) {
      v += (d.blocks[b] * e.blocks[b]).trace();
    }
    f.table.push_back(v);
  }
  return f;
}

std::vector<Element> full_basis(const AlgebraSpec& spec) {
  std::vector<Element> out;
  for (int alpha = 0; alpha < spec.dim(); ++alpha) {
    out.push_back(basis_element(spec, alpha));
  }
  return out;
}

// values(i, j) = scale * theta(b_j* b_i), the form of scale times the unit
// operator, computed through the functional rather than the cyclic space.
Mat theta_form_values(const Functional& f, const std::vector<Element>& basis,
                      double scale) {
  const int n = static_cast<int>(basis.size());
  Mat values(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      values(i, j) =
          scale * functional_apply(f, mul(adjoint(basis[j]), basis[i]));
    }
  }
  return values;
}

SesquilinearForm make_form(const Functional& theta,
                           const std::vector<Element>& basis,
                           const Mat& values) {
  SesquilinearForm s;
  s.A = theta.A;
  s.basis = basis;
  s.values = values;
  s.theta = theta;
  return s;
}

// Random commutant operator with spectrum inside [0, 1]. The commutant is
// star closed and unital, so the Hermitian part and the affine rescale stay
// inside it.
Mat random_commutant_operator(const GnsData& g, Rng& rng) {
  const std::vector<Mat> cb = gns_commutant_basis(g);
  Mat h = Mat::Zero(g.dim, g.dim);
  for (const Mat& c : cb) {
    h += Complex(rng.normal(), rng.normal()) * c;
  }
  h = (0.5 * (h + h.adjoint())).eval();
  const HermEig eig = herm_eig(h);
  const double lo = eig.eigenvalues.minCoeff();
  const double hi = eig.eigenvalues.maxCoeff();
  const double span = std::max(hi - lo, 1e-8);
  return ((h - lo * Mat::Identity(g.dim, g.dim)) / span).eval();
}

Mat random_psd_mat(int n, Rng& rng) {
  Mat g(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      g(i, j) = Complex(rng.normal(), rng.normal());
    }
  }
  Mat p = g * g.adjoint();
  return (p / std::max(op_norm_mat(p), 1e-12)).eval();
}

TEST(Gns, TraceRepresentationIsFaithful) {
  for (const auto& spec : {AlgebraSpec{{2}}, AlgebraSpec{{3}}, AlgebraSpec{{2, 1}}}) {
    const Functional f = trace_functional(spec);
    const GnsData g = gns(f);
    EXPECT_EQ(g.dim, spec.dim());

    Rng rng(5, "gns-trace");
    for (int t = 0; t < 4; ++t) {
      const Element x = random_element(spec, rng);
      const Complex via_rep = g.v.dot(gns_pi_of(g, x) * g.v);
      EXPECT_NEAR(std::abs(via_rep - functional_apply(f, x)), 0.0, 1e-10);
    }

    const Element a = random_element(spec, rng);
    const Element b = random_element(spec, rng);
    const Mat hom_gap =
        gns_pi_of(g, mul(a, b)) - gns_pi_of(g, a) * gns_pi_of(g, b);
    EXPECT_LE(op_norm_mat(hom_gap), 1e-9);
    EXPECT_LE(op_norm_mat(gns_pi_of(g, unit(spec)) -
                          Mat::Identity(g.dim, g.dim)),
              1e-10);
  }
}

TEST(Gns, CornerEvaluationHasColumnDimension) {
  const AlgebraSpec spec{{2}};
  const GnsData g = gns(corner_functional(spec));
  EXPECT_EQ(g.dim, 2);

  const GnsData g3 = gns(corner_functional(AlgebraSpec{{3}}));
  EXPECT_EQ(g3.dim, 3);
}

TEST(Gns, ZeroFunctionalCollapses) {
  const GnsData g = gns(zero_functional(AlgebraSpec{{2, 1}}));
  EXPECT_EQ(g.dim, 0);
  EXPECT_EQ(g.v.size(), 0);
}

TEST(Gns, NegativeOrAsymmetricTablesRejected) {
  const AlgebraSpec spec{{2}};
  Functional neg = functional_scale(-1.0, trace_functional(spec));
  EXPECT_THROW(gns(neg), NotPositiveFunctional);

  Functional skew = trace_functional(spec);
  for (Complex& v : skew.table) v *= Complex(0.0, 1.0);
  EXPECT_THROW(gns(skew), NotPositiveFunctional);
}

TEST(Gns, CommutantDimensionsMatchBlockStructure) {
  // Left multiplication on the trace space commutes exactly with the right
  // multiplications, one full matrix block each.
  const GnsData trace2 = gns(trace_functional(AlgebraSpec{{2}}));
  const std::vector<Mat> cb = gns_commutant_basis(trace2);
  EXPECT_EQ(cb.size(), 4u);

  const GnsData corner = gns(corner_functional(AlgebraSpec{{2}}));
  EXPECT_EQ(gns_commutant_basis(corner).size(), 1u);

  const GnsData mixed = gns(trace_functional(AlgebraSpec{{2, 1}}));
  EXPECT_EQ(gns_commutant_basis(mixed).size(), 5u);

  for (std::size_t k = 0; k < cb.size(); ++k) {
    for (int alpha = 0; alpha < trace2.theta.A.dim(); ++alpha) {
      const Mat gap = cb[k] * trace2.pi[alpha] - trace2.pi[alpha] * cb[k];
      EXPECT_LE(op_norm_mat(gap), 1e-10);
    }
    for (std::size_t l = 0; l < cb.size(); ++l) {
      const Complex ip = (cb[l].adjoint() * cb[k]).trace();
      EXPECT_NEAR(std::abs(ip - (k == l ? 1.0 : 0.0)), 0.0, 1e-10);
    }
  }
}

TEST(Reconstruct, FullFormGivesUnitOperator) {
  const AlgebraSpec spec{{2}};
  const Functional theta = trace_functional(spec);
  const std::vector<Element> basis = full_basis(spec);
  const SesquilinearForm s =
      make_form(theta, basis, theta_form_values(theta, basis, 1.0));

  const ReconstructedOmega r = reconstruct_omega(s);
  EXPECT_LE(op_norm_mat(r.T - Mat::Identity(r.rep.dim, r.rep.dim)), 1e-8);
  EXPECT_LE(r.residual, 1e-10);
  for (int alpha = 0; alpha < spec.dim(); ++alpha) {
    EXPECT_NEAR(std::abs(r.omega.table[alpha] - theta.table[alpha]), 0.0,
                1e-10);
  }
}

TEST(Reconstruct, ZeroFormGivesZero) {
  const AlgebraSpec spec{{2}};
  const Functional theta = trace_functional(spec);
  const std::vector<Element> basis = full_basis(spec);
  const SesquilinearForm s = make_form(
      theta, basis, Mat::Zero(static_cast<int>(basis.size()),
                              static_cast<int>(basis.size())));

  const ReconstructedOmega r = reconstruct_omega(s);
  EXPECT_LE(op_norm_mat(r.T), 1e-10);
  for (const Complex& v : r.omega.table) {
    EXPECT_NEAR(std::abs(v), 0.0, 1e-10);
  }
}

TEST(Reconstruct, HalfFormScalesFunctional) {
  const AlgebraSpec spec{{2, 1}};
  const Functional theta = trace_functional(spec);
  const std::vector<Element> basis = full_basis(spec);
  const SesquilinearForm s =
      make_form(theta, basis, theta_form_values(theta, basis, 0.5));

  const ReconstructedOmega r = reconstruct_omega(s);
  const Functional expected = functional_scale(0.5, theta);
  for (int alpha = 0; alpha < spec.dim(); ++alpha) {
    EXPECT_NEAR(std::abs(r.omega.table[alpha] - expected.table[alpha]), 0.0,
                1e-10);
  }
  EXPECT_LE(op_norm_mat(r.T - 0.5 * Mat::Identity(r.rep.dim, r.rep.dim)),
            1e-8);
}

TEST(Reconstruct, CommutantOperatorsRoundTripOnTheFullBasis) {
  const AlgebraSpec spec{{2, 1}};
  Rng rng(17, "reconstruct-full");
  for (int trial = 0; trial < 8; ++trial) {
    const Functional theta = density_functional(spec, rng);
    const GnsData g = gns(theta);
    const Mat t0 = random_commutant_operator(g, rng);
    const std::vector<Element> basis = full_basis(spec);
    const SesquilinearForm s = form_from_operator(g, basis, t0);

    // Faithful functional and full basis: the classes span the cyclic space
    // and the reconstruction is the planted operator itself.
    const ReconstructedOmega r = reconstruct_omega(s);
    EXPECT_LE(op_norm_mat(r.T - t0), 1e-8);
    EXPECT_LE(r.residual, 1e-8);

    for (std::size_t i = 0; i < basis.size(); ++i) {
      for (std::size_t j = 0; j < basis.size(); ++j) {
        const Complex lhs = functional_apply(
            r.omega, mul(adjoint(basis[j]), basis[i]));
        EXPECT_NEAR(std::abs(lhs - s.values(static_cast<int>(i),
                                            static_cast<int>(j))),
                    0.0, 1e-8);
      }
    }
    const Mat gap = functional_gram(functional_sub(theta, r.omega));
    EXPECT_GE(min_herm_eigenvalue(0.5 * (gap + gap.adjoint())), -1e-9);
  }
}

TEST(Reconstruct, IdealBasisFormsStayDominatedAndCommuting) {
  const AlgebraSpec spec{{2, 1}};
  Rng rng(29, "reconstruct-ideal");
  int done = 0;
  while (done < 6) {
    const Element p = random_projection(spec, rng);
    const std::vector<Element> basis = left_ideal_basis(spec, p);
    if (basis.empty()) continue;
    const Functional theta = density_functional(spec, rng);
    const GnsData g = gns(theta);
    const Mat t0 = random_commutant_operator(g, rng);
    const SesquilinearForm s = form_from_operator(g, basis, t0);

    const ReconstructedOmega r = reconstruct_omega(s);
    EXPECT_GE(min_herm_eigenvalue(0.5 * (r.T + r.T.adjoint())), -1e-9);
    EXPECT_LE(op_norm_mat(r.T), 1.0 + 1e-9);
    for (int alpha = 0; alpha < spec.dim(); ++alpha) {
      EXPECT_LE(op_norm_mat(r.T * g.pi[alpha] - g.pi[alpha] * r.T), 1e-9);
    }
    const Mat gap = functional_gram(functional_sub(theta, r.omega));
    EXPECT_GE(min_herm_eigenvalue(0.5 * (gap + gap.adjoint())), -1e-9);
    for (std::size_t i = 0; i < basis.size(); ++i) {
      for (std::size_t j = 0; j < basis.size(); ++j) {
        const Complex lhs = functional_apply(
            r.omega, mul(adjoint(basis[j]), basis[i]));
        EXPECT_NEAR(std::abs(lhs - s.values(static_cast<int>(i),
                                            static_cast<int>(j))),
                    0.0, 1e-8);
      }
    }
    ++done;
  }
}

TEST(Reconstruct, PermutedBasisGivesSameFunctional) {
  const AlgebraSpec spec{{2}};
  Rng rng(31, "reconstruct-permuted");
  const Functional theta = density_functional(spec, rng);
  const GnsData g = gns(theta);
  const Mat t0 = random_commutant_operator(g, rng);

  const std::vector<Element> basis = full_basis(spec);
  std::vector<Element> permuted(basis.rbegin(), basis.rend());

  const ReconstructedOmega r1 =
      reconstruct_omega(form_from_operator(g, basis, t0));
  const ReconstructedOmega r2 =
      reconstruct_omega(form_from_operator(g, permuted, t0));
  for (int alpha = 0; alpha < spec.dim(); ++alpha) {
    EXPECT_NEAR(std::abs(r1.omega.table[alpha] - r2.omega.table[alpha]), 0.0,
                1e-10);
  }
  EXPECT_LE(op_norm_mat(r1.T - r2.T), 1e-10);
}

TEST(Reconstruct, ExcessiveOrNegativeFormsRejected) {
  const AlgebraSpec spec{{2}};
  const Functional theta = trace_functional(spec);
  const std::vector<Element> basis = full_basis(spec);

  const SesquilinearForm doubled =
      make_form(theta, basis, theta_form_values(theta, basis, 2.0));
  EXPECT_THROW(reconstruct_omega(doubled), DominationViolated);

  const SesquilinearForm negated =
      make_form(theta, basis, theta_form_values(theta, basis, -1.0));
  EXPECT_THROW(reconstruct_omega(negated), NotPositive);
}

std::vector<Vec> standard_probes(int dim) {
  std::vector<Vec> probes;
  for (int i = 0; i < dim; ++i) {
    Vec e = Vec::Zero(dim);
    e(i) = 1.0;
    probes.push_back(e);
  }
  probes.push_back(Vec::Constant(dim, 1.0 / std::sqrt(double(dim))));
  return probes;
}

TEST(StrongEquiv, FreeModuleLeftMultChainConverges) {
  // Left multiplications on the algebra as a module over itself; the chain
  // lambda_k T climbs to T.
  const AlgebraSpec spec{{2}};
  const ModulePtr free = free_module(spec);
  Rng rng(41, "strong-free");
  const Element a = add(random_positive(spec, rng), 0.1 * unit(spec));
  const ModuleMap t = left_mult_map(free, a);

  std::vector<ModuleMap> family;
  for (int k = 1; k <= 30; ++k) {
    family.push_back(map_scale(1.0 - std::ldexp(1.0, -k), t));
  }
  EXPECT_TRUE(strong_convergence_equiv(family, t, standard_probes(free->dim)));

  const std::vector<ModuleMap> stalled(family.begin(), family.begin() + 3);
  EXPECT_FALSE(
      strong_convergence_equiv(stalled, t, standard_probes(free->dim)));
}

TEST(StrongEquiv, ConstantGapFails) {
  const AlgebraSpec spec{{2}};
  const ModulePtr free = free_module(spec);
  const ModuleMap t = left_mult_map(free, unit(spec));
  const std::vector<ModuleMap> family(3, map_scale(0.5, t));
  EXPECT_FALSE(strong_convergence_equiv(family, t, standard_probes(free->dim)));
}

TEST(StrongEquiv, TailSumChainConverges) {
  const AlgebraSpec spec{{3}};
  const ModulePtr free = free_module(spec);
  Rng rng(43, "strong-tail");

  ModuleMap acc = left_mult_map(free, 0.2 * unit(spec));
  std::vector<ModuleMap> family;
  for (int k = 1; k <= 30; ++k) {
    const Element inc = std::ldexp(1.0, -k) * random_positive(spec, rng);
    acc = map_add(acc, left_mult_map(free, inc));
    family.push_back(acc);
  }
  EXPECT_TRUE(
      strong_convergence_equiv(family, family.back(),
                               standard_probes(free->dim)));
}

TEST(StrongEquiv, ViolationsThrow) {
  const AlgebraSpec spec{{2}};
  const ModulePtr free = free_module(spec);
  const ModuleMap t = left_mult_map(free, unit(spec));
  const std::vector<Vec> probes = standard_probes(free->dim);

  const std::vector<ModuleMap> above(1, map_scale(1.5, t));
  EXPECT_THROW(strong_convergence_equiv(above, t, probes), DominationViolated);

  const std::vector<ModuleMap> negative(1, map_scale(-0.1, t));
  EXPECT_THROW(strong_convergence_equiv(negative, t, probes), NotPositive);

  EXPECT_THROW(strong_convergence_equiv({}, t, probes), Error);
}

TEST(MonotoneLimit, ReturnsLastAndCertifies) {
  const AlgebraSpec spec{{2}};
  const ModulePtr free = free_module(spec);
  Rng rng(47, "monotone-limit");

  const ModuleMap x = left_mult_map(free, random_positive(spec, rng));
  const std::vector<ModuleMap> constant(4, x);
  EXPECT_LE(map_norm_diff(monotone_limit(constant), x), 1e-12);

  std::vector<ModuleMap> scaled;
  for (int k = 1; k <= 30; ++k) {
    scaled.push_back(map_scale(1.0 - std::ldexp(1.0, -k),
                               identity_map(free)));
  }
  EXPECT_LE(map_norm_diff(monotone_limit(scaled), identity_map(free)), 1e-8);

  ModuleMap acc = left_mult_map(free, 0.1 * unit(spec));
  std::vector<ModuleMap> sums;
  for (int k = 1; k <= 6; ++k) {
    acc = map_add(acc, left_mult_map(
                           free, std::ldexp(1.0, -k) *
                                     random_positive(spec, rng)));
    sums.push_back(acc);
  }
  EXPECT_LE(map_norm_diff(monotone_limit(sums), sums.back()), 1e-12);

  const std::vector<ModuleMap> dropping = {x, map_scale(0.5, x)};
  EXPECT_THROW(monotone_limit(dropping), NotMonotone);
}

TEST(Observer, RecordsWorstRelativeDefect) {
  reset_positive_map_bound_observer();
  EXPECT_EQ(positive_map_bound_observations(), 0);
  EXPECT_EQ(worst_positive_map_bound_violation(), 0.0);

  Rng rng(53, "observer");
  const Mat p = random_psd_mat(3, rng);
  for (const Vec& v : standard_probes(3)) {
    observe_positive_map_bound(p, v);
  }
  EXPECT_EQ(positive_map_bound_observations(), 4);
  EXPECT_LE(worst_positive_map_bound_violation(), 1e-12);

  const AlgebraSpec spec{{2}};
  const ModulePtr free = free_module(spec);
  const ModuleMap t = left_mult_map(free, random_positive(spec, rng));
  for (const Vec& v : standard_probes(free->dim)) {
    observe_positive_map_bound(t, v);
  }
  EXPECT_EQ(positive_map_bound_observations(), 9);
  EXPECT_LE(worst_positive_map_bound_violation(), 1e-12);

  // A nilpotent operator breaks the bound on the second coordinate, which
  // shows the observer measures the inequality and not a tautology.
  Mat nil = Mat::Zero(2, 2);
  nil(0, 1) = 1.0;
  Vec e2 = Vec::Zero(2);
  e2(1) = 1.0;
  observe_positive_map_bound(nil, e2);
  EXPECT_GE(worst_positive_map_bound_violation(), 0.9);

  reset_positive_map_bound_observer();
  EXPECT_EQ(positive_map_bound_observations(), 0);
}

}  // namespace
}  // namespace opweight
