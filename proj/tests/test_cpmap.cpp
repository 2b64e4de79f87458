#include "opweight/cpmap.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "opweight/algebra.hpp"
#include "opweight/errors.hpp"
#include "opweight/ksgns.hpp"
#include "opweight/sampling.hpp"

namespace opweight {
namespace {

Weight identity_weight(const AlgebraSpec& spec) {
  std::vector<Element> coeffs;
  coeffs.reserve(static_cast<std::size_t>(spec.dim()));
  for (int alpha = 0; alpha < spec.dim(); ++alpha) {
    coeffs.push_back(basis_element(spec, alpha));
  }
  return make_weight(spec, spec, unit(spec), coeffs);
}

// Trace on one 2x2 block into the scalars; its module has a 4-dim
// commutant, so sampled operators T are genuinely non-scalar.
Weight trace_weight() {
  const AlgebraSpec a{{2}};
  const AlgebraSpec b{{1}};
  std::vector<Element> coeffs;
  for (int alpha = 0; alpha < a.dim(); ++alpha) {
    Element v = zero(b);
    v.blocks[0](0, 0) = basis_element(a, alpha).blocks[0].trace();
    coeffs.push_back(v);
  }
  return make_weight(a, b, unit(a), coeffs);
}

// Sum of the three coordinates of C^3 into the scalars; module dim 3.
Weight coordinate_sum_weight() {
  const AlgebraSpec a{{1, 1, 1}};
  const AlgebraSpec b{{1}};
  std::vector<Element> coeffs(static_cast<std::size_t>(a.dim()), unit(b));
  return make_weight(a, b, unit(a), coeffs);
}

CpMap transpose_map() {
  const AlgebraSpec spec{{2}};
  CpMap m;
  m.source = spec;
  m.target = spec;
  for (int alpha = 0; alpha < spec.dim(); ++alpha) {
    Element e = basis_element(spec, alpha);
    e.blocks[0] = e.blocks[0].transpose().eval();
    m.coeffs.push_back(e);
  }
  return m;
}

Element quadratic_sum(const CpMap& m, const std::vector<Element>& as,
                      const std::vector<Element>& bs) {
  Element acc = zero(m.target);
  for (std::size_t j = 0; j < as.size(); ++j) {
    for (std::size_t i = 0; i < as.size(); ++i) {
      const Element val = cp_apply(m, mul(adjoint(as[j]), as[i]));
      acc = add(acc, mul(mul(adjoint(bs[j]), val), bs[i]));
    }
  }
  return acc;
}

ModuleMap map_on(const ModulePtr& mod, const Mat& mat) {
  ModuleMap t;
  t.source = mod;
  t.target = mod;
  t.mat = mat;
  return t;
}

TEST(AmplifiedBlocks, ParallelMatchesSerial) {
  Rng rng(3, "amplified-twin");
  const CpMap m = random_cp_map(AlgebraSpec{{2, 1}}, AlgebraSpec{{1, 2}}, rng);
  const std::vector<Mat> par = amplified_value_blocks(m);
  const std::vector<Mat> ser = amplified_value_blocks_serial(m);
  ASSERT_EQ(par.size(), ser.size());
  for (std::size_t l = 0; l < par.size(); ++l) {
    EXPECT_EQ((par[l] - ser[l]).norm(), 0.0);
  }
}

TEST(Verdicts, IdentityHomomorphismIsCompletelyPositive) {
  for (const AlgebraSpec& spec : {AlgebraSpec{{2}}, AlgebraSpec{{2, 1}}}) {
    const CpMap m = cp_from_weight(identity_weight(spec));
    EXPECT_TRUE(is_completely_positive(m));
    const CpVerdict v = cp_verdict(m);
    EXPECT_TRUE(v.cp);
    EXPECT_GE(v.min_eigenvalue, -1e-12);
    EXPECT_EQ(v.witness_block, -1);
    EXPECT_EQ(cp_star_defect(m), 0.0);
  }
  EXPECT_DOUBLE_EQ(cp_norm(cp_from_weight(identity_weight(AlgebraSpec{{2}}))),
                   1.0);
  EXPECT_DOUBLE_EQ(cp_norm(cp_from_weight(trace_weight())), 2.0);
}

TEST(Verdicts, TransposeHasNegativeAmplifiedDirection) {
  const CpMap m = transpose_map();
  EXPECT_FALSE(is_completely_positive(m));
  EXPECT_TRUE(is_strict(m));
  const CpVerdict v = cp_verdict(m);
  EXPECT_FALSE(v.cp);
  EXPECT_NEAR(v.min_eigenvalue, -1.0, 1e-9);
  EXPECT_LE(v.conj_defect, 1e-12);
  EXPECT_EQ(v.witness_block, 0);
  ASSERT_EQ(v.witness.size(), static_cast<std::size_t>(m.source.dim()));

  // The witness tuple certifies the failure through the quadratic form.
  std::vector<Element> as;
  for (int alpha = 0; alpha < m.source.dim(); ++alpha) {
    as.push_back(basis_element(m.source, alpha));
  }
  const Element sum = quadratic_sum(m, as, v.witness);
  EXPECT_LE(herm_defect(sum), 1e-12);
  EXPECT_LE(min_eigenvalue(sum), -0.4);
}

TEST(Verdicts, CompressionFormsAreCompletelyPositive) {
  Rng rng(9, "compression-cp");
  const std::vector<AlgebraSpec> sources = {{{2}}, {{2, 1}}, {{3}}};
  const std::vector<AlgebraSpec> targets = {{{2}}, {{1, 2}}, {{2}}};
  for (std::size_t k = 0; k < sources.size(); ++k) {
    for (int trial = 0; trial < 2; ++trial) {
      const CpMap m = random_cp_map(sources[k], targets[k], rng);
      EXPECT_TRUE(is_completely_positive(m));
      EXPECT_LE(cp_star_defect(m), 1e-10);
      EXPECT_TRUE(is_strict(m));
    }
  }
}

TEST(Verdicts, StarDefectDetectsAsymmetry) {
  const AlgebraSpec one{{1}};
  CpMap m;
  m.source = one;
  m.target = one;
  m.coeffs.push_back(scale(Complex(0.0, 1.0), unit(one)));
  EXPECT_NEAR(cp_star_defect(m), 2.0, 1e-15);
}

// Three routes to the same verdict: the amplified spectrum, the canonical
// module build with its recovered operator, and sampled quadratic forms.
TEST(Verdicts, TripleRouteNeverDisagrees) {
  Rng rng(21, "triple-route");
  std::vector<CpMap> maps;
  maps.push_back(random_cp_map(AlgebraSpec{{2}}, AlgebraSpec{{2}}, rng));
  maps.push_back(random_cp_map(AlgebraSpec{{2, 1}}, AlgebraSpec{{2}}, rng));
  maps.push_back(random_cp_map(AlgebraSpec{{3}}, AlgebraSpec{{1, 2}}, rng));
  maps.push_back(transpose_map());

  for (const CpMap& m : maps) {
    const bool route_spectrum = is_completely_positive(m);

    bool route_module = true;
    try {
      const Weight w = make_weight(m.source, m.target, unit(m.source), m.coeffs);
      const KsgnsTriplet t = build_canonical_ksgns(w);
      const DominatedMap dm = solve_T(cp_from_weight(w), t);
      route_module = map_norm_diff(dm.T, identity_map(t.E)) <= 1e-8;
    } catch (const NotCompletelyPositive&) {
      route_module = false;
    }

    bool found_negative = false;
    double scale_ref = 1.0 + cp_norm(m);
    for (int tuple = 0; tuple < 1000; ++tuple) {
      std::vector<Element> as, bs;
      for (int i = 0; i < 2; ++i) {
        as.push_back(random_element(m.source, rng));
        bs.push_back(random_element(m.target, rng));
      }
      const Element sum = quadratic_sum(m, as, bs);
      if (min_eigenvalue(sum) < -1e-8 * scale_ref * (1.0 + norm(sum))) {
        found_negative = true;
        break;
      }
    }
    const bool route_sampled = !found_negative;

    EXPECT_EQ(route_spectrum, route_module);
    if (route_spectrum) {
      EXPECT_TRUE(route_sampled);
    } else {
      EXPECT_TRUE(found_negative);
    }
  }
}

TEST(SolveT, WeightItselfGivesIdentityOperator) {
  const Weight w = identity_weight(AlgebraSpec{{2}});
  const KsgnsTriplet t = build_canonical_ksgns(w);
  const DominatedMap dm = solve_T(cp_from_weight(w), t);
  EXPECT_LE(map_norm_diff(dm.T, identity_map(t.E)), 1e-10);
  EXPECT_EQ(dm.null_dim, 0);
  const double vnorm = op_norm(dm.v);
  EXPECT_NEAR(vnorm * vnorm, 1.0, 1e-9);

  const DominatedMap half = solve_T(cp_scale(0.5, cp_from_weight(w)), t);
  EXPECT_LE((half.T.mat - 0.5 * Mat::Identity(t.E->dim, t.E->dim)).norm(),
            1e-10);
}

TEST(SolveT, RoundTripRecoversSampledOperator) {
  const Weight w = trace_weight();
  const KsgnsTriplet t = build_canonical_ksgns(w);
  CpFamilySampler sampler(w, t, 0.9, 5);
  for (int trial = 0; trial < 8; ++trial) {
    const DominatedMap f = sampler.sample_f();
    const DominatedMap back = solve_T(f.rho, t);
    EXPECT_LE(map_norm_diff(back.T, f.T), 1e-8);
    EXPECT_EQ(back.null_dim, 0);
  }
}

TEST(SolveT, LinearInTheMap) {
  const Weight w = trace_weight();
  const KsgnsTriplet t = build_canonical_ksgns(w);
  CpFamilySampler sampler(w, t, 0.9, 7);
  const DominatedMap f1 = sampler.sample_f();
  const DominatedMap f2 = sampler.sample_f();

  const DominatedMap sum = solve_T(cp_add(f1.rho, f2.rho), t);
  EXPECT_LE((sum.T.mat - (f1.T.mat + f2.T.mat)).norm(), 1e-10);

  const DominatedMap scaled = solve_T(cp_scale(0.37, f1.rho), t);
  EXPECT_LE((scaled.T.mat - 0.37 * f1.T.mat).norm(), 1e-10);
}

TEST(SolveT, ContractIdentitiesHold) {
  const Weight w = trace_weight();
  const KsgnsTriplet t = build_canonical_ksgns(w);
  CpFamilySampler sampler(w, t, 0.9, 13);
  for (int trial = 0; trial < 4; ++trial) {
    const DominatedMap f = sampler.sample_f();
    EXPECT_TRUE(is_strict(f.rho));

    for (const ModuleMap& pa : t.pi) {
      EXPECT_LE(op_norm_mat(f.T.mat * pa.mat - pa.mat * f.T.mat), 1e-9);
    }

    const ModuleMap root = sqrt_map(f.T);
    for (const Element& a : t.N_basis) {
      const double lhs = op_norm(compose(root, lambda_of(t, a)));
      const double rhs = norm(cp_apply(f.rho, mul(adjoint(a), a)));
      EXPECT_NEAR(lhs * lhs, rhs, 1e-8 * (1.0 + rhs));
    }

    const double vnorm = op_norm(f.v);
    EXPECT_NEAR(vnorm * vnorm, cp_norm(f.rho), 1e-8);

    const ModuleMap v_adj = adjoint_solve(f.v);
    for (int alpha = 0; alpha < w.A.dim(); ++alpha) {
      const Element got = map_to_element(
          compose(v_adj, compose(pi_of(t, basis_element(w.A, alpha)), f.v)));
      EXPECT_LE(norm_diff(got, f.rho.coeffs[static_cast<std::size_t>(alpha)]),
                1e-8);
    }
  }
}

TEST(SolveT, ConjugationByNoncentralUnitaryIsRejected) {
  const AlgebraSpec spec{{2}};
  const Weight w = identity_weight(spec);
  const KsgnsTriplet t = build_canonical_ksgns(w);

  Mat u(2, 2);
  u << 0, 1, 1, 0;
  CpMap rho;
  rho.source = spec;
  rho.target = spec;
  for (int alpha = 0; alpha < spec.dim(); ++alpha) {
    Element e = basis_element(spec, alpha);
    e.blocks[0] = (u * e.blocks[0] * u.adjoint()).eval();
    rho.coeffs.push_back(e);
  }
  EXPECT_TRUE(is_completely_positive(rho));
  EXPECT_THROW(solve_T(rho, t), NotInH);
}

TEST(Ordering, AgreesWithOperatorEigenvalues) {
  const Weight w = trace_weight();
  const KsgnsTriplet t = build_canonical_ksgns(w);
  CpFamilySampler sampler(w, t, 0.9, 23);
  for (int trial = 0; trial < 10; ++trial) {
    const DominatedMap f1 = sampler.sample_f();
    const DominatedMap f2 = sampler.sample_f();
    const Mat increment = 0.3 * f2.T.mat;
    const DominatedMap r1 = rho_from_T(t, f1.T);
    const DominatedMap r2 = rho_from_T(t, map_on(t.E, f1.T.mat + increment));

    EXPECT_TRUE(order_leq(r1.rho, r2.rho));
    EXPECT_TRUE(order_leq(r1.rho, r1.rho));
    EXPECT_TRUE(order_leq(cp_scale(0.2, r1.rho), cp_scale(0.7, r1.rho)));

    EXPECT_GE(map_min_eigenvalue(map_on(t.E, increment)), -1e-10);
    if (op_norm_mat(increment) > 1e-6) {
      EXPECT_FALSE(order_leq(r2.rho, r1.rho));
      EXPECT_LT(map_min_eigenvalue(map_on(t.E, -increment)), 0.0);
    }
  }
}

TEST(Join, ScalarClosedForm) {
  const Weight w = identity_weight(AlgebraSpec{{1}});
  const KsgnsTriplet t = build_canonical_ksgns(w);
  ASSERT_EQ(t.E->dim, 1);
  CpFamilySampler sampler(w, t, 0.0, 1);
  const DominatedMap full = sampler.scaled_weight(1.0);

  const DominatedMap explicit_gamma =
      directed_join(t, full, full, 0.0, 0.0, 0.5);
  EXPECT_NEAR(explicit_gamma.T.mat(0, 0).real(), 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(explicit_gamma.T.mat(0, 0).imag(), 0.0, 1e-12);

  // The default gamma for scales (0, 0) is 1/2, the same closed form.
  const DominatedMap defaulted = directed_join(t, full, full, 0.0, 0.0);
  EXPECT_NEAR(defaulted.T.mat(0, 0).real(), 2.0 / 3.0, 1e-12);

  // 1/2 = gamma * T_k <= 2/3 <= gamma / (1 - gamma) * 2 = 2.
  EXPECT_LE(0.5, explicit_gamma.T.mat(0, 0).real() + 1e-12);
  EXPECT_LE(explicit_gamma.T.mat(0, 0).real(), 2.0 + 1e-12);

  EXPECT_THROW(directed_join(t, full, full, 0.0, 0.0, 1.0), GammaOutOfRange);
  EXPECT_THROW(directed_join(t, full, full, 0.6, 0.0, 0.5), GammaOutOfRange);
  EXPECT_THROW(directed_join(t, full, full, 1.0, 0.0), GammaOutOfRange);
}

TEST(Join, ZeroMemberGivesScaledOperator) {
  const Weight w = trace_weight();
  const KsgnsTriplet t = build_canonical_ksgns(w);
  CpFamilySampler sampler(w, t, 0.9, 31);
  const DominatedMap f1 = sampler.sample_f();
  const DominatedMap zero_member = sampler.scaled_weight(0.0);

  const DominatedMap defaulted = directed_join(t, f1, zero_member, 0.6, 0.0);
  EXPECT_LE((defaulted.T.mat - 0.8 * f1.T.mat).norm(), 1e-10);

  const DominatedMap explicit_gamma =
      directed_join(t, f1, zero_member, 0.6, 0.0, 0.7);
  EXPECT_LE((explicit_gamma.T.mat - 0.7 * f1.T.mat).norm(), 1e-10);
}

TEST(Join, OperatorInequalitiesOnThreeDimModule) {
  const Weight w = coordinate_sum_weight();
  const KsgnsTriplet t = build_canonical_ksgns(w);
  ASSERT_EQ(t.E->dim, 3);
  CpFamilySampler sampler(w, t, 0.9, 41);
  const double gamma = 0.95;
  const double lam = 0.9 / gamma;
  for (int trial = 0; trial < 20; ++trial) {
    const DominatedMap f1 = sampler.sample_f();
    const DominatedMap f2 = sampler.sample_f();
    const DominatedMap joined = directed_join(t, f1, f2, 0.9, 0.9);

    const Mat tm = joined.T.mat;
    EXPECT_GE(map_min_eigenvalue(map_on(t.E, tm - gamma * f1.T.mat)), -1e-10);
    EXPECT_GE(map_min_eigenvalue(map_on(t.E, tm - gamma * f2.T.mat)), -1e-10);
    const Mat upper = gamma / (1.0 - gamma) * (f1.T.mat + f2.T.mat);
    EXPECT_GE(map_min_eigenvalue(map_on(t.E, upper - tm)), -1e-10);

    EXPECT_TRUE(order_leq(cp_scale(0.9, f1.rho), cp_scale(lam, joined.rho),
                          1e-8));
    EXPECT_TRUE(order_leq(cp_scale(0.9, f2.rho), cp_scale(lam, joined.rho),
                          1e-8));
  }
}

TEST(Cayley, ClosedFormsAndRejections) {
  const AlgebraSpec spec{{2}};
  const Element half = cayley_monotone(unit(spec));
  EXPECT_LE(norm_diff(half, scale(0.5, unit(spec))), 1e-12);
  EXPECT_LE(norm(cayley_monotone(zero(spec))), 1e-15);

  Element diag = zero(spec);
  diag.blocks[0](0, 0) = 2.0;
  diag.blocks[0](1, 1) = 3.0;
  Element want = zero(spec);
  want.blocks[0](0, 0) = 2.0 / 3.0;
  want.blocks[0](1, 1) = 3.0 / 4.0;
  EXPECT_LE(norm_diff(cayley_monotone(diag), want), 1e-12);

  Element negative = zero(spec);
  negative.blocks[0](0, 0) = -1.0;
  negative.blocks[0](1, 1) = 1.0;
  EXPECT_THROW(cayley_monotone(negative), NotPositive);
  EXPECT_THROW(cayley_monotone(basis_element(spec, 1)), NotPositive);

  const ModulePtr free_mod = free_module(spec);
  const ModuleMap half_map = cayley_monotone(identity_map(free_mod));
  EXPECT_LE(map_norm_diff(half_map,
                          map_on(free_mod, 0.5 * Mat::Identity(4, 4))),
            1e-12);
  EXPECT_THROW(
      cayley_monotone(map_on(free_mod, -Mat::Identity(4, 4))),
      NotPositive);
}

TEST(Cayley, MonotoneOnOrderedPairs) {
  Rng rng(47, "cayley-monotone");
  const AlgebraSpec spec{{3}};
  double worst = 0.0;
  for (int trial = 0; trial < 500; ++trial) {
    const Element s1 = random_positive(spec, rng);
    const Element s2 = add(s1, random_positive(spec, rng));
    const Element gap = sub(cayley_monotone(s2), cayley_monotone(s1));
    worst = std::min(worst, min_eigenvalue(gap));
  }
  EXPECT_GE(worst, -1e-9);
}

TEST(Cayley, ElementAndModuleRoutesAgree) {
  Rng rng(53, "cayley-routes");
  const AlgebraSpec spec{{2, 1}};
  const ModulePtr free_mod = free_module(spec);
  for (int trial = 0; trial < 5; ++trial) {
    const Element x = random_positive(spec, rng);
    const ModuleMap via_element = left_mult_map(free_mod, cayley_monotone(x));
    const ModuleMap via_map = cayley_monotone(left_mult_map(free_mod, x));
    EXPECT_LE(map_norm_diff(via_element, via_map), 1e-10);
  }
}

TEST(GsLimit, VerifiesSupremumAndRejectsGap) {
  const Weight w = identity_weight(AlgebraSpec{{2}});
  const KsgnsTriplet t = build_canonical_ksgns(w);
  CpFamilySampler sampler(w, t, 0.9, 11);
  Rng rng(11, "gs-limit");
  const Element a = random_positive(w.A, rng);
  const Element b = random_element(w.B, rng);
  const Element x = mul(mul(adjoint(b), weight_apply(w, a)), b);
  EXPECT_TRUE(gs_limit_check(a, b, x, sampler));
  EXPECT_FALSE(gs_limit_check(a, b, add(x, unit(w.B)), sampler));
  EXPECT_THROW(gs_limit_check(sub(zero(w.A), unit(w.A)), b, x, sampler),
               NotPositive);
}

TEST(Sampler, DeterministicAndBounded) {
  const Weight w = trace_weight();
  const KsgnsTriplet t = build_canonical_ksgns(w);

  CpFamilySampler s1(w, t, 0.9, 77);
  CpFamilySampler s2(w, t, 0.9, 77);
  CpFamilySampler s3(w, t, 0.9, 78);
  const Mat t1 = s1.sample_f().T.mat;
  EXPECT_EQ((t1 - s2.sample_f().T.mat).norm(), 0.0);
  EXPECT_GT((t1 - s3.sample_f().T.mat).norm(), 1e-8);

  CpFamilySampler sampler(w, t, 0.9, 79);
  for (int trial = 0; trial < 20; ++trial) {
    const DominatedMap f = sampler.sample_f();
    EXPECT_GE(map_min_eigenvalue(f.T), -1e-10);
    EXPECT_LE(op_norm(f.T), 1.0 + 1e-10);
    for (const ModuleMap& pa : t.pi) {
      EXPECT_LE(op_norm_mat(f.T.mat * pa.mat - pa.mat * f.T.mat), 1e-9);
    }
    const DominatedMap g = sampler.sample_g();
    EXPECT_LE(op_norm(g.T), 0.9 + 1e-10);
  }

  const DominatedMap scaled = sampler.scaled_weight(0.3);
  EXPECT_EQ((scaled.T.mat - 0.3 * Mat::Identity(t.E->dim, t.E->dim)).norm(),
            0.0);

  EXPECT_THROW(CpFamilySampler(w, t, 1.0, 1), GammaOutOfRange);
}

}  // namespace
}  // namespace opweight
