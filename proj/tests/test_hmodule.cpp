#include "opweight/hmodule.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "opweight/errors.hpp"
#include "opweight/rng.hpp"

namespace opweight {
namespace {

const AlgebraSpec kSpec2{{2}};
const AlgebraSpec kSpec12{{1, 2}};

Element random_element(const AlgebraSpec& spec, Rng& rng) {
  Element x = zero(spec);
  for (int k = 0; k < spec.block_count(); ++k) {
    const int n = spec.block_dims[k];
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) x.blocks[k](i, j) = rng.cnormal();
  }
  return x;
}

Vec random_vec(int n, Rng& rng) {
  Vec v(n);
  for (int i = 0; i < n; ++i) v(i) = rng.cnormal();
  return v;
}

TEST(FreeModuleTest, InnerMatchesStarProduct) {
  Rng rng(11, "hmodule/free-inner");
  const ModulePtr mod = free_module(kSpec12);
  for (int rep = 0; rep < 50; ++rep) {
    const Element x = random_element(kSpec12, rng);
    const Element y = random_element(kSpec12, rng);
    // Oracle: <x, y> = y* x computed directly in the algebra.
    const Element oracle = mul(adjoint(y), x);
    const Element got =
        inner(*mod, coords(kSpec12, x), coords(kSpec12, y));
    EXPECT_LE(norm_diff(got, oracle), 1e-12 * std::max(1.0, norm(oracle)));
  }
}

TEST(FreeModuleTest, ValidatesUnderFullChecks) {
  const ModulePtr mod = free_module(kSpec12);
  EXPECT_NO_THROW(make_module(mod->base, mod->dim, mod->action, mod->gram));
  EXPECT_LE((mod->scalar_gram - Mat::Identity(mod->dim, mod->dim)).norm(),
            1e-12);
}

TEST(FreeModuleTest, ActionIsRightMultiplication) {
  Rng rng(11, "hmodule/free-action");
  const ModulePtr mod = free_module(kSpec12);
  for (int rep = 0; rep < 30; ++rep) {
    const Element x = random_element(kSpec12, rng);
    const Element b = random_element(kSpec12, rng);
    const Vec lhs = action_of(*mod, b) * coords(kSpec12, x);
    const Vec rhs = coords(kSpec12, mul(x, b));
    EXPECT_LE((lhs - rhs).norm(), 1e-12 * std::max(1.0, rhs.norm()));
  }
}

TEST(ModuleAxiomsTest, InnerCovariance) {
  Rng rng(11, "hmodule/covariance");
  const ModulePtr mod = free_module(kSpec12);
  const ModulePtr prod = tensor_module(mod, free_module(kSpec2));
  for (const ModulePtr& m : {mod, prod}) {
    for (int rep = 0; rep < 30; ++rep) {
      const Vec x = random_vec(m->dim, rng);
      const Vec y = random_vec(m->dim, rng);
      const Element b = random_element(m->base, rng);
      const double scale = std::max(1.0, vec_norm(*m, x) * vec_norm(*m, y) *
                                             (1.0 + norm(b)));
      // <x b, y> = <x, y> b
      EXPECT_LE(norm_diff(inner(*m, action_of(*m, b) * x, y),
                          mul(inner(*m, x, y), b)),
                1e-10 * scale);
      // <x, y b> = b* <x, y>
      EXPECT_LE(norm_diff(inner(*m, x, action_of(*m, b) * y),
                          mul(adjoint(b), inner(*m, x, y))),
                1e-10 * scale);
      // <x, y>* = <y, x>
      EXPECT_LE(norm_diff(adjoint(inner(*m, x, y)), inner(*m, y, x)),
                1e-10 * scale);
      EXPECT_TRUE(is_positive(inner(*m, x, x), 1e-9));
    }
  }
}

TEST(ModuleAxiomsTest, ScalarCauchySchwarz) {
  Rng rng(11, "hmodule/cauchy");
  const ModulePtr mod = free_module(kSpec12);
  for (int rep = 0; rep < 100; ++rep) {
    const Vec x = random_vec(mod->dim, rng);
    const Vec y = random_vec(mod->dim, rng);
    const double sxy = std::abs(scalar_inner(*mod, x, y));
    const double sxx = scalar_inner(*mod, x, x).real();
    const double syy = scalar_inner(*mod, y, y).real();
    EXPECT_LE(sxy * sxy, sxx * syy * (1.0 + 1e-10) + 1e-12);
  }
}

TEST(ModuleMapTest, AdjointOfLeftMultIsStarOracle) {
  Rng rng(11, "hmodule/adjoint");
  const ModulePtr mod = free_module(kSpec12);
  for (int rep = 0; rep < 30; ++rep) {
    const Element a = random_element(kSpec12, rng);
    const ModuleMap t = left_mult_map(mod, a);
    const ModuleMap t_adj = adjoint_solve(t);
    // Oracle: the adjoint of left multiplication is left multiplication by a*.
    EXPECT_LE(map_norm_diff(t_adj, left_mult_map(mod, adjoint(a))),
              1e-9 * std::max(1.0, norm(a)));
    EXPECT_LE(adjoint_defect(t, t_adj), 1e-9 * std::max(1.0, norm(a)));
    // Involution within 1e-10.
    const ModuleMap t_back = adjoint_solve(t_adj);
    EXPECT_LE(map_norm_diff(t_back, t), 1e-10 * std::max(1.0, op_norm(t)));
  }
}

TEST(ModuleMapTest, CompactRepRecoversLeftFactor) {
  Rng rng(11, "hmodule/compact");
  const ModulePtr mod = free_module(kSpec12);
  for (int rep = 0; rep < 30; ++rep) {
    const Element a = random_element(kSpec12, rng);
    const ModuleMap t = left_mult_map(mod, a);
    const Vec x = compact_rep(t);
    EXPECT_LE((x - coords(kSpec12, a)).norm(), 1e-10 * std::max(1.0, norm(a)));
    const Element tt = map_to_element(compose(adjoint_solve(t), t));
    EXPECT_LE(norm_diff(tt, inner(*mod, x, x)),
              1e-10 * std::max(1.0, norm(a) * norm(a)));
  }
}

TEST(ModuleMapTest, OpNormMatchesCStarNorm) {
  Rng rng(11, "hmodule/opnorm");
  const ModulePtr mod = free_module(kSpec12);
  for (int rep = 0; rep < 30; ++rep) {
    const Element a = random_element(kSpec12, rng);
    const ModuleMap t = left_mult_map(mod, a);
    // Oracle: ||L_a|| equals the algebra norm of a.
    EXPECT_NEAR(op_norm(t), norm(a), 1e-9 * std::max(1.0, norm(a)));
    // C*-identity at the map level.
    const double nt = op_norm(t);
    const double ntt = op_norm(compose(adjoint_solve(t), t));
    EXPECT_NEAR(nt * nt, ntt, 1e-8 * std::max(1.0, ntt));
  }
}

TEST(ModuleMapTest, PositivePartCheck) {
  Rng rng(11, "hmodule/positive");
  const ModulePtr mod = free_module(kSpec12);
  for (int rep = 0; rep < 30; ++rep) {
    const Element a = random_element(kSpec12, rng);
    const ModuleMap t = left_mult_map(mod, a);
    const ModuleMap tt = compose(adjoint_solve(t), t);
    EXPECT_TRUE(positive_part_check(tt, 1e-9));
    const ModuleMap shifted = map_sub(
        tt, map_scale(Complex(op_norm(tt) + 1.0, 0.0), identity_map(mod)));
    EXPECT_FALSE(positive_part_check(shifted, 1e-9));
  }
  // A non-self-adjoint map fails.
  Element skew = zero(kSpec12);
  skew.blocks[1](0, 1) = 1.0;
  EXPECT_FALSE(positive_part_check(left_mult_map(mod, skew), 1e-9));
}

TEST(ModuleMapTest, SqrtCalculusRoundTrip) {
  Rng rng(11, "hmodule/sqrt");
  const ModulePtr mod = free_module(kSpec12);
  for (int rep = 0; rep < 30; ++rep) {
    const Element a = random_element(kSpec12, rng);
    const ModuleMap tt = compose(adjoint_solve(left_mult_map(mod, a)),
                                 left_mult_map(mod, a));
    const ModuleMap r = sqrt_map(tt);
    EXPECT_LE(map_norm_diff(compose(r, r), tt),
              1e-8 * std::max(1.0, op_norm(tt)));
    EXPECT_TRUE(positive_part_check(r, 1e-8));
  }
  EXPECT_THROW(
      sqrt_map(map_scale(Complex(-1.0, 0.0), identity_map(mod))),
      NotPositive);
}

TEST(TensorModuleTest, DimensionsMultiplyAndBasisPairing) {
  const ModulePtr m1 = free_module(kSpec12);
  const ModulePtr m2 = free_module(kSpec2);
  const ModulePtr prod = tensor_module(m1, m2);
  EXPECT_EQ(prod->dim, m1->dim * m2->dim);
  EXPECT_EQ(prod->base.dim(), kSpec12.dim() * kSpec2.dim());
  // Oracle: pairing index located by expanding the Kronecker product.
  for (int alpha = 0; alpha < kSpec12.dim(); ++alpha) {
    for (int beta = 0; beta < kSpec2.dim(); ++beta) {
      const Element k = kron(kSpec12, kSpec2, basis_element(kSpec12, alpha),
                             basis_element(kSpec2, beta));
      const Vec c = coords(prod->base, k);
      int found = -1;
      for (int i = 0; i < c.size(); ++i)
        if (std::abs(c(i)) > 0.5) found = i;
      EXPECT_EQ(found, tensor_basis_index(kSpec12, kSpec2, alpha, beta));
    }
  }
  EXPECT_NO_THROW(make_module(prod->base, prod->dim, prod->action, prod->gram));
}

TEST(TensorModuleTest, InnerFactorizes) {
  Rng rng(11, "hmodule/tensor-inner");
  const ModulePtr m1 = free_module(kSpec12);
  const ModulePtr m2 = free_module(kSpec2);
  const ModulePtr prod = tensor_module(m1, m2);
  for (int rep = 0; rep < 20; ++rep) {
    const Vec x1 = random_vec(m1->dim, rng);
    const Vec x2 = random_vec(m2->dim, rng);
    const Vec y1 = random_vec(m1->dim, rng);
    const Vec y2 = random_vec(m2->dim, rng);
    Vec px(prod->dim), py(prod->dim);
    for (int u = 0; u < m1->dim; ++u) {
      for (int v = 0; v < m2->dim; ++v) {
        px(u * m2->dim + v) = x1(u) * x2(v);
        py(u * m2->dim + v) = y1(u) * y2(v);
      }
    }
    const Element oracle = kron(kSpec12, kSpec2, inner(*m1, x1, y1),
                                inner(*m2, x2, y2));
    const Element got = inner(*prod, px, py);
    EXPECT_LE(norm_diff(got, oracle), 1e-9 * std::max(1.0, norm(oracle)));
  }
}

TEST(CommutantTest, FreeModuleCommutantIsRightMultipliers) {
  // Maps commuting with both actions on the free module over one 2x2 block:
  // left multiplications commute with right ones, and with the left action
  // constrained too only the center (scalars) remains.
  const ModulePtr mod = free_module(kSpec2);
  std::vector<Mat> left_acts;
  for (int alpha = 0; alpha < kSpec2.dim(); ++alpha)
    left_acts.push_back(
        left_mult_map(mod, basis_element(kSpec2, alpha)).mat);
  const auto only_action = commutant_basis(*mod, {});
  EXPECT_EQ(static_cast<int>(only_action.size()), 4);
  const auto with_left = commutant_basis(*mod, left_acts);
  EXPECT_EQ(static_cast<int>(with_left.size()), 1);
}

TEST(BoundObserverTest, PositiveMapBoundHolds) {
  Rng rng(11, "hmodule/bound");
  reset_positive_map_bound_observer();
  const ModulePtr mod = free_module(kSpec12);
  for (int rep = 0; rep < 100; ++rep) {
    const Element a = random_element(kSpec12, rng);
    const ModuleMap tt = compose(adjoint_solve(left_mult_map(mod, a)),
                                 left_mult_map(mod, a));
    const Vec v = random_vec(mod->dim, rng);
    observe_positive_map_bound(tt, v);
  }
  EXPECT_EQ(positive_map_bound_observations(), 100);
  EXPECT_LE(worst_positive_map_bound_violation(), 1e-12);
}

TEST(MakeModuleTest, RejectsBrokenGram) {
  const ModulePtr mod = free_module(kSpec2);
  auto gram = mod->gram;
  // Flip a diagonal entry negative: amplified positivity must fail.
  gram[0][0] = scale(Complex(-1.0, 0.0), gram[0][0]);
  EXPECT_THROW(make_module(mod->base, mod->dim, mod->action, gram), Error);
  auto action = mod->action;
  action[0] = 2.0 * action[0];
  EXPECT_THROW(make_module(mod->base, mod->dim, action, mod->gram), Error);
}

}  // namespace
}  // namespace opweight
