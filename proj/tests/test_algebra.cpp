#include "opweight/algebra.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "opweight/errors.hpp"
#include "opweight/rng.hpp"

namespace opweight {
namespace {

// Oracle: independent block-diagonal embedding; products, norms and spectra of
// elements must agree with plain matrix computations on the embedding.
Mat embed_oracle(const AlgebraSpec& spec, const Element& x) {
  Mat big = Mat::Zero(spec.embed_size(), spec.embed_size());
  int off = 0;
  for (int k = 0; k < spec.block_count(); ++k) {
    const int n = spec.block_dims[k];
    big.block(off, off, n, n) = x.blocks[k];
    off += n;
  }
  return big;
}

Element split_oracle(const AlgebraSpec& spec, const Mat& big) {
  Element x = zero(spec);
  int off = 0;
  for (int k = 0; k < spec.block_count(); ++k) {
    const int n = spec.block_dims[k];
    x.blocks[k] = big.block(off, off, n, n);
    off += n;
  }
  return x;
}

Element random_element(const AlgebraSpec& spec, Rng& rng) {
  Element x = zero(spec);
  for (int k = 0; k < spec.block_count(); ++k) {
    const int n = spec.block_dims[k];
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) x.blocks[k](i, j) = rng.cnormal();
  }
  return x;
}

const AlgebraSpec kSpec12{{1, 2}};
const AlgebraSpec kSpec23{{2, 3}};
const AlgebraSpec kSpec123{{1, 2, 3}};

TEST(AlgebraSpecTest, DimensionCounts) {
  EXPECT_EQ(kSpec12.dim(), 5);
  EXPECT_EQ(kSpec12.embed_size(), 3);
  EXPECT_EQ(kSpec123.dim(), 14);
  EXPECT_EQ(kSpec123.embed_size(), 6);
  EXPECT_TRUE(kSpec12.valid());
  const AlgebraSpec empty{{}};
  const AlgebraSpec degenerate{{2, 0}};
  EXPECT_FALSE(empty.valid());
  EXPECT_FALSE(degenerate.valid());
}

TEST(AlgebraSpecTest, CoordsRoundTrip) {
  Rng rng(7, "algebra/coords");
  for (int rep = 0; rep < 20; ++rep) {
    const Element x = random_element(kSpec123, rng);
    const Element back = from_coords(kSpec123, coords(kSpec123, x));
    EXPECT_LE(norm_diff(x, back), 1e-14);
  }
  for (int i = 0; i < kSpec12.dim(); ++i) {
    const Vec c = coords(kSpec12, basis_element(kSpec12, i));
    for (int j = 0; j < c.size(); ++j)
      EXPECT_NEAR(std::abs(c(j)), i == j ? 1.0 : 0.0, 0.0);
  }
}

TEST(AlgebraElementTest, MulMatchesEmbeddedProduct) {
  Rng rng(7, "algebra/mul");
  for (int rep = 0; rep < 50; ++rep) {
    const Element a = random_element(kSpec123, rng);
    const Element b = random_element(kSpec123, rng);
    const Mat oracle = embed_oracle(kSpec123, a) * embed_oracle(kSpec123, b);
    EXPECT_LE(norm_diff(mul(a, b), split_oracle(kSpec123, oracle)), 1e-12);
  }
}

TEST(AlgebraElementTest, NormMatchesEmbeddedSingularValue) {
  Rng rng(7, "algebra/norm");
  for (int rep = 0; rep < 50; ++rep) {
    const Element a = random_element(kSpec23, rng);
    Eigen::JacobiSVD<Mat> svd(embed_oracle(kSpec23, a));
    EXPECT_NEAR(norm(a), svd.singularValues()(0), 1e-10);
  }
  Element d = zero(kSpec12);
  d.blocks[0](0, 0) = 2.0;
  d.blocks[1](1, 1) = 3.0;
  EXPECT_DOUBLE_EQ(norm(d), 3.0);
}

TEST(AlgebraElementTest, CStarIdentity) {
  Rng rng(7, "algebra/cstar");
  for (int rep = 0; rep < 200; ++rep) {
    const Element x = random_element(kSpec123, rng);
    const double lhs = norm(mul(adjoint(x), x));
    const double rhs = norm(x) * norm(x);
    EXPECT_LE(std::abs(lhs - rhs), 1e-9 * std::max(1.0, rhs));
  }
}

TEST(AlgebraElementTest, PositivityClosureAndRejection) {
  Rng rng(7, "algebra/pos");
  for (int rep = 0; rep < 100; ++rep) {
    const Element x = random_element(kSpec123, rng);
    const Element y = random_element(kSpec123, rng);
    const Element p = mul(adjoint(x), x);
    const Element q = mul(adjoint(y), y);
    EXPECT_TRUE(is_positive(p));
    EXPECT_TRUE(is_positive(add(p, q)));
  }
  EXPECT_FALSE(is_positive(scale(-1.0, unit(kSpec12))));
  Element offdiag = zero(kSpec12);
  offdiag.blocks[1](0, 1) = 1.0;
  EXPECT_FALSE(is_positive(offdiag));
}

TEST(AlgebraElementTest, HereditaryCompression) {
  Rng rng(7, "algebra/hered");
  const PartialUnitNet net{kSpec123};
  for (int rep = 0; rep < 50; ++rep) {
    const Element x = random_element(kSpec123, rng);
    const Element a = mul(adjoint(x), x);
    for (int i = 0; i < net.size(); ++i) {
      const Element p = net.at(i);
      EXPECT_TRUE(is_positive(mul(p, mul(a, p))));
    }
  }
}

TEST(AlgebraElementTest, SqrtRoundTrip) {
  Rng rng(7, "algebra/sqrt");
  for (int rep = 0; rep < 100; ++rep) {
    const Element x = random_element(kSpec123, rng);
    const Element a = mul(adjoint(x), x);
    const Element r = sqrt(a);
    EXPECT_LE(norm_diff(mul(r, r), a), 1e-9 * std::max(1.0, norm(a)));
    EXPECT_TRUE(is_positive(r));
  }
  Element d = zero(kSpec12);
  d.blocks[0](0, 0) = 4.0;
  d.blocks[1] = Mat::Zero(2, 2);
  d.blocks[1](0, 0) = 4.0;
  d.blocks[1](1, 1) = 9.0;
  const Element r = sqrt(d);
  EXPECT_NEAR(r.blocks[0](0, 0).real(), 2.0, 1e-12);
  EXPECT_NEAR(r.blocks[1](0, 0).real(), 2.0, 1e-12);
  EXPECT_NEAR(r.blocks[1](1, 1).real(), 3.0, 1e-12);
  EXPECT_THROW(sqrt(scale(-1.0, unit(kSpec12))), NotPositive);
}

TEST(AlgebraElementTest, DefectIdentity) {
  Rng rng(7, "algebra/defect");
  for (int rep = 0; rep < 200; ++rep) {
    const Element x = random_element(kSpec123, rng);
    const Element y = defect(x);
    const double s = norm(x);
    const Element residual =
        sub(add(mul(adjoint(y), y), mul(adjoint(x), x)),
            scale(s * s, unit(kSpec123)));
    EXPECT_LE(norm(residual), 1e-9 * std::max(1.0, s * s));
    EXPECT_TRUE(is_positive(y));
  }
}

TEST(AlgebraElementTest, PositiveDecompose) {
  Rng rng(7, "algebra/decomp");
  for (int rep = 0; rep < 100; ++rep) {
    const Element m = random_element(kSpec123, rng);
    const auto parts = positive_decompose(m);
    Element recombined = parts[0];
    recombined = add(recombined, scale(Complex(0.0, 1.0), parts[1]));
    recombined = sub(recombined, parts[2]);
    recombined = sub(recombined, scale(Complex(0.0, 1.0), parts[3]));
    EXPECT_LE(norm_diff(recombined, m), 1e-10 * std::max(1.0, norm(m)));
    for (const Element& p : parts) EXPECT_TRUE(is_positive(p));
  }
}

TEST(AlgebraElementTest, FaithfulTraceIsFrobeniusOnSquares) {
  Rng rng(7, "algebra/trace");
  for (int rep = 0; rep < 100; ++rep) {
    const Element x = random_element(kSpec123, rng);
    double frob = 0.0;
    for (const Mat& b : x.blocks) frob += b.squaredNorm();
    const Complex t = faithful_trace(mul(adjoint(x), x));
    EXPECT_NEAR(t.real(), frob, 1e-10 * std::max(1.0, frob));
    EXPECT_NEAR(t.imag(), 0.0, 1e-10 * std::max(1.0, frob));
  }
  EXPECT_NEAR(faithful_trace(unit(kSpec12)).real(), 3.0, 0.0);
  // Faithfulness: a positive element with zero trace is zero.
  Rng rng2(8, "algebra/trace2");
  const Element x = random_element(kSpec12, rng2);
  const Element a = mul(adjoint(x), x);
  EXPECT_GT(faithful_trace(a).real(), 0.0);
}

TEST(PartialUnitNetTest, IncreasingToUnit) {
  const PartialUnitNet net{kSpec123};
  ASSERT_EQ(net.size(), 3);
  for (int i = 0; i < net.size(); ++i) {
    const Element p = net.at(i);
    EXPECT_LE(norm_diff(mul(p, p), p), 1e-14);
    EXPECT_LE(herm_defect(p), 1e-14);
    if (i > 0) {
      EXPECT_TRUE(is_positive(sub(p, net.at(i - 1))));
    }
  }
  EXPECT_LE(norm_diff(net.at(net.size() - 1), unit(kSpec123)), 0.0);
}

}  // namespace
}  // namespace opweight
