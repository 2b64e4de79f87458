#include "opweight/sampling.hpp"

#include <Eigen/Dense>

#include "opweight/errors.hpp"

namespace opweight {

Element random_element(const AlgebraSpec& spec, Rng& rng) {
  Element x = zero(spec);
  for (Mat& blk : x.blocks) {
    for (int c = 0; c < blk.cols(); ++c) {
      for (int r = 0; r < blk.rows(); ++r) {
        blk(r, c) = rng.cnormal();
      }
    }
  }
  return x;
}

Element random_hermitian(const AlgebraSpec& spec, Rng& rng) {
  const Element x = random_element(spec, rng);
  return scale(0.5, add(x, adjoint(x)));
}

Element random_positive(const AlgebraSpec& spec, Rng& rng) {
  const Element x = random_element(spec, rng);
  return mul(adjoint(x), x);
}

Mat random_unitary(int n, Rng& rng) {
  if (n == 0) return Mat(0, 0);
  Mat g(n, n);
  for (int c = 0; c < n; ++c) {
    for (int r = 0; r < n; ++r) g(r, c) = rng.cnormal();
  }
  Eigen::HouseholderQR<Mat> qr(g);
  Mat q = qr.householderQ();
  // Fix the phase convention so the factorization is unique.
  const Mat r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int c = 0; c < n; ++c) {
    const Complex d = r(c, c);
    const double a = std::abs(d);
    if (a > 0) q.col(c) *= d / a;
  }
  return q;
}

Element random_projection(const AlgebraSpec& spec, Rng& rng) {
  Element p = zero(spec);
  for (std::size_t k = 0; k < p.blocks.size(); ++k) {
    const int nk = static_cast<int>(p.blocks[k].rows());
    const int rank = rng.uniform_int(0, nk);
    Mat d = Mat::Zero(nk, nk);
    for (int i = 0; i < rank; ++i) d(i, i) = 1.0;
    const Mat u = random_unitary(nk, rng);
    p.blocks[k] = u * d * u.adjoint();
    // Exact Hermitian symmetry despite rounding in the conjugation.
    p.blocks[k] = 0.5 * (p.blocks[k] + p.blocks[k].adjoint());
  }
  return p;
}

CpMap random_cp_map(const AlgebraSpec& source, const AlgebraSpec& target,
                    Rng& rng, int terms) {
  if (!source.valid() || !target.valid()) throw Error("invalid algebra shapes");
  // bridges[k][l][j]: source block k into target block l.
  std::vector<std::vector<std::vector<Mat>>> bridges(
      static_cast<std::size_t>(source.block_count()));
  for (int k = 0; k < source.block_count(); ++k) {
    bridges[static_cast<std::size_t>(k)].resize(
        static_cast<std::size_t>(target.block_count()));
    const int nk = source.block_dims[static_cast<std::size_t>(k)];
    for (int l = 0; l < target.block_count(); ++l) {
      const int ml = target.block_dims[static_cast<std::size_t>(l)];
      for (int j = 0; j < terms; ++j) {
        Mat v(nk, ml);
        for (int c = 0; c < ml; ++c) {
          for (int r = 0; r < nk; ++r) v(r, c) = rng.cnormal();
        }
        bridges[static_cast<std::size_t>(k)][static_cast<std::size_t>(l)]
            .push_back(std::move(v));
      }
    }
  }

  CpMap m = cp_zero(source, target);
  for (int alpha = 0; alpha < source.dim(); ++alpha) {
    const Element e = basis_element(source, alpha);
    Element value = zero(target);
    for (int k = 0; k < source.block_count(); ++k) {
      for (int l = 0; l < target.block_count(); ++l) {
        for (const Mat& v :
             bridges[static_cast<std::size_t>(k)][static_cast<std::size_t>(l)]) {
          value.blocks[static_cast<std::size_t>(l)] +=
              v.adjoint() * e.blocks[static_cast<std::size_t>(k)] * v;
        }
      }
    }
    m.coeffs[static_cast<std::size_t>(alpha)] = value;
  }
  return m;
}

Weight random_weight(const AlgebraSpec& A, const AlgebraSpec& B,
                     const Element& p, Rng& rng, int terms) {
  const CpMap m = random_cp_map(A, B, rng, terms);
  return make_weight(A, B, p, m.coeffs);
}

}  // namespace opweight
