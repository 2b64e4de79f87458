#pragma once

#include <array>
#include <complex>
#include <functional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace opweight {

using Complex = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;

inline constexpr double kDefaultTol = 1e-9;

// Direct sum of full complex matrix blocks; block_dims lists the block sizes.
struct AlgebraSpec {
  std::vector<int> block_dims;

  int block_count() const { return static_cast<int>(block_dims.size()); }
  // Complex dimension: sum of n_k^2. Indexes the canonical matrix-unit basis,
  // block-major, row-major inside a block.
  int dim() const;
  // Side length of the block-diagonal embedding: sum of n_k.
  int embed_size() const;
  bool valid() const;
  bool operator==(const AlgebraSpec&) const = default;
};

// One dense matrix per block. Values are immutable by convention: every
// operation returns a fresh Element.
struct Element {
  std::vector<Mat> blocks;

  bool shape_matches(const AlgebraSpec& spec) const;
};

Element zero(const AlgebraSpec& spec);
Element unit(const AlgebraSpec& spec);
// Canonical basis: matrix unit index -> (block, row, col), block-major.
Element basis_element(const AlgebraSpec& spec, int index);
Vec coords(const AlgebraSpec& spec, const Element& x);
Element from_coords(const AlgebraSpec& spec, const Vec& c);

Element add(const Element& a, const Element& b);
Element sub(const Element& a, const Element& b);
Element mul(const Element& a, const Element& b);
Element scale(Complex s, const Element& a);
Element adjoint(const Element& a);

Element operator+(const Element& a, const Element& b);
Element operator-(const Element& a, const Element& b);
Element operator*(const Element& a, const Element& b);
Element operator*(Complex s, const Element& a);
Element operator*(double s, const Element& a);

// C*-norm: the largest singular value over the blocks.
double norm(const Element& a);
double norm_diff(const Element& a, const Element& b);
Complex faithful_trace(const Element& a);

// Hermitian within tol*norm(a) and all block eigenvalues >= -tol*max(1, norm(a)).
// Non-Hermitian input returns false rather than raising.
bool is_positive(const Element& a, double tol = kDefaultTol);
// Smallest block eigenvalue of the Hermitian part; +inf for the zero algebra.
double min_eigenvalue(const Element& a);
double herm_defect(const Element& a);

// Positive square root; eigenvalues below zero are clamped. Raises NotPositive
// when is_positive(a, tol) fails.
Element sqrt(const Element& a, double tol = kDefaultTol);
// y = sqrt(norm(x)^2 * 1 - x* x), so y* y + x* x = norm(x)^2 * 1.
Element defect(const Element& x, double tol = kDefaultTol);
// m = p0 + i p1 - p2 - i p3 with all four parts positive.
std::array<Element, 4> positive_decompose(const Element& m);

// Central projections p_i = sum of the block identities for blocks 0..i;
// increasing with the last element equal to the unit.
struct PartialUnitNet {
  AlgebraSpec spec;

  int size() const { return spec.block_count(); }
  Element at(int i) const;
};

// Tensor product of algebras: blocks are all pairwise Kronecker blocks,
// ordered with the first factor outer.
AlgebraSpec tensor_spec(const AlgebraSpec& a, const AlgebraSpec& b);
Mat kron_mat(const Mat& x, const Mat& y);
Element kron(const AlgebraSpec& a, const AlgebraSpec& b, const Element& x,
             const Element& y);
// kron of two basis elements is again a basis element; the pairing in closed form.
int tensor_basis_index(const AlgebraSpec& a, const AlgebraSpec& b, int alpha,
                       int beta);
std::vector<std::pair<int, int>> tensor_basis_pairs(const AlgebraSpec& a,
                                                    const AlgebraSpec& b);

// Single Hermitian-eigendecomposition backend; every spectral question in the
// library routes through these.
struct HermEig {
  Eigen::VectorXd eigenvalues;  // ascending
  Mat eigenvectors;
};
HermEig herm_eig(const Mat& hermitian);
double op_norm_mat(const Mat& m);
double min_herm_eigenvalue(const Mat& hermitian);
Mat herm_apply(const Mat& hermitian, const std::function<double(double)>& f);

}  // namespace opweight
