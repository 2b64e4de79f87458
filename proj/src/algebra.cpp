#include "opweight/algebra.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "opweight/errors.hpp"

namespace opweight {

namespace {

void require_shape(const Element& a, const Element& b) {
  if (a.blocks.size() != b.blocks.size())
    throw Error("element block counts differ");
  for (size_t k = 0; k < a.blocks.size(); ++k) {
    if (a.blocks[k].rows() != b.blocks[k].rows())
      throw Error("element block shapes differ");
  }
}

Element map_blocks(const Element& a, const std::function<Mat(const Mat&)>& f) {
  Element out;
  out.blocks.reserve(a.blocks.size());
  for (const Mat& m : a.blocks) out.blocks.push_back(f(m));
  return out;
}

}  // namespace

int AlgebraSpec::dim() const {
  int d = 0;
  for (int n : block_dims) d += n * n;
  return d;
}

int AlgebraSpec::embed_size() const {
  int d = 0;
  for (int n : block_dims) d += n;
  return d;
}

bool AlgebraSpec::valid() const {
  if (block_dims.empty()) return false;
  return std::all_of(block_dims.begin(), block_dims.end(),
                     [](int n) { return n >= 1; });
}

bool Element::shape_matches(const AlgebraSpec& spec) const {
  if (static_cast<int>(blocks.size()) != spec.block_count()) return false;
  for (int k = 0; k < spec.block_count(); ++k) {
    if (blocks[k].rows() != spec.block_dims[k] ||
        blocks[k].cols() != spec.block_dims[k])
      return false;
  }
  return true;
}

Element zero(const AlgebraSpec& spec) {
  Element x;
  x.blocks.reserve(spec.block_dims.size());
  for (int n : spec.block_dims) x.blocks.push_back(Mat::Zero(n, n));
  return x;
}

Element unit(const AlgebraSpec& spec) {
  Element x;
  x.blocks.reserve(spec.block_dims.size());
  for (int n : spec.block_dims) x.blocks.push_back(Mat::Identity(n, n));
  return x;
}

Element basis_element(const AlgebraSpec& spec, int index) {
  Element x = zero(spec);
  int offset = 0;
  for (int k = 0; k < spec.block_count(); ++k) {
    const int n = spec.block_dims[k];
    if (index < offset + n * n) {
      const int local = index - offset;
      x.blocks[k](local / n, local % n) = Complex(1.0, 0.0);
      return x;
    }
    offset += n * n;
  }
  throw Error("basis index out of range");
}

Vec coords(const AlgebraSpec& spec, const Element& x) {
  Vec c(spec.dim());
  int pos = 0;
  for (int k = 0; k < spec.block_count(); ++k) {
    const int n = spec.block_dims[k];
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) c(pos++) = x.blocks[k](i, j);
  }
  return c;
}

Element from_coords(const AlgebraSpec& spec, const Vec& c) {
  if (c.size() != spec.dim()) throw Error("coordinate vector has wrong length");
  Element x = zero(spec);
  int pos = 0;
  for (int k = 0; k < spec.block_count(); ++k) {
    const int n = spec.block_dims[k];
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) x.blocks[k](i, j) = c(pos++);
  }
  return x;
}

Element add(const Element& a, const Element& b) {
  require_shape(a, b);
  Element out;
  out.blocks.reserve(a.blocks.size());
  for (size_t k = 0; k < a.blocks.size(); ++k)
    out.blocks.push_back(a.blocks[k] + b.blocks[k]);
  return out;
}

Element sub(const Element& a, const Element& b) {
  require_shape(a, b);
  Element out;
  out.blocks.reserve(a.blocks.size());
  for (size_t k = 0; k < a.blocks.size(); ++k)
    out.blocks.push_back(a.blocks[k] - b.blocks[k]);
  return out;
}

Element mul(const Element& a, const Element& b) {
  require_shape(a, b);
  Element out;
  out.blocks.reserve(a.blocks.size());
  for (size_t k = 0; k < a.blocks.size(); ++k)
    out.blocks.push_back(a.blocks[k] * b.blocks[k]);
  return out;
}

Element scale(Complex s, const Element& a) {
  return map_blocks(a, [&](const Mat& m) { return Mat(s * m); });
}

Element adjoint(const Element& a) {
  return map_blocks(a, [](const Mat& m) { return Mat(m.adjoint()); });
}

Element operator+(const Element& a, const Element& b) { return add(a, b); }
Element operator-(const Element& a, const Element& b) { return sub(a, b); }
Element operator*(const Element& a, const Element& b) { return mul(a, b); }
Element operator*(Complex s, const Element& a) { return scale(s, a); }
Element operator*(double s, const Element& a) {
  return scale(Complex(s, 0.0), a);
}

double norm(const Element& a) {
  double best = 0.0;
  for (const Mat& m : a.blocks) best = std::max(best, op_norm_mat(m));
  return best;
}

double norm_diff(const Element& a, const Element& b) { return norm(sub(a, b)); }

Complex faithful_trace(const Element& a) {
  Complex t(0.0, 0.0);
  for (const Mat& m : a.blocks) t += m.trace();
  return t;
}

double herm_defect(const Element& a) { return norm_diff(a, adjoint(a)); }

bool is_positive(const Element& a, double tol) {
  const double n = norm(a);
  if (herm_defect(a) > tol * n) return false;
  return min_eigenvalue(a) >= -tol * std::max(1.0, n);
}

double min_eigenvalue(const Element& a) {
  double lo = std::numeric_limits<double>::infinity();
  for (const Mat& m : a.blocks) {
    const Mat h = 0.5 * (m + m.adjoint());
    lo = std::min(lo, min_herm_eigenvalue(h));
  }
  return lo;
}

Element sqrt(const Element& a, double tol) {
  if (!is_positive(a, tol))
    throw NotPositive("sqrt: operand is not positive", min_eigenvalue(a));
  return map_blocks(a, [](const Mat& m) {
    const Mat h = 0.5 * (m + m.adjoint());
    return herm_apply(h, [](double t) { return std::sqrt(std::max(0.0, t)); });
  });
}

Element defect(const Element& x, double tol) {
  const double s = norm(x);
  Element d = x;
  for (size_t k = 0; k < d.blocks.size(); ++k) {
    const Mat& m = x.blocks[k];
    d.blocks[k] = s * s * Mat::Identity(m.rows(), m.cols()) - m.adjoint() * m;
  }
  return sqrt(d, tol);
}

std::array<Element, 4> positive_decompose(const Element& m) {
  const Complex half_i(0.0, 0.5);
  Element h = 0.5 * (m + adjoint(m));
  Element k = scale(-half_i, sub(m, adjoint(m)));
  auto split = [](const Element& e) {
    Element plus = map_blocks(e, [](const Mat& b) {
      const Mat h2 = 0.5 * (b + b.adjoint());
      return herm_apply(h2, [](double t) { return std::max(0.0, t); });
    });
    Element minus = map_blocks(e, [](const Mat& b) {
      const Mat h2 = 0.5 * (b + b.adjoint());
      return herm_apply(h2, [](double t) { return std::max(0.0, -t); });
    });
    return std::pair<Element, Element>(plus, minus);
  };
  auto [p0, p2] = split(h);
  auto [p1, p3] = split(k);
  return {p0, p1, p2, p3};
}

Element PartialUnitNet::at(int i) const {
  if (i < 0 || i >= size()) throw Error("net index out of range");
  Element x = zero(spec);
  for (int k = 0; k <= i; ++k)
    x.blocks[k] = Mat::Identity(spec.block_dims[k], spec.block_dims[k]);
  return x;
}

AlgebraSpec tensor_spec(const AlgebraSpec& a, const AlgebraSpec& b) {
  AlgebraSpec out;
  out.block_dims.reserve(a.block_dims.size() * b.block_dims.size());
  for (int n : a.block_dims)
    for (int m : b.block_dims) out.block_dims.push_back(n * m);
  return out;
}

Mat kron_mat(const Mat& x, const Mat& y) {
  Mat out(x.rows() * y.rows(), x.cols() * y.cols());
  for (int i = 0; i < x.rows(); ++i)
    for (int j = 0; j < x.cols(); ++j)
      out.block(i * y.rows(), j * y.cols(), y.rows(), y.cols()) = x(i, j) * y;
  return out;
}

Element kron(const AlgebraSpec& a, const AlgebraSpec& b, const Element& x,
             const Element& y) {
  Element out;
  out.blocks.reserve(a.block_dims.size() * b.block_dims.size());
  for (size_t k = 0; k < a.block_dims.size(); ++k)
    for (size_t l = 0; l < b.block_dims.size(); ++l)
      out.blocks.push_back(kron_mat(x.blocks[k], y.blocks[l]));
  return out;
}

int tensor_basis_index(const AlgebraSpec& a, const AlgebraSpec& b, int alpha,
                       int beta) {
  // Locate (block, row, col) of each factor unit.
  auto locate = [](const AlgebraSpec& s, int idx) {
    int off = 0;
    for (int k = 0; k < s.block_count(); ++k) {
      const int n = s.block_dims[k];
      if (idx < off + n * n) {
        const int local = idx - off;
        return std::array<int, 3>{k, local / n, local % n};
      }
      off += n * n;
    }
    throw Error("basis index out of range");
  };
  const auto [ka, ia, ja] = locate(a, alpha);
  const auto [kb, ib, jb] = locate(b, beta);
  const AlgebraSpec prod = tensor_spec(a, b);
  const int block = ka * b.block_count() + kb;
  int off = 0;
  for (int k = 0; k < block; ++k)
    off += prod.block_dims[k] * prod.block_dims[k];
  const int m = b.block_dims[kb];
  const int nm = prod.block_dims[block];
  return off + (ia * m + ib) * nm + (ja * m + jb);
}

std::vector<std::pair<int, int>> tensor_basis_pairs(const AlgebraSpec& a,
                                                    const AlgebraSpec& b) {
  std::vector<std::pair<int, int>> pairs(
      static_cast<size_t>(tensor_spec(a, b).dim()), {-1, -1});
  for (int alpha = 0; alpha < a.dim(); ++alpha)
    for (int beta = 0; beta < b.dim(); ++beta)
      pairs[tensor_basis_index(a, b, alpha, beta)] = {alpha, beta};
  return pairs;
}

HermEig herm_eig(const Mat& hermitian) {
  HermEig out;
  if (hermitian.rows() == 0) {
    out.eigenvalues = Eigen::VectorXd(0);
    out.eigenvectors = Mat(0, 0);
    return out;
  }
  Eigen::SelfAdjointEigenSolver<Mat> solver(hermitian);
  if (solver.info() != Eigen::Success)
    throw Error("hermitian eigendecomposition failed");
  out.eigenvalues = solver.eigenvalues();
  out.eigenvectors = solver.eigenvectors();
  return out;
}

double op_norm_mat(const Mat& m) {
  if (m.rows() == 0 || m.cols() == 0) return 0.0;
  const Mat gram = m.adjoint() * m;
  const HermEig eig = herm_eig(0.5 * (gram + gram.adjoint()));
  const double top = eig.eigenvalues(eig.eigenvalues.size() - 1);
  return std::sqrt(std::max(0.0, top));
}

double min_herm_eigenvalue(const Mat& hermitian) {
  if (hermitian.rows() == 0) return std::numeric_limits<double>::infinity();
  return herm_eig(hermitian).eigenvalues(0);
}

Mat herm_apply(const Mat& hermitian, const std::function<double(double)>& f) {
  if (hermitian.rows() == 0) return hermitian;
  const HermEig eig = herm_eig(hermitian);
  Eigen::VectorXd mapped(eig.eigenvalues.size());
  for (int i = 0; i < mapped.size(); ++i) mapped(i) = f(eig.eigenvalues(i));
  return eig.eigenvectors * mapped.asDiagonal() *
         eig.eigenvectors.adjoint();
}

}  // namespace opweight
