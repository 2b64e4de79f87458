#include "opweight/verify.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "opweight/errors.hpp"

namespace opweight {

namespace {

// Module norm of a vector: sqrt of the norm of its self-pairing.
double module_vec_norm(const ModuleRep& mod, const Vec& x) {
  return std::sqrt(norm(inner(mod, x, x)));
}

Mat left_regular_mat(const AlgebraSpec& A, int alpha) {
  const int da = A.dim();
  Mat L(da, da);
  const Element ea = basis_element(A, alpha);
  for (int beta = 0; beta < da; ++beta) {
    L.col(beta) = coords(A, mul(ea, basis_element(A, beta)));
  }
  return L;
}

}  // namespace

bool Functional::shape_valid() const {
  return static_cast<int>(table.size()) == A.dim();
}

Functional zero_functional(const AlgebraSpec& A) {
  Functional f;
  f.A = A;
  f.table.assign(static_cast<std::size_t>(A.dim()), Complex(0.0, 0.0));
  return f;
}

Functional trace_functional(const AlgebraSpec& A) {
  Functional f;
  f.A = A;
  f.table.reserve(static_cast<std::size_t>(A.dim()));
  for (int alpha = 0; alpha < A.dim(); ++alpha) {
    const Element e = basis_element(A, alpha);
    Complex tr(0.0, 0.0);
    for (const auto& block : e.blocks) tr += block.trace();
    f.table.push_back(tr);
  }
  return f;
}

Complex functional_apply(const Functional& f, const Element& x) {
  if (!f.shape_valid() || !x.shape_matches(f.A)) {
    throw Error("functional shape mismatch");
  }
  const Vec c = coords(f.A, x);
  Complex acc(0.0, 0.0);
  for (int alpha = 0; alpha < f.A.dim(); ++alpha) {
    acc += c(alpha) * f.table[static_cast<std::size_t>(alpha)];
  }
  return acc;
}

Functional functional_scale(double s, const Functional& f) {
  Functional out = f;
  for (Complex& c : out.table) c *= s;
  return out;
}

Functional functional_sub(const Functional& f1, const Functional& f2) {
  if (!(f1.A == f2.A)) throw Error("functional algebra mismatch");
  Functional out = f1;
  for (std::size_t k = 0; k < out.table.size(); ++k) out.table[k] -= f2.table[k];
  return out;
}

Mat functional_gram(const Functional& f) {
  const int da = f.A.dim();
  Mat M(da, da);
  for (int i = 0; i < da; ++i) {
    for (int j = 0; j < da; ++j) {
      M(i, j) = functional_apply(
          f, mul(adjoint(basis_element(f.A, i)), basis_element(f.A, j)));
    }
  }
  return M;
}

GnsData gns(const Functional& theta, double tol) {
  if (!theta.shape_valid()) throw Error("functional shape mismatch");
  const int da = theta.A.dim();
  const Mat M = functional_gram(theta);
  const double m_norm = op_norm_mat(M);
  const double herm = (M - M.adjoint()).norm();
  if (herm > tol * std::max(1.0, m_norm)) {
    throw NotPositiveFunctional("functional Gram is not conjugate symmetric",
                                -herm);
  }
  const HermEig eig = herm_eig(0.5 * (M + M.adjoint()));
  const double sigma_max = std::max(eig.eigenvalues.maxCoeff(), 0.0);
  const double lam_min = eig.eigenvalues.minCoeff();
  if (lam_min < -tol * std::max(1.0, sigma_max)) {
    throw NotPositiveFunctional("functional Gram has a negative eigenvalue",
                                lam_min);
  }

  const double cut = 1e-10 * sigma_max;
  std::vector<int> keep;
  for (int k = 0; k < da; ++k) {
    if (eig.eigenvalues(k) > cut) keep.push_back(k);
  }
  const int m = static_cast<int>(keep.size());
  Mat C(da, m);
  Mat Q(m, da);
  for (int r = 0; r < m; ++r) {
    const double s = eig.eigenvalues(keep[static_cast<std::size_t>(r)]);
    const Vec u = eig.eigenvectors.col(keep[static_cast<std::size_t>(r)]);
    C.col(r) = u / std::sqrt(s);
    Q.row(r) = std::sqrt(s) * u.adjoint();
  }

  GnsData g;
  g.theta = theta;
  g.dim = m;
  g.pi.reserve(static_cast<std::size_t>(da));
  for (int alpha = 0; alpha < da; ++alpha) {
    g.pi.push_back(Q * left_regular_mat(theta.A, alpha) * C);
  }
  g.v = Q * coords(theta.A, unit(theta.A));

  // The quotient construction reproduces the functional and is cyclic by
  // design; both are re-checked defensively.
  const double scale = 1.0 + m_norm;
  for (int alpha = 0; alpha < da; ++alpha) {
    const Complex got = g.v.dot(g.pi[static_cast<std::size_t>(alpha)] * g.v);
    const double res = std::abs(got - theta.table[static_cast<std::size_t>(alpha)]);
    if (res > 1e-10 * scale * 100.0) {
      throw IllDefined("cyclic representation fails to reproduce the functional",
                       res);
    }
  }
  if (m > 0) {
    Mat span(m, da);
    for (int alpha = 0; alpha < da; ++alpha) {
      span.col(alpha) = g.pi[static_cast<std::size_t>(alpha)] * g.v;
    }
    Eigen::JacobiSVD<Mat> svd(span);
    const auto& sv = svd.singularValues();
    int rank = 0;
    for (int k = 0; k < sv.size(); ++k) {
      if (sv(k) > 1e-10 * std::max(1.0, sv(0))) ++rank;
    }
    if (rank != m) {
      throw IllDefined("cyclic vector fails to generate the space",
                       static_cast<double>(m - rank));
    }
  }
  return g;
}

Mat gns_pi_of(const GnsData& g, const Element& x) {
  if (!x.shape_matches(g.theta.A)) throw Error("algebra element shape mismatch");
  const Vec c = coords(g.theta.A, x);
  Mat out = Mat::Zero(g.dim, g.dim);
  for (int alpha = 0; alpha < c.size(); ++alpha) {
    if (std::abs(c(alpha)) == 0.0) continue;
    out += c(alpha) * g.pi[static_cast<std::size_t>(alpha)];
  }
  return out;
}

std::vector<Mat> gns_commutant_basis(const GnsData& g) {
  const int m = g.dim;
  if (m == 0) return {};
  const int da = g.theta.A.dim();
  Mat stacked(static_cast<Eigen::Index>(da) * m * m, m * m);
  const Mat id = Mat::Identity(m, m);
  for (int alpha = 0; alpha < da; ++alpha) {
    const Mat& p = g.pi[static_cast<std::size_t>(alpha)];
    stacked.middleRows(static_cast<Eigen::Index>(alpha) * m * m, m * m) =
        kron_mat(p.transpose(), id) - kron_mat(id, p);
  }
  Eigen::JacobiSVD<Mat> svd(stacked, Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double top = sv.size() > 0 ? sv(0) : 0.0;
  std::vector<Mat> basis;
  for (int k = 0; k < sv.size(); ++k) {
    if (sv(k) <= 1e-10 * std::max(1.0, top)) {
      const Vec col = svd.matrixV().col(k);
      basis.push_back(Eigen::Map<const Mat>(col.data(), m, m));
    }
  }
  return basis;
}

SesquilinearForm form_from_operator(const GnsData& g,
                                    const std::vector<Element>& basis,
                                    const Mat& T0) {
  const int n = static_cast<int>(basis.size());
  SesquilinearForm s;
  s.A = g.theta.A;
  s.basis = basis;
  s.theta = g.theta;
  s.values = Mat(n, n);
  std::vector<Vec> classes;
  classes.reserve(static_cast<std::size_t>(n));
  for (const Element& b : basis) classes.push_back(gns_pi_of(g, b) * g.v);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      s.values(i, j) = classes[static_cast<std::size_t>(j)].dot(
          T0 * classes[static_cast<std::size_t>(i)]);
    }
  }
  return s;
}

ReconstructedOmega reconstruct_omega(const SesquilinearForm& s, double tol) {
  ReconstructedOmega out;
  out.rep = gns(s.theta, tol);
  const GnsData& g = out.rep;
  const int n = static_cast<int>(s.basis.size());
  const int m = g.dim;

  // Quadratic-form matrices of the form and of the functional on the basis.
  const Mat Ms = s.values.transpose();
  Mat Mt(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      Mt(i, j) = functional_apply(
          s.theta, mul(adjoint(s.basis[static_cast<std::size_t>(i)]),
                       s.basis[static_cast<std::size_t>(j)]));
    }
  }
  const double scale = 1.0 + op_norm_mat(Mt);
  if ((Ms - Ms.adjoint()).norm() > tol * scale) {
    throw Error("sesquilinear form is not conjugate symmetric");
  }
  if (n > 0 && min_herm_eigenvalue(0.5 * (Ms + Ms.adjoint())) < -tol * scale) {
    throw NotPositive("sesquilinear form has a negative direction",
                      min_herm_eigenvalue(0.5 * (Ms + Ms.adjoint())));
  }
  if (n > 0) {
    const double slack = min_herm_eigenvalue(
        0.5 * (Mt + Mt.adjoint()) - 0.5 * (Ms + Ms.adjoint()));
    if (slack < -tol * scale) {
      throw DominationViolated("form exceeds the dominating functional",
                               slack);
    }
  }

  // Supported sandwich through the classes of the basis elements.
  Mat K(m, n);
  for (int i = 0; i < n; ++i) {
    K.col(i) = gns_pi_of(g, s.basis[static_cast<std::size_t>(i)]) * g.v;
  }
  const Mat KK = K.adjoint() * K;
  const HermEig keig = herm_eig(0.5 * (KK + KK.adjoint()));
  const double ktop = n > 0 ? std::max(keig.eigenvalues.maxCoeff(), 0.0) : 0.0;
  Mat pinv = Mat::Zero(n, n);
  for (int k = 0; k < n; ++k) {
    if (keig.eigenvalues(k) > 1e-10 * std::max(1.0, ktop)) {
      pinv += keig.eigenvectors.col(k) * keig.eigenvectors.col(k).adjoint() /
              keig.eigenvalues(k);
    }
  }
  Mat T = K * pinv * Ms * pinv * K.adjoint();
  T = 0.5 * (T + T.adjoint());
  out.T = T;

  double worst = 0.0;
  if (m > 0) {
    const double t_min = min_herm_eigenvalue(T);
    const double t_max = op_norm_mat(T);
    if (t_min < -tol * 100.0 * scale) {
      throw IllDefined("reconstructed operator has a negative part", -t_min);
    }
    if (t_max > 1.0 + tol * 100.0 * scale) {
      throw IllDefined("reconstructed operator exceeds the unit bound", t_max);
    }
    double comm = 0.0;
    for (const Mat& p : g.pi) {
      comm = std::max(comm, op_norm_mat(T * p - p * T));
    }
    if (comm > tol * 100.0 * scale) {
      throw IllDefined("reconstructed operator leaves the commutant", comm);
    }
    worst = std::max(worst, comm);
  }

  Functional omega = zero_functional(s.A);
  for (int alpha = 0; alpha < s.A.dim(); ++alpha) {
    omega.table[static_cast<std::size_t>(alpha)] =
        g.v.dot(T * (g.pi[static_cast<std::size_t>(alpha)] * g.v));
  }
  out.omega = omega;

  // The reconstructed functional reproduces the form and sits below theta.
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const Complex got = functional_apply(
          omega, mul(adjoint(s.basis[static_cast<std::size_t>(j)]),
                     s.basis[static_cast<std::size_t>(i)]));
      worst = std::max(worst, std::abs(got - s.values(i, j)));
    }
  }
  if (worst > tol * 1000.0 * scale) {
    throw IllDefined("reconstruction fails to reproduce the form", worst);
  }
  const Mat gap = functional_gram(functional_sub(s.theta, omega));
  const double gap_min = min_herm_eigenvalue(0.5 * (gap + gap.adjoint()));
  if (gap_min < -tol * 1000.0 * scale) {
    throw IllDefined("reconstruction escapes the dominating functional",
                     -gap_min);
  }
  out.residual = worst;

  observe_positive_map_bound(T, g.v);
  for (int i = 0; i < n; ++i) observe_positive_map_bound(T, Vec(K.col(i)));
  return out;
}

bool strong_convergence_equiv(const std::vector<ModuleMap>& family,
                              const ModuleMap& limit,
                              const std::vector<Vec>& probes, double tol) {
  if (family.empty()) throw Error("empty family");
  const ModuleRep& mod = *limit.target;
  const double t_norm = op_norm(limit);
  const double scale = 1.0 + t_norm;

  for (const ModuleMap& ti : family) {
    const double mn = map_min_eigenvalue(ti);
    if (mn < -1e-9 * scale) {
      throw NotPositive("family member has a negative part", mn);
    }
    ModuleMap gap = limit;
    gap.mat = limit.mat - ti.mat;
    const double slack = map_min_eigenvalue(gap);
    if (slack < -1e-9 * scale) {
      throw DominationViolated("family member exceeds the limit", slack);
    }
  }

  std::vector<double> strong_chain, scalar_chain;
  bool bound_ok = true;
  for (const ModuleMap& ti : family) {
    const Mat S = limit.mat - ti.mat;
    double strong = 0.0;
    double scalar = 0.0;
    for (const Vec& v : probes) {
      const Vec sv = S * v;
      const double s_norm = module_vec_norm(mod, sv);
      const double s_scalar = norm(inner(mod, sv, v));
      strong = std::max(strong, s_norm);
      scalar = std::max(scalar, s_scalar);
      // The defining inequality of the equivalence, certified pointwise.
      if (s_norm * s_norm >
          2.0 * t_norm * s_scalar + 1e-10 * scale * scale) {
        bound_ok = false;
      }
      ModuleMap gap_map = limit;
      gap_map.mat = S;
      observe_positive_map_bound(gap_map, v);
      observe_positive_map_bound(ti, v);
    }
    strong_chain.push_back(strong);
    scalar_chain.push_back(scalar);
  }

  // The scalar chain must decrease; the certified bound then forces the
  // strong chain down with it, so only the final values are gated.
  bool shrinking = true;
  for (std::size_t k = 1; k < family.size(); ++k) {
    if (scalar_chain[k] > scalar_chain[k - 1] + 1e-12 * scale) shrinking = false;
  }
  const bool converged =
      strong_chain.back() <= tol * scale && scalar_chain.back() <= tol * scale;
  return bound_ok && shrinking && converged;
}

ModuleMap monotone_limit(const std::vector<ModuleMap>& family, double tol) {
  if (family.empty()) throw Error("empty family");
  const ModuleRep& mod = *family.front().target;
  const int d = mod.dim;
  double top = 0.0;
  for (const ModuleMap& ti : family) top = std::max(top, op_norm(ti));
  const double scale = 1.0 + top;

  for (std::size_t k = 1; k < family.size(); ++k) {
    ModuleMap gap = family[k];
    gap.mat = family[k].mat - family[k - 1].mat;
    const double slack = map_min_eigenvalue(gap);
    if (slack < -tol * scale) {
      throw NotMonotone("family is not increasing", slack);
    }
  }

  // Cauchy bound of the scalar criterion on canonical probes.
  std::vector<Vec> probes;
  for (int k = 0; k < d; ++k) {
    Vec e = Vec::Zero(d);
    e(k) = 1.0;
    probes.push_back(e);
  }
  if (d > 0) probes.push_back(Vec::Ones(d) / std::sqrt(double(d)));

  auto check_pair = [&](const ModuleMap& lo, const ModuleMap& hi) {
    const Mat S = hi.mat - lo.mat;
    ModuleMap s_map = hi;
    s_map.mat = S;
    for (const Vec& v : probes) {
      const Vec sv = S * v;
      const double lhs = module_vec_norm(mod, sv);
      const double rhs = 2.0 * top * norm(inner(mod, sv, v));
      if (lhs * lhs > rhs + 1e-10 * scale * scale) {
        throw IllDefined("monotone family violates the Cauchy bound",
                         lhs * lhs - rhs);
      }
      observe_positive_map_bound(s_map, v);
    }
  };
  for (std::size_t k = 1; k < family.size(); ++k) {
    check_pair(family[k - 1], family[k]);
  }
  if (family.size() > 1) check_pair(family.front(), family.back());

  return family.back();
}

}  // namespace opweight
