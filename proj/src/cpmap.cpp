#include "opweight/cpmap.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <utility>

#include "opweight/errors.hpp"
#include "opweight/parallel.hpp"

namespace opweight {

namespace {

void require_cp_shape(const CpMap& m) {
  if (!m.shape_valid()) throw Error("value table has inconsistent shapes");
}

// Orthonormal basis of Hermitian d x d matrices under the Frobenius pairing,
// as columns of a d^2 x d^2 matrix of column-major vectorizations.
Mat hermitian_param_basis(int d) {
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  Mat P = Mat::Zero(d * d, d * d);
  int k = 0;
  const auto vec_index = [d](int r, int c) { return c * d + r; };
  for (int c = 0; c < d; ++c) {
    P(vec_index(c, c), k) = 1.0;
    ++k;
  }
  for (int i = 0; i < d; ++i) {
    for (int j = i + 1; j < d; ++j) {
      P(vec_index(i, j), k) = inv_sqrt2;
      P(vec_index(j, i), k) = inv_sqrt2;
      ++k;
      P(vec_index(i, j), k) = Complex(0.0, inv_sqrt2);
      P(vec_index(j, i), k) = Complex(0.0, -inv_sqrt2);
      ++k;
    }
  }
  return P;
}

std::vector<Mat> amplified_value_blocks_impl(const CpMap& m, bool parallel) {
  require_cp_shape(m);
  const int n = m.source.dim();
  std::vector<Element> pair_value(static_cast<std::size_t>(n) *
                                      static_cast<std::size_t>(n),
                                  zero(m.target));
  const auto fill = [&](int idx) {
    const int i = idx / std::max(n, 1);
    const int j = idx % std::max(n, 1);
    pair_value[static_cast<std::size_t>(idx)] = cp_apply(
        m, mul(adjoint(basis_element(m.source, i)), basis_element(m.source, j)));
  };
  if (parallel) {
    parallel_for(n * n, fill);
  } else {
    serial_for(n * n, fill);
  }

  std::vector<Mat> big;
  big.reserve(static_cast<std::size_t>(m.target.block_count()));
  for (int l = 0; l < m.target.block_count(); ++l) {
    const int ml = m.target.block_dims[static_cast<std::size_t>(l)];
    Mat block = Mat::Zero(n * ml, n * ml);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        block.block(i * ml, j * ml, ml, ml) =
            pair_value[static_cast<std::size_t>(i) *
                           static_cast<std::size_t>(n) +
                       static_cast<std::size_t>(j)]
                .blocks[static_cast<std::size_t>(l)];
      }
    }
    big.push_back(std::move(block));
  }
  return big;
}

}  // namespace

bool CpMap::shape_valid() const {
  if (!source.valid() || !target.valid()) return false;
  if (static_cast<int>(coeffs.size()) != source.dim()) return false;
  for (const Element& c : coeffs) {
    if (!c.shape_matches(target)) return false;
  }
  return true;
}

CpMap cp_zero(const AlgebraSpec& source, const AlgebraSpec& target) {
  CpMap m;
  m.source = source;
  m.target = target;
  m.coeffs.assign(static_cast<std::size_t>(source.dim()), zero(target));
  return m;
}

CpMap cp_from_weight(const Weight& w) {
  CpMap m;
  m.source = w.A;
  m.target = w.B;
  m.coeffs = w.coeffs;
  return m;
}

Element cp_apply(const CpMap& m, const Element& x) {
  require_cp_shape(m);
  if (!x.shape_matches(m.source)) throw Error("argument shape mismatch");
  const Vec c = coords(m.source, x);
  Element value = zero(m.target);
  for (int alpha = 0; alpha < c.size(); ++alpha) {
    if (std::abs(c(alpha)) == 0.0) continue;
    value = add(value, scale(c(alpha), m.coeffs[static_cast<std::size_t>(alpha)]));
  }
  return value;
}

CpMap cp_add(const CpMap& m1, const CpMap& m2) {
  if (!(m1.source == m2.source) || !(m1.target == m2.target)) {
    throw Error("value-table sum requires matching algebras");
  }
  CpMap out = m1;
  for (std::size_t i = 0; i < out.coeffs.size(); ++i) {
    out.coeffs[i] = add(out.coeffs[i], m2.coeffs[i]);
  }
  return out;
}

CpMap cp_sub(const CpMap& m1, const CpMap& m2) {
  return cp_add(m1, cp_scale(-1.0, m2));
}

CpMap cp_scale(double s, const CpMap& m) {
  CpMap out = m;
  for (Element& c : out.coeffs) c = scale(s, c);
  return out;
}

double cp_norm(const CpMap& m) { return norm(cp_apply(m, unit(m.source))); }

double cp_star_defect(const CpMap& m) {
  require_cp_shape(m);
  double worst = 0.0;
  for (int alpha = 0; alpha < m.source.dim(); ++alpha) {
    const Element lhs = cp_apply(m, adjoint(basis_element(m.source, alpha)));
    const Element rhs = adjoint(m.coeffs[static_cast<std::size_t>(alpha)]);
    worst = std::max(worst, norm_diff(lhs, rhs));
  }
  return worst;
}

bool is_strict(const CpMap& m) {
  require_cp_shape(m);
  return true;
}

std::vector<Mat> amplified_value_blocks(const CpMap& m) {
  return amplified_value_blocks_impl(m, true);
}

std::vector<Mat> amplified_value_blocks_serial(const CpMap& m) {
  return amplified_value_blocks_impl(m, false);
}

CpVerdict cp_verdict(const CpMap& m, double tol) {
  const std::vector<Mat> big = amplified_value_blocks(m);
  CpVerdict v;
  v.min_eigenvalue = 0.0;
  double big_scale = 1.0;
  for (const Mat& blk : big) {
    if (blk.rows() > 0) big_scale = std::max(big_scale, blk.norm());
  }
  Vec worst_vec;
  for (std::size_t l = 0; l < big.size(); ++l) {
    const Mat& blk = big[l];
    if (blk.rows() == 0) continue;
    v.conj_defect = std::max(v.conj_defect, (blk - blk.adjoint()).norm());
    const HermEig eig = herm_eig(0.5 * (blk + blk.adjoint()));
    if (eig.eigenvalues.size() == 0) continue;
    const double lam = eig.eigenvalues(0);
    if (lam < v.min_eigenvalue) {
      v.min_eigenvalue = lam;
      v.witness_block = static_cast<int>(l);
      worst_vec = eig.eigenvectors.col(0);
    }
  }
  v.cp = v.conj_defect <= tol * big_scale &&
         v.min_eigenvalue >= -tol * big_scale;

  if (!v.cp && v.witness_block >= 0) {
    // Fold the negative eigenvector into a tuple: entry i becomes the
    // target element whose witness block carries the i-th segment in its
    // first column, so the quadratic sum evaluates to (min eig) * E_11.
    const int n = m.source.dim();
    const int ml =
        m.target.block_dims[static_cast<std::size_t>(v.witness_block)];
    v.witness.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      Element bi = zero(m.target);
      for (int r = 0; r < ml; ++r) {
        bi.blocks[static_cast<std::size_t>(v.witness_block)](r, 0) =
            worst_vec(i * ml + r);
      }
      v.witness.push_back(std::move(bi));
    }
  }
  return v;
}

bool is_completely_positive(const CpMap& m, double tol) {
  return cp_verdict(m, tol).cp;
}

DominatedMap rho_from_T(const KsgnsTriplet& t, const ModuleMap& T,
                        double tol) {
  if (T.source != t.E || T.target != t.E) {
    throw Error("operator must act on the triplet module");
  }
  const double mn = t.E->dim > 0 ? map_min_eigenvalue(T) : 0.0;
  const double tscale = std::max(1.0, t.E->dim > 0 ? op_norm(T) : 0.0);
  if (mn < -tol * 100.0 * tscale) {
    throw NotPositive("operator has a negative part", mn);
  }
  const ModuleMap sq = sqrt_map(T, std::max(tol * 100.0, 1e-8));
  const ModuleMap lam_p = lambda_of(t, t.p, tol);
  DominatedMap d;
  d.T = T;
  d.v = compose(sq, lam_p);
  if (t.E->dim > 0) {
    for (int j = 0; j < lam_p.mat.cols(); ++j) {
      observe_positive_map_bound(T, Vec(lam_p.mat.col(j)));
      observe_positive_map_bound(T, Vec(d.v.mat.col(j)));
    }
  }
  const ModuleMap v_adj = adjoint_solve(d.v, std::max(tol, 1e-8));
  CpMap rho = cp_zero(t.A, t.B);
  for (int alpha = 0; alpha < t.A.dim(); ++alpha) {
    rho.coeffs[static_cast<std::size_t>(alpha)] = map_to_element(
        compose(v_adj, compose(t.pi[static_cast<std::size_t>(alpha)], d.v)));
  }
  d.rho = std::move(rho);
  return d;
}

DominatedMap solve_T(const CpMap& rho, const KsgnsTriplet& t, double tol) {
  require_cp_shape(rho);
  if (!(rho.source == t.A) || !(rho.target == t.B)) {
    throw Error("map and triplet algebras differ");
  }
  const int n = static_cast<int>(t.N_basis.size());
  const int d = t.E->dim;
  const int db = t.B.dim();
  const double scale_r = std::max(1.0, cp_norm(rho));

  if (d > 0) {
    const double ortho =
        op_norm_mat(t.E->scalar_gram - Mat::Identity(d, d));
    if (ortho > 1e-8) {
      throw Error("triplet coordinates are not orthonormalized");
    }
  }

  DominatedMap out;
  if (n == 0 || d == 0) {
    out.rho = rho;
    out.T = zero_map(t.E, t.E);
    out.v = zero_map(t.freeB, t.E);
    out.null_dim = 0;
    return out;
  }

  // Data per ideal index: the structure map matrix and its adjoint matrix.
  std::vector<Mat> adj_mats;
  std::vector<Mat> lam_mats;
  adj_mats.reserve(static_cast<std::size_t>(n));
  lam_mats.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    adj_mats.push_back(
        adjoint_solve(t.Lambda[static_cast<std::size_t>(i)], std::max(tol, 1e-8))
            .mat);
    lam_mats.push_back(t.Lambda[static_cast<std::size_t>(i)].mat);
  }

  // Defining identities as full map equalities Lambda_j^* T Lambda_i =
  // left multiplication by the value. The stacked system over all ideal
  // pairs and all free-module columns has the separable Gram W (x) G in
  // the column-major vectorization; by density W and G are invertible, so
  // the solution is unique exactly when the triplet is nondegenerate.
  Mat W = Mat::Zero(d, d);
  Mat G = Mat::Zero(d, d);
  for (int i = 0; i < n; ++i) {
    W += lam_mats[static_cast<std::size_t>(i)].conjugate() *
         lam_mats[static_cast<std::size_t>(i)].transpose();
    G += adj_mats[static_cast<std::size_t>(i)].adjoint() *
         adj_mats[static_cast<std::size_t>(i)];
  }
  Mat R = Mat::Zero(d, d);
  std::vector<Mat> rhs_pairs(static_cast<std::size_t>(n) *
                             static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const Element value = cp_apply(
          rho, mul(adjoint(t.N_basis[static_cast<std::size_t>(j)]),
                   t.N_basis[static_cast<std::size_t>(i)]));
      const Mat r = left_mult_map(t.freeB, value).mat;
      rhs_pairs[static_cast<std::size_t>(i) * static_cast<std::size_t>(n) +
                static_cast<std::size_t>(j)] = r;
      R += adj_mats[static_cast<std::size_t>(j)].adjoint() * r *
           lam_mats[static_cast<std::size_t>(i)].adjoint();
    }
  }

  const Mat P = hermitian_param_basis(d);
  const Mat M = kron_mat(W, G);
  const Mat Npc = P.adjoint() * M * P;
  const Eigen::MatrixXd Nr = Npc.real();
  const Vec rp = P.adjoint() * Eigen::Map<const Vec>(R.data(), d * d);
  const Eigen::VectorXd rr = rp.real();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (Nr + Nr.transpose()));
  const Eigen::VectorXd& evals = es.eigenvalues();
  const double lam_top = std::max(evals.maxCoeff(), 0.0);
  const double cut = 1e-12 * std::max(lam_top, 1.0);
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(d * d);
  int null_dim = 0;
  for (int k = 0; k < evals.size(); ++k) {
    if (evals(k) <= cut) {
      ++null_dim;
      continue;
    }
    const double proj = es.eigenvectors().col(k).dot(rr);
    theta += es.eigenvectors().col(k) * (proj / evals(k));
  }
  out.null_dim = null_dim;

  const Vec t_vec = P * theta.cast<Complex>();
  Mat T_mat = Eigen::Map<const Mat>(t_vec.data(), d, d);
  T_mat = 0.5 * (T_mat + T_mat.adjoint());

  ModuleMap T;
  T.source = t.E;
  T.target = t.E;
  T.mat = T_mat;

  // Residual of the defining identities over every ideal pair.
  double worst = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const Mat got = adj_mats[static_cast<std::size_t>(j)] *
                      (T_mat * lam_mats[static_cast<std::size_t>(i)]);
      const Mat& want =
          rhs_pairs[static_cast<std::size_t>(i) * static_cast<std::size_t>(n) +
                    static_cast<std::size_t>(j)];
      worst = std::max(worst, (got - want).norm());
    }
  }
  if (worst > tol * scale_r) {
    throw NotInH("defining identity residual exceeds tolerance", worst);
  }

  const double mn = map_min_eigenvalue(T);
  if (mn < -tol * scale_r) {
    throw NotInH("recovered operator has a negative part", -mn);
  }
  double comm = 0.0;
  for (int alpha = 0; alpha < t.A.dim(); ++alpha) {
    const ModuleMap& pa = t.pi[static_cast<std::size_t>(alpha)];
    comm = std::max(comm, map_norm_diff(compose(T, pa), compose(pa, T)));
  }
  if (comm > tol * 10.0 * scale_r) {
    throw NotInH("recovered operator leaves the represented commutant", comm);
  }

  // Implementing vector from the stacked action system.
  const ModuleMap sq = sqrt_map(T, std::max(tol * 100.0, 1e-8));
  Mat stack(n * d, d);
  Mat rhs_stack(n * d, db);
  for (int i = 0; i < n; ++i) {
    stack.middleRows(i * d, d) =
        pi_of(t, t.N_basis[static_cast<std::size_t>(i)]).mat;
    rhs_stack.middleRows(i * d, d) =
        sq.mat * t.Lambda[static_cast<std::size_t>(i)].mat;
  }
  Eigen::ColPivHouseholderQR<Mat> qr(stack);
  const Mat V = qr.solve(rhs_stack);
  const double vres = (stack * V - rhs_stack).norm();
  if (vres > tol * 100.0 * std::max(1.0, rhs_stack.norm())) {
    throw NotInH("implementing vector system is inconsistent", vres);
  }
  ModuleMap v;
  v.source = t.freeB;
  v.target = t.E;
  v.mat = V;

  const double vnorm = op_norm(v);
  const double corner_norm = norm(cp_apply(rho, t.p));
  if (std::abs(vnorm * vnorm - corner_norm) >
      tol * 1000.0 * std::max(1.0, corner_norm)) {
    throw NotInH("implementing vector norm mismatch",
                 std::abs(vnorm * vnorm - corner_norm));
  }

  const ModuleMap v_adj = adjoint_solve(v, std::max(tol, 1e-8));
  double rec = 0.0;
  for (int alpha = 0; alpha < t.A.dim(); ++alpha) {
    const Element corner =
        mul(mul(t.p, basis_element(t.A, alpha)), t.p);
    const Element got = map_to_element(
        compose(v_adj, compose(pi_of(t, corner), v)));
    rec = std::max(rec, norm_diff(got, cp_apply(rho, corner)));
  }
  if (rec > tol * 100.0 * scale_r) {
    throw NotInH("corner reconstruction mismatch", rec);
  }

  out.rho = rho;
  out.T = T;
  out.v = v;
  if (t.E->dim > 0) {
    for (int j = 0; j < v.mat.cols(); ++j) {
      observe_positive_map_bound(T, Vec(v.mat.col(j)));
    }
    for (const ModuleMap& lam : t.Lambda) {
      observe_positive_map_bound(T, Vec(lam.mat.col(0)));
    }
  }
  return out;
}

bool order_leq(const CpMap& rho1, const CpMap& rho2, double tol) {
  if (!(rho1.source == rho2.source) || !(rho1.target == rho2.target)) {
    throw Error("order comparison requires matching algebras");
  }
  return is_completely_positive(cp_sub(rho2, rho1), tol);
}

DominatedMap directed_join(const KsgnsTriplet& t, const DominatedMap& r1,
                           const DominatedMap& r2, double lambda1,
                           double lambda2, std::optional<double> gamma,
                           double tol) {
  if (lambda1 < 0.0 || lambda1 >= 1.0 || lambda2 < 0.0 || lambda2 >= 1.0) {
    throw GammaOutOfRange("scales must lie in [0, 1)");
  }
  const double lmax = std::max(lambda1, lambda2);
  const double g = gamma.value_or(0.5 * (1.0 + lmax));
  if (!(g > lmax) || !(g < 1.0)) {
    throw GammaOutOfRange("gamma must lie strictly between max scale and 1");
  }
  for (const DominatedMap* r : {&r1, &r2}) {
    if (r->T.source != t.E) throw Error("join members must share the triplet");
    const double mnr = t.E->dim > 0 ? map_min_eigenvalue(r->T) : 0.0;
    const double topr = t.E->dim > 0 ? op_norm(r->T) : 0.0;
    if (mnr < -tol * 100.0 || topr > 1.0 + tol * 100.0) {
      throw Error("join requires members of the bounded family");
    }
  }

  const auto clamp01 = [](double x) {
    return std::min(std::max(x, 0.0), 1.0);
  };
  const auto lift = [g, clamp01](double x) {
    const double c = clamp01(x);
    return g * c / (1.0 - g * c);
  };
  const ModuleMap s1 = map_calculus(r1.T, lift);
  const ModuleMap s2 = map_calculus(r2.T, lift);
  const ModuleMap T = cayley_monotone(map_add(s1, s2), tol);

  // Defensive slack checks of the guaranteed inequalities.
  const double upper = g / (1.0 - g);
  if (t.E->dim > 0) {
    for (const ModuleMap* Tk : {&r1.T, &r2.T}) {
      const double slack =
          map_min_eigenvalue(map_sub(T, map_scale(g, *Tk)));
      if (slack < -1e-8) {
        throw NotMonotone("join lost the lower bound", slack);
      }
    }
    const double slack_up = map_min_eigenvalue(
        map_sub(map_scale(upper, map_add(r1.T, r2.T)), T));
    if (slack_up < -1e-8) {
      throw NotMonotone("join lost the upper bound", slack_up);
    }
  }

  DominatedMap out = rho_from_T(t, T, tol);
  return out;
}

Element cayley_monotone(const Element& t, double tol) {
  const double scale_t = std::max(1.0, norm(t));
  if (herm_defect(t) > tol * scale_t) {
    throw NotPositive("input is not self-adjoint", 0.0);
  }
  const double mn = min_eigenvalue(t);
  if (mn < -tol * scale_t) {
    throw NotPositive("input has a negative part", mn);
  }
  Element out = t;
  for (std::size_t k = 0; k < out.blocks.size(); ++k) {
    const Mat h = 0.5 * (t.blocks[k] + t.blocks[k].adjoint());
    out.blocks[k] = herm_apply(h, [](double x) {
      const double c = std::max(x, 0.0);
      return c / (1.0 + c);
    });
  }
  return out;
}

ModuleMap cayley_monotone(const ModuleMap& t, double tol) {
  if (t.source != t.target) throw Error("calculus requires an endomorphism");
  const double scale_t =
      std::max(1.0, t.source->dim > 0 ? op_norm(t) : 0.0);
  if (t.source->dim > 0) {
    if (self_adjoint_defect(t) > tol * 100.0 * scale_t) {
      throw NotPositive("input is not self-adjoint", 0.0);
    }
    const double mn = map_min_eigenvalue(t);
    if (mn < -tol * 100.0 * scale_t) {
      throw NotPositive("input has a negative part", mn);
    }
  }
  return map_calculus(t, [](double x) {
    const double c = std::max(x, 0.0);
    return c / (1.0 + c);
  });
}

CpFamilySampler::CpFamilySampler(const Weight& w, const KsgnsTriplet& t,
                                 double lambda, uint64_t seed)
    : w_(w), t_(t), lambda_(lambda), rng_(seed, "cp-family-sampler") {
  if (lambda < 0.0 || lambda >= 1.0) {
    throw GammaOutOfRange("sampler scale must lie in [0, 1)");
  }
  std::vector<Mat> constraints;
  constraints.reserve(t_.pi.size());
  for (const ModuleMap& p : t_.pi) constraints.push_back(p.mat);
  comm_ = commutant_basis(*t_.E, constraints);
}

DominatedMap CpFamilySampler::sample_f() {
  const int d = t_.E->dim;
  ModuleMap T;
  T.source = t_.E;
  T.target = t_.E;
  T.mat = Mat::Zero(d, d);
  if (!comm_.empty() && d > 0) {
    Mat C = Mat::Zero(d, d);
    for (const Mat& b : comm_) C += rng_.cnormal() * b;
    ModuleMap cmap;
    cmap.source = t_.E;
    cmap.target = t_.E;
    cmap.mat = C;
    const ModuleMap cadj = adjoint_solve(cmap, 1e-8);
    ModuleMap S = compose(cadj, cmap);
    const double top = op_norm(S);
    const double u = rng_.unit();
    if (top > 1e-12) {
      T = map_scale(u / top, S);
    }
  }
  return rho_from_T(t_, T, kDefaultTol);
}

DominatedMap CpFamilySampler::sample_g() {
  DominatedMap f = sample_f();
  return rho_from_T(t_, map_scale(lambda_, f.T), kDefaultTol);
}

DominatedMap CpFamilySampler::scaled_weight(double s) const {
  if (s < 0.0) throw Error("scale must be nonnegative");
  const ModuleMap T = map_scale(s, identity_map(t_.E));
  return rho_from_T(t_, T, kDefaultTol);
}

bool gs_limit_check(const Element& a, const Element& b, const Element& x,
                    CpFamilySampler& sampler, int samples) {
  const double a_min = min_eigenvalue(a);
  if (a_min < -kDefaultTol * std::max(1.0, norm(a))) {
    throw NotPositive("limit argument must be positive", a_min);
  }
  const double grid[] = {1e-2, 1e-4, 1e-6};
  const auto value_at = [&](const DominatedMap& eta) {
    return mul(mul(adjoint(b), cp_apply(eta.rho, a)), b);
  };
  for (double eps : grid) {
    const double lam =
        std::min(1.0 - 1e-12, 1.0 - eps / (2.0 * norm(x) + 2.0));
    bool found = norm_diff(x, value_at(sampler.scaled_weight(lam))) <= eps;
    for (int s = 0; !found && s < samples; ++s) {
      found = norm_diff(x, value_at(sampler.sample_f())) <= eps;
    }
    if (!found) return false;
  }
  return true;
}

}  // namespace opweight
