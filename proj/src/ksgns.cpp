#include "opweight/ksgns.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <optional>
#include <utility>

#include "opweight/cpmap.hpp"
#include "opweight/errors.hpp"
#include "opweight/parallel.hpp"
#include "opweight/rng.hpp"

namespace opweight {

namespace {

// Block/row/column location of a canonical basis index of B.
struct UnitLoc {
  int block;
  int row;
  int col;
};

std::vector<UnitLoc> unit_locations(const AlgebraSpec& spec) {
  std::vector<UnitLoc> locs;
  locs.reserve(static_cast<std::size_t>(spec.dim()));
  for (int k = 0; k < spec.block_count(); ++k) {
    const int nk = spec.block_dims[static_cast<std::size_t>(k)];
    for (int r = 0; r < nk; ++r) {
      for (int c = 0; c < nk; ++c) {
        locs.push_back(UnitLoc{k, r, c});
      }
    }
  }
  return locs;
}

void require_weight_shape(const Weight& w) {
  if (!w.shape_valid()) throw Error("weight has inconsistent shapes");
}

void require_projection(const Element& p, double tol) {
  const double scale = std::max(1.0, norm(p));
  if (norm_diff(mul(p, p), p) > tol * scale ||
      norm_diff(adjoint(p), p) > tol * scale) {
    throw Error("domain element is not a projection");
  }
}

// Coordinates, as columns, of the stored ideal basis.
Mat ideal_columns(const AlgebraSpec& A, const std::vector<Element>& basis) {
  Mat cols(A.dim(), static_cast<int>(basis.size()));
  for (int i = 0; i < cols.cols(); ++i) {
    cols.col(i) = coords(A, basis[static_cast<std::size_t>(i)]);
  }
  return cols;
}

}  // namespace

bool Weight::shape_valid() const {
  if (!A.valid() || !B.valid()) return false;
  if (!p.shape_matches(A)) return false;
  if (static_cast<int>(coeffs.size()) != A.dim()) return false;
  for (const Element& c : coeffs) {
    if (!c.shape_matches(B)) return false;
  }
  return true;
}

Weight make_weight(const AlgebraSpec& A, const AlgebraSpec& B, const Element& p,
                   const std::vector<Element>& raw_coeffs, double tol) {
  if (!A.valid() || !B.valid()) throw Error("invalid algebra shapes");
  if (!p.shape_matches(A)) throw Error("projection shape mismatch");
  if (static_cast<int>(raw_coeffs.size()) != A.dim()) {
    throw Error("coefficient table must cover the basis of A");
  }
  for (const Element& c : raw_coeffs) {
    if (!c.shape_matches(B)) throw Error("coefficient shape mismatch");
  }
  require_projection(p, tol);

  // Compress: stored value at alpha is the raw table applied to p e_alpha p,
  // which makes the table idempotent under re-compression.
  Weight w;
  w.A = A;
  w.B = B;
  w.p = p;
  w.coeffs.resize(static_cast<std::size_t>(A.dim()), zero(B));
  for (int alpha = 0; alpha < A.dim(); ++alpha) {
    const Element cut = mul(mul(p, basis_element(A, alpha)), p);
    const Vec c = coords(A, cut);
    Element value = zero(B);
    for (int beta = 0; beta < A.dim(); ++beta) {
      const Complex s = c(beta);
      if (std::abs(s) == 0.0) continue;
      value = add(value, scale(s, raw_coeffs[static_cast<std::size_t>(beta)]));
    }
    w.coeffs[static_cast<std::size_t>(alpha)] = value;
  }
  return w;
}

Element weight_apply(const Weight& w, const Element& x) {
  require_weight_shape(w);
  if (!x.shape_matches(w.A)) throw Error("weight argument shape mismatch");
  const Vec c = coords(w.A, x);
  Element value = zero(w.B);
  for (int alpha = 0; alpha < w.A.dim(); ++alpha) {
    const Complex s = c(alpha);
    if (std::abs(s) == 0.0) continue;
    value = add(value, scale(s, w.coeffs[static_cast<std::size_t>(alpha)]));
  }
  return value;
}

double weight_norm(const Weight& w) { return norm(weight_apply(w, w.p)); }

bool densely_defined(const Weight& w, double tol) {
  return norm_diff(w.p, unit(w.A)) <= tol * std::max(1.0, norm(unit(w.A)));
}

Weight weight_scale(double lambda, const Weight& w) {
  Weight out = w;
  for (Element& c : out.coeffs) c = scale(lambda, c);
  return out;
}

Weight weight_add(const Weight& w1, const Weight& w2) {
  if (!(w1.A == w2.A) || !(w1.B == w2.B)) {
    throw Error("weight sum requires matching algebras");
  }
  if (norm_diff(w1.p, w2.p) > kDefaultTol * std::max(1.0, norm(w1.p))) {
    throw Error("weight sum requires matching domain projections");
  }
  Weight out = w1;
  for (std::size_t i = 0; i < out.coeffs.size(); ++i) {
    out.coeffs[i] = add(out.coeffs[i], w2.coeffs[i]);
  }
  return out;
}

std::vector<Element> left_ideal_basis(const AlgebraSpec& A, const Element& p,
                                      double tol) {
  require_projection(p, tol);
  const int n = A.dim();
  Mat cols(n, n);
  for (int alpha = 0; alpha < n; ++alpha) {
    cols.col(alpha) = coords(A, mul(basis_element(A, alpha), p));
  }
  Eigen::ColPivHouseholderQR<Mat> qr(cols);
  qr.setThreshold(tol);
  const int rank = static_cast<int>(qr.rank());
  std::vector<int> picks;
  picks.reserve(static_cast<std::size_t>(rank));
  const auto& perm = qr.colsPermutation().indices();
  for (int i = 0; i < rank; ++i) picks.push_back(static_cast<int>(perm(i)));
  std::sort(picks.begin(), picks.end());
  std::vector<Element> basis;
  basis.reserve(picks.size());
  for (int alpha : picks) {
    basis.push_back(mul(basis_element(A, alpha), p));
  }
  return basis;
}

Vec n_coords(const KsgnsTriplet& t, const Element& a, double tol) {
  if (!a.shape_matches(t.A)) throw Error("ideal element shape mismatch");
  const int n = static_cast<int>(t.N_basis.size());
  const Vec rhs = coords(t.A, a);
  if (n == 0) {
    if (rhs.norm() > tol) throw Error("element lies outside the ideal span");
    return Vec::Zero(0);
  }
  const Mat cols = ideal_columns(t.A, t.N_basis);
  Eigen::ColPivHouseholderQR<Mat> qr(cols);
  const Vec c = qr.solve(rhs);
  const double residual = (cols * c - rhs).norm();
  if (residual > tol * std::max(1.0, rhs.norm())) {
    throw Error("element lies outside the ideal span");
  }
  return c;
}

ModuleMap lambda_of(const KsgnsTriplet& t, const Element& a, double tol) {
  const Vec c = n_coords(t, a, tol);
  ModuleMap out = zero_map(t.freeB, t.E);
  for (int i = 0; i < c.size(); ++i) {
    if (std::abs(c(i)) == 0.0) continue;
    out.mat += c(i) * t.Lambda[static_cast<std::size_t>(i)].mat;
  }
  return out;
}

ModuleMap pi_of(const KsgnsTriplet& t, const Element& x) {
  if (!x.shape_matches(t.A)) throw Error("algebra element shape mismatch");
  const Vec c = coords(t.A, x);
  ModuleMap out = zero_map(t.E, t.E);
  for (int alpha = 0; alpha < c.size(); ++alpha) {
    if (std::abs(c(alpha)) == 0.0) continue;
    out.mat += c(alpha) * t.pi[static_cast<std::size_t>(alpha)].mat;
  }
  return out;
}

KsgnsTriplet build_canonical_ksgns(const Weight& w, double tol) {
  require_weight_shape(w);
  require_projection(w.p, tol);

  KsgnsTriplet t;
  t.A = w.A;
  t.B = w.B;
  t.p = w.p;
  t.freeB = free_module(w.B);
  t.N_basis = left_ideal_basis(w.A, w.p, tol);

  const int n = static_cast<int>(t.N_basis.size());
  const int db = w.B.dim();
  const int fdim = n * db;
  const std::vector<UnitLoc> locs = unit_locations(w.B);

  // Pairwise weight values over the ideal basis; the kernel other tables
  // are derived from. Disjoint output slots, safe to fill in parallel.
  std::vector<Element> pair_value(static_cast<std::size_t>(n) *
                                      static_cast<std::size_t>(n),
                                  zero(w.B));
  parallel_for(n * n, [&](int idx) {
    const int i = idx / std::max(n, 1);
    const int j = idx % std::max(n, 1);
    pair_value[static_cast<std::size_t>(idx)] = weight_apply(
        w, mul(adjoint(t.N_basis[static_cast<std::size_t>(i)]),
               t.N_basis[static_cast<std::size_t>(j)]));
  });
  const auto pair_at = [&](int i, int j) -> const Element& {
    return pair_value[static_cast<std::size_t>(i) *
                          static_cast<std::size_t>(n) +
                      static_cast<std::size_t>(j)];
  };

  // Scalarized Gram of the free bimodule, row x = (i, beta_x), in the
  // closed form trace(b_x* value b_y) for matrix units b.
  Mat H = Mat::Zero(fdim, fdim);
  for (int x = 0; x < fdim; ++x) {
    const int ix = x / db;
    const UnitLoc& ux = locs[static_cast<std::size_t>(x % db)];
    for (int y = 0; y < fdim; ++y) {
      const int iy = y / db;
      const UnitLoc& uy = locs[static_cast<std::size_t>(y % db)];
      if (ux.block != uy.block || ux.col != uy.col) continue;
      H(x, y) = pair_at(ix, iy).blocks[static_cast<std::size_t>(ux.block)](
          ux.row, uy.row);
    }
  }

  const double h_norm = fdim > 0 ? op_norm_mat(H) : 0.0;
  const double herm = fdim > 0 ? (H - H.adjoint()).norm() : 0.0;
  if (herm > tol * std::max(1.0, h_norm)) {
    throw NotCompletelyPositive("weight Gram is not conjugate symmetric",
                                -herm);
  }
  const Mat Hs = 0.5 * (H + H.adjoint());
  const HermEig eig = herm_eig(Hs);
  const double sigma_max =
      fdim > 0 ? std::max(eig.eigenvalues.maxCoeff(), 0.0) : 0.0;
  if (fdim > 0) {
    const double lam_min = eig.eigenvalues.minCoeff();
    if (lam_min < -tol * std::max(1.0, sigma_max)) {
      throw NotCompletelyPositive("weight Gram has a negative eigenvalue",
                                  lam_min);
    }
  }

  const double cut = 1e-10 * sigma_max;
  std::vector<int> keep;
  for (int k = 0; k < fdim; ++k) {
    if (eig.eigenvalues(k) > cut) keep.push_back(k);
  }
  const int d = static_cast<int>(keep.size());

  // Section C: E coordinates to free coordinates; projection Q = C^H H.
  Mat C(fdim, d);
  Mat Q(d, fdim);
  for (int r = 0; r < d; ++r) {
    const double s = eig.eigenvalues(keep[static_cast<std::size_t>(r)]);
    const Vec u = eig.eigenvectors.col(keep[static_cast<std::size_t>(r)]);
    C.col(r) = u / std::sqrt(s);
    Q.row(r) = std::sqrt(s) * u.adjoint();
  }

  // Gram of the quotient in the orthonormalized coordinates:
  // G[r][s] = sum_{x,y} C(x,r) conj(C(y,s)) <f_x, f_y>, where the free
  // pairing <f_x, f_y> has the single nonzero base entry written below.
  std::vector<std::vector<Element>> gram(
      static_cast<std::size_t>(d),
      std::vector<Element>(static_cast<std::size_t>(d), zero(w.B)));
  parallel_for(d * d, [&](int idx) {
    const int r = idx / std::max(d, 1);
    const int s = idx % std::max(d, 1);
    Element acc = zero(w.B);
    for (int x = 0; x < fdim; ++x) {
      const Complex cx = C(x, r);
      if (std::abs(cx) < 1e-300) continue;
      const int ix = x / db;
      const UnitLoc& ux = locs[static_cast<std::size_t>(x % db)];
      for (int y = 0; y < fdim; ++y) {
        const Complex cy = std::conj(C(y, s));
        if (std::abs(cy) < 1e-300) continue;
        const int iy = y / db;
        const UnitLoc& uy = locs[static_cast<std::size_t>(y % db)];
        if (ux.block != uy.block) continue;
        const Complex v = pair_at(iy, ix).blocks[static_cast<std::size_t>(
            ux.block)](uy.row, ux.row);
        acc.blocks[static_cast<std::size_t>(ux.block)](uy.col, ux.col) +=
            cx * cy * v;
      }
    }
    gram[static_cast<std::size_t>(r)][static_cast<std::size_t>(s)] = acc;
  });

  // Right action descends entrywise: the free action is identity on the
  // ideal slot tensored with right multiplication on the base slot.
  const ModulePtr freeB = t.freeB;
  std::vector<Mat> act(static_cast<std::size_t>(db));
  const Mat id_n = Mat::Identity(n, n);
  for (int beta = 0; beta < db; ++beta) {
    const Mat big = kron_mat(id_n, freeB->action[static_cast<std::size_t>(beta)]);
    act[static_cast<std::size_t>(beta)] = Q * big * C;
  }

  t.E = make_module(w.B, d, std::move(act), std::move(gram), tol);

  t.Lambda.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    ModuleMap lm;
    lm.source = t.freeB;
    lm.target = t.E;
    lm.mat = Q.middleCols(i * db, db);
    t.Lambda.push_back(std::move(lm));
  }

  // Left multiplication by basis elements of A, in ideal coordinates.
  const Mat ncols = ideal_columns(w.A, t.N_basis);
  std::optional<Eigen::ColPivHouseholderQR<Mat>> nqr;
  if (n > 0) nqr.emplace(ncols);
  t.pi.reserve(static_cast<std::size_t>(w.A.dim()));
  for (int alpha = 0; alpha < w.A.dim(); ++alpha) {
    const Element ea = basis_element(w.A, alpha);
    Mat L = Mat::Zero(n, n);
    for (int i = 0; i < n; ++i) {
      const Vec rhs =
          coords(w.A, mul(ea, t.N_basis[static_cast<std::size_t>(i)]));
      const Vec c = nqr->solve(rhs);
      if ((ncols * c - rhs).norm() > tol * std::max(1.0, rhs.norm())) {
        throw Error("ideal is not closed under left multiplication");
      }
      L.col(i) = c;
    }
    ModuleMap pm;
    pm.source = t.E;
    pm.target = t.E;
    pm.mat = Q * kron_mat(L, Mat::Identity(db, db)) * C;
    t.pi.push_back(std::move(pm));
  }

  return t;
}

ModuleMap intertwiner_solve(const std::vector<ModuleMap>& from,
                            const std::vector<ModuleMap>& to) {
  if (from.size() != to.size() || from.empty()) {
    throw Error("intertwiner needs matching nonempty map families");
  }
  const int d_from = static_cast<int>(from.front().mat.rows());
  const int d_to = static_cast<int>(to.front().mat.rows());
  int total_cols = 0;
  for (const ModuleMap& f : from) total_cols += static_cast<int>(f.mat.cols());
  Mat A(d_from, total_cols);
  Mat B(d_to, total_cols);
  int at = 0;
  for (std::size_t k = 0; k < from.size(); ++k) {
    const int c = static_cast<int>(from[k].mat.cols());
    A.middleCols(at, c) = from[k].mat;
    B.middleCols(at, c) = to[k].mat;
    at += c;
  }
  // W A = B, solved by least squares through the transposed system.
  Eigen::ColPivHouseholderQR<Mat> qr(A.transpose());
  const Mat Wt = qr.solve(B.transpose());
  ModuleMap w;
  w.source = from.front().target;
  w.target = to.front().target;
  w.mat = Wt.transpose();
  return w;
}

Report verify_ksgns(const Weight& w, const KsgnsTriplet& t, double tol) {
  Report rep;
  require_weight_shape(w);
  const int n = static_cast<int>(t.N_basis.size());
  const int db = w.B.dim();
  const int d = t.E->dim;
  const double wscale = 1.0 + weight_norm(w);

  // Vector-level pairing identity on sampled module vectors.
  {
    Rng rng(0, "ksgns-verify-pairing");
    double worst = 0.0;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        const Element pair = weight_apply(
            w, mul(adjoint(t.N_basis[static_cast<std::size_t>(j)]),
                   t.N_basis[static_cast<std::size_t>(i)]));
        for (int rep_ix = 0; rep_ix < 4; ++rep_ix) {
          Vec b1(db), b2(db);
          for (int q = 0; q < db; ++q) {
            b1(q) = rng.cnormal();
            b2(q) = rng.cnormal();
          }
          const Vec x1 = t.Lambda[static_cast<std::size_t>(i)].mat * b1;
          const Vec x2 = t.Lambda[static_cast<std::size_t>(j)].mat * b2;
          const Element lhs = inner(*t.E, x1, x2);
          const Element e1 = from_coords(w.B, b1);
          const Element e2 = from_coords(w.B, b2);
          const Element rhs = mul(mul(adjoint(e2), pair), e1);
          worst = std::max(worst, norm_diff(lhs, rhs));
        }
      }
    }
    rep.add("ksgns/inner_product", worst <= tol * wscale * 10.0, worst);
  }

  // Composed-form reconstruction over all basis pairs. A structure map
  // without a module adjoint fails the clause with the identity residual.
  {
    double worst = 0.0;
    for (int i = 0; i < n; ++i) {
      ModuleMap adj_i;
      try {
        adj_i = adjoint_solve(t.Lambda[static_cast<std::size_t>(i)], tol);
      } catch (const NotAdjointable& e) {
        worst = std::max(worst, e.residual);
        continue;
      }
      for (int j = 0; j < n; ++j) {
        const Element got = map_to_element(
            compose(adj_i, t.Lambda[static_cast<std::size_t>(j)]));
        const Element want = weight_apply(
            w, mul(adjoint(t.N_basis[static_cast<std::size_t>(i)]),
                   t.N_basis[static_cast<std::size_t>(j)]));
        worst = std::max(worst, norm_diff(got, want));
      }
    }
    rep.add("ksgns/reconstruction", worst <= tol * wscale, worst);
  }

  // Density: the structure maps must span the module.
  {
    int rank = 0;
    if (n > 0 && d > 0) {
      Mat stacked(d, n * db);
      for (int i = 0; i < n; ++i) {
        stacked.middleCols(i * db, db) =
            t.Lambda[static_cast<std::size_t>(i)].mat;
      }
      Eigen::JacobiSVD<Mat> svd(stacked);
      const auto& sv = svd.singularValues();
      const double top = sv.size() > 0 ? sv(0) : 0.0;
      for (int k = 0; k < sv.size(); ++k) {
        if (sv(k) > 1e-10 * std::max(1.0, top)) ++rank;
      }
    }
    rep.add("ksgns/density", rank == d, static_cast<double>(d - rank));
  }

  // Represented action is a unital *-homomorphism.
  {
    double worst = op_norm_mat(pi_of(t, unit(w.A)).mat - Mat::Identity(d, d));
    for (int a = 0; a < w.A.dim(); ++a) {
      const Element ea = basis_element(w.A, a);
      const ModuleMap pa = t.pi[static_cast<std::size_t>(a)];
      try {
        const ModuleMap pa_adj = adjoint_solve(pa, tol);
        worst = std::max(worst,
                         map_norm_diff(pa_adj, pi_of(t, adjoint(ea))));
      } catch (const NotAdjointable& e) {
        worst = std::max(worst, e.residual);
      }
      for (int b = 0; b < w.A.dim(); ++b) {
        const Element eb = basis_element(w.A, b);
        worst = std::max(
            worst, map_norm_diff(
                       compose(pa, t.pi[static_cast<std::size_t>(b)]),
                       pi_of(t, mul(ea, eb))));
      }
    }
    rep.add("ksgns/pi_homomorphism", worst <= tol * wscale * 10.0, worst);
  }

  // Action compatibility for every basis element of A against the ideal.
  {
    double worst = 0.0;
    for (int a = 0; a < w.A.dim(); ++a) {
      const Element ea = basis_element(w.A, a);
      for (int i = 0; i < n; ++i) {
        const ModuleMap lhs =
            compose(t.pi[static_cast<std::size_t>(a)],
                    t.Lambda[static_cast<std::size_t>(i)]);
        const ModuleMap rhs = lambda_of(
            t, mul(ea, t.N_basis[static_cast<std::size_t>(i)]), tol);
        worst = std::max(worst, map_norm_diff(lhs, rhs));
      }
    }
    rep.add("ksgns/pi_compat", worst <= tol * wscale * 10.0, worst);
  }

  // Norm identity on basis elements and random ideal combinations.
  {
    Rng rng(0, "ksgns-verify-norm");
    double worst = 0.0;
    const int extra = n > 0 ? 20 : 0;
    for (int trial = 0; trial < n + extra; ++trial) {
      Element a = zero(w.A);
      if (trial < n) {
        a = t.N_basis[static_cast<std::size_t>(trial)];
      } else {
        for (int i = 0; i < n; ++i) {
          a = add(a, scale(rng.cnormal(),
                           t.N_basis[static_cast<std::size_t>(i)]));
        }
      }
      const double lhs = op_norm(lambda_of(t, a, tol));
      const double rhs = norm(weight_apply(w, mul(adjoint(a), a)));
      const double mag = 1.0 + std::max(lhs * lhs, rhs);
      worst = std::max(worst, std::abs(lhs * lhs - rhs) / mag);
    }
    rep.add("ksgns/norm_identity", worst <= tol * 100.0 * wscale, worst);
  }

  // Uniqueness: a fresh canonical build must be unitarily intertwined.
  {
    const KsgnsTriplet canon = build_canonical_ksgns(w, tol);
    if (n == 0 || d == 0) {
      rep.add("ksgns/uniqueness", canon.E->dim == d, 0.0);
    } else {
      // The two ideal bases need not coincide, so the intertwiner equations
      // pair the maps of the same algebra element, not the same index.
      std::vector<ModuleMap> from;
      from.reserve(canon.N_basis.size());
      bool representable = true;
      for (const Element& c : canon.N_basis) {
        try {
          from.push_back(lambda_of(t, c, std::max(tol, 1e-8)));
        } catch (const Error&) {
          representable = false;
          break;
        }
      }
      if (!representable) {
        rep.add("ksgns/uniqueness", false, 1.0,
                "canonical ideal escapes the triplet span");
        rep.sort_by_label();
        return rep;
      }
      const ModuleMap W = intertwiner_solve(from, canon.Lambda);
      double worst = 0.0;
      for (std::size_t i = 0; i < from.size(); ++i) {
        worst = std::max(worst,
                         map_norm_diff(compose(W, from[i]), canon.Lambda[i]));
      }
      worst = std::max(worst, b_linearity_defect(W));
      bool adjointable = true;
      try {
        const ModuleMap W_adj = adjoint_solve(W, std::max(tol, 1e-8));
        worst = std::max(worst,
                         map_norm_diff(compose(W_adj, W), identity_map(t.E)));
        worst = std::max(
            worst, map_norm_diff(compose(W, W_adj), identity_map(canon.E)));
      } catch (const Error&) {
        adjointable = false;
      }
      std::string witness;
      if (!adjointable) {
        witness = "intertwiner is not adjointable";
      } else if (canon.E->dim == d) {
        witness = "distance_from_identity=" +
                  std::to_string(map_norm_diff(W, identity_map(t.E)));
      }
      rep.add("ksgns/uniqueness",
              adjointable && worst <= tol * 100.0 * wscale, worst, witness);
    }
  }

  rep.sort_by_label();
  return rep;
}

Vec compactness_criterion(const Element& a, const KsgnsTriplet& t, double tol) {
  const ModuleMap la = lambda_of(t, a, tol);
  return compact_rep(la, std::max(tol, 1e-10));
}

namespace {

// Positive probe elements used by the convergence checks: squares of the
// basis elements plus the unit.
std::vector<Element> positive_probes(const AlgebraSpec& A) {
  std::vector<Element> probes;
  probes.reserve(static_cast<std::size_t>(A.dim()) + 1);
  probes.push_back(unit(A));
  for (int alpha = 0; alpha < A.dim(); ++alpha) {
    const Element e = basis_element(A, alpha);
    probes.push_back(mul(adjoint(e), e));
  }
  return probes;
}

}  // namespace

Report check_lower_semicontinuity(const Weight& w, CpFamilySampler& sampler,
                                  double tol) {
  if (!densely_defined(w, tol)) {
    throw NotDenselyDefined("lower semi-continuity checks need p = 1");
  }
  Report rep;
  const double wscale = 1.0 + weight_norm(w);
  const std::vector<Element> probes = positive_probes(w.A);

  // Sampled scaled members never exceed the weight on positive elements.
  {
    double worst_slack = 0.0;
    const int samples = 50;
    for (int s = 0; s < samples; ++s) {
      const DominatedMap rho = sampler.sample_g();
      for (const Element& x : probes) {
        const Element gap =
            sub(weight_apply(w, x), cp_apply(rho.rho, x));
        worst_slack = std::min(worst_slack, min_eigenvalue(gap));
      }
    }
    rep.add("lsc/domination", worst_slack >= -tol * wscale, -worst_slack);
  }

  // The canonical scaled subfamily increases to the weight.
  {
    double worst_mono = 0.0;
    double worst_final = 0.0;
    const int steps = 30;
    std::vector<double> lams;
    for (int k = 1; k <= steps; ++k) lams.push_back(1.0 - std::pow(2.0, -k));
    for (const Element& x : probes) {
      Element prev = zero(w.B);
      for (double lam : lams) {
        const Element val =
            cp_apply(sampler.scaled_weight(lam).rho, x);
        worst_mono = std::min(worst_mono, min_eigenvalue(sub(val, prev)));
        prev = val;
      }
      worst_final =
          std::max(worst_final, norm_diff(prev, weight_apply(w, x)));
    }
    const bool pass = worst_mono >= -tol * wscale &&
                      worst_final <= tol * 10.0 * wscale;
    rep.add("lsc/subfamily_convergence", pass,
            std::max(-worst_mono, worst_final));
  }

  // Domain set-equality clause: with p = 1 every positive element admits
  // the convergent scaled net, and there is nothing outside the domain.
  // Only falsifiable against the sample budget, so the row says so.
  {
    bool all_converge = true;
    double worst = 0.0;
    const double lam = 1.0 - 1e-9;
    for (const Element& x : probes) {
      const double res = norm_diff(cp_apply(sampler.scaled_weight(lam).rho, x),
                                   weight_apply(w, x));
      worst = std::max(worst, res);
      all_converge = all_converge && res <= 1e-7 * wscale;
    }
    rep.add("lsc/domain_equality", all_converge, worst, "verified at budget");
  }

  // Monotone chains through the partial-unit net converge to the full
  // value once the net reaches the unit.
  {
    Rng rng(0, "lsc-chains");
    double worst_mono = 0.0;
    double worst_final = 0.0;
    const PartialUnitNet net{w.A};
    for (int trial = 0; trial < 5; ++trial) {
      Vec c(w.A.dim());
      for (int q = 0; q < w.A.dim(); ++q) c(q) = rng.cnormal();
      const Element a = from_coords(w.A, c);
      Element prev_val = zero(w.B);
      for (int i = 0; i < net.size(); ++i) {
        const Element xi = mul(mul(adjoint(a), net.at(i)), a);
        const Element val = weight_apply(w, xi);
        worst_mono = std::min(worst_mono, min_eigenvalue(sub(val, prev_val)));
        prev_val = val;
      }
      worst_final = std::max(
          worst_final,
          norm_diff(prev_val, weight_apply(w, mul(adjoint(a), a))));
    }
    const bool pass =
        worst_mono >= -tol * 100.0 * wscale && worst_final <= tol * wscale;
    rep.add("lsc/monotone_chains", pass,
            std::max(-worst_mono, worst_final));
  }

  // The scaled operators converge to the identity in norm.
  {
    const double lam = 1.0 - std::pow(2.0, -30);
    const DominatedMap rho = sampler.scaled_weight(lam);
    const double res =
        w.A.dim() > 0 && rho.T.source->dim > 0
            ? map_norm_diff(rho.T, identity_map(rho.T.source))
            : 0.0;
    rep.add("lsc/operator_convergence", res <= 1e-8, res);
  }

  rep.sort_by_label();
  return rep;
}

Report multiplier_extension_check(const Weight& w, CpFamilySampler& sampler,
                                  double tol) {
  if (!densely_defined(w, tol)) {
    throw NotDenselyDefined("multiplier extension checks need p = 1");
  }
  Report rep;
  const double wscale = 1.0 + weight_norm(w);
  const std::vector<Element> probes = positive_probes(w.A);

  // With a unital domain the corner compression is the identity, so the
  // stored table already is the extended one.
  {
    double worst = 0.0;
    for (int alpha = 0; alpha < w.A.dim(); ++alpha) {
      const Element cut = mul(mul(w.p, basis_element(w.A, alpha)), w.p);
      worst = std::max(
          worst, norm_diff(weight_apply(w, cut),
                           w.coeffs[static_cast<std::size_t>(alpha)]));
    }
    rep.add("mult/domain_coincidence", worst <= tol * wscale, worst);
  }

  // The limit of the scaled family recovers the original values.
  {
    double worst = 0.0;
    const double lam = 1.0 - 1e-9;
    for (const Element& x : probes) {
      worst = std::max(worst,
                       norm_diff(cp_apply(sampler.scaled_weight(lam).rho, x),
                                 weight_apply(w, x)));
    }
    rep.add("mult/extension_value", worst <= 1e-7 * wscale, worst);
  }

  // Structure-map closure along stabilizing sequences: the approximants
  // converge and the closed map equals the original.
  {
    Rng rng(0, "mult-closure");
    KsgnsTriplet t = sampler.triplet();
    double worst = 0.0;
    for (int trial = 0; trial < 3; ++trial) {
      Vec ca(w.A.dim()), cb(w.A.dim());
      for (int q = 0; q < w.A.dim(); ++q) {
        ca(q) = rng.cnormal();
        cb(q) = rng.cnormal();
      }
      const Element a = from_coords(w.A, ca);
      const Element b = from_coords(w.A, cb);
      const ModuleMap la = lambda_of(t, a, tol);
      double prev = -1.0;
      for (int j = 1; j <= 12; ++j) {
        const Element aj = add(a, scale(std::pow(2.0, -j), b));
        const double gap = map_norm_diff(lambda_of(t, aj, tol), la);
        if (prev >= 0.0 && gap > prev + tol * wscale) {
          worst = std::max(worst, gap - prev);
        }
        prev = gap;
      }
      const Element a_final = a;
      worst = std::max(worst,
                       map_norm_diff(lambda_of(t, a_final, tol), la));
    }
    rep.add("mult/lambda_closure", worst <= tol * 10.0 * wscale, worst);
  }

  // Adjoints converge along stabilizing sequences; constant tails land
  // exactly.
  {
    Rng rng(1, "mult-adjoint");
    KsgnsTriplet t = sampler.triplet();
    double worst = 0.0;
    for (int trial = 0; trial < 3; ++trial) {
      Vec ca(w.A.dim()), cb(w.A.dim());
      for (int q = 0; q < w.A.dim(); ++q) {
        ca(q) = rng.cnormal();
        cb(q) = rng.cnormal();
      }
      const Element a = from_coords(w.A, ca);
      const Element b = from_coords(w.A, cb);
      const ModuleMap la_adj =
          adjoint_solve(lambda_of(t, a, tol), std::max(tol, 1e-8));
      for (int j = 8; j <= 12; ++j) {
        const Element aj = add(a, scale(std::pow(2.0, -j), b));
        const ModuleMap laj_adj =
            adjoint_solve(lambda_of(t, aj, tol), std::max(tol, 1e-8));
        const double gap = map_norm_diff(laj_adj, la_adj);
        const double bound = std::pow(2.0, -j) * (1.0 + op_norm(lambda_of(t, b, tol)));
        if (gap > bound * 10.0 + tol * wscale) {
          worst = std::max(worst, gap - bound);
        }
      }
      const ModuleMap la_tail_adj =
          adjoint_solve(lambda_of(t, a, tol), std::max(tol, 1e-8));
      worst = std::max(worst, map_norm_diff(la_tail_adj, la_adj));
    }
    rep.add("mult/adjoint_convergence", worst <= tol * 10.0 * wscale, worst);
  }

  // Compressed scalar values of the scaled family reach the weight.
  {
    Rng rng(2, "mult-scalar");
    double worst = 0.0;
    const double lam = 1.0 - 1e-9;
    const DominatedMap rho = sampler.scaled_weight(lam);
    for (const Element& x : probes) {
      Vec cb(w.B.dim());
      for (int q = 0; q < w.B.dim(); ++q) cb(q) = rng.cnormal();
      const Element b = from_coords(w.B, cb);
      const Element got = mul(mul(adjoint(b), cp_apply(rho.rho, x)), b);
      const Element want = mul(mul(adjoint(b), weight_apply(w, x)), b);
      worst = std::max(worst, norm_diff(got, want) /
                                  (1.0 + norm(want)));
    }
    rep.add("mult/scalar_convergence", worst <= 1e-8 * wscale * 10.0, worst);
  }

  // Sampled scaled members stay dominated by the extension (= the weight).
  {
    double worst_slack = 0.0;
    for (int s = 0; s < 20; ++s) {
      const DominatedMap rho = sampler.sample_g();
      for (const Element& x : probes) {
        worst_slack = std::min(
            worst_slack,
            min_eigenvalue(sub(weight_apply(w, x), cp_apply(rho.rho, x))));
      }
    }
    rep.add("mult/sampled_domination", worst_slack >= -tol * wscale,
            -worst_slack);
  }

  rep.sort_by_label();
  return rep;
}

}  // namespace opweight
