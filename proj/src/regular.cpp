#include "opweight/regular.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <utility>

#include "opweight/errors.hpp"
#include "opweight/sampling.hpp"

namespace opweight {

namespace {

int svd_rank(const Mat& m) {
  if (m.rows() == 0 || m.cols() == 0) return 0;
  Eigen::JacobiSVD<Mat> svd(m);
  const double top = svd.singularValues().size() > 0
                         ? svd.singularValues()(0)
                         : 0.0;
  const double cut = 1e-10 * std::max(top, 1.0e-300);
  int r = 0;
  for (int k = 0; k < svd.singularValues().size(); ++k) {
    if (svd.singularValues()(k) > cut) ++r;
  }
  return r;
}

// Right-support projection of the span: per block, the projection onto the
// joint row space of the basis elements.
Element support_projection(const AlgebraSpec& A,
                           const std::vector<Element>& basis) {
  Element q = zero(A);
  for (std::size_t b = 0; b < q.blocks.size(); ++b) {
    const int mdim = static_cast<int>(q.blocks[b].rows());
    Mat stacked(mdim, static_cast<int>(basis.size()) * mdim);
    for (std::size_t k = 0; k < basis.size(); ++k) {
      stacked.middleCols(static_cast<int>(k) * mdim, mdim) =
          basis[k].blocks[b].adjoint();
    }
    if (basis.empty()) {
      q.blocks[b].setZero();
      continue;
    }
    Eigen::JacobiSVD<Mat> svd(stacked, Eigen::ComputeThinU);
    const double top = svd.singularValues().size() > 0
                           ? svd.singularValues()(0)
                           : 0.0;
    const double cut = 1e-10 * std::max(top, 1.0e-300);
    int r = 0;
    for (int k = 0; k < svd.singularValues().size(); ++k) {
      if (svd.singularValues()(k) > cut) ++r;
    }
    const Mat u = svd.matrixU().leftCols(r);
    q.blocks[b] = u * u.adjoint();
  }
  return q;
}

Mat element_columns(const AlgebraSpec& A, const std::vector<Element>& list) {
  Mat cols(A.dim(), static_cast<int>(list.size()));
  for (std::size_t k = 0; k < list.size(); ++k) {
    cols.col(static_cast<int>(k)) = coords(A, list[k]);
  }
  return cols;
}

// Least-squares W with W * lhs = rhs, through the transposed system.
Mat solve_left(const Mat& lhs, const Mat& rhs) {
  Eigen::ColPivHouseholderQR<Mat> qr(lhs.transpose());
  return qr.solve(rhs.transpose()).transpose();
}

Mat combine_maps(const std::vector<ModuleMap>& maps, const Vec& c) {
  Mat acc = Mat::Zero(maps.front().mat.rows(), maps.front().mat.cols());
  for (std::size_t k = 0; k < maps.size(); ++k) {
    acc += c(static_cast<int>(k)) * maps[k].mat;
  }
  return acc;
}

ModuleMap map_on(const ModulePtr& src, const ModulePtr& dst, Mat m) {
  ModuleMap out;
  out.source = src;
  out.target = dst;
  out.mat = std::move(m);
  return out;
}

std::string idx(int i) { return "[" + std::to_string(i) + "]"; }

}  // namespace

SeedData seed_from_triplet(const Weight& w, const KsgnsTriplet& t,
                           const std::vector<double>& lambdas) {
  if (lambdas.empty()) throw Error("seed family must be nonempty");
  SeedData s;
  s.A = t.A;
  s.B = t.B;
  s.E = t.E;
  s.freeB = t.freeB;
  s.N0 = t.N_basis;
  s.Lambda0 = t.Lambda;
  const CpMap base = cp_from_weight(w);
  for (const double lam : lambdas) {
    ModuleMap T = identity_map(t.E);
    T.mat *= lam;
    s.family.emplace_back(std::move(T), cp_scale(lam, base));
  }
  return s;
}

KsgnsTriplet close_lambda(const SeedData& seed, double tol) {
  const int n = static_cast<int>(seed.N0.size());
  const int d = seed.E ? seed.E->dim : -1;
  if (d < 0 || !seed.freeB || !seed.A.valid() || !seed.B.valid()) {
    throw Error("seed is missing a module or algebra");
  }
  if (seed.Lambda0.size() != seed.N0.size()) {
    throw Error("seed tables have mismatched lengths");
  }
  if (seed.family.empty()) throw Error("seed family must be nonempty");
  for (const ModuleMap& lm : seed.Lambda0) {
    if (lm.source != seed.freeB || lm.target != seed.E) {
      throw Error("seed structure map acts between the wrong modules");
    }
  }
  const int db = seed.B.dim();
  const double gate = std::max(tol, 1e-12) * 100.0;

  // Density of the seed columns in the module.
  if (d > 0) {
    Mat cols(d, n * db);
    for (int i = 0; i < n; ++i) {
      cols.middleCols(i * db, db) = seed.Lambda0[static_cast<std::size_t>(i)].mat;
    }
    const int r = svd_rank(cols);
    if (r < d) {
      throw SeedInconsistent("seed maps do not span the module",
                             static_cast<double>(d - r));
    }
  }

  // Independence of the seed basis, and stability of its span under left
  // multiplication by the algebra.
  const Mat ncols = element_columns(seed.A, seed.N0);
  if (svd_rank(ncols) < n) {
    throw SeedInconsistent("seed ideal basis is dependent", 1.0);
  }
  const int da = seed.A.dim();
  if (n > 0) {
    Mat gen(da, da * n);
    for (int alpha = 0; alpha < da; ++alpha) {
      for (int i = 0; i < n; ++i) {
        gen.col(alpha * n + i) = coords(
            seed.A, mul(basis_element(seed.A, alpha),
                        seed.N0[static_cast<std::size_t>(i)]));
      }
    }
    const int r_gen = svd_rank(gen);
    if (r_gen > n) {
      throw SeedInconsistent("seed span is not a left ideal",
                             static_cast<double>(r_gen - n));
    }
  }

  // The operator family: positive contractions satisfying the pairing
  // identity against the seed maps, ending at the identity.
  double lam_scale = 1.0;
  if (d > 0) {
    std::vector<ModuleMap> adj0;
    adj0.reserve(seed.Lambda0.size());
    try {
      for (const ModuleMap& lm : seed.Lambda0) {
        adj0.push_back(adjoint_solve(lm, std::max(tol, 1e-8)));
      }
    } catch (const NotAdjointable& e) {
      throw SeedInconsistent("seed map has no module adjoint", e.residual);
    }
    for (const ModuleMap& lm : seed.Lambda0) {
      lam_scale = std::max(lam_scale, op_norm(lm));
    }
    for (std::size_t f = 0; f < seed.family.size(); ++f) {
      const ModuleMap& T = seed.family[f].first;
      const CpMap& rho = seed.family[f].second;
      if (T.source != seed.E || T.target != seed.E) {
        throw Error("family operator acts on the wrong module");
      }
      const double sd = self_adjoint_defect(T);
      const double mn = map_min_eigenvalue(T);
      const double top = op_norm(T);
      if (sd > gate || mn < -gate || top > 1.0 + gate) {
        throw SeedInconsistent("family operator is not a positive contraction",
                               std::max(sd, std::max(-mn, top - 1.0)));
      }
      double worst = 0.0;
      for (int l = 0; l < n; ++l) {
        for (int k = 0; k < n; ++k) {
          const Element val = cp_apply(
              rho, mul(adjoint(seed.N0[static_cast<std::size_t>(l)]),
                       seed.N0[static_cast<std::size_t>(k)]));
          const ModuleMap lhs = left_mult_map(seed.freeB, val);
          const ModuleMap rhs = compose(
              adj0[static_cast<std::size_t>(l)],
              compose(T, seed.Lambda0[static_cast<std::size_t>(k)]));
          worst = std::max(worst, map_norm_diff(lhs, rhs));
        }
      }
      if (worst > gate * lam_scale * lam_scale) {
        throw SeedInconsistent("seed family identity fails", worst);
      }
    }
    const double unit_gap =
        map_norm_diff(seed.family.back().first, identity_map(seed.E));
    if (unit_gap > gate) {
      throw SeedInconsistent("seed family does not attain the unit", unit_gap);
    }
  } else {
    for (const auto& member : seed.family) {
      const double r = cp_norm(member.second);
      if (r > gate) {
        throw SeedInconsistent("family map must vanish on a null module", r);
      }
    }
  }

  // Support projection of the ideal; the seed basis must be fixed by it.
  const Element q = support_projection(seed.A, seed.N0);
  for (const Element& nk : seed.N0) {
    const double fix = norm_diff(mul(nk, q), nk);
    if (fix > gate) {
      throw SeedInconsistent("support projection misses the seed basis", fix);
    }
  }

  // Action maps, solved from the spanning columns one basis element at a
  // time; the homomorphism property is certified afterwards.
  std::vector<ModuleMap> pi;
  pi.reserve(static_cast<std::size_t>(da));
  std::optional<Eigen::ColPivHouseholderQR<Mat>> nqr;
  if (n > 0) nqr.emplace(ncols);
  for (int alpha = 0; alpha < da; ++alpha) {
    if (d == 0 || n == 0) {
      pi.push_back(map_on(seed.E, seed.E, Mat::Zero(d, d)));
      continue;
    }
    const Element ea = basis_element(seed.A, alpha);
    std::vector<ModuleMap> targets;
    targets.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      const Vec rhs =
          coords(seed.A, mul(ea, seed.N0[static_cast<std::size_t>(i)]));
      const Vec c = nqr->solve(rhs);
      if ((ncols * c - rhs).norm() > gate * std::max(1.0, rhs.norm())) {
        throw SeedInconsistent("left multiple escapes the seed span",
                               (ncols * c - rhs).norm());
      }
      targets.push_back(map_on(seed.freeB, seed.E,
                               combine_maps(seed.Lambda0, c)));
    }
    ModuleMap pa = intertwiner_solve(seed.Lambda0, targets);
    double res = 0.0;
    for (int i = 0; i < n; ++i) {
      res = std::max(
          res, map_norm_diff(
                   compose(pa, seed.Lambda0[static_cast<std::size_t>(i)]),
                   targets[static_cast<std::size_t>(i)]));
    }
    if (res > gate * lam_scale) {
      throw SeedInconsistent("action solve leaves a residual", res);
    }
    pi.push_back(std::move(pa));
  }

  if (d > 0) {
    const auto pi_at = [&](const Element& x) {
      Mat acc = Mat::Zero(d, d);
      const Vec c = coords(seed.A, x);
      for (int alpha = 0; alpha < da; ++alpha) {
        acc += c(alpha) * pi[static_cast<std::size_t>(alpha)].mat;
      }
      return acc;
    };
    double hom = 0.0;
    for (int alpha = 0; alpha < da; ++alpha) {
      const Element ea = basis_element(seed.A, alpha);
      for (int beta = 0; beta < da; ++beta) {
        const Element eb = basis_element(seed.A, beta);
        hom = std::max(
            hom, op_norm_mat(pi_at(mul(ea, eb)) -
                             pi[static_cast<std::size_t>(alpha)].mat *
                                 pi[static_cast<std::size_t>(beta)].mat));
      }
      try {
        const ModuleMap pa_adj = adjoint_solve(
            pi[static_cast<std::size_t>(alpha)], std::max(tol, 1e-8));
        hom = std::max(hom, op_norm_mat(pi_at(adjoint(ea)) - pa_adj.mat));
      } catch (const NotAdjointable& e) {
        hom = std::max(hom, e.residual);
      }
    }
    hom = std::max(hom,
                   op_norm_mat(pi_at(unit(seed.A)) - Mat::Identity(d, d)));
    if (hom > gate * std::max(1.0, lam_scale)) {
      throw SeedInconsistent("closed action is not a homomorphism", hom);
    }
  }

  KsgnsTriplet t;
  t.A = seed.A;
  t.B = seed.B;
  t.p = q;
  t.E = seed.E;
  t.freeB = seed.freeB;
  t.N_basis = seed.N0;
  t.Lambda = seed.Lambda0;
  t.pi = std::move(pi);
  return t;
}

Weight construct_weight(const SeedData& seed, double tol) {
  const KsgnsTriplet t = close_lambda(seed, tol);
  const int n = static_cast<int>(t.N_basis.size());
  const int da = t.A.dim();
  const double gate = std::max(tol, 1e-12) * 100.0;

  std::vector<Element> coeffs(static_cast<std::size_t>(da), zero(t.B));
  if (t.E->dim == 0 || n == 0) {
    return make_weight(t.A, t.B, t.p, coeffs, tol);
  }

  std::vector<ModuleMap> adj;
  adj.reserve(t.Lambda.size());
  for (const ModuleMap& lm : t.Lambda) {
    adj.push_back(adjoint_solve(lm, std::max(tol, 1e-8)));
  }
  double lam_scale = 1.0;
  for (const ModuleMap& lm : t.Lambda) {
    lam_scale = std::max(lam_scale, op_norm(lm));
  }

  // Pairing values Lambda(n_l)* Lambda(n_k), and the pairing against every
  // family operator for the kernel certificate.
  const auto pair_with = [&](const ModuleMap& T, int l, int k) {
    return map_to_element(
        compose(adj[static_cast<std::size_t>(l)],
                compose(T, t.Lambda[static_cast<std::size_t>(k)])));
  };

  Mat M(da, n * n);
  for (int l = 0; l < n; ++l) {
    for (int k = 0; k < n; ++k) {
      M.col(l * n + k) = coords(
          t.A, mul(adjoint(t.N_basis[static_cast<std::size_t>(l)]),
                   t.N_basis[static_cast<std::size_t>(k)]));
    }
  }

  // Every kernel vector of the multiplication map must be killed by every
  // family pairing; that is the well-definedness certificate.
  Eigen::JacobiSVD<Mat> svd(M, Eigen::ComputeFullV);
  const double top =
      svd.singularValues().size() > 0 ? svd.singularValues()(0) : 0.0;
  const double cut = 1e-10 * std::max(top, 1.0e-300);
  const ModuleMap ident = identity_map(t.E);
  for (int j = 0; j < M.cols(); ++j) {
    const double sv = j < svd.singularValues().size()
                          ? svd.singularValues()(j)
                          : 0.0;
    if (sv > cut) continue;
    const Vec c = svd.matrixV().col(j);
    for (std::size_t f = 0; f <= seed.family.size(); ++f) {
      const ModuleMap& T =
          f < seed.family.size() ? seed.family[f].first : ident;
      Element acc = zero(t.B);
      for (int l = 0; l < n; ++l) {
        for (int k = 0; k < n; ++k) {
          acc = add(acc, scale(c(l * n + k), pair_with(T, l, k)));
        }
      }
      const double res = norm(acc);
      if (res > std::max(gate, 1e-9) * lam_scale * lam_scale) {
        throw IllDefined("kernel identity fails", res);
      }
    }
  }

  // Corner values through the pairing, one basis element at a time.
  Eigen::ColPivHouseholderQR<Mat> mqr(M);
  for (int alpha = 0; alpha < da; ++alpha) {
    const Element corner = mul(mul(t.p, basis_element(t.A, alpha)), t.p);
    const Vec rhs = coords(t.A, corner);
    const Vec c = mqr.solve(rhs);
    if ((M * c - rhs).norm() > gate * std::max(1.0, rhs.norm())) {
      throw IllDefined("corner value escapes the pairing span",
                       (M * c - rhs).norm());
    }
    Element acc = zero(t.B);
    for (int l = 0; l < n; ++l) {
      for (int k = 0; k < n; ++k) {
        acc = add(acc, scale(c(l * n + k), pair_with(ident, l, k)));
      }
    }
    coeffs[static_cast<std::size_t>(alpha)] = acc;
  }
  return make_weight(t.A, t.B, t.p, coeffs, tol);
}

TruncatingNet verify_truncating_net(const Weight& w, const KsgnsTriplet& t,
                                    const std::vector<Element>& net,
                                    double tol) {
  TruncatingNet out;
  out.u = net;
  Report& rep = out.rep;
  const int n = static_cast<int>(t.N_basis.size());
  const int d = t.E->dim;
  const double gate = std::max(tol, 1e-12) * 100.0;
  double lam_scale = 1.0;
  for (const ModuleMap& lm : t.Lambda) {
    if (d > 0) lam_scale = std::max(lam_scale, op_norm(lm));
  }
  const ModuleMap lam_p = lambda_of(t, t.p, std::max(tol, 1e-8));

  const auto placeholder = [&]() {
    out.S.push_back(map_on(t.E, t.E, Mat::Zero(d, d)));
    out.T.push_back(map_on(t.E, t.E, Mat::Zero(d, d)));
    out.w.push_back(map_on(t.freeB, t.E, Mat::Zero(d, t.B.dim())));
    out.v.push_back(map_on(t.freeB, t.E, Mat::Zero(d, t.B.dim())));
    out.rho.push_back(cp_zero(t.A, t.B));
  };

  for (std::size_t i = 0; i < net.size(); ++i) {
    const Element& u = net[static_cast<std::size_t>(i)];
    const std::string si = idx(static_cast<int>(i));
    const double nu = norm(u);
    rep.add("net/norm_bound" + si, nu <= 1.0 + gate,
            std::max(0.0, nu - 1.0));

    // Stability of the ideal under the net element; everything after this
    // clause needs the structure maps at n_k u.
    bool stable = true;
    double stab_res = 0.0;
    std::vector<ModuleMap> targets;
    targets.reserve(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
      try {
        targets.push_back(lambda_of(
            t, mul(t.N_basis[static_cast<std::size_t>(k)], u),
            std::max(tol, 1e-8)));
      } catch (const Error&) {
        stable = false;
        stab_res = 1.0;
        break;
      }
    }
    rep.add("net/ideal_stability" + si, stable, stab_res);
    if (!stable || n == 0 || d == 0) {
      placeholder();
      for (const char* lbl :
           {"net/s_solve", "net/s_contraction", "net/s_commutant",
            "net/t_member", "net/rho_cp", "net/transport",
            "net/v_intertwine", "net/v_norm", "net/w_norm",
            "net/gram_agree"}) {
        if (!stable) {
          rep.add_skipped(std::string(lbl) + si, "ideal is not stable");
        } else {
          rep.add(std::string(lbl) + si, true, 0.0, "empty module");
        }
      }
      continue;
    }

    const ModuleMap S = intertwiner_solve(t.Lambda, targets);
    double s_res = 0.0;
    for (int k = 0; k < n; ++k) {
      s_res = std::max(
          s_res,
          map_norm_diff(compose(S, t.Lambda[static_cast<std::size_t>(k)]),
                        targets[static_cast<std::size_t>(k)]));
    }
    rep.add("net/s_solve" + si, s_res <= gate * lam_scale, s_res);
    const double s_norm = op_norm(S);
    rep.add("net/s_contraction" + si, s_norm <= 1.0 + gate,
            std::max(0.0, s_norm - 1.0));
    double comm = 0.0;
    for (const ModuleMap& pa : t.pi) {
      comm = std::max(comm, map_norm_diff(compose(S, pa), compose(pa, S)));
    }
    rep.add("net/s_commutant" + si, comm <= gate * std::max(1.0, s_norm),
            comm);

    ModuleMap T = map_on(t.E, t.E, Mat::Zero(d, d));
    ModuleMap w_i = map_on(t.freeB, t.E, Mat::Zero(d, t.B.dim()));
    ModuleMap v_i = w_i;
    CpMap rho_i = cp_zero(t.A, t.B);
    bool member_ok = true;
    double member_res = 0.0;
    try {
      const ModuleMap s_adj = adjoint_solve(S, std::max(tol, 1e-8));
      T = compose(s_adj, S);
      const DominatedMap dm = rho_from_T(t, T, tol);
      rho_i = dm.rho;
      v_i = dm.v;
    } catch (const NotAdjointable& e) {
      member_ok = false;
      member_res = e.residual;
    } catch (const NotPositive& e) {
      member_ok = false;
      member_res = -e.min_eigenvalue;
    } catch (const Error&) {
      member_ok = false;
      member_res = 1.0;
    }
    rep.add("net/t_member" + si, member_ok, member_res);
    if (!member_ok) {
      out.S.push_back(S);
      out.T.push_back(T);
      out.w.push_back(w_i);
      out.v.push_back(v_i);
      out.rho.push_back(rho_i);
      for (const char* lbl : {"net/rho_cp", "net/transport",
                              "net/v_intertwine", "net/v_norm", "net/w_norm",
                              "net/gram_agree"}) {
        rep.add_skipped(std::string(lbl) + si, "member derivation failed");
      }
      continue;
    }
    const CpVerdict cv = cp_verdict(rho_i, std::max(tol, 1e-8));
    rep.add("net/rho_cp" + si, cv.cp, std::max(0.0, -cv.min_eigenvalue));

    w_i = compose(S, lam_p);
    double transport = 0.0;
    for (int k = 0; k < n; ++k) {
      transport = std::max(
          transport,
          map_norm_diff(
              compose(pi_of(t, t.N_basis[static_cast<std::size_t>(k)]), w_i),
              targets[static_cast<std::size_t>(k)]));
    }
    rep.add("net/transport" + si, transport <= gate * lam_scale, transport);

    double v_int = 0.0;
    double v_gap = 0.0;
    double w_gap = 0.0;
    double gram_gap = 0.0;
    try {
      const ModuleMap sq = sqrt_map(T, std::max(tol * 100.0, 1e-8));
      v_i = compose(sq, lam_p);
      for (int k = 0; k < n; ++k) {
        v_int = std::max(
            v_int,
            map_norm_diff(
                compose(pi_of(t, t.N_basis[static_cast<std::size_t>(k)]),
                        v_i),
                compose(sq, t.Lambda[static_cast<std::size_t>(k)])));
      }
      const ModuleMap v_adj = adjoint_solve(v_i, std::max(tol, 1e-8));
      const ModuleMap w_adj = adjoint_solve(w_i, std::max(tol, 1e-8));
      const Element vv = map_to_element(compose(v_adj, v_i));
      const Element ww = map_to_element(compose(w_adj, w_i));
      const double nr = cp_norm(rho_i);
      v_gap = std::abs(norm(vv) - nr);
      w_gap = std::abs(norm(ww) - nr);
      gram_gap = norm_diff(vv, ww);
    } catch (const Error&) {
      v_int = v_gap = w_gap = gram_gap = 1.0;
    }
    const double nscale = std::max(1.0, lam_scale * lam_scale);
    rep.add("net/v_intertwine" + si, v_int <= gate * lam_scale, v_int);
    rep.add("net/v_norm" + si, v_gap <= gate * nscale, v_gap);
    rep.add("net/w_norm" + si, w_gap <= gate * nscale, w_gap);
    rep.add("net/gram_agree" + si, gram_gap <= gate * nscale, gram_gap);

    out.S.push_back(S);
    out.T.push_back(T);
    out.w.push_back(w_i);
    out.v.push_back(v_i);
    out.rho.push_back(rho_i);
  }

  if (net.empty()) {
    rep.add("net/final_unit", false, 1.0, "empty net");
    rep.add("net/attains_weight", false, 1.0, "empty net");
    return out;
  }
  const double final_gap = norm_diff(net.back(), unit(t.A));
  rep.add("net/final_unit", final_gap <= gate, final_gap);
  double attain = 0.0;
  for (int alpha = 0; alpha < t.A.dim(); ++alpha) {
    const Element corner =
        mul(mul(t.p, basis_element(t.A, alpha)), t.p);
    attain = std::max(
        attain, norm_diff(cp_apply(out.rho.back(), corner),
                          weight_apply(w, basis_element(t.A, alpha))));
  }
  const double wscale = 1.0 + weight_norm(w);
  rep.add("net/attains_weight", attain <= gate * wscale, attain);
  return out;
}

std::vector<Element> right_ideal_basis(const AlgebraSpec& B, const Element& q,
                                       double tol) {
  const double pr = std::max(norm_diff(mul(q, q), q), herm_defect(q));
  if (pr > std::max(tol, 1e-12) * 100.0) {
    throw Error("right ideal generator must be a projection");
  }
  const int n = B.dim();
  Mat cols(n, n);
  for (int beta = 0; beta < n; ++beta) {
    cols.col(beta) = coords(B, mul(q, basis_element(B, beta)));
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
  for (int beta : picks) {
    basis.push_back(mul(q, basis_element(B, beta)));
  }
  return basis;
}

QuotientModule build_quotient_module(const Weight& w, const KsgnsTriplet& t,
                                     const std::vector<Element>& D,
                                     double tol) {
  QuotientModule out;
  out.D = D;
  Report& rep = out.rep;
  const int n = static_cast<int>(t.N_basis.size());
  const int m = static_cast<int>(D.size());
  const int nm = n * m;
  const int d = t.E->dim;
  const int db = t.B.dim();
  const double gate = std::max(tol, 1e-12) * 100.0;

  // Pairwise inner products of the generators n_k (x) d_l; index k*m + l.
  std::vector<Element> P(static_cast<std::size_t>(nm) *
                             static_cast<std::size_t>(nm),
                         zero(t.B));
  const auto p_at = [&](int x, int y) -> Element& {
    return P[static_cast<std::size_t>(x) * static_cast<std::size_t>(nm) +
             static_cast<std::size_t>(y)];
  };
  for (int x = 0; x < nm; ++x) {
    const int kx = x / std::max(m, 1);
    const int lx = x % std::max(m, 1);
    for (int y = 0; y < nm; ++y) {
      const int ky = y / std::max(m, 1);
      const int ly = y % std::max(m, 1);
      const Element mid = weight_apply(
          w, mul(adjoint(t.N_basis[static_cast<std::size_t>(ky)]),
                 t.N_basis[static_cast<std::size_t>(kx)]));
      p_at(x, y) = mul(mul(adjoint(D[static_cast<std::size_t>(ly)]), mid),
                       D[static_cast<std::size_t>(lx)]);
    }
  }

  Mat Hs(nm, nm);
  for (int x = 0; x < nm; ++x) {
    for (int y = 0; y < nm; ++y) {
      Hs(x, y) = faithful_trace(p_at(y, x));
    }
  }
  const double herm = nm > 0 ? (Hs - Hs.adjoint()).norm() : 0.0;
  if (herm > gate * std::max(1.0, nm > 0 ? op_norm_mat(Hs) : 0.0)) {
    throw Error("quotient pairing is not conjugate symmetric");
  }
  const Mat Hh = nm > 0 ? Mat(0.5 * (Hs + Hs.adjoint())) : Hs;
  const HermEig eig = nm > 0 ? herm_eig(Hh) : HermEig{};
  const double sigma_max =
      nm > 0 ? std::max(eig.eigenvalues.maxCoeff(), 0.0) : 0.0;
  if (nm > 0 && eig.eigenvalues.minCoeff() < -gate * std::max(1.0, sigma_max)) {
    throw NotPositive("quotient pairing has a negative eigenvalue",
                      eig.eigenvalues.minCoeff());
  }
  const double cut = 1e-10 * sigma_max;
  std::vector<int> keep;
  for (int k = 0; k < nm; ++k) {
    if (eig.eigenvalues(k) > cut) keep.push_back(k);
  }
  const int dq = static_cast<int>(keep.size());
  Mat C(nm, dq);
  Mat Q(dq, nm);
  for (int r = 0; r < dq; ++r) {
    const double s = eig.eigenvalues(keep[static_cast<std::size_t>(r)]);
    const Vec uvec = eig.eigenvectors.col(keep[static_cast<std::size_t>(r)]);
    C.col(r) = uvec / std::sqrt(s);
    Q.row(r) = std::sqrt(s) * uvec.adjoint();
  }

  std::vector<std::vector<Element>> gram(
      static_cast<std::size_t>(dq),
      std::vector<Element>(static_cast<std::size_t>(dq), zero(t.B)));
  for (int r = 0; r < dq; ++r) {
    for (int s = 0; s < dq; ++s) {
      Element acc = zero(t.B);
      for (int x = 0; x < nm; ++x) {
        if (std::abs(C(x, r)) < 1e-300) continue;
        for (int y = 0; y < nm; ++y) {
          const Complex cy = std::conj(C(y, s));
          if (std::abs(cy) < 1e-300) continue;
          acc = add(acc, scale(C(x, r) * cy, p_at(x, y)));
        }
      }
      gram[static_cast<std::size_t>(r)][static_cast<std::size_t>(s)] = acc;
    }
  }

  // Right action: d_l e_beta expanded back in the D basis.
  const Mat dcols = element_columns(t.B, D);
  std::optional<Eigen::ColPivHouseholderQR<Mat>> dqr;
  if (m > 0) dqr.emplace(dcols);
  std::vector<Mat> act(static_cast<std::size_t>(db));
  for (int beta = 0; beta < db; ++beta) {
    Mat big = Mat::Zero(nm, nm);
    for (int l = 0; l < m; ++l) {
      const Vec rhs = coords(
          t.B, mul(D[static_cast<std::size_t>(l)],
                   basis_element(t.B, beta)));
      const Vec c = dqr->solve(rhs);
      if ((dcols * c - rhs).norm() > gate * std::max(1.0, rhs.norm())) {
        throw Error("module basis is not a right ideal");
      }
      for (int k = 0; k < n; ++k) {
        for (int lp = 0; lp < m; ++lp) {
          big(k * m + lp, k * m + l) = c(lp);
        }
      }
    }
    act[static_cast<std::size_t>(beta)] = Q * big * C;
  }
  out.MD = make_module(t.B, dq, std::move(act), std::move(gram), tol);

  // Left action of the algebra on the first tensor slot.
  out.theta.reserve(static_cast<std::size_t>(t.A.dim()));
  for (int alpha = 0; alpha < t.A.dim(); ++alpha) {
    Mat big = Mat::Zero(nm, nm);
    for (int k = 0; k < n; ++k) {
      const Vec c = n_coords(
          t, mul(basis_element(t.A, alpha),
                 t.N_basis[static_cast<std::size_t>(k)]),
          std::max(tol, 1e-8));
      for (int l = 0; l < m; ++l) {
        for (int kp = 0; kp < n; ++kp) {
          big(kp * m + l, k * m + l) = c(kp);
        }
      }
    }
    out.theta.push_back(map_on(out.MD, out.MD, Q * big * C));
  }

  const auto theta_at = [&](const Element& x) {
    Mat acc = Mat::Zero(dq, dq);
    const Vec c = coords(t.A, x);
    for (int alpha = 0; alpha < t.A.dim(); ++alpha) {
      acc += c(alpha) * out.theta[static_cast<std::size_t>(alpha)].mat;
    }
    return acc;
  };
  const double unit_gap =
      dq > 0 ? op_norm_mat(theta_at(unit(t.A)) - Mat::Identity(dq, dq)) : 0.0;
  rep.add("quotient/theta_unit", unit_gap <= gate, unit_gap);
  double hom = 0.0;
  for (int alpha = 0; alpha < t.A.dim() && dq > 0; ++alpha) {
    const Element ea = basis_element(t.A, alpha);
    for (int beta = 0; beta < t.A.dim(); ++beta) {
      const Element eb = basis_element(t.A, beta);
      hom = std::max(
          hom, op_norm_mat(theta_at(mul(ea, eb)) -
                           out.theta[static_cast<std::size_t>(alpha)].mat *
                               out.theta[static_cast<std::size_t>(beta)].mat));
    }
    try {
      const ModuleMap ta = adjoint_solve(
          out.theta[static_cast<std::size_t>(alpha)], std::max(tol, 1e-8));
      hom = std::max(hom, op_norm_mat(theta_at(adjoint(ea)) - ta.mat));
    } catch (const NotAdjointable& e) {
      hom = std::max(hom, e.residual);
    }
  }
  rep.add("quotient/theta_homomorphism", hom <= gate, hom);

  // The identification from the generator span of E.
  Mat ecols(d, nm);
  for (int x = 0; x < nm; ++x) {
    const int kx = x / std::max(m, 1);
    const int lx = x % std::max(m, 1);
    ecols.col(x) = t.Lambda[static_cast<std::size_t>(kx)].mat *
                   coords(t.B, D[static_cast<std::size_t>(lx)]);
  }
  Mat umat = Mat::Zero(dq, d);
  if (nm > 0 && d > 0 && dq > 0) umat = solve_left(ecols, Q);
  out.U = map_on(t.E, out.MD, umat);

  if (dq > 0) {
    const int r_img = svd_rank(umat * ecols);
    if (r_img < dq) {
      throw NotSurjective("generator classes fail to span the quotient",
                          dq - r_img);
    }
  }

  double u_def = 0.0;
  double u_iso = 0.0;
  double u_conj = 0.0;
  const double uscale = std::max(1.0, sigma_max);
  for (int x = 0; x < nm; ++x) {
    u_def = std::max(u_def, (umat * ecols.col(x) - Q.col(x)).norm());
    for (int y = 0; y < nm; ++y) {
      const Element lhs = inner(*out.MD, Vec(umat * ecols.col(x)),
                                Vec(umat * ecols.col(y)));
      const Element rhs =
          inner(*t.E, Vec(ecols.col(x)), Vec(ecols.col(y)));
      u_iso = std::max(u_iso, norm_diff(lhs, rhs));
    }
    for (int alpha = 0; alpha < t.A.dim(); ++alpha) {
      const Vec via_e =
          umat * (t.pi[static_cast<std::size_t>(alpha)].mat * ecols.col(x));
      const Vec via_md = out.theta[static_cast<std::size_t>(alpha)].mat *
                         (umat * ecols.col(x));
      u_conj = std::max(u_conj, (via_e - via_md).norm());
    }
  }
  rep.add("quotient/U_defines", u_def <= gate * uscale, u_def);
  rep.add("quotient/U_isometry", u_iso <= gate * uscale, u_iso);
  rep.add("quotient/theta_conjugation", u_conj <= gate * uscale, u_conj);

  // Sampled dominated operators transported across U.
  if (d == 0 || dq == 0) {
    for (int j = 0; j < 3; ++j) {
      const std::string sj = idx(j);
      rep.add("quotient/R_bounds" + sj, true, 0.0, "empty module");
      rep.add("quotient/R_pairing" + sj, true, 0.0, "empty module");
      rep.add("quotient/R_commutes" + sj, true, 0.0, "empty module");
      rep.add("quotient/R_transport" + sj, true, 0.0, "empty module");
    }
    return out;
  }
  CpFamilySampler sampler(w, t, 0.85, 11);
  for (int j = 0; j < 3; ++j) {
    const std::string sj = idx(j);
    const DominatedMap f = sampler.sample_f();
    Mat ms(nm, nm);
    for (int x = 0; x < nm; ++x) {
      const int kx = x / std::max(m, 1);
      const int lx = x % std::max(m, 1);
      for (int y = 0; y < nm; ++y) {
        const int ky = y / std::max(m, 1);
        const int ly = y % std::max(m, 1);
        const Element mid = cp_apply(
            f.rho, mul(adjoint(t.N_basis[static_cast<std::size_t>(ky)]),
                       t.N_basis[static_cast<std::size_t>(kx)]));
        const Element val =
            mul(mul(adjoint(D[static_cast<std::size_t>(ly)]), mid),
                D[static_cast<std::size_t>(lx)]);
        // ms(y, x) = scalar pairing of R g_x against g_y.
        ms(y, x) = faithful_trace(val);
      }
    }
    Mat R = C.adjoint() * ms * C;
    R = (0.5 * (R + R.adjoint())).eval();
    const HermEig re = herm_eig(R);
    const double rmin = re.eigenvalues.minCoeff();
    const double rmax = re.eigenvalues.maxCoeff();
    rep.add("quotient/R_bounds" + sj,
            rmin >= -gate && rmax <= 1.0 + gate,
            std::max(std::max(0.0, -rmin), std::max(0.0, rmax - 1.0)));
    double pair_res = 0.0;
    for (int x = 0; x < nm; ++x) {
      const int kx = x / std::max(m, 1);
      const int lx = x % std::max(m, 1);
      for (int y = 0; y < nm; ++y) {
        const int ky = y / std::max(m, 1);
        const int ly = y % std::max(m, 1);
        const Element want = mul(
            mul(adjoint(D[static_cast<std::size_t>(ly)]),
                cp_apply(f.rho,
                         mul(adjoint(t.N_basis[static_cast<std::size_t>(ky)]),
                             t.N_basis[static_cast<std::size_t>(kx)]))),
            D[static_cast<std::size_t>(lx)]);
        const Element got =
            inner(*out.MD, Vec(R * Q.col(x)), Vec(Q.col(y)));
        pair_res = std::max(pair_res, norm_diff(got, want));
      }
    }
    rep.add("quotient/R_pairing" + sj, pair_res <= gate * uscale, pair_res);
    double rcomm = 0.0;
    for (const ModuleMap& th : out.theta) {
      rcomm = std::max(rcomm, op_norm_mat(R * th.mat - th.mat * R));
    }
    rep.add("quotient/R_commutes" + sj, rcomm <= gate, rcomm);
    double transport = 0.0;
    const Mat back = umat.adjoint() * R * umat;
    for (int x = 0; x < nm; ++x) {
      transport = std::max(
          transport, ((back - f.T.mat) * ecols.col(x)).norm());
    }
    rep.add("quotient/R_transport" + sj, transport <= gate * uscale,
            transport);
  }
  return out;
}

std::vector<Element> core_approximation(const Weight& w, const KsgnsTriplet& t,
                                        const TruncatingNet& net,
                                        const std::vector<Element>& K,
                                        const Element& a, CoreMode mode,
                                        double slack_bound, double tol) {
  (void)w;
  n_coords(t, a, std::max(tol, 1e-8));
  const double la =
      t.E->dim > 0 ? op_norm(lambda_of(t, a, std::max(tol, 1e-8))) : 0.0;
  if (mode == CoreMode::kExactBound && la <= 1e-12 * (1.0 + norm(a))) {
    throw ZeroLambdaExactMode(
        "structure map vanishes at a; use the slack mode");
  }
  if (mode == CoreMode::kSlack && !(la < slack_bound)) {
    throw Error("slack bound must exceed the structure-map norm");
  }
  if (K.empty()) throw Error("approximation basis is empty");

  const Mat kcols = element_columns(t.A, K);
  Eigen::ColPivHouseholderQR<Mat> kqr(kcols);
  const Vec c = kqr.solve(coords(t.A, a));
  Element b = zero(t.A);
  for (std::size_t j = 0; j < K.size(); ++j) {
    b = add(b, scale(c(static_cast<int>(j)), K[j]));
  }
  const double na = norm(a);
  const double nb = norm(b);

  std::vector<Element> out;
  out.reserve(net.u.size());
  for (std::size_t i = 0; i < net.u.size(); ++i) {
    if (nb <= 1e-14) {
      out.push_back(zero(t.A));
      continue;
    }
    const double lam = na / nb;
    const Element candidate = mul(b, net.u[i]);
    double mu = lam;
    if (mode == CoreMode::kExactBound) {
      if (t.E->dim > 0) {
        const double pw_a = op_norm(compose(pi_of(t, a), net.w[i]));
        const double pw_b = op_norm(compose(pi_of(t, b), net.w[i]));
        if (pw_b > 1e-14) mu = pw_a / pw_b;
      }
    } else {
      const double lb =
          t.E->dim > 0
              ? op_norm(lambda_of(t, candidate, std::max(tol, 1e-8)))
              : 0.0;
      if (lb > 1e-14) mu = slack_bound / lb;
    }
    out.push_back(scale(std::min(lam, mu), candidate));
  }
  return out;
}

Report rho_family_convergence(const Weight& w, const KsgnsTriplet& t,
                              const TruncatingNet& net, double tol) {
  Report rep;
  const std::size_t L = net.rho.size();
  if (L == 0) {
    rep.add("rho/nonempty", false, 1.0, "empty net");
    return rep;
  }
  const double wscale = 1.0 + weight_norm(w);
  const double gate = std::max(tol, 1e-12) * 100.0 * wscale;

  for (int alpha = 0; alpha < t.A.dim(); ++alpha) {
    const std::string sa = idx(alpha);
    const Element corner =
        mul(mul(t.p, basis_element(t.A, alpha)), t.p);
    const Element target = weight_apply(w, basis_element(t.A, alpha));
    std::vector<double> res;
    res.reserve(L);
    for (std::size_t i = 0; i < L; ++i) {
      res.push_back(norm_diff(cp_apply(net.rho[i], corner), target));
    }
    rep.add("rho/attains" + sa, res.back() <= gate, res.back());
    double rise = 0.0;
    for (std::size_t i = 1; i < L; ++i) {
      rise = std::max(rise, res[i] - res[i - 1]);
    }
    rep.add("rho/residual_monotone" + sa, rise <= gate, rise);
  }

  for (std::size_t k = 0; k < t.N_basis.size(); ++k) {
    const std::string sk = idx(static_cast<int>(k));
    const Element a_pos = mul(adjoint(t.N_basis[k]), t.N_basis[k]);
    const Element top = weight_apply(w, a_pos);
    double worst = 0.0;
    for (std::size_t i = 0; i < L; ++i) {
      worst = std::min(
          worst, min_eigenvalue(sub(top, cp_apply(net.rho[i], a_pos))));
    }
    rep.add("rho/dominated" + sk, worst >= -gate, std::max(0.0, -worst));
    const double compact =
        norm_diff(cp_apply(net.rho.back(), a_pos), top);
    rep.add("rho/compact_transport" + sk, compact <= gate, compact);
  }

  if (t.E->dim == 0) {
    for (int j = 0; j < 3; ++j) {
      rep.add("rho/family_transfer" + idx(j), true, 0.0, "empty module");
    }
    return rep;
  }
  CpFamilySampler sampler(w, t, 0.8, 23);
  for (int j = 0; j < 3; ++j) {
    const DominatedMap f = sampler.sample_f();
    double worst = 0.0;
    for (std::size_t k = 0; k < t.N_basis.size(); ++k) {
      const Element a_pos = mul(adjoint(t.N_basis[k]), t.N_basis[k]);
      worst = std::min(
          worst, min_eigenvalue(
                     sub(weight_apply(w, a_pos), cp_apply(f.rho, a_pos))));
    }
    rep.add("rho/family_transfer" + idx(j), worst >= -gate,
            std::max(0.0, -worst));
  }
  return rep;
}

}  // namespace opweight
