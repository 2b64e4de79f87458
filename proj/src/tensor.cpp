#include "opweight/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "opweight/errors.hpp"

namespace opweight {

namespace {

// Columns of the product structure map at a factor pair: the kron of the
// factor columns, reindexed through the product basis pairing.
ModuleMap lambda_kron(const ModuleMap& l1, const ModuleMap& l2,
                      const AlgebraSpec& b1, const AlgebraSpec& b2,
                      const ModulePtr& freeB, const ModulePtr& E) {
  const auto pairs = tensor_basis_pairs(b1, b2);
  Mat mat(E->dim, static_cast<int>(pairs.size()));
  for (std::size_t g = 0; g < pairs.size(); ++g) {
    mat.col(static_cast<int>(g)) =
        kron_mat(l1.mat.col(pairs[g].first), l2.mat.col(pairs[g].second));
  }
  ModuleMap out;
  out.source = freeB;
  out.target = E;
  out.mat = std::move(mat);
  return out;
}

}  // namespace

CpMap cp_tensor(const CpMap& m1, const CpMap& m2) {
  CpMap out;
  out.source = tensor_spec(m1.source, m2.source);
  out.target = tensor_spec(m1.target, m2.target);
  const auto pairs = tensor_basis_pairs(m1.source, m2.source);
  out.coeffs.reserve(pairs.size());
  for (const auto& [alpha, beta] : pairs) {
    out.coeffs.push_back(kron(m1.target, m2.target,
                              cp_apply(m1, basis_element(m1.source, alpha)),
                              cp_apply(m2, basis_element(m2.source, beta))));
  }
  return out;
}

TensorWeight tensor_weight(const Weight& w1, const KsgnsTriplet& t1,
                           const TruncatingNet& net1, const Weight& w2,
                           const KsgnsTriplet& t2, const TruncatingNet& net2,
                           double tol) {
  TensorWeight tw;
  tw.phi1 = w1;
  tw.phi2 = w2;
  tw.t1 = t1;
  tw.t2 = t2;
  tw.net1 = net1;
  tw.net2 = net2;

  const AlgebraSpec a = tensor_spec(w1.A, w2.A);
  const AlgebraSpec b = tensor_spec(w1.B, w2.B);
  const auto pairs_a = tensor_basis_pairs(w1.A, w2.A);
  const Element p = kron(w1.A, w2.A, w1.p, w2.p);
  std::vector<Element> coeffs;
  coeffs.reserve(pairs_a.size());
  for (const auto& [alpha, beta] : pairs_a) {
    coeffs.push_back(kron(w1.B, w2.B,
                          weight_apply(w1, basis_element(w1.A, alpha)),
                          weight_apply(w2, basis_element(w2.A, beta))));
  }
  tw.product = make_weight(a, b, p, coeffs, tol);

  SeedData seed;
  seed.A = a;
  seed.B = b;
  seed.E = tensor_module(t1.E, t2.E);
  seed.freeB = free_module(b);
  for (std::size_t k = 0; k < t1.N_basis.size(); ++k) {
    for (std::size_t l = 0; l < t2.N_basis.size(); ++l) {
      seed.N0.push_back(kron(w1.A, w2.A, t1.N_basis[k], t2.N_basis[l]));
      seed.Lambda0.push_back(lambda_kron(t1.Lambda[k], t2.Lambda[l], w1.B,
                                         w2.B, seed.freeB, seed.E));
    }
  }
  for (std::size_t i1 = 0; i1 < net1.u.size(); ++i1) {
    for (std::size_t i2 = 0; i2 < net2.u.size(); ++i2) {
      seed.family.emplace_back(
          tensor_map(net1.T[i1], net2.T[i2], seed.E, seed.E),
          cp_tensor(net1.rho[i1], net2.rho[i2]));
      tw.grid.emplace_back(static_cast<int>(i1), static_cast<int>(i2));
    }
  }
  tw.t = close_lambda(seed, tol);

  tw.rep.add("tensor/dim_product", tw.t.E->dim == t1.E->dim * t2.E->dim,
             std::abs(static_cast<double>(tw.t.E->dim -
                                          t1.E->dim * t2.E->dim)));
  tw.rep.merge(verify_ksgns(tw.product, tw.t, tol));

  std::vector<Element> us;
  us.reserve(tw.grid.size());
  for (const auto& [i1, i2] : tw.grid) {
    us.push_back(kron(w1.A, w2.A, net1.u[static_cast<std::size_t>(i1)],
                      net2.u[static_cast<std::size_t>(i2)]));
  }
  tw.net = verify_truncating_net(tw.product, tw.t, us, tol);
  tw.rep.merge(tw.net.rep);
  return tw;
}

Report check_factorization(const TensorWeight& tw, double tol) {
  Report rep;
  const double gate = std::max(tol, 1e-12) * 100.0;
  const double wscale = 1.0 + weight_norm(tw.product);

  double value_res = 0.0;
  for (int alpha = 0; alpha < tw.phi1.A.dim(); ++alpha) {
    for (int beta = 0; beta < tw.phi2.A.dim(); ++beta) {
      const Element lhs = weight_apply(
          tw.product, kron(tw.phi1.A, tw.phi2.A,
                           basis_element(tw.phi1.A, alpha),
                           basis_element(tw.phi2.A, beta)));
      const Element rhs =
          kron(tw.phi1.B, tw.phi2.B,
               weight_apply(tw.phi1, basis_element(tw.phi1.A, alpha)),
               weight_apply(tw.phi2, basis_element(tw.phi2.A, beta)));
      value_res = std::max(value_res, norm_diff(lhs, rhs));
    }
  }
  rep.add("tensor/value_factorization", value_res <= gate * wscale,
          value_res);

  double lam_res = 0.0;
  bool lam_ok = true;
  for (std::size_t k = 0; k < tw.t1.N_basis.size(); ++k) {
    for (std::size_t l = 0; l < tw.t2.N_basis.size(); ++l) {
      const Element prod =
          kron(tw.phi1.A, tw.phi2.A, tw.t1.N_basis[k], tw.t2.N_basis[l]);
      try {
        const ModuleMap lhs = lambda_of(tw.t, prod, std::max(tol, 1e-8));
        const ModuleMap rhs =
            lambda_kron(tw.t1.Lambda[k], tw.t2.Lambda[l], tw.phi1.B,
                        tw.phi2.B, tw.t.freeB, tw.t.E);
        lam_res = std::max(lam_res, map_norm_diff(lhs, rhs));
      } catch (const Error&) {
        lam_ok = false;
      }
    }
  }
  const double lscale =
      1.0 + (tw.t.E->dim > 0 && !tw.t.Lambda.empty()
                 ? op_norm(tw.t.Lambda.front())
                 : 0.0);
  rep.add("tensor/lambda_factorization",
          lam_ok && lam_res <= gate * lscale, lam_res);
  return rep;
}

Report check_T_transport(const TensorWeight& tw, const DominatedMap& om1,
                         const DominatedMap& om2, double tol) {
  Report rep;
  const double gate = std::max(tol, 1e-8);
  const CpMap prod_rho = cp_tensor(om1.rho, om2.rho);
  const ModuleMap want =
      tensor_map(om1.T, om2.T, tw.t.E, tw.t.E);
  try {
    const DominatedMap dm = solve_T(prod_rho, tw.t, tol);
    const double res = map_norm_diff(dm.T, want);
    rep.add("tensor/T_product", res <= gate, res);
    const double s1 = tw.t1.E->dim > 0 ? op_norm(om1.T) : 0.0;
    const double s2 = tw.t2.E->dim > 0 ? op_norm(om2.T) : 0.0;
    if (s1 < 1.0 - gate && s2 < 1.0 - gate) {
      const double sp = tw.t.E->dim > 0 ? op_norm(dm.T) : 0.0;
      rep.add("tensor/strict_membership", sp <= s1 * s2 + gate,
              std::max(0.0, sp - s1 * s2));
    } else {
      rep.add_skipped("tensor/strict_membership",
                      "a factor is not a strict contraction");
    }
  } catch (const Error& e) {
    rep.add("tensor/T_product", false, 1.0, e.what());
    rep.add_skipped("tensor/strict_membership", "transport solve failed");
  }
  return rep;
}

Report check_product_convergence(const TensorWeight& tw, const Element& c,
                                 const Element& d, double tol) {
  Report rep;
  const double wscale = 1.0 + weight_norm(tw.product);
  const double gate = std::max(tol, 1e-12) * 100.0 * wscale;
  const double cmin = min_eigenvalue(c);
  rep.add("tensor/c_positive", cmin >= -gate, std::max(0.0, -cmin));

  const Element top =
      mul(mul(adjoint(d), weight_apply(tw.product, c)), d);
  std::vector<Element> vals;
  vals.reserve(tw.net.rho.size());
  for (const CpMap& r : tw.net.rho) {
    vals.push_back(mul(mul(adjoint(d), cp_apply(r, c)), d));
  }
  if (vals.empty()) {
    rep.add("tensor/domination", false, 1.0, "empty product net");
    rep.add("tensor/attainment", false, 1.0, "empty product net");
    rep.add("tensor/diagonal_monotone", false, 1.0, "empty product net");
    return rep;
  }

  double worst = 0.0;
  for (const Element& v : vals) {
    worst = std::min(worst, min_eigenvalue(sub(top, v)));
  }
  rep.add("tensor/domination", worst >= -gate, std::max(0.0, -worst));

  const double attain = norm_diff(vals.back(), top);
  rep.add("tensor/attainment", attain <= gate, attain);

  // Residuals along the staircase subfamily, which exhausts both factors
  // and ends at the final grid point.
  const int l1 = static_cast<int>(tw.net1.u.size());
  const int l2 = static_cast<int>(tw.net2.u.size());
  std::vector<double> diag;
  for (int j = 0; j < std::max(l1, l2); ++j) {
    const int i1 = std::min(j, l1 - 1);
    const int i2 = std::min(j, l2 - 1);
    diag.push_back(norm_diff(vals[static_cast<std::size_t>(i1 * l2 + i2)],
                             top));
  }
  double rise = 0.0;
  for (std::size_t j = 1; j < diag.size(); ++j) {
    rise = std::max(rise, diag[j] - diag[j - 1]);
  }
  rep.add("tensor/diagonal_monotone", !diag.empty() && rise <= gate, rise);
  return rep;
}

}  // namespace opweight
