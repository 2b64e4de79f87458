#include "opweight/hmodule.hpp"

#include <atomic>
#include <cmath>

#include "opweight/errors.hpp"

namespace opweight {

namespace {

Mat compute_scalar_gram(int dim,
                        const std::vector<std::vector<Element>>& gram) {
  Mat h(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) h(i, j) = faithful_trace(gram[j][i]);
  return 0.5 * (h + Mat(h.adjoint()));
}

ModulePtr module_unchecked(AlgebraSpec base, int dim, std::vector<Mat> action,
                           std::vector<std::vector<Element>> gram) {
  auto mod = std::make_shared<ModuleRep>();
  mod->base = std::move(base);
  mod->dim = dim;
  mod->action = std::move(action);
  mod->gram = std::move(gram);
  mod->scalar_gram = compute_scalar_gram(dim, mod->gram);
  return mod;
}

void require_same_rep(const ModulePtr& a, const ModulePtr& b,
                      const char* what) {
  if (!a || !b || a->dim != b->dim || !(a->base == b->base))
    throw Error(std::string(what) + ": incompatible modules");
}

std::atomic<double> g_bound_worst{0.0};
std::atomic<long> g_bound_count{0};

void atomic_max(std::atomic<double>& slot, double v) {
  double cur = slot.load();
  while (v > cur && !slot.compare_exchange_weak(cur, v)) {
  }
}

}  // namespace

ModulePtr make_module(AlgebraSpec base, int dim, std::vector<Mat> action,
                      std::vector<std::vector<Element>> gram, double tol) {
  if (!base.valid()) throw Error("make_module: invalid base spec");
  if (dim < 0) throw Error("make_module: negative dimension");
  if (static_cast<int>(action.size()) != base.dim())
    throw Error("make_module: action table size mismatch");
  for (const Mat& m : action)
    if (m.rows() != dim || m.cols() != dim)
      throw Error("make_module: action matrix shape mismatch");
  if (static_cast<int>(gram.size()) != dim)
    throw Error("make_module: gram row count mismatch");
  for (const auto& row : gram) {
    if (static_cast<int>(row.size()) != dim)
      throw Error("make_module: gram column count mismatch");
    for (const Element& e : row)
      if (!e.shape_matches(base))
        throw Error("make_module: gram entry shape mismatch");
  }

  ModulePtr mod =
      module_unchecked(std::move(base), dim, std::move(action), std::move(gram));
  const AlgebraSpec& b = mod->base;

  // Unit acts as the identity.
  if ((action_of(*mod, unit(b)) - Mat::Identity(dim, dim)).norm() >
      tol * std::max(1.0, 1.0))
    throw Error("make_module: unit does not act as identity");

  // (x b1) b2 = x (b1 b2): action is anti-multiplicative over the basis.
  for (int b1 = 0; b1 < b.dim(); ++b1) {
    for (int b2 = 0; b2 < b.dim(); ++b2) {
      const Element prod = mul(basis_element(b, b1), basis_element(b, b2));
      const Mat lhs = mod->action[b2] * mod->action[b1];
      const Mat rhs = action_of(*mod, prod);
      if ((lhs - rhs).norm() > tol * std::max(1.0, rhs.norm()))
        throw Error("make_module: action is not multiplicative");
    }
  }

  // <e_i, e_j>* = <e_j, e_i>.
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j)
      if (norm_diff(adjoint(mod->gram[i][j]), mod->gram[j][i]) >
          tol * std::max(1.0, norm(mod->gram[j][i])))
        throw Error("make_module: gram is not conjugate symmetric");

  // <e_i b, e_j> = <e_i, e_j> b over the basis.
  for (int beta = 0; beta < b.dim(); ++beta) {
    const Element eb = basis_element(b, beta);
    for (int i = 0; i < dim; ++i) {
      for (int j = 0; j < dim; ++j) {
        Element lhs = zero(b);
        for (int m = 0; m < dim; ++m) {
          const Complex c = mod->action[beta](m, i);
          if (c != Complex(0.0, 0.0)) lhs = add(lhs, scale(c, mod->gram[m][j]));
        }
        const Element rhs = mul(mod->gram[i][j], eb);
        if (norm_diff(lhs, rhs) > tol * std::max(1.0, norm(rhs)))
          throw Error("make_module: action and gram are incompatible");
      }
    }
  }

  // Amplified Gram positivity, blockwise over the base.
  for (int k = 0; k < b.block_count(); ++k) {
    const int n = b.block_dims[k];
    Mat big = Mat::Zero(dim * n, dim * n);
    for (int u = 0; u < dim; ++u)
      for (int v = 0; v < dim; ++v)
        big.block(u * n, v * n, n, n) = mod->gram[v][u].blocks[k];
    big = 0.5 * (big + Mat(big.adjoint()));
    const double lo = min_herm_eigenvalue(big);
    if (lo < -tol * std::max(1.0, op_norm_mat(big)))
      throw Error("make_module: amplified gram is not positive");
  }

  // Nondegenerate scalarization.
  if (dim > 0) {
    const HermEig eig = herm_eig(mod->scalar_gram);
    const double top = eig.eigenvalues(eig.eigenvalues.size() - 1);
    if (eig.eigenvalues(0) <= 1e-10 * std::max(1.0, top))
      throw Error("make_module: scalar gram is degenerate");
  }
  return mod;
}

ModulePtr free_module(const AlgebraSpec& base) {
  if (!base.valid()) throw Error("free_module: invalid base spec");
  const int d = base.dim();
  std::vector<Mat> action(d);
  for (int beta = 0; beta < d; ++beta) {
    Mat m(d, d);
    const Element eb = basis_element(base, beta);
    for (int alpha = 0; alpha < d; ++alpha)
      m.col(alpha) = coords(base, mul(basis_element(base, alpha), eb));
    action[beta] = m;
  }
  std::vector<std::vector<Element>> gram(d, std::vector<Element>());
  for (int i = 0; i < d; ++i) {
    gram[i].reserve(d);
    const Element ei = basis_element(base, i);
    for (int j = 0; j < d; ++j)
      gram[i].push_back(mul(adjoint(basis_element(base, j)), ei));
  }
  return module_unchecked(base, d, std::move(action), std::move(gram));
}

Mat action_of(const ModuleRep& mod, const Element& b) {
  Mat out = Mat::Zero(mod.dim, mod.dim);
  const Vec c = coords(mod.base, b);
  for (int beta = 0; beta < c.size(); ++beta) {
    if (c(beta) != Complex(0.0, 0.0)) out += c(beta) * mod.action[beta];
  }
  return out;
}

Element inner(const ModuleRep& mod, const Vec& x, const Vec& y) {
  if (x.size() != mod.dim || y.size() != mod.dim)
    throw Error("inner: vector length mismatch");
  Element acc = zero(mod.base);
  for (int i = 0; i < mod.dim; ++i) {
    if (x(i) == Complex(0.0, 0.0)) continue;
    for (int j = 0; j < mod.dim; ++j) {
      const Complex c = x(i) * std::conj(y(j));
      if (c != Complex(0.0, 0.0)) acc = add(acc, scale(c, mod.gram[i][j]));
    }
  }
  return acc;
}

double vec_norm(const ModuleRep& mod, const Vec& x) {
  return std::sqrt(std::max(0.0, norm(inner(mod, x, x))));
}

Complex scalar_inner(const ModuleRep& mod, const Vec& x, const Vec& y) {
  return (y.adjoint() * mod.scalar_gram * x)(0, 0);
}

ModuleMap identity_map(const ModulePtr& mod) {
  return {mod, mod, Mat::Identity(mod->dim, mod->dim)};
}

ModuleMap zero_map(const ModulePtr& source, const ModulePtr& target) {
  return {source, target, Mat::Zero(target->dim, source->dim)};
}

ModuleMap compose(const ModuleMap& f, const ModuleMap& g) {
  require_same_rep(f.source, g.target, "compose");
  return {g.source, f.target, f.mat * g.mat};
}

ModuleMap map_add(const ModuleMap& f, const ModuleMap& g) {
  require_same_rep(f.source, g.source, "map_add");
  require_same_rep(f.target, g.target, "map_add");
  return {f.source, f.target, f.mat + g.mat};
}

ModuleMap map_sub(const ModuleMap& f, const ModuleMap& g) {
  require_same_rep(f.source, g.source, "map_sub");
  require_same_rep(f.target, g.target, "map_sub");
  return {f.source, f.target, f.mat - g.mat};
}

ModuleMap map_scale(Complex s, const ModuleMap& f) {
  return {f.source, f.target, s * f.mat};
}

double b_linearity_defect(const ModuleMap& t) {
  double worst = 0.0;
  for (int beta = 0; beta < t.source->base.dim(); ++beta) {
    const Mat lhs = t.mat * t.source->action[beta];
    const Mat rhs = t.target->action[beta] * t.mat;
    worst = std::max(worst, (lhs - rhs).norm());
  }
  return worst;
}

ModuleMap adjoint_solve(const ModuleMap& t, double tol) {
  const ModuleRep& src = *t.source;
  const ModuleRep& tgt = *t.target;
  const int de = src.dim;
  const int df = tgt.dim;
  const int db = src.base.dim();
  // <t e_i, f_j> = <e_i, t* f_j> as a linear system over conj(mat(t*)).
  Mat a(de * db, de);
  for (int i = 0; i < de; ++i)
    for (int n = 0; n < de; ++n)
      a.block(i * db, n, db, 1) = coords(src.base, src.gram[i][n]);
  Mat r(de * db, df);
  for (int j = 0; j < df; ++j) {
    for (int i = 0; i < de; ++i) {
      Element lhs = zero(src.base);
      for (int m = 0; m < df; ++m) {
        const Complex c = t.mat(m, i);
        if (c != Complex(0.0, 0.0)) lhs = add(lhs, scale(c, tgt.gram[m][j]));
      }
      r.block(i * db, j, db, 1) = coords(src.base, lhs);
    }
  }
  Mat y;
  if (de > 0) {
    y = a.colPivHouseholderQr().solve(r);
  } else {
    y = Mat(0, df);
  }
  const double residual = de > 0 ? (a * y - r).norm() : r.norm();
  if (residual > tol * std::max(1.0, r.norm()))
    throw NotAdjointable("adjoint_solve: defining identity unsatisfied",
                         residual);
  return {t.target, t.source, y.conjugate()};
}

double adjoint_defect(const ModuleMap& t, const ModuleMap& t_adj) {
  double worst = 0.0;
  const ModuleRep& src = *t.source;
  const ModuleRep& tgt = *t.target;
  for (int i = 0; i < src.dim; ++i) {
    Vec ei = Vec::Zero(src.dim);
    ei(i) = 1.0;
    const Vec ti = t.mat * ei;
    for (int j = 0; j < tgt.dim; ++j) {
      Vec fj = Vec::Zero(tgt.dim);
      fj(j) = 1.0;
      const Element lhs = inner(tgt, ti, fj);
      const Element rhs = inner(src, ei, t_adj.mat * fj);
      worst = std::max(worst, norm_diff(lhs, rhs));
    }
  }
  return worst;
}

Vec compact_rep(const ModuleMap& t, double tol) {
  const ModuleRep& src = *t.source;
  if (src.dim != src.base.dim() ||
      (src.scalar_gram - Mat::Identity(src.dim, src.dim)).norm() > 1e-8)
    throw Error("compact_rep: source is not the free module");
  const Vec x = t.mat * coords(src.base, unit(src.base));
  double worst = 0.0;
  for (int beta = 0; beta < src.base.dim(); ++beta) {
    const Element eb = basis_element(src.base, beta);
    const Vec lhs = t.mat * coords(src.base, eb);
    const Vec rhs = action_of(*t.target, eb) * x;
    worst = std::max(worst, vec_norm(*t.target, lhs - rhs));
  }
  const ModuleMap tt = compose(adjoint_solve(t, tol * 10 + kDefaultTol), t);
  const Element lhs = map_to_element(tt);
  const Element rhs = inner(*t.target, x, x);
  worst = std::max(worst, norm_diff(lhs, rhs));
  if (worst > tol * std::max(1.0, op_norm(t)))
    throw NoRepresentative("compact_rep: representative checks failed", worst);
  return x;
}

ModuleMap left_mult_map(const ModulePtr& free_mod, const Element& a) {
  const AlgebraSpec& base = free_mod->base;
  if (free_mod->dim != base.dim())
    throw Error("left_mult_map: not a free module");
  Mat m(base.dim(), base.dim());
  for (int beta = 0; beta < base.dim(); ++beta)
    m.col(beta) = coords(base, mul(a, basis_element(base, beta)));
  return {free_mod, free_mod, m};
}

Element map_to_element(const ModuleMap& t) {
  const AlgebraSpec& base = t.source->base;
  if (t.source->dim != base.dim() || t.target->dim != base.dim())
    throw Error("map_to_element: not a free-module endomorphism");
  return from_coords(base, t.mat * coords(base, unit(base)));
}

double op_norm(const ModuleMap& t) {
  if (t.source->dim == 0) return 0.0;
  Mat s = t.mat.adjoint() * t.target->scalar_gram * t.mat;
  s = 0.5 * (s + Mat(s.adjoint()));
  const PencilEig eig = pencil_eig(s, t.source->scalar_gram);
  const double top =
      eig.values.size() > 0 ? eig.values(eig.values.size() - 1) : 0.0;
  return std::sqrt(std::max(0.0, top));
}

double map_norm_diff(const ModuleMap& f, const ModuleMap& g) {
  return op_norm(map_sub(f, g));
}

double self_adjoint_defect(const ModuleMap& t) {
  try {
    return map_norm_diff(adjoint_solve(t), t);
  } catch (const NotAdjointable& e) {
    return e.residual;
  }
}

bool positive_part_check(const ModuleMap& t, double tol) {
  if (t.source->dim == 0) return true;
  require_same_rep(t.source, t.target, "positive_part_check");
  const double scale = std::max(1.0, op_norm(t));
  if (self_adjoint_defect(t) > tol * scale) return false;
  return map_min_eigenvalue(t) >= -tol * scale;
}

double map_min_eigenvalue(const ModuleMap& t) {
  if (t.source->dim == 0) return 0.0;
  const Mat hm = t.source->scalar_gram * t.mat;
  const Mat s = 0.5 * (hm + Mat(hm.adjoint()));
  const PencilEig eig = pencil_eig(s, t.source->scalar_gram);
  return eig.values(0);
}

ModuleMap map_calculus(const ModuleMap& t,
                       const std::function<double(double)>& f) {
  require_same_rep(t.source, t.target, "map_calculus");
  if (t.source->dim == 0) return t;
  const Mat hm = t.source->scalar_gram * t.mat;
  const Mat s = 0.5 * (hm + Mat(hm.adjoint()));
  const PencilEig eig = pencil_eig(s, t.source->scalar_gram);
  Eigen::VectorXd mapped(eig.values.size());
  for (int i = 0; i < mapped.size(); ++i) mapped(i) = f(eig.values(i));
  const Mat out = eig.vectors * mapped.asDiagonal() * eig.vectors.adjoint() *
                  t.source->scalar_gram;
  return {t.source, t.target, out};
}

ModuleMap sqrt_map(const ModuleMap& t, double tol) {
  if (!positive_part_check(t, tol))
    throw NotPositive("sqrt_map: operand is not positive",
                      map_min_eigenvalue(t));
  return map_calculus(t,
                      [](double v) { return std::sqrt(std::max(0.0, v)); });
}

ModulePtr tensor_module(const ModulePtr& e1, const ModulePtr& e2) {
  const AlgebraSpec base = tensor_spec(e1->base, e2->base);
  const int dim = e1->dim * e2->dim;
  const auto pairs = tensor_basis_pairs(e1->base, e2->base);
  std::vector<Mat> action(base.dim());
  for (int g = 0; g < base.dim(); ++g)
    action[g] = kron_mat(e1->action[pairs[g].first],
                         e2->action[pairs[g].second]);
  std::vector<std::vector<Element>> gram(dim, std::vector<Element>());
  for (int u1 = 0; u1 < e1->dim; ++u1) {
    for (int v1 = 0; v1 < e2->dim; ++v1) {
      auto& row = gram[u1 * e2->dim + v1];
      row.reserve(dim);
      for (int u2 = 0; u2 < e1->dim; ++u2)
        for (int v2 = 0; v2 < e2->dim; ++v2)
          row.push_back(kron(e1->base, e2->base, e1->gram[u1][u2],
                             e2->gram[v1][v2]));
    }
  }
  return module_unchecked(base, dim, std::move(action), std::move(gram));
}

ModuleMap tensor_map(const ModuleMap& f, const ModuleMap& g,
                     const ModulePtr& source, const ModulePtr& target) {
  if (source->dim != f.source->dim * g.source->dim ||
      target->dim != f.target->dim * g.target->dim)
    throw Error("tensor_map: dimension mismatch");
  return {source, target, kron_mat(f.mat, g.mat)};
}

PencilEig pencil_eig(const Mat& s, const Mat& h) {
  PencilEig out;
  if (s.rows() == 0) {
    out.values = Eigen::VectorXd(0);
    out.vectors = Mat(0, 0);
    return out;
  }
  Eigen::LLT<Mat> llt(h);
  if (llt.info() != Eigen::Success)
    throw Error("pencil_eig: weight matrix is not positive definite");
  const Mat l = llt.matrixL();
  const Mat b1 = l.triangularView<Eigen::Lower>().solve(s);
  const Mat a =
      Mat(l.triangularView<Eigen::Lower>().solve(b1.adjoint())).adjoint();
  const HermEig eig = herm_eig(0.5 * (a + Mat(a.adjoint())));
  const Mat lh = l.adjoint();
  out.values = eig.eigenvalues;
  out.vectors = lh.triangularView<Eigen::Upper>().solve(eig.eigenvectors);
  return out;
}

std::vector<Mat> commutant_basis(const ModuleRep& mod,
                                 const std::vector<Mat>& mats) {
  const int d = mod.dim;
  if (d == 0) return {};
  std::vector<Mat> constraints = mod.action;
  constraints.insert(constraints.end(), mats.begin(), mats.end());
  const int nc = static_cast<int>(constraints.size());
  Mat k(nc * d * d, d * d);
  const Mat id = Mat::Identity(d, d);
  for (int c = 0; c < nc; ++c) {
    const Mat block =
        kron_mat(constraints[c].transpose(), id) - kron_mat(id, constraints[c]);
    k.block(c * d * d, 0, d * d, d * d) = block;
  }
  Eigen::JacobiSVD<Mat> svd(k, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double top = sv.size() > 0 ? sv(0) : 0.0;
  const double thresh = 1e-10 * std::max(1.0, top);
  std::vector<Mat> basis;
  for (int c = 0; c < d * d; ++c) {
    const double sigma = c < sv.size() ? sv(c) : 0.0;
    if (sigma <= thresh) {
      Mat m(d, d);
      for (int j = 0; j < d; ++j)
        for (int i = 0; i < d; ++i) m(i, j) = svd.matrixV()(j * d + i, c);
      basis.push_back(m);
    }
  }
  return basis;
}

double positive_map_bound_violation(const ModuleMap& t, const Vec& v) {
  const ModuleRep& mod = *t.source;
  const Vec tv = t.mat * v;
  const double lhs = norm(inner(mod, tv, tv));
  const double rhs = op_norm(t) * norm(inner(mod, tv, v));
  return (lhs - rhs) / std::max(1.0, rhs);
}

void observe_positive_map_bound(const ModuleMap& t, const Vec& v) {
  atomic_max(g_bound_worst, positive_map_bound_violation(t, v));
  g_bound_count.fetch_add(1);
}

double positive_map_bound_violation(const Mat& t, const Vec& v) {
  const Vec tv = t * v;
  const double lhs = tv.squaredNorm();
  const double rhs = op_norm_mat(t) * std::abs(v.dot(tv));
  return (lhs - rhs) / std::max(1.0, rhs);
}

void observe_positive_map_bound(const Mat& t, const Vec& v) {
  atomic_max(g_bound_worst, positive_map_bound_violation(t, v));
  g_bound_count.fetch_add(1);
}

double worst_positive_map_bound_violation() { return g_bound_worst.load(); }

long positive_map_bound_observations() { return g_bound_count.load(); }

void reset_positive_map_bound_observer() {
  g_bound_worst.store(0.0);
  g_bound_count.store(0);
}

}  // namespace opweight
