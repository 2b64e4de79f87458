#include "opweight/json_io.hpp"

#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "opweight/errors.hpp"

namespace opweight {

namespace {

Json complex_to_json(const Complex& z) {
  return Json::array({z.real(), z.imag()});
}

Complex complex_from_json(const Json& j) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() ||
      !j[1].is_number()) {
    throw ParseError("complex value must be a [re, im] pair");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

// Keyed tables {"0": value, ...} with one entry per index.
template <typename F>
Json indexed_object(int count, F&& value_at) {
  Json out = Json::object();
  for (int i = 0; i < count; ++i) {
    out[std::to_string(i)] = value_at(i);
  }
  return out;
}

const Json& at(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) {
    throw ParseError(std::string("missing field \"") + key + "\"");
  }
  return j.at(key);
}

}  // namespace

Json spec_to_json(const AlgebraSpec& s) {
  Json j = Json::object();
  j["block_dims"] = s.block_dims;
  return j;
}

Json mat_to_json(const Mat& m) {
  Json rows = Json::array();
  for (int r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (int c = 0; c < m.cols(); ++c) {
      row.push_back(complex_to_json(m(r, c)));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

Json element_to_json(const Element& e) {
  Json j = Json::object();
  Json blocks = Json::array();
  for (const Mat& b : e.blocks) blocks.push_back(mat_to_json(b));
  j["blocks"] = std::move(blocks);
  return j;
}

Json weight_to_json(const Weight& w) {
  Json j = Json::object();
  j["A"] = spec_to_json(w.A);
  j["B"] = spec_to_json(w.B);
  j["p"] = element_to_json(w.p);
  j["coeffs"] = indexed_object(static_cast<int>(w.coeffs.size()), [&](int i) {
    return element_to_json(w.coeffs[static_cast<std::size_t>(i)]);
  });
  return j;
}

Json cpmap_to_json(const CpMap& m) {
  Json j = Json::object();
  j["coeffs"] = indexed_object(static_cast<int>(m.coeffs.size()), [&](int i) {
    return element_to_json(m.coeffs[static_cast<std::size_t>(i)]);
  });
  return j;
}

Json module_to_json(const ModuleRep& m) {
  Json j = Json::object();
  j["dim"] = m.dim;
  j["action"] = indexed_object(static_cast<int>(m.action.size()), [&](int i) {
    return mat_to_json(m.action[static_cast<std::size_t>(i)]);
  });
  Json gram = Json::array();
  for (const auto& row : m.gram) {
    Json jrow = Json::array();
    for (const Element& e : row) jrow.push_back(element_to_json(e));
    gram.push_back(std::move(jrow));
  }
  j["gram"] = std::move(gram);
  return j;
}

Json triplet_to_json(const KsgnsTriplet& t) {
  Json j = Json::object();
  j["A"] = spec_to_json(t.A);
  j["B"] = spec_to_json(t.B);
  j["p"] = element_to_json(t.p);
  j["E"] = module_to_json(*t.E);
  Json nb = Json::array();
  for (const Element& e : t.N_basis) nb.push_back(element_to_json(e));
  j["N_basis"] = std::move(nb);
  Json lam = Json::array();
  for (const ModuleMap& m : t.Lambda) lam.push_back(mat_to_json(m.mat));
  j["Lambda"] = std::move(lam);
  Json pi = Json::array();
  for (const ModuleMap& m : t.pi) pi.push_back(mat_to_json(m.mat));
  j["pi"] = std::move(pi);
  return j;
}

Json seed_to_json(const SeedData& s) {
  Json j = Json::object();
  j["A"] = spec_to_json(s.A);
  j["B"] = spec_to_json(s.B);
  j["E"] = module_to_json(*s.E);
  Json n0 = Json::array();
  for (const Element& e : s.N0) n0.push_back(element_to_json(e));
  j["N0"] = std::move(n0);
  Json lam = Json::array();
  for (const ModuleMap& m : s.Lambda0) lam.push_back(mat_to_json(m.mat));
  j["Lambda0"] = std::move(lam);
  Json family = Json::array();
  for (const auto& [T, rho] : s.family) {
    Json member = Json::object();
    member["T"] = mat_to_json(T.mat);
    member["rho"] = cpmap_to_json(rho);
    family.push_back(std::move(member));
  }
  j["family"] = std::move(family);
  return j;
}

Json report_to_json(const Report& r) {
  Report sorted = r;
  sorted.sort_by_label();
  Json rows = Json::array();
  for (const Check& c : sorted.checks) {
    Json row = Json::object();
    row["check"] = c.label;
    row["pass"] = c.pass;
    row["residual"] = c.residual;
    if (!c.witness.empty()) row["witness"] = c.witness;
    if (c.skipped) {
      row["skipped"] = true;
      row["reason"] = c.skip_reason;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

AlgebraSpec spec_from_json(const Json& j) {
  const Json& dims = at(j, "block_dims");
  if (!dims.is_array()) throw ParseError("block_dims must be an array");
  AlgebraSpec s;
  for (const Json& d : dims) {
    if (!d.is_number_integer() || d.get<int>() <= 0) {
      throw ParseError("block_dims entries must be positive integers");
    }
    s.block_dims.push_back(d.get<int>());
  }
  if (!s.valid()) throw ParseError("block_dims does not describe an algebra");
  return s;
}

Mat mat_from_json(const Json& j, int rows, int cols) {
  if (!j.is_array() || static_cast<int>(j.size()) != rows) {
    throw ParseError("matrix row count mismatch");
  }
  Mat m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    const Json& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<int>(row.size()) != cols) {
      throw ParseError("matrix column count mismatch");
    }
    for (int c = 0; c < cols; ++c) {
      m(r, c) = complex_from_json(row[static_cast<std::size_t>(c)]);
    }
  }
  return m;
}

Element element_from_json(const Json& j) {
  const Json& blocks = at(j, "blocks");
  if (!blocks.is_array() || blocks.empty()) {
    throw ParseError("element blocks must be a nonempty array");
  }
  Element e;
  for (const Json& b : blocks) {
    if (!b.is_array() || b.empty()) {
      throw ParseError("element block must be a nonempty matrix");
    }
    const int n = static_cast<int>(b.size());
    e.blocks.push_back(mat_from_json(b, n, n));
  }
  return e;
}

Weight weight_from_json(const Json& j, double tol) {
  const AlgebraSpec a = spec_from_json(at(j, "A"));
  const AlgebraSpec b = spec_from_json(at(j, "B"));
  const Element p = element_from_json(at(j, "p"));
  const Json& coeffs = at(j, "coeffs");
  std::vector<Element> table;
  table.reserve(static_cast<std::size_t>(a.dim()));
  for (int alpha = 0; alpha < a.dim(); ++alpha) {
    const std::string key = std::to_string(alpha);
    if (!coeffs.contains(key)) {
      throw ParseError("weight coeffs must carry every basis index");
    }
    table.push_back(element_from_json(coeffs.at(key)));
  }
  if (!p.shape_matches(a)) throw ParseError("p does not match algebra A");
  for (const Element& e : table) {
    if (!e.shape_matches(b)) {
      throw ParseError("weight value does not match algebra B");
    }
  }
  return make_weight(a, b, p, table, tol);
}

CpMap cpmap_from_json(const Json& j, const AlgebraSpec& source,
                      const AlgebraSpec& target) {
  const Json& coeffs = at(j, "coeffs");
  CpMap m;
  m.source = source;
  m.target = target;
  for (int alpha = 0; alpha < source.dim(); ++alpha) {
    const std::string key = std::to_string(alpha);
    if (!coeffs.contains(key)) {
      throw ParseError("map coeffs must carry every basis index");
    }
    Element e = element_from_json(coeffs.at(key));
    if (!e.shape_matches(target)) {
      throw ParseError("map value does not match the target algebra");
    }
    m.coeffs.push_back(std::move(e));
  }
  return m;
}

ModulePtr module_from_json(const Json& j, const AlgebraSpec& base,
                           double tol) {
  const Json& jd = at(j, "dim");
  if (!jd.is_number_integer() || jd.get<int>() < 0) {
    throw ParseError("module dim must be a nonnegative integer");
  }
  const int dim = jd.get<int>();
  const Json& jact = at(j, "action");
  std::vector<Mat> action;
  action.reserve(static_cast<std::size_t>(base.dim()));
  for (int beta = 0; beta < base.dim(); ++beta) {
    const std::string key = std::to_string(beta);
    if (!jact.contains(key)) {
      throw ParseError("module action must carry every basis index");
    }
    action.push_back(mat_from_json(jact.at(key), dim, dim));
  }
  const Json& jg = at(j, "gram");
  if (!jg.is_array() || static_cast<int>(jg.size()) != dim) {
    throw ParseError("module gram must be a dim-by-dim table");
  }
  std::vector<std::vector<Element>> gram;
  gram.reserve(static_cast<std::size_t>(dim));
  for (int r = 0; r < dim; ++r) {
    const Json& jrow = jg[static_cast<std::size_t>(r)];
    if (!jrow.is_array() || static_cast<int>(jrow.size()) != dim) {
      throw ParseError("module gram must be a dim-by-dim table");
    }
    std::vector<Element> row;
    row.reserve(static_cast<std::size_t>(dim));
    for (int c = 0; c < dim; ++c) {
      Element e = element_from_json(jrow[static_cast<std::size_t>(c)]);
      if (!e.shape_matches(base)) {
        throw ParseError("gram entry does not match the base algebra");
      }
      row.push_back(std::move(e));
    }
    gram.push_back(std::move(row));
  }
  return make_module(base, dim, std::move(action), std::move(gram), tol);
}

KsgnsTriplet triplet_from_json(const Json& j, double tol) {
  KsgnsTriplet t;
  t.A = spec_from_json(at(j, "A"));
  t.B = spec_from_json(at(j, "B"));
  t.p = element_from_json(at(j, "p"));
  if (!t.p.shape_matches(t.A)) throw ParseError("p does not match algebra A");
  t.E = module_from_json(at(j, "E"), t.B, tol);
  t.freeB = free_module(t.B);
  const Json& nb = at(j, "N_basis");
  if (!nb.is_array()) throw ParseError("N_basis must be an array");
  for (const Json& e : nb) {
    Element x = element_from_json(e);
    if (!x.shape_matches(t.A)) {
      throw ParseError("ideal element does not match algebra A");
    }
    t.N_basis.push_back(std::move(x));
  }
  const Json& lam = at(j, "Lambda");
  if (!lam.is_array() || lam.size() != t.N_basis.size()) {
    throw ParseError("Lambda must carry one matrix per ideal element");
  }
  for (const Json& m : lam) {
    ModuleMap mm;
    mm.source = t.freeB;
    mm.target = t.E;
    mm.mat = mat_from_json(m, t.E->dim, t.B.dim());
    t.Lambda.push_back(std::move(mm));
  }
  const Json& pi = at(j, "pi");
  if (!pi.is_array() || static_cast<int>(pi.size()) != t.A.dim()) {
    throw ParseError("pi must carry one matrix per basis element");
  }
  for (const Json& m : pi) {
    ModuleMap mm;
    mm.source = t.E;
    mm.target = t.E;
    mm.mat = mat_from_json(m, t.E->dim, t.E->dim);
    t.pi.push_back(std::move(mm));
  }
  return t;
}

SeedData seed_from_json(const Json& j, double tol) {
  SeedData s;
  s.A = spec_from_json(at(j, "A"));
  s.B = spec_from_json(at(j, "B"));
  s.E = module_from_json(at(j, "E"), s.B, tol);
  s.freeB = free_module(s.B);
  const Json& n0 = at(j, "N0");
  if (!n0.is_array()) throw ParseError("N0 must be an array");
  for (const Json& e : n0) {
    Element x = element_from_json(e);
    if (!x.shape_matches(s.A)) {
      throw ParseError("seed element does not match algebra A");
    }
    s.N0.push_back(std::move(x));
  }
  const Json& lam = at(j, "Lambda0");
  if (!lam.is_array() || lam.size() != s.N0.size()) {
    throw ParseError("Lambda0 must carry one matrix per seed element");
  }
  for (const Json& m : lam) {
    ModuleMap mm;
    mm.source = s.freeB;
    mm.target = s.E;
    mm.mat = mat_from_json(m, s.E->dim, s.B.dim());
    s.Lambda0.push_back(std::move(mm));
  }
  const Json& family = at(j, "family");
  if (!family.is_array() || family.empty()) {
    throw ParseError("seed family must be a nonempty array");
  }
  for (const Json& member : family) {
    ModuleMap T;
    T.source = s.E;
    T.target = s.E;
    T.mat = mat_from_json(at(member, "T"), s.E->dim, s.E->dim);
    CpMap rho = cpmap_from_json(at(member, "rho"), s.A, s.B);
    s.family.emplace_back(std::move(T), std::move(rho));
  }
  return s;
}

std::string dump_json(const Json& j) { return j.dump(2) + "\n"; }

Json parse_json_text(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(e.what());
  }
}

Json parse_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_json_text(buf.str());
}

std::string report_to_text(const Report& r) {
  Report sorted = r;
  sorted.sort_by_label();
  std::ostringstream out;
  int passed = 0;
  int failed = 0;
  int skipped = 0;
  for (const Check& c : sorted.checks) {
    if (c.skipped) {
      ++skipped;
      out << "SKIP " << c.label << " (" << c.skip_reason << ")\n";
      continue;
    }
    if (c.pass) {
      ++passed;
    } else {
      ++failed;
    }
    out << (c.pass ? "PASS " : "FAIL ") << c.label
        << " residual=" << c.residual;
    if (!c.witness.empty()) out << " " << c.witness;
    out << "\n";
  }
  out << passed << " passed, " << failed << " failed, " << skipped
      << " skipped\n";
  return out.str();
}

}  // namespace opweight
