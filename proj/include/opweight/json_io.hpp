#pragma once

#include <string>

#include "json.hpp"
#include "opweight/ksgns.hpp"
#include "opweight/regular.hpp"
#include "opweight/report.hpp"

namespace opweight {

// Order-preserving JSON document; construction order is serialization order,
// which keeps reports and round trips byte-stable.
using Json = nlohmann::ordered_json;

Json spec_to_json(const AlgebraSpec& s);
Json mat_to_json(const Mat& m);
Json element_to_json(const Element& e);
Json weight_to_json(const Weight& w);
Json cpmap_to_json(const CpMap& m);
Json module_to_json(const ModuleRep& m);
Json triplet_to_json(const KsgnsTriplet& t);
Json seed_to_json(const SeedData& s);
// Rows sorted by label; witness and skip fields only when present.
Json report_to_json(const Report& r);

AlgebraSpec spec_from_json(const Json& j);
// Shape comes from the document; rows and cols pin the expected shape so a
// dimensionless empty matrix still lands correctly.
Mat mat_from_json(const Json& j, int rows, int cols);
Element element_from_json(const Json& j);
Weight weight_from_json(const Json& j, double tol = kDefaultTol);
CpMap cpmap_from_json(const Json& j, const AlgebraSpec& source,
                      const AlgebraSpec& target);
ModulePtr module_from_json(const Json& j, const AlgebraSpec& base,
                           double tol = kDefaultTol);
KsgnsTriplet triplet_from_json(const Json& j, double tol = kDefaultTol);
SeedData seed_from_json(const Json& j, double tol = kDefaultTol);

// Two-space indent plus trailing newline; equal documents dump to equal
// bytes.
std::string dump_json(const Json& j);
// Throw ParseError carrying the parser's position message.
Json parse_json_text(const std::string& text);
Json parse_json_file(const std::string& path);
std::string report_to_text(const Report& r);

}  // namespace opweight
