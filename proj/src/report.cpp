#include "opweight/report.hpp"

#include <algorithm>
#include <utility>

namespace opweight {

void Report::add(std::string label, bool pass, double residual,
                 std::string witness) {
  Check c;
  c.label = std::move(label);
  c.pass = pass;
  c.residual = residual;
  c.witness = std::move(witness);
  checks.push_back(std::move(c));
}

void Report::add_skipped(std::string label, std::string reason) {
  Check c;
  c.label = std::move(label);
  c.pass = true;
  c.skipped = true;
  c.skip_reason = std::move(reason);
  checks.push_back(std::move(c));
}

void Report::merge(const Report& other) {
  checks.insert(checks.end(), other.checks.begin(), other.checks.end());
}

bool Report::all_pass() const {
  return std::all_of(checks.begin(), checks.end(),
                     [](const Check& c) { return c.pass || c.skipped; });
}

void Report::sort_by_label() {
  std::stable_sort(checks.begin(), checks.end(),
                   [](const Check& a, const Check& b) { return a.label < b.label; });
}

const Check* Report::find(const std::string& label) const {
  for (const Check& c : checks) {
    if (c.label == label) return &c;
  }
  return nullptr;
}

}  // namespace opweight
