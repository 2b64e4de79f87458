#pragma once

#include <string>
#include <vector>

namespace opweight {

// One verification clause: stable label, verdict, worst residual, optional
// witness payload. Skipped checks stay listed with their reason.
struct Check {
  std::string label;
  bool pass = false;
  double residual = 0.0;
  std::string witness;
  bool skipped = false;
  std::string skip_reason;
};

struct Report {
  std::vector<Check> checks;

  void add(std::string label, bool pass, double residual,
           std::string witness = "");
  void add_skipped(std::string label, std::string reason);
  void merge(const Report& other);
  bool all_pass() const;
  // Deterministic assembly order regardless of execution order.
  void sort_by_label();
  const Check* find(const std::string& label) const;
};

}  // namespace opweight
