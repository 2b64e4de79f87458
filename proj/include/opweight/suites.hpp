#pragma once

#include <cstdint>

#include "opweight/report.hpp"

namespace opweight {

// Budget for the property suites. Instance counts, tolerances, and random
// streams are functions of this struct alone, so identical configs yield
// identical reports byte for byte. Constructions always run at the library
// default gate; `tol` scales only the pass/fail thresholds of the reported
// rows, which keeps extreme tolerances (for forced-failure runs) from
// changing which objects get built.
struct SuiteConfig {
  double tol = 1e-9;
  uint64_t seed = 0;
  int samples = 200;
};

// Each suite aggregates its clauses into a handful of rows whose residual is
// the worst case over all instances; the witness names the worst instance.
Report suite_ksgns_reconstruction(const SuiteConfig& c);
Report suite_cp_characterization(const SuiteConfig& c);
Report suite_dominated_round_trip(const SuiteConfig& c);
Report suite_directed_join(const SuiteConfig& c);
Report suite_operator_monotone(const SuiteConfig& c);
Report suite_form_reconstruction(const SuiteConfig& c);
Report suite_regular_round_trip(const SuiteConfig& c);
Report suite_truncating_net(const SuiteConfig& c);
Report suite_tensor_product(const SuiteConfig& c);
Report suite_compactness(const SuiteConfig& c);
// Reads the process-wide positive-map bound observer, so it reports on
// whatever ran before it in this process.
Report suite_positive_map_bound(const SuiteConfig& c);

// Resets the bound observer, runs every suite above in a fixed order, and
// appends the observer rows; the merged report is sorted by label.
Report run_all_suites(const SuiteConfig& c);

}  // namespace opweight
