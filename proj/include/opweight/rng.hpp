#pragma once

#include <complex>
#include <cstdint>
#include <random>
#include <string_view>

namespace opweight {

// One master seed per run; independent substreams derived from stable labels.
// Uniform/normal draws are hand-rolled so the stream is identical across
// standard libraries (std distributions are implementation-defined).
class Rng {
 public:
  Rng(uint64_t seed, std::string_view label);

  uint64_t next_u64() { return engine_(); }
  // Uniform in [0, 1).
  double unit();
  // Uniform in [lo, hi].
  int uniform_int(int lo, int hi);
  // Standard normal via Box-Muller.
  double normal();
  std::complex<double> cnormal();

  static uint64_t mix(uint64_t seed, std::string_view label);

 private:
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace opweight
