#pragma once

#include <cstdint>

namespace varscope {

// xoshiro256++ stream with SplitMix64 seeding. Substreams are derived from
// (seed, index) so Monte-Carlo draws can be farmed out to workers and still
// reduce to bit-identical results in draw-index order.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) { init(seed); }
  static RngStream substream(std::uint64_t seed, std::uint64_t index);

  std::uint64_t next_u64();
  // Uniform on (0,1), 53-bit resolution.
  double uniform();
  double normal(double mean = 0.0, double sd = 1.0);
  // Shape/rate parameterization; density ~ x^{shape-1} e^{-rate x}.
  double gamma(double shape, double rate);
  double beta(double a, double b);
  long poisson(double mean);

 private:
  void init(std::uint64_t seed);
  double standard_normal();
  double standard_gamma(double shape);
  long poisson_knuth(double mean);
  long poisson_ptrs(double mean);

  std::uint64_t s_[4] = {};
  double spare_normal_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace varscope
