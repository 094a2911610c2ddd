#pragma once

#include <cstdint>
#include <random>

namespace dpcpt {

// Seedable random stream used everywhere in the library: a Mersenne Twister
// (mt19937_64) with self-contained Poisson sampling, so a given seed yields the
// same draws on every platform. Monte Carlo replication r runs on its own
// stream seeded base_seed + r; contamination variables run on the stream
// seeded seed ^ kContaminationSeedTag (see contamination.hpp).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return uniform() < p; }

  // Standard normal via the polar (Marsaglia) method.
  double normal();

  // Poisson draw: sequential inversion for small means, Hormann's PTRD
  // transformed rejection for large means.
  std::int64_t poisson(double mean);

  std::uint64_t raw() { return gen_(); }

 private:
  std::int64_t poisson_inversion(double mean);
  std::int64_t poisson_ptrd(double mean);

  std::mt19937_64 gen_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace dpcpt
