#pragma once

#include <cstdint>
#include <initializer_list>
#include <string_view>
#include <vector>

namespace cmliv {

// splitmix64 finalizer; also used as the mixing step when deriving
// sub-stream seeds from (seed, path...) tuples.
std::uint64_t mix64(std::uint64_t x);

// Chains mix64 over the base seed and a path of integers. Used for
// per-fold / per-tree / per-rep streams so results do not depend on
// scheduling order.
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> path);

// FNV-1a, for hashing string ids (dgp names in rep seeds).
std::uint64_t hash_string(std::string_view s);

// xoshiro256** with a splitmix64-seeded state. The standard library
// engines and distributions are implementation-defined, so everything
// that must reproduce bit-for-bit goes through this generator.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();
  // Uniform on the open interval (0, 1); safe to feed to quantile functions.
  double next_double();
  // Unbiased integer in [0, bound), bound >= 1.
  std::uint64_t next_below(std::uint64_t bound);
  // Standard normal via the inverse cdf.
  double next_normal();

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(next_below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t s_[4];
};

// Standard normal cdf, pdf and quantile (Wichura's AS241, double precision).
double norm_cdf(double x);
double norm_pdf(double x);
double norm_quantile(double p);

}  // namespace cmliv
