#pragma once

#include <cstdint>
#include <random>

#include "pathsynth/error.hpp"
#include "pathsynth/normal.hpp"

namespace pathsynth {

//! Identifies one reproducible random stream. Identical (seed, stream_id)
//! pairs reproduce identical draws on every platform; derived streams let
//! independent work items (realizations, segments, bootstrap replicates)
//! draw concurrently without sharing state.
struct RngSpec {
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x)
{
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline std::uint64_t mix64(std::uint64_t a, std::uint64_t b)
{
  return splitmix64(splitmix64(a) ^ (b + 0x9E3779B97F4A7C15ULL));
}

}  // namespace detail

//! Child stream for a tagged sub-task; the parent stream is untouched.
inline RngSpec derive_stream(const RngSpec& base, std::uint64_t tag)
{
  return RngSpec{base.seed, detail::mix64(base.stream_id, tag)};
}

inline RngSpec derive_stream(const RngSpec& base, std::uint64_t tag_a, std::uint64_t tag_b)
{
  return RngSpec{base.seed, detail::mix64(detail::mix64(base.stream_id, tag_a), tag_b)};
}

//! Deterministic generator over one stream. std::mt19937_64 has a fully
//! specified algorithm, so sequences are portable; uniforms use the top 53
//! bits and normals go through the library's own quantile, keeping draws
//! independent of any standard-library distribution implementation.
class RngStream {
 public:
  explicit RngStream(const RngSpec& spec)
    : engine_(detail::mix64(spec.seed, spec.stream_id))
  {}

  std::uint64_t next_u64() { return engine_(); }

  //! Uniform on the open interval (0, 1).
  double uniform01()
  {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  double normal() { return norm_quantile(uniform01()); }

  //! +1 or -1 with equal probability.
  double rademacher() { return (next_u64() >> 63) ? 1.0 : -1.0; }

  //! Uniform integer in [0, bound) by rejection (unbiased).
  std::uint64_t next_below(std::uint64_t bound)
  {
    if (bound == 0)
      throw Error(ErrorCode::InvalidParameter, "next_below requires bound > 0");
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t x = next_u64();
    while (x >= limit)
      x = next_u64();
    return x % bound;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace pathsynth
