#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <vector>

namespace psbf {

// splitmix64 step; advances x and returns the next output.
std::uint64_t splitmix64(std::uint64_t& x);

// Deterministic xoshiro256** stream. Standard-library distributions are
// implementation-defined, so all sampling helpers here are hand-rolled to keep
// results identical across platforms and runs.
//
// Streams are addressed, not split: RngStream(seed, {a, b, c}) always denotes
// the same stream regardless of what other streams were drawn from. This is
// what makes particle filters and worker pools independent of thread count.
class RngStream {
public:
  RngStream() : RngStream(0, {}) {}
  explicit RngStream(std::uint64_t seed, std::initializer_list<std::uint64_t> path);
  RngStream(std::uint64_t seed, const std::vector<std::uint64_t>& path);

  std::uint64_t next_u64();

  // Uniform in [0, 1), 53-bit resolution.
  double next_unit();

  // Uniform integer in [0, n), unbiased. n must be > 0.
  std::uint64_t next_below(std::uint64_t n);

  // Standard normal via Box-Muller (two uniforms per call, no cached spare).
  double next_gauss();

  // Gamma(shape, 1) via Marsaglia-Tsang, boosted for shape < 1. shape > 0.
  double next_gamma(double shape);

  // Index sampled from an unnormalized nonnegative weight vector.
  int next_categorical(const double* w, int n);

  // Symmetric Dirichlet(alpha) row of length k written into out.
  void next_dirichlet(double alpha, int k, double* out);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = next_below(i);
      std::swap(v[i - 1], v[j]);
    }
  }

private:
  void seed_state(std::uint64_t x);
  std::array<std::uint64_t, 4> s_{};
};

}  // namespace psbf
