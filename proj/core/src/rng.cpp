#include "psbf/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace psbf {

std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

namespace {

inline std::uint64_t rotl(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

inline std::uint64_t mix_word(std::uint64_t acc, std::uint64_t w) {
  std::uint64_t t = w;
  return acc ^ (splitmix64(t) + 0x9e3779b97f4a7c15ULL + (acc << 12) + (acc >> 7));
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
  std::uint64_t x = seed;
  for (std::uint64_t w : path) x = mix_word(x, w);
  seed_state(x);
}

RngStream::RngStream(std::uint64_t seed, const std::vector<std::uint64_t>& path) {
  std::uint64_t x = seed;
  for (std::uint64_t w : path) x = mix_word(x, w);
  seed_state(x);
}

void RngStream::seed_state(std::uint64_t x) {
  for (auto& word : s_) word = splitmix64(x);
  // xoshiro must not start at all-zero; splitmix output makes this practically
  // impossible, but guard anyway.
  if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 0x9e3779b97f4a7c15ULL;
}

std::uint64_t RngStream::next_u64() {
  const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double RngStream::next_unit() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t RngStream::next_below(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("next_below: n must be positive");
  const std::uint64_t threshold = (0 - n) % n;
  for (;;) {
    std::uint64_t r = next_u64();
    if (r >= threshold) return r % n;
  }
}

double RngStream::next_gauss() {
  // u1 in (0, 1] so the log is finite.
  double u1 = 1.0 - next_unit();
  double u2 = next_unit();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
}

double RngStream::next_gamma(double shape) {
  if (!(shape > 0.0)) throw std::invalid_argument("next_gamma: shape must be positive");
  if (shape < 1.0) {
    double u = 1.0 - next_unit();
    return next_gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x = next_gauss();
    double t = 1.0 + c * x;
    if (t <= 0.0) continue;
    double v = t * t * t;
    double u = 1.0 - next_unit();
    double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
    if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
  }
}

int RngStream::next_categorical(const double* w, int n) {
  if (n <= 0) throw std::invalid_argument("next_categorical: empty support");
  double total = 0.0;
  for (int i = 0; i < n; ++i) total += w[i];
  if (!(total > 0.0)) throw std::invalid_argument("next_categorical: zero total weight");
  double u = next_unit() * total;
  double cum = 0.0;
  for (int i = 0; i < n; ++i) {
    cum += w[i];
    if (u < cum) return i;
  }
  // Rounding can leave u == total; return the last index with positive weight.
  for (int i = n - 1; i >= 0; --i) {
    if (w[i] > 0.0) return i;
  }
  return n - 1;
}

void RngStream::next_dirichlet(double alpha, int k, double* out) {
  double sum = 0.0;
  for (int i = 0; i < k; ++i) {
    out[i] = next_gamma(alpha);
    sum += out[i];
  }
  if (!(sum > 0.0)) {
    for (int i = 0; i < k; ++i) out[i] = 1.0 / k;
    return;
  }
  for (int i = 0; i < k; ++i) out[i] /= sum;
}

}  // namespace psbf
