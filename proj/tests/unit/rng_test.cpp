#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "doctest.h"
#include "psbf/rng.hpp"

using psbf::RngStream;

TEST_CASE("rng: identical address, identical stream") {
  RngStream a(42, {1, 2, 3});
  RngStream b(42, {1, 2, 3});
  for (int i = 0; i < 64; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("rng: different path or seed, different stream") {
  RngStream base(42, {1, 2, 3});
  RngStream path(42, {1, 2, 4});
  RngStream longer(42, {1, 2, 3, 0});
  RngStream seed(43, {1, 2, 3});
  const std::uint64_t v = base.next_u64();
  CHECK(v != path.next_u64());
  CHECK(v != longer.next_u64());
  CHECK(v != seed.next_u64());
}

TEST_CASE("rng: unit draws live in [0, 1)") {
  RngStream rng(7, {0});
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.next_unit();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("rng: next_below stays below and covers") {
  RngStream rng(7, {1});
  std::vector<int> seen(5, 0);
  for (int i = 0; i < 5000; ++i) {
    const std::uint64_t v = rng.next_below(5);
    REQUIRE(v < 5);
    ++seen[static_cast<int>(v)];
  }
  for (int count : seen) CHECK(count > 800);  // ~1000 each
}

TEST_CASE("rng: categorical frequencies match weights") {
  RngStream rng(11, {2});
  const double w[3] = {0.2, 0.3, 0.5};
  int counts[3] = {0, 0, 0};
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) ++counts[rng.next_categorical(w, 3)];
  for (int k = 0; k < 3; ++k)
    CHECK(std::fabs(static_cast<double>(counts[k]) / draws - w[k]) < 0.01);
}

TEST_CASE("rng: dirichlet rows are simplex points") {
  RngStream rng(13, {3});
  double row[4];
  for (int i = 0; i < 200; ++i) {
    rng.next_dirichlet(0.5, 4, row);
    double total = 0.0;
    for (double x : row) {
      CHECK(x >= 0.0);
      total += x;
    }
    CHECK(std::fabs(total - 1.0) < 1e-12);
  }
}

TEST_CASE("rng: gauss moments") {
  RngStream rng(17, {4});
  double sum = 0.0, sq = 0.0;
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) {
    const double g = rng.next_gauss();
    sum += g;
    sq += g * g;
  }
  CHECK(std::fabs(sum / draws) < 0.02);
  CHECK(std::fabs(sq / draws - 1.0) < 0.03);
}

TEST_CASE("rng: shuffle is a permutation and deterministic") {
  RngStream a(19, {5});
  RngStream b(19, {5});
  std::vector<int> va{0, 1, 2, 3, 4, 5, 6, 7};
  std::vector<int> vb = va;
  a.shuffle(va);
  b.shuffle(vb);
  CHECK(va == vb);
  std::vector<int> sorted = va;
  std::sort(sorted.begin(), sorted.end());
  CHECK(sorted == std::vector<int>{0, 1, 2, 3, 4, 5, 6, 7});
}
