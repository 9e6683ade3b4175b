#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cstdint>
#include <set>
#include <vector>

#include "lrknn/rng.hpp"

using namespace lrknn;

TEST_CASE("identical seeds reproduce identical streams", "[rng]") {
  Rng a(42), b(42);
  for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("different seeds give different streams", "[rng]") {
  Rng a(1), b(2);
  int same = 0;
  for (int i = 0; i < 100; ++i) same += a.next_u64() == b.next_u64();
  CHECK(same == 0);
}

TEST_CASE("derived sub-streams are distinct across tags and indices", "[rng]") {
  std::set<std::uint64_t> seeds;
  for (const char* tag : {"split", "inject", "synth", "bootstrap"})
    for (std::uint64_t idx = 0; idx < 50; ++idx) seeds.insert(derive_seed(7, tag, idx));
  CHECK(seeds.size() == 200);
  CHECK(derive_seed(7, "split") != derive_seed(8, "split"));
  CHECK(derive_seed(7, "split", 0) == derive_seed(7, "split"));
}

TEST_CASE("doubles land in the unit interval", "[rng]") {
  Rng rng(9);
  double lo = 1.0, hi = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.next_double();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    lo = std::min(lo, u);
    hi = std::max(hi, u);
  }
  CHECK(lo < 0.01);
  CHECK(hi > 0.99);
}

TEST_CASE("bounded draws stay in range and cover all values", "[rng]") {
  Rng rng(11);
  std::vector<int> counts(10, 0);
  for (int i = 0; i < 10000; ++i) {
    const std::uint64_t v = rng.below(10);
    REQUIRE(v < 10);
    ++counts[static_cast<std::size_t>(v)];
  }
  for (int c : counts) CHECK(c > 800); // expectation 1000, crude uniformity
  Rng one(12);
  for (int i = 0; i < 100; ++i) CHECK(one.below(1) == 0);
}

TEST_CASE("bernoulli tracks its probability", "[rng]") {
  Rng rng(13);
  int hits = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) hits += rng.bernoulli(0.3);
  CHECK(std::abs(hits / static_cast<double>(n) - 0.3) < 0.01);
}

TEST_CASE("shuffle permutes without loss and is seed-deterministic", "[rng]") {
  std::vector<int> v(100);
  for (int i = 0; i < 100; ++i) v[static_cast<std::size_t>(i)] = i;
  std::vector<int> w = v;
  Rng a(5), b(5);
  a.shuffle(v);
  b.shuffle(w);
  CHECK(v == w);
  std::vector<int> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 100; ++i) CHECK(sorted[static_cast<std::size_t>(i)] == i);
  // a different seed rearranges differently
  std::vector<int> u(100);
  for (int i = 0; i < 100; ++i) u[static_cast<std::size_t>(i)] = i;
  Rng c(6);
  c.shuffle(u);
  CHECK(u != v);
}
