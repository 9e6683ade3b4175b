#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "lrknn/linalg.hpp"
#include "lrknn/rng.hpp"

using namespace lrknn;

TEST_CASE("cholesky factor of a hand-worked matrix", "[linalg]") {
  SquareMatrix m(2);
  m.at(0, 0) = 4;
  m.at(0, 1) = 2;
  m.at(1, 0) = 2;
  m.at(1, 1) = 3;
  auto l = cholesky(m);
  REQUIRE(l.has_value());
  CHECK(l->at(0, 0) == Catch::Approx(2.0).margin(1e-15));
  CHECK(l->at(1, 0) == Catch::Approx(1.0).margin(1e-15));
  CHECK(l->at(1, 1) == Catch::Approx(std::sqrt(2.0)).margin(1e-15));
  CHECK(l->at(0, 1) == 0.0);
}

TEST_CASE("cholesky solve against a hand inverse", "[linalg]") {
  // inverse of [[4,2],[2,3]] is 1/8 [[3,-2],[-2,4]]
  SquareMatrix m(2);
  m.at(0, 0) = 4;
  m.at(0, 1) = 2;
  m.at(1, 0) = 2;
  m.at(1, 1) = 3;
  auto l = cholesky(m);
  REQUIRE(l.has_value());
  auto x = cholesky_solve(*l, {1.0, 0.0});
  CHECK(x[0] == Catch::Approx(3.0 / 8.0).margin(1e-15));
  CHECK(x[1] == Catch::Approx(-2.0 / 8.0).margin(1e-15));

  SquareMatrix inv = cholesky_inverse(*l);
  CHECK(inv.at(0, 0) == Catch::Approx(3.0 / 8.0).margin(1e-15));
  CHECK(inv.at(0, 1) == Catch::Approx(-0.25).margin(1e-15));
  CHECK(inv.at(1, 0) == Catch::Approx(-0.25).margin(1e-15));
  CHECK(inv.at(1, 1) == Catch::Approx(0.5).margin(1e-15));
}

TEST_CASE("indefinite and rank-deficient matrices are rejected", "[linalg]") {
  SquareMatrix neg(2);
  neg.at(0, 0) = 1;
  neg.at(1, 1) = -1;
  CHECK_FALSE(cholesky(neg).has_value());

  SquareMatrix rank1(2); // [[1,1],[1,1]]
  rank1.at(0, 0) = rank1.at(0, 1) = rank1.at(1, 0) = rank1.at(1, 1) = 1;
  CHECK_FALSE(cholesky(rank1).has_value());

  SquareMatrix nearly(2); // collinear up to rounding
  nearly.at(0, 0) = 3.0;
  nearly.at(0, 1) = nearly.at(1, 0) = 3.0;
  nearly.at(1, 1) = 3.0 + 1e-15;
  CHECK_FALSE(cholesky(nearly).has_value());
}

TEST_CASE("random SPD systems solve and invert accurately", "[linalg]") {
  Rng rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 1 + rng.below(8);
    // A = B B^T + I is SPD
    SquareMatrix b(n), a(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) b.at(i, j) = rng.next_double() * 2.0 - 1.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        double s = i == j ? 1.0 : 0.0;
        for (std::size_t k = 0; k < n; ++k) s += b.at(i, k) * b.at(j, k);
        a.at(i, j) = s;
      }
    auto l = cholesky(a);
    REQUIRE(l.has_value());

    std::vector<double> rhs(n);
    for (auto& v : rhs) v = rng.next_double() * 4.0 - 2.0;
    auto x = cholesky_solve(*l, rhs);
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) s += a.at(i, j) * x[j];
      CHECK(s == Catch::Approx(rhs[i]).margin(1e-9));
    }

    SquareMatrix inv = cholesky_inverse(*l);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (std::size_t k = 0; k < n; ++k) s += a.at(i, k) * inv.at(k, j);
        CHECK(s == Catch::Approx(i == j ? 1.0 : 0.0).margin(1e-9));
      }
  }
}
