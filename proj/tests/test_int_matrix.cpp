#include "oracles.hpp"
#include "torgap/families.hpp"

#include <catch_amalgamated.hpp>

using namespace torgap;

TEST_CASE("IntMatrix basics") {
  IntMatrix m{{1, 2, 3}, {4, 5, 6}};
  CHECK(m.rows() == 2);
  CHECK(m.cols() == 3);
  CHECK(m.transpose().rows() == 3);
  CHECK(m.transpose()(2, 1) == 6);
  CHECK(m.column(1) == IntMatrix{{2}, {5}});
  CHECK((m + m) == BigInt(2) * m);
  CHECK((m - m).is_zero());
  CHECK(IntMatrix::identity(3).trace() == 3);
}

TEST_CASE("entries are unbounded integers") {
  IntMatrix m{{1000000000000LL}};
  IntMatrix p = int_matrix_power(m, 5);
  BigInt expect = 1;
  for (int i = 0; i < 60; ++i) expect *= 10;
  CHECK(p(0, 0) == expect);
}

TEST_CASE("determinant and rank") {
  CHECK(IntMatrix{{2, 0}, {0, 3}}.determinant() == 6);
  CHECK(IntMatrix{{0, 1}, {1, 0}}.determinant() == -1);
  CHECK(IntMatrix{{1, 2}, {2, 4}}.rank() == 1);
  CHECK(IntMatrix(3, 3).rank() == 0);
  std::mt19937_64 rng(11);
  for (int t = 0; t < 50; ++t) {
    IntMatrix m = oracle::random_matrix(rng, 4, 4);
    std::vector<std::vector<BigInt>> rows(4, std::vector<BigInt>(4));
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t j = 0; j < 4; ++j) rows[i][j] = m(i, j);
    CHECK(m.determinant() == oracle::laplace_det(rows));
  }
}

TEST_CASE("lattice_sum concatenates columns") {
  IntMatrix e1{{1}, {0}}, e2{{0}, {1}};
  CHECK(lattice_sum(e1, e2) == IntMatrix{{1, 0}, {0, 1}});
  CHECK(lattice_sum(e1, e1) == IntMatrix{{1, 1}, {0, 0}});
  CHECK(lattice_sum(e1, e1).rank() == 1);
  CHECK_THROWS_AS(lattice_sum(e1, IntMatrix{{1}, {0}, {0}}), DimensionError);
}

TEST_CASE("matrix powers") {
  IntMatrix a = presets::hyperbolic_genus2();
  CHECK(int_matrix_power(a, 0) == IntMatrix::identity(4));
  CHECK(int_matrix_power(a, 2).trace() == 68);
  IntMatrix inv = int_matrix_power(a, -1);
  CHECK(a * inv == IntMatrix::identity(4));
  for (long long j = -3; j <= 3; ++j)
    for (long long k = -3; k <= 3; ++k)
      CHECK(int_matrix_power(a, j + k) ==
            int_matrix_power(a, j) * int_matrix_power(a, k));
  CHECK_THROWS_AS(int_matrix_power(IntMatrix{{2, 0}, {0, 1}}, -1),
                  PreconditionError);
}

TEST_CASE("unimodular inverse") {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 30; ++t) {
    IntMatrix u = oracle::random_unimodular(rng, 5);
    CHECK(u * unimodular_inverse(u) == IntMatrix::identity(5));
  }
  CHECK_THROWS_AS(unimodular_inverse(IntMatrix{{2}}), PreconditionError);
}
