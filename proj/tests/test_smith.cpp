#include "oracles.hpp"
#include "torgap/smith.hpp"
#include "torgap/families.hpp"

#include <catch_amalgamated.hpp>

using namespace torgap;

namespace {

IntMatrix embed_diagonal(const std::vector<BigInt> &d, std::size_t r, std::size_t c) {
  IntMatrix m(r, c);
  for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
  return m;
}

bool unit_det(const IntMatrix &m) {
  BigInt d = m.determinant();
  return d == 1 || d == -1;
}

} // namespace

TEST_CASE("smith form of small examples") {
  auto s = smith_normal_form(IntMatrix::identity(3));
  CHECK(s.diag == std::vector<BigInt>{1, 1, 1});
  CHECK(smith_normal_form(IntMatrix{{2, 0}, {0, 3}}).diag == std::vector<BigInt>{1, 6});
  CHECK(oracle::minor_gcd_diagonal(IntMatrix{{2, 0}, {0, 3}}) ==
        std::vector<BigInt>{1, 6});

  IntMatrix a = presets::hyperbolic_genus2();
  IntMatrix a2 = int_matrix_power(a, 2);
  IntMatrix pres = lattice_sum(presets::coordinate_plane(4, 0),
                               a2 * presets::coordinate_plane(4, 2));
  CHECK(pres.rows() == 4);
  CHECK(pres.cols() == 4);
  auto diag = smith_normal_form(pres).diag;
  CHECK(diag == oracle::minor_gcd_diagonal(pres));
}

TEST_CASE("smith transforms reconstruct the diagonal exactly") {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<std::size_t> dim(1, 6);
  for (int t = 0; t < 200; ++t) {
    std::size_t r = dim(rng), c = dim(rng);
    IntMatrix m = oracle::random_matrix(rng, r, c);
    auto s = smith_normal_form(m);
    CHECK(s.left * m * s.right == embed_diagonal(s.diag, r, c));
    CHECK(unit_det(s.left));
    CHECK(unit_det(s.right));
    for (std::size_t i = 0; i + 1 < s.diag.size(); ++i) {
      CHECK(s.diag[i] >= 0);
      if (s.diag[i] != 0 && s.diag[i + 1] != 0) CHECK(s.diag[i + 1] % s.diag[i] == 0);
      if (s.diag[i] == 0) CHECK(s.diag[i + 1] == 0);
    }
  }
}

TEST_CASE("smith diagonal agrees with the minor-gcd oracle on 500 matrices") {
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<std::size_t> dim(1, 6);
  std::uniform_int_distribution<int> sparse(0, 3);
  int mismatches = 0;
  for (int t = 0; t < 500; ++t) {
    std::size_t r = dim(rng), c = dim(rng);
    IntMatrix m = oracle::random_matrix(rng, r, c);
    if (t % 5 == 0)  // force rank deficiency and repeated factors now and then
      for (std::size_t j = 0; j < c; ++j) m(r - 1, j) = m(0, j) * sparse(rng);
    if (smith_diagonal(m) != oracle::minor_gcd_diagonal(m)) ++mismatches;
  }
  CHECK(mismatches == 0);
}

TEST_CASE("degenerate inputs") {
  CHECK(smith_diagonal(IntMatrix(3, 2)) == std::vector<BigInt>{0, 0});
  auto g = quotient_group(IntMatrix(3, 2), 3);
  CHECK(g.free_rank() == 3);
  CHECK(g.invariant_factors().empty());
  auto h = quotient_group(IntMatrix(3, 0), 3);
  CHECK(h.free_rank() == 3);
  CHECK_THROWS(smith_normal_form(IntMatrix(0, 0)));
}

TEST_CASE("quotient groups") {
  auto triv = quotient_group(IntMatrix::identity(4), 4);
  CHECK(triv.is_trivial());
  CHECK(triv.to_string() == "0");
  CHECK(triv.order() == BigInt(1));

  auto z22 = quotient_group(IntMatrix{{2, 0}, {0, 2}}, 2);
  CHECK(z22.invariant_factors() == std::vector<BigInt>{2, 2});
  CHECK(z22.free_rank() == 0);
  CHECK(z22.to_string() == "Z/2 + Z/2");

  auto free2 = quotient_group(presets::coordinate_plane(4, 0), 4);
  CHECK(free2.invariant_factors().empty());
  CHECK(free2.free_rank() == 2);
  CHECK_FALSE(free2.order().has_value());
  CHECK_THROWS_AS(quotient_group(IntMatrix::identity(3), 4), DimensionError);
}

TEST_CASE("finite abelian group validation") {
  CHECK_THROWS_AS(FiniteAbelianGroup({1}, 0), PreconditionError);
  CHECK_THROWS_AS(FiniteAbelianGroup({4, 6}, 0), PreconditionError);
  FiniteAbelianGroup g({6, 6}, 0);
  CHECK(g.torsion_order() == 36);
  CHECK(g.log_torsion_order() == Catch::Approx(std::log(36.0)));
}

TEST_CASE("log of huge orders stays finite") {
  BigInt big = 1;
  for (int i = 0; i < 2000; ++i) big *= 7;
  double lg = FiniteAbelianGroup::log_big(big);
  CHECK(lg == Catch::Approx(2000 * std::log(7.0)).epsilon(1e-12));
}

TEST_CASE("quotient is invariant under unimodular change of generators") {
  std::mt19937_64 rng(31);
  for (int t = 0; t < 100; ++t) {
    IntMatrix m = oracle::random_matrix(rng, 4, 4, -5, 5);
    IntMatrix u = oracle::random_unimodular(rng, 4);
    CHECK(quotient_group(m, 4) == quotient_group(m * u, 4));
  }
}
