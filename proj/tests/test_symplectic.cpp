#include "oracles.hpp"
#include "torgap/families.hpp"

#include <catch_amalgamated.hpp>

using namespace torgap;
using Catch::Approx;

namespace {

// Random element of Sp(4, Z) from shears and block changes of basis.
IntMatrix random_symplectic(std::mt19937_64 &rng) {
  std::uniform_int_distribution<int> c(-2, 2);
  IntMatrix m = IntMatrix::identity(4);
  for (int step = 0; step < 6; ++step) {
    IntMatrix g = IntMatrix::identity(4);
    int a = c(rng), b = c(rng), d = c(rng);
    switch (step % 3) {
      case 0:  // [[I, S], [0, I]]
        g(0, 2) = a, g(0, 3) = b, g(1, 2) = b, g(1, 3) = d;
        break;
      case 1:  // [[I, 0], [S, I]]
        g(2, 0) = a, g(2, 1) = b, g(3, 0) = b, g(3, 1) = d;
        break;
      default: {  // [[U, 0], [0, U^{-T}]], U = [[1, a], [0, 1]]
        g(0, 1) = a;
        g(3, 2) = -a;
      }
    }
    m = m * g;
  }
  return m;
}

} // namespace

TEST_CASE("symplectic action validation") {
  CHECK_NOTHROW(SymplecticAction(presets::hyperbolic_genus2()));
  CHECK_THROWS_AS(SymplecticAction(IntMatrix{{2, 0}, {0, 1}}), PreconditionError);
  CHECK_THROWS_AS(SymplecticAction(IntMatrix{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}),
                  DimensionError);
  IntMatrix a = presets::hyperbolic_genus2();
  IntMatrix j = standard_symplectic_form(2);
  CHECK(a.transpose() * j * a == j);
  BigInt d = a.determinant();
  CHECK((d == 1 || d == -1));
  SymplecticAction act(a);
  CHECK(act.power(3) * act.power(-3) == IntMatrix::identity(4));
}

TEST_CASE("Lagrangian pair validation") {
  SymplecticAction act(presets::hyperbolic_genus2());
  CHECK_NOTHROW(LagrangianPair(act, presets::coordinate_plane(4, 0),
                               presets::coordinate_plane(4, 2)));
  IntMatrix mixed{{1, 0}, {0, 0}, {0, 1}, {0, 0}};  // e1 pairs with e3
  CHECK_THROWS_AS(LagrangianPair(act, mixed, presets::coordinate_plane(4, 2)),
                  PreconditionError);
  IntMatrix rank1{{1, 2}, {0, 0}, {0, 0}, {0, 0}};
  CHECK_THROWS_AS(LagrangianPair(act, rank1, presets::coordinate_plane(4, 2)),
                  PreconditionError);
  CHECK_THROWS_AS(LagrangianPair(act, IntMatrix{{1}, {0}, {0}, {0}},
                                 presets::coordinate_plane(4, 2)),
                  DimensionError);
}

TEST_CASE("spectrum of the genus-2 example") {
  SymplecticAction act(presets::hyperbolic_genus2());
  EigenSplit s = classify_spectrum(act);
  REQUIRE(s.hyperbolic);
  REQUIRE(s.clusters.size() == 2);
  CHECK(s.clusters[0].value.real() == Approx(oracle::kExpanding).epsilon(1e-12));
  CHECK(s.clusters[1].value.real() == Approx(oracle::kContracting).epsilon(1e-12));
  CHECK(s.clusters[0].multiplicity == 2);
  CHECK(s.clusters[1].multiplicity == 2);
  CHECK(s.expanding_basis.cols() == 2);
  CHECK(s.contracting_basis.cols() == 2);
  CHECK(s.reconstruction_residual <= 1e-9);

  auto vecs = oracle::printed_eigenvectors();
  for (int i = 0; i < 2; ++i)
    CHECK(angle_to_eigenspace(s, vecs[i], oracle::kContracting) <= 1e-7);
  for (int i = 2; i < 4; ++i)
    CHECK(angle_to_eigenspace(s, vecs[i], oracle::kExpanding) <= 1e-7);

  Mat a = act.matrix().to_eigen();
  CHECK((a * s.expanding_basis - s.expanding_basis *
                                     (s.expanding_basis.transpose() * a *
                                      s.expanding_basis))
            .norm() <= 1e-10 * a.norm());
  Mat both(4, 4);
  both << s.expanding_basis, s.contracting_basis;
  CHECK(Eigen::FullPivLU<Mat>(both).rank() == 4);
}

TEST_CASE("non-hyperbolic and split spectra") {
  IntMatrix j{{0, 1}, {-1, 0}};
  EigenSplit id = classify_spectrum(SymplecticAction(IntMatrix::identity(2), j));
  CHECK_FALSE(id.hyperbolic);
  CHECK_FALSE(id.diagnostic.empty());

  EigenSplit s = classify_spectrum(SymplecticAction(presets::split_cat_map()));
  CHECK(s.hyperbolic);
  const double big = (3 + std::sqrt(5.0)) / 2, small = (3 - std::sqrt(5.0)) / 2;
  REQUIRE(s.clusters.size() == 2);
  CHECK(s.clusters[0].value.real() == Approx(big).epsilon(1e-12));
  CHECK(s.clusters[0].multiplicity == 2);
  CHECK(s.clusters[1].value.real() == Approx(small).epsilon(1e-12));
  CHECK(s.clusters[1].multiplicity == 2);
}

TEST_CASE("eigenspaces of hyperbolic integer matrices contain no integer vector") {
  std::mt19937_64 rng(8);
  int tested = 0;
  while (tested < 20) {
    IntMatrix m = random_symplectic(rng);
    EigenSplit s = classify_spectrum(SymplecticAction(m));
    if (!s.hyperbolic) continue;
    ++tested;
    double worst = M_PI;
    for (int a = -2; a <= 2; ++a)
      for (int b = -2; b <= 2; ++b)
        for (int c = -2; c <= 2; ++c)
          for (int d = -2; d <= 2; ++d) {
            if (!a && !b && !c && !d) continue;
            Vec v(4);
            v << a, b, c, d;
            for (const auto &cl : s.clusters)
              worst = std::min(worst, smallest_principal_angle(cl.basis, v));
          }
    CHECK(worst > 1e-6);
  }
}

TEST_CASE("conditions on the Lagrangian pair") {
  SymplecticAction act(presets::hyperbolic_genus2());
  LagrangianPair heeg(act, presets::coordinate_plane(4, 0),
                      presets::coordinate_plane(4, 2));
  ConditionReport r = check_conditions(act, heeg);
  CHECK(r.plus_condition);
  CHECK(r.minus_condition);
  CHECK(r.complementary);
  CHECK(r.plus_vs_contracting > 0.1);
  CHECK(r.minus_vs_expanding > 0.1);
  CHECK(r.plus_vs_expanding > 0.1);
  CHECK(r.minus_vs_contracting > 0.1);

  // same angles from the printed eigenvectors
  auto vecs = oracle::printed_eigenvectors();
  Mat contracting(4, 2), expanding(4, 2);
  contracting << vecs[0], vecs[1];
  expanding << vecs[2], vecs[3];
  CHECK(r.plus_vs_contracting ==
        Approx(smallest_principal_angle(heeg.plus_basis().to_eigen(), contracting))
            .margin(1e-9));

  LagrangianPair same(act, presets::coordinate_plane(4, 0),
                      presets::coordinate_plane(4, 0));
  ConditionReport s = check_conditions(act, same);
  CHECK_FALSE(s.complementary);
  CHECK(s.plus_vs_minus == Approx(0).margin(1e-12));

  SymplecticAction split(presets::split_cat_map());
  LagrangianPair bad(split, presets::coordinate_plane(4, 2),
                     presets::coordinate_plane(4, 0));
  ConditionReport b = check_conditions(split, bad);
  CHECK_FALSE(b.minus_condition);
  CHECK(b.minus_vs_expanding < kZeroAngle);
  CHECK(b.minus_vs_contracting < kZeroAngle);

  CHECK_THROWS_AS(
      check_conditions(SymplecticAction(IntMatrix::identity(2), IntMatrix{{0, 1}, {-1, 0}}),
                       LagrangianPair(SymplecticAction(IntMatrix::identity(2),
                                                       IntMatrix{{0, 1}, {-1, 0}}),
                                      IntMatrix{{1}, {0}}, IntMatrix{{0}, {1}})),
      PreconditionError);
}

TEST_CASE("transversality scan") {
  SymplecticAction act(presets::hyperbolic_genus2());
  LagrangianPair heeg(act, presets::coordinate_plane(4, 0),
                      presets::coordinate_plane(4, 2));
  AngleTable t = uniform_transversality_scan(act, heeg, 40);
  CHECK(t.k0 == 0);
  CHECK(t.infimum > 0.05);
  CHECK(t.at(0, 0) == Approx(M_PI / 2).margin(1e-12));
  for (std::size_t i = 10; i <= 40; ++i)
    for (std::size_t j = 10; j <= 40; ++j)
      CHECK(std::abs(t.at(i, j) - t.limit_angle) <= 1e-6);

  // the limit is the angle between the printed eigenspaces
  auto vecs = oracle::printed_eigenvectors();
  Mat contracting(4, 2), expanding(4, 2);
  contracting << vecs[0], vecs[1];
  expanding << vecs[2], vecs[3];
  CHECK(t.limit_angle ==
        Approx(smallest_principal_angle(expanding, contracting)).margin(1e-9));

  // a unimodular change of basis leaves every angle unchanged
  IntMatrix u{{2, 1}, {1, 1}};
  LagrangianPair rebased(act, heeg.plus_basis() * u, heeg.minus_basis() * u);
  AngleTable t2 = uniform_transversality_scan(act, rebased, 12);
  for (std::size_t i = 0; i <= 12; ++i)
    for (std::size_t j = 0; j <= 12; ++j)
      CHECK(t2.at(i, j) == Approx(t.at(i, j)).margin(1e-10));
}

TEST_CASE("transversality degenerates for the bad pair") {
  SymplecticAction split(presets::split_cat_map());
  LagrangianPair bad = presets::degenerate_transverse_pair(split);
  AngleTable t = uniform_transversality_scan(split, bad, 20);
  for (std::size_t j = 1; j <= 20; ++j) CHECK(t.at(0, j) < t.at(0, j - 1));
  CHECK(t.at(0, 20) < 1e-3);
  CHECK(t.infimum < 1e-3);
}

TEST_CASE("decay constant") {
  SymplecticAction act(presets::hyperbolic_genus2());
  Mat plus = presets::coordinate_plane(4, 0).to_eigen();
  DecayReport d = decay_constant_check(act, plus, 30, 1000, 1);
  CHECK(d.c == Approx(oracle::kContracting).epsilon(1e-12));
  CHECK(std::isfinite(d.empirical_constant));
  CHECK(d.empirical_constant <= d.subspace_constant * (1 + 1e-9));
  CHECK(d.empirical_constant >= 1.0);  // j = k gives ratio 1
  CHECK(d.violations == 0);

  DecayReport fresh = decay_constant_check(act, plus, 30, 500, 987654321);
  CHECK(fresh.violations == 0);

  EigenSplit s = classify_spectrum(act);
  DecayReport eig = decay_constant_check(act, Mat(s.expanding_basis.col(0)), 20, 20, 3);
  CHECK(eig.subspace_constant == Approx(1.0).epsilon(1e-8));
  CHECK(eig.empirical_constant == Approx(1.0).epsilon(1e-8));
}
