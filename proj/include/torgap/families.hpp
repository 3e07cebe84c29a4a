#pragma once

#include "torgap/symplectic.hpp"

#include <string>

namespace torgap {

struct GluingFamily {
  std::string id;
  SymplecticAction action;
  LagrangianPair pair;
  long long twist_exponent_per_step = 2;
  bool allow_nonhyperbolic = false;
};

inline GluingFamily make_family(std::string id, SymplecticAction act,
                                const IntMatrix &plus, const IntMatrix &minus,
                                long long twist = 2,
                                bool allow_nonhyperbolic = false) {
  LagrangianPair pair(act, plus, minus);
  if (!allow_nonhyperbolic && !classify_spectrum(act).hyperbolic)
    throw PreconditionError("family '" + id + "': action is not hyperbolic");
  if (twist < 0) throw PreconditionError("twist exponent must be nonnegative");
  return GluingFamily{std::move(id), std::move(act), std::move(pair), twist,
                      allow_nonhyperbolic};
}

namespace presets {

// Genus-2 hyperbolic symplectic matrix with eigenvalues 3 +- 2 sqrt 2.
inline IntMatrix hyperbolic_genus2() {
  return IntMatrix{{4, 2, 3, 0}, {2, 2, 0, 3}, {1, 0, 2, -2}, {0, 1, -2, 4}};
}

// diag(B, B^{-T}) with B = [[2,1],[1,1]].
inline IntMatrix split_cat_map() {
  return IntMatrix{{2, 1, 0, 0}, {1, 1, 0, 0}, {0, 0, 1, -1}, {0, 0, -1, 2}};
}

inline IntMatrix coordinate_plane(std::size_t dim, std::size_t first) {
  IntMatrix m(dim, 2);
  m(first, 0) = 1;
  m(first + 1, 1) = 1;
  return m;
}

// span(e1 + e4, e2 + e3), isotropic for the standard form
inline IntMatrix skew_plane() {
  return IntMatrix{{1, 0}, {0, 1}, {0, 1}, {1, 0}};
}

// Both sides killed by span(e1, e2). The twisted gluing has torsion
// (Z/A_{2N})^2.
inline GluingFamily twisted_family() {
  SymplecticAction act(hyperbolic_genus2());
  return make_family("twisted", act, coordinate_plane(4, 0),
                     coordinate_plane(4, 0));
}

// span(e1, e2) against span(e3, e4): cyclic torsion of order 3 A_{2N}^2 + 1.
inline GluingFamily heegaard_family() {
  SymplecticAction act(hyperbolic_genus2());
  return make_family("heegaard", act, coordinate_plane(4, 0),
                     coordinate_plane(4, 2));
}

// Block-diagonal action with invariant coordinate caps: trivial homology,
// vanishing gap.
inline GluingFamily degenerate_family() {
  SymplecticAction act(split_cat_map());
  return make_family("split", act, coordinate_plane(4, 2),
                     coordinate_plane(4, 0));
}

// Plus side contains a contracting line; A^{-k} of the minus side converges
// onto it.
inline LagrangianPair degenerate_transverse_pair(const SymplecticAction &act) {
  return LagrangianPair(act, coordinate_plane(4, 0), skew_plane());
}

} // namespace presets
} // namespace torgap
