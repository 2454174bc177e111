#pragma once

// Closed-form Green function of the unit square torus, -Lap G = delta - 1,
// integral zero, evaluated from the rapidly convergent product/cosine
// series in the y-direction. All functions take the minimum-image
// displacement d = x - p.

#include "mfdeg/torus.hpp"

namespace mfdeg::torus {

/// G(d). Infinite at d = 0.
double lattice_green(Vec2 d);
/// Gradient of G with respect to x.
Vec2 lattice_green_gradient(Vec2 d);

/// Regular part R(d) = G(d) + log|d| / (2 pi), smooth through d = 0.
double lattice_regular(Vec2 d);
Vec2 lattice_regular_gradient(Vec2 d);

/// R(0) = -log(2 pi eta(i)^2) / (2 pi).
double lattice_regular_self();

/// exp(-8 pi G(d)) = |d|^4 exp(-8 pi R(d)), finite and zero at d = 0.
double lattice_vanishing_weight(Vec2 d);

}  // namespace mfdeg::torus
