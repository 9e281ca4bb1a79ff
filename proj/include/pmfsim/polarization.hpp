#pragma once

#include <algorithm>
#include <cmath>

#include "pmfsim/errors.hpp"
#include "pmfsim/linalg.hpp"

namespace pmfsim {

inline void require_finite_angle(double value, const char* who) {
    if (!std::isfinite(value)) throw ValidationError(std::string(who) + ": non-finite angle");
}

/// Frame rotation by `theta` (radians):
///   [  cos th   sin th ]
///   [ -sin th   cos th ]
/// rotation(a) * rotation(-a) == I for all finite a.
inline JonesMatrix rotation(double theta) {
    require_finite_angle(theta, "rotation");
    const double c = std::cos(theta), s = std::sin(theta);
    JonesMatrix r;
    r << c, s, -s, c;
    return r;
}

/// Linear retarder with retardance `delta` whose fast axis lies at
/// `axis` radians from horizontal: R(axis) * diag(1, e^{i delta}) * R(-axis).
inline JonesMatrix linear_retarder(double delta, double axis) {
    require_finite_angle(delta, "linear_retarder");
    require_finite_angle(axis, "linear_retarder");
    JonesMatrix d = JonesMatrix::Zero();
    d(0, 0) = 1.0;
    d(1, 1) = std::polar(1.0, delta);
    return rotation(axis) * d * rotation(-axis);
}

/// Half-wave plate at `theta`: linear_retarder(pi, theta).
inline JonesMatrix hwp(double theta) {
    return linear_retarder(M_PI, theta);
}

/// Quarter-wave plate at `theta`: linear_retarder(pi/2, theta).
inline JonesMatrix qwp(double theta) {
    return linear_retarder(M_PI / 2.0, theta);
}

/// Jones operator acting on the two-photon space, Alice factor first.
inline TwoQubitOperator tensor(const JonesMatrix& alice, const JonesMatrix& bob) {
    return kron(alice, bob);
}

/// Conjugate a state by a (checked) unitary: op * rho * op^dagger.
/// The result is re-hermitized to keep rounding from accumulating.
inline BipartiteState apply(const TwoQubitOperator& op, const BipartiteState& state,
                            double unitary_tol = tol::unitary) {
    if (!is_unitary(op, unitary_tol))
        throw NonUnitaryError("apply: operator is not unitary within tolerance");
    TwoQubitOperator evolved = op * state.rho * op.adjoint();
    return BipartiteState{0.5 * (evolved + evolved.adjoint())};
}

/// Overlap fidelity Tr[rho sigma], valid when at least one argument is pure.
/// Symmetric in its arguments; the result is clamped to [0, 1].
/// Throws MixedStateError when both arguments are mixed.
inline double fidelity(const BipartiteState& rho, const BipartiteState& sigma) {
    require_density_matrix(rho, "fidelity");
    require_density_matrix(sigma, "fidelity");
    if (!rho.is_pure() && !sigma.is_pure())
        throw MixedStateError("fidelity: both states are mixed; Tr[rho sigma] is not a fidelity");
    const double f = (rho.rho * sigma.rho).trace().real();
    return std::clamp(f, 0.0, 1.0);
}

} // namespace pmfsim
