#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>

#include "pmfsim/errors.hpp"

namespace pmfsim {

using Complex = std::complex<double>;
using JonesVector = Eigen::Vector2cd;
using JonesMatrix = Eigen::Matrix2cd;
using StateVector = Eigen::Vector4cd;  ///< two-qubit amplitudes, basis order HH, HV, VH, VV
using TwoQubitOperator = Eigen::Matrix4cd;

namespace tol {
inline constexpr double algebraic = 1e-12;      ///< identities that hold to rounding
inline constexpr double unitary = 1e-10;        ///< operator admission into evolution
inline constexpr double eigenvalue_floor = -1e-10;  ///< PSD check floor for density matrices
inline constexpr double purity_pure = 1e-8;     ///< purity deficit below which a state counts as pure
} // namespace tol

inline bool all_finite(const Eigen::Ref<const Eigen::MatrixXcd>& m) {
    return m.allFinite();
}

/// Largest absolute entry of (a - b).
template <typename A, typename B>
double max_abs_diff(const A& a, const B& b) {
    return (a - b).cwiseAbs().maxCoeff();
}

template <typename M>
bool is_unitary(const M& u, double tolerance = tol::unitary) {
    if (!u.allFinite()) return false;
    M gram = u.adjoint() * u;
    return max_abs_diff(gram, M::Identity()) <= tolerance;
}

template <typename M>
bool is_hermitian(const M& m, double tolerance = tol::algebraic) {
    return m.allFinite() && max_abs_diff(m, m.adjoint()) <= tolerance;
}

/// Kronecker product placing `a` on the first (Alice) factor.
inline TwoQubitOperator kron(const JonesMatrix& a, const JonesMatrix& b) {
    TwoQubitOperator out;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            out.block<2, 2>(2 * i, 2 * j) = a(i, j) * b;
    return out;
}

/// Two-photon polarization state as a 4x4 density matrix over HH, HV, VH, VV.
struct BipartiteState {
    TwoQubitOperator rho = TwoQubitOperator::Zero();

    double purity() const { return (rho * rho).trace().real(); }
    bool is_pure(double deficit = tol::purity_pure) const { return purity() >= 1.0 - deficit; }
};

/// Density matrix of a normalized pure state |psi><psi|.
inline BipartiteState pure_state(const StateVector& psi) {
    if (!psi.allFinite()) throw ValidationError("pure_state: non-finite amplitudes");
    const double n2 = psi.squaredNorm();
    if (std::abs(n2 - 1.0) > 1e-9)
        throw ValidationError("pure_state: amplitudes are not normalized");
    return BipartiteState{psi * psi.adjoint()};
}

/// Hermitian within `herm_tol`, unit trace within `trace_tol`, eigenvalues
/// above `eig_floor`.
inline bool is_density_matrix(const TwoQubitOperator& rho,
                              double herm_tol = tol::algebraic,
                              double trace_tol = tol::algebraic,
                              double eig_floor = tol::eigenvalue_floor) {
    if (!is_hermitian(rho, herm_tol)) return false;
    if (std::abs(rho.trace().real() - 1.0) > trace_tol) return false;
    if (std::abs(rho.trace().imag()) > trace_tol) return false;
    Eigen::SelfAdjointEigenSolver<TwoQubitOperator> es(0.5 * (rho + rho.adjoint()),
                                                       Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff() >= eig_floor;
}

inline void require_density_matrix(const BipartiteState& s, const char* who) {
    if (!is_density_matrix(s.rho))
        throw ValidationError(std::string(who) + ": argument is not a valid density matrix");
}

/// Reduced state of the first (Alice) photon.
inline JonesMatrix partial_trace_bob(const BipartiteState& s) {
    JonesMatrix out;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            out(i, j) = s.rho(2 * i, 2 * j) + s.rho(2 * i + 1, 2 * j + 1);
    return out;
}

/// Reduced state of the second (Bob) photon.
inline JonesMatrix partial_trace_alice(const BipartiteState& s) {
    JonesMatrix out;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            out(i, j) = s.rho(i, j) + s.rho(2 + i, 2 + j);
    return out;
}

} // namespace pmfsim
