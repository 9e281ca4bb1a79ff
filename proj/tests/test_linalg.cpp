#include <gtest/gtest.h>

#include "pmfsim/linalg.hpp"
#include "pmfsim/rng.hpp"

using namespace pmfsim;

namespace {

// Haar-ish random unitary via QR-free construction: U = exp-like product of
// a random phase and rotation-like factors built directly from draws.
JonesMatrix random_unitary(Stream& stream) {
    const double a = 2.0 * M_PI * stream.next_double();
    const double b = 2.0 * M_PI * stream.next_double();
    const double g = 2.0 * M_PI * stream.next_double();
    const double t = std::acos(std::sqrt(stream.next_double()));
    JonesMatrix u;
    u(0, 0) = std::polar(std::cos(t), a);
    u(0, 1) = std::polar(std::sin(t), b);
    u(1, 0) = -std::polar(std::sin(t), g);
    u(1, 1) = std::polar(std::cos(t), g + b - a);
    return u;
}

} // namespace

TEST(Linalg, KronPlacesAliceOnTheFirstFactor) {
    JonesMatrix a, b;
    a << 1.0, 2.0, 3.0, 4.0;
    b << 0.0, 1.0, 1.0, 0.0;
    const TwoQubitOperator k = kron(a, b);
    // (i1 i2, j1 j2) entry = a(i1,j1) * b(i2,j2); basis order HH, HV, VH, VV
    EXPECT_DOUBLE_EQ(k(0, 1).real(), 1.0); // a(0,0) b(0,1)
    EXPECT_DOUBLE_EQ(k(0, 3).real(), 2.0); // a(0,1) b(0,1)
    EXPECT_DOUBLE_EQ(k(2, 1).real(), 3.0); // a(1,0) b(0,1)
    EXPECT_DOUBLE_EQ(k(1, 0).real(), 1.0); // a(0,0) b(1,0)
    EXPECT_DOUBLE_EQ(k(0, 0).real(), 0.0);
}

TEST(Linalg, KronMixedProductProperty) {
    Stream stream(2024);
    for (int rep = 0; rep < 50; ++rep) {
        const JonesMatrix a = random_unitary(stream);
        const JonesMatrix b = random_unitary(stream);
        const JonesMatrix c = random_unitary(stream);
        const JonesMatrix d = random_unitary(stream);
        const TwoQubitOperator lhs = kron(a, b) * kron(c, d);
        const TwoQubitOperator rhs = kron(JonesMatrix(a * c), JonesMatrix(b * d));
        EXPECT_LT(max_abs_diff(lhs, rhs), tol::algebraic);
    }
}

TEST(Linalg, RandomUnitariesPassTheUnitaryCheck) {
    Stream stream(7);
    for (int rep = 0; rep < 100; ++rep) {
        const JonesMatrix u = random_unitary(stream);
        EXPECT_TRUE(is_unitary(u));
        EXPECT_TRUE(is_unitary(TwoQubitOperator(kron(u, u))));
    }
}

TEST(Linalg, NonUnitaryIsRejected) {
    JonesMatrix m = JonesMatrix::Identity();
    m(0, 0) = 1.5;
    EXPECT_FALSE(is_unitary(m));
    m(0, 0) = std::numeric_limits<double>::quiet_NaN();
    EXPECT_FALSE(is_unitary(m));
}

TEST(Linalg, PureStateBuildsAProjector) {
    StateVector psi;
    psi << 0.0, 1.0 / std::sqrt(2.0), -1.0 / std::sqrt(2.0), 0.0;
    const BipartiteState s = pure_state(psi);
    EXPECT_NEAR(s.rho.trace().real(), 1.0, tol::algebraic);
    EXPECT_TRUE(s.is_pure());
    EXPECT_TRUE(is_density_matrix(s.rho));
    EXPECT_NEAR(s.rho(1, 1).real(), 0.5, tol::algebraic);
    EXPECT_NEAR(s.rho(1, 2).real(), -0.5, tol::algebraic);
}

TEST(Linalg, PureStateRejectsBadInput) {
    StateVector unnormalized;
    unnormalized << 1.0, 1.0, 0.0, 0.0;
    EXPECT_THROW(pure_state(unnormalized), ValidationError);
    StateVector bad;
    bad << std::numeric_limits<double>::infinity(), 0.0, 0.0, 0.0;
    EXPECT_THROW(pure_state(bad), ValidationError);
}

TEST(Linalg, DensityMatrixCheckCatchesDefects) {
    TwoQubitOperator rho = TwoQubitOperator::Identity() / 4.0;
    EXPECT_TRUE(is_density_matrix(rho));
    EXPECT_FALSE(is_density_matrix(TwoQubitOperator(2.0 * rho))); // trace 2
    TwoQubitOperator negative = rho;
    negative(3, 3) = -0.25;
    negative(0, 0) = 0.75;
    EXPECT_FALSE(is_density_matrix(negative)); // negative eigenvalue
    TwoQubitOperator skew = rho;
    skew(0, 1) = Complex(0.0, 0.1); // not mirrored
    EXPECT_FALSE(is_density_matrix(skew));
}

TEST(Linalg, PartialTracesOfAProductState) {
    // |H> (x) |V|  ->  Alice reduced = |H><H|, Bob reduced = |V><V|
    StateVector psi = StateVector::Zero();
    psi(1) = 1.0; // HV
    const BipartiteState s = pure_state(psi);
    const JonesMatrix alice = partial_trace_bob(s);
    const JonesMatrix bob = partial_trace_alice(s);
    EXPECT_NEAR(alice(0, 0).real(), 1.0, tol::algebraic);
    EXPECT_NEAR(alice(1, 1).real(), 0.0, tol::algebraic);
    EXPECT_NEAR(bob(1, 1).real(), 1.0, tol::algebraic);
    EXPECT_NEAR(bob(0, 0).real(), 0.0, tol::algebraic);
}

TEST(Linalg, MaxAbsDiffIsEntrywise) {
    JonesMatrix a = JonesMatrix::Zero(), b = JonesMatrix::Zero();
    b(1, 0) = Complex(3.0, 4.0);
    EXPECT_DOUBLE_EQ(max_abs_diff(a, b), 5.0);
}
