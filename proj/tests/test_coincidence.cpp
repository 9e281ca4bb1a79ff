#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "pmfsim/coincidence.hpp"

using namespace pmfsim;

namespace {

std::vector<double> degrees_axis(double start, double stop, int n) {
    std::vector<double> axis;
    for (int k = 0; k < n; ++k)
        axis.push_back(start + (stop - start) * k / (n - 1));
    return axis;
}

SourceParams quiet_source() {
    SourceParams src;
    src.seed = 7;
    return src;
}

} // namespace

TEST(CoincidenceProbs, SingletClosedForm) {
    const BipartiteState s = bell_state(BellState::psi_minus);
    for (double ta : {0.0, M_PI / 8.0, 0.3})
        for (double tb : {0.0, 0.1, M_PI / 8.0, 1.2}) {
            const auto p = coincidence_probs(s, {ta, tb});
            const double d = 2.0 * ta - 2.0 * tb;
            EXPECT_NEAR(p[0], 0.5 * std::sin(d) * std::sin(d), tol::algebraic);
            EXPECT_NEAR(p[1], 0.5 * std::cos(d) * std::cos(d), tol::algebraic);
            EXPECT_NEAR(p[2], 0.5 * std::cos(d) * std::cos(d), tol::algebraic);
            EXPECT_NEAR(p[3], 0.5 * std::sin(d) * std::sin(d), tol::algebraic);
            EXPECT_NEAR(p[0] + p[1] + p[2] + p[3], 1.0, tol::algebraic);
        }
}

TEST(CoincidenceProbs, MaximallyMixedIsFlat) {
    const BipartiteState mixed{TwoQubitOperator::Identity() / 4.0};
    for (double tb : {0.0, 0.4, 1.0}) {
        const auto p = coincidence_probs(mixed, {0.2, tb});
        for (double x : p) EXPECT_NEAR(x, 0.25, tol::algebraic);
    }
}

TEST(IdealFringe, PeriodIs180DegreesInBobsAnalyzerAngle) {
    const BipartiteState s = bell_state(BellState::psi_minus);
    const double theta_a = 0.0;
    // 2*theta_B spanning 0..360 deg -> theta_B 0..pi
    std::vector<double> theta_b_rad;
    for (double deg : degrees_axis(0.0, 360.0, 73)) theta_b_rad.push_back(deg / 2.0 * M_PI / 180.0);
    const IdealFringe fringe = ideal_fringe(s, theta_a, theta_b_rad);
    for (std::size_t k = 0; k + 36 < fringe.a1b1.size(); ++k) {
        EXPECT_NEAR(fringe.a1b1[k], fringe.a1b1[k + 36], tol::algebraic); // +180 deg in 2 theta_B
        EXPECT_NEAR(fringe.a2b1[k], fringe.a2b1[k + 36], tol::algebraic);
    }
}

TEST(AccidentalRate, OperatingPointOracle) {
    const double singles_hz = 2.0 * 7650.0 / 0.17; // 90 kHz per arm
    EXPECT_NEAR(accidental_rate_hz(singles_hz, singles_hz, 8e-9), 64.8, 1e-9);
    EXPECT_THROW(accidental_rate_hz(-1.0, 1.0, 1.0), ValidationError);
}

TEST(SimulateFringe, ExpectationModeRecordsTheMeans) {
    const BipartiteState s = bell_state(BellState::psi_minus);
    const SourceParams src = quiet_source();
    const FringeDataset data = simulate_fringe(s, {}, std::monostate{}, src, 0.0,
                                               degrees_axis(0.0, 180.0, 37), true);
    ASSERT_EQ(data.points.size(), 37u);
    EXPECT_TRUE(data.expectation);
    EXPECT_NEAR(data.estimated_accidental_rate_hz, 64.8, 1e-9);
    EXPECT_NEAR(data.theta_a_deg, 0.0, tol::algebraic);
    const double pair_rate = src.pump_mw * src.pair_rate_per_mw_hz;
    for (const FringePoint& pt : data.points) {
        const double total = pt.coincidences[0] + pt.coincidences[1] + pt.coincidences[2] +
                             pt.coincidences[3];
        // probabilities sum to one, so total = (pair rate + accidentals) * t
        EXPECT_NEAR(total, (pair_rate + 64.8) * src.integration_time_s, 1e-6);
        const double d = 2.0 * 0.0 - 2.0 * (pt.two_theta_b_deg / 2.0 * M_PI / 180.0);
        const double expected_11 =
            (pair_rate * 0.5 * std::sin(d) * std::sin(d) + 64.8 / 4.0) *
            src.integration_time_s;
        EXPECT_NEAR(pt.coincidences[0], expected_11, 1e-6);
        EXPECT_GE(pt.singles_a1 + 1e-9, pt.coincidences[0] + pt.coincidences[2]);
        EXPECT_GE(pt.singles_b1 + 1e-9, pt.coincidences[0] + pt.coincidences[1]);
    }
}

TEST(SimulateFringe, SampledCountsAreDeterministicIntegers) {
    const BipartiteState s = bell_state(BellState::psi_minus);
    const FringeDataset a = simulate_fringe(s, {}, std::monostate{}, quiet_source(), 0.0,
                                            degrees_axis(0.0, 180.0, 19));
    const FringeDataset b = simulate_fringe(s, {}, std::monostate{}, quiet_source(), 0.0,
                                            degrees_axis(0.0, 180.0, 19));
    ASSERT_EQ(a.points.size(), b.points.size());
    for (std::size_t k = 0; k < a.points.size(); ++k) {
        for (int j = 0; j < 4; ++j) {
            EXPECT_EQ(a.points[k].coincidences[j], b.points[k].coincidences[j]);
            EXPECT_EQ(a.points[k].coincidences[j], std::floor(a.points[k].coincidences[j]));
        }
        EXPECT_EQ(a.points[k].singles_a1, b.points[k].singles_a1);
        EXPECT_EQ(a.points[k].singles_b2, b.points[k].singles_b2);
    }
    SourceParams other = quiet_source();
    other.seed = 8;
    const FringeDataset c = simulate_fringe(s, {}, std::monostate{}, other, 0.0,
                                            degrees_axis(0.0, 180.0, 19));
    int differing = 0;
    for (std::size_t k = 0; k < a.points.size(); ++k)
        differing += a.points[k].coincidences[1] != c.points[k].coincidences[1];
    EXPECT_GT(differing, 0);
}

TEST(SimulateFringe, SinglesDominateTheirCoincidences) {
    const BipartiteState s = bell_state(BellState::psi_minus);
    SourceParams src = quiet_source();
    src.dark_rate_hz = 100.0;
    const FringeDataset data = simulate_fringe(s, {}, std::monostate{}, src, M_PI / 8.0,
                                               degrees_axis(0.0, 180.0, 37));
    for (const FringePoint& pt : data.points) {
        EXPECT_GE(pt.singles_a1, pt.coincidences[0] + pt.coincidences[2]);
        EXPECT_GE(pt.singles_a2, pt.coincidences[1] + pt.coincidences[3]);
        EXPECT_GE(pt.singles_b1, pt.coincidences[0] + pt.coincidences[1]);
        EXPECT_GE(pt.singles_b2, pt.coincidences[2] + pt.coincidences[3]);
    }
}

TEST(SimulateFringe, SampledMeanTracksTheExpectation) {
    const BipartiteState s = bell_state(BellState::psi_minus);
    SourceParams src = quiet_source();
    src.integration_time_s = 0.05;
    const std::vector<double> one_point{45.0};
    const FringeDataset expectation =
        simulate_fringe(s, {}, std::monostate{}, src, 0.0, one_point, true);
    const double mean = expectation.points[0].coincidences[0];
    const int reps = 400;
    double sum = 0.0;
    for (int i = 0; i < reps; ++i) {
        src.seed = 1000 + static_cast<std::uint64_t>(i);
        sum += simulate_fringe(s, {}, std::monostate{}, src, 0.0, one_point)
                   .points[0]
                   .coincidences[0];
    }
    const double sample_mean = sum / reps;
    EXPECT_NEAR(sample_mean, mean, 5.0 * std::sqrt(mean / reps));
}

TEST(SimulateFringe, DriftChangesTheFringeShape) {
    const BipartiteState s = bell_state(BellState::psi_minus);
    const std::vector<double> axis = degrees_axis(0.0, 180.0, 37);
    const FringeDataset still = simulate_fringe(s, {}, std::monostate{}, quiet_source(),
                                                0.0, axis, true);
    const DriftModel walk = SmfDriftModel{0.3, 1, 99};
    const FringeDataset moved = simulate_fringe(s, {}, walk, quiet_source(), 0.0, axis, true);
    double diff = 0.0;
    for (std::size_t k = 0; k < axis.size(); ++k)
        diff = std::max(diff, std::abs(still.points[k].coincidences[0] -
                                       moved.points[k].coincidences[0]));
    EXPECT_GT(diff, 1.0);
    // identical drift seed -> identical dataset
    const FringeDataset again = simulate_fringe(s, {}, walk, quiet_source(), 0.0, axis, true);
    for (std::size_t k = 0; k < axis.size(); ++k)
        EXPECT_EQ(moved.points[k].coincidences[0], again.points[k].coincidences[0]);
}

TEST(SimulateFringe, ValidatesItsInputs) {
    const BipartiteState s = bell_state(BellState::psi_minus);
    SourceParams bad = quiet_source();
    bad.heralding_eta = 0.0;
    EXPECT_THROW(simulate_fringe(s, {}, std::monostate{}, bad, 0.0, {0.0}), ValidationError);
    EXPECT_THROW(simulate_fringe(s, {}, std::monostate{}, quiet_source(), 0.0, {}),
                 ValidationError);
}

TEST(HeraldingEfficiency, ExpectationModeClosedForm) {
    const BipartiteState s = bell_state(BellState::psi_minus);
    const SourceParams src = quiet_source();
    const FringeDataset data = simulate_fringe(s, {}, std::monostate{}, src, 0.0,
                                               degrees_axis(0.0, 180.0, 37), true);
    // eta_hat = (pair + acc) / (pair/eta + acc), exactly, at every point
    EXPECT_NEAR(heralding_efficiency(data), 0.17059717003757294, 1e-12);
}

TEST(HeraldingEfficiency, ErrorsOnDegenerateInput) {
    FringeDataset empty;
    EXPECT_THROW(heralding_efficiency(empty), UndefinedValueError);
    FringeDataset zeros;
    zeros.points.push_back({});
    EXPECT_THROW(heralding_efficiency(zeros), UndefinedValueError);
}

TEST(DetectorPair, NamesAreStable) {
    EXPECT_STREQ(to_string(DetectorPair::a1b1), "a1b1");
    EXPECT_STREQ(to_string(DetectorPair::a2b1), "a2b1");
    EXPECT_STREQ(to_string(DetectorPair::a1b2), "a1b2");
    EXPECT_STREQ(to_string(DetectorPair::a2b2), "a2b2");
}
