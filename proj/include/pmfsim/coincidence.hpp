#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "pmfsim/entanglement.hpp"
#include "pmfsim/errors.hpp"
#include "pmfsim/fiber.hpp"
#include "pmfsim/linalg.hpp"
#include "pmfsim/polarization.hpp"
#include "pmfsim/rng.hpp"

namespace pmfsim {

/// Pair source and detection parameters. Rates scale linearly with pump
/// power; arm losses are folded into the heralding efficiency.
struct SourceParams {
    double pump_mw = 2.0;
    double pair_rate_per_mw_hz = 7650.0;
    double heralding_eta = 0.17;
    double coincidence_window_s = 8e-9;
    double integration_time_s = 1.0;  ///< per angle point
    double dark_rate_hz = 0.0;        ///< per detector, default off
    std::uint64_t seed = 1;
};

inline void validate(const SourceParams& src) {
    auto positive = [](double v) { return v > 0.0 && std::isfinite(v); };
    if (!positive(src.pump_mw)) throw ValidationError("SourceParams: pump power must be positive");
    if (!positive(src.pair_rate_per_mw_hz))
        throw ValidationError("SourceParams: pair rate must be positive");
    if (!(src.heralding_eta > 0.0 && src.heralding_eta <= 1.0))
        throw ValidationError("SourceParams: heralding efficiency must be in (0, 1]");
    if (!positive(src.coincidence_window_s))
        throw ValidationError("SourceParams: coincidence window must be positive");
    if (!positive(src.integration_time_s))
        throw ValidationError("SourceParams: integration time must be positive");
    if (!(src.dark_rate_hz >= 0.0) || !std::isfinite(src.dark_rate_hz))
        throw ValidationError("SourceParams: dark rate must be >= 0");
}

/// Analyzer settings: HWP angles (radians) ahead of each PBS.
struct MeasurementSetting {
    double hwp_a_rad = 0.0;
    double hwp_b_rad = 0.0;
};

/// Detector pairings in dataset column order:
/// A1&B1, A2&B1, A1&B2, A2&B2 (1 = transmitted port, 2 = reflected port).
enum class DetectorPair { a1b1 = 0, a2b1 = 1, a1b2 = 2, a2b2 = 3 };

inline constexpr std::array<DetectorPair, 4> all_detector_pairs{
    DetectorPair::a1b1, DetectorPair::a2b1, DetectorPair::a1b2, DetectorPair::a2b2};

inline const char* to_string(DetectorPair p) {
    switch (p) {
    case DetectorPair::a1b1: return "a1b1";
    case DetectorPair::a2b1: return "a2b1";
    case DetectorPair::a1b2: return "a1b2";
    case DetectorPair::a2b2: return "a2b2";
    }
    return "?";
}

namespace detail {
/// Input-space analyzer vector for one station port: the PBS projects onto
/// |H> (port 1) or |V> (port 2) after the HWP.
inline JonesVector analyzer_vector(double hwp_angle_rad, int port) {
    JonesVector basis = JonesVector::Zero();
    basis(port == 1 ? 0 : 1) = 1.0;
    return hwp(hwp_angle_rad).adjoint() * basis;
}
} // namespace detail

/// Probability that a pair fires the given detector combination when each
/// photon passes an HWP followed by a PBS.
inline std::array<double, 4> coincidence_probs(const BipartiteState& rho,
                                               const MeasurementSetting& s) {
    require_density_matrix(rho, "coincidence_probs");
    const JonesVector a1 = detail::analyzer_vector(s.hwp_a_rad, 1);
    const JonesVector a2 = detail::analyzer_vector(s.hwp_a_rad, 2);
    const JonesVector b1 = detail::analyzer_vector(s.hwp_b_rad, 1);
    const JonesVector b2 = detail::analyzer_vector(s.hwp_b_rad, 2);
    auto prob = [&rho](const JonesVector& va, const JonesVector& vb) {
        StateVector v;
        v << va(0) * vb(0), va(0) * vb(1), va(1) * vb(0), va(1) * vb(1);
        const double p = (v.adjoint() * rho.rho * v).value().real();
        return std::clamp(p, 0.0, 1.0);
    };
    return {prob(a1, b1), prob(a2, b1), prob(a1, b2), prob(a2, b2)};
}

inline double coincidence_prob(const BipartiteState& rho, const MeasurementSetting& s,
                               DetectorPair pairing) {
    return coincidence_probs(rho, s)[static_cast<int>(pairing)];
}

/// Noiseless fringes of the two reported pairings (A1&B1 and A2&B1) as
/// Bob's HWP is scanned.
struct IdealFringe {
    std::vector<double> a1b1;
    std::vector<double> a2b1;
};

inline IdealFringe ideal_fringe(const BipartiteState& rho, double theta_a_rad,
                                const std::vector<double>& theta_b_axis_rad) {
    if (theta_b_axis_rad.empty())
        throw ValidationError("ideal_fringe: angle axis must be non-empty");
    IdealFringe out;
    out.a1b1.reserve(theta_b_axis_rad.size());
    out.a2b1.reserve(theta_b_axis_rad.size());
    for (double tb : theta_b_axis_rad) {
        const auto p = coincidence_probs(rho, {theta_a_rad, tb});
        out.a1b1.push_back(p[0]);
        out.a2b1.push_back(p[1]);
    }
    return out;
}

/// Uncorrelated-click coincidence rate estimate: N_A * N_B * T_c.
inline double accidental_rate_hz(double singles_a_hz, double singles_b_hz, double window_s) {
    if (singles_a_hz < 0.0 || singles_b_hz < 0.0 || window_s < 0.0)
        throw ValidationError("accidental_rate: arguments must be nonnegative");
    return singles_a_hz * singles_b_hz * window_s;
}

/// One angle point of a coincidence scan. Counts are stored as doubles so
/// the same record carries either sampled integers or expectation values.
struct FringePoint {
    double two_theta_b_deg = 0.0;
    std::array<double, 4> coincidences{};  ///< order: a1b1, a2b1, a1b2, a2b2
    double singles_a1 = 0.0, singles_a2 = 0.0;
    double singles_b1 = 0.0, singles_b2 = 0.0;
    double integration_s = 0.0;
};

/// A recorded scan of Bob's HWP at one Alice setting, plus the metadata
/// needed to interpret and reproduce it. Alice's angle is kept in degrees,
/// the unit used at every file interface.
struct FringeDataset {
    double theta_a_deg = 0.0;
    std::vector<FringePoint> points;
    SourceParams source{};
    std::string channel_label = "identity";
    bool expectation = false;              ///< true: unsampled expected values
    double estimated_accidental_rate_hz = 0.0;
};

/// The fixed channel seen by the two photons during a scan, before any
/// per-step drift: one Jones operator per arm plus the compensation phases
/// applied at the stations.
struct BipartiteChannel {
    JonesMatrix arm_a = JonesMatrix::Identity();
    JonesMatrix arm_b = JonesMatrix::Identity();
    CompensationSetting compensation{};
    std::string label = "identity";
};

/// Simulate one fringe scan. Per angle point, expected coincidences are
/// rate * probability * time plus a uniform quarter share of the accidental
/// rate, and singles are the pair clicks plus the unpaired-photon share
/// (singles rate = pair rate / heralding efficiency per arm) plus dark
/// counts, so singles always dominate their coincidences. Sampling is
/// Poisson, keyed by (seed, point index); expectation mode skips sampling
/// and records the means. With drift, the channel is re-sampled once per
/// angle point.
inline FringeDataset simulate_fringe(const BipartiteState& rho0, const BipartiteChannel& channel,
                                     const DriftModel& drift, const SourceParams& source,
                                     double theta_a_rad,
                                     const std::vector<double>& two_theta_b_axis_deg,
                                     bool expectation = false) {
    require_density_matrix(rho0, "simulate_fringe");
    validate(source);
    if (two_theta_b_axis_deg.empty())
        throw ValidationError("simulate_fringe: angle axis must be non-empty");

    const double pair_rate_hz = source.pump_mw * source.pair_rate_per_mw_hz;
    const double singles_rate_hz = pair_rate_hz / source.heralding_eta;
    const double accidental_hz =
        accidental_rate_hz(singles_rate_hz, singles_rate_hz, source.coincidence_window_s);
    const double t = source.integration_time_s;

    FringeDataset data;
    data.theta_a_deg = theta_a_rad * 180.0 / M_PI;
    data.source = source;
    data.channel_label = channel.label;
    data.expectation = expectation;
    data.estimated_accidental_rate_hz = accidental_hz;
    data.points.reserve(two_theta_b_axis_deg.size());

    const DriftModel drift_a = drift_for_arm(drift, 0);
    const DriftModel drift_b = drift_for_arm(drift, 1);
    JonesMatrix arm_a = channel.arm_a;
    JonesMatrix arm_b = channel.arm_b;

    for (std::size_t k = 0; k < two_theta_b_axis_deg.size(); ++k) {
        arm_a = drift_step(drift_a, channel.arm_a, arm_a, k);
        arm_b = drift_step(drift_b, channel.arm_b, arm_b, k);
        const BipartiteState rho = evolve(rho0, arm_a, arm_b, channel.compensation);

        const double two_theta_b_deg = two_theta_b_axis_deg[k];
        const double theta_b_rad = two_theta_b_deg / 2.0 * M_PI / 180.0;
        const auto p = coincidence_probs(rho, {theta_a_rad, theta_b_rad});

        FringePoint point;
        point.two_theta_b_deg = two_theta_b_deg;
        point.integration_s = t;

        std::array<double, 4> lambda{};
        for (int j = 0; j < 4; ++j)
            lambda[j] = (pair_rate_hz * p[j] + accidental_hz / 4.0) * t;
        // unpaired-photon singles per detector, from the arm marginals
        const double qa1 = std::clamp(p[0] + p[2], 0.0, 1.0);
        const double qb1 = std::clamp(p[0] + p[1], 0.0, 1.0);
        const double unpaired_hz = singles_rate_hz - pair_rate_hz;
        std::array<double, 4> extra = {
            (unpaired_hz * qa1 + source.dark_rate_hz) * t,
            (unpaired_hz * (1.0 - qa1) + source.dark_rate_hz) * t,
            (unpaired_hz * qb1 + source.dark_rate_hz) * t,
            (unpaired_hz * (1.0 - qb1) + source.dark_rate_hz) * t,
        };

        if (expectation) {
            point.coincidences = lambda;
        } else {
            Stream stream(source.seed, k);
            for (int j = 0; j < 4; ++j)
                point.coincidences[j] = static_cast<double>(stream.next_poisson(lambda[j]));
            for (int j = 0; j < 4; ++j)
                extra[j] = static_cast<double>(stream.next_poisson(extra[j]));
        }
        point.singles_a1 = point.coincidences[0] + point.coincidences[2] + extra[0];
        point.singles_a2 = point.coincidences[1] + point.coincidences[3] + extra[1];
        point.singles_b1 = point.coincidences[0] + point.coincidences[1] + extra[2];
        point.singles_b2 = point.coincidences[2] + point.coincidences[3] + extra[3];
        data.points.push_back(point);
    }
    return data;
}

/// eta = total coincidences / sqrt(N_A * N_B), per angle point, averaged
/// over the scan.
inline double heralding_efficiency(const FringeDataset& data) {
    if (data.points.empty())
        throw UndefinedValueError("heralding_efficiency: empty dataset");
    double sum = 0.0;
    for (const FringePoint& pt : data.points) {
        const double coincidences = pt.coincidences[0] + pt.coincidences[1] +
                                    pt.coincidences[2] + pt.coincidences[3];
        const double n_a = pt.singles_a1 + pt.singles_a2;
        const double n_b = pt.singles_b1 + pt.singles_b2;
        if (n_a <= 0.0 || n_b <= 0.0)
            throw UndefinedValueError("heralding_efficiency: zero singles at a point");
        sum += coincidences / std::sqrt(n_a * n_b);
    }
    return sum / static_cast<double>(data.points.size());
}

} // namespace pmfsim
