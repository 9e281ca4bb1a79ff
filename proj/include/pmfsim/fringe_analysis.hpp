#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "pmfsim/coincidence.hpp"
#include "pmfsim/errors.hpp"
#include "pmfsim/rng.hpp"

namespace pmfsim {

/// (c_max - c_min) / (c_max + c_min).
inline double visibility(double c_max, double c_min) {
    if (!std::isfinite(c_max) || !std::isfinite(c_min) || c_min < 0.0)
        throw ValidationError("visibility: extrema must be finite and nonnegative");
    if (c_min > c_max)
        throw ArgumentOrderError("visibility: c_min exceeds c_max; arguments swapped?");
    if (c_max == 0.0)
        throw UndefinedValueError("visibility: both extrema are zero");
    return (c_max - c_min) / (c_max + c_min);
}

/// First-order propagated uncertainty of the visibility:
///   sigma_V^2 = (dV/dC_max)^2 sigma_max^2 + (dV/dC_min)^2 sigma_min^2
/// with dV/dC_max = 2 c_min / (c_max + c_min)^2 and
///      dV/dC_min = -2 c_max / (c_max + c_min)^2.
inline double visibility_error(double c_max, double c_min, double sigma_max, double sigma_min) {
    visibility(c_max, c_min); // shares the precondition checks
    if (sigma_max < 0.0 || sigma_min < 0.0)
        throw ValidationError("visibility_error: sigmas must be nonnegative");
    const double denom = (c_max + c_min) * (c_max + c_min);
    const double d_max = 2.0 * c_min / denom;
    const double d_min = 2.0 * c_max / denom;
    return std::sqrt(d_max * d_max * sigma_max * sigma_max +
                     d_min * d_min * sigma_min * sigma_min);
}

enum class ExtremaMethod { pointwise, cosine_fit };

inline const char* to_string(ExtremaMethod m) {
    return m == ExtremaMethod::pointwise ? "pointwise" : "cosine_fit";
}

/// Fringe extrema with their uncertainties.
struct Extrema {
    double c_max = 0.0, c_min = 0.0;
    double sigma_max = 0.0, sigma_min = 0.0;
};

/// Fixed-frequency cosine fit y = offset + amplitude * cos(2u + phase),
/// u = Bob's analyzer angle 2*theta_B in radians (one fringe period per
/// 180 degrees of 2*theta_B).
struct FitResult {
    double amplitude = 0.0;   ///< >= 0
    double offset = 0.0;
    double phase_rad = 0.0;
    double residual_rms = 0.0;
};

inline double fringe_period_two_theta_b_deg() { return 180.0; }

namespace detail {

struct CosineFit {
    FitResult result;
    Eigen::Matrix3d covariance = Eigen::Matrix3d::Zero(); ///< of (offset, cos, sin) coefficients
};

/// Linear least squares on regressors [1, cos(2u), sin(2u)].
inline CosineFit fit_fringe(const std::vector<double>& two_theta_b_deg,
                            const std::vector<double>& counts) {
    const std::size_t n = two_theta_b_deg.size();
    Eigen::Matrix3d xtx = Eigen::Matrix3d::Zero();
    Eigen::Vector3d xty = Eigen::Vector3d::Zero();
    for (std::size_t i = 0; i < n; ++i) {
        const double u = two_theta_b_deg[i] * M_PI / 180.0;
        const Eigen::Vector3d x(1.0, std::cos(2.0 * u), std::sin(2.0 * u));
        xtx += x * x.transpose();
        xty += x * counts[i];
    }
    const Eigen::Vector3d beta = xtx.ldlt().solve(xty);

    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double u = two_theta_b_deg[i] * M_PI / 180.0;
        const double fit = beta(0) + beta(1) * std::cos(2.0 * u) + beta(2) * std::sin(2.0 * u);
        rss += (counts[i] - fit) * (counts[i] - fit);
    }

    CosineFit out;
    out.result.amplitude = std::hypot(beta(1), beta(2));
    out.result.offset = std::max(beta(0), 0.0);
    out.result.phase_rad = (out.result.amplitude > 0.0) ? std::atan2(-beta(2), beta(1)) : 0.0;
    out.result.residual_rms = std::sqrt(rss / static_cast<double>(n));
    const double dof = static_cast<double>(n) - 3.0;
    if (dof > 0.0) out.covariance = (rss / dof) * xtx.inverse();
    return out;
}

inline std::vector<double> fringe_counts(const FringeDataset& data, DetectorPair pairing) {
    std::vector<double> counts;
    counts.reserve(data.points.size());
    for (const FringePoint& pt : data.points)
        counts.push_back(pt.coincidences[static_cast<int>(pairing)]);
    return counts;
}

inline std::vector<double> fringe_angles(const FringeDataset& data) {
    std::vector<double> angles;
    angles.reserve(data.points.size());
    for (const FringePoint& pt : data.points) angles.push_back(pt.two_theta_b_deg);
    return angles;
}

inline void require_coverage(const std::vector<double>& two_theta_b_deg) {
    if (two_theta_b_deg.size() < 8)
        throw CoverageError("extract_extrema: need at least 8 angle points");
    const auto [lo, hi] = std::minmax_element(two_theta_b_deg.begin(), two_theta_b_deg.end());
    if (*hi - *lo < fringe_period_two_theta_b_deg() - 1e-9)
        throw CoverageError("extract_extrema: points must span a full fringe period");
}

} // namespace detail

/// Extremum counts of one pairing's fringe. `pointwise` takes the sample
/// extrema with shot-noise sigmas sqrt(count); `cosine_fit` takes
/// offset +/- amplitude of a fixed-frequency cosine fit with sigmas
/// propagated from the fit covariance.
inline Extrema extract_extrema(const FringeDataset& data, DetectorPair pairing,
                               ExtremaMethod method) {
    const std::vector<double> angles = detail::fringe_angles(data);
    detail::require_coverage(angles);
    const std::vector<double> counts = detail::fringe_counts(data, pairing);

    if (method == ExtremaMethod::pointwise) {
        const auto [lo, hi] = std::minmax_element(counts.begin(), counts.end());
        return Extrema{*hi, *lo, std::sqrt(std::max(*hi, 0.0)), std::sqrt(std::max(*lo, 0.0))};
    }

    const detail::CosineFit fit = detail::fit_fringe(angles, counts);
    const double amp = fit.result.amplitude;
    // c_max/min = offset +/- amp; d(amp)/d(cos,sin coeffs) = (cos, -sin) of the phase
    Eigen::Vector3d g_max(1.0, 0.0, 0.0), g_min(1.0, 0.0, 0.0);
    if (amp > 0.0) {
        g_max(1) = std::cos(fit.result.phase_rad);
        g_max(2) = -std::sin(fit.result.phase_rad);
        g_min(1) = -g_max(1);
        g_min(2) = -g_max(2);
    }
    Extrema out;
    out.c_max = fit.result.offset + amp;
    out.c_min = std::max(fit.result.offset - amp, 0.0);
    out.sigma_max = std::sqrt(std::max((g_max.transpose() * fit.covariance * g_max).value(), 0.0));
    out.sigma_min = std::sqrt(std::max((g_min.transpose() * fit.covariance * g_min).value(), 0.0));
    return out;
}

/// One fringe rescaled so its largest count is 1.
struct NormalizedFringe {
    double theta_a_deg = 0.0;
    DetectorPair pairing = DetectorPair::a1b1;
    std::vector<double> two_theta_b_deg;
    std::vector<double> values;
    double normalization_factor = 0.0;
};

/// Scale each reported fringe (both reported pairings of every dataset) by
/// its own maximum. Visibility is unchanged by this rescaling.
inline std::vector<NormalizedFringe> normalize(const std::vector<FringeDataset>& datasets) {
    if (datasets.empty()) throw ValidationError("normalize: no datasets");
    std::vector<NormalizedFringe> out;
    for (const FringeDataset& data : datasets) {
        for (DetectorPair pairing : {DetectorPair::a1b1, DetectorPair::a2b1}) {
            NormalizedFringe norm;
            norm.theta_a_deg = data.theta_a_deg;
            norm.pairing = pairing;
            norm.two_theta_b_deg = detail::fringe_angles(data);
            norm.values = detail::fringe_counts(data, pairing);
            const double peak = norm.values.empty()
                                    ? 0.0
                                    : *std::max_element(norm.values.begin(), norm.values.end());
            if (peak <= 0.0)
                throw UndefinedValueError("normalize: fringe has no positive counts");
            for (double& v : norm.values) v /= peak;
            norm.normalization_factor = peak;
            out.push_back(std::move(norm));
        }
    }
    return out;
}

/// Which count the "fringe amplitude" statistic refers to.
enum class AmplitudeDefinition { peak_to_peak, max_count };

inline const char* to_string(AmplitudeDefinition d) {
    return d == AmplitudeDefinition::peak_to_peak ? "peak_to_peak" : "max_count";
}

/// Per-fringe analysis record.
struct VisibilityReport {
    double theta_a_deg = 0.0;
    DetectorPair pairing = DetectorPair::a1b1;
    ExtremaMethod method = ExtremaMethod::pointwise;
    double c_max = 0.0, c_min = 0.0;
    double sigma_max = 0.0, sigma_min = 0.0;
    double visibility = 0.0;
    double sigma_v = 0.0;
    double normalization_factor = 0.0; ///< raw fringe maximum
    double average_amplitude = 0.0;    ///< per AmplitudeDefinition
};

inline VisibilityReport analyze_fringe(const FringeDataset& data, DetectorPair pairing,
                                       ExtremaMethod method,
                                       AmplitudeDefinition amplitude_def =
                                           AmplitudeDefinition::peak_to_peak) {
    const Extrema e = extract_extrema(data, pairing, method);
    VisibilityReport report;
    report.theta_a_deg = data.theta_a_deg;
    report.pairing = pairing;
    report.method = method;
    report.c_max = e.c_max;
    report.c_min = e.c_min;
    report.sigma_max = e.sigma_max;
    report.sigma_min = e.sigma_min;
    report.visibility = visibility(e.c_max, e.c_min);
    report.sigma_v = visibility_error(e.c_max, e.c_min, e.sigma_max, e.sigma_min);
    const std::vector<double> counts = detail::fringe_counts(data, pairing);
    report.normalization_factor = *std::max_element(counts.begin(), counts.end());
    report.average_amplitude =
        amplitude_def == AmplitudeDefinition::peak_to_peak ? e.c_max - e.c_min : e.c_max;
    return report;
}

/// Averages over the four analyzed fringes of one condition.
struct FringeSummary {
    std::string condition_label;
    double normalization_factor = 0.0;
    double avg_amplitude = 0.0;
    double avg_visibility = 0.0;
    double avg_sigma_v = 0.0;
    ExtremaMethod method = ExtremaMethod::pointwise;
};

/// Aggregate the four (Alice setting x reported pairing) fringes of one
/// measurement condition. Expects exactly the four distinct fringes the
/// standard procedure produces (two Alice settings, two reported pairings).
inline FringeSummary summarize(const std::vector<FringeDataset>& datasets, ExtremaMethod method,
                               AmplitudeDefinition amplitude_def =
                                   AmplitudeDefinition::peak_to_peak,
                               std::string condition_label = "") {
    std::vector<VisibilityReport> reports;
    for (const FringeDataset& data : datasets)
        for (DetectorPair pairing : {DetectorPair::a1b1, DetectorPair::a2b1})
            reports.push_back(analyze_fringe(data, pairing, method, amplitude_def));
    if (reports.size() != 4)
        throw CoverageError("summarize: expected two datasets (four analyzed fringes), got " +
                            std::to_string(reports.size()));
    std::sort(reports.begin(), reports.end(), [](const auto& a, const auto& b) {
        return a.theta_a_deg != b.theta_a_deg ? a.theta_a_deg < b.theta_a_deg
                                              : a.pairing < b.pairing;
    });
    for (std::size_t i = 1; i < reports.size(); ++i)
        if (reports[i].theta_a_deg == reports[i - 1].theta_a_deg &&
            reports[i].pairing == reports[i - 1].pairing)
            throw CoverageError("summarize: duplicate Alice setting in inputs");

    FringeSummary summary;
    summary.condition_label = std::move(condition_label);
    summary.method = method;
    for (const VisibilityReport& r : reports) {
        summary.normalization_factor += r.normalization_factor / 4.0;
        summary.avg_amplitude += r.average_amplitude / 4.0;
        summary.avg_visibility += r.visibility / 4.0;
        summary.avg_sigma_v += r.sigma_v / 4.0;
    }
    return summary;
}

/// How bootstrap resamples are reduced to a visibility.
enum class BootstrapMode {
    fixed_extrema, ///< resample counts at the observed extremum points only
    re_extract     ///< resample the whole fringe and re-locate the extrema
};

/// Standard deviation of the visibility over Poisson resamples of a fringe,
/// treating each observed count as the mean of its point.
inline double bootstrap_sigma_v(const std::vector<double>& counts, int n_resamples,
                                std::uint64_t seed,
                                BootstrapMode mode = BootstrapMode::re_extract) {
    if (counts.size() < 2) throw ValidationError("bootstrap_sigma_v: need at least two points");
    if (n_resamples < 2) throw ValidationError("bootstrap_sigma_v: need at least two resamples");
    const auto [lo_it, hi_it] = std::minmax_element(counts.begin(), counts.end());
    const double mean_max = *hi_it, mean_min = *lo_it;

    std::vector<double> vs;
    vs.reserve(static_cast<std::size_t>(n_resamples));
    std::vector<double> resampled(counts.size());
    for (int b = 0; b < n_resamples; ++b) {
        Stream stream(seed, static_cast<std::uint64_t>(b));
        double c_max, c_min;
        if (mode == BootstrapMode::fixed_extrema) {
            c_max = static_cast<double>(stream.next_poisson(mean_max));
            c_min = static_cast<double>(stream.next_poisson(mean_min));
        } else {
            for (std::size_t i = 0; i < counts.size(); ++i)
                resampled[i] = static_cast<double>(stream.next_poisson(counts[i]));
            const auto [lo, hi] = std::minmax_element(resampled.begin(), resampled.end());
            c_max = *hi;
            c_min = *lo;
        }
        if (c_max + c_min <= 0.0) continue; // degenerate resample carries no visibility
        vs.push_back((c_max - c_min) / (c_max + c_min));
    }
    if (vs.size() < 2)
        throw UndefinedValueError("bootstrap_sigma_v: too few usable resamples");
    double mean = 0.0;
    for (double v : vs) mean += v;
    mean /= static_cast<double>(vs.size());
    double ss = 0.0;
    for (double v : vs) ss += (v - mean) * (v - mean);
    return std::sqrt(ss / static_cast<double>(vs.size() - 1));
}

} // namespace pmfsim
