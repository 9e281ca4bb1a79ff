#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "pmfsim/errors.hpp"
#include "pmfsim/linalg.hpp"
#include "pmfsim/polarization.hpp"
#include "pmfsim/rng.hpp"

namespace pmfsim {

namespace constants {
inline constexpr double vacuum_light_speed_m_s = 299792458.0;
inline constexpr double default_group_index = 1.467;
inline constexpr double default_delta_n = 5e-4;
} // namespace constants

/// Fiber birefringence, either as an index difference between the slow and
/// fast axes or as a polarization-mode delay coefficient (ps per sqrt(km)).
struct Birefringence {
    enum class Kind { index_difference, delay_coefficient };

    Kind kind = Kind::index_difference;
    double value = constants::default_delta_n;

    static Birefringence delta_n(double dn) {
        return {Kind::index_difference, dn};
    }
    static Birefringence delay_coefficient_ps_sqrt_km(double alpha) {
        return {Kind::delay_coefficient, alpha};
    }
};

/// One polarization-maintaining fiber segment. Lengths in meters,
/// wavelength in meters, axis angle in radians from horizontal.
struct PmfSegment {
    double length_m = 1.0;
    double wavelength_m = 810e-9;
    Birefringence birefringence{};
    double axis_angle_rad = 0.0;
    double group_index = constants::default_group_index;
};

inline void validate(const PmfSegment& seg) {
    if (!(seg.length_m > 0.0) || !std::isfinite(seg.length_m))
        throw ValidationError("PmfSegment: length must be positive");
    if (!(seg.wavelength_m > 0.0) || !std::isfinite(seg.wavelength_m))
        throw ValidationError("PmfSegment: wavelength must be positive");
    if (!(seg.birefringence.value > 0.0) || !std::isfinite(seg.birefringence.value))
        throw ValidationError("PmfSegment: birefringence must be positive");
    if (!(seg.group_index >= 1.0) || !std::isfinite(seg.group_index))
        throw ValidationError("PmfSegment: group index must be >= 1");
    if (!std::isfinite(seg.axis_angle_rad))
        throw ValidationError("PmfSegment: axis angle must be finite");
}

/// Signal speed inside the fiber: c / group index.
inline double fiber_light_speed_m_s(const PmfSegment& seg) {
    return constants::vacuum_light_speed_m_s / seg.group_index;
}

/// Differential group delay between the polarization modes, in seconds.
inline double group_delay_s(const PmfSegment& seg) {
    validate(seg);
    if (seg.birefringence.kind == Birefringence::Kind::index_difference)
        return seg.birefringence.value * seg.length_m / fiber_light_speed_m_s(seg);
    // delay coefficient: ps per sqrt(km)
    return seg.birefringence.value * 1e-12 * std::sqrt(seg.length_m / 1000.0);
}

/// Relative phase accumulated between the modes: (2 pi c_fiber / lambda) * delay.
inline double phase_difference_rad(const PmfSegment& seg) {
    return 2.0 * M_PI * fiber_light_speed_m_s(seg) / seg.wavelength_m * group_delay_s(seg);
}

/// Index difference that would reproduce this segment's group delay.
inline double effective_delta_n(const PmfSegment& seg) {
    return fiber_light_speed_m_s(seg) * group_delay_s(seg) / seg.length_m;
}

/// Jones operator of the segment: a linear retarder with the segment's
/// phase difference, fast axis at the segment's axis angle.
inline JonesMatrix pmf_jones(const PmfSegment& seg) {
    return linear_retarder(phase_difference_rad(seg), seg.axis_angle_rad);
}

/// Two nominally equal PMF segments spliced with their fast axes crossed,
/// so the second undoes the first's mode delay. The pair is described in
/// its own frame (first fiber's fast axis horizontal):
///   second segment length  = length + delta_length
///   second segment axis    = pi/2 + misalignment
/// and `frame_offset_rad` rotates the whole assembly relative to the lab.
struct CrossAlignedPair {
    PmfSegment base{};              ///< first segment; its axis_angle_rad is ignored here
    double delta_length_m = 0.0;    ///< length mismatch of the second segment
    double misalignment_rad = 0.0;  ///< splice angle error away from 90 degrees
    double frame_offset_rad = 0.0;  ///< orientation of the pair in the lab frame
};

inline void validate(const CrossAlignedPair& pair) {
    validate(pair.base);
    if (!std::isfinite(pair.delta_length_m) ||
        std::abs(pair.delta_length_m) >= pair.base.length_m)
        throw ValidationError("CrossAlignedPair: |delta_length| must be smaller than the length");
    if (!std::isfinite(pair.misalignment_rad))
        throw ValidationError("CrossAlignedPair: misalignment must be finite");
    if (!std::isfinite(pair.frame_offset_rad))
        throw ValidationError("CrossAlignedPair: frame offset must be finite");
}

namespace detail {
inline PmfSegment pair_first(const CrossAlignedPair& pair) {
    PmfSegment seg = pair.base;
    seg.axis_angle_rad = 0.0;
    return seg;
}
inline PmfSegment pair_second(const CrossAlignedPair& pair) {
    PmfSegment seg = pair.base;
    seg.length_m += pair.delta_length_m;
    seg.axis_angle_rad = M_PI / 2.0 + pair.misalignment_rad;
    return seg;
}
inline JonesMatrix to_lab_frame(const CrossAlignedPair& pair, const JonesMatrix& m) {
    if (pair.frame_offset_rad == 0.0) return m;
    return rotation(pair.frame_offset_rad) * m * rotation(-pair.frame_offset_rad);
}
} // namespace detail

/// Composite operator built literally: second-segment retarder times
/// first-segment retarder, conjugated into the lab frame.
inline JonesMatrix cross_pair_exact(const CrossAlignedPair& pair) {
    validate(pair);
    const JonesMatrix m =
        pmf_jones(detail::pair_second(pair)) * pmf_jones(detail::pair_first(pair));
    return detail::to_lab_frame(pair, m);
}

/// Same operator written out in closed form. With phases
/// phi1 = phase(length + delta_length), phi2 = phase(length) and
/// c = cos(misalignment), s = sin(misalignment):
///   [ s^2 + e^{i phi1} c^2          e^{i phi2} sc (1 - e^{i phi1}) ]
///   [ sc (1 - e^{i phi1})           e^{i phi2} (c^2 + e^{i phi1} s^2) ]
inline JonesMatrix cross_pair_closed_form(const CrossAlignedPair& pair) {
    validate(pair);
    const double phi1 = phase_difference_rad(detail::pair_second(pair));
    const double phi2 = phase_difference_rad(detail::pair_first(pair));
    const Complex p = std::polar(1.0, phi1);
    const Complex g = std::polar(1.0, phi2);
    const double c = std::cos(pair.misalignment_rad);
    const double s = std::sin(pair.misalignment_rad);
    JonesMatrix m;
    m(0, 0) = s * s + p * c * c;
    m(0, 1) = g * s * c * (1.0 - p);
    m(1, 0) = s * c * (1.0 - p);
    m(1, 1) = g * (c * c + p * s * s);
    return detail::to_lab_frame(pair, m);
}

/// First-order expansion around perfect compensation, valid only for small
/// misalignment and small residual phase r*delta_length when the common
/// phase r*length is a multiple of 2 pi. Not unitary; diagnostics only.
inline JonesMatrix cross_pair_approx(const CrossAlignedPair& pair) {
    validate(pair);
    const PmfSegment first = detail::pair_first(pair);
    const double r = phase_difference_rad(first) / first.length_m; // rad per meter
    const double rdl = r * pair.delta_length_m;
    const double th = pair.misalignment_rad;
    const Complex i_rdl(0.0, rdl);
    JonesMatrix m;
    m(0, 0) = 1.0 + i_rdl * (1.0 - th * th);
    m(0, 1) = -i_rdl * th;
    m(1, 0) = -i_rdl * th;
    m(1, 1) = 1.0 + i_rdl * th * th;
    return detail::to_lab_frame(pair, m);
}

/// Slow polarization scrambling of a non-PM fiber: each step composes a
/// small random rotation and retarder onto the previous channel operator.
/// Step draws are keyed by (seed, step/correlation_steps), so a trajectory
/// is reproducible from the seed alone and consecutive steps within a
/// correlation block push in the same direction.
struct SmfDriftModel {
    double step_scale_rad = 0.0;  ///< std dev of per-step rotation/retardance
    int correlation_steps = 1;    ///< steps sharing one draw (>= 1)
    std::uint64_t seed = 0;
};

inline void validate(const SmfDriftModel& model) {
    if (!(model.step_scale_rad >= 0.0) || !std::isfinite(model.step_scale_rad))
        throw ValidationError("SmfDriftModel: step scale must be >= 0");
    if (model.correlation_steps < 1)
        throw ValidationError("SmfDriftModel: correlation_steps must be >= 1");
}

inline JonesMatrix smf_channel_step(const SmfDriftModel& model, const JonesMatrix& previous,
                                    std::uint64_t step_index) {
    validate(model);
    if (model.step_scale_rad == 0.0) return previous;
    Stream stream(model.seed, step_index / static_cast<std::uint64_t>(model.correlation_steps));
    const double rot = model.step_scale_rad * stream.next_normal();
    const double ret = model.step_scale_rad * stream.next_normal();
    const double axis = M_PI * (stream.next_double() - 0.5);
    return rotation(rot) * linear_retarder(ret, axis) * previous;
}

/// Residual phase instability of a PM fiber channel: the channel is the
/// base operator with an extra diag(1, e^{i xi}) phase, xi ~ N(0, sigma),
/// drawn fresh per step.
struct PmfPhaseJitter {
    double sigma_rad = 0.0;
    std::uint64_t seed = 0;
};

inline void validate(const PmfPhaseJitter& model) {
    if (!(model.sigma_rad >= 0.0) || !std::isfinite(model.sigma_rad))
        throw ValidationError("PmfPhaseJitter: sigma must be >= 0");
}

inline JonesMatrix pmf_jitter_operator(const PmfPhaseJitter& model, std::uint64_t step_index) {
    validate(model);
    if (model.sigma_rad == 0.0) return JonesMatrix::Identity();
    Stream stream(model.seed, step_index);
    const double xi = model.sigma_rad * stream.next_normal();
    JonesMatrix m = JonesMatrix::Zero();
    m(0, 0) = 1.0;
    m(1, 1) = std::polar(1.0, xi);
    return m;
}

/// Channel instability during a measurement run: none, non-PM drift, or
/// PM phase jitter.
using DriftModel = std::variant<std::monostate, SmfDriftModel, PmfPhaseJitter>;

/// Reseeded copy so the two arms of a source never share a random stream.
inline DriftModel drift_for_arm(const DriftModel& drift, std::uint64_t arm_index) {
    DriftModel out = drift;
    if (auto* smf = std::get_if<SmfDriftModel>(&out))
        smf->seed = derive_seed(smf->seed, 0x517F5EEDull + arm_index);
    else if (auto* jit = std::get_if<PmfPhaseJitter>(&out))
        jit->seed = derive_seed(jit->seed, 0x517F5EEDull + arm_index);
    return out;
}

/// Channel operator for one step of a run. `previous` must be the value
/// returned for the preceding step (or `base` at step 0).
inline JonesMatrix drift_step(const DriftModel& drift, const JonesMatrix& base,
                              const JonesMatrix& previous, std::uint64_t step_index) {
    if (std::holds_alternative<std::monostate>(drift)) return base;
    if (const auto* smf = std::get_if<SmfDriftModel>(&drift))
        return smf_channel_step(*smf, previous, step_index);
    return pmf_jitter_operator(std::get<PmfPhaseJitter>(drift), step_index) * base;
}

} // namespace pmfsim
