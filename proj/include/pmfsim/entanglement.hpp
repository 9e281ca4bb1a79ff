#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "pmfsim/errors.hpp"
#include "pmfsim/fiber.hpp"
#include "pmfsim/linalg.hpp"
#include "pmfsim/polarization.hpp"

namespace pmfsim {

enum class BellState { phi_plus, phi_minus, psi_plus, psi_minus };

/// Amplitudes over HH, HV, VH, VV.
inline StateVector bell_vector(BellState which) {
    const double a = 1.0 / std::sqrt(2.0);
    StateVector v = StateVector::Zero();
    switch (which) {
    case BellState::phi_plus:  v(0) = a; v(3) = a; break;
    case BellState::phi_minus: v(0) = a; v(3) = -a; break;
    case BellState::psi_plus:  v(1) = a; v(2) = a; break;
    case BellState::psi_minus: v(1) = a; v(2) = -a; break;
    }
    return v;
}

inline BipartiteState bell_state(BellState which) {
    return pure_state(bell_vector(which));
}

/// Adjustable birefringent phases inserted after each channel, one per arm:
/// diag(1, e^{i delta}) ahead of the analyzers.
struct CompensationSetting {
    double delta_a_rad = 0.0;
    double delta_b_rad = 0.0;
};

/// diag(1, e^{i delta}): an on-axis phase retarder.
inline JonesMatrix phase_retarder(double delta) {
    require_finite_angle(delta, "phase_retarder");
    JonesMatrix m = JonesMatrix::Zero();
    m(0, 0) = 1.0;
    m(1, 1) = std::polar(1.0, delta);
    return m;
}

/// Propagate a two-photon state through per-arm channels followed by the
/// compensation retarders: (C_a M_a (x) C_b M_b) rho (...)^dagger.
inline BipartiteState evolve(const BipartiteState& rho0, const JonesMatrix& channel_a,
                             const JonesMatrix& channel_b,
                             const CompensationSetting& comp = {}) {
    const JonesMatrix a = phase_retarder(comp.delta_a_rad) * channel_a;
    const JonesMatrix b = phase_retarder(comp.delta_b_rad) * channel_b;
    return pmfsim::apply(tensor(a, b), rho0);
}

struct CompensationResult {
    CompensationSetting setting{};
    double fidelity = 0.0;
};

namespace detail {

/// Fidelity to the launch state as a function of the two compensation
/// phases, with everything that does not depend on them precomputed.
/// For a pure launch state F = |<psi| C_a A (x) C_b B |psi>|^2; otherwise
/// the full density-matrix route is used.
class CompensationObjective {
public:
    CompensationObjective(const BipartiteState& rho0, const JonesMatrix& channel_a,
                          const JonesMatrix& channel_b)
        : a_(channel_a), b_(channel_b), rho_(rho0.rho), pure_(rho0.is_pure()) {
        if (pure_) {
            Eigen::SelfAdjointEigenSolver<TwoQubitOperator> es(rho_);
            psi_ = es.eigenvectors().col(3); // eigenvector of the largest eigenvalue
        }
    }

    double operator()(double delta_a, double delta_b) const {
        const Complex ea = std::polar(1.0, delta_a);
        const Complex eb = std::polar(1.0, delta_b);
        JonesMatrix ca = a_;
        ca.row(1) *= ea;
        JonesMatrix cb = b_;
        cb.row(1) *= eb;
        const TwoQubitOperator u = kron(ca, cb);
        if (pure_) {
            const Complex amp = psi_.dot(u * psi_);
            return std::min(std::norm(amp), 1.0);
        }
        const TwoQubitOperator evolved = u * rho_ * u.adjoint();
        return std::clamp((evolved * rho_).trace().real(), 0.0, 1.0);
    }

private:
    JonesMatrix a_, b_;
    TwoQubitOperator rho_;
    bool pure_;
    StateVector psi_;
};

/// Maximize a smooth unimodal function on [lo, hi] by golden-section search.
template <typename F>
double golden_section_max(const F& f, double lo, double hi, double x_tol) {
    constexpr double inv_phi = 0.6180339887498949;
    double a = lo, b = hi;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > x_tol) {
        if (fc > fd) {
            b = d; d = c; fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c; c = d; fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    return 0.5 * (a + b);
}

} // namespace detail

/// Which compensation phases the optimizer may move.
enum class CompensationSearch { both_arms, alice_only };

/// Best compensation phases for the given channels: per-phase coarse scan
/// (64 points over one period) plus golden-section refinement, alternating
/// between the phases until the fidelity stops improving. The scan includes
/// zero, so the result is never worse than no compensation. `alice_only`
/// pins delta_b at zero and searches delta_a alone.
inline CompensationResult optimize_compensation(const BipartiteState& rho0,
                                                const JonesMatrix& channel_a,
                                                const JonesMatrix& channel_b,
                                                CompensationSearch search =
                                                    CompensationSearch::both_arms) {
    require_density_matrix(rho0, "optimize_compensation");
    if (!is_unitary(channel_a) || !is_unitary(channel_b))
        throw NonUnitaryError("optimize_compensation: channels must be unitary");

    const detail::CompensationObjective objective(rho0, channel_a, channel_b);
    constexpr int scan_points = 64;
    constexpr double period = 2.0 * M_PI;
    constexpr double spacing = period / scan_points;
    constexpr double x_tol = 1e-10;
    const int coords = search == CompensationSearch::alice_only ? 1 : 2;

    double da = 0.0, db = 0.0;
    double best = objective(da, db);
    for (int round = 0; round < 64; ++round) {
        const double before = best;
        for (int coord = 0; coord < coords; ++coord) {
            auto slice = [&](double x) {
                return coord == 0 ? objective(x, db) : objective(da, x);
            };
            double scan_best_x = coord == 0 ? da : db;
            double scan_best = slice(scan_best_x);
            for (int k = 0; k < scan_points; ++k) {
                const double x = k * spacing;
                const double fx = slice(x);
                if (fx > scan_best) {
                    scan_best = fx;
                    scan_best_x = x;
                }
            }
            const double refined = detail::golden_section_max(
                slice, scan_best_x - spacing, scan_best_x + spacing, x_tol);
            if (slice(refined) >= scan_best) scan_best_x = refined;
            (coord == 0 ? da : db) = scan_best_x;
            best = slice(scan_best_x);
        }
        if (best - before < 1e-15) break;
    }

    auto wrap = [](double x) {
        double y = std::fmod(x, period);
        return y < 0.0 ? y + period : y;
    };
    return CompensationResult{{wrap(da), wrap(db)}, best};
}

/// One panel of a fidelity map: fidelity after optimal compensation on a
/// misalignment x frame-offset grid at a fixed length mismatch. Values are
/// stored row-major, misalignment index major.
struct FidelityGrid {
    double delta_length_m = 0.0;
    std::vector<double> misalignment_axis_rad;
    std::vector<double> frame_offset_axis_rad;
    std::vector<double> fidelity;                  ///< size = |theta axis| * |phi axis|
    std::vector<CompensationSetting> compensation; ///< same layout as fidelity

    std::size_t index(std::size_t i_theta, std::size_t i_phi) const {
        return i_theta * frame_offset_axis_rad.size() + i_phi;
    }
    double at(std::size_t i_theta, std::size_t i_phi) const {
        return fidelity[index(i_theta, i_phi)];
    }
};

/// Sweep request: both arms use the same segment geometry and see the same
/// misalignment/frame-offset/length-mismatch value per grid cell, with an
/// optional constant extra length mismatch on the second arm.
struct SweepRequest {
    PmfSegment base{};
    std::vector<double> delta_length_axis_m;
    std::vector<double> misalignment_axis_rad;
    std::vector<double> frame_offset_axis_rad;
    double arm_b_extra_delta_length_m = 0.0;
    BellState launch = BellState::psi_minus;
};

inline std::vector<FidelityGrid> sweep_fidelity(const SweepRequest& request) {
    validate(request.base);
    if (request.delta_length_axis_m.empty() || request.misalignment_axis_rad.empty() ||
        request.frame_offset_axis_rad.empty())
        throw ValidationError("sweep_fidelity: all three axes must be non-empty");

    const BipartiteState rho0 = bell_state(request.launch);
    std::vector<FidelityGrid> grids;
    grids.reserve(request.delta_length_axis_m.size());
    for (double dl : request.delta_length_axis_m) {
        FidelityGrid grid;
        grid.delta_length_m = dl;
        grid.misalignment_axis_rad = request.misalignment_axis_rad;
        grid.frame_offset_axis_rad = request.frame_offset_axis_rad;
        grid.fidelity.resize(grid.misalignment_axis_rad.size() *
                             grid.frame_offset_axis_rad.size());
        grid.compensation.resize(grid.fidelity.size());
        for (std::size_t it = 0; it < grid.misalignment_axis_rad.size(); ++it) {
            for (std::size_t ip = 0; ip < grid.frame_offset_axis_rad.size(); ++ip) {
                CrossAlignedPair arm_a{request.base, dl,
                                       grid.misalignment_axis_rad[it], 0.0};
                CrossAlignedPair arm_b{request.base,
                                       dl + request.arm_b_extra_delta_length_m,
                                       grid.misalignment_axis_rad[it],
                                       grid.frame_offset_axis_rad[ip]};
                const CompensationResult r = optimize_compensation(
                    rho0, cross_pair_exact(arm_a), cross_pair_exact(arm_b));
                grid.fidelity[grid.index(it, ip)] = r.fidelity;
                grid.compensation[grid.index(it, ip)] = r.setting;
            }
        }
        grids.push_back(std::move(grid));
    }
    return grids;
}

} // namespace pmfsim
