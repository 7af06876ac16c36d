#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <cstdint>

#include "bsosim/drive_field.hpp"
#include "bsosim/errors.hpp"

namespace bsosim {

using complexd = std::complex<double>;
inline constexpr complexd I_UNIT{0.0, 1.0};

enum class Frame { Lab, Rotating };

// Complex amplitude vector of a 2- or 3-level atom at time t.
struct StateVector {
    Eigen::VectorXcd amplitudes;
    Frame frame = Frame::Lab;
    double t = 0.0;

    static StateVector ground(Frame fr = Frame::Lab, double t0 = 0.0, int levels = 2) {
        StateVector s;
        s.amplitudes = Eigen::VectorXcd::Zero(levels);
        s.amplitudes[0] = 1.0;
        s.frame = fr;
        s.t = t0;
        return s;
    }

    double norm() const { return amplitudes.norm(); }

    double population(int level) const { return std::norm(amplitudes[level]); }
};

// H = eps (sigma0 - sigma_z)/2 + g(t) sigma_x with eps = omega + detuning and
// g(t) = -g0(t) cos(omega t + phi). Basis order (|0>, |1>).
inline Eigen::Matrix2cd lab_hamiltonian(const DriveField& field, double t) {
    if (t < 0.0) throw Error("lab_hamiltonian: t must be >= 0");
    const double g = -field.g0(t) * std::cos(field.omega * t + field.phi);
    Eigen::Matrix2cd h;
    h << 0.0, g, g, field.omega + field.detuning;
    return h;
}

// Rotating frame tied to an explicit frame phase reference:
// Q = diag(1, e^{i(omega t + frame_phi)}). For frame_phi equal to the field
// phase this reduces to Htilde = alpha sigma+ + alpha* sigma- with
// alpha = -(g0/2)[e^{-i(2 omega t + 2 phi)} + 1].
inline Eigen::Matrix2cd rotating_hamiltonian_ref(const DriveField& field,
                                                 double frame_phi, double t) {
    const double g0 = field.g0(t);
    const double dphi = field.phi - frame_phi;
    complexd alpha;
    if (field.rwa) {
        alpha = -(g0 / 2.0) * std::exp(I_UNIT * dphi);
    } else {
        const double theta2 = 2.0 * field.omega * t + field.phi + frame_phi;
        alpha = -(g0 / 2.0) *
                (std::exp(I_UNIT * dphi) + std::exp(-I_UNIT * theta2));
    }
    Eigen::Matrix2cd h;
    h << 0.0, alpha, std::conj(alpha), field.detuning;
    return h;
}

inline Eigen::Matrix2cd rotating_hamiltonian(const DriveField& field, double t) {
    if (t < 0.0) throw Error("rotating_hamiltonian: t must be >= 0");
    return rotating_hamiltonian_ref(field, field.phi, t);
}

// Q transformation between frames at the state's current time.
inline StateVector to_rotating(const StateVector& s, const DriveField& field) {
    if (s.frame == Frame::Rotating) return s;
    StateVector out = s;
    out.amplitudes[1] *= std::exp(I_UNIT * (field.omega * s.t + field.phi));
    out.frame = Frame::Rotating;
    return out;
}

inline StateVector to_lab(const StateVector& s, const DriveField& field) {
    if (s.frame == Frame::Lab) return s;
    StateVector out = s;
    out.amplitudes[1] *= std::exp(-I_UNIT * (field.omega * s.t + field.phi));
    out.frame = Frame::Lab;
    return out;
}

inline double max_dt_for(const DriveField& field) {
    return 2.0 * M_PI / (40.0 * field.omega);
}

struct IntegrateOptions {
    // Halve dt until two successive refinements agree to this tolerance per
    // amplitude. Refinement keeps runs reproducible while still resolving the
    // 2w micromotion.
    double refine_tol = 1e-10;
    int max_halvings = 12;
    bool refine = true;
    // Frame phase reference for Rotating-frame evolution; NaN means use the
    // field's own phase (the Eq.-style convention).
    double frame_phi_ref = std::nan("");
};

struct IntegrationStats {
    double dt_used = 0.0;
    std::uint64_t steps = 0;
    double norm_drift = 0.0;
    int halvings = 0;
};

namespace detail {

// Classic fixed-step RK4 for psi' = -i H(t) psi on a 2-vector.
template <typename HamFn>
Eigen::Vector2cd rk4_propagate(const HamFn& ham, Eigen::Vector2cd y, double t0,
                               double t1, std::uint64_t steps) {
    const double dt = (t1 - t0) / static_cast<double>(steps);
    const complexd mi(0.0, -1.0);
    for (std::uint64_t k = 0; k < steps; ++k) {
        const double t = t0 + dt * static_cast<double>(k);
        const Eigen::Vector2cd k1 = mi * (ham(t) * y);
        const Eigen::Vector2cd k2 = mi * (ham(t + 0.5 * dt) * (y + 0.5 * dt * k1));
        const Eigen::Vector2cd k3 = mi * (ham(t + 0.5 * dt) * (y + 0.5 * dt * k2));
        const Eigen::Vector2cd k4 = mi * (ham(t + dt) * (y + dt * k3));
        y += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return y;
}

template <typename HamFn>
Eigen::Vector2cd rk4_refined(const HamFn& ham, const Eigen::Vector2cd& y0,
                             double t0, double t1, double dt_max,
                             const IntegrateOptions& opts,
                             IntegrationStats* stats) {
    std::uint64_t steps = static_cast<std::uint64_t>(std::ceil((t1 - t0) / dt_max));
    if (steps < 1) steps = 1;
    Eigen::Vector2cd y = rk4_propagate(ham, y0, t0, t1, steps);
    int halvings = 0;
    if (opts.refine) {
        for (; halvings < opts.max_halvings; ++halvings) {
            const Eigen::Vector2cd y2 = rk4_propagate(ham, y0, t0, t1, steps * 2);
            const double dev = (y2 - y).cwiseAbs().maxCoeff();
            y = y2;
            steps *= 2;
            if (dev <= opts.refine_tol) break;
        }
    }
    if (stats) {
        stats->dt_used = (t1 - t0) / static_cast<double>(steps);
        stats->steps = steps;
        stats->halvings = halvings;
    }
    return y;
}

} // namespace detail

// Propagate a 2-level state under the field in the state's frame with a
// fixed-step 4th-order integrator. No per-step renormalization; the norm
// drift is a diagnostic.
inline StateVector integrate_exact(const StateVector& state, const DriveField& field,
                                   double t0, double t1, double dt_max,
                                   const IntegrateOptions& opts = {},
                                   IntegrationStats* stats = nullptr) {
    field.validate();
    if (!(t1 > t0)) throw Error("integrate_exact: t1 must be > t0");
    if (dt_max > max_dt_for(field) * (1.0 + 1e-12))
        throw StepTooCoarse("integrate_exact: dt_max exceeds 2*pi/(40*omega)");
    if (state.amplitudes.size() != 2)
        throw Error("integrate_exact: expected a 2-level state");
    const double norm_dev = std::abs(state.norm() - 1.0);
    if (norm_dev > 1e-6)
        throw NotNormalized("integrate_exact: input norm deviates by more than 1e-6");
    if (field.rwa && state.frame == Frame::Lab)
        throw Error("integrate_exact: RWA mode is defined in the rotating frame");

    Eigen::Vector2cd y0(state.amplitudes[0], state.amplitudes[1]);
    Eigen::Vector2cd y;
    if (state.frame == Frame::Lab) {
        auto ham = [&field](double t) { return lab_hamiltonian(field, t); };
        y = detail::rk4_refined(ham, y0, t0, t1, dt_max, opts, stats);
    } else {
        const double ref = std::isnan(opts.frame_phi_ref) ? field.phi : opts.frame_phi_ref;
        auto ham = [&field, ref](double t) {
            return rotating_hamiltonian_ref(field, ref, t);
        };
        y = detail::rk4_refined(ham, y0, t0, t1, dt_max, opts, stats);
    }

    StateVector out = state;
    out.amplitudes.resize(2);
    out.amplitudes[0] = y[0];
    out.amplitudes[1] = y[1];
    out.t = t1;
    if (stats) stats->norm_drift = std::abs(out.norm() - 1.0);
    return out;
}

// Continue the evolution for another duration T with the drive phase shifted
// by pi. Imperfect reversal is a measurable output, not an error; the caller
// checks |<initial|final>|^2. In the rotating frame the original field phase
// stays the frame reference, so the shifted drive enters as a sign-flipped
// Hamiltonian plus the counter-rotating remainder.
inline StateVector time_reverse(const StateVector& state, const DriveField& field,
                                double T, double dt_max,
                                const IntegrateOptions& opts = {},
                                IntegrationStats* stats = nullptr) {
    DriveField rev = field.phase_shifted(M_PI);
    IntegrateOptions o = opts;
    if (state.frame == Frame::Rotating && std::isnan(o.frame_phi_ref))
        o.frame_phi_ref = field.phi;
    return integrate_exact(state, rev, state.t, state.t + T, dt_max, o, stats);
}

inline double fidelity(const StateVector& a, const StateVector& b) {
    return std::norm(a.amplitudes.dot(b.amplitudes));
}

} // namespace bsosim
