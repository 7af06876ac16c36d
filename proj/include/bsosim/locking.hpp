#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "bsosim/channel.hpp"
#include "bsosim/errors.hpp"
#include "bsosim/fit.hpp"
#include "bsosim/rng.hpp"

namespace bsosim {

enum class ArrayLayout { Uniform, Explicit };

// Atoms along the field direction; positions are fractions of the reference
// wavelength lambda_A. The local drive phase of a side scales with its own
// wavelength: phi_i = phi_global + 2 pi x_i (omega_side / omega_ref).
struct AtomArray {
    std::vector<double> positions; // strictly increasing, in [0, 1)
    double omega = 1.0;            // this side's oscillator frequency
    double omega_ref = 1.0;        // Alice's frequency (position unit)
    double phase_global = 0.0;

    std::size_t size() const { return positions.size(); }

    double local_phase(std::size_t i) const {
        return phase_global + 2.0 * M_PI * positions[i] * (omega / omega_ref);
    }
};

inline std::pair<AtomArray, AtomArray> build_arrays(
    int N, double omega_A, double omega_B, ArrayLayout layout = ArrayLayout::Uniform,
    const std::vector<double>& explicit_positions = {}, double phi_global = 0.0,
    double chi_global = 0.0) {
    if (N < 2) throw Error("build_arrays: N must be >= 2");
    std::vector<double> pos;
    if (layout == ArrayLayout::Uniform) {
        for (int i = 0; i < N; ++i) pos.push_back(static_cast<double>(i) / N);
    } else {
        pos = explicit_positions;
        if (static_cast<int>(pos.size()) != N)
            throw BadLayout("build_arrays: explicit positions must have length N");
        for (std::size_t i = 0; i < pos.size(); ++i) {
            if (pos[i] < 0.0 || pos[i] >= 1.0)
                throw BadLayout("build_arrays: positions must lie in [0, 1)");
            if (i > 0 && pos[i] <= pos[i - 1])
                throw BadLayout("build_arrays: positions must be strictly increasing");
        }
    }
    AtomArray alice{pos, omega_A, omega_A, phi_global};
    AtomArray bob{pos, omega_B, omega_A, chi_global};
    return {alice, bob};
}

struct PositionStat {
    double x = 0.0;
    double success_probability = 0.0;
    std::int64_t sample_count = 0;
};

struct LockProfile {
    std::vector<PositionStat> per_position;
    double slope_estimate = 0.0;    // d(success)/dx at the quadrature point
    double delta_omega_hat = 0.0;
    double stderr_delta = 0.0;
    bool aliased = false;
    bool exact_born = false;
    double lever = 1.0;           // beat-phase periods per unit position
    double peak_success = 0.0;    // best common-phase success (-> 1 on lock)
    double scan_phase = 0.0;      // quadrature phase the profile was taken at
};

struct LockScanOptions {
    bool exact_born = false;
    std::uint64_t seed = 1;
    // Whole drive periods Bob's measurement start is staggered by per unit
    // position. The accumulated beat phase across the array is then
    // 2 pi (stagger + 1) delta, which sets the detection lever arm.
    int stagger_periods = 349;
    std::uint64_t iteration = 0; // substream tag for the lock loop
};

namespace detail {

// First-order beat-phase model of Bob's time-reversed detection fringe: at
// measurement start phase sigma and per-position beat phase Lambda_i the
// success probability is cos^2((sigma - Lambda_i)/2). On frequency match the
// phases align and a common start phase reaches unit success.
inline double lock_beat_phase(const AtomArray& alice, const AtomArray& bob,
                              std::size_t i, int stagger_periods) {
    const double delta = (bob.omega - alice.omega) / alice.omega;
    const double x = bob.positions[i];
    const double spatial = bob.local_phase(i) - alice.local_phase(i);
    const double schedule = 2.0 * M_PI * delta * stagger_periods * x;
    return spatial + schedule;
}

inline double lock_success_probability(double scan_phase, double beat_phase) {
    return 0.5 * (1.0 + std::cos(scan_phase - beat_phase));
}

} // namespace detail

// Scan Bob's measurement-start phase over his drive period, locate the
// common phase of best mean success, then record the per-position success
// profile a quarter period off the peak, where the response to a phase
// mismatch is linear.
inline LockProfile run_lock_scan(const AtomArray& alice, const AtomArray& bob,
                                 long samples_per_atom,
                                 const std::vector<double>& time_scan,
                                 const LockScanOptions& opts = {}) {
    if (samples_per_atom < 1 && !opts.exact_born)
        throw Error("run_lock_scan: samples_per_atom must be >= 1");
    if (alice.size() != bob.size() || alice.size() < 2)
        throw Error("run_lock_scan: need matched arrays with N >= 2");
    const std::size_t n_pos = bob.size();

    std::vector<double> scan_phases;
    if (time_scan.empty()) {
        for (int k = 0; k < 16; ++k) scan_phases.push_back(2.0 * M_PI * k / 16.0);
    } else {
        for (double t : time_scan) scan_phases.push_back(wrap_2pi(bob.omega * t));
    }

    std::vector<double> beat(n_pos);
    for (std::size_t i = 0; i < n_pos; ++i)
        beat[i] = detail::lock_beat_phase(alice, bob, i, opts.stagger_periods);

    // fringe localization across the scan
    const long n_fringe =
        opts.exact_born ? 0 : std::max<long>(1, samples_per_atom / 2 / scan_phases.size());
    std::vector<double> xs, ys;
    for (std::size_t k = 0; k < scan_phases.size(); ++k) {
        double mean = 0.0;
        for (std::size_t i = 0; i < n_pos; ++i) {
            const double p = detail::lock_success_probability(scan_phases[k], beat[i]);
            if (opts.exact_born) {
                mean += p;
            } else {
                Rng rng = make_stream(opts.seed, "lock-fringe",
                                      (opts.iteration * scan_phases.size() + k) * n_pos + i);
                long hits = 0;
                for (long s = 0; s < n_fringe; ++s) hits += rng.bernoulli(p);
                mean += static_cast<double>(hits) / n_fringe;
            }
        }
        xs.push_back(scan_phases[k]);
        ys.push_back(mean / n_pos);
    }
    const SinusoidFit fringe = fit_sinusoid(xs, ys, 1.0);
    // mean success = B + R sin(sigma + psi); peak at sigma* = pi/2 - psi
    const double peak_phase = wrap_2pi(M_PI / 2.0 - fringe.phase);
    const double quad_phase = wrap_2pi(peak_phase + M_PI / 2.0);

    LockProfile prof;
    prof.exact_born = opts.exact_born;
    prof.lever = 1.0 + opts.stagger_periods;
    prof.scan_phase = quad_phase;
    prof.peak_success = fringe.offset + fringe.amp;

    const long n_prof = opts.exact_born
                            ? 0
                            : std::max<long>(1, samples_per_atom - n_fringe *
                                                    static_cast<long>(scan_phases.size()));
    for (std::size_t i = 0; i < n_pos; ++i) {
        const double p = detail::lock_success_probability(quad_phase, beat[i]);
        PositionStat st;
        st.x = bob.positions[i];
        if (opts.exact_born) {
            st.success_probability = p;
            st.sample_count = 0;
        } else {
            Rng rng = make_stream(opts.seed, "lock-profile", opts.iteration * n_pos + i);
            long hits = 0;
            for (long s = 0; s < n_prof; ++s) hits += rng.bernoulli(p);
            st.success_probability = static_cast<double>(hits) / n_prof;
            st.sample_count = n_prof;
        }
        prof.per_position.push_back(st);
    }
    return prof;
}

struct DetuningEstimate {
    double delta_omega_hat = 0.0;
    double stderr_delta = 0.0;
    double slope_success = 0.0;
    bool aliased = false;
};

// Invert the quadrature profile for the frequency mismatch: arcsine the
// success probabilities back to phases and fit a straight line in position.
// Positive means Bob runs fast.
inline DetuningEstimate detect_detuning(const LockProfile& profile,
                                        const AtomArray& alice, const AtomArray& bob) {
    const auto& pts = profile.per_position;
    if (pts.size() < 2)
        throw DegenerateProfile("detect_detuning: need at least 2 positions");
    if (bob.size() != alice.size())
        throw Error("detect_detuning: mismatched arrays");
    bool distinct = false;
    for (std::size_t i = 1; i < pts.size(); ++i)
        if (pts[i].x != pts[0].x) distinct = true;
    if (!distinct) throw DegenerateProfile("detect_detuning: positions coincide");

    std::vector<double> x, z, sig;
    bool saturated = false;
    for (const auto& st : pts) {
        double u = 2.0 * st.success_probability - 1.0;
        if (std::abs(u) > 0.999) {
            saturated = true;
            u = std::copysign(0.999, u);
        }
        const double sp = profile.exact_born
                              ? 1e-9
                              : std::sqrt(std::max(
                                    st.success_probability * (1.0 - st.success_probability),
                                    1e-12) /
                                    std::max<std::int64_t>(st.sample_count, 1));
        x.push_back(st.x);
        z.push_back(std::asin(u));
        sig.push_back(2.0 * sp / std::sqrt(std::max(1.0 - u * u, 1e-6)));
    }
    const LineFit lf = fit_line(x, z, sig);

    DetuningEstimate est;
    const double span = x.back() - x.front();
    est.slope_success = 0.5 * lf.slope;
    est.delta_omega_hat = lf.slope / (2.0 * M_PI * profile.lever) * alice.omega;
    est.stderr_delta = lf.slope_err / (2.0 * M_PI * profile.lever) * alice.omega;
    // beyond the Nyquist range the arcsine profile folds: the line fit leaves
    // order-one residuals, the extremes saturate, or the span exceeds pi
    double rss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = z[i] - lf.intercept - lf.slope * x[i];
        rss += r * r;
    }
    const double rms = std::sqrt(rss / x.size());
    est.aliased = saturated || rms > 0.1 || std::abs(lf.slope) * span > M_PI;
    return est;
}

struct LockIteration {
    int iteration = 0;
    double delta_omega_hat = 0.0;
    double stderr_delta = 0.0;
    double omega_b = 0.0;
    double delta_true = 0.0;
    bool aliased = false;
};

struct LockController {
    double gain = 0.5;
    double max_step = 1.0; // rad/time, clamp on each omega_B update
    std::vector<LockIteration> history;
    bool non_convergence = false;
};

struct LockLoopConfig {
    int n_atoms = 8;
    double omega_a = 1.0;
    long samples_per_atom = 10000;
    LockScanOptions scan;
    int scan_points = 16;
};

// Closed loop: scan -> detect -> adjust Bob's oscillator. The update is
// omega_B -= gain * delta_omega_hat, clamped to max_step. NonConvergence is
// flagged (not thrown) when the estimate fails to shrink over 5 consecutive
// iterations while sitting clearly above the estimator noise.
inline LockController lock_loop(LockController controller, double initial_delta,
                                int iterations, const LockLoopConfig& config,
                                Channel* channel = nullptr) {
    if (!(controller.gain > 0.0)) throw Error("lock_loop: gain must be > 0");
    double omega_b = config.omega_a * (1.0 + initial_delta);
    int stall = 0;
    double best = std::numeric_limits<double>::infinity();
    for (int it = 0; it < iterations; ++it) {
        auto [alice, bob] =
            build_arrays(config.n_atoms, config.omega_a, omega_b, ArrayLayout::Uniform);
        LockScanOptions scan = config.scan;
        scan.iteration = static_cast<std::uint64_t>(it);
        std::vector<double> times;
        for (int k = 0; k < config.scan_points; ++k)
            times.push_back(2.0 * M_PI * k / (config.scan_points * omega_b));
        const LockProfile prof =
            run_lock_scan(alice, bob, config.samples_per_atom, times, scan);
        const DetuningEstimate est = detect_detuning(prof, alice, bob);

        double step = controller.gain * est.delta_omega_hat;
        if (std::abs(step) > controller.max_step)
            step = std::copysign(controller.max_step, step);
        omega_b -= step;

        LockIteration row;
        row.iteration = it;
        row.delta_omega_hat = est.delta_omega_hat;
        row.stderr_delta = est.stderr_delta;
        row.omega_b = omega_b;
        row.delta_true = (omega_b - config.omega_a) / config.omega_a;
        row.aliased = est.aliased;
        controller.history.push_back(row);

        if (channel)
            channel->send_reliable({MessageKind::LockIterationSync, Sender::Bob, 0,
                                    MessagePayload{static_cast<std::int64_t>(it)}});

        // fails to shrink: no new minimum of |delta_hat| for 5 consecutive
        // iterations while sitting clearly above the estimator noise
        const double cur = std::abs(est.delta_omega_hat);
        if (cur < best) {
            best = cur;
            stall = 0;
        } else if (cur > 5.0 * est.stderr_delta) {
            ++stall;
        }
        if (stall >= 5) controller.non_convergence = true;
    }
    return controller;
}

} // namespace bsosim
