#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <map>
#include <tuple>
#include <optional>
#include <vector>

#include "bsosim/channel.hpp"
#include "bsosim/joint_state.hpp"
#include "bsosim/pulse.hpp"
#include "bsosim/rng.hpp"
#include "bsosim/two_level.hpp"

namespace bsosim {

// Geometry of the strong measurement pulse. The field switches on at the
// measurement time with a C2-smooth ramp lasting ramp_mult/g0M (an abrupt or
// exponential switch-on leaves an O(1/(g0 tau)) dent in the state's phase
// content); the window realizes a rotation of `area` plus extra_cycles full
// Rabi cycles over a duration of exactly m*pi/omega so that the phase-flip
// detection sequence reverses it.
struct MeasurementWindow {
    double ramp_mult = 8.0;
    int extra_cycles = 1;
    double refine_tol = 1e-10;
    // fine-tune g0 so the window realizes a true quarter-turn; the bare area
    // over-counts the realized rotation at second order in eta
    bool calibrate = true;
};

struct ProtocolConfig {
    DriveField alice_field;  // attenuated pulse field, phase phi (rwa flag set)
    DriveField bob_field;    // attenuated pulse field, phase chi
    double eta_measure = 0.05;
    long pairs = 1;
    std::uint64_t seed = 1;
    double phase_offset_run2 = M_PI / 2.0; // shift of the signal argument 2*phi
    MeasurementWindow window;
    bool operational_alice = false; // evolve the reversal leg instead of projecting
    bool measure_all = false;       // diagnostics: Bob draws on every pair

    void validate() const {
        if (pairs < 1) throw Error("ProtocolConfig: pairs must be >= 1");
        if (!(eta_measure > 0.0 && eta_measure < 0.25))
            throw Error("ProtocolConfig: eta_measure must be in (0, 0.25)");
        alice_field.validate();
        bob_field.validate();
    }
};

struct PairOutcome {
    bool alice_found_plus = false;
    std::optional<bool> bob_outcome;
};

struct MeasurementLedger {
    std::vector<PairOutcome> per_pair;
    long M = 0; // Alice successes
    long L = 0; // Bob successes among the M
    double zeta_raw = std::nan(""); // L/M - 1/2, undefined when M = 0

    double zeta_norm(double eta) const { return zeta_raw / eta; }
};

struct PhaseEstimate {
    double sin2phi_hat = 0.0;
    double cos2phi_hat = 0.0;
    double phi_mod_pi = 0.0;
    double stderr_phi = 0.0;
    double stderr_sin = 0.0;
    double stderr_cos = 0.0;
};

namespace detail {

// Strong measurement drive: smootherstep switch-on over tau_r, flat after.
struct WindowField {
    double g0M = 0.0;
    double omega = 1.0;
    double phi = 0.0;
    double t_on = 0.0;
    double tau_r = 0.0;

    double envelope(double t) const {
        const double u = (t - t_on) / tau_r;
        if (u <= 0.0) return 0.0;
        if (u >= 1.0) return 1.0;
        return u * u * u * (10.0 + u * (-15.0 + 6.0 * u));
    }

    double g0(double t) const { return g0M * envelope(t); }
};

// Window propagator over [t_start, t_start + duration], returned in the lab
// frame of the 0-2 transition. The integration runs in the frame rotating at
// omega, where the step error scales with g0 rather than with the splitting;
// the frame change at the window ends is exact.
inline Eigen::Matrix2cd window_propagator(const WindowField& f, double t_start,
                                          double duration, double refine_tol) {
    IntegrateOptions opts;
    opts.refine_tol = refine_tol;
    const double dt_max = 2.0 * M_PI / (40.0 * f.omega);
    auto ham = [&f](double t) {
        const double g0 = f.g0(t);
        const complexd alpha =
            -(g0 / 2.0) * (std::exp(I_UNIT * f.phi) +
                           std::exp(-I_UNIT * (2.0 * f.omega * t + f.phi)));
        Eigen::Matrix2cd h;
        h << 0.0, alpha, std::conj(alpha), 0.0;
        return h;
    };
    Eigen::Matrix2cd u_rot;
    for (int col = 0; col < 2; ++col) {
        Eigen::Vector2cd y0 = Eigen::Vector2cd::Zero();
        y0[col] = 1.0;
        const Eigen::Vector2cd y =
            rk4_refined(ham, y0, t_start, t_start + duration, dt_max, opts, nullptr);
        u_rot(0, col) = y[0];
        u_rot(1, col) = y[1];
    }
    // U_lab = Q^dag(t1) U_rot Q(t0), Q = diag(1, e^{i w t})
    const complexd q0 = std::exp(I_UNIT * f.omega * t_start);
    const complexd q1 = std::exp(-I_UNIT * f.omega * (t_start + duration));
    Eigen::Matrix2cd u = u_rot;
    u(1, 0) *= q1;
    u(1, 1) *= q1;
    u(0, 1) *= q0;
    u(1, 1) *= q0;
    return u;
}

// Solve the field amplitude so the window lasting exactly m*pi/omega realizes
// rotation area_total; the smootherstep ramp integrates to tau_r/2.
struct SolvedWindow {
    WindowField field;
    double duration = 0.0;
    int m = 0;
};

inline SolvedWindow solve_measurement_window(double omega, double phase,
                                             double eta_target, double t_start,
                                             const MeasurementWindow& w,
                                             double area_base = M_PI / 2.0) {
    const double area_total = area_base + 4.0 * M_PI * w.extra_cycles;
    const double g_nom = 4.0 * eta_target * omega;
    const double t_nom = (area_total + 0.5 * w.ramp_mult) / g_nom;
    int m = static_cast<int>(std::lround(t_nom * omega / M_PI));
    if (m < 1) m = 1;
    const double duration = static_cast<double>(m) * M_PI / omega;

    SolvedWindow sw;
    sw.m = m;
    sw.duration = duration;
    sw.field.omega = omega;
    sw.field.phi = phase;
    sw.field.t_on = t_start;
    sw.field.g0M = (area_total + 0.5 * w.ramp_mult) / duration;
    sw.field.tau_r = w.ramp_mult / sw.field.g0M;
    if (sw.field.tau_r > duration)
        throw Error("measurement window: ramp longer than the window; "
                    "reduce ramp_mult or add extra_cycles");

    if (w.calibrate) {
        // Fine-tune g0 so the window realizes a true quarter-turn: the
        // phase-averaged ground weight of the detected state must be 1/2.
        // Calibrated at canonical drive phases, so the result is reusable
        // across phi; windows are pure functions of their key and memoized.
        struct Key {
            double omega, eta, t_mod, ramp, tol;
            int extra, m;
            bool operator<(const Key& o) const {
                return std::tie(omega, eta, t_mod, ramp, tol, extra, m) <
                       std::tie(o.omega, o.eta, o.t_mod, o.ramp, o.tol, o.extra, o.m);
            }
        };
        static std::map<Key, double> cache;
        const Key key{omega, eta_target,
                      std::fmod(t_start, 2.0 * M_PI / omega), w.ramp_mult,
                      w.refine_tol, w.extra_cycles, m};
        const auto hit = cache.find(key);
        if (hit != cache.end()) {
            const double tau_r_area = sw.field.tau_r * sw.field.g0M;
            sw.field.g0M = hit->second;
            sw.field.tau_r = tau_r_area / sw.field.g0M;
            return sw;
        }
        const double tau_r_area = sw.field.tau_r * sw.field.g0M; // invariant
        auto imbalance = [&](double g) {
            double acc = 0.0;
            for (double dphi : {0.0, M_PI / 2.0}) {
                WindowField f = sw.field;
                f.g0M = g;
                f.tau_r = tau_r_area / g;
                f.phi = dphi;
                const Eigen::Matrix2cd u = window_propagator(
                    f, t_start, duration, std::max(w.refine_tol, 1e-10));
                acc += std::norm(u(0, 0));
            }
            return 0.5 * acc - 0.5;
        };
        double g0 = sw.field.g0M * 0.998, g1 = sw.field.g0M * 1.002;
        double f0 = imbalance(g0), f1 = imbalance(g1);
        for (int it = 0; it < 10 && std::abs(f1) > 1e-9; ++it) {
            if (f1 == f0) break;
            const double g2 = g1 - f1 * (g1 - g0) / (f1 - f0);
            g0 = g1;
            f0 = f1;
            g1 = g2;
            f1 = imbalance(g1);
        }
        sw.field.g0M = g1;
        sw.field.tau_r = tau_r_area / g1;
        cache.emplace(key, g1);
    }
    return sw;
}

} // namespace detail

// The measurement state realized by the operational sequence starting at
// t_start: shift the strong field's phase by pi, drive for m*pi/omega, detect
// the bare level. Detecting |0> measures sigma_z U^dag |0> (the pi/2 image of
// |0>, Eq.-7-like to first order); `detect_level` = 1 gives the |2>-detection
// analog used by the excited-state sequence.
inline StateVector measurement_state(double omega, double phase, double eta,
                                     double t_start, const MeasurementWindow& w,
                                     int detect_level = 0,
                                     double area_base = M_PI / 2.0) {
    const auto sw =
        detail::solve_measurement_window(omega, phase, eta, t_start, w, area_base);
    const Eigen::Matrix2cd u =
        detail::window_propagator(sw.field, t_start, sw.duration, w.refine_tol);
    Eigen::Vector2cd v = u.adjoint().col(detect_level);
    v[1] = -v[1]; // sigma_z
    StateVector s;
    s.amplitudes = Eigen::VectorXcd(2);
    s.amplitudes[0] = v[0];
    s.amplitudes[1] = v[1];
    s.frame = Frame::Lab;
    s.t = t_start;
    return s;
}

// |+>_A: measured by phase-flip + pi/2-window + |0> detection.
inline StateVector plus_state(double omega, double phase, double eta, double t_start,
                              const MeasurementWindow& w = {}) {
    return measurement_state(omega, phase, eta, t_start, w, 0, M_PI / 2.0);
}

// |->_A: the orthogonal state, realized by a 3pi/2 window.
inline StateVector minus_state(double omega, double phase, double eta, double t_start,
                               const MeasurementWindow& w = {}) {
    return measurement_state(omega, phase, eta, t_start, w, 0, 3.0 * M_PI / 2.0);
}

namespace detail {

struct CollapseResult {
    double p_plus = 0.0;
    JointState on_success;
    JointState on_failure;
};

// Project one side of the joint state onto a {0,2}-span single-atom state.
inline CollapseResult project_side(const JointState& state, Side side,
                                   const StateVector& target) {
    if (!in_measurement_span(state))
        throw WrongStateShape(
            "measurement: joint state has support outside span{|0>,|2>}^2");
    const complexd m0 = std::conj(target.amplitudes[0]);
    const complexd m2 = std::conj(target.amplitudes[1]);
    JointState succ, fail;
    succ.t = fail.t = state.t;
    double p = 0.0;
    if (side == Side::Alice) {
        for (int b = 0; b < 3; ++b) {
            const complexd x = m0 * state.at(0, b) + m2 * state.at(2, b);
            p += std::norm(x);
            succ.at(0, b) = target.amplitudes[0] * x;
            succ.at(2, b) = target.amplitudes[1] * x;
        }
    } else {
        for (int a = 0; a < 3; ++a) {
            const complexd x = m0 * state.at(a, 0) + m2 * state.at(a, 2);
            p += std::norm(x);
            succ.at(a, 0) = target.amplitudes[0] * x;
            succ.at(a, 2) = target.amplitudes[1] * x;
        }
    }
    fail.amplitudes = state.amplitudes - succ.amplitudes;
    CollapseResult res;
    res.p_plus = p;
    if (p > 1e-300) succ.amplitudes /= std::sqrt(p);
    if (p < 1.0 - 1e-300) fail.amplitudes /= std::sqrt(std::max(1.0 - p, 0.0));
    res.on_success = succ;
    res.on_failure = fail;
    return res;
}

} // namespace detail

// Alice's strong-field measurement: project her atom onto |+>_A(t_start),
// draw the outcome with the Born probability, renormalize the pair state.
inline std::pair<bool, JointState> alice_measure_plus(const JointState& state,
                                                      const ProtocolConfig& config,
                                                      double t_start, Rng& rng) {
    const double omega = config.alice_field.omega;
    JointState now = free_evolve(state, omega, t_start);
    const StateVector plus = plus_state(omega, config.alice_field.phi,
                                        config.eta_measure, t_start, config.window);
    const auto c = detail::project_side(now, Side::Alice, plus);
    const bool found = rng.bernoulli(c.p_plus);
    return {found, found ? c.on_success : c.on_failure};
}

// The same measurement done the long way: evolve Alice's atom through the
// phase-flipped window with the joint state in tow, then detect bare |0>_A.
// Returns the outcome plus the post-detection pair state mapped back to
// t_start (window evolution undone on the surviving branch is not needed by
// callers; Bob's half is what matters).
inline std::pair<bool, JointState> alice_measure_operational(
    const JointState& state, const ProtocolConfig& config, double t_start, Rng& rng) {
    const double omega = config.alice_field.omega;
    JointState now = free_evolve(state, omega, t_start);
    if (!in_measurement_span(now))
        throw WrongStateShape("alice_measure_operational: support outside span");
    const auto sw = detail::solve_measurement_window(
        omega, config.alice_field.phi + M_PI, config.eta_measure, t_start,
        config.window);
    const Eigen::Matrix2cd u = detail::window_propagator(
        sw.field, t_start, sw.duration, config.window.refine_tol);
    // apply the window unitary to Alice's {0,2} slots, Bob's |2> phases free-run
    JointState evolved = free_evolve(now, omega, t_start + sw.duration);
    for (int b = 0; b < 3; ++b) {
        // undo the free |2>_A phase already applied, the window propagator
        // contains the full 0-2 dynamics
        const complexd a0 = now.at(0, b);
        const complexd a2 = now.at(2, b);
        const complexd f = (b == 2)
                               ? std::exp(-I_UNIT * omega * sw.duration)
                               : complexd(1.0);
        evolved.at(0, b) = (u(0, 0) * a0 + u(0, 1) * a2) * f;
        evolved.at(2, b) = (u(1, 0) * a0 + u(1, 1) * a2) * f;
    }
    double p0 = 0.0;
    for (int b = 0; b < 3; ++b) p0 += std::norm(evolved.at(0, b));
    const bool found = rng.bernoulli(p0);
    JointState collapsed;
    collapsed.t = evolved.t;
    if (found) {
        for (int b = 0; b < 3; ++b) collapsed.at(0, b) = evolved.at(0, b);
        collapsed.amplitudes /= std::sqrt(p0);
    } else {
        collapsed.amplitudes = evolved.amplitudes;
        for (int b = 0; b < 3; ++b) collapsed.at(0, b) = 0.0;
        collapsed.amplitudes /= std::sqrt(std::max(1.0 - p0, 1e-300));
    }
    return {found, collapsed};
}

// Bob's post-selected measurement: his sequence ends in observing the atom in
// the excited level, so the recorded outcome is the |2>_B component of the
// conditional state. The probability is invariant under t_start.
inline bool bob_measure(const JointState& collapsed, const ProtocolConfig& config,
                        double t_start, Rng& rng) {
    if (!in_measurement_span(collapsed))
        throw WrongStateShape("bob_measure: support outside span{|0>,|2>}^2");
    JointState now = t_start > collapsed.t
                         ? free_evolve(collapsed, config.bob_field.omega, t_start)
                         : collapsed;
    double p2 = 0.0;
    for (int a = 0; a < 3; ++a) p2 += std::norm(now.at(a, 2));
    return rng.bernoulli(p2);
}

// Born probabilities for one pair at the scheduled timing; all pairs share
// them, so the Monte Carlo loop reduces to independent Bernoulli draws.
struct ProtocolProbabilities {
    double p_alice = 0.0;
    double p_bob_given_plus = 0.0;
    double p_bob_given_fail = 0.0;
    double t_alice = 0.0;
    JointState collapsed_plus;
    JointState collapsed_fail;
};

inline ProtocolProbabilities protocol_probabilities(const ProtocolConfig& config,
                                                    double t_pulse_alice,
                                                    double t_pulse_bob,
                                                    double t_alice) {
    JointState s = make_singlet();
    s = apply_pi_pulse_12(s, Side::Alice, config.alice_field, t_pulse_alice);
    s = apply_pi_pulse_12(s, Side::Bob, config.bob_field, t_pulse_bob);
    s = free_evolve(s, config.alice_field.omega, t_alice);

    ProtocolProbabilities out;
    out.t_alice = t_alice;
    const StateVector plus = plus_state(config.alice_field.omega,
                                        config.alice_field.phi, config.eta_measure,
                                        t_alice, config.window);
    const auto c = detail::project_side(s, Side::Alice, plus);
    out.p_alice = c.p_plus;
    out.collapsed_plus = c.on_success;
    out.collapsed_fail = c.on_failure;
    for (int a = 0; a < 3; ++a) {
        out.p_bob_given_plus += std::norm(c.on_success.at(a, 2));
        out.p_bob_given_fail += std::norm(c.on_failure.at(a, 2));
    }
    return out;
}

// Alice's measurement is triggered at drive quadrature, omega t = pi/2
// (mod pi); with the |2>-detection convention Bob's post-selected success
// probability is then (1/2)[1 + 2 eta sin(2 phi)] to first order.
inline double quadrature_time_at_or_after(double t_min, double omega) {
    const double step = M_PI / omega;
    const double base = (M_PI / 2.0) / omega;
    double k = std::ceil((t_min - base) / step);
    if (k < 0) k = 0;
    return base + k * step;
}

// Full protocol over `pairs` entangled pairs with classical coordination on
// the channel: pi pulses, completion notices both ways, Alice's measurement,
// her index list, Bob's post-selected measurements.
inline MeasurementLedger run_protocol(const ProtocolConfig& config, Channel& channel) {
    config.validate();
    const double omega = config.alice_field.omega;
    const double period = 2.0 * M_PI / omega;

    // pulse completion times; any choice works, probabilities are invariant
    const double t_pulse = 2.0 * period;
    MessagePayload none;
    channel.advance_to(t_pulse);
    const auto tok_a = channel.send_reliable(
        {MessageKind::ExcitationComplete, Sender::Alice, 0, none});
    const auto tok_b = channel.send_reliable(
        {MessageKind::ExcitationComplete, Sender::Bob, 0, none});
    channel.advance_to(std::max(tok_a.delivery_time, tok_b.delivery_time));
    while (channel.try_recv().has_value()) {
    }

    const double t_alice = quadrature_time_at_or_after(channel.now(), omega);
    const auto probs = protocol_probabilities(config, t_pulse, t_pulse, t_alice);

    MeasurementLedger ledger;
    ledger.per_pair.resize(config.pairs);
    std::vector<std::int64_t> indices;
    for (long i = 0; i < config.pairs; ++i) {
        Rng alice_rng = make_stream(config.seed, "alice", static_cast<std::uint64_t>(i));
        const bool found = alice_rng.bernoulli(probs.p_alice);
        ledger.per_pair[i].alice_found_plus = found;
        if (found) {
            ++ledger.M;
            indices.push_back(i);
        }
    }

    channel.advance_to(t_alice);
    const auto tok_list = channel.send_reliable(
        {MessageKind::IndexList, Sender::Alice, 1, MessagePayload{indices}});
    channel.advance_to(tok_list.delivery_time);
    while (channel.try_recv().has_value()) {
    }

    for (long i = 0; i < config.pairs; ++i) {
        const bool listed = ledger.per_pair[i].alice_found_plus;
        if (!listed && !config.measure_all) continue;
        Rng bob_rng = make_stream(config.seed, "bob", static_cast<std::uint64_t>(i));
        const double p = listed ? probs.p_bob_given_plus : probs.p_bob_given_fail;
        const bool hit = bob_rng.bernoulli(p);
        ledger.per_pair[i].bob_outcome = hit;
        if (listed && hit) ++ledger.L;
    }
    if (ledger.M > 0)
        ledger.zeta_raw = static_cast<double>(ledger.L) / ledger.M - 0.5;
    return ledger;
}

// Two-run estimator: the first ledger was taken at Alice's phase phi, the
// second with the signal argument shifted by pi/2 (field phase advanced by
// pi/4), so zeta_sin/eta -> sin(2 phi) and zeta_cos/eta -> cos(2 phi).
inline PhaseEstimate estimate_phase(const MeasurementLedger& ledger_sin,
                                    const MeasurementLedger& ledger_cos, double eta) {
    if (ledger_sin.M < 1 || ledger_cos.M < 1)
        throw EmptyPostSelection("estimate_phase: a ledger has M = 0");
    PhaseEstimate e;
    e.sin2phi_hat = ledger_sin.zeta_raw / eta;
    e.cos2phi_hat = ledger_cos.zeta_raw / eta;
    const double ps = ledger_sin.zeta_raw + 0.5;
    const double pc = ledger_cos.zeta_raw + 0.5;
    e.stderr_sin = std::sqrt(std::max(ps * (1.0 - ps), 1e-12) / ledger_sin.M) / eta;
    e.stderr_cos = std::sqrt(std::max(pc * (1.0 - pc), 1e-12) / ledger_cos.M) / eta;
    double phi = 0.5 * std::atan2(e.sin2phi_hat, e.cos2phi_hat);
    if (phi < 0) phi += M_PI;
    if (phi >= M_PI) phi -= M_PI;
    e.phi_mod_pi = phi;
    const double r2 = e.sin2phi_hat * e.sin2phi_hat + e.cos2phi_hat * e.cos2phi_hat;
    if (r2 > 0) {
        const double ds = e.cos2phi_hat / (2.0 * r2);
        const double dc = -e.sin2phi_hat / (2.0 * r2);
        e.stderr_phi = std::sqrt(ds * ds * e.stderr_sin * e.stderr_sin +
                                 dc * dc * e.stderr_cos * e.stderr_cos);
    }
    return e;
}

} // namespace bsosim
