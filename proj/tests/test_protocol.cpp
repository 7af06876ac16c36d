#include <doctest.h>

#include <cmath>

#include "bsosim/channel.hpp"
#include "bsosim/joint_state.hpp"
#include "bsosim/protocol.hpp"

using namespace bsosim;

namespace {

DriveField weak(double omega, double phase) {
    DriveField f;
    f.omega = omega;
    f.phi = phase;
    f.g0M = 0.04 * omega;
    f.envelope = Envelope::Step;
    f.rwa = true;
    return f;
}

ProtocolConfig make_config(double phi, double chi, double eta, long pairs,
                           std::uint64_t seed = 7) {
    ProtocolConfig c;
    c.alice_field = weak(1.0, phi);
    c.bob_field = weak(1.0, chi);
    c.eta_measure = eta;
    c.pairs = pairs;
    c.seed = seed;
    return c;
}

// printed first-order forms, used only as oracles
StateVector printed_plus(double omega, double phi, double eta, double t) {
    const complexd sigma =
        0.5 * I_UNIT * std::exp(-I_UNIT * (2.0 * omega * t + 2.0 * phi));
    StateVector s;
    s.amplitudes = Eigen::VectorXcd(2);
    s.amplitudes[0] = (1.0 - 2.0 * eta * sigma) / std::sqrt(2.0);
    s.amplitudes[1] = I_UNIT * std::exp(-I_UNIT * (omega * t + phi)) *
                      (1.0 + 2.0 * eta * std::conj(sigma)) / std::sqrt(2.0);
    s.frame = Frame::Lab;
    s.t = t;
    return s;
}

StateVector printed_minus(double omega, double phi, double eta, double t) {
    const complexd sigma =
        0.5 * I_UNIT * std::exp(-I_UNIT * (2.0 * omega * t + 2.0 * phi));
    StateVector s;
    s.amplitudes = Eigen::VectorXcd(2);
    s.amplitudes[0] = (1.0 + 2.0 * eta * sigma) / std::sqrt(2.0);
    s.amplitudes[1] = -I_UNIT * std::exp(-I_UNIT * (omega * t + phi)) *
                      (1.0 - 2.0 * eta * std::conj(sigma)) / std::sqrt(2.0);
    s.frame = Frame::Lab;
    s.t = t;
    return s;
}

double binom_sigma(double p, long n) { return std::sqrt(p * (1.0 - p) / n); }

} // namespace

TEST_CASE("singlet preparation") {
    const JointState s = make_singlet();
    CHECK(std::abs(s.at(0, 1) - 1.0 / std::sqrt(2.0)) < 1e-15);
    CHECK(std::abs(s.at(1, 0) + 1.0 / std::sqrt(2.0)) < 1e-15);
    CHECK(std::abs(s.norm() - 1.0) < 1e-15);
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
            if (!((a == 0 && b == 1) || (a == 1 && b == 0)))
                CHECK(std::abs(s.at(a, b)) == 0.0);
    CHECK(s.alice_population(0) == doctest::Approx(0.5));
    CHECK(s.alice_population(1) == doctest::Approx(0.5));
    CHECK(s.bob_population(0) == doctest::Approx(0.5));
    CHECK(s.bob_population(1) == doctest::Approx(0.5));
}

TEST_CASE("pi pulses produce the two-branch phase state") {
    const double omega = 1.0, phi = 0.8, chi = 0.25;
    const double tc = 5.0;
    JointState s = make_singlet();
    s = apply_pi_pulse_12(s, Side::Alice, weak(omega, phi), tc);
    s = apply_pi_pulse_12(s, Side::Bob, weak(omega, chi), tc);
    const complexd want02 = std::exp(-I_UNIT * (omega * tc + chi)) / std::sqrt(2.0);
    const complexd want20 = -std::exp(-I_UNIT * (omega * tc + phi)) / std::sqrt(2.0);
    CHECK(std::abs(s.at(0, 2) - want02) < 1e-12);
    CHECK(std::abs(s.at(2, 0) - want20) < 1e-12);
    CHECK(std::abs(s.norm() - 1.0) < 1e-12);
    CHECK(in_measurement_span(s));

    // the branch phases keep tracking t under free evolution
    const JointState later = free_evolve(s, omega, tc + 3.7);
    const complexd want02_later =
        std::exp(-I_UNIT * (omega * (tc + 3.7) + chi)) / std::sqrt(2.0);
    CHECK(std::abs(later.at(0, 2) - want02_later) < 1e-12);
}

TEST_CASE("double pi pulse returns the population with an overall phase") {
    const double omega = 1.0;
    JointState s = make_singlet();
    s = apply_pi_pulse_12(s, Side::Alice, weak(omega, 0.3), 2.0);
    s = apply_pi_pulse_12(s, Side::Alice, weak(omega, 0.3), 4.0);
    CHECK(s.alice_population(1) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(s.alice_population(2) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("equal phases leave only the singlet minus sign between branches") {
    const double omega = 1.0, phase = 0.6, tc = 3.0;
    JointState s = make_singlet();
    s = apply_pi_pulse_12(s, Side::Alice, weak(omega, phase), tc);
    s = apply_pi_pulse_12(s, Side::Bob, weak(omega, phase), tc);
    CHECK(std::abs(s.at(0, 2) + s.at(2, 0)) < 1e-12);
}

TEST_CASE("pi pulse requires the attenuated flag") {
    DriveField f = weak(1.0, 0.0);
    f.rwa = false;
    CHECK_THROWS_AS(apply_pi_pulse_12(make_singlet(), Side::Alice, f, 1.0),
                    RwaFlagMissing);
}

TEST_CASE("plus/minus states: normalized, orthogonal, near the printed forms") {
    const double eta = 0.05, omega = 1.0, phi = 0.45;
    const double t = quadrature_time_at_or_after(40.0, omega);
    MeasurementWindow w;
    const StateVector plus = plus_state(omega, phi, eta, t, w);
    const StateVector minus = minus_state(omega, phi, eta, t, w);
    CHECK(std::abs(plus.norm() - 1.0) < 1e-9);
    CHECK(std::abs(minus.norm() - 1.0) < 1e-9);
    // orthogonal at first order; the residual measures ~5 eta^2
    CHECK(std::norm(plus.amplitudes.dot(minus.amplitudes)) < 8.0 * eta * eta);

    const StateVector op = printed_plus(omega, phi, eta, t);
    const double deficit =
        1.0 - std::norm(plus.amplitudes.dot(op.amplitudes)) / op.amplitudes.squaredNorm();
    CHECK(std::abs(deficit) < 5.0 * eta * eta);

    const StateVector om = printed_minus(omega, phi, eta, t);
    const double deficit_m =
        1.0 -
        std::norm(minus.amplitudes.dot(om.amplitudes)) / om.amplitudes.squaredNorm();
    CHECK(std::abs(deficit_m) < 5.0 * eta * eta);
}

TEST_CASE("alice measurement: Jozsa limit carries no phase information") {
    const double eta = 1e-3;
    const double t_alice = quadrature_time_at_or_after(30.0, 1.0);
    Eigen::Vector3cd bob[2];
    int k = 0;
    for (double phi : {0.2, 1.4}) {
        const ProtocolConfig c = make_config(phi, 0.1, eta, 1);
        const auto probs = protocol_probabilities(c, 2.0, 2.0, t_alice);
        CHECK(std::abs(probs.p_alice - 0.5) < 1e-5);
        // the collapse is a product state; extract Bob's factor by projecting
        // Alice onto her measured state again
        const StateVector plus = plus_state(1.0, phi, eta, t_alice, c.window);
        Eigen::Vector3cd b = Eigen::Vector3cd::Zero();
        for (int bb = 0; bb < 3; ++bb)
            b[bb] = std::conj(plus.amplitudes[0]) * probs.collapsed_plus.at(0, bb) +
                    std::conj(plus.amplitudes[1]) * probs.collapsed_plus.at(2, bb);
        bob[k++] = b / b.norm();
    }
    // Bob's conditional state is phi-independent in the limit
    const double overlap = std::norm(bob[0].dot(bob[1]));
    CHECK(overlap > 1.0 - 1e-4);
}

TEST_CASE("alice measurement: wrong state shape is rejected") {
    const ProtocolConfig c = make_config(0.1, 0.0, 0.05, 1);
    Rng rng(1);
    CHECK_THROWS_AS(alice_measure_plus(make_singlet(), c, 10.0, rng), WrongStateShape);
}

TEST_CASE("bob measurement statistics follow (1/2)[1 + 2 eta sin(2 phi)]") {
    const double eta = 0.05;
    const double t_alice = quadrature_time_at_or_after(30.0, 1.0);
    for (double phi : {0.0, M_PI / 4.0}) {
        const ProtocolConfig c = make_config(phi, 0.35, eta, 1);
        const auto probs = protocol_probabilities(c, 2.0, 2.0, t_alice);
        const double expected = 0.5 * (1.0 + 2.0 * eta * std::sin(2.0 * phi));
        CHECK(std::abs(probs.p_bob_given_plus - expected) < 3.0 * eta * eta);
    }
}

TEST_CASE("bob measurement: Monte Carlo matches the Born probability at 3 sigma") {
    const double eta = 0.05;
    const ProtocolConfig c = make_config(M_PI / 4.0, 0.0, eta, 1);
    const double t_alice = quadrature_time_at_or_after(30.0, 1.0);
    const auto probs = protocol_probabilities(c, 2.0, 2.0, t_alice);
    const long n = 100000;
    long hits = 0;
    for (long i = 0; i < n; ++i) {
        Rng rng = make_stream(11, "bob-mc", i);
        hits += bob_measure(probs.collapsed_plus, c, t_alice + 1.0, rng);
    }
    const double freq = static_cast<double>(hits) / n;
    CHECK(std::abs(freq - probs.p_bob_given_plus) <
          3.0 * binom_sigma(probs.p_bob_given_plus, n));
}

TEST_CASE("bob measurement probability is invariant under t_start") {
    const double eta = 0.05;
    const ProtocolConfig c = make_config(0.7, 0.2, eta, 1);
    const double t_alice = quadrature_time_at_or_after(30.0, 1.0);
    const auto probs = protocol_probabilities(c, 2.0, 2.0, t_alice);
    double p[2];
    int k = 0;
    for (double dt : {0.5, 7.3}) {
        const JointState later = free_evolve(probs.collapsed_plus, 1.0, t_alice + dt);
        double p2 = 0.0;
        for (int a = 0; a < 3; ++a) p2 += std::norm(later.at(a, 2));
        p[k++] = p2;
    }
    CHECK(std::abs(p[0] - p[1]) < 1e-12);
}

TEST_CASE("operational and projective Alice measurements agree") {
    const double eta = 1.0 / 16.0;
    const ProtocolConfig c = make_config(0.9, 0.15, eta, 1);
    const double t_alice = quadrature_time_at_or_after(30.0, 1.0);

    JointState s = make_singlet();
    s = apply_pi_pulse_12(s, Side::Alice, c.alice_field, 2.0);
    s = apply_pi_pulse_12(s, Side::Bob, c.bob_field, 2.0);

    Rng r1(5), r2(5);
    const auto [found_p, col_p] = alice_measure_plus(s, c, t_alice, r1);
    const auto [found_o, col_o] = alice_measure_operational(s, c, t_alice, r2);
    CHECK(found_p == found_o);

    double p2_p = 0.0, p2_o = 0.0;
    for (int a = 0; a < 3; ++a) {
        p2_p += std::norm(col_p.at(a, 2));
        p2_o += std::norm(col_o.at(a, 2));
    }
    CHECK(std::abs(p2_p - p2_o) < 1e-8);
}

TEST_CASE("run_protocol: zeta converges to eta sin(2 phi)") {
    const double eta = 0.05, phi = M_PI / 8.0;
    ProtocolConfig c = make_config(phi, 0.0, eta, 200000, 21);
    Channel channel;
    const MeasurementLedger led = run_protocol(c, channel);
    CHECK(led.M > 0);
    const double se = 0.5 / std::sqrt(static_cast<double>(led.M)) / eta;
    CHECK(std::abs(led.zeta_norm(eta) - std::sin(2.0 * phi)) < 3.0 * se + 0.02);
}

TEST_CASE("run_protocol: seeded reruns give identical ledgers") {
    ProtocolConfig c = make_config(0.4, 0.1, 0.05, 100, 99);
    Channel ch1, ch2;
    const MeasurementLedger a = run_protocol(c, ch1);
    const MeasurementLedger b = run_protocol(c, ch2);
    REQUIRE(a.per_pair.size() == b.per_pair.size());
    CHECK(a.M == b.M);
    CHECK(a.L == b.L);
    for (std::size_t i = 0; i < a.per_pair.size(); ++i) {
        CHECK(a.per_pair[i].alice_found_plus == b.per_pair[i].alice_found_plus);
        CHECK(a.per_pair[i].bob_outcome == b.per_pair[i].bob_outcome);
    }
}

TEST_CASE("run_protocol: eta -> 0 removes the phase information") {
    ProtocolConfig c = make_config(0.3, 0.0, 1e-3, 100000, 5);
    Channel channel;
    const MeasurementLedger led = run_protocol(c, channel);
    const double se = 0.5 / std::sqrt(static_cast<double>(led.M));
    CHECK(std::abs(led.zeta_raw) < 3.0 * se + 2e-3);
}

TEST_CASE("estimate_phase: exact quadrature inputs") {
    MeasurementLedger ls, lc;
    ls.M = lc.M = 1000;
    const double eta = 0.05;
    SUBCASE("sin=0, cos=1 -> phi = 0") {
        ls.zeta_raw = 0.0;
        lc.zeta_raw = eta;
        const PhaseEstimate e = estimate_phase(ls, lc, eta);
        CHECK(e.phi_mod_pi == doctest::Approx(0.0));
    }
    SUBCASE("sin=1, cos=0 -> phi = pi/4") {
        ls.zeta_raw = eta;
        lc.zeta_raw = 0.0;
        const PhaseEstimate e = estimate_phase(ls, lc, eta);
        CHECK(e.phi_mod_pi == doctest::Approx(M_PI / 4.0));
    }
    SUBCASE("empty post-selection") {
        ls.M = 0;
        CHECK_THROWS_AS(estimate_phase(ls, lc, eta), EmptyPostSelection);
    }
}

TEST_CASE("estimate_phase: result is in [0, pi) and matches atan2") {
    MeasurementLedger ls, lc;
    ls.M = lc.M = 5000;
    const double eta = 0.05;
    ls.zeta_raw = -0.3 * eta;
    lc.zeta_raw = -0.8 * eta;
    const PhaseEstimate e = estimate_phase(ls, lc, eta);
    CHECK(e.phi_mod_pi >= 0.0);
    CHECK(e.phi_mod_pi < M_PI);
    const double raw = 0.5 * std::atan2(e.sin2phi_hat, e.cos2phi_hat);
    CHECK(std::abs(std::remainder(e.phi_mod_pi - raw, M_PI)) < 1e-12);
}

TEST_CASE("two-run recovery lands within its propagated error") {
    const double eta = 0.05, phi_true = 0.3;
    ProtocolConfig c1 = make_config(phi_true, 0.0, eta, 50000, 31);
    ProtocolConfig c2 = make_config(phi_true + M_PI / 4.0, 0.0, eta, 50000, 32);
    Channel ch;
    const MeasurementLedger lsin = run_protocol(c1, ch);
    const MeasurementLedger lcos = run_protocol(c2, ch);
    const PhaseEstimate e = estimate_phase(lsin, lcos, eta);
    const double err = std::abs(std::remainder(e.phi_mod_pi - phi_true, M_PI));
    CHECK(err < 4.0 * e.stderr_phi + 0.02);
}

TEST_CASE("estimator consistency: phi and phi + pi give identical statistics") {
    const double eta = 0.05;
    const double t_alice = quadrature_time_at_or_after(30.0, 1.0);
    const ProtocolConfig a = make_config(0.35, 0.0, eta, 1);
    const ProtocolConfig b = make_config(0.35 + M_PI, 0.0, eta, 1);
    const auto pa = protocol_probabilities(a, 2.0, 2.0, t_alice);
    const auto pb = protocol_probabilities(b, 2.0, 2.0, t_alice);
    CHECK(std::abs(pa.p_alice - pb.p_alice) < 1e-9);
    CHECK(std::abs(pa.p_bob_given_plus - pb.p_bob_given_plus) < 1e-9);
}

TEST_CASE("stderr shrinks as M^{-1/2}") {
    const double eta = 0.05;
    double prev = 0.0;
    int k = 0;
    for (long pairs : {2000L, 20000L, 200000L}) {
        ProtocolConfig c1 = make_config(0.3, 0.0, eta, pairs, 41);
        ProtocolConfig c2 = make_config(0.3 + M_PI / 4.0, 0.0, eta, pairs, 42);
        Channel ch;
        const PhaseEstimate e =
            estimate_phase(run_protocol(c1, ch), run_protocol(c2, ch), eta);
        if (k > 0) {
            const double ratio = prev / e.stderr_sin;
            CHECK(ratio == doctest::Approx(std::sqrt(10.0)).epsilon(0.2));
        }
        prev = e.stderr_sin;
        ++k;
    }
}

TEST_CASE("no-signaling: Bob's unconditional statistics are phi-independent") {
    const double eta = 0.05;
    const double t_alice = quadrature_time_at_or_after(30.0, 1.0);
    double unconditional[2];
    int k = 0;
    for (double phi : {0.0, 1.1}) {
        const ProtocolConfig c = make_config(phi, 0.3, eta, 1);
        const auto p = protocol_probabilities(c, 2.0, 2.0, t_alice);
        unconditional[k++] =
            p.p_alice * p.p_bob_given_plus + (1.0 - p.p_alice) * p.p_bob_given_fail;
    }
    CHECK(std::abs(unconditional[0] - unconditional[1]) < 1e-6);
}

TEST_CASE("basis-change identity at equal phases, printed forms") {
    const double eta = 0.05, omega = 1.0, phase = 0.5, tc = 4.0;
    JointState s = make_singlet();
    s = apply_pi_pulse_12(s, Side::Alice, weak(omega, phase), tc);
    s = apply_pi_pulse_12(s, Side::Bob, weak(omega, phase), tc);
    const double t = quadrature_time_at_or_after(tc, omega);
    const JointState now = free_evolve(s, omega, t);

    const StateVector pA = printed_plus(omega, phase, eta, t);
    const StateVector mA = printed_minus(omega, phase, eta, t);
    Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(9);
    auto put = [&](const StateVector& x, const StateVector& y, double sign) {
        for (int a : {0, 2})
            for (int b : {0, 2}) {
                const complexd xa = (a == 0) ? x.amplitudes[0] : x.amplitudes[1];
                const complexd yb = (b == 0) ? y.amplitudes[0] : y.amplitudes[1];
                rhs[3 * a + b] += sign * xa * yb / std::sqrt(2.0);
            }
    };
    put(pA, mA, 1.0);
    put(mA, pA, -1.0);
    const complexd ov = rhs.dot(now.amplitudes);
    const double fid = std::norm(ov) / rhs.squaredNorm();
    CHECK(1.0 - fid < 5.0 * eta * eta);
}
