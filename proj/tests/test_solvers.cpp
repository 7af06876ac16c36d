#include <doctest.h>

#include <cmath>

#include "bsosim/bso_scan.hpp"
#include "bsosim/closed_form.hpp"
#include "bsosim/floquet.hpp"
#include "bsosim/pulse.hpp"
#include "bsosim/two_level.hpp"

using namespace bsosim;

namespace {

DriveField switched_field(double eta, double tau_mult, double phi = 0.0) {
    DriveField f;
    f.g0M = 4.0 * eta;
    f.omega = 1.0;
    f.phi = phi;
    f.envelope = Envelope::ExpSwitch;
    f.tau_sw = tau_mult / f.g0M;
    return f;
}

} // namespace

TEST_CASE("floquet: decoupled ladder at zero drive") {
    DriveField f;
    f.g0M = 0.0;
    f.omega = 1.0;
    const FloquetTrajectory traj = solve_floquet(f, 0.0, 9.0, 3);
    for (const auto& lad : traj.ladders) {
        CHECK(std::abs(lad.a(0) - 1.0) < 1e-12);
        for (int n = -3; n <= 3; ++n) {
            if (n != 0) CHECK(std::abs(lad.a(n)) < 1e-12);
            CHECK(std::abs(lad.b(n)) < 1e-12);
        }
    }
}

TEST_CASE("floquet: truncation convergence oracle at eta = 0.025") {
    DriveField f = switched_field(0.025, 10.0, 0.3);
    const double T = duration_for_area(f, M_PI / 2.0);
    const FloquetTrajectory t3 = solve_floquet(f, 0.0, T, 3);
    const FloquetTrajectory t6 = solve_floquet(f, 0.0, T, 6);
    const Eigen::Vector2cd c3 = t3.ladders.back().reconstruct(f, T);
    const Eigen::Vector2cd c6 = t6.ladders.back().reconstruct(f, T);
    CHECK((c3 - c6).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("floquet: reconstruction matches the exact integrator") {
    DriveField f = switched_field(0.025, 10.0, 0.3);
    const double T = duration_for_area(f, M_PI / 2.0);
    const FloquetTrajectory traj = solve_floquet(f, 0.0, T, 4);
    for (std::size_t i = 1; i < traj.times.size(); i += 8) {
        const StateVector ex = integrate_exact(StateVector::ground(Frame::Rotating), f,
                                               0.0, traj.times[i], max_dt_for(f));
        const StateVector fl = traj.state_at(i);
        CHECK((ex.amplitudes - fl.amplitudes).cwiseAbs().maxCoeff() < 1e-4);
    }
}

TEST_CASE("floquet: normalized reconstruction and truncation guard") {
    DriveField f = switched_field(0.05, 4.0, 0.0);
    const double T = duration_for_area(f, M_PI);
    const FloquetTrajectory traj = solve_floquet(f, 0.0, T, 3);
    for (std::size_t i = 0; i < traj.times.size(); i += 8)
        CHECK(std::abs(traj.state_at(i).norm() - 1.0) < 1e-6);

    FloquetOptions opts;
    opts.check_truncation = true;
    CHECK_THROWS_AS(solve_floquet(f, 0.0, T, 1, opts), TruncationTooSmall);
}

TEST_CASE("closed form: pulse-area zero limit") {
    DriveField f;
    f.g0M = 0.2;
    f.omega = 1.0;
    f.phi = 0.6;
    f.envelope = Envelope::Step;
    const double eta = f.eta();
    auto [c0, c1] = closed_form(f, 1e-12);
    CHECK(std::abs(c0 - 1.0) < 1e-6);
    // C1 -> i e^{-i phi} 2 eta Sigma*(0); population O(eta^2)
    const complexd sigma0 = 0.5 * I_UNIT * std::exp(-2.0 * I_UNIT * f.phi);
    const complexd expected =
        I_UNIT * std::exp(-I_UNIT * f.phi) * 2.0 * eta * std::conj(sigma0);
    CHECK(std::abs(c1 - expected) < 1e-6);
    CHECK(std::norm(c1) < 1.01 * eta * eta);
}

TEST_CASE("closed form: pi/2-pulse population reproduces the fringe signal") {
    const double eta = 0.02;
    DriveField f;
    f.g0M = 4.0 * eta;
    f.omega = 1.0;
    f.envelope = Envelope::Step;
    const double tau = M_PI / (2.0 * f.g0M);
    for (double phi : {0.0, 0.9, 2.2}) {
        auto [c0, c1] = closed_form(f.with_phase(phi), tau);
        const double expected = 0.5 * (1.0 + 2.0 * eta * std::sin(2.0 * tau + 2.0 * phi));
        CHECK(std::abs(std::norm(c1) - expected) < 2.0 * eta * eta);
    }
}

TEST_CASE("closed form: norm deviates from 1 by eta^2/2, within 5 eta^2") {
    DriveField f = switched_field(0.05, 10.0, 0.4);
    const double T = duration_for_area(f, M_PI);
    for (double t : {0.3 * T, 0.7 * T, T}) {
        const StateVector cf = closed_form_state(f, t);
        CHECK(std::abs(cf.norm() - 1.0) < 5.0 * f.eta() * f.eta());
    }
}

TEST_CASE("closed form: perturbative guard") {
    DriveField f;
    f.g0M = 1.2;
    f.omega = 1.0;
    CHECK_THROWS_AS(closed_form(f, 1.0), PerturbativeRegimeViolated);
}

// The first-order solution omits the secular quadratic-order phase that the
// full dynamics accumulates, so its amplitude error over a fixed-area pulse
// scales linearly in eta (measured coefficient ~0.45), not quadratically.
// The spec'd 5 eta^2 bound is unattainable for complex amplitudes; see the
// acceptance report. Here we pin the honest first-order scaling.
TEST_CASE("closed form vs exact: deviation is first order in eta") {
    double dev[2];
    int k = 0;
    for (double eta : {0.01, 0.02}) {
        DriveField f = switched_field(eta, 10.0, 0.7);
        const double T = duration_for_area(f, M_PI);
        double worst = 0.0;
        for (int i = 1; i <= 8; ++i) {
            const double t = T * i / 8.0;
            const StateVector ex = integrate_exact(StateVector::ground(Frame::Lab), f,
                                                   0.0, t, max_dt_for(f));
            const StateVector cf = closed_form_state(f, t);
            worst = std::max(worst,
                             (ex.amplitudes - cf.amplitudes).cwiseAbs().maxCoeff());
        }
        CHECK(worst < 0.6 * eta);
        CHECK(worst > 0.05 * eta); // genuinely first order, not second
        dev[k++] = worst;
    }
    const double ratio = dev[1] / dev[0];
    CHECK(ratio > 1.4);
    CHECK(ratio < 2.6);
}

TEST_CASE("three solvers agree on populations over a pi pulse") {
    const double eta = 0.02;
    DriveField f = switched_field(eta, 10.0, 0.7);
    const double T = duration_for_area(f, M_PI);
    const FloquetTrajectory traj = solve_floquet(f, 0.0, T, 4);
    for (std::size_t i = 4; i < traj.times.size(); i += 6) {
        const double t = traj.times[i];
        const StateVector ex = integrate_exact(StateVector::ground(Frame::Rotating), f,
                                               0.0, t, max_dt_for(f));
        const StateVector fl = traj.state_at(i);
        CHECK((ex.amplitudes - fl.amplitudes).cwiseAbs().maxCoeff() < 1e-4);
        const StateVector cf = closed_form_state(f, t);
        const StateVector exl = to_lab(ex, f);
        for (int lvl = 0; lvl < 2; ++lvl)
            CHECK(std::abs(exl.population(lvl) - cf.population(lvl)) <
                  30.0 * eta * eta);
    }
}

TEST_CASE("bso scan: fitted fringe amplitude is 2 eta and the offset is 1/2") {
    const double eta = 0.02;
    DriveField tmpl = switched_field(eta, 6.0);
    const PulseSpec pulse = default_scan_pulse(tmpl);
    std::vector<double> phases;
    for (int i = 0; i < 32; ++i) phases.push_back(M_PI * i / 32.0);
    const BsoScanResult res = bso_scan(tmpl, phases, pulse);
    CHECK(std::abs(res.fit_amplitude - 2.0 * eta) / (2.0 * eta) < 0.05);
    CHECK(std::abs(res.fit_offset - 0.5) < 1e-3);
}

TEST_CASE("bso scan: fringe phase tracks 2 w tau and a pi/2 scan offset flips it") {
    const double eta = 0.05;
    DriveField tmpl = switched_field(eta, 6.0);
    const PulseSpec pulse = default_scan_pulse(tmpl);
    std::vector<double> phases, shifted;
    for (int i = 0; i < 24; ++i) {
        phases.push_back(M_PI * i / 24.0);
        shifted.push_back(M_PI * i / 24.0 + M_PI / 2.0);
    }
    const BsoScanResult a = bso_scan(tmpl, phases, pulse);
    // P = B[1 + A sin(2 phi + psi)] with psi = 2 w tau (mod 2 pi)
    const double expected = std::fmod(2.0 * tmpl.omega * pulse.duration, 2.0 * M_PI);
    const double dpsi = std::remainder(a.fit_phase - expected, 2.0 * M_PI);
    CHECK(std::abs(dpsi) < 0.05);

    // scanning phi -> phi + pi/2 shifts the fringe by pi in the scan coordinate
    const BsoScanResult b = bso_scan(tmpl, shifted, pulse);
    std::vector<double> pops;
    for (const auto& p : b.points) pops.push_back(p.excited_population);
    const SinusoidFit local = fit_sinusoid(phases, pops, 2.0);
    const double flip = std::remainder(local.phase - a.fit_phase, 2.0 * M_PI);
    CHECK(std::abs(std::abs(flip) - M_PI) < 0.05);
}

TEST_CASE("bso scan: amplitude scales linearly with eta") {
    std::vector<double> phases;
    for (int i = 0; i < 16; ++i) phases.push_back(M_PI * i / 16.0);
    DriveField big = switched_field(0.04, 6.0);
    DriveField small = switched_field(0.0004, 6.0);
    const BsoScanResult rb = bso_scan(big, phases, default_scan_pulse(big));
    const BsoScanResult rs = bso_scan(small, phases, default_scan_pulse(small));
    CHECK(rb.fit_amplitude / rs.fit_amplitude == doctest::Approx(100.0).epsilon(0.05));
}

TEST_CASE("bso scan input validation") {
    DriveField tmpl = switched_field(0.02, 6.0);
    const PulseSpec pulse = default_scan_pulse(tmpl);
    CHECK_THROWS_AS(bso_scan(tmpl, {}, pulse), Error);
    PulseSpec bad = pulse;
    bad.area = M_PI;
    CHECK_THROWS_AS(bso_scan(tmpl, {0.0, 0.1, 0.2}, bad), Error);
}
