// Probe 2: reversal at the phase where the quadratic obstruction cancels; BSO
// pulse-config grid; closed-form deviation profile.
#include <cstdio>
#include <cmath>
#include <vector>

#include "bsosim/two_level.hpp"
#include "bsosim/closed_form.hpp"
#include "bsosim/pulse.hpp"
#include "bsosim/fit.hpp"

using namespace bsosim;

static double rev_deficit(double eta, double m_eff, double phi) {
    DriveField f;
    f.g0M = 4.0 * eta;
    f.omega = 1.0;
    f.phi = phi;
    f.envelope = Envelope::Step;
    const double T = m_eff * M_PI;
    const double dt = max_dt_for(f);
    StateVector s0 = StateVector::ground(Frame::Lab);
    StateVector fwd = integrate_exact(s0, f, 0.0, T, dt);
    StateVector back = time_reverse(fwd, f, T, dt);
    return 1.0 - fidelity(s0, back);
}

int main(int argc, char** argv) {
    const int which = argc > 1 ? std::atoi(argv[1]) : 0;

    if (which == 0) {
        const double eta = 0.05;
        const double phi = M_PI / 6.0;
        std::printf("== eta=0.05 phi=pi/6: on/off deficits for all m=1..20\n");
        double worst_on = 0, best_off = 1;
        for (int m = 1; m <= 20; ++m) {
            const double don = rev_deficit(eta, m, phi);
            const double doff = rev_deficit(eta, m + 0.5, phi);
            worst_on = std::max(worst_on, don);
            best_off = std::min(best_off, doff);
            std::printf("m=%2d  on=%.3e  off=%.3e\n", m, don, doff);
        }
        std::printf("worst_on=%.3e (10eta^4=%.3e)  best_off=%.3e (eta^2/2=%.3e)\n",
                    worst_on, 10 * std::pow(eta, 4), best_off, eta * eta / 2);
    }

    if (which == 1) {
        std::printf("== BSO grid: tau_mult x settle_frac -> amp rel err / offset dev\n");
        for (double eta : {0.02, 0.05}) {
            for (double tau_mult : {2.0, 3.0, 4.0, 6.0, 10.0}) {
                for (double settle : {0.01, 0.02, 0.04}) {
                    DriveField tmpl;
                    tmpl.g0M = 4.0 * eta;
                    tmpl.omega = 1.0;
                    tmpl.envelope = Envelope::ExpSwitch;
                    tmpl.tau_sw = tau_mult / tmpl.g0M;
                    const PulseSpec pulse = settled_pulse(tmpl, M_PI / 2.0, settle);
                    const double dt = max_dt_for(tmpl);
                    std::vector<double> phis, pops;
                    IntegrateOptions opts;
                    opts.refine_tol = 1e-9;
                    for (int i = 0; i < 32; ++i) {
                        const double phi = M_PI * i / 32.0;
                        DriveField f = tmpl.with_phase(phi);
                        StateVector s =
                            integrate_exact(StateVector::ground(Frame::Rotating), f,
                                            0.0, pulse.duration, dt, opts);
                        phis.push_back(phi);
                        pops.push_back(s.population(1));
                    }
                    const SinusoidFit fit = fit_sinusoid(phis, pops, 2.0);
                    const double A = fit.amp / fit.offset;
                    std::printf(
                        "eta=%.2f tau=%4.1f/g settle=%.2f dur=%7.1f  relA%+6.2f%%  B-0.5=%+.2e\n",
                        eta, tau_mult, settle, pulse.duration,
                        100 * (A / (2 * eta) - 1.0), fit.offset - 0.5);
                }
            }
        }
    }

    if (which == 2) {
        std::printf("== closed-form deviation profile, eta=0.02, pi pulse\n");
        for (double tau_mult : {10.0, 20.0}) {
            const double eta = 0.02;
            DriveField f;
            f.g0M = 4.0 * eta;
            f.omega = 1.0;
            f.phi = 0.7;
            f.envelope = Envelope::ExpSwitch;
            f.tau_sw = tau_mult / f.g0M;
            const double T = duration_for_area(f, M_PI);
            const double dt = max_dt_for(f);
            std::printf("tau_sw=%.0f/g0M  T=%.1f\n", tau_mult, T);
            for (int i = 1; i <= 16; ++i) {
                const double t = T * i / 16.0;
                StateVector ex = integrate_exact(StateVector::ground(Frame::Lab), f,
                                                 0.0, t, dt);
                StateVector cf = closed_form_state(f, t);
                const double dev =
                    (ex.amplitudes - cf.amplitudes).cwiseAbs().maxCoeff();
                std::printf("  t=%7.1f area=%6.3f g0(t)/g0M=%.3f dev=%.3e |dC0|=%.3e |dC1|=%.3e\n",
                            t, f.g0_integral(t), f.g0(t) / f.g0M, dev,
                            std::abs(ex.amplitudes[0] - cf.amplitudes[0]),
                            std::abs(ex.amplitudes[1] - cf.amplitudes[1]));
            }
        }
        std::printf("== same but Step envelope (boundary terms expected O(eta))\n");
        {
            const double eta = 0.02;
            DriveField f;
            f.g0M = 4.0 * eta;
            f.omega = 1.0;
            f.phi = 0.7;
            f.envelope = Envelope::Step;
            const double T = M_PI / f.g0M;
            const double dt = max_dt_for(f);
            double worst = 0;
            for (int i = 1; i <= 16; ++i) {
                const double t = T * i / 16.0;
                StateVector ex = integrate_exact(StateVector::ground(Frame::Lab), f,
                                                 0.0, t, dt);
                StateVector cf = closed_form_state(f, t);
                worst = std::max(worst,
                                 (ex.amplitudes - cf.amplitudes).cwiseAbs().maxCoeff());
            }
            std::printf("  Step worst dev=%.3e (eta=%.3f, 2eta=%.3f)\n", worst, eta, 2 * eta);
        }
    }
    return 0;
}
