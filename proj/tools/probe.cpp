// Scratch numerics probe (not installed): reversal dichotomy scaling and BSO
// fringe margins.
#include <cstdio>
#include <cmath>

#include "bsosim/two_level.hpp"
#include "bsosim/closed_form.hpp"
#include "bsosim/floquet.hpp"
#include "bsosim/pulse.hpp"
#include "bsosim/fit.hpp"

using namespace bsosim;

static double reversal_fidelity(double eta, int m, double extra_half, double phi,
                                Frame frame) {
    DriveField f;
    f.g0M = 4.0 * eta;
    f.omega = 1.0;
    f.phi = phi;
    f.envelope = Envelope::Step;
    const double T = (static_cast<double>(m) + extra_half) * M_PI / f.omega;
    const double dt = max_dt_for(f);
    StateVector s0 = StateVector::ground(frame);
    IntegrateOptions opts;
    StateVector fwd = integrate_exact(s0, f, 0.0, T, dt, opts);
    StateVector back = time_reverse(fwd, f, T, dt, opts);
    return fidelity(s0, back);
}

int main() {
    std::printf("== reversal: fidelity deficit vs (eta, m), phi=0, Step, from |0>\n");
    for (double eta : {0.0125, 0.025, 0.05}) {
        for (int m : {1, 2, 3, 5, 8, 13, 20}) {
            const double fon = reversal_fidelity(eta, m, 0.0, 0.0, Frame::Lab);
            const double foff = reversal_fidelity(eta, m, 0.5, 0.0, Frame::Lab);
            std::printf("eta=%.4f m=%2d  1-F_on=%.3e   1-F_off=%.3e  (eta^4=%.2e eta^2/2=%.2e)\n",
                        eta, m, 1.0 - fon, 1.0 - foff, std::pow(eta, 4), eta * eta / 2);
        }
    }
    std::printf("\n== reversal phi dependence (eta=0.05, m=5)\n");
    for (double phi : {0.0, 0.3, 0.5236, 0.7854, 1.0472, 1.5708}) {
        const double fon = reversal_fidelity(0.05, 5, 0.0, phi, Frame::Lab);
        std::printf("phi=%.4f  1-F_on=%.3e\n", phi, 1.0 - fon);
    }
    std::printf("\n== reversal RWA variant (eta=0.05): arbitrary T\n");
    for (double Tfrac : {0.37, 1.234, 2.0}) {
        DriveField f;
        f.g0M = 0.2;
        f.omega = 1.0;
        f.rwa = true;
        const double T = Tfrac * M_PI;
        const double dt = max_dt_for(f);
        StateVector s0 = StateVector::ground(Frame::Rotating);
        StateVector fwd = integrate_exact(s0, f, 0.0, T, dt);
        StateVector back = time_reverse(fwd, f, T, dt);
        std::printf("T=%.3f*pi  1-F=%.3e\n", Tfrac, 1.0 - fidelity(s0, back));
    }

    std::printf("\n== BSO fringe (ExpSwitch tau_sw=10/g0M, settle 1%%): fit vs 2eta\n");
    for (double eta : {0.005, 0.01, 0.02, 0.05}) {
        DriveField tmpl;
        tmpl.g0M = 4.0 * eta;
        tmpl.omega = 1.0;
        tmpl.envelope = Envelope::ExpSwitch;
        tmpl.tau_sw = 10.0 / tmpl.g0M;
        const PulseSpec pulse = settled_pulse(tmpl, M_PI / 2.0, 1e-2);
        const double dt = max_dt_for(tmpl);
        std::vector<double> phis, pops;
        IntegrateOptions opts;
        opts.refine_tol = 1e-9;
        for (int i = 0; i < 32; ++i) {
            const double phi = M_PI * i / 32.0;
            DriveField f = tmpl.with_phase(phi);
            StateVector s = integrate_exact(StateVector::ground(Frame::Rotating), f,
                                            0.0, pulse.duration, dt, opts);
            phis.push_back(phi);
            pops.push_back(s.population(1));
        }
        const SinusoidFit fit = fit_sinusoid(phis, pops, 2.0);
        const double A = fit.amp / fit.offset;
        std::printf("eta=%.3f dur=%8.1f  A=%.5f (2eta=%.5f, rel err %+.2f%%)  B=%.6f (dev %efrom 0.5)\n",
                    eta, pulse.duration, A, 2 * eta, 100 * (A / (2 * eta) - 1.0),
                    fit.offset, fit.offset - 0.5);
    }

    std::printf("\n== three-solver agreement over a pi pulse, eta=0.02 (tau_sw=10/g0M)\n");
    {
        const double eta = 0.02;
        DriveField f;
        f.g0M = 4.0 * eta;
        f.omega = 1.0;
        f.phi = 0.7;
        f.envelope = Envelope::ExpSwitch;
        f.tau_sw = 10.0 / f.g0M;
        const double T = duration_for_area(f, M_PI);
        const double dt = max_dt_for(f);
        double worst_cf = 0.0, worst_fl = 0.0;
        FloquetTrajectory traj = solve_floquet(f, 1e-9, T, 4);
        for (std::size_t i = 1; i < traj.times.size(); ++i) {
            const double t = traj.times[i];
            StateVector ex = integrate_exact(StateVector::ground(Frame::Rotating), f,
                                             1e-9, t, dt);
            StateVector exl = to_lab(ex, f);
            StateVector cf = closed_form_state(f, t);
            const double dev_cf =
                (exl.amplitudes - cf.amplitudes).cwiseAbs().maxCoeff();
            StateVector fl = traj.state_at(i);
            const double dev_fl =
                (ex.amplitudes - fl.amplitudes).cwiseAbs().maxCoeff();
            worst_cf = std::max(worst_cf, dev_cf);
            worst_fl = std::max(worst_fl, dev_fl);
        }
        std::printf("max |exact-closed| = %.3e, max |exact-floquet| = %.3e, 5eta^2 = %.3e\n",
                    worst_cf, worst_fl, 5 * eta * eta);
    }
    return 0;
}
