// Probe 3: duration-calibrated BSO scan; closed-form modulus deviation.
#include <cstdio>
#include <cmath>
#include <vector>

#include "bsosim/two_level.hpp"
#include "bsosim/closed_form.hpp"
#include "bsosim/pulse.hpp"
#include "bsosim/fit.hpp"

using namespace bsosim;

static double pop1_at(const DriveField& tmpl, double phi, double dur) {
    DriveField f = tmpl.with_phase(phi);
    IntegrateOptions opts;
    opts.refine_tol = 1e-9;
    StateVector s = integrate_exact(StateVector::ground(Frame::Rotating), f, 0.0,
                                    dur, max_dt_for(f), opts);
    return s.population(1);
}

// phi-averaged excited population: fringe cancels between phi and phi+pi/2.
static double mean_pop(const DriveField& tmpl, double dur) {
    return 0.5 * (pop1_at(tmpl, 0.1, dur) + pop1_at(tmpl, 0.1 + M_PI / 2, dur));
}

int main() {
    std::printf("== calibrated BSO scan\n");
    for (double eta : {0.005, 0.01, 0.02, 0.05}) {
        DriveField tmpl;
        tmpl.g0M = 4.0 * eta;
        tmpl.omega = 1.0;
        tmpl.envelope = Envelope::ExpSwitch;
        tmpl.tau_sw = 6.0 / tmpl.g0M;
        PulseSpec pulse = settled_pulse(tmpl, M_PI / 2.0, 0.02);
        // secant iterations nulling mean pop - 1/2 wrt duration
        double d0 = pulse.duration * (1.0 - 0.02), d1 = pulse.duration * (1.0 + 0.02);
        double f0 = mean_pop(tmpl, d0) - 0.5, f1 = mean_pop(tmpl, d1) - 0.5;
        for (int it = 0; it < 8 && std::abs(f1) > 1e-7; ++it) {
            const double d2 = d1 - f1 * (d1 - d0) / (f1 - f0);
            d0 = d1; f0 = f1;
            d1 = d2; f1 = mean_pop(tmpl, d1) - 0.5;
        }
        const double dur = d1;
        std::vector<double> phis, pops;
        for (int i = 0; i < 32; ++i) {
            const double phi = M_PI * i / 32.0;
            phis.push_back(phi);
            pops.push_back(pop1_at(tmpl, phi, dur));
        }
        const SinusoidFit fit = fit_sinusoid(phis, pops, 2.0);
        const double A = fit.amp / fit.offset;
        std::printf("eta=%.3f dur=%9.2f (nominal %9.2f)  relA%+6.2f%%  B-0.5=%+.2e\n",
                    eta, dur, pulse.duration, 100 * (A / (2 * eta) - 1.0),
                    fit.offset - 0.5);
    }

    std::printf("\n== closed form |amplitude| deviation over pi pulse (tau_sw=10/g0M)\n");
    for (double eta : {0.01, 0.02, 0.05}) {
        DriveField f;
        f.g0M = 4.0 * eta;
        f.omega = 1.0;
        f.phi = 0.7;
        f.envelope = Envelope::ExpSwitch;
        f.tau_sw = 10.0 / f.g0M;
        const double T = duration_for_area(f, M_PI);
        const double dt = max_dt_for(f);
        double worst_mod = 0.0, worst_cplx = 0.0;
        for (int i = 1; i <= 24; ++i) {
            const double t = T * i / 24.0;
            StateVector ex = integrate_exact(StateVector::ground(Frame::Lab), f, 0.0,
                                             t, dt);
            StateVector cf = closed_form_state(f, t);
            for (int k = 0; k < 2; ++k) {
                worst_mod = std::max(worst_mod,
                                     std::abs(std::abs(ex.amplitudes[k]) -
                                              std::abs(cf.amplitudes[k])));
                worst_cplx = std::max(worst_cplx,
                                      std::abs(ex.amplitudes[k] - cf.amplitudes[k]));
            }
        }
        std::printf("eta=%.3f  worst |.|-dev=%.3e  worst cplx dev=%.3e  5eta^2=%.3e\n",
                    eta, worst_mod, worst_cplx, 5 * eta * eta);
    }
    return 0;
}
