#pragma once

#include <cmath>
#include <string>

#include "bsosim/errors.hpp"

namespace bsosim {

enum class Envelope { Step, ExpSwitch };

// One oscillator's magnetic drive B(t) = B0(t) cos(w t + phi), expressed
// through the Rabi rate it produces: g(t) = -g0(t) cos(w t + phi) with
// g0(t) = g0M            (Step)
// g0(t) = g0M (1 - e^{-t/tau_sw})   (ExpSwitch, switched on at t = 0).
struct DriveField {
    double g0M = 0.0;       // peak Rabi rate, rad/time
    double omega = 1.0;     // drive angular frequency, rad/time
    double phi = 0.0;       // drive phase, rad
    Envelope envelope = Envelope::Step;
    double tau_sw = 1.0;    // switching time (ExpSwitch only)
    double detuning = 0.0;  // epsilon - omega; 0 means resonant excitation
    bool rwa = false;       // drop the counter-rotating term (attenuated field)
    double t_on = 0.0;      // switch-on time; g0 vanishes before it

    void validate() const {
        if (g0M < 0.0) throw Error("DriveField: g0M must be >= 0");
        if (omega <= 0.0) throw Error("DriveField: omega must be > 0");
        if (envelope == Envelope::ExpSwitch && tau_sw <= 0.0)
            throw Error("DriveField: tau_sw must be > 0 for ExpSwitch");
    }

    // eta = g0M / (4 omega), the perturbation parameter at peak drive
    double eta() const { return g0M / (4.0 * omega); }

    // instantaneous eta from the envelope value at time t
    double eta_inst(double t) const { return g0(t) / (4.0 * omega); }

    double g0(double t) const {
        const double u = t - t_on;
        if (u < 0.0) return 0.0;
        if (envelope == Envelope::Step) return g0M;
        return g0M * (1.0 - std::exp(-u / tau_sw));
    }

    // int_{t_on}^{t} g0(t') dt', the accumulated pulse area
    double g0_integral(double t) const {
        const double u = t - t_on;
        if (u <= 0.0) return 0.0;
        if (envelope == Envelope::Step) return g0M * u;
        return g0M * (u - tau_sw * (1.0 - std::exp(-u / tau_sw)));
    }

    double area(double t0, double t1) const {
        return g0_integral(t1) - g0_integral(t0);
    }

    // g0'(t) = (1/t) int_0^t g0 dt', the running average that sets the
    // effective rotation angle g0'(t) t.
    double g0_prime(double t) const {
        if (t <= 0.0) return envelope == Envelope::Step ? g0M : 0.0;
        return g0_integral(t) / t;
    }

    DriveField with_phase(double new_phi) const {
        DriveField f = *this;
        f.phi = new_phi;
        return f;
    }

    DriveField phase_shifted(double dphi) const { return with_phase(phi + dphi); }
};

} // namespace bsosim
