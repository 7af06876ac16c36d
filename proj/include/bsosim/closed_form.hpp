#pragma once

#include <cmath>
#include <complex>
#include <utility>

#include "bsosim/drive_field.hpp"
#include "bsosim/two_level.hpp"

namespace bsosim {

// Adiabatic closed form of the driven amplitudes, first order in
// eta = g0/(4w), lab frame:
//   C0 = cos(g0' t / 2) - 2 eta Sigma sin(g0' t / 2)
//   C1 = i e^{-i(w t + phi)} [ sin(g0' t / 2) + 2 eta Sigma* cos(g0' t / 2) ]
// with Sigma = (i/2) e^{-i(2 w t + 2 phi)}, g0'(t) the running envelope
// average and eta evaluated at the instantaneous envelope value.
inline std::pair<complexd, complexd> closed_form(const DriveField& field, double t) {
    field.validate();
    if (field.eta() >= 0.25)
        throw PerturbativeRegimeViolated(
            "closed_form: eta = g0M/(4*omega) must be < 0.25");
    const double half = 0.5 * field.g0_prime(t) * t;
    const double s = std::sin(half);
    const double c = std::cos(half);
    const double theta = field.omega * t + field.phi;
    const complexd sigma = 0.5 * I_UNIT * std::exp(-2.0 * I_UNIT * theta);
    const double eta = field.eta_inst(t);
    const complexd c0 = c - 2.0 * eta * sigma * s;
    const complexd c1 =
        I_UNIT * std::exp(-I_UNIT * theta) * (s + 2.0 * eta * std::conj(sigma) * c);
    return {c0, c1};
}

inline StateVector closed_form_state(const DriveField& field, double t) {
    auto [c0, c1] = closed_form(field, t);
    StateVector s;
    s.amplitudes = Eigen::VectorXcd(2);
    s.amplitudes[0] = c0;
    s.amplitudes[1] = c1;
    s.frame = Frame::Lab;
    s.t = t;
    return s;
}

} // namespace bsosim
