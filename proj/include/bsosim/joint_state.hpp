#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>

#include "bsosim/drive_field.hpp"
#include "bsosim/errors.hpp"
#include "bsosim/two_level.hpp"

namespace bsosim {

enum class Side { Alice, Bob };

// Pure state of one Alice+Bob atom pair. Each atom has levels {0, 1, 2}
// with 0 and 1 degenerate at energy 0 and level 2 at energy omega (the
// transition frequency). Amplitude index is 3*a + b.
struct JointState {
    Eigen::VectorXcd amplitudes = Eigen::VectorXcd::Zero(9);
    double t = 0.0;

    complexd& at(int a, int b) { return amplitudes[3 * a + b]; }
    complexd at(int a, int b) const { return amplitudes[3 * a + b]; }

    double norm() const { return amplitudes.norm(); }

    // P(Alice level a), tracing out Bob
    double alice_population(int a) const {
        double p = 0.0;
        for (int b = 0; b < 3; ++b) p += std::norm(at(a, b));
        return p;
    }

    double bob_population(int b) const {
        double p = 0.0;
        for (int a = 0; a < 3; ++a) p += std::norm(at(a, b));
        return p;
    }
};

// (|0>_A |1>_B - |1>_A |0>_B) / sqrt(2) at t = 0. Degenerate levels carry no
// free-evolution phase, so the preparation time is immaterial.
inline JointState make_singlet() {
    JointState s;
    s.at(0, 1) = 1.0 / std::sqrt(2.0);
    s.at(1, 0) = -1.0 / std::sqrt(2.0);
    return s;
}

// Free evolution: every |2> component accrues e^{-i omega dt} per atom.
inline JointState free_evolve(const JointState& s, double omega, double t_new) {
    if (t_new < s.t) throw Error("free_evolve: cannot evolve backwards");
    const double dt = t_new - s.t;
    JointState out = s;
    const complexd ph = std::exp(-I_UNIT * omega * dt);
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) {
            complexd f = 1.0;
            if (a == 2) f *= ph;
            if (b == 2) f *= ph;
            out.at(a, b) = s.at(a, b) * f;
        }
    out.t = t_new;
    return out;
}

// Resonant RWA pi pulse on the 1-2 transition of one side, applied at its
// completion time: |1> -> e^{-i(w t + phi)} |2>, |2> -> -e^{+i(w t + phi)} |1>.
// The field must be attenuated enough that the counter-rotating term is
// negligible (rwa flag set); the map is then exact.
inline JointState apply_pi_pulse_12(const JointState& state, Side side,
                                    const DriveField& field, double t_complete) {
    if (!field.rwa)
        throw RwaFlagMissing("apply_pi_pulse_12: field must be flagged attenuated (rwa)");
    if (std::abs(state.norm() - 1.0) > 1e-9)
        throw NotNormalized("apply_pi_pulse_12: state not normalized");
    JointState out = free_evolve(state, field.omega, t_complete);
    const complexd down = std::exp(-I_UNIT * (field.omega * t_complete + field.phi));
    const complexd up = -std::exp(I_UNIT * (field.omega * t_complete + field.phi));
    JointState res = out;
    for (int other = 0; other < 3; ++other) {
        if (side == Side::Alice) {
            const complexd c1 = out.at(1, other);
            const complexd c2 = out.at(2, other);
            res.at(1, other) = up * c2;
            res.at(2, other) = down * c1;
        } else {
            const complexd c1 = out.at(other, 1);
            const complexd c2 = out.at(other, 2);
            res.at(other, 1) = up * c2;
            res.at(other, 2) = down * c1;
        }
    }
    return res;
}

// Support restricted to span{|0>,|2>} on both atoms?
inline bool in_measurement_span(const JointState& s, double tol = 1e-9) {
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
            if ((a == 1 || b == 1) && std::abs(s.at(a, b)) > tol) return false;
    return true;
}

} // namespace bsosim
