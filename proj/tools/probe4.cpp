// Probe 4: second-order systematics of Bob's post-selected probability vs
// the measurement-window geometry.
#include <cstdio>
#include <cmath>

#include "bsosim/protocol.hpp"

using namespace bsosim;

static DriveField weak(double omega, double phase) {
    DriveField f;
    f.omega = omega;
    f.phi = phase;
    f.g0M = 0.04 * omega;
    f.envelope = Envelope::Step;
    f.rwa = true;
    return f;
}

int main() {
    const double eta = 0.05;
    const double t_alice = quadrature_time_at_or_after(30.0, 1.0);
    for (int extra : {0, 1, 2, 3}) {
        for (double tau_mult : {1.0, 2.0, 4.0, 8.0, 16.0}) {
            if (extra == 0 && tau_mult > 2.5) continue;
            if (4.0 * M_PI * extra + M_PI / 2.0 < tau_mult / 2.0) continue;
            double worst = 0.0, at_phi = 0.0;
            for (double phi : {0.0, M_PI / 8, M_PI / 4, 3 * M_PI / 8, 1.3}) {
                ProtocolConfig c;
                c.alice_field = weak(1.0, phi);
                c.bob_field = weak(1.0, 0.35);
                c.eta_measure = eta;
                c.pairs = 1;
                c.window.extra_cycles = extra;
                c.window.ramp_mult = tau_mult;
                const auto probs = protocol_probabilities(c, 2.0, 2.0, t_alice);
                const double expected = 0.5 * (1.0 + 2.0 * eta * std::sin(2.0 * phi));
                const double dev = std::abs(probs.p_bob_given_plus - expected);
                if (dev > worst) {
                    worst = dev;
                    at_phi = phi;
                }
            }
            std::printf("extra=%d tau_mult=%.0f  worst dev=%.3e (phi=%.3f)  [3eta^2=%.2e]\n",
                        extra, tau_mult, worst, at_phi, 3 * eta * eta);
        }
    }
    // phase structure at the default window
    std::printf("\nphi-profile at extra=1, tau=4:\n");
    for (double phi = 0.0; phi < M_PI; phi += M_PI / 8) {
        ProtocolConfig c;
        c.alice_field = weak(1.0, phi);
        c.bob_field = weak(1.0, 0.35);
        c.eta_measure = eta;
        c.pairs = 1;
        const auto probs = protocol_probabilities(c, 2.0, 2.0, t_alice);
        const double expected = 0.5 * (1.0 + 2.0 * eta * std::sin(2.0 * phi));
        std::printf("phi=%.4f  p=%.6f  expected=%.6f  dev=%+.4e\n", phi,
                    probs.p_bob_given_plus, expected, probs.p_bob_given_plus - expected);
    }
    return 0;
}
