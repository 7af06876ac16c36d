#pragma once

#include <cmath>
#include <optional>

#include "bsosim/drive_field.hpp"

namespace bsosim {

// A drive pulse described by the rotation it is meant to realize. `area` is
// the target rotation angle (pi/2, pi, 3pi/2, ...); `duration` is the actual
// drive time, which may include extra full Rabi cycles so that an ExpSwitch
// envelope has settled by the end. When reversal_integer_m is set the
// duration must be exactly m*pi/omega.
struct PulseSpec {
    double area = M_PI / 2.0;
    double duration = 0.0;
    std::optional<int> reversal_integer_m;

    static PulseSpec reversal(int m, double omega, double area_target) {
        PulseSpec p;
        p.area = area_target;
        p.duration = static_cast<double>(m) * M_PI / omega;
        p.reversal_integer_m = m;
        return p;
    }
};

// Smallest duration d with field.g0_integral(d) = area (the accumulated
// envelope area is strictly increasing for g0M > 0). Bisection is plenty
// here; the function is smooth and cheap.
inline double duration_for_area(const DriveField& field, double area) {
    if (field.g0M <= 0.0) throw Error("duration_for_area: g0M must be > 0");
    double lo = 0.0;
    double hi = area / field.g0M;
    if (field.envelope == Envelope::ExpSwitch) hi += 20.0 * field.tau_sw;
    while (field.g0_integral(hi) < area) hi *= 2.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (field.g0_integral(mid) < area)
            lo = mid;
        else
            hi = mid;
        if (hi - lo < 1e-15 * hi) break;
    }
    return 0.5 * (lo + hi);
}

// Build the pulse realizing rotation `area` (mod 4*pi) with enough extra full
// cycles that the ExpSwitch envelope has settled to `settle_frac` by the end.
// For a Step envelope no padding is needed.
inline PulseSpec settled_pulse(const DriveField& field, double area,
                               double settle_frac = 1e-2) {
    PulseSpec p;
    p.area = area;
    if (field.envelope == Envelope::Step) {
        p.duration = duration_for_area(field, area);
        return p;
    }
    const double t_settle = field.tau_sw * std::log(1.0 / settle_frac);
    double total = area;
    for (int k = 0;; ++k, total += 4.0 * M_PI) {
        const double d = duration_for_area(field, total);
        if (d >= t_settle || k > 10000) {
            p.duration = d;
            return p;
        }
    }
}

} // namespace bsosim
