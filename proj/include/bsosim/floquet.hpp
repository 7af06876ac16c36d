#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "bsosim/drive_field.hpp"
#include "bsosim/two_level.hpp"

namespace bsosim {

// Harmonic-expansion solution of the rotating-frame dynamics: the state is
// expanded as sum_n (a_n, b_n) e^{n(-i 2 w t - i 2 phi)} and the coupled
// ladder
//   da_n/dt = i 2 n w a_n + i g0 (b_n + b_{n-1}) / 2
//   db_n/dt = i 2 n w b_n + i g0 (a_n + a_{n+1}) / 2
// is integrated with couplings beyond +-n_max zeroed.
struct FloquetLadder {
    int n_max = 4;
    Eigen::VectorXcd coeffs; // [a_{-n}, b_{-n}, ..., a_{+n}, b_{+n}]

    int offset(int n) const { return n + n_max; }
    complexd a(int n) const { return coeffs[2 * offset(n)]; }
    complexd b(int n) const { return coeffs[2 * offset(n) + 1]; }

    // Rotating-frame amplitudes at time t.
    Eigen::Vector2cd reconstruct(const DriveField& field, double t) const {
        complexd c0 = 0.0, c1 = 0.0;
        for (int n = -n_max; n <= n_max; ++n) {
            const complexd ph =
                std::exp(static_cast<double>(n) * complexd(0.0, -1.0) *
                         (2.0 * field.omega * t + 2.0 * field.phi));
            c0 += a(n) * ph;
            c1 += b(n) * ph;
        }
        return {c0, c1};
    }
};

struct FloquetTrajectory {
    DriveField field;
    std::vector<double> times;
    std::vector<FloquetLadder> ladders;

    StateVector state_at(std::size_t i) const {
        const Eigen::Vector2cd c = ladders[i].reconstruct(field, times[i]);
        StateVector s;
        s.amplitudes = Eigen::VectorXcd(2);
        s.amplitudes[0] = c[0];
        s.amplitudes[1] = c[1];
        s.frame = Frame::Rotating;
        s.t = times[i];
        return s;
    }

    StateVector final_state() const { return state_at(ladders.size() - 1); }
};

struct FloquetOptions {
    int n_samples = 33;           // stored time points (>= 2, includes ends)
    bool check_truncation = false; // compare against a doubled ladder
    double refine_tol = 1e-10;
    int max_halvings = 10;
};

namespace detail {

inline void floquet_rhs(const DriveField& field, int n_max, double t,
                        const Eigen::VectorXcd& y, Eigen::VectorXcd& dy) {
    const double g0 = field.g0(t);
    const complexd ig2 = complexd(0.0, 0.5 * g0);
    const complexd i2w = complexd(0.0, 2.0 * field.omega);
    const int size = 2 * n_max + 1;
    for (int k = 0; k < size; ++k) {
        const int n = k - n_max;
        const complexd an = y[2 * k];
        const complexd bn = y[2 * k + 1];
        const complexd bnm1 = (k > 0) ? y[2 * (k - 1) + 1] : complexd(0.0);
        const complexd anp1 = (k < size - 1) ? y[2 * (k + 1)] : complexd(0.0);
        dy[2 * k] = static_cast<double>(n) * i2w * an + ig2 * (bn + bnm1);
        dy[2 * k + 1] = static_cast<double>(n) * i2w * bn + ig2 * (an + anp1);
    }
}

inline Eigen::VectorXcd floquet_rk4(const DriveField& field, int n_max,
                                    Eigen::VectorXcd y, double t0, double t1,
                                    std::uint64_t steps) {
    const double dt = (t1 - t0) / static_cast<double>(steps);
    const int dim = static_cast<int>(y.size());
    Eigen::VectorXcd k1(dim), k2(dim), k3(dim), k4(dim), tmp(dim);
    for (std::uint64_t s = 0; s < steps; ++s) {
        const double t = t0 + dt * static_cast<double>(s);
        floquet_rhs(field, n_max, t, y, k1);
        tmp = y + 0.5 * dt * k1;
        floquet_rhs(field, n_max, t + 0.5 * dt, tmp, k2);
        tmp = y + 0.5 * dt * k2;
        floquet_rhs(field, n_max, t + 0.5 * dt, tmp, k3);
        tmp = y + dt * k3;
        floquet_rhs(field, n_max, t + dt, tmp, k4);
        y += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return y;
}

} // namespace detail

// Integrate the truncated ladder from a_0 = 1 (system starts in |0>) over
// [t0, t1], storing n_samples points.
inline FloquetTrajectory solve_floquet(const DriveField& field, double t0, double t1,
                                       int n_max, const FloquetOptions& opts = {}) {
    field.validate();
    if (n_max < 1) throw Error("solve_floquet: n_max must be >= 1");
    if (!(t1 > t0)) throw Error("solve_floquet: t1 must be > t0");

    const int n_samples = opts.n_samples < 2 ? 2 : opts.n_samples;
    const double dt_max = max_dt_for(field);

    auto run = [&](int nm) {
        FloquetTrajectory traj;
        traj.field = field;
        Eigen::VectorXcd y = Eigen::VectorXcd::Zero(2 * (2 * nm + 1));
        y[2 * nm] = 1.0; // a_0 = 1
        std::uint64_t steps_total =
            static_cast<std::uint64_t>(std::ceil((t1 - t0) / dt_max));
        if (steps_total < static_cast<std::uint64_t>(n_samples)) steps_total = n_samples;

        // pick a step count by successive halving on the end state
        Eigen::VectorXcd yend = detail::floquet_rk4(field, nm, y, t0, t1, steps_total);
        for (int h = 0; h < opts.max_halvings; ++h) {
            const Eigen::VectorXcd y2 =
                detail::floquet_rk4(field, nm, y, t0, t1, steps_total * 2);
            const double dev = (y2 - yend).cwiseAbs().maxCoeff();
            yend = y2;
            steps_total *= 2;
            if (dev <= opts.refine_tol) break;
        }

        // re-run storing samples with the chosen resolution
        const std::uint64_t per_seg = steps_total / (n_samples - 1) + 1;
        FloquetLadder lad;
        lad.n_max = nm;
        lad.coeffs = y;
        traj.times.push_back(t0);
        traj.ladders.push_back(lad);
        Eigen::VectorXcd cur = y;
        for (int i = 1; i < n_samples; ++i) {
            const double ta = t0 + (t1 - t0) * (i - 1) / (n_samples - 1);
            const double tb = t0 + (t1 - t0) * i / (n_samples - 1);
            cur = detail::floquet_rk4(field, nm, cur, ta, tb, per_seg);
            lad.coeffs = cur;
            traj.times.push_back(tb);
            traj.ladders.push_back(lad);
        }
        return traj;
    };

    FloquetTrajectory traj = run(n_max);
    if (opts.check_truncation) {
        FloquetTrajectory big = run(2 * n_max);
        const Eigen::Vector2cd c1 = traj.ladders.back().reconstruct(field, t1);
        const Eigen::Vector2cd c2 = big.ladders.back().reconstruct(field, t1);
        if ((c1 - c2).cwiseAbs().maxCoeff() > 1e-5)
            throw TruncationTooSmall(
                "solve_floquet: doubling n_max moves reconstructed amplitudes by > 1e-5");
    }
    return traj;
}

} // namespace bsosim
