#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "bsosim/errors.hpp"

namespace bsosim {

struct SinusoidFit {
    double offset = 0.0; // B
    double amp = 0.0;    // R >= 0
    double phase = 0.0;  // psi, y = B + R sin(freq x + psi)
    double rms_residual = 0.0;
};

// Linear least squares of y = B + alpha sin(freq x) + beta cos(freq x).
inline SinusoidFit fit_sinusoid(const std::vector<double>& x,
                                const std::vector<double>& y, double freq) {
    if (x.size() != y.size() || x.size() < 3)
        throw Error("fit_sinusoid: need at least 3 points");
    const int n = static_cast<int>(x.size());
    Eigen::MatrixXd m(n, 3);
    Eigen::VectorXd rhs(n);
    for (int i = 0; i < n; ++i) {
        m(i, 0) = 1.0;
        m(i, 1) = std::sin(freq * x[i]);
        m(i, 2) = std::cos(freq * x[i]);
        rhs[i] = y[i];
    }
    const Eigen::Vector3d p = (m.transpose() * m).ldlt().solve(m.transpose() * rhs);
    SinusoidFit f;
    f.offset = p[0];
    f.amp = std::hypot(p[1], p[2]);
    f.phase = std::atan2(p[2], p[1]);
    f.rms_residual = std::sqrt((m * p - rhs).squaredNorm() / n);
    return f;
}

struct LineFit {
    double intercept = 0.0;
    double slope = 0.0;
    double intercept_err = 0.0;
    double slope_err = 0.0;
    double chi2 = 0.0;
};

// Weighted straight line y = a + b x with per-point standard errors.
inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y,
                        const std::vector<double>& sigma) {
    if (x.size() != y.size() || x.size() != sigma.size() || x.size() < 2)
        throw Error("fit_line: need at least 2 points");
    double sw = 0, swx = 0, swy = 0, swxx = 0, swxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double w = 1.0 / (sigma[i] * sigma[i]);
        sw += w;
        swx += w * x[i];
        swy += w * y[i];
        swxx += w * x[i] * x[i];
        swxy += w * x[i] * y[i];
    }
    const double det = sw * swxx - swx * swx;
    if (det <= 0.0) throw Error("fit_line: degenerate abscissae");
    LineFit f;
    f.intercept = (swxx * swy - swx * swxy) / det;
    f.slope = (sw * swxy - swx * swy) / det;
    f.intercept_err = std::sqrt(swxx / det);
    f.slope_err = std::sqrt(sw / det);
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = (y[i] - f.intercept - f.slope * x[i]) / sigma[i];
        f.chi2 += r * r;
    }
    return f;
}

inline double wrap_pi(double a) {
    a = std::fmod(a + M_PI, 2.0 * M_PI);
    if (a < 0) a += 2.0 * M_PI;
    return a - M_PI;
}

inline double wrap_2pi(double a) {
    a = std::fmod(a, 2.0 * M_PI);
    if (a < 0) a += 2.0 * M_PI;
    return a;
}

} // namespace bsosim
