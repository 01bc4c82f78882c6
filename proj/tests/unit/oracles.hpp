#pragma once

// Independent reference computations used to derive expected values.
// Nothing here calls into the library's numerical paths.

#include <cmath>
#include <complex>
#include <vector>

namespace oracle {

inline constexpr double pi = 3.14159265358979323846;

/// O(N^2) textbook DFT, X_k = sum_n x_n exp(-2*pi*i*k*n/N).
inline std::vector<std::complex<double>> naive_dft(const std::vector<double>& x)
{
    const std::size_t n = x.size();
    std::vector<std::complex<double>> out(n);
    for (std::size_t k = 0; k < n; ++k) {
        std::complex<double> acc{0.0, 0.0};
        for (std::size_t t = 0; t < n; ++t) {
            const double ang = -2.0 * pi * static_cast<double>((k * t) % n) / static_cast<double>(n);
            acc += x[t] * std::complex<double>(std::cos(ang), std::sin(ang));
        }
        out[k] = acc;
    }
    return out;
}

/// Snell: transmitted angle for incidence theta1 (radians), or NaN past critical.
inline double snell_angle(double theta1, double n1, double n2)
{
    const double s = n1 * std::sin(theta1) / n2;
    return s > 1.0 ? std::nan("") : std::asin(s);
}

/// Normal-incidence reflectance ((n1-n2)/(n1+n2))^2.
inline double normal_reflectance(double n1, double n2)
{
    const double r = (n1 - n2) / (n1 + n2);
    return r * r;
}

/// Unpolarised Fresnel reflectance straight from the textbook formulas written
/// in angles (not cosines) so it is algebraically distinct from the library.
inline double fresnel_r(double theta_i, double n1, double n2)
{
    const double theta_t = snell_angle(theta_i, n1, n2);
    if (std::isnan(theta_t)) return 1.0;
    if (theta_i == 0.0) return normal_reflectance(n1, n2);
    const double rs = std::sin(theta_i - theta_t) / std::sin(theta_i + theta_t);
    const double rp = std::tan(theta_i - theta_t) / std::tan(theta_i + theta_t);
    return 0.5 * (rs * rs + rp * rp);
}

/// Where a ray travelling +x at height h inside a circle of radius R centred at
/// the origin crosses the x-axis after one mirror reflection off the wall.
/// Returns the x coordinate of the crossing.
inline double mirror_axis_crossing(double h, double radius)
{
    const double x = std::sqrt(radius * radius - h * h);
    // normal at (x, h) is (x, h)/R; reflect d=(1,0)
    const double nx = x / radius, ny = h / radius;
    const double dx = 1.0 - 2.0 * nx * nx;
    const double dy = -2.0 * nx * ny;
    const double t = -h / dy;
    return x + t * dx;
}

} // namespace oracle

namespace oracle {

/// Fluence at distance r from the centre of a uniformly, isotropically emitting
/// disk of radius R with no interface (index matched to its surroundings) and
/// absorption alpha, per unit emitted power density:
/// (1/2pi) * integral over directions of (1 - exp(-alpha d)) / alpha, where d
/// is the distance back to the rim. Composite Simpson quadrature.
inline double disk_fluence(double r, double radius, double alpha)
{
    const int steps = 4000;
    auto f = [&](double theta) {
        const double s = r * std::sin(theta);
        const double d = std::sqrt(radius * radius - s * s) - r * std::cos(theta);
        return alpha > 0.0 ? (1.0 - std::exp(-alpha * d)) / alpha : d;
    };
    const double h = 2.0 * pi / steps;
    double acc = f(0.0) + f(2.0 * pi);
    for (int i = 1; i < steps; ++i) acc += (i % 2 ? 4.0 : 2.0) * f(i * h);
    return acc * h / 3.0 / (2.0 * pi);
}

} // namespace oracle
