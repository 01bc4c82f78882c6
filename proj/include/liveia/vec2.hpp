#pragma once

#include <algorithm>
#include <array>
#include <cmath>

namespace liveia {

/// Plain 2D vector in scene units.
struct Vec2 {
    double x{0.0};
    double y{0.0};

    constexpr Vec2() = default;
    constexpr Vec2(double x_, double y_) : x(x_), y(y_) {}

    constexpr Vec2 operator+(Vec2 r) const { return {x + r.x, y + r.y}; }
    constexpr Vec2 operator-(Vec2 r) const { return {x - r.x, y - r.y}; }
    constexpr Vec2 operator-() const { return {-x, -y}; }
    constexpr Vec2 operator*(double s) const { return {x * s, y * s}; }
    constexpr Vec2 operator/(double s) const { return {x / s, y / s}; }
    constexpr Vec2& operator+=(Vec2 r) { x += r.x; y += r.y; return *this; }
    constexpr Vec2& operator-=(Vec2 r) { x -= r.x; y -= r.y; return *this; }

    friend constexpr Vec2 operator*(double s, Vec2 v) { return v * s; }
    friend constexpr bool operator==(Vec2, Vec2) = default;
};

constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
/// z-component of the 3D cross product.
constexpr double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 v) { return std::hypot(v.x, v.y); }
inline double distance(Vec2 a, Vec2 b) { return norm(a - b); }
inline bool is_finite(Vec2 v) { return std::isfinite(v.x) && std::isfinite(v.y); }

inline Vec2 normalized(Vec2 v)
{
    const double n = norm(v);
    return n > 0.0 ? v / n : Vec2{};
}

inline Vec2 unit_from_angle(double radians) { return {std::cos(radians), std::sin(radians)}; }

/// Unsigned angle between two unit vectors, in [0, pi].
inline double angle_between(Vec2 a, Vec2 b)
{
    return std::atan2(std::abs(cross(a, b)), dot(a, b));
}

/// Mirror `d` about a surface with unit normal `n`.
inline Vec2 reflect(Vec2 d, Vec2 n) { return d - n * (2.0 * dot(d, n)); }

/// Per-channel RGB quantity (intensity, radiance, transmission).
struct Rgb {
    std::array<double, 3> c{0.0, 0.0, 0.0};

    constexpr Rgb() = default;
    constexpr Rgb(double r, double g, double b) : c{r, g, b} {}
    static constexpr Rgb uniform(double v) { return {v, v, v}; }

    constexpr double& operator[](std::size_t i) { return c[i]; }
    constexpr double operator[](std::size_t i) const { return c[i]; }

    constexpr Rgb operator*(double s) const { return {c[0] * s, c[1] * s, c[2] * s}; }
    constexpr Rgb operator*(const Rgb& o) const { return {c[0] * o.c[0], c[1] * o.c[1], c[2] * o.c[2]}; }
    constexpr Rgb operator+(const Rgb& o) const { return {c[0] + o.c[0], c[1] + o.c[1], c[2] + o.c[2]}; }
    constexpr Rgb& operator+=(const Rgb& o)
    {
        for (std::size_t i = 0; i < 3; ++i) c[i] += o.c[i];
        return *this;
    }

    constexpr double max() const { return std::max({c[0], c[1], c[2]}); }
    constexpr double min() const { return std::min({c[0], c[1], c[2]}); }
    constexpr double mean() const { return (c[0] + c[1] + c[2]) / 3.0; }

    friend constexpr bool operator==(const Rgb&, const Rgb&) = default;
};

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

} // namespace liveia
