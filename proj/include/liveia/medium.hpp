#pragma once

#include "liveia/vec2.hpp"

#include <cmath>

namespace liveia::optics {

/// Optical material filling a region of the plane.
struct Medium {
    double refractive_index{1.0}; ///< >= 0.1
    double absorption{0.0};       ///< Beer-Lambert coefficient per scene unit, >= 0
    Rgb tint{1.0, 1.0, 1.0};      ///< per-channel transmission per scene unit, each in [0,1]

    /// Per-channel attenuation coefficient k such that I(s) = I0 * exp(-k*s).
    Rgb attenuation() const
    {
        Rgb k;
        for (std::size_t i = 0; i < 3; ++i) {
            const double t = tint[i] > 0.0 ? tint[i] : 1e-300;
            k[i] = absorption - std::log(t);
        }
        return k;
    }

    friend bool operator==(const Medium&, const Medium&) = default;
};

inline constexpr Medium kAir{1.0, 0.0, {1.0, 1.0, 1.0}};

} // namespace liveia::optics
