#pragma once

#include "liveia/optics.hpp"
#include "liveia/scene.hpp"
#include "liveia/vec2.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace liveia::radiance {

/// Default shadow threshold as a fraction of mean luminance.
inline constexpr double kShadowTau = 0.25;
/// Cells whose running mean is below this are left out of the convergence test.
inline constexpr double kNegligible = 1e-12;

struct Params {
    int rays_per_iter{2000};
    int max_iter{200};
    double tol{1e-3};
    std::uint64_t seed{1};
    int grid{64};                  ///< cells per side of the bounding square
    optics::TraceLimits limits{};  ///< applied to unit-intensity rays
};

/// Square grid over a sphere's bounding box. Cell (i, j) has its lower-left
/// corner at origin + (i, j) * cell_size; storage is row-major in j.
struct Grid {
    std::string sphere_id;
    Vec2 origin;
    double cell_size{0.0};
    int n{0};
    std::vector<Rgb> cells;
    std::vector<std::uint8_t> interior; ///< cell centre inside the sphere
    std::vector<double> coverage;       ///< fraction of the cell's area inside the sphere

    std::size_t index(int i, int j) const { return static_cast<std::size_t>(j) * n + i; }
    Vec2 cell_center(int i, int j) const { return origin + Vec2{(i + 0.5) * cell_size, (j + 0.5) * cell_size}; }
    double luminance(std::size_t k) const { return cells[k].mean(); }
    std::size_t interior_count() const;
};

/// Empty grid for `sphere` with its interior mask and coverage filled in.
Grid make_grid(const scene::PsycheSphere& sphere, int n);

using Region = std::vector<std::size_t>; ///< cell indices

struct Report {
    int iterations{0};
    bool converged{false};
    double uniformity{0.0};
    double shadow_fraction{1.0};
    std::vector<Region> shadow_regions;
    Rgb mean_radiance;
    double max_relative_change{0.0}; ///< at the last iteration
    /// Per iteration: power launched and path-weighted power deposited (same units).
    std::vector<double> emitted;
    std::vector<double> deposited;
};

struct Result {
    Grid grid;
    Report report;
};

/// Monte-Carlo equilibrium of the interior of `sphere_id` under its own
/// emission and the injected beams. Deterministic for a fixed seed.
Result compute_equilibrium(const scene::Scenario& s, std::string_view sphere_id,
                           std::span<const scene::Beam> injections, const Params& params);

/// max(0, 1 - std/mean) of interior luminance; 0 when the mean is 0.
double uniformity(const Grid& g);

/// 4-connected interior components with luminance < tau * mean, largest
/// first. When the mean is 0 every interior cell is shadow.
std::vector<Region> shadow_regions(const Grid& g, double tau = kShadowTau);

double shadow_fraction(const Grid& g, const std::vector<Region>& regions);

/// Mean per-channel radiance over interior cells.
Rgb mean_radiance(const Grid& g);

/// uniformity * (1 - shadow_fraction), halved once for fractures and once for
/// opaque bubbles when present. A heuristic index.
double enlightenment_score(const Grid& g, const Report& r, const scene::PsycheSphere& sphere);

/// Binary PPM (P6) heatmap of luminance, row 0 at the top; cells outside the
/// sphere are black.
std::string to_ppm(const Grid& g);

} // namespace liveia::radiance
