#pragma once

#include "liveia/medium.hpp"
#include "liveia/vec2.hpp"
#include "liveia/waves.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace liveia::scene {

using optics::Medium;

/// Absorption per unit length contributed by a fully opaque shell.
inline constexpr double kShellOpacityAbsorption = 10.0;
/// Bubbles at or above this absorption count as opaque obstructions.
inline constexpr double kOpaqueBubbleAbsorption = 10.0;

struct ShellSector {
    double start_angle{0.0}; ///< radians
    double end_angle{0.0};
    std::string color;       ///< "#rrggbb"

    friend bool operator==(const ShellSector&, const ShellSector&) = default;
};

/// Outer annulus of a sphere; thickness is a fraction of the radius.
struct Shell {
    double thickness{0.1};
    Medium medium{};
    double opacity{0.0};
    std::vector<ShellSector> sectors;

    /// Shell medium with opacity folded into absorption (linear, 10 per unit opacity).
    Medium effective_medium() const
    {
        Medium m = medium;
        m.absorption += kShellOpacityAbsorption * opacity;
        return m;
    }

    friend bool operator==(const Shell&, const Shell&) = default;
};

/// Thin internal slab of contrasting material.
struct Fracture {
    Vec2 a;
    Vec2 b;
    double width{0.01};
    Medium medium{1.0, 0.0, {1.0, 1.0, 1.0}};

    friend bool operator==(const Fracture&, const Fracture&) = default;
};

struct Bubble {
    Vec2 center;
    double radius{0.1};
    Medium medium{1.5, kOpaqueBubbleAbsorption, {1.0, 1.0, 1.0}};

    bool is_opaque() const { return medium.absorption >= kOpaqueBubbleAbsorption; }
    friend bool operator==(const Bubble&, const Bubble&) = default;
};

struct PsycheSphere {
    std::string id;
    std::string label;
    Vec2 center;
    double radius{1.0};
    Medium interior{1.5, 0.0, {1.0, 1.0, 1.0}};
    double light_level{0.0};
    std::optional<Shell> shell;
    std::vector<Fracture> fractures;
    std::vector<Bubble> bubbles;
    std::vector<std::string> children;
    double border_blur{0.0};
    bool revealed{false}; ///< render-only cross-section flag

    /// Radius of the interior proper (inside the shell, if any).
    double inner_radius() const { return shell ? radius * (1.0 - shell->thickness) : radius; }

    friend bool operator==(const PsycheSphere&, const PsycheSphere&) = default;
};

struct Beam {
    std::string id;
    std::optional<std::string> source_sphere;
    Vec2 origin;              ///< world origin; used only when source_sphere is unset
    double origin_depth{0.0}; ///< 0 = centre, 1 = surface
    double origin_angle{0.0};
    double direction{0.0};
    double spread{0.0};
    int ray_count{1};
    Rgb intensity{1.0, 1.0, 1.0};
    std::optional<waves::Waveform> waveform;

    friend bool operator==(const Beam&, const Beam&) = default;
};

struct Spark {
    std::string first;
    std::string second;
    double intensity{1.0};

    friend bool operator==(const Spark&, const Spark&) = default;
};

struct Scenario {
    std::string id;
    std::string title;
    std::vector<PsycheSphere> spheres;
    std::vector<Beam> beams;
    std::vector<Spark> sparks;
    std::string notes;
    std::optional<std::string> parent;
    std::vector<std::string> children;
    std::string created_at;
    /// Set on perspective views: the sphere the view is centred on.
    std::optional<std::string> view_focus;

    friend bool operator==(const Scenario&, const Scenario&) = default;
};

struct Violation {
    std::string rule;      ///< e.g. "child-containment"
    std::string object_id; ///< offending sphere/beam/scenario id
    std::string message;

    friend bool operator==(const Violation&, const Violation&) = default;
};

/// Check every structural invariant; an empty result means valid.
std::vector<Violation> validate(const Scenario& s);

/// Throws Error(Validation) carrying the first violations when `s` is invalid.
void require_valid(const Scenario& s);

/// Deep copy with a fresh id whose parent is `s`; `s` records the child link.
Scenario fork(Scenario& s);

/// Re-centre the scenario on `sphere_id`: coordinates translated so that
/// sphere sits at the origin, and the sphere listed first.
Scenario perspective(const Scenario& s, std::string_view sphere_id);

/// Move a beam's origin toward the centre by `delta` (clamped at 0).
Beam deepen(Scenario& s, std::string_view beam_id, double delta);

/// Set the render-only cross-section flag on a sphere; returns the new flag.
bool reveal(Scenario& s, std::string_view sphere_id, bool on);

const PsycheSphere* find_sphere(const Scenario& s, std::string_view id);
PsycheSphere* find_sphere(Scenario& s, std::string_view id);
const Beam* find_beam(const Scenario& s, std::string_view id);

/// World-space origin of a beam.
Vec2 beam_origin(const Scenario& s, const Beam& b);

/// Documentation labels only: "deep" (<= 0.2), "superficial" (>= 0.8), else "intermediate".
std::string_view depth_label(double origin_depth);

/// 128-bit random id as 32 lowercase hex digits.
std::string new_id();
/// Current UTC time, ISO-8601 with milliseconds.
std::string now_utc_iso8601();

} // namespace liveia::scene
