#pragma once

#include "liveia/medium.hpp"
#include "liveia/scene.hpp"
#include "liveia/vec2.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace liveia::optics {

/// Self-hit epsilon on intersection distances (scene units).
inline constexpr double kHitEpsilon = 1e-9;
/// |incident . normal| below this is a grazing hit and is ignored.
inline constexpr double kGrazingCosine = 1e-9;
/// Tolerance on |v| = 1 for direction and normal arguments.
inline constexpr double kUnitTolerance = 1e-9;

struct Ray {
    Vec2 origin;
    Vec2 direction{1.0, 0.0}; ///< unit
    Rgb intensity{1.0, 1.0, 1.0};
    double path_length{0.0};
};

struct SurfaceHit {
    Vec2 point;
    Vec2 normal;      ///< unit, oriented against the incident ray
    double distance{0.0};
    Medium inside{};  ///< medium on the inner side of the surface
    Medium outside{}; ///< medium on the outer side
    int surface_id{-1};
};

enum class Event { Refract, Reflect, Tir, Absorbed, Escaped, MaxDepth };

std::string_view to_string(Event e);

struct Segment {
    Vec2 start;
    Vec2 end;
    Vec2 heading;      ///< unit direction of travel (exact, not re-derived from endpoints)
    Rgb intensity;     ///< at start
    Rgb end_intensity; ///< at end, after attenuation along the segment

    double length() const { return distance(start, end); }
    Vec2 direction() const { return heading; }
};

/// What happened at the end of a segment.
struct EventRecord {
    Event kind{Event::Escaped};
    double n_incident{1.0};    ///< index on the incident side (interface events)
    double n_transmitted{1.0}; ///< index on the far side / of the fracture slab
    Vec2 normal;               ///< against the incident ray (interface events)
    double fraction{1.0};      ///< Fresnel share carried by this branch
    int surface_id{-1};
};

/// One root-to-leaf branch of a trace. events[k] happens at segments[k].end.
struct RayPath {
    std::vector<Segment> segments;
    std::vector<EventRecord> events;
    double total_deflection{0.0}; ///< sum of absolute turning angles, radians
    std::size_t ray_index{0};     ///< which emitted ray (beam traces)

    std::vector<Vec2> vertices() const;
    double arclength() const;
};

struct TraceLimits {
    int max_events{32};
    double min_intensity{1e-3};
};

/// Snell refraction. Returns std::nullopt on total internal reflection.
/// `normal` must face the incoming ray (incident . normal <= 0).
std::optional<Vec2> refract_direction(Vec2 incident, Vec2 normal, double n1, double n2);

struct FresnelSplit {
    double reflectance{0.0};
    double transmittance{1.0};
};

/// Unpolarised Fresnel split (mean of s and p reflectances) for incidence
/// angle theta1 in [0, pi/2). Reflectance is 1 at and beyond the critical angle.
FresnelSplit fresnel_split(double theta1, double n1, double n2);

/// Critical angle for light going from n1 into n2 < n1.
double critical_angle(double n1, double n2);

/// Nearest forward hit on a circle. Grazing hits are misses.
std::optional<SurfaceHit> intersect_circle(const Ray& ray, Vec2 center, double radius);

/// Nearest forward hit on the segment a-b. Throws Error(Validation) if a == b.
std::optional<SurfaceHit> intersect_segment(const Ray& ray, Vec2 a, Vec2 b);

/// A validated scenario compiled into flat surface lists for tracing.
class OpticalScene {
  public:
    struct Circle {
        Vec2 center;
        double radius{1.0};
        Medium medium{};     ///< medium enclosed by the circle (innermost wins)
        std::string owner;   ///< sphere id
        bool sphere_boundary{false};
    };
    struct Slab {
        Vec2 a;
        Vec2 b;
        double width{0.0};
        Medium medium{};
        std::string owner;
    };

    /// Validates and compiles; throws Error(Validation) for invalid scenarios.
    static OpticalScene build(const scene::Scenario& s);

    const scene::Scenario& scenario() const { return scenario_; }
    const std::vector<Circle>& circles() const { return circles_; }
    const std::vector<Slab>& slabs() const { return slabs_; }

    /// Medium of the innermost circle strictly containing p (air outside all).
    Medium medium_at(Vec2 p) const;

    Vec2 bound_center() const { return bound_center_; }
    double bound_radius() const { return bound_radius_; }

    /// Nearest surface hit along `ray`, skipping the surface it starts on.
    std::optional<SurfaceHit> nearest_hit(const Ray& ray, int from_surface) const;

    bool is_slab(int surface_id) const { return surface_id >= static_cast<int>(circles_.size()); }

  private:
    Medium outside_of(std::size_t circle, Vec2 p) const;

    scene::Scenario scenario_;
    std::vector<Circle> circles_;
    std::vector<Slab> slabs_;
    Vec2 bound_center_;
    double bound_radius_{1.0};
};

/// One segment of a trace tree. Nodes are stored in depth-first preorder,
/// refracted child before reflected child.
struct TraceNode {
    Segment segment;
    Rgb attenuation;          ///< per-channel k along the segment
    EventRecord arrival;      ///< interface event that spawned this branch (unused at root)
    Event terminal{Event::Escaped}; ///< meaningful for leaves only
    int parent{-1};
    bool leaf{true};
    double turn{0.0};         ///< turning angle from the parent's direction
};

/// Branching trace into a flat node list (cleared first).
void trace_tree(const OpticalScene& scene, const Ray& ray, const TraceLimits& limits,
                std::vector<TraceNode>& out);

/// Every root-to-leaf branch of the trace, in depth-first order.
std::vector<RayPath> trace_ray(const OpticalScene& scene, const Ray& ray, const TraceLimits& limits = {});
std::vector<RayPath> trace_ray(const scene::Scenario& scene, const Ray& ray, const TraceLimits& limits = {});

/// The rays a beam emits: evenly spaced over [dir - spread/2, dir + spread/2],
/// each carrying intensity / ray_count.
std::vector<Ray> beam_rays(const scene::Scenario& s, const scene::Beam& beam);

std::vector<RayPath> trace_beam(const OpticalScene& scene, const scene::Beam& beam, const TraceLimits& limits = {});

/// Largest pairwise angle between the directions of segment `index` across paths.
double fan_spread(std::span<const RayPath> paths, std::size_t index);

} // namespace liveia::optics
