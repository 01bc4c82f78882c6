#include "liveia/optics.hpp"

#include "liveia/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace liveia::optics {

namespace {

void require_unit(Vec2 v, const char* what)
{
    if (!is_finite(v) || std::abs(norm(v) - 1.0) > kUnitTolerance) {
        std::ostringstream msg;
        msg << what << " must be a unit vector (|v| = " << norm(v) << ")";
        throw Error(ErrorCode::Contract, msg.str());
    }
}

void require_index(double n, const char* what)
{
    if (!(n >= 0.1) || !std::isfinite(n)) {
        throw Error(ErrorCode::Contract, std::string(what) + " must be a refractive index >= 0.1");
    }
}

Rgb attenuate(const Rgb& intensity, const Rgb& k, double length)
{
    Rgb out;
    for (std::size_t i = 0; i < 3; ++i) out[i] = intensity[i] * std::exp(-k[i] * length);
    return out;
}

// Ray/circle with the numerically stable root pair; returns the smallest
// root above the self-hit epsilon, if any.
std::optional<double> circle_distance(Vec2 o, Vec2 d, Vec2 c, double r, bool on_surface)
{
    const Vec2 oc = o - c;
    const double b = dot(oc, d);
    const double cc = dot(oc, oc) - r * r;
    if (on_surface) {
        // Leaving the circle from its surface: no further hit. Otherwise the
        // far root is the chord; the near root is the start point itself.
        if (b >= 0.0) return std::nullopt;
        const double t = -b + std::sqrt(std::max(b * b - cc, 0.0));
        return t > kHitEpsilon ? std::optional<double>(t) : std::nullopt;
    }
    const double disc = b * b - cc;
    if (disc < 0.0) return std::nullopt;
    const double sq = std::sqrt(disc);
    const double q = -b - std::copysign(sq, b);
    double t1 = q;
    double t2 = q != 0.0 ? cc / q : -b;
    if (t1 > t2) std::swap(t1, t2);
    if (t1 > kHitEpsilon) return t1;
    if (t2 > kHitEpsilon) return t2;
    return std::nullopt;
}

std::optional<double> segment_distance(Vec2 o, Vec2 d, Vec2 a, Vec2 b)
{
    const Vec2 e = b - a;
    const double denom = cross(d, e);
    if (std::abs(denom) < std::numeric_limits<double>::min()) return std::nullopt;
    const Vec2 ao = a - o;
    const double t = cross(ao, e) / denom;
    const double u = cross(ao, d) / denom;
    if (t <= kHitEpsilon || u < 0.0 || u > 1.0) return std::nullopt;
    return t;
}

Vec2 segment_normal(Vec2 a, Vec2 b)
{
    const Vec2 e = normalized(b - a);
    return {-e.y, e.x};
}

} // namespace

std::string_view to_string(Event e)
{
    switch (e) {
    case Event::Refract: return "REFRACT";
    case Event::Reflect: return "REFLECT";
    case Event::Tir: return "TIR";
    case Event::Absorbed: return "ABSORBED";
    case Event::Escaped: return "ESCAPED";
    case Event::MaxDepth: return "MAX_DEPTH";
    }
    return "?";
}

std::vector<Vec2> RayPath::vertices() const
{
    std::vector<Vec2> v;
    if (segments.empty()) return v;
    v.reserve(segments.size() + 1);
    v.push_back(segments.front().start);
    for (const auto& s : segments) v.push_back(s.end);
    return v;
}

double RayPath::arclength() const
{
    double total = 0.0;
    for (const auto& s : segments) total += s.length();
    return total;
}

std::optional<Vec2> refract_direction(Vec2 incident, Vec2 normal, double n1, double n2)
{
    require_unit(incident, "incident");
    require_unit(normal, "normal");
    require_index(n1, "n1");
    require_index(n2, "n2");
    const double cos_i = -dot(incident, normal);
    if (cos_i < -kUnitTolerance) {
        throw Error(ErrorCode::Contract, "refract_direction: normal must face the incident ray");
    }
    const double eta = n1 / n2;
    const double sin2_t = eta * eta * std::max(0.0, 1.0 - cos_i * cos_i);
    if (sin2_t > 1.0) return std::nullopt;
    const double cos_t = std::sqrt(1.0 - sin2_t);
    return normalized(incident * eta + normal * (eta * cos_i - cos_t));
}

FresnelSplit fresnel_split(double theta1, double n1, double n2)
{
    if (!(theta1 >= 0.0 && theta1 < kPi / 2.0)) {
        throw Error(ErrorCode::Contract, "fresnel_split: theta1 must lie in [0, pi/2)");
    }
    require_index(n1, "n1");
    require_index(n2, "n2");
    if (n1 == n2) return {0.0, 1.0};

    const double cos_i = std::cos(theta1);
    const double sin_t = n1 / n2 * std::sin(theta1);
    if (sin_t >= 1.0) return {1.0, 0.0};
    const double cos_t = std::sqrt(1.0 - sin_t * sin_t);
    const double rs = (n1 * cos_i - n2 * cos_t) / (n1 * cos_i + n2 * cos_t);
    const double rp = (n1 * cos_t - n2 * cos_i) / (n1 * cos_t + n2 * cos_i);
    const double r = 0.5 * (rs * rs + rp * rp);
    return {r, 1.0 - r};
}

double critical_angle(double n1, double n2)
{
    require_index(n1, "n1");
    require_index(n2, "n2");
    if (!(n2 < n1)) throw Error(ErrorCode::Contract, "critical_angle: requires n1 > n2");
    return std::asin(n2 / n1);
}

std::optional<SurfaceHit> intersect_circle(const Ray& ray, Vec2 center, double radius)
{
    if (!(radius > 0.0)) throw Error(ErrorCode::Contract, "intersect_circle: radius must be > 0");
    const auto t = circle_distance(ray.origin, ray.direction, center, radius, false);
    if (!t) return std::nullopt;
    SurfaceHit hit;
    hit.point = ray.origin + ray.direction * *t;
    const Vec2 outward = (hit.point - center) / radius;
    const double c = dot(ray.direction, outward);
    if (std::abs(c) < kGrazingCosine) return std::nullopt;
    hit.normal = c < 0.0 ? outward : -outward;
    hit.distance = *t;
    return hit;
}

std::optional<SurfaceHit> intersect_segment(const Ray& ray, Vec2 a, Vec2 b)
{
    if (a == b) throw Error(ErrorCode::Validation, "intersect_segment: degenerate segment");
    const auto t = segment_distance(ray.origin, ray.direction, a, b);
    if (!t) return std::nullopt;
    const Vec2 n = segment_normal(a, b);
    const double c = dot(ray.direction, n);
    if (std::abs(c) < kGrazingCosine) return std::nullopt;
    SurfaceHit hit;
    hit.point = ray.origin + ray.direction * *t;
    hit.normal = c < 0.0 ? n : -n;
    hit.distance = *t;
    return hit;
}

// -- OpticalScene ---------------------------------------------------------------

OpticalScene OpticalScene::build(const scene::Scenario& s)
{
    scene::require_valid(s);
    OpticalScene out;
    out.scenario_ = s;
    double lo_x = 0, lo_y = 0, hi_x = 0, hi_y = 0;
    bool first = true;
    for (const auto& sp : s.spheres) {
        out.circles_.push_back({sp.center, sp.radius, sp.shell ? sp.shell->effective_medium() : sp.interior, sp.id, true});
        if (sp.shell) out.circles_.push_back({sp.center, sp.inner_radius(), sp.interior, sp.id, false});
        for (const auto& b : sp.bubbles) out.circles_.push_back({b.center, b.radius, b.medium, sp.id, false});
        for (const auto& f : sp.fractures) out.slabs_.push_back({f.a, f.b, f.width, f.medium, sp.id});

        const double x0 = sp.center.x - sp.radius, x1 = sp.center.x + sp.radius;
        const double y0 = sp.center.y - sp.radius, y1 = sp.center.y + sp.radius;
        if (first) {
            lo_x = x0; hi_x = x1; lo_y = y0; hi_y = y1;
            first = false;
        } else {
            lo_x = std::min(lo_x, x0); hi_x = std::max(hi_x, x1);
            lo_y = std::min(lo_y, y0); hi_y = std::max(hi_y, y1);
        }
    }
    if (!first) {
        out.bound_center_ = {(lo_x + hi_x) / 2.0, (lo_y + hi_y) / 2.0};
        out.bound_radius_ = std::max(1.0, std::hypot(hi_x - lo_x, hi_y - lo_y) / 2.0);
    }
    return out;
}

Medium OpticalScene::medium_at(Vec2 p) const
{
    const Circle* best = nullptr;
    for (const auto& c : circles_) {
        if (distance(p, c.center) < c.radius && (!best || c.radius < best->radius)) best = &c;
    }
    return best ? best->medium : kAir;
}

Medium OpticalScene::outside_of(std::size_t circle, Vec2 p) const
{
    const Circle* best = nullptr;
    const double r0 = circles_[circle].radius;
    for (std::size_t j = 0; j < circles_.size(); ++j) {
        if (j == circle) continue;
        const auto& c = circles_[j];
        if (c.radius > r0 && distance(p, c.center) < c.radius && (!best || c.radius < best->radius)) best = &c;
    }
    return best ? best->medium : kAir;
}

std::optional<SurfaceHit> OpticalScene::nearest_hit(const Ray& ray, int from_surface) const
{
    double best_t = std::numeric_limits<double>::infinity();
    int best_id = -1;
    const Vec2 o = ray.origin;
    const Vec2 d = ray.direction;

    for (std::size_t i = 0; i < circles_.size(); ++i) {
        const auto& c = circles_[i];
        const auto t = circle_distance(o, d, c.center, c.radius, static_cast<int>(i) == from_surface);
        if (!t || *t >= best_t) continue;
        const Vec2 outward = (o + d * *t - c.center) / c.radius;
        if (std::abs(dot(d, outward)) < kGrazingCosine) continue;
        best_t = *t;
        best_id = static_cast<int>(i);
    }
    for (std::size_t j = 0; j < slabs_.size(); ++j) {
        const int id = static_cast<int>(circles_.size() + j);
        if (id == from_surface) continue;
        const auto& s = slabs_[j];
        const auto t = segment_distance(o, d, s.a, s.b);
        if (!t || *t >= best_t) continue;
        if (std::abs(dot(d, segment_normal(s.a, s.b))) < kGrazingCosine) continue;
        best_t = *t;
        best_id = id;
    }
    if (best_id < 0) return std::nullopt;

    SurfaceHit hit;
    hit.point = o + d * best_t;
    hit.distance = best_t;
    hit.surface_id = best_id;
    if (is_slab(best_id)) {
        const auto& s = slabs_[best_id - circles_.size()];
        const Vec2 n = segment_normal(s.a, s.b);
        hit.normal = dot(d, n) < 0.0 ? n : -n;
        hit.inside = s.medium;
        hit.outside = medium_at(hit.point);
    } else {
        const auto& c = circles_[best_id];
        const Vec2 outward = normalized(hit.point - c.center);
        hit.normal = dot(d, outward) < 0.0 ? outward : -outward;
        hit.inside = c.medium;
        hit.outside = outside_of(static_cast<std::size_t>(best_id), hit.point);
    }
    return hit;
}

// -- tracing --------------------------------------------------------------------

void trace_tree(const OpticalScene& scene, const Ray& ray, const TraceLimits& limits, std::vector<TraceNode>& out)
{
    out.clear();
    if (limits.max_events < 1 || !(limits.min_intensity > 0.0)) {
        throw Error(ErrorCode::Contract, "trace: max_events must be >= 1 and min_intensity > 0");
    }
    if (!is_finite(ray.origin)) throw Error(ErrorCode::Contract, "trace: ray origin is not finite");
    require_unit(ray.direction, "ray direction");
    if (ray.intensity.min() < 0.0 || !std::isfinite(ray.intensity.max())) {
        throw Error(ErrorCode::Contract, "trace: ray intensity must be finite and >= 0");
    }

    struct Pending {
        Ray ray;
        Medium medium;
        int parent;
        int depth;
        int from;
        EventRecord arrival;
        double turn;
    };

    const double escape_base = scene.bound_radius() + std::max(1.0, scene.bound_radius());
    std::vector<Pending> stack;
    stack.push_back({ray, scene.medium_at(ray.origin), -1, 0, -1, {}, 0.0});

    while (!stack.empty()) {
        Pending p = std::move(stack.back());
        stack.pop_back();

        const int index = static_cast<int>(out.size());
        if (p.parent >= 0) out[p.parent].leaf = false;

        TraceNode node;
        node.parent = p.parent;
        node.arrival = p.arrival;
        node.turn = p.turn;
        node.attenuation = p.medium.attenuation();

        const Vec2 o = p.ray.origin;
        const Vec2 d = p.ray.direction;
        const auto hit = scene.nearest_hit(p.ray, p.from);
        if (!hit) {
            const double len = escape_base + distance(o, scene.bound_center());
            node.segment = {o, o + d * len, d, p.ray.intensity, attenuate(p.ray.intensity, node.attenuation, len)};
            node.terminal = Event::Escaped;
            out.push_back(node);
            continue;
        }

        const Rgb arriving = attenuate(p.ray.intensity, node.attenuation, hit->distance);
        node.segment = {o, hit->point, d, p.ray.intensity, arriving};
        if (arriving.max() < limits.min_intensity) {
            node.terminal = Event::Absorbed;
            out.push_back(node);
            continue;
        }
        if (p.depth >= limits.max_events) {
            node.terminal = Event::MaxDepth;
            out.push_back(node);
            continue;
        }
        out.push_back(node);

        const Vec2 n = hit->normal;
        const bool slab = scene.is_slab(hit->surface_id);
        const double n1 = p.medium.refractive_index;
        Medium beyond;
        double n2;
        if (slab) {
            beyond = p.medium;
            n2 = hit->inside.refractive_index;
        } else {
            const auto& c = scene.circles()[hit->surface_id];
            const bool entering = dot(d, hit->point - c.center) < 0.0;
            beyond = entering ? hit->inside : hit->outside;
            n2 = beyond.refractive_index;
        }

        EventRecord rec;
        rec.n_incident = n1;
        rec.n_transmitted = n2;
        rec.normal = n;
        rec.surface_id = hit->surface_id;

        const double path_len = p.ray.path_length + hit->distance;
        auto child = [&](Vec2 dir, const Rgb& intensity, const Medium& m, Event kind, double fraction) {
            EventRecord r = rec;
            r.kind = kind;
            r.fraction = fraction;
            return Pending{Ray{hit->point, dir, intensity, path_len}, m, index, p.depth + 1, hit->surface_id, r,
                           angle_between(d, dir)};
        };

        const Vec2 reflected = normalized(reflect(d, n));
        const auto refracted = refract_direction(d, n, n1, n2);
        std::vector<Pending> kids; // in exploration order: refracted first
        if (!refracted) {
            kids.push_back(child(reflected, arriving, p.medium, Event::Tir, 1.0));
        } else {
            const double cos_i = std::clamp(-dot(d, n), 0.0, 1.0);
            const FresnelSplit fs = fresnel_split(std::acos(cos_i), n1, n2);
            Rgb transmitted = arriving * fs.transmittance;
            if (slab) {
                const double cos_t = std::max(std::abs(dot(*refracted, n)), 1e-6);
                transmitted = attenuate(transmitted, hit->inside.attenuation(), scene.slabs()[hit->surface_id - scene.circles().size()].width / cos_t);
            }
            kids.push_back(child(*refracted, transmitted, beyond, Event::Refract, fs.transmittance));
            kids.push_back(child(reflected, arriving * fs.reflectance, p.medium, Event::Reflect, fs.reflectance));
        }
        std::erase_if(kids, [&](const Pending& k) { return k.ray.intensity.max() < limits.min_intensity; });
        if (kids.empty()) {
            out[index].terminal = Event::Absorbed;
            continue;
        }
        for (auto it = kids.rbegin(); it != kids.rend(); ++it) stack.push_back(std::move(*it));
    }
}

std::vector<RayPath> trace_ray(const OpticalScene& scene, const Ray& ray, const TraceLimits& limits)
{
    std::vector<TraceNode> nodes;
    trace_tree(scene, ray, limits, nodes);

    std::vector<RayPath> paths;
    std::vector<int> chain;
    for (int i = 0; i < static_cast<int>(nodes.size()); ++i) {
        if (!nodes[i].leaf) continue;
        chain.clear();
        for (int k = i; k >= 0; k = nodes[k].parent) chain.push_back(k);
        std::reverse(chain.begin(), chain.end());

        RayPath path;
        for (std::size_t c = 0; c < chain.size(); ++c) {
            const TraceNode& node = nodes[chain[c]];
            path.segments.push_back(node.segment);
            path.total_deflection += node.turn;
            if (c + 1 < chain.size()) {
                path.events.push_back(nodes[chain[c + 1]].arrival);
            } else {
                EventRecord last;
                last.kind = node.terminal;
                path.events.push_back(last);
            }
        }
        paths.push_back(std::move(path));
    }
    return paths;
}

std::vector<RayPath> trace_ray(const scene::Scenario& s, const Ray& ray, const TraceLimits& limits)
{
    return trace_ray(OpticalScene::build(s), ray, limits);
}

std::vector<Ray> beam_rays(const scene::Scenario& s, const scene::Beam& beam)
{
    if (beam.ray_count < 1) throw Error(ErrorCode::Validation, "beam '" + beam.id + "': ray_count must be >= 1");
    if (!(beam.spread >= 0.0)) throw Error(ErrorCode::Validation, "beam '" + beam.id + "': spread must be >= 0");

    Vec2 origin = scene::beam_origin(s, beam);
    if (beam.source_sphere && beam.origin_depth > 1.0 - 1e-9) {
        // A surface origin is nudged inward so the ray starts inside its sphere.
        const auto* sp = scene::find_sphere(s, *beam.source_sphere);
        origin = sp->center + unit_from_angle(beam.origin_angle) * ((1.0 - 1e-9) * sp->radius);
    }

    const int n = beam.ray_count;
    const Rgb each = beam.intensity * (1.0 / n);
    std::vector<Ray> rays;
    rays.reserve(n);
    for (int i = 0; i < n; ++i) {
        const double theta = n == 1 ? beam.direction
                                    : beam.direction - beam.spread / 2.0 + beam.spread * i / (n - 1);
        rays.push_back({origin, unit_from_angle(theta), each, 0.0});
    }
    return rays;
}

std::vector<RayPath> trace_beam(const OpticalScene& scene, const scene::Beam& beam, const TraceLimits& limits)
{
    std::vector<RayPath> all;
    const auto rays = beam_rays(scene.scenario(), beam);
    for (std::size_t i = 0; i < rays.size(); ++i) {
        auto paths = trace_ray(scene, rays[i], limits);
        for (auto& p : paths) {
            p.ray_index = i;
            all.push_back(std::move(p));
        }
    }
    return all;
}

double fan_spread(std::span<const RayPath> paths, std::size_t index)
{
    std::vector<Vec2> dirs;
    dirs.reserve(paths.size());
    for (const auto& p : paths) {
        if (index >= p.segments.size()) {
            throw Error(ErrorCode::Contract, "fan_spread: path has no segment " + std::to_string(index));
        }
        dirs.push_back(p.segments[index].direction());
    }
    double widest = 0.0;
    for (std::size_t i = 0; i < dirs.size(); ++i) {
        for (std::size_t j = i + 1; j < dirs.size(); ++j) widest = std::max(widest, angle_between(dirs[i], dirs[j]));
    }
    return widest;
}

} // namespace liveia::optics
