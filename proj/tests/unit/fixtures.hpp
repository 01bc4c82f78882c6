#pragma once

#include "liveia/scene.hpp"

#include <random>
#include <string>

namespace fixture {

using namespace liveia;
using namespace liveia::scene;

inline PsycheSphere glass_sphere(std::string id, Vec2 center = {}, double radius = 1.0, double index = 1.5)
{
    PsycheSphere sp;
    sp.id = std::move(id);
    sp.label = sp.id;
    sp.center = center;
    sp.radius = radius;
    sp.interior = {index, 0.0, {1.0, 1.0, 1.0}};
    return sp;
}

inline Scenario single_sphere(double radius = 1.0, double index = 1.5)
{
    Scenario s;
    s.id = "single";
    s.title = "one sphere";
    s.created_at = "2026-01-01T00:00:00.000Z";
    s.spheres.push_back(glass_sphere("self", {}, radius, index));
    return s;
}

/// `count` random chords of length ~0.3-0.7 R strictly inside the interior.
inline std::vector<Fracture> random_fractures(std::mt19937_64& rng, const PsycheSphere& sp, int count,
                                              const Medium& medium, double width)
{
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<Fracture> out;
    const double r = sp.inner_radius() * 0.85;
    while (static_cast<int>(out.size()) < count) {
        const double rad = r * std::sqrt(u(rng));
        const double ang = 2.0 * kPi * u(rng);
        const Vec2 mid = sp.center + unit_from_angle(ang) * rad;
        const double len = sp.radius * (0.3 + 0.4 * u(rng));
        const Vec2 dir = unit_from_angle(kPi * u(rng));
        Fracture f;
        f.a = mid - dir * (len / 2);
        f.b = mid + dir * (len / 2);
        if (distance(f.a, sp.center) >= r || distance(f.b, sp.center) >= r) continue;
        f.width = width;
        f.medium = medium;
        out.push_back(f);
    }
    return out;
}

/// A five-sphere scene exercising every field of the document.
inline Scenario five_spheres()
{
    Scenario s;
    s.id = "5f9a0c1e2d3b4a5968778695a4b3c2d1";
    s.title = "family dinner";
    s.notes = "who is left out";
    s.created_at = "2026-03-04T05:06:07.089Z";

    auto a = glass_sphere("anna", {-3.0, 0.0}, 1.5);
    a.light_level = 0.8;
    a.border_blur = 0.25;
    a.shell = Shell{0.15, {1.3, 0.1, {0.9, 0.8, 0.7}}, 0.4, {{0.0, 1.5, "#ff8800"}, {1.5, 3.1, "#0088ff"}}};
    a.fractures.push_back({{-3.9, -0.3}, {-3.0, -0.6}, 0.02, {1.0, 2.0, {1.0, 0.9, 0.9}}});
    a.bubbles.push_back({{-2.5, -0.5}, 0.3, {1.6, 12.0, {1.0, 1.0, 1.0}}});
    a.children.push_back("inner");

    auto inner = glass_sphere("inner", {-3.2, 0.4}, 0.4, 1.7);
    inner.light_level = 0.3;

    auto b = glass_sphere("ben", {1.0, 0.5}, 1.2, 1.45);
    b.light_level = 0.6;
    b.border_blur = 0.25;
    auto c = glass_sphere("cara", {4.0, 0.0}, 1.0, 1.6);
    c.light_level = 0.1;
    c.revealed = true;
    auto d = glass_sphere("dev", {1.0, 4.0}, 0.8, 1.33);

    s.spheres = {a, inner, b, c, d};

    Beam lie;
    lie.id = "lie";
    lie.source_sphere = "ben";
    lie.origin_depth = 0.85;
    lie.origin_angle = 3.0;
    lie.direction = 3.3;
    lie.spread = 0.1;
    lie.ray_count = 3;
    lie.intensity = {1.0, 0.9, 0.4};
    lie.waveform = waves::Waveform{{{2.0, 1.0, 0.0}, {7.0, 0.25, 1.5}}, "compulsion"};
    Beam hello;
    hello.id = "hello";
    hello.origin = {-6.0, 2.0};
    hello.direction = -0.3;
    hello.intensity = {0.5, 0.5, 0.5};
    s.beams = {lie, hello};
    s.sparks = {{"anna", "ben", 0.7}};
    return s;
}

} // namespace fixture
