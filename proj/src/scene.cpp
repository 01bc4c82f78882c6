#include "liveia/scene.hpp"

#include "liveia/error.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <map>
#include <random>
#include <set>
#include <sstream>

namespace liveia::scene {

namespace {

class Checker {
  public:
    void add(std::string rule, std::string id, std::string message)
    {
        out_.push_back({std::move(rule), std::move(id), std::move(message)});
    }

    void medium(const Medium& m, const std::string& id, const std::string& where)
    {
        if (!std::isfinite(m.refractive_index) || m.refractive_index < 0.1) {
            add("medium-index", id, where + ": refractive_index must be >= 0.1");
        }
        if (!std::isfinite(m.absorption) || m.absorption < 0.0) {
            add("medium-absorption", id, where + ": absorption must be >= 0");
        }
        for (std::size_t i = 0; i < 3; ++i) {
            if (!(m.tint[i] >= 0.0 && m.tint[i] <= 1.0)) {
                add("medium-tint", id, where + ": tint channels must lie in [0,1]");
                break;
            }
        }
    }

    void finite(Vec2 p, const std::string& id, const std::string& where)
    {
        if (!is_finite(p)) add("non-finite", id, where + " is not finite");
    }

    void finite(double v, const std::string& id, const std::string& where)
    {
        if (!std::isfinite(v)) add("non-finite", id, where + " is not finite");
    }

    std::vector<Violation> take() { return std::move(out_); }

  private:
    std::vector<Violation> out_;
};

bool is_hex_color(const std::string& c)
{
    if (c.size() != 7 || c[0] != '#') return false;
    return std::all_of(c.begin() + 1, c.end(), [](char ch) { return std::isxdigit(static_cast<unsigned char>(ch)); });
}

// Strict containment of a disc within another disc.
bool disc_inside(Vec2 c, double r, Vec2 outer_c, double outer_r)
{
    return distance(c, outer_c) + r < outer_r;
}

void check_sphere(Checker& chk, const PsycheSphere& sp)
{
    const std::string& id = sp.id;
    chk.finite(sp.center, id, "center");
    chk.finite(sp.radius, id, "radius");
    if (!(sp.radius > 0.0)) chk.add("sphere-radius", id, "radius must be > 0");
    if (!(sp.light_level >= 0.0) || !std::isfinite(sp.light_level)) {
        chk.add("light-level", id, "light_level must be >= 0");
    }
    if (!(sp.border_blur >= 0.0) || !std::isfinite(sp.border_blur)) {
        chk.add("border-blur", id, "border_blur must be >= 0");
    }
    chk.medium(sp.interior, id, "interior");

    if (sp.shell) {
        const Shell& sh = *sp.shell;
        if (!(sh.thickness > 0.0 && sh.thickness < 1.0)) {
            chk.add("shell-thickness", id, "shell thickness must lie in (0,1)");
        }
        if (!(sh.opacity >= 0.0 && sh.opacity <= 1.0)) {
            chk.add("shell-opacity", id, "shell opacity must lie in [0,1]");
        }
        chk.medium(sh.medium, id, "shell");
        for (const auto& sec : sh.sectors) {
            if (!is_hex_color(sec.color) || !std::isfinite(sec.start_angle) || !std::isfinite(sec.end_angle)) {
                chk.add("shell-sector", id, "sector needs finite angles and a #rrggbb color");
            }
        }
    }

    const double inner = sp.inner_radius();
    for (std::size_t i = 0; i < sp.fractures.size(); ++i) {
        const Fracture& f = sp.fractures[i];
        const std::string where = "fracture " + std::to_string(i);
        chk.finite(f.a, id, where);
        chk.finite(f.b, id, where);
        if (f.a == f.b) chk.add("fracture-degenerate", id, where + ": endpoints coincide");
        if (!(f.width > 0.0) || !std::isfinite(f.width)) chk.add("fracture-width", id, where + ": width must be > 0");
        if (!(distance(f.a, sp.center) < inner && distance(f.b, sp.center) < inner)) {
            chk.add("fracture-containment", id, where + ": endpoint outside the sphere interior");
        }
        chk.medium(f.medium, id, where);
    }
    for (std::size_t i = 0; i < sp.bubbles.size(); ++i) {
        const Bubble& b = sp.bubbles[i];
        const std::string where = "bubble " + std::to_string(i);
        chk.finite(b.center, id, where);
        if (!(b.radius > 0.0) || !std::isfinite(b.radius)) {
            chk.add("bubble-radius", id, where + ": radius must be > 0");
        } else if (!disc_inside(b.center, b.radius, sp.center, inner)) {
            chk.add("bubble-containment", id, where + ": not wholly inside the sphere interior");
        }
        chk.medium(b.medium, id, where);
    }
}

void check_beam(Checker& chk, const Beam& b, const std::set<std::string>& sphere_ids)
{
    const std::string& id = b.id;
    if (id.empty()) chk.add("missing-id", id, "beam without id");
    chk.finite(b.origin, id, "origin");
    chk.finite(b.origin_angle, id, "origin_angle");
    chk.finite(b.direction, id, "direction");
    if (!(b.origin_depth >= 0.0 && b.origin_depth <= 1.0)) {
        chk.add("beam-depth", id, "origin_depth must lie in [0,1]");
    }
    if (!(b.spread >= 0.0) || !std::isfinite(b.spread)) chk.add("beam-spread", id, "spread must be >= 0");
    if (b.ray_count < 1) chk.add("beam-ray-count", id, "ray_count must be >= 1");
    for (std::size_t i = 0; i < 3; ++i) {
        if (!(b.intensity[i] >= 0.0) || !std::isfinite(b.intensity[i])) {
            chk.add("beam-intensity", id, "intensity channels must be >= 0");
            break;
        }
    }
    if (b.source_sphere && !sphere_ids.contains(*b.source_sphere)) {
        chk.add("dangling-ref", id, "source_sphere '" + *b.source_sphere + "' does not exist");
    }
    if (b.waveform) {
        try {
            waves::validate(*b.waveform);
        } catch (const Error& e) {
            chk.add("wave-component", id, e.what());
        }
    }
}

} // namespace

std::vector<Violation> validate(const Scenario& s)
{
    Checker chk;

    if (s.parent && *s.parent == s.id) chk.add("fork-cycle", s.id, "scenario is its own parent");
    if (std::find(s.children.begin(), s.children.end(), s.id) != s.children.end()) {
        chk.add("fork-cycle", s.id, "scenario lists itself as a child");
    }
    if (s.parent && std::find(s.children.begin(), s.children.end(), *s.parent) != s.children.end()) {
        chk.add("fork-cycle", s.id, "parent also listed as child");
    }

    std::set<std::string> sphere_ids;
    for (const auto& sp : s.spheres) {
        if (sp.id.empty()) chk.add("missing-id", sp.id, "sphere without id");
        if (!sphere_ids.insert(sp.id).second) chk.add("duplicate-id", sp.id, "sphere id used twice");
        check_sphere(chk, sp);
    }

    // parent-of relation for nested spheres
    std::map<std::string, std::string> owner;
    for (const auto& sp : s.spheres) {
        for (const auto& cid : sp.children) {
            const PsycheSphere* child = find_sphere(s, cid);
            if (cid == sp.id) {
                chk.add("child-self", sp.id, "sphere lists itself as a child");
                continue;
            }
            if (!child) {
                chk.add("dangling-ref", sp.id, "child sphere '" + cid + "' does not exist");
                continue;
            }
            if (auto [it, inserted] = owner.emplace(cid, sp.id); !inserted && it->second != sp.id) {
                chk.add("child-multiple-parents", cid, "sphere nested in both '" + it->second + "' and '" + sp.id + "'");
            }
            if (!disc_inside(child->center, child->radius, sp.center, sp.radius)) {
                chk.add("child-containment", cid, "child sphere not wholly inside '" + sp.id + "'");
            }
        }
    }

    for (std::size_t i = 0; i < s.spheres.size(); ++i) {
        for (std::size_t j = i + 1; j < s.spheres.size(); ++j) {
            const auto& a = s.spheres[i];
            const auto& b = s.spheres[j];
            const auto pa = owner.find(a.id);
            const auto pb = owner.find(b.id);
            const std::string owner_a = pa == owner.end() ? "" : pa->second;
            const std::string owner_b = pb == owner.end() ? "" : pb->second;
            if (owner_a != owner_b) continue; // different nesting levels: containment rules apply
            if (distance(a.center, b.center) < a.radius + b.radius) {
                chk.add("sibling-overlap", a.id, "overlaps sibling '" + b.id + "'");
            }
        }
    }

    std::set<std::string> beam_ids;
    for (const auto& b : s.beams) {
        if (!beam_ids.insert(b.id).second) chk.add("duplicate-id", b.id, "beam id used twice");
        check_beam(chk, b, sphere_ids);
    }

    for (const auto& sp : s.sparks) {
        const std::string id = sp.first + "~" + sp.second;
        if (sp.first == sp.second) chk.add("spark-distinct", id, "spark must join two distinct spheres");
        if (!sphere_ids.contains(sp.first) || !sphere_ids.contains(sp.second)) {
            chk.add("dangling-ref", id, "spark references an unknown sphere");
        }
        if (!(sp.intensity >= 0.0) || !std::isfinite(sp.intensity)) {
            chk.add("spark-intensity", id, "spark intensity must be >= 0");
        }
    }
    return chk.take();
}

void require_valid(const Scenario& s)
{
    const auto v = validate(s);
    if (v.empty()) return;
    std::ostringstream msg;
    msg << "scenario '" << s.id << "' has " << v.size() << " violation(s)";
    for (std::size_t i = 0; i < v.size() && i < 5; ++i) {
        msg << "; " << v[i].rule << " [" << v[i].object_id << "]: " << v[i].message;
    }
    throw Error(ErrorCode::Validation, msg.str());
}

Scenario fork(Scenario& s)
{
    require_valid(s);
    Scenario child = s;
    child.id = new_id();
    child.parent = s.id;
    child.children.clear();
    child.created_at = now_utc_iso8601();
    child.view_focus.reset();
    s.children.push_back(child.id);
    return child;
}

Scenario perspective(const Scenario& s, std::string_view sphere_id)
{
    const PsycheSphere* focus = find_sphere(s, sphere_id);
    if (!focus) throw Error(ErrorCode::NotFound, "perspective: unknown sphere '" + std::string(sphere_id) + "'");

    const Vec2 shift = -focus->center;
    Scenario v = s;
    for (auto& sp : v.spheres) {
        sp.center += shift;
        for (auto& f : sp.fractures) {
            f.a += shift;
            f.b += shift;
        }
        for (auto& b : sp.bubbles) b.center += shift;
    }
    for (auto& b : v.beams) {
        if (!b.source_sphere) b.origin += shift;
    }
    auto it = std::find_if(v.spheres.begin(), v.spheres.end(),
                           [&](const PsycheSphere& sp) { return sp.id == sphere_id; });
    std::rotate(v.spheres.begin(), it, v.spheres.end());
    v.view_focus = std::string(sphere_id);
    return v;
}

Beam deepen(Scenario& s, std::string_view beam_id, double delta)
{
    if (!(delta >= 0.0)) throw Error(ErrorCode::Validation, "deepen: delta must be >= 0");
    for (auto& b : s.beams) {
        if (b.id == beam_id) {
            b.origin_depth = std::max(0.0, b.origin_depth - delta);
            return b;
        }
    }
    throw Error(ErrorCode::NotFound, "deepen: unknown beam '" + std::string(beam_id) + "'");
}

bool reveal(Scenario& s, std::string_view sphere_id, bool on)
{
    PsycheSphere* sp = find_sphere(s, sphere_id);
    if (!sp) throw Error(ErrorCode::NotFound, "reveal: unknown sphere '" + std::string(sphere_id) + "'");
    sp->revealed = on;
    return sp->revealed;
}

const PsycheSphere* find_sphere(const Scenario& s, std::string_view id)
{
    for (const auto& sp : s.spheres) {
        if (sp.id == id) return &sp;
    }
    return nullptr;
}

PsycheSphere* find_sphere(Scenario& s, std::string_view id)
{
    return const_cast<PsycheSphere*>(find_sphere(static_cast<const Scenario&>(s), id));
}

const Beam* find_beam(const Scenario& s, std::string_view id)
{
    for (const auto& b : s.beams) {
        if (b.id == id) return &b;
    }
    return nullptr;
}

Vec2 beam_origin(const Scenario& s, const Beam& b)
{
    if (!b.source_sphere) return b.origin;
    const PsycheSphere* sp = find_sphere(s, *b.source_sphere);
    if (!sp) throw Error(ErrorCode::DanglingRef, "beam '" + b.id + "': unknown source sphere");
    return sp->center + unit_from_angle(b.origin_angle) * (b.origin_depth * sp->radius);
}

std::string_view depth_label(double origin_depth)
{
    if (origin_depth <= 0.2) return "deep";
    if (origin_depth >= 0.8) return "superficial";
    return "intermediate";
}

std::string new_id()
{
    thread_local std::mt19937_64 gen{std::random_device{}() ^
                                     static_cast<std::uint64_t>(std::chrono::steady_clock::now().time_since_epoch().count())};
    char buf[33];
    std::snprintf(buf, sizeof buf, "%016llx%016llx",
                  static_cast<unsigned long long>(gen()), static_cast<unsigned long long>(gen()));
    return buf;
}

std::string now_utc_iso8601()
{
    using namespace std::chrono;
    const auto now = system_clock::now();
    const auto ms = duration_cast<milliseconds>(now.time_since_epoch()).count() % 1000;
    const std::time_t t = system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900, tm.tm_mon + 1,
                  tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec, static_cast<int>(ms));
    return buf;
}

} // namespace liveia::scene
