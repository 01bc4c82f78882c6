#include "liveia/render.hpp"

#include "liveia/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace liveia::render {

namespace {

using scene::Scenario;

std::string num(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    std::string s = buf;
    if (s == "-0.000") s = "0.000";
    // trim trailing zeros: "12.500" -> "12.5", "3.000" -> "3"
    while (!s.empty() && s.back() == '0') s.pop_back();
    if (!s.empty() && s.back() == '.') s.pop_back();
    return s;
}

std::string escape(std::string_view text)
{
    std::string out;
    for (char c : text) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        case '\'': out += "&apos;"; break;
        default: out += c;
        }
    }
    return out;
}

std::string hex_color(const Rgb& c)
{
    char buf[8];
    auto byte = [](double v) { return static_cast<int>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)); };
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", byte(c[0]), byte(c[1]), byte(c[2]));
    return buf;
}

/// World to pixel mapping; y grows downward on screen.
struct Viewport {
    double min_x{-1.0};
    double max_y{1.0};
    double scale{1.0};
    double ox{0.0};
    double oy{0.0};
    double width{0.0};
    double height{0.0};

    double x(double wx) const { return ox + (wx - min_x) * scale; }
    double y(double wy) const { return oy + (max_y - wy) * scale; }
    std::string pt(Vec2 p) const { return num(x(p.x)) + "," + num(y(p.y)); }
};

struct Box {
    double lo_x, lo_y, hi_x, hi_y;
};

Box world_box(const Scenario& s)
{
    bool any = false;
    Box b{-1.0, -1.0, 1.0, 1.0};
    auto add = [&](double x0, double y0, double x1, double y1) {
        if (!any) {
            b = {x0, y0, x1, y1};
            any = true;
            return;
        }
        b.lo_x = std::min(b.lo_x, x0);
        b.lo_y = std::min(b.lo_y, y0);
        b.hi_x = std::max(b.hi_x, x1);
        b.hi_y = std::max(b.hi_y, y1);
    };
    for (const auto& sp : s.spheres) add(sp.center.x - sp.radius, sp.center.y - sp.radius, sp.center.x + sp.radius, sp.center.y + sp.radius);
    for (const auto& bm : s.beams) {
        if (!bm.source_sphere) add(bm.origin.x, bm.origin.y, bm.origin.x, bm.origin.y);
    }
    const double w = b.hi_x - b.lo_x, h = b.hi_y - b.lo_y;
    const double pad = 0.1 * std::max({w, h, 1.0});
    return {b.lo_x - pad, b.lo_y - pad, b.hi_x + pad, b.hi_y + pad};
}

Viewport fit(const Box& b, double x0, double y0, double width)
{
    Viewport v;
    v.min_x = b.lo_x;
    v.max_y = b.hi_y;
    v.scale = width / (b.hi_x - b.lo_x);
    v.ox = x0;
    v.oy = y0;
    v.width = width;
    v.height = (b.hi_y - b.lo_y) * v.scale;
    return v;
}

struct TracedBeam {
    const scene::Beam* beam;
    std::vector<optics::RayPath> paths;
};

struct Panel {
    Scenario scenario;
    Viewport view;
    std::vector<TracedBeam> traces;
    bool focal{true};
    std::string prefix; ///< id prefix keeping defs unique across panels
};

struct Layers {
    std::string defs, spheres, interior, shells, sparks, rays, shadows, labels;
};

void draw_sphere(const Panel& p, const scene::PsycheSphere& sp, Layers& out)
{
    const Viewport& v = p.view;
    const std::string gid = p.prefix + "glow-" + escape(sp.id);
    const double level = std::clamp(sp.light_level, 0.0, 1.0);
    const Rgb tint = sp.interior.tint;
    const Rgb core = Rgb{0.06, 0.06, 0.09} + tint * (0.94 * level);
    const Rgb rim = Rgb{0.04, 0.04, 0.06} + tint * (0.45 * level);
    out.defs += "<radialGradient id=\"" + gid + "\"><stop offset=\"0\" stop-color=\"" + hex_color(core) +
                "\"/><stop offset=\"1\" stop-color=\"" + hex_color(rim) + "\"/></radialGradient>";
    std::string filter;
    if (sp.border_blur > 0.0) {
        const std::string fid = p.prefix + "blur-" + escape(sp.id);
        out.defs += "<filter id=\"" + fid + "\" x=\"-50%\" y=\"-50%\" width=\"200%\" height=\"200%\"><feGaussianBlur stdDeviation=\"" +
                    num(sp.border_blur * v.scale) + "\"/></filter>";
        filter = " filter=\"url(#" + fid + ")\"";
    }
    out.spheres += "<circle class=\"sphere\" data-id=\"" + escape(sp.id) + "\" cx=\"" + num(v.x(sp.center.x)) + "\" cy=\"" +
                   num(v.y(sp.center.y)) + "\" r=\"" + num(sp.radius * v.scale) + "\" fill=\"url(#" + gid +
                   ")\" stroke=\"#8090a0\" stroke-width=\"1\"" + filter + "/>";
}

void draw_interior(const Panel& p, const scene::PsycheSphere& sp, Layers& out)
{
    const Viewport& v = p.view;
    const bool hidden = sp.shell && !sp.revealed && sp.shell->opacity >= 1.0;
    if (hidden) return;
    for (std::size_t i = 0; i < sp.fractures.size(); ++i) {
        const auto& f = sp.fractures[i];
        out.interior += "<line class=\"fracture\" data-sphere=\"" + escape(sp.id) + "\" x1=\"" + num(v.x(f.a.x)) + "\" y1=\"" +
                        num(v.y(f.a.y)) + "\" x2=\"" + num(v.x(f.b.x)) + "\" y2=\"" + num(v.y(f.b.y)) +
                        "\" stroke=\"#d8e4ff\" stroke-width=\"" + num(std::max(1.0, f.width * v.scale)) + "\"/>";
    }
    for (const auto& b : sp.bubbles) {
        const double shade = b.is_opaque() ? 0.9 : std::clamp(b.medium.absorption / scene::kOpaqueBubbleAbsorption, 0.1, 0.9);
        out.interior += "<circle class=\"bubble\" data-sphere=\"" + escape(sp.id) + "\" cx=\"" + num(v.x(b.center.x)) +
                        "\" cy=\"" + num(v.y(b.center.y)) + "\" r=\"" + num(b.radius * v.scale) +
                        "\" fill=\"#000000\" fill-opacity=\"" + num(shade) + "\" stroke=\"#404850\"/>";
    }
}

void draw_shell(const Panel& p, const scene::PsycheSphere& sp, Layers& out)
{
    if (!sp.shell) return;
    const Viewport& v = p.view;
    const auto& sh = *sp.shell;
    const double r_out = sp.radius, r_in = sp.inner_radius();
    const double mid = 0.5 * (r_out + r_in) * v.scale;
    const double band = (r_out - r_in) * v.scale;
    const std::string cx = num(v.x(sp.center.x)), cy = num(v.y(sp.center.y));
    const std::string color = hex_color(sh.medium.tint * 0.8);
    // revealed: cross-section view, the shell no longer hides anything
    const double opacity = sp.revealed ? 0.1 : std::max(0.1, sh.opacity);
    out.shells += "<circle class=\"shell\" data-sphere=\"" + escape(sp.id) + "\" cx=\"" + cx + "\" cy=\"" + cy + "\" r=\"" +
                  num(mid) + "\" fill=\"none\" stroke=\"" + color + "\" stroke-width=\"" + num(band) +
                  "\" stroke-opacity=\"" + num(opacity) + "\"" + (sp.revealed ? " stroke-dasharray=\"6 3\"" : "") + "/>";
    for (const auto& sec : sh.sectors) {
        double span = std::fmod(sec.end_angle - sec.start_angle, kTwoPi);
        if (span < 0.0) span += kTwoPi;
        if (span == 0.0 && sec.end_angle != sec.start_angle) span = kTwoPi;
        if (span >= kTwoPi - 1e-9) {
            out.shells += "<circle class=\"sector\" cx=\"" + cx + "\" cy=\"" + cy + "\" r=\"" + num(mid) +
                          "\" fill=\"none\" stroke=\"" + escape(sec.color) + "\" stroke-width=\"" + num(band) +
                          "\" stroke-opacity=\"" + num(opacity) + "\"/>";
            continue;
        }
        const double r = 0.5 * (r_out + r_in);
        const Vec2 a = sp.center + unit_from_angle(sec.start_angle) * r;
        const Vec2 b = sp.center + unit_from_angle(sec.start_angle + span) * r;
        // counter-clockwise in the world is clockwise on screen (y flipped): sweep flag 0
        out.shells += "<path class=\"sector\" d=\"M" + v.pt(a) + " A" + num(mid) + "," + num(mid) + " 0 " +
                      (span > kPi ? "1" : "0") + " 0 " + v.pt(b) + "\" fill=\"none\" stroke=\"" + escape(sec.color) +
                      "\" stroke-width=\"" + num(band) + "\" stroke-opacity=\"" + num(opacity) + "\"/>";
    }
    if (!sp.revealed && sh.opacity > 0.0) {
        out.shells += "<circle class=\"shell-cover\" data-sphere=\"" + escape(sp.id) + "\" cx=\"" + cx + "\" cy=\"" + cy +
                      "\" r=\"" + num(r_in * v.scale) + "\" fill=\"" + color + "\" fill-opacity=\"" + num(sh.opacity) + "\"/>";
    }
}

void draw_spark(const Panel& p, const scene::Spark& spark, Layers& out)
{
    const auto* a = scene::find_sphere(p.scenario, spark.first);
    const auto* b = scene::find_sphere(p.scenario, spark.second);
    if (!a || !b) return;
    const Viewport& v = p.view;
    const Vec2 ab = b->center - a->center;
    const double d = norm(ab);
    const Vec2 u = d > 0.0 ? ab / d : Vec2{1.0, 0.0};
    const Vec2 start = a->center + u * a->radius;
    const Vec2 end = b->center - u * b->radius;
    const Vec2 ctrl = (start + end) * 0.5 + Vec2{-u.y, u.x} * (0.2 * d);
    out.sparks += "<path class=\"spark\" d=\"M" + v.pt(start) + " Q" + v.pt(ctrl) + " " + v.pt(end) +
                  "\" fill=\"none\" stroke=\"#ffd060\" stroke-width=\"2\" stroke-dasharray=\"4 3\" stroke-opacity=\"" +
                  num(std::clamp(spark.intensity, 0.05, 1.0)) + "\"/>";
}

void draw_rays(const Panel& p, double fraction, Layers& out)
{
    const Viewport& v = p.view;
    for (const auto& tb : p.traces) {
        const double peak = std::max(tb.beam->intensity.max(), 1e-300);
        const double per_ray = peak / tb.beam->ray_count;
        const std::string color = hex_color(tb.beam->intensity * (1.0 / peak));
        for (const auto& full : tb.paths) {
            const optics::RayPath path = truncate(full, fraction);
            if (path.segments.empty()) continue;
            out.rays += "<g class=\"ray\" data-beam=\"" + escape(tb.beam->id) + "\" data-ray=\"" +
                        std::to_string(path.ray_index) + "\" stroke=\"" + color + "\" stroke-width=\"1.5\">";
            for (const auto& seg : path.segments) {
                const double opacity = std::clamp(seg.intensity.max() / per_ray, 0.02, 1.0);
                // one polyline per segment: opacity follows the attenuated intensity along the path
                out.rays += "<polyline points=\"" + v.pt(seg.start) + " " + v.pt(seg.end) +
                            "\" fill=\"none\" stroke-opacity=\"" + num(opacity) + "\"/>";
            }
            out.rays += "</g>";
        }
    }
}

void draw_overlays(const Panel& p, const Scenario& original, const std::vector<radiance::Result>& overlays, Layers& out)
{
    const Viewport& v = p.view;
    for (const auto& ov : overlays) {
        const auto* now = scene::find_sphere(p.scenario, ov.grid.sphere_id);
        const auto* then = scene::find_sphere(original, ov.grid.sphere_id);
        if (!now || !then) continue;
        const Vec2 shift = now->center - then->center;
        const auto& g = ov.grid;
        for (const auto& region : ov.report.shadow_regions) {
            for (std::size_t k : region) {
                const int i = static_cast<int>(k % g.n), j = static_cast<int>(k / g.n);
                const Vec2 lo = g.origin + shift + Vec2{i * g.cell_size, (j + 1) * g.cell_size};
                out.shadows += "<rect class=\"shadow\" x=\"" + num(v.x(lo.x)) + "\" y=\"" + num(v.y(lo.y)) + "\" width=\"" +
                               num(g.cell_size * v.scale) + "\" height=\"" + num(g.cell_size * v.scale) +
                               "\" fill=\"#000000\" fill-opacity=\"0.45\"/>";
            }
        }
    }
}

void draw_labels(const Panel& p, const std::optional<std::string>& focus, Layers& out)
{
    const Viewport& v = p.view;
    for (const auto& sp : p.scenario.spheres) {
        if (focus && sp.id == *focus) {
            out.labels += "<circle class=\"focus\" cx=\"" + num(v.x(sp.center.x)) + "\" cy=\"" + num(v.y(sp.center.y)) +
                          "\" r=\"" + num(sp.radius * v.scale + 4.0) + "\" fill=\"none\" stroke=\"#ffffff\" stroke-width=\"2\"/>";
        }
        if (sp.label.empty()) continue;
        out.labels += "<text x=\"" + num(v.x(sp.center.x)) + "\" y=\"" + num(v.y(sp.center.y + sp.radius) - 4.0) +
                      "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" fill=\"#e0e6f0\">" +
                      escape(sp.label) + "</text>";
    }
}

void draw_panel(const Panel& p, const Scenario& original, const Options& opts, double fraction, Layers& out)
{
    for (const auto& sp : p.scenario.spheres) draw_sphere(p, sp, out);
    for (const auto& sp : p.scenario.spheres) draw_interior(p, sp, out);
    for (const auto& sp : p.scenario.spheres) draw_shell(p, sp, out);
    for (const auto& spark : p.scenario.sparks) draw_spark(p, spark, out);
    draw_rays(p, fraction, out);
    if (p.focal) draw_overlays(p, original, opts.overlays, out);
    draw_labels(p, p.focal && opts.mode == Mode::Perspective ? opts.focus : std::nullopt, out);
    if (opts.mode == Mode::Overview) {
        const Viewport& v = p.view;
        out.labels += "<rect class=\"panel" + std::string(p.focal ? " focal" : "") + "\" x=\"" + num(v.ox) + "\" y=\"" +
                      num(v.oy) + "\" width=\"" + num(v.width) + "\" height=\"" + num(v.height) +
                      "\" fill=\"none\" stroke=\"" + (p.focal ? "#ffffff" : "#506070") + "\" stroke-width=\"" +
                      (p.focal ? "2" : "1") + "\"/><text x=\"" + num(v.ox + 4.0) + "\" y=\"" + num(v.oy + 14.0) +
                      "\" font-family=\"sans-serif\" font-size=\"11\" fill=\"#c0c8d0\">" + escape(p.scenario.title) + "</text>";
    }
}

std::vector<TracedBeam> trace_all(const Scenario& s, const Options& opts)
{
    std::vector<TracedBeam> out;
    if (!opts.rays || s.beams.empty()) return out;
    const auto scene = optics::OpticalScene::build(s);
    for (const auto& b : s.beams) out.push_back({&b, optics::trace_beam(scene, b, opts.limits)});
    return out;
}

struct Prepared {
    std::vector<Panel> panels;
    double width{0.0};
    double height{0.0};
};

Prepared prepare(const Scenario& s, const Options& opts, const Timeline* timeline)
{
    if (opts.width < 16) throw Error(ErrorCode::Validation, "render: width must be >= 16");
    scene::require_valid(s);
    Prepared out;
    out.width = opts.width;

    if (opts.mode == Mode::Overview) {
        std::vector<const Scenario*> row;
        if (timeline) for (const auto& a : timeline->ancestors) row.push_back(&a);
        const std::size_t focal_index = row.size();
        row.push_back(&s);
        if (timeline) for (const auto& d : timeline->descendants) row.push_back(&d);
        // past to the left, futures to the right
        const double gap = 12.0;
        const double cell = (opts.width - gap * (row.size() + 1)) / row.size();
        if (cell < 8.0) throw Error(ErrorCode::Validation, "render: overview too wide for the requested width");
        out.panels.reserve(row.size());
        for (std::size_t i = 0; i < row.size(); ++i) {
            Panel p;
            p.scenario = *row[i];
            p.focal = i == focal_index;
            p.prefix = "p" + std::to_string(i) + "-";
            p.view = fit(world_box(p.scenario), gap + i * (cell + gap), gap, cell);
            out.height = std::max(out.height, p.view.height + 2 * gap);
            out.panels.push_back(std::move(p));
        }
        for (auto& p : out.panels) p.traces = trace_all(p.scenario, opts);
        return out;
    }

    Panel p;
    if (opts.mode == Mode::Perspective) {
        if (!opts.focus) throw Error(ErrorCode::Validation, "render: perspective mode needs a focus sphere");
        p.scenario = scene::perspective(s, *opts.focus);
    } else {
        p.scenario = s;
    }
    p.view = fit(world_box(p.scenario), 0.0, 0.0, opts.width);
    out.height = p.view.height;
    out.panels.push_back(std::move(p));
    out.panels.back().traces = trace_all(out.panels.back().scenario, opts);
    return out;
}

std::string assemble(const Prepared& prep, const Scenario& original, const Options& opts, double fraction)
{
    Layers layers;
    for (const auto& p : prep.panels) draw_panel(p, original, opts, fraction, layers);

    std::string svg = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" + num(prep.width) + "\" height=\"" +
           num(prep.height) + "\" viewBox=\"0 0 " + num(prep.width) + " " + num(prep.height) + "\">";
    if (!layers.defs.empty()) svg += "<defs>" + layers.defs + "</defs>";
    svg += "<g id=\"layer-background\"><rect x=\"0\" y=\"0\" width=\"" + num(prep.width) + "\" height=\"" +
           num(prep.height) + "\" fill=\"#0b0d12\"/></g>";
    auto layer = [&](const char* name, const std::string& body) {
        if (!body.empty()) svg += std::string("<g id=\"layer-") + name + "\">" + body + "</g>";
    };
    layer("spheres", layers.spheres);
    layer("interior", layers.interior);
    layer("shells", layers.shells);
    layer("sparks", layers.sparks);
    layer("rays", layers.rays);
    layer("shadows", layers.shadows);
    layer("labels", layers.labels);
    svg += "</svg>\n";
    return svg;
}

} // namespace

Mode parse_mode(std::string_view text)
{
    if (text == "view") return Mode::View;
    if (text == "overview") return Mode::Overview;
    if (text == "perspective") return Mode::Perspective;
    throw Error(ErrorCode::Validation, "unknown render mode '" + std::string(text) + "'");
}

std::string_view to_string(Mode m)
{
    switch (m) {
    case Mode::View: return "view";
    case Mode::Overview: return "overview";
    case Mode::Perspective: return "perspective";
    }
    return "view";
}

optics::RayPath truncate(const optics::RayPath& path, double fraction)
{
    if (fraction >= 1.0) return path;
    optics::RayPath out;
    out.ray_index = path.ray_index;
    if (!(fraction > 0.0)) return out;
    const double cut = fraction * path.arclength();
    double acc = 0.0;
    for (std::size_t k = 0; k < path.segments.size(); ++k) {
        const auto& seg = path.segments[k];
        const double len = seg.length();
        if (acc + len <= cut) {
            out.segments.push_back(seg);
            out.events.push_back(path.events[k]);
            out.total_deflection += k == 0 ? 0.0 : angle_between(path.segments[k - 1].heading, seg.heading);
            acc += len;
            continue;
        }
        optics::Segment part = seg;
        const double t = cut - acc;
        part.end = seg.start + seg.heading * t;
        for (std::size_t c = 0; c < 3; ++c) {
            part.end_intensity[c] = seg.intensity[c] > 0.0 ? seg.intensity[c] * std::pow(seg.end_intensity[c] / seg.intensity[c], t / len) : 0.0;
        }
        out.segments.push_back(part);
        if (k > 0) out.total_deflection += angle_between(path.segments[k - 1].heading, seg.heading);
        break;
    }
    return out;
}

std::string render_svg(const Scenario& s, const Options& opts, const Timeline* timeline)
{
    return assemble(prepare(s, opts, timeline), s, opts, 1.0);
}

std::vector<std::string> render_frames(const Scenario& s, int steps, const Options& opts, const Timeline* timeline)
{
    if (steps < 1) throw Error(ErrorCode::Validation, "frames: steps must be >= 1");
    const Prepared prep = prepare(s, opts, timeline);
    std::vector<std::string> frames;
    frames.reserve(steps);
    for (int k = 1; k <= steps; ++k) frames.push_back(assemble(prep, s, opts, static_cast<double>(k) / steps));
    return frames;
}

} // namespace liveia::render
