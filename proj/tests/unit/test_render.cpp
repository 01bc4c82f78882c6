#include "doctest.h"

#include "fixtures.hpp"

#include "liveia/error.hpp"
#include "liveia/render.hpp"

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include <regex>
#include <sstream>

using namespace liveia;
using liveia::scene::Scenario;
namespace render = liveia::render;

namespace {

/// Throws if the document is not well-formed XML.
void parse_xml(const std::string& svg)
{
    std::istringstream in(svg);
    boost::property_tree::ptree tree;
    boost::property_tree::read_xml(in, tree);
    REQUIRE(tree.count("svg") == 1);
}

int count(const std::string& haystack, const std::string& needle)
{
    int n = 0;
    for (auto pos = haystack.find(needle); pos != std::string::npos; pos = haystack.find(needle, pos + 1)) ++n;
    return n;
}

std::vector<std::string> layers(const std::string& svg)
{
    std::vector<std::string> out;
    static const std::regex re("<g id=\"layer-([a-z]+)\"");
    for (auto it = std::sregex_iterator(svg.begin(), svg.end(), re); it != std::sregex_iterator(); ++it) out.push_back((*it)[1]);
    return out;
}

/// Sum of drawn ray lengths in pixels.
double drawn_ray_length(const std::string& svg)
{
    static const std::regex re("<polyline points=\"([-0-9.]+),([-0-9.]+) ([-0-9.]+),([-0-9.]+)\"");
    double total = 0.0;
    for (auto it = std::sregex_iterator(svg.begin(), svg.end(), re); it != std::sregex_iterator(); ++it) {
        const auto& m = *it;
        total += std::hypot(std::stod(m[3]) - std::stod(m[1]), std::stod(m[4]) - std::stod(m[2]));
    }
    return total;
}

Scenario shelled(double opacity, bool revealed)
{
    auto s = fixture::single_sphere();
    auto& sp = s.spheres[0];
    sp.shell = scene::Shell{0.2, {1.4, 0.0, {0.8, 0.8, 0.9}}, opacity, {}};
    sp.fractures.push_back({{-0.3, 0.0}, {0.3, 0.1}, 0.02, {1.0, 0.0, {1.0, 1.0, 1.0}}});
    sp.revealed = revealed;
    return s;
}

} // namespace

TEST_CASE("empty scenario renders the background layer only")
{
    Scenario s;
    s.id = "empty";
    const auto svg = render::render_svg(s, {});
    parse_xml(svg);
    CHECK(layers(svg) == std::vector<std::string>{"background"});
    CHECK(svg.find("<defs>") == std::string::npos);
}

TEST_CASE("full scene is well-formed and carries every element kind")
{
    const auto s = fixture::five_spheres();
    const auto svg = render::render_svg(s, {});
    parse_xml(svg);
    CHECK(layers(svg) == std::vector<std::string>{"background", "spheres", "interior", "shells", "sparks", "rays", "labels"});
    CHECK(count(svg, "<radialGradient") == 5);
    CHECK(count(svg, "<feGaussianBlur") == 2);
    CHECK(count(svg, "class=\"spark\"") == 1);
    CHECK(count(svg, "class=\"sector\"") == 2);
    CHECK(count(svg, "<g class=\"ray\" data-beam=\"lie\"") >= 3);
    CHECK(count(svg, "<g class=\"ray\" data-beam=\"hello\"") >= 1);
    CHECK(render::render_svg(s, {}) == svg);

    render::Options no_rays;
    no_rays.rays = false;
    CHECK(render::render_svg(s, no_rays).find("layer-rays") == std::string::npos);
}

TEST_CASE("labels are escaped")
{
    auto s = fixture::single_sphere();
    s.spheres[0].label = "<me> & \"you\"";
    const auto svg = render::render_svg(s, {});
    parse_xml(svg);
    CHECK(svg.find("&lt;me&gt; &amp; &quot;you&quot;") != std::string::npos);
}

TEST_CASE("reveal toggles interior visibility under an opaque shell")
{
    const auto hidden = render::render_svg(shelled(1.0, false), {});
    CHECK(count(hidden, "class=\"fracture\"") == 0);
    CHECK(count(hidden, "class=\"shell-cover\"") == 1);

    const auto shown = render::render_svg(shelled(1.0, true), {});
    CHECK(count(shown, "class=\"fracture\"") == 1);
    CHECK(count(shown, "class=\"shell-cover\"") == 0);
    CHECK(shown.find("stroke-dasharray=\"6 3\"") != std::string::npos);

    // a translucent shell covers the interior at its own opacity
    const auto veiled = render::render_svg(shelled(0.4, false), {});
    CHECK(count(veiled, "class=\"fracture\"") == 1);
    CHECK(veiled.find("class=\"shell-cover\"") != std::string::npos);
    CHECK(veiled.find("fill-opacity=\"0.4\"") != std::string::npos);
}

TEST_CASE("truncate keeps a prefix of the requested arclength")
{
    const auto s = fixture::five_spheres();
    const auto scene = optics::OpticalScene::build(s);
    const auto paths = optics::trace_beam(scene, s.beams[0]);
    REQUIRE(!paths.empty());
    for (const auto& p : paths) {
        CHECK(render::truncate(p, 1.0).segments.size() == p.segments.size());
        CHECK(render::truncate(p, 0.0).segments.empty());
        for (double f : {0.1, 0.37, 0.5, 0.9}) {
            const auto cut = render::truncate(p, f);
            CHECK(cut.arclength() == doctest::Approx(f * p.arclength()).epsilon(1e-9));
            REQUIRE(cut.segments.size() <= p.segments.size());
            CHECK(cut.events.size() + 1 >= cut.segments.size());
            for (std::size_t k = 0; k < cut.segments.size(); ++k) {
                CHECK(cut.segments[k].start == p.segments[k].start);
                CHECK(cut.segments[k].heading == p.segments[k].heading);
            }
        }
    }
}

TEST_CASE("frames grow monotonically and the last equals the full render")
{
    const auto s = fixture::five_spheres();
    const auto frames = render::render_frames(s, 4, {});
    REQUIRE(frames.size() == 4);
    CHECK(frames.back() == render::render_svg(s, {}));
    double prev = 0.0;
    for (const auto& f : frames) {
        parse_xml(f);
        const double len = drawn_ray_length(f);
        CHECK(len > prev);
        prev = len;
    }
    CHECK(render::render_frames(s, 1, {}).front() == frames.back());
    CHECK_THROWS_AS(render::render_frames(s, 0, {}), Error);
}

TEST_CASE("perspective mode centres and highlights the focus")
{
    const auto s = fixture::five_spheres();
    render::Options opts;
    opts.mode = render::Mode::Perspective;
    CHECK_THROWS_AS(render::render_svg(s, opts), Error);
    opts.focus = "ben";
    const auto svg = render::render_svg(s, opts);
    parse_xml(svg);
    CHECK(count(svg, "class=\"focus\"") == 1);
    // the focus is listed, hence drawn, first
    const std::string expect = "class=\"sphere\" data-id=\"ben\"";
    CHECK(svg.compare(svg.find("class=\"sphere\""), expect.size(), expect) == 0);

    opts.focus = "nobody";
    CHECK_THROWS_AS(render::render_svg(s, opts), Error);
}

TEST_CASE("overview lays ancestors left and descendants right")
{
    auto mk = [](std::string title, double x) {
        auto s = fixture::single_sphere();
        s.title = std::move(title);
        s.spheres[0].center = {x, 0.0};
        return s;
    };
    render::Timeline t;
    t.ancestors = {mk("root", 0.0), mk("parent", 1.0)};
    t.descendants = {mk("child", 2.0), mk("grandchild", 3.0)};
    const auto focal = mk("now", 0.5);

    render::Options opts;
    opts.mode = render::Mode::Overview;
    const auto svg = render::render_svg(focal, opts, &t);
    parse_xml(svg);

    static const std::regex panel_re("<rect class=\"panel( focal)?\" x=\"([-0-9.]+)\"[^>]*/><text[^>]*>([^<]*)</text>");
    std::vector<std::pair<double, std::string>> panels;
    std::string focal_title;
    for (auto it = std::sregex_iterator(svg.begin(), svg.end(), panel_re); it != std::sregex_iterator(); ++it) {
        panels.emplace_back(std::stod((*it)[2]), (*it)[3]);
        if ((*it)[1].matched) focal_title = (*it)[3];
    }
    REQUIRE(panels.size() == 5);
    CHECK(focal_title == "now");
    const std::vector<std::string> order{"root", "parent", "now", "child", "grandchild"};
    for (std::size_t i = 0; i < panels.size(); ++i) {
        CHECK(panels[i].second == order[i]);
        if (i > 0) CHECK(panels[i].first > panels[i - 1].first);
    }
    // gradient ids stay unique across miniatures
    CHECK(count(svg, "id=\"p0-glow-self\"") == 1);
    CHECK(count(svg, "id=\"p4-glow-self\"") == 1);

    // without a timeline the overview is just the focal miniature
    const auto alone = render::render_svg(focal, opts);
    CHECK(count(alone, "class=\"panel focal\"") == 1);
}

TEST_CASE("shadow overlays draw one rect per shadow cell")
{
    auto s = fixture::single_sphere();
    s.spheres[0].light_level = 1.0;
    radiance::Result r;
    r.grid = radiance::make_grid(s.spheres[0], 8);
    r.report.shadow_regions = {{0, 1, 8}, {63}};
    render::Options opts;
    opts.overlays.push_back(r);
    const auto svg = render::render_svg(s, opts);
    parse_xml(svg);
    CHECK(count(svg, "class=\"shadow\"") == 4);
    CHECK(layers(svg).back() == "labels");
}

TEST_CASE("mode names and argument errors")
{
    for (auto m : {render::Mode::View, render::Mode::Overview, render::Mode::Perspective})
        CHECK(render::parse_mode(render::to_string(m)) == m);
    CHECK_THROWS_AS(render::parse_mode("side"), Error);

    render::Options tiny;
    tiny.width = 4;
    CHECK_THROWS_AS(render::render_svg(fixture::single_sphere(), tiny), Error);

    auto bad = fixture::single_sphere();
    bad.spheres[0].radius = -1.0;
    try {
        render::render_svg(bad, {});
        FAIL("expected a validation error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::Validation);
    }
}
