// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
// Expected values come from the oracles in tests/unit, not from the library.

#include "fixtures.hpp"
#include "oracles.hpp"

#include "liveia/optics.hpp"
#include "liveia/radiance.hpp"
#include "liveia/render.hpp"
#include "liveia/serialize.hpp"
#include "liveia/service.hpp"
#include "liveia/store.hpp"
#include "liveia/waves.hpp"

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <httplib.h>

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <future>
#include <random>
#include <set>
#include <sstream>
#include <thread>

using namespace liveia;
using optics::Event;
using optics::Ray;
using optics::RayPath;
using serial::json;

namespace {

constexpr double deg = kPi / 180.0;

/// Collects failed expectations for one criterion.
struct Check {
    std::vector<std::string> failures;

    void expect(bool ok, const std::string& what)
    {
        if (!ok) failures.push_back(what);
    }
};

std::string fmt(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

Ray ray(Vec2 o, Vec2 d) { return Ray{o, normalized(d), {1.0, 1.0, 1.0}, 0.0}; }

struct TempDir {
    std::filesystem::path path;
    TempDir()
    {
        std::string tmpl = (std::filesystem::temp_directory_path() / "liveia-accept-XXXXXX").string();
        if (!::mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
        path = tmpl;
    }
    ~TempDir() { std::filesystem::remove_all(path); }
};

// 1. Analytic optics.
void optics_suite(Check& c)
{
    const double critical = optics::critical_angle(1.5, 1.0) / deg;
    const double oracle_critical = std::asin(1.0 / 1.5) / deg;
    c.expect(std::abs(critical - oracle_critical) <= 1e-6, "critical angle " + fmt(critical) + " vs asin(1/1.5)");
    c.expect(std::abs(critical - 41.8103) < 5e-5, "critical angle does not round to 41.8103 deg");

    const double r0 = optics::fresnel_split(0.0, 1.0, 1.5).reflectance;
    c.expect(std::abs(r0 - 0.04) <= 1e-9, "normal reflectance " + fmt(r0));
    c.expect(std::abs(oracle::normal_reflectance(1.0, 1.5) - 0.04) <= 1e-9, "oracle normal reflectance");

    double worst_sum = 0.0, worst_oracle = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const double theta = (kPi / 2) * i / 1000.0;
        for (auto [n1, n2] : {std::pair{1.0, 1.5}, std::pair{1.5, 1.0}}) {
            const auto f = optics::fresnel_split(theta, n1, n2);
            worst_sum = std::max(worst_sum, std::abs(f.reflectance + f.transmittance - 1.0));
            worst_oracle = std::max(worst_oracle, std::abs(f.reflectance - oracle::fresnel_r(theta, n1, n2)));
        }
    }
    c.expect(worst_sum <= 1e-12, "R+T residual " + fmt(worst_sum));
    c.expect(worst_oracle <= 1e-9, "Fresnel vs textbook formulas " + fmt(worst_oracle));

    const auto s = fixture::five_spheres();
    const auto scene = optics::OpticalScene::build(s);
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> x(-5.0, 5.5), y(-2.0, 5.0), a(0.0, kTwoPi);
    double worst = 0.0;
    std::size_t refractions = 0;
    for (int i = 0; i < 10000; ++i) {
        for (const auto& p : optics::trace_ray(scene, ray({x(rng), y(rng)}, unit_from_angle(a(rng))))) {
            for (std::size_t k = 0; k + 1 < p.segments.size(); ++k) {
                const auto& ev = p.events[k];
                if (ev.kind != Event::Refract) continue;
                ++refractions;
                const double s1 = std::abs(cross(p.segments[k].direction(), ev.normal));
                const double s2 = std::abs(cross(p.segments[k + 1].direction(), ev.normal));
                worst = std::max(worst, std::abs(ev.n_incident * s1 - ev.n_transmitted * s2));
            }
        }
    }
    c.expect(refractions > 10000, "too few refractions sampled: " + std::to_string(refractions));
    c.expect(worst < 1e-9, "Snell residual " + fmt(worst));
}

// 2. Centre versus periphery.
void centre_periphery(Check& c)
{
    const auto s = fixture::single_sphere();
    const auto scene = optics::OpticalScene::build(s);
    double worst = 0.0;
    for (int i = 0; i < 360; ++i) {
        const auto p = optics::trace_ray(scene, ray({}, unit_from_angle(i * deg))).front();
        const bool exits = !p.events.empty() && p.events.front().kind == Event::Refract;
        c.expect(exits, "centre ray " + std::to_string(i) + " did not exit");
        worst = std::max(worst, p.total_deflection);
    }
    c.expect(worst < 1e-9, "centre deflection " + fmt(worst));

    const double critical = std::asin(1.0 / 1.5);
    double previous = -1.0;
    int tir = 0, refracted = 0;
    for (int i = 0; i <= 180; ++i) {
        const double phi = i * 0.5 * deg; // angle away from radial
        const double incidence = std::asin(0.9 * std::sin(phi));
        const RayPath p = optics::trace_ray(scene, ray({0.9, 0.0}, unit_from_angle(phi))).front();
        if (incidence > critical + 1e-9) {
            c.expect(p.events.front().kind == Event::Tir, "no TIR at phi=" + fmt(phi));
            ++tir;
        } else if (incidence < critical - 1e-9) {
            c.expect(p.events.front().kind == Event::Refract, "no exit at phi=" + fmt(phi));
            c.expect(p.total_deflection > previous, "deflection not increasing at phi=" + fmt(phi));
            const double expected = oracle::snell_angle(incidence, 1.5, 1.0) - incidence;
            c.expect(std::abs(p.total_deflection - expected) < 1e-9, "deflection off the Snell oracle at phi=" + fmt(phi));
            previous = p.total_deflection;
            ++refracted;
        }
    }
    c.expect(tir > 0 && refracted > 0, "sweep did not cover both regimes");
}

// 3. Focusing and divergence.
void focusing(Check& c)
{
    const double R = 1.0;
    const auto s = fixture::single_sphere(R);
    const auto scene = optics::OpticalScene::build(s);
    for (int i = -20; i <= 20; ++i) {
        if (i == 0) continue;
        const double h = 0.1 * R * i / 20.0;
        const auto paths = optics::trace_ray(scene, ray({0.0, h}, {1.0, 0.0}));
        const auto it = std::find_if(paths.begin(), paths.end(), [](const RayPath& p) {
            return p.events.front().kind == Event::Reflect && p.segments.size() > 1;
        });
        if (it == paths.end()) {
            c.expect(false, "no wall reflection at h=" + fmt(h));
            continue;
        }
        const auto& seg = it->segments[1];
        const double crossing = seg.start.x - seg.start.y / seg.direction().y * seg.direction().x;
        c.expect(std::abs(crossing - oracle::mirror_axis_crossing(h, R)) < 1e-9, "crossing off the mirror oracle at h=" + fmt(h));
        const double from_wall = R - crossing;
        c.expect(std::abs(from_wall - 0.5 * R) <= 0.05 * 0.5 * R, "axis crossing " + fmt(from_wall) + "R from the wall");
    }

    auto fan = fixture::single_sphere(R);
    scene::Beam b;
    b.id = "fan";
    b.source_sphere = "self";
    b.origin_depth = 0.8;
    b.spread = 0.2;
    b.ray_count = 21;
    fan.beams.push_back(b);
    std::vector<RayPath> exits;
    for (const auto& p : optics::trace_beam(optics::OpticalScene::build(fan), b)) {
        if (p.events.front().kind == Event::Refract && (exits.empty() || exits.back().ray_index != p.ray_index)) exits.push_back(p);
    }
    c.expect(exits.size() == 21, "fan exits: " + std::to_string(exits.size()));
    if (exits.size() == 21) {
        const double spread = optics::fan_spread(exits, 1);
        c.expect(spread >= 0.2, "exit spread " + fmt(spread));
    }
}

// 4. Fractures, uniformity and the opaque bubble.
constexpr double kR = 10.0;

scene::Scenario glowing_sphere()
{
    auto s = fixture::single_sphere(kR, 1.5);
    s.spheres[0].interior.absorption = 0.2;
    s.spheres[0].light_level = 1.0;
    return s;
}

radiance::Params fracture_params(std::uint64_t seed)
{
    radiance::Params p;
    p.grid = 32;
    p.rays_per_iter = 2000;
    p.tol = 0.02;
    p.max_iter = 400;
    p.seed = seed;
    return p;
}

struct Run {
    int iterations{0};
    double uniformity{0.0};
};

Run run_seed(std::uint64_t seed, bool fractured)
{
    auto s = glowing_sphere();
    if (fractured) {
        std::mt19937_64 rng(seed * 7919);
        s.spheres[0].fractures = fixture::random_fractures(rng, s.spheres[0], 8, {2.0, 20.0, {1, 1, 1}}, 0.02 * kR);
    }
    const auto r = radiance::compute_equilibrium(s, "self", {}, fracture_params(seed));
    return {r.report.iterations, r.report.uniformity};
}

double median(std::vector<int> v)
{
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

void fractures(Check& c)
{
    constexpr int seeds = 20;
    std::vector<std::future<Run>> clear, broken;
    for (int seed = 1; seed <= seeds; ++seed) {
        clear.push_back(std::async(std::launch::async, run_seed, seed, false));
        broken.push_back(std::async(std::launch::async, run_seed, seed, true));
    }
    std::vector<int> it_clear, it_broken;
    int lower = 0;
    double worst_clear = 1.0;
    for (int i = 0; i < seeds; ++i) {
        const Run a = clear[i].get();
        const Run b = broken[i].get();
        it_clear.push_back(a.iterations);
        it_broken.push_back(b.iterations);
        lower += b.uniformity < a.uniformity;
        worst_clear = std::min(worst_clear, a.uniformity);
    }
    const double m0 = median(it_clear), m8 = median(it_broken);
    c.expect(m8 > m0, "median iterations " + fmt(m8) + " (8 fractures) vs " + fmt(m0) + " (none)");
    c.expect(lower >= 18, "uniformity lower with fractures in " + std::to_string(lower) + "/20 seeds");
    c.expect(worst_clear >= 0.9, "fracture-free uniformity " + fmt(worst_clear));

    auto s = glowing_sphere();
    const Vec2 centre{3.0, 0.0};
    const double radius = 3.5;
    s.spheres[0].bubbles.push_back({centre, radius, {1.5, 10.0, {1, 1, 1}}});
    const auto res = radiance::compute_equilibrium(s, "self", {}, fracture_params(1));
    const auto& g = res.grid;
    double inside = 0.0;
    int cells = 0;
    for (int j = 0; j < g.n; ++j) {
        for (int i = 0; i < g.n; ++i) {
            bool whole = true;
            for (int q = 0; q < 4; ++q) {
                const Vec2 corner = g.origin + Vec2{(i + (q & 1)) * g.cell_size, (j + (q >> 1)) * g.cell_size};
                whole = whole && distance(corner, centre) < radius;
            }
            if (!whole) continue;
            inside += g.luminance(g.index(i, j));
            ++cells;
        }
    }
    c.expect(cells > 20, "bubble covers only " + std::to_string(cells) + " whole cells");
    if (cells > 0) {
        const double ratio = inside / cells / radiance::mean_radiance(g).mean();
        c.expect(ratio < 0.05, "bubble interior at " + fmt(ratio) + " of the sphere mean");
    }
}

// 5. Waves.
void wave_suite(Check& c)
{
    const waves::Waveform a{{{1.0, 1.0, 0.0}}, "a"};
    const waves::Waveform b{{{1.0, 2.5, 0.0}}, "b"};
    const auto sum = waves::sample(waves::superpose(a, b), 1.0, 64.0);
    const double peak = *std::max_element(sum.samples.begin(), sum.samples.end());
    c.expect(std::abs(peak - 3.5) <= 1e-12, "constructive peak " + fmt(peak));

    const waves::Waveform anti{{{1.0, 1.0, kPi}}, "anti"};
    const auto zero = waves::sample(waves::superpose(a, anti), 4.0, 64.0);
    double residual = 0.0;
    for (double v : zero.samples) residual = std::max(residual, std::abs(v));
    c.expect(residual < 1e-9, "antiphase residual " + fmt(residual));

    // on-bin: duration 8 at rate 32 puts frequency f in bin 8f
    const waves::Waveform mix{{{2.0, 0.7, 1.2}, {5.0, 1.3, 4.0}, {9.0, 0.4, 0.3}}, "mix"};
    const auto comps = waves::decompose(waves::sample(mix, 8.0, 32.0), 8, 0.01);
    c.expect(comps.size() == 3, "recovered " + std::to_string(comps.size()) + " components");
    for (const auto& want : mix.components) {
        const auto it = std::find_if(comps.begin(), comps.end(), [&](const auto& got) { return got.frequency == want.frequency; });
        if (it == comps.end()) {
            c.expect(false, "frequency " + fmt(want.frequency) + " not recovered exactly");
            continue;
        }
        c.expect(std::abs(it->amplitude - want.amplitude) <= 0.01 * want.amplitude,
                 "amplitude at " + fmt(want.frequency) + ": " + fmt(it->amplitude));
    }

    // the naive DFT oracle sees the same peaks
    const auto raw = waves::sample(mix, 8.0, 32.0).samples;
    const auto spectrum = oracle::naive_dft(raw);
    for (const auto& want : mix.components) {
        const auto bin = static_cast<std::size_t>(want.frequency * 8.0);
        const double amp = 2.0 * std::abs(spectrum[bin]) / raw.size();
        c.expect(std::abs(amp - want.amplitude) <= 0.01 * want.amplitude, "oracle amplitude at " + fmt(want.frequency));
    }
}

// 6. Scenario lifecycle.
void lifecycle(Check& c)
{
    auto s = fixture::five_spheres();
    c.expect(s.spheres.size() == 5, "fixture is not five spheres");
    const std::string text = serial::serialize(s);
    c.expect(serial::serialize(serial::deserialize(text)) == text, "canonical round trip changed bytes");

    const std::string before = serial::content_digest(s);
    const auto child = scene::fork(s);
    c.expect(serial::content_digest(s) == before, "fork changed the parent digest");
    c.expect(child.parent == std::optional<std::string>(s.id), "child does not name its parent");

    TempDir dir;
    {
        store::Store st(dir.path);
        auto root = fixture::single_sphere();
        root.id = "root";
        st.put(root);
        const auto stored = st.digest("root");
        (void)st.fork("root");
        c.expect(st.digest("root") == stored, "store fork changed the parent digest");

        auto twin = s;
        twin.id = "twin";
        twin.parent.reset();
        twin.children.clear();
        auto orig = s;
        orig.id = "orig";
        orig.parent.reset();
        orig.children.clear();
        st.put(orig);
        st.put(twin);
        const auto matches = st.similar("orig", 3);
        c.expect(!matches.empty() && matches.front().id == "twin", "duplicate not ranked first");
        if (!matches.empty()) c.expect(std::abs(matches.front().score - 1.0) <= 1e-9, "duplicate score " + fmt(matches.front().score));
    }

    // kill -9 a writer mid-stream; everything it acknowledged must survive
    TempDir crash;
    int ack[2];
    if (::pipe(ack) != 0) {
        c.expect(false, "pipe failed");
        return;
    }
    const pid_t pid = ::fork();
    if (pid == 0) {
        ::close(ack[0]);
        store::Store st(crash.path);
        auto root = fixture::single_sphere();
        root.id = "root";
        st.put(root);
        for (;;) {
            const std::string line = st.fork("root").id + "\n";
            if (::write(ack[1], line.data(), line.size()) < 0) std::_Exit(1);
        }
    }
    ::close(ack[1]);
    std::set<std::string> acked;
    std::string buf;
    char chunk[256];
    while (acked.size() < 50) {
        const ssize_t n = ::read(ack[0], chunk, sizeof chunk);
        if (n <= 0) break;
        buf.append(chunk, static_cast<std::size_t>(n));
        for (auto nl = buf.find('\n'); nl != std::string::npos; nl = buf.find('\n')) {
            acked.insert(buf.substr(0, nl));
            buf.erase(0, nl + 1);
        }
    }
    ::kill(pid, SIGKILL);
    int status = 0;
    ::waitpid(pid, &status, 0);
    ::close(ack[0]);
    c.expect(acked.size() >= 50, "writer acknowledged only " + std::to_string(acked.size()));
    store::Store st(crash.path);
    std::size_t lost = 0;
    for (const auto& id : acked) lost += !st.contains(id);
    c.expect(lost == 0, std::to_string(lost) + " acknowledged writes lost");
}

// 7. Service pipeline, no UI involved.
bool well_formed_svg(const std::string& s)
{
    try {
        std::istringstream in(s);
        boost::property_tree::ptree tree;
        boost::property_tree::read_xml(in, tree);
        return tree.count("svg") == 1;
    } catch (const boost::property_tree::ptree_error&) {
        return false;
    }
}

void service_pipeline(Check& c)
{
    TempDir dir;
    store::Store st(dir.path);
    service::Service svc(st);
    const int port = svc.bind("127.0.0.1", 0);
    std::thread server([&] { svc.run(); });
    httplib::Client cli("127.0.0.1", port);
    cli.set_read_timeout(60, 0);

    auto parse = [&](const httplib::Result& r, int status, const char* what) -> json {
        if (!r) {
            c.expect(false, std::string(what) + ": no response");
            return json();
        }
        c.expect(r->status == status, std::string(what) + ": status " + std::to_string(r->status));
        try {
            return json::parse(r->body);
        } catch (const json::exception&) {
            c.expect(false, std::string(what) + ": body is not JSON");
            return json();
        }
    };

    for (int i = 0; i < 200 && !cli.Get("/healthz"); ++i) std::this_thread::sleep_for(std::chrono::milliseconds(5));

    auto doc = json::parse(serial::serialize(fixture::five_spheres()));
    doc["scenario"].erase("id");
    doc["scenario"].erase("children");
    const auto created = parse(cli.Post("/scenarios", doc.dump(), "application/json"), 201, "create");
    const std::string id = created.value("id", "");
    const auto forked = parse(cli.Post("/scenarios/" + id + "/fork", "", "application/json"), 201, "fork");
    const std::string child = forked.value("id", "");
    c.expect(!child.empty() && child != id, "fork returned no new id");

    const auto traced = parse(cli.Post("/scenarios/" + child + "/trace", R"({"beam":"lie"})", "application/json"), 200, "trace");
    c.expect(traced.contains("beams") && !traced["beams"].empty() && !traced["beams"][0]["paths"].empty(), "trace has no paths");

    const auto svg = cli.Get("/scenarios/" + child + "/render");
    c.expect(svg && svg->status == 200 && well_formed_svg(svg->body), "render is not SVG");

    constexpr int K = 6;
    const auto frames = parse(cli.Get("/scenarios/" + child + "/frames?steps=" + std::to_string(K)), 200, "frames");
    const bool have = frames.contains("frames") && frames["frames"].size() == K;
    c.expect(have, "frames count");
    if (have && svg) {
        for (const auto& f : frames["frames"]) c.expect(f.is_string() && well_formed_svg(f.get<std::string>()), "frame is not SVG");
        c.expect(frames["frames"][K - 1].get<std::string>() == svg->body, "frame K of K differs from the full render");
    }

    const auto original = cli.Get("/scenarios/" + id);
    if (original) {
        const auto put = cli.Put("/scenarios/" + id, original->body, "application/json");
        c.expect(put && put->status == 409, "PUT on a forked scenario: " + (put ? std::to_string(put->status) : std::string("no response")));
        if (put) {
            const auto body = json::parse(put->body, nullptr, false);
            c.expect(!body.is_discarded() && body["error"]["code"] == "VERSION", "PUT conflict lacks the VERSION envelope");
        }
    } else {
        c.expect(false, "GET original failed");
    }

    svc.stop();
    server.join();
}

} // namespace

int main()
{
    struct Criterion {
        const char* name;
        std::function<void(Check&)> fn;
        double budget; ///< seconds
    };
    const std::vector<Criterion> criteria = {
        {"1 optics analytic suite", optics_suite, 10.0},
        {"2 centre/periphery semantics", centre_periphery, 5.0},
        {"3 focusing and divergence", focusing, 60.0},
        {"4 fractures, uniformity, opaque bubble", fractures, 60.0},
        {"5 waves", wave_suite, 60.0},
        {"6 scenario lifecycle", lifecycle, 60.0},
        {"7 service contract", service_pipeline, 60.0},
    };
    int failed = 0;
    for (const auto& [name, fn, budget] : criteria) {
        Check c;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            fn(c);
        } catch (const std::exception& e) {
            c.failures.push_back(std::string("exception: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (secs > budget) c.failures.push_back("took " + fmt(secs) + " s, budget " + fmt(budget) + " s");
        std::printf("%s criterion %s (%.2fs)\n", c.failures.empty() ? "PASS" : "FAIL", name, secs);
        for (const auto& f : c.failures) std::printf("    %s\n", f.c_str());
        failed += !c.failures.empty();
    }
    std::fflush(stdout);
    return failed ? 1 : 0;
}
