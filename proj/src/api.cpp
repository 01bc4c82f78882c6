#include "liveia/api.hpp"

#include "liveia/waves.hpp"

#include <cmath>

namespace liveia::api {

namespace {

[[noreturn]] void bad_request(const std::string& what)
{
    throw Error(ErrorCode::Validation, what);
}

const json* member(const json& j, const char* key)
{
    if (!j.is_object()) return nullptr;
    auto it = j.find(key);
    return it == j.end() || it->is_null() ? nullptr : &*it;
}

double number(const json& j, const char* key)
{
    const json* v = member(j, key);
    if (!v) bad_request(std::string("missing field '") + key + "'");
    if (!v->is_number()) throw Error(ErrorCode::MalformedNumeral, std::string("field '") + key + "' must be a number");
    const double d = v->get<double>();
    if (!std::isfinite(d)) throw Error(ErrorCode::MalformedNumeral, std::string("field '") + key + "' must be finite");
    return d;
}

double number_or(const json& j, const char* key, double fallback)
{
    return member(j, key) ? number(j, key) : fallback;
}

int integer_or(const json& j, const char* key, int fallback)
{
    const json* v = member(j, key);
    if (!v) return fallback;
    if (!v->is_number_integer()) throw Error(ErrorCode::MalformedNumeral, std::string("field '") + key + "' must be an integer");
    return v->get<int>();
}

json rgb(const Rgb& c)
{
    return json::array({c[0], c[1], c[2]});
}

json point(Vec2 p)
{
    return json::array({p.x, p.y});
}

json waveform_components(const std::vector<waves::WaveComponent>& cs)
{
    waves::Waveform w{cs, ""};
    return serial::to_json(w)["components"];
}

} // namespace

std::string_view error_class(ErrorCode code)
{
    switch (code) {
    case ErrorCode::NotFound: return "NOT_FOUND";
    case ErrorCode::Contract:
    case ErrorCode::Validation:
    case ErrorCode::DanglingRef:
    case ErrorCode::Malformed:
    case ErrorCode::MalformedNumeral: return "VALIDATION";
    case ErrorCode::Version:
    case ErrorCode::VersionMissing:
    case ErrorCode::VersionMismatch: return "VERSION";
    case ErrorCode::Io:
    case ErrorCode::Corrupt:
    case ErrorCode::Internal: return "INTERNAL";
    }
    return "INTERNAL";
}

int http_status(ErrorCode code)
{
    const auto c = error_class(code);
    if (c == "NOT_FOUND") return 404;
    if (c == "VALIDATION") return 422;
    if (c == "VERSION") return 409;
    return 500;
}

json error_body(const Error& e, json detail)
{
    if (!detail.is_object()) detail = json{{"value", detail}};
    detail["kind"] = std::string(to_string(e.code()));
    return {{"error", {{"code", std::string(error_class(e.code()))}, {"message", e.what()}, {"detail", detail}}}};
}

json violations_json(const std::vector<scene::Violation>& v)
{
    json out = json::array();
    for (const auto& x : v) out.push_back({{"rule", x.rule}, {"object_id", x.object_id}, {"message", x.message}});
    return out;
}

optics::TraceLimits limits_from_json(const json& j)
{
    optics::TraceLimits l;
    if (j.is_null()) return l;
    if (!j.is_object()) bad_request("limits must be an object");
    l.max_events = integer_or(j, "max_events", l.max_events);
    l.min_intensity = number_or(j, "min_intensity", l.min_intensity);
    if (l.max_events < 1 || l.max_events > 4096) bad_request("limits.max_events must be in [1, 4096]");
    if (!(l.min_intensity > 0.0)) bad_request("limits.min_intensity must be > 0");
    return l;
}

json to_json(const optics::RayPath& p)
{
    json points = json::array();
    for (const auto& v : p.vertices()) points.push_back(point(v));
    json intensity = json::array();
    for (const auto& s : p.segments) intensity.push_back(rgb(s.intensity));
    json events = json::array();
    for (const auto& e : p.events) {
        events.push_back({{"kind", std::string(optics::to_string(e.kind))}, {"surface", e.surface_id}, {"fraction", e.fraction}});
    }
    const Rgb end = p.segments.empty() ? Rgb{} : p.segments.back().end_intensity;
    return {{"ray_index", p.ray_index},
            {"points", points},
            {"intensity", intensity},
            {"end_intensity", rgb(end)},
            {"events", events},
            {"arclength", p.arclength()},
            {"total_deflection", p.total_deflection}};
}

json trace(const scene::Scenario& s, const json& request)
{
    if (!request.is_null() && !request.is_object()) bad_request("trace request must be an object");
    const auto limits = limits_from_json(request.is_object() && request.contains("limits") ? request["limits"] : json());

    scene::Scenario work = s;
    std::vector<std::string> ids;
    const json* beam = member(request, "beam");
    if (!beam) {
        for (const auto& b : s.beams) ids.push_back(b.id);
    } else if (beam->is_string()) {
        const auto id = beam->get<std::string>();
        if (!scene::find_beam(s, id)) throw Error(ErrorCode::NotFound, "no beam '" + id + "'");
        ids.push_back(id);
    } else if (beam->is_object()) {
        scene::Beam b = serial::beam_from_json(*beam);
        if (b.id.empty()) b.id = "inline";
        if (scene::find_beam(work, b.id)) bad_request("inline beam id '" + b.id + "' is already used");
        work.beams.push_back(b);
        ids.push_back(b.id);
    } else {
        bad_request("beam must be an id or a beam object");
    }

    const auto scene = optics::OpticalScene::build(work);
    json beams = json::array();
    for (const auto& id : ids) {
        json paths = json::array();
        for (const auto& p : optics::trace_beam(scene, *scene::find_beam(work, id), limits)) paths.push_back(to_json(p));
        beams.push_back({{"beam", id}, {"paths", paths}});
    }
    return {{"beams", beams}};
}

std::vector<scene::Beam> injections_for(const scene::Scenario& s, std::string_view sphere_id)
{
    const auto* sp = scene::find_sphere(s, sphere_id);
    if (!sp) throw Error(ErrorCode::NotFound, "no sphere '" + std::string(sphere_id) + "'");
    std::vector<scene::Beam> out;
    for (const auto& b : s.beams) {
        if (b.source_sphere && *b.source_sphere == sp->id) {
            out.push_back(b);
            continue;
        }
        const Vec2 o = scene::beam_origin(s, b);
        const optics::Ray central{o, unit_from_angle(b.direction), b.intensity, 0.0};
        if (distance(o, sp->center) < sp->radius || optics::intersect_circle(central, sp->center, sp->radius)) out.push_back(b);
    }
    return out;
}

radiance::Result equilibrium(const scene::Scenario& s, std::string_view sphere_id, const radiance::Params& params)
{
    scene::require_valid(s);
    const auto inj = injections_for(s, sphere_id);
    return radiance::compute_equilibrium(s, sphere_id, inj, params);
}

json to_json(const radiance::Report& r)
{
    json regions = json::array();
    for (const auto& reg : r.shadow_regions) regions.push_back(reg);
    return {{"iterations", r.iterations},
            {"converged", r.converged},
            {"uniformity", r.uniformity},
            {"shadow_fraction", r.shadow_fraction},
            {"shadow_regions", regions},
            {"mean_radiance", rgb(r.mean_radiance)},
            {"max_relative_change", r.max_relative_change}};
}

json to_json(const radiance::Result& r)
{
    const auto& g = r.grid;
    json cells = json::array();
    json mask = json::array();
    for (int j = 0; j < g.n; ++j) {
        json row = json::array();
        json mrow = json::array();
        for (int i = 0; i < g.n; ++i) {
            row.push_back(rgb(g.cells[g.index(i, j)]));
            mrow.push_back(g.interior[g.index(i, j)] != 0);
        }
        cells.push_back(row);
        mask.push_back(mrow);
    }
    return {{"grid",
             {{"sphere_id", g.sphere_id},
              {"n", g.n},
              {"origin", point(g.origin)},
              {"cell_size", g.cell_size},
              {"cells", cells},
              {"interior", mask}}},
            {"report", to_json(r.report)}};
}

json metrics(const scene::Scenario& s, std::string_view sphere_id, const radiance::Result& r)
{
    const auto* sp = scene::find_sphere(s, sphere_id);
    if (!sp) throw Error(ErrorCode::NotFound, "no sphere '" + std::string(sphere_id) + "'");
    return {{"sphere", sp->id},
            {"uniformity", r.report.uniformity},
            {"shadow_fraction", r.report.shadow_fraction},
            {"shadow_regions", r.report.shadow_regions.size()},
            {"iterations", r.report.iterations},
            {"converged", r.report.converged},
            {"enlightenment_score", radiance::enlightenment_score(r.grid, r.report, *sp)},
            {"mean_radiance", rgb(r.report.mean_radiance)}};
}

json to_json(const store::TimelineNode& n)
{
    json kids = json::array();
    for (const auto& c : n.children) kids.push_back(to_json(c));
    return {{"id", n.id}, {"title", n.title}, {"created_at", n.created_at}, {"deleted", n.deleted}, {"children", kids}};
}

json to_json(const std::vector<store::Match>& m)
{
    json out = json::array();
    for (const auto& x : m) out.push_back({{"id", x.id}, {"score", x.score}});
    return out;
}

json to_json(const std::vector<store::Suggestion>& s)
{
    json out = json::array();
    for (const auto& x : s) {
        json seq = json::array();
        for (const auto& st : x.sequence) seq.push_back({{"id", st.id}, {"title", st.title}});
        out.push_back({{"neighbor", x.neighbor}, {"score", x.score}, {"sequence", seq}});
    }
    return out;
}

json waves_superpose(const json& request)
{
    const json* a = member(request, "a");
    const json* b = member(request, "b");
    if (!a || !b) bad_request("superpose needs waveforms 'a' and 'b'");
    const auto wa = serial::waveform_from_json(*a);
    const auto wb = serial::waveform_from_json(*b);
    waves::validate(wa);
    waves::validate(wb);
    return serial::to_json(waves::superpose(wa, wb));
}

json waves_decompose(const json& request)
{
    const json* samples = member(request, "samples");
    if (!samples || !samples->is_array()) bad_request("decompose needs a 'samples' array");
    waves::SampledSignal sig;
    sig.sample_rate = number(request, "sample_rate");
    for (const auto& v : *samples) {
        if (!v.is_number() || !std::isfinite(v.get<double>())) throw Error(ErrorCode::MalformedNumeral, "samples must be finite numbers");
        sig.samples.push_back(v.get<double>());
    }
    if (!(sig.sample_rate > 0.0)) bad_request("sample_rate must be > 0");
    const int max_components = integer_or(request, "max_components", 8);
    const double floor = number_or(request, "floor", 0.01);
    return {{"components", waveform_components(waves::decompose(sig, max_components, floor))}};
}

json waves_sample(const json& request)
{
    const json* w = member(request, "waveform");
    if (!w) bad_request("sample needs a 'waveform'");
    const auto wf = serial::waveform_from_json(*w);
    waves::validate(wf);
    const auto sig = waves::sample(wf, number(request, "duration"), number(request, "rate"));
    return {{"samples", sig.samples}, {"sample_rate", sig.sample_rate}};
}

} // namespace liveia::api
