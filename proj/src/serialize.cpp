#include "liveia/serialize.hpp"

#include "liveia/error.hpp"

#include <openssl/evp.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <set>

namespace liveia::serial {

using scene::Beam;
using scene::Bubble;
using scene::Fracture;
using scene::Medium;
using scene::PsycheSphere;
using scene::Scenario;
using scene::Shell;
using scene::ShellSector;
using scene::Spark;

namespace {

std::string format_double(double v)
{
    if (!std::isfinite(v)) throw Error(ErrorCode::MalformedNumeral, "non-finite number in canonical document");
    if (v == 0.0) return "0"; // folds -0
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

void dump_into(const json& j, std::string& out)
{
    switch (j.type()) {
    case json::value_t::object: {
        out += '{';
        bool first = true;
        for (auto it = j.begin(); it != j.end(); ++it) { // std::map: keys sorted
            if (!first) out += ',';
            first = false;
            out += json(it.key()).dump();
            out += ':';
            dump_into(it.value(), out);
        }
        out += '}';
        break;
    }
    case json::value_t::array: {
        out += '[';
        for (std::size_t i = 0; i < j.size(); ++i) {
            if (i) out += ',';
            dump_into(j[i], out);
        }
        out += ']';
        break;
    }
    case json::value_t::number_float:
        out += format_double(j.get<double>());
        break;
    default:
        out += j.dump(-1, ' ', false, json::error_handler_t::strict);
    }
}

// -- readers ------------------------------------------------------------------

[[noreturn]] void malformed(const std::string& what)
{
    throw Error(ErrorCode::Malformed, what);
}

const json& field(const json& j, const char* key)
{
    if (!j.is_object()) malformed(std::string("expected an object holding '") + key + "'");
    auto it = j.find(key);
    if (it == j.end()) malformed(std::string("missing field '") + key + "'");
    return *it;
}

double as_number(const json& v, const char* key)
{
    if (!v.is_number()) {
        throw Error(ErrorCode::MalformedNumeral, std::string("field '") + key + "' is not a number");
    }
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw Error(ErrorCode::MalformedNumeral, std::string("field '") + key + "' is not finite");
    return d;
}

double num(const json& j, const char* key) { return as_number(field(j, key), key); }

double num_or(const json& j, const char* key, double fallback)
{
    auto it = j.find(key);
    return (it == j.end() || it->is_null()) ? fallback : as_number(*it, key);
}

std::string str_or(const json& j, const char* key, std::string fallback = {})
{
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return fallback;
    if (!it->is_string()) malformed(std::string("field '") + key + "' must be a string");
    return it->get<std::string>();
}

std::optional<std::string> opt_str(const json& j, const char* key)
{
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    if (!it->is_string()) malformed(std::string("field '") + key + "' must be a string or null");
    return it->get<std::string>();
}

const json* array_or_null(const json& j, const char* key)
{
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return nullptr;
    if (!it->is_array()) malformed(std::string("field '") + key + "' must be an array");
    return &*it;
}

Vec2 vec2_from(const json& v, const char* key)
{
    if (!v.is_array() || v.size() != 2) malformed(std::string("field '") + key + "' must be [x, y]");
    return {as_number(v[0], key), as_number(v[1], key)};
}

Rgb rgb_from(const json& v, const char* key)
{
    if (!v.is_array() || v.size() != 3) malformed(std::string("field '") + key + "' must be [r, g, b]");
    return {as_number(v[0], key), as_number(v[1], key), as_number(v[2], key)};
}

std::vector<std::string> strings_from(const json& j, const char* key)
{
    std::vector<std::string> out;
    if (const json* arr = array_or_null(j, key)) {
        for (const auto& v : *arr) {
            if (!v.is_string()) malformed(std::string("field '") + key + "' must hold strings");
            out.push_back(v.get<std::string>());
        }
    }
    return out;
}

// -- writers ------------------------------------------------------------------

json vec(Vec2 p) { return json::array({quantize(p.x), quantize(p.y)}); }
json rgb(const Rgb& c) { return json::array({quantize(c[0]), quantize(c[1]), quantize(c[2])}); }
json fnum(double v) { return json(quantize(v)); }

json medium_json(const Medium& m)
{
    return {{"refractive_index", fnum(m.refractive_index)}, {"absorption", fnum(m.absorption)}, {"tint", rgb(m.tint)}};
}

Medium medium_from(const json& j, const Medium& fallback)
{
    if (j.is_null()) return fallback;
    Medium m;
    m.refractive_index = num_or(j, "refractive_index", fallback.refractive_index);
    m.absorption = num_or(j, "absorption", fallback.absorption);
    auto it = j.find("tint");
    m.tint = (it == j.end() || it->is_null()) ? fallback.tint : rgb_from(*it, "tint");
    return m;
}

Medium medium_field(const json& j, const char* key, const Medium& fallback)
{
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return fallback;
    if (!it->is_object()) malformed(std::string("field '") + key + "' must be a medium object");
    return medium_from(*it, fallback);
}

json sphere_json(const PsycheSphere& sp)
{
    json j;
    j["id"] = sp.id;
    j["label"] = sp.label;
    j["center"] = vec(sp.center);
    j["radius"] = fnum(sp.radius);
    j["interior"] = medium_json(sp.interior);
    j["light_level"] = fnum(sp.light_level);
    if (sp.shell) {
        json sectors = json::array();
        for (const auto& sec : sp.shell->sectors) {
            sectors.push_back({{"start_angle", fnum(sec.start_angle)},
                               {"end_angle", fnum(sec.end_angle)},
                               {"color", sec.color}});
        }
        j["shell"] = {{"thickness", fnum(sp.shell->thickness)},
                      {"medium", medium_json(sp.shell->medium)},
                      {"opacity", fnum(sp.shell->opacity)},
                      {"sectors", sectors}};
    } else {
        j["shell"] = nullptr;
    }
    json fr = json::array();
    for (const auto& f : sp.fractures) {
        fr.push_back({{"a", vec(f.a)}, {"b", vec(f.b)}, {"width", fnum(f.width)}, {"medium", medium_json(f.medium)}});
    }
    j["fractures"] = fr;
    json bu = json::array();
    for (const auto& b : sp.bubbles) {
        bu.push_back({{"center", vec(b.center)}, {"radius", fnum(b.radius)}, {"medium", medium_json(b.medium)}});
    }
    j["bubbles"] = bu;
    j["children"] = sp.children;
    j["border_blur"] = fnum(sp.border_blur);
    j["revealed"] = sp.revealed;
    return j;
}

PsycheSphere sphere_from(const json& j)
{
    PsycheSphere sp;
    if (!j.is_object()) malformed("sphere must be an object");
    const json& id = field(j, "id");
    if (!id.is_string()) malformed("sphere id must be a string");
    sp.id = id.get<std::string>();
    sp.label = str_or(j, "label");
    sp.center = vec2_from(field(j, "center"), "center");
    sp.radius = num(j, "radius");
    sp.interior = medium_field(j, "interior", sp.interior);
    sp.light_level = num_or(j, "light_level", 0.0);
    if (auto it = j.find("shell"); it != j.end() && !it->is_null()) {
        if (!it->is_object()) malformed("shell must be an object or null");
        Shell sh;
        sh.thickness = num(*it, "thickness");
        sh.medium = medium_field(*it, "medium", sh.medium);
        sh.opacity = num_or(*it, "opacity", 0.0);
        if (const json* secs = array_or_null(*it, "sectors")) {
            for (const auto& s : *secs) {
                ShellSector sec;
                sec.start_angle = num(s, "start_angle");
                sec.end_angle = num(s, "end_angle");
                sec.color = str_or(s, "color", "#ffffff");
                sh.sectors.push_back(sec);
            }
        }
        sp.shell = sh;
    }
    if (const json* fr = array_or_null(j, "fractures")) {
        for (const auto& f : *fr) {
            Fracture x;
            x.a = vec2_from(field(f, "a"), "a");
            x.b = vec2_from(field(f, "b"), "b");
            x.width = num_or(f, "width", x.width);
            x.medium = medium_field(f, "medium", x.medium);
            sp.fractures.push_back(x);
        }
    }
    if (const json* bu = array_or_null(j, "bubbles")) {
        for (const auto& b : *bu) {
            Bubble x;
            x.center = vec2_from(field(b, "center"), "center");
            x.radius = num(b, "radius");
            x.medium = medium_field(b, "medium", x.medium);
            sp.bubbles.push_back(x);
        }
    }
    sp.children = strings_from(j, "children");
    sp.border_blur = num_or(j, "border_blur", 0.0);
    if (auto it = j.find("revealed"); it != j.end() && !it->is_null()) {
        if (!it->is_boolean()) malformed("revealed must be a boolean");
        sp.revealed = it->get<bool>();
    }
    return sp;
}

json optional_string(const std::optional<std::string>& s)
{
    return s ? json(*s) : json(nullptr);
}

} // namespace

double quantize(double v)
{
    if (!std::isfinite(v) || v == 0.0) return v == 0.0 ? 0.0 : v;
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return std::strtod(buf, nullptr);
}

std::string canonical_dump(const json& j)
{
    std::string out;
    dump_into(j, out);
    return out;
}

json to_json(const waves::Waveform& w)
{
    json comps = json::array();
    for (const auto& c : w.components) {
        comps.push_back({{"frequency", fnum(c.frequency)}, {"amplitude", fnum(c.amplitude)}, {"phase", fnum(c.phase)}});
    }
    return {{"label", w.label}, {"components", comps}};
}

waves::Waveform waveform_from_json(const json& j)
{
    if (!j.is_object()) malformed("waveform must be an object");
    waves::Waveform w;
    w.label = str_or(j, "label");
    if (const json* comps = array_or_null(j, "components")) {
        for (const auto& c : *comps) {
            waves::WaveComponent wc;
            wc.frequency = num(c, "frequency");
            wc.amplitude = num(c, "amplitude");
            wc.phase = num_or(c, "phase", 0.0);
            w.components.push_back(wc);
        }
    }
    return w;
}

json to_json(const Beam& b)
{
    json j;
    j["id"] = b.id;
    j["source_sphere"] = optional_string(b.source_sphere);
    j["origin"] = vec(b.origin);
    j["origin_depth"] = fnum(b.origin_depth);
    j["origin_angle"] = fnum(b.origin_angle);
    j["direction"] = fnum(b.direction);
    j["spread"] = fnum(b.spread);
    j["ray_count"] = b.ray_count;
    j["intensity"] = rgb(b.intensity);
    j["waveform"] = b.waveform ? to_json(*b.waveform) : json(nullptr);
    return j;
}

Beam beam_from_json(const json& j)
{
    if (!j.is_object()) malformed("beam must be an object");
    Beam b;
    const json& id = field(j, "id");
    if (!id.is_string()) malformed("beam id must be a string");
    b.id = id.get<std::string>();
    b.source_sphere = opt_str(j, "source_sphere");
    if (auto it = j.find("origin"); it != j.end() && !it->is_null()) b.origin = vec2_from(*it, "origin");
    b.origin_depth = num_or(j, "origin_depth", 0.0);
    b.origin_angle = num_or(j, "origin_angle", 0.0);
    b.direction = num_or(j, "direction", 0.0);
    b.spread = num_or(j, "spread", 0.0);
    if (auto it = j.find("ray_count"); it != j.end() && !it->is_null()) {
        if (!it->is_number_integer()) throw Error(ErrorCode::MalformedNumeral, "ray_count must be an integer");
        b.ray_count = it->get<int>();
    }
    if (auto it = j.find("intensity"); it != j.end() && !it->is_null()) b.intensity = rgb_from(*it, "intensity");
    if (auto it = j.find("waveform"); it != j.end() && !it->is_null()) b.waveform = waveform_from_json(*it);
    return b;
}

json to_json(const Scenario& s)
{
    json j;
    j["id"] = s.id;
    j["title"] = s.title;
    json spheres = json::array();
    for (const auto& sp : s.spheres) spheres.push_back(sphere_json(sp));
    j["spheres"] = spheres;
    json beams = json::array();
    for (const auto& b : s.beams) beams.push_back(to_json(b));
    j["beams"] = beams;
    json sparks = json::array();
    for (const auto& sp : s.sparks) {
        sparks.push_back({{"spheres", json::array({sp.first, sp.second})}, {"intensity", fnum(sp.intensity)}});
    }
    j["sparks"] = sparks;
    j["notes"] = s.notes;
    j["parent"] = optional_string(s.parent);
    j["children"] = s.children;
    j["created_at"] = s.created_at;
    j["view_focus"] = optional_string(s.view_focus);
    return j;
}

Scenario scenario_from_json(const json& j)
{
    if (!j.is_object()) malformed("scenario must be an object");
    Scenario s;
    s.id = str_or(j, "id");
    s.title = str_or(j, "title");
    if (const json* arr = array_or_null(j, "spheres")) {
        for (const auto& v : *arr) s.spheres.push_back(sphere_from(v));
    }
    if (const json* arr = array_or_null(j, "beams")) {
        for (const auto& v : *arr) s.beams.push_back(beam_from_json(v));
    }
    if (const json* arr = array_or_null(j, "sparks")) {
        for (const auto& v : *arr) {
            const json& pair = field(v, "spheres");
            if (!pair.is_array() || pair.size() != 2 || !pair[0].is_string() || !pair[1].is_string()) {
                malformed("spark.spheres must be two sphere ids");
            }
            s.sparks.push_back({pair[0].get<std::string>(), pair[1].get<std::string>(), num_or(v, "intensity", 1.0)});
        }
    }
    s.notes = str_or(j, "notes");
    s.parent = opt_str(j, "parent");
    s.children = strings_from(j, "children");
    s.created_at = str_or(j, "created_at");
    s.view_focus = opt_str(j, "view_focus");
    return s;
}

std::string serialize(const Scenario& s)
{
    json doc;
    doc["schema_version"] = kSchemaVersion;
    doc["scenario"] = to_json(s);
    return canonical_dump(doc);
}

std::string serialize_content(const Scenario& s)
{
    json doc;
    doc["schema_version"] = kSchemaVersion;
    doc["scenario"] = to_json(s);
    doc["scenario"].erase("children");
    return canonical_dump(doc);
}

Scenario deserialize(std::string_view document)
{
    json doc;
    try {
        doc = json::parse(document);
    } catch (const json::parse_error& e) {
        malformed(std::string("not a JSON document: ") + e.what());
    } catch (const json::out_of_range& e) {
        throw Error(ErrorCode::MalformedNumeral, std::string("number out of range: ") + e.what());
    }
    if (!doc.is_object()) malformed("document must be a JSON object");
    auto ver = doc.find("schema_version");
    if (ver == doc.end() || ver->is_null()) throw Error(ErrorCode::VersionMissing, "document has no schema_version");
    if (!ver->is_number_integer() || ver->get<long long>() != kSchemaVersion) {
        throw Error(ErrorCode::VersionMismatch, "unsupported schema_version " + ver->dump());
    }
    Scenario s;
    try {
        s = scenario_from_json(field(doc, "scenario"));
    } catch (const json::exception& e) {
        malformed(e.what());
    }

    std::set<std::string> ids;
    for (const auto& sp : s.spheres) ids.insert(sp.id);
    auto dangling = [](const std::string& what) { throw Error(ErrorCode::DanglingRef, what); };
    for (const auto& sp : s.spheres) {
        for (const auto& c : sp.children) {
            if (!ids.contains(c)) dangling("sphere '" + sp.id + "' nests unknown sphere '" + c + "'");
        }
    }
    for (const auto& b : s.beams) {
        if (b.source_sphere && !ids.contains(*b.source_sphere)) {
            dangling("beam '" + b.id + "' references unknown sphere '" + *b.source_sphere + "'");
        }
    }
    for (const auto& sp : s.sparks) {
        if (!ids.contains(sp.first) || !ids.contains(sp.second)) {
            dangling("spark references unknown sphere '" + (ids.contains(sp.first) ? sp.second : sp.first) + "'");
        }
    }
    if (s.view_focus && !ids.contains(*s.view_focus)) dangling("view_focus references an unknown sphere");
    return s;
}

std::string sha256_hex(std::string_view bytes)
{
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1) {
        throw Error(ErrorCode::Internal, "sha256 failed");
    }
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 0xF];
    }
    return out;
}

std::string content_digest(const Scenario& s) { return sha256_hex(serialize_content(s)); }

} // namespace liveia::serial
