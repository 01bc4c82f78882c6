#pragma once

// JSON adapters shared by the HTTP service and the CLI, so both speak the
// same documents.

#include "liveia/error.hpp"
#include "liveia/optics.hpp"
#include "liveia/radiance.hpp"
#include "liveia/scene.hpp"
#include "liveia/serialize.hpp"
#include "liveia/store.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace liveia::api {

using serial::json;

/// Wire name of an error class: NOT_FOUND, VALIDATION, VERSION or INTERNAL.
std::string_view error_class(ErrorCode code);
int http_status(ErrorCode code);
/// {"error":{"code","message","detail"}}; detail.kind carries the fine-grained code.
json error_body(const Error& e, json detail = json::object());
json violations_json(const std::vector<scene::Violation>& v);

optics::TraceLimits limits_from_json(const json& j);

json to_json(const optics::RayPath& p);

/// Trace request: {"beam": id | beam object | absent (all beams), "limits": {...}}.
/// An inline beam must fit the scenario (its source sphere must exist).
/// Returns {"beams":[{"beam":id,"paths":[...]}]}.
json trace(const scene::Scenario& s, const json& request);

/// Beams that light `sphere_id`: those emitted inside it, and those whose
/// central ray starts inside or hits its outer circle.
std::vector<scene::Beam> injections_for(const scene::Scenario& s, std::string_view sphere_id);

radiance::Result equilibrium(const scene::Scenario& s, std::string_view sphere_id, const radiance::Params& params);

/// Grid as nested arrays (rows bottom to top, cells left to right) plus the report.
json to_json(const radiance::Result& r);
json to_json(const radiance::Report& r);

/// Summary printed by `liveia metrics`.
json metrics(const scene::Scenario& s, std::string_view sphere_id, const radiance::Result& r);

json to_json(const store::TimelineNode& n);
json to_json(const std::vector<store::Match>& m);
json to_json(const std::vector<store::Suggestion>& s);

/// {"a": waveform, "b": waveform} -> waveform
json waves_superpose(const json& request);
/// {"samples": [...], "sample_rate": r, "max_components"?: 8, "floor"?: 0.01} -> {"components": [...]}
json waves_decompose(const json& request);
/// {"waveform": w, "duration": d, "rate": r} -> {"samples": [...], "sample_rate": r}
json waves_sample(const json& request);

} // namespace liveia::api
