#pragma once

#include "liveia/scene.hpp"
#include "liveia/waves.hpp"

#include <json.hpp>

#include <string>
#include <string_view>

namespace liveia::serial {

using nlohmann::json;

inline constexpr int kSchemaVersion = 1;

/// Round to the 9 significant digits used by the canonical form.
double quantize(double v);

/// Canonical text of a JSON value: no whitespace, keys sorted, floats written
/// with 9 significant digits, integers verbatim. Throws on non-finite numbers.
std::string canonical_dump(const json& j);

json to_json(const waves::Waveform& w);
waves::Waveform waveform_from_json(const json& j);
json to_json(const scene::Beam& b);
scene::Beam beam_from_json(const json& j);
json to_json(const scene::Scenario& s);

/// Parse the `scenario` object (no envelope). Reference checks are not run.
scene::Scenario scenario_from_json(const json& j);

/// Canonical document: {"scenario":{...},"schema_version":1}.
std::string serialize(const scene::Scenario& s);

/// Canonical document with the fork links (`children`) removed. Forking adds a
/// child link to the parent, so this is the text that stays fixed for a parent.
std::string serialize_content(const scene::Scenario& s);

/// Inverse of serialize. Error codes: Malformed (unparseable or wrong shape),
/// MalformedNumeral, VersionMissing, VersionMismatch, DanglingRef.
scene::Scenario deserialize(std::string_view document);

/// SHA-256 hex digest of serialize_content(s).
std::string content_digest(const scene::Scenario& s);

std::string sha256_hex(std::string_view bytes);

} // namespace liveia::serial
