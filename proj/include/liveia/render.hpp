#pragma once

#include "liveia/optics.hpp"
#include "liveia/radiance.hpp"
#include "liveia/scene.hpp"

#include <optional>
#include <string>
#include <vector>

namespace liveia::render {

enum class Mode { View, Overview, Perspective };

/// Parses "view" | "overview" | "perspective"; throws Error(Validation) otherwise.
Mode parse_mode(std::string_view text);
std::string_view to_string(Mode m);

/// Fork-tree neighbourhood for overview mode.
struct Timeline {
    std::vector<scene::Scenario> ancestors;   ///< root first, parent last
    std::vector<scene::Scenario> descendants; ///< depth-first order
};

struct Options {
    Mode mode{Mode::View};
    std::optional<std::string> focus; ///< sphere id, required for perspective mode
    int width{800};                   ///< pixels; height follows the scene's aspect
    bool rays{true};
    optics::TraceLimits limits{};
    /// Radiance results drawn as shadow overlays on their spheres.
    std::vector<radiance::Result> overlays;
};

/// SVG 1.1 document. Layers appear as <g id="layer-..."> groups and only when
/// non-empty, except the background which is always present.
std::string render_svg(const scene::Scenario& s, const Options& opts, const Timeline* timeline = nullptr);

/// Frame k of `steps` (k = 1..steps) draws every ray path cut at fraction
/// k/steps of its arclength. The last frame is byte-identical to render_svg.
std::vector<std::string> render_frames(const scene::Scenario& s, int steps, const Options& opts,
                                       const Timeline* timeline = nullptr);

/// The first part of `path` whose arclength is `fraction` of the total.
/// fraction >= 1 returns the path unchanged. A segment cut part-way keeps no
/// event, so events.size() may be one less than segments.size().
optics::RayPath truncate(const optics::RayPath& path, double fraction);

} // namespace liveia::render
