#include "liveia/radiance.hpp"

#include "liveia/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace liveia::radiance {

namespace {

struct Source {
    const scene::Beam* beam{nullptr}; ///< null for the sphere's own emission
    double power{0.0};
    Rgb color;                        ///< channel mean 1
};

// Integral of I0 * exp(-k s) over s in [a, b].
double integral(double i0, double k, double a, double b)
{
    if (k == 0.0) return i0 * (b - a);
    return i0 * std::exp(-k * a) * -std::expm1(-k * (b - a)) / k;
}

// Exact per-cell integral of the attenuated intensity along p0->p1 (Amanatides-Woo walk).
void deposit(const Grid& g, std::vector<Rgb>& acc, Vec2 p0, Vec2 p1, const Rgb& i0, const Rgb& k, double weight)
{
    const double len = distance(p0, p1);
    if (!(len > 0.0)) return;
    const Vec2 d = (p1 - p0) / len;
    const Vec2 u0 = (p0 - g.origin) / g.cell_size;
    const Vec2 du = d / g.cell_size; // grid units per unit length
    const double extent = g.n;

    // clip s in [0, len] to the box [0, n]^2
    double s_in = 0.0, s_out = len;
    for (int axis = 0; axis < 2; ++axis) {
        const double o = axis == 0 ? u0.x : u0.y;
        const double v = axis == 0 ? du.x : du.y;
        if (v == 0.0) {
            if (o < 0.0 || o > extent) return;
            continue;
        }
        double a = (0.0 - o) / v, b = (extent - o) / v;
        if (a > b) std::swap(a, b);
        s_in = std::max(s_in, a);
        s_out = std::min(s_out, b);
    }
    if (s_in >= s_out) return;

    const Vec2 start = u0 + du * s_in;
    int i = std::clamp(static_cast<int>(std::floor(start.x)), 0, g.n - 1);
    int j = std::clamp(static_cast<int>(std::floor(start.y)), 0, g.n - 1);
    const int step_i = du.x > 0 ? 1 : -1;
    const int step_j = du.y > 0 ? 1 : -1;
    const double inf = std::numeric_limits<double>::infinity();
    const double delta_i = du.x != 0.0 ? std::abs(1.0 / du.x) : inf;
    const double delta_j = du.y != 0.0 ? std::abs(1.0 / du.y) : inf;
    double next_i = du.x != 0.0 ? ((du.x > 0 ? i + 1 : i) - u0.x) / du.x : inf;
    double next_j = du.y != 0.0 ? ((du.y > 0 ? j + 1 : j) - u0.y) / du.y : inf;

    double s = s_in;
    while (s < s_out) {
        const double s_next = std::min({next_i, next_j, s_out});
        if (s_next > s) {
            Rgb& cell = acc[g.index(i, j)];
            for (std::size_t c = 0; c < 3; ++c) cell[c] += weight * integral(i0[c], k[c], s, s_next);
        }
        s = s_next;
        if (s >= s_out) break;
        if (next_i <= next_j) {
            i += step_i;
            next_i += delta_i;
        } else {
            j += step_j;
            next_j += delta_j;
        }
        if (i < 0 || j < 0 || i >= g.n || j >= g.n) break;
    }
}

Vec2 sample_emission_point(std::mt19937_64& rng, const scene::Scenario& s, const scene::PsycheSphere& sp)
{
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double r_in = sp.inner_radius();
    for (int attempt = 0; attempt < 10000; ++attempt) {
        const double r = r_in * std::sqrt(u(rng));
        const Vec2 p = sp.center + unit_from_angle(kTwoPi * u(rng)) * r;
        bool blocked = false;
        for (const auto& b : sp.bubbles) blocked = blocked || distance(p, b.center) < b.radius;
        for (const auto& cid : sp.children) {
            const auto* child = scene::find_sphere(s, cid);
            blocked = blocked || (child && distance(p, child->center) < child->radius);
        }
        if (!blocked) return p;
    }
    throw Error(ErrorCode::Validation, "sphere '" + sp.id + "' has no free interior to emit from");
}

void check_params(const Params& p)
{
    if (p.rays_per_iter < 1 || p.max_iter < 1 || p.grid < 1) {
        throw Error(ErrorCode::Validation, "radiance: rays_per_iter, max_iter and grid must be >= 1");
    }
    if (!(p.tol > 0.0) || !std::isfinite(p.tol)) throw Error(ErrorCode::Validation, "radiance: tol must be > 0");
    if (p.limits.max_events < 1 || !(p.limits.min_intensity > 0.0)) {
        throw Error(ErrorCode::Validation, "radiance: max_events must be >= 1 and min_intensity > 0");
    }
}

void check_injection(const scene::Scenario& s, const scene::Beam& b)
{
    if (b.source_sphere && !scene::find_sphere(s, *b.source_sphere)) {
        throw Error(ErrorCode::Validation, "injection '" + b.id + "' references unknown sphere '" + *b.source_sphere + "'");
    }
    if (!(b.origin_depth >= 0.0 && b.origin_depth <= 1.0) || !(b.spread >= 0.0) || !is_finite(b.origin) ||
        !std::isfinite(b.direction) || !std::isfinite(b.spread) || !std::isfinite(b.origin_angle)) {
        throw Error(ErrorCode::Validation, "injection '" + b.id + "' has invalid geometry");
    }
    if (!(b.intensity.min() >= 0.0) || !std::isfinite(b.intensity.max())) {
        throw Error(ErrorCode::Validation, "injection '" + b.id + "' has negative intensity");
    }
}

optics::Ray injection_ray(std::mt19937_64& rng, const scene::Scenario& s, const scene::Beam& b, const Rgb& color)
{
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Vec2 origin = scene::beam_origin(s, b);
    if (b.source_sphere && b.origin_depth > 1.0 - 1e-9) {
        const auto* sp = scene::find_sphere(s, *b.source_sphere);
        origin = sp->center + unit_from_angle(b.origin_angle) * ((1.0 - 1e-9) * sp->radius);
    }
    const double theta = b.direction + b.spread * (u(rng) - 0.5);
    return {origin, unit_from_angle(theta), color, 0.0};
}

void finish_report(Grid& g, Report& r)
{
    r.uniformity = uniformity(g);
    r.shadow_regions = shadow_regions(g);
    r.shadow_fraction = shadow_fraction(g, r.shadow_regions);
    r.mean_radiance = mean_radiance(g);
}

} // namespace

std::size_t Grid::interior_count() const
{
    return static_cast<std::size_t>(std::count(interior.begin(), interior.end(), std::uint8_t{1}));
}

Grid make_grid(const scene::PsycheSphere& sp, int n)
{
    if (n < 1) throw Error(ErrorCode::Validation, "grid must have at least one cell per side");
    Grid g;
    g.sphere_id = sp.id;
    g.n = n;
    g.cell_size = 2.0 * sp.radius / n;
    g.origin = sp.center - Vec2{sp.radius, sp.radius};
    const std::size_t total = static_cast<std::size_t>(n) * n;
    g.cells.assign(total, Rgb{});
    g.interior.assign(total, 0);
    g.coverage.assign(total, 0.0);
    constexpr int kSub = 8;
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            const std::size_t k = g.index(i, j);
            g.interior[k] = distance(g.cell_center(i, j), sp.center) < sp.radius;
            int hits = 0;
            for (int b = 0; b < kSub; ++b) {
                for (int a = 0; a < kSub; ++a) {
                    const Vec2 p = g.origin + Vec2{(i + (a + 0.5) / kSub) * g.cell_size, (j + (b + 0.5) / kSub) * g.cell_size};
                    hits += distance(p, sp.center) < sp.radius;
                }
            }
            g.coverage[k] = static_cast<double>(hits) / (kSub * kSub);
        }
    }
    return g;
}

Result compute_equilibrium(const scene::Scenario& s, std::string_view sphere_id,
                           std::span<const scene::Beam> injections, const Params& params)
{
    check_params(params);
    const auto* sp = scene::find_sphere(s, sphere_id);
    if (!sp) throw Error(ErrorCode::NotFound, "radiance: unknown sphere '" + std::string(sphere_id) + "'");
    const auto scene = optics::OpticalScene::build(s);
    for (const auto& b : injections) check_injection(s, b);

    Result result;
    Grid& grid = result.grid;
    Report& report = result.report;
    grid = make_grid(*sp, params.grid);

    std::vector<Source> sources;
    if (sp->light_level > 0.0) {
        const double r_in = sp->inner_radius();
        sources.push_back({nullptr, sp->light_level * kPi * r_in * r_in, Rgb{1.0, 1.0, 1.0}});
    }
    for (const auto& b : injections) {
        const double p = b.intensity.mean();
        if (p > 0.0) sources.push_back({&b, p, b.intensity * (1.0 / p)});
    }
    double total_power = 0.0;
    std::vector<double> cumulative;
    for (const auto& src : sources) {
        total_power += src.power;
        cumulative.push_back(total_power);
    }
    if (!(total_power > 0.0)) {
        report.iterations = 1;
        report.converged = true;
        report.emitted.push_back(0.0);
        report.deposited.push_back(0.0);
        finish_report(grid, report);
        return result;
    }

    // Every traced segment is at most a diameter long and each branching level
    // carries at most the launched power, so this bounds deposit by emission.
    const double path_budget = (params.limits.max_events + 1) * 2.0 * sp->radius;
    const double weight = total_power / params.rays_per_iter;
    const double cell_area = grid.cell_size * grid.cell_size;
    const double r2 = sp->radius * sp->radius;

    std::mt19937_64 rng(params.seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<optics::TraceNode> nodes;
    std::vector<Rgb> iteration(grid.cells.size());
    std::vector<Rgb>& mean = grid.cells;

    for (int it = 1; it <= params.max_iter; ++it) {
        std::fill(iteration.begin(), iteration.end(), Rgb{});
        for (int r = 0; r < params.rays_per_iter; ++r) {
            const double pick = u(rng) * total_power;
            const std::size_t which = std::min<std::size_t>(
                std::upper_bound(cumulative.begin(), cumulative.end(), pick) - cumulative.begin(), sources.size() - 1);
            const Source& src = sources[which];
            optics::Ray ray;
            if (src.beam) {
                ray = injection_ray(rng, s, *src.beam, src.color);
            } else {
                const Vec2 p = sample_emission_point(rng, s, *sp);
                ray = {p, unit_from_angle(kTwoPi * u(rng)), src.color, 0.0};
            }
            optics::trace_tree(scene, ray, params.limits, nodes);
            for (const auto& node : nodes) {
                const Vec2 mid = (node.segment.start + node.segment.end) * 0.5;
                const Vec2 off = mid - sp->center;
                if (dot(off, off) >= r2) continue; // only light inside this sphere
                deposit(grid, iteration, node.segment.start, node.segment.end, node.segment.intensity, node.attenuation,
                        weight / path_budget);
            }
        }

        double deposited = 0.0;
        for (std::size_t k = 0; k < iteration.size(); ++k) {
            deposited += iteration[k].mean();
            const double area = cell_area * grid.coverage[k];
            iteration[k] = area > 0.0 ? iteration[k] * (1.0 / area) : Rgb{};
        }
        report.emitted.push_back(total_power);
        report.deposited.push_back(deposited);

        double worst = 0.0;
        for (std::size_t k = 0; k < mean.size(); ++k) {
            const double before = mean[k].mean();
            for (std::size_t c = 0; c < 3; ++c) mean[k][c] += (iteration[k][c] - mean[k][c]) / it;
            const double after = mean[k].mean();
            if (grid.interior[k] && after > kNegligible) worst = std::max(worst, std::abs(after - before) / after);
        }
        report.iterations = it;
        report.max_relative_change = worst;
        if (it >= 2 && worst < params.tol) {
            report.converged = true;
            break;
        }
    }
    finish_report(grid, report);
    return result;
}

double uniformity(const Grid& g)
{
    double sum = 0.0, sum2 = 0.0;
    std::size_t n = 0;
    for (std::size_t k = 0; k < g.cells.size(); ++k) {
        if (!g.interior[k]) continue;
        const double l = g.luminance(k);
        sum += l;
        sum2 += l * l;
        ++n;
    }
    if (n == 0) throw Error(ErrorCode::Contract, "uniformity: grid has no interior cells");
    const double mean = sum / n;
    if (!(mean > 0.0)) return 0.0;
    const double var = std::max(0.0, sum2 / n - mean * mean);
    return std::clamp(1.0 - std::sqrt(var) / mean, 0.0, 1.0);
}

std::vector<Region> shadow_regions(const Grid& g, double tau)
{
    if (!(tau > 0.0 && tau < 1.0)) throw Error(ErrorCode::Contract, "shadow_regions: tau must lie in (0,1)");
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t k = 0; k < g.cells.size(); ++k) {
        if (g.interior[k]) {
            sum += g.luminance(k);
            ++count;
        }
    }
    const double mean = count ? sum / count : 0.0;
    auto dark = [&](std::size_t k) { return g.interior[k] && (mean <= 0.0 || g.luminance(k) < tau * mean); };

    std::vector<std::uint8_t> seen(g.cells.size(), 0);
    std::vector<Region> regions;
    std::vector<std::size_t> stack;
    for (std::size_t start = 0; start < g.cells.size(); ++start) {
        if (seen[start] || !dark(start)) continue;
        Region region;
        stack.push_back(start);
        seen[start] = 1;
        while (!stack.empty()) {
            const std::size_t k = stack.back();
            stack.pop_back();
            region.push_back(k);
            const int i = static_cast<int>(k % g.n), j = static_cast<int>(k / g.n);
            const int di[] = {1, -1, 0, 0}, dj[] = {0, 0, 1, -1};
            for (int e = 0; e < 4; ++e) {
                const int a = i + di[e], b = j + dj[e];
                if (a < 0 || b < 0 || a >= g.n || b >= g.n) continue;
                const std::size_t nk = g.index(a, b);
                if (!seen[nk] && dark(nk)) {
                    seen[nk] = 1;
                    stack.push_back(nk);
                }
            }
        }
        std::sort(region.begin(), region.end());
        regions.push_back(std::move(region));
    }
    std::stable_sort(regions.begin(), regions.end(),
                     [](const Region& a, const Region& b) { return a.size() > b.size(); });
    return regions;
}

double shadow_fraction(const Grid& g, const std::vector<Region>& regions)
{
    const std::size_t interior = g.interior_count();
    if (interior == 0) return 0.0;
    std::size_t dark = 0;
    for (const auto& r : regions) dark += r.size();
    return static_cast<double>(dark) / interior;
}

Rgb mean_radiance(const Grid& g)
{
    Rgb sum;
    std::size_t n = 0;
    for (std::size_t k = 0; k < g.cells.size(); ++k) {
        if (!g.interior[k]) continue;
        sum += g.cells[k];
        ++n;
    }
    return n ? sum * (1.0 / n) : sum;
}

double enlightenment_score(const Grid&, const Report& r, const scene::PsycheSphere& sphere)
{
    double score = r.uniformity * (1.0 - r.shadow_fraction);
    if (!sphere.fractures.empty()) score *= 0.5;
    if (std::any_of(sphere.bubbles.begin(), sphere.bubbles.end(), [](const scene::Bubble& b) { return b.is_opaque(); })) {
        score *= 0.5;
    }
    return std::clamp(score, 0.0, 1.0);
}

std::string to_ppm(const Grid& g)
{
    double peak = 0.0;
    for (std::size_t k = 0; k < g.cells.size(); ++k) {
        if (g.interior[k]) peak = std::max(peak, g.luminance(k));
    }
    std::string out = "P6\n" + std::to_string(g.n) + " " + std::to_string(g.n) + "\n255\n";
    out.reserve(out.size() + 3 * g.cells.size());
    auto byte = [](double v) { return static_cast<char>(static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0))); };
    for (int row = 0; row < g.n; ++row) {
        const int j = g.n - 1 - row;
        for (int i = 0; i < g.n; ++i) {
            const std::size_t k = g.index(i, j);
            const double v = (g.interior[k] && peak > 0.0) ? g.luminance(k) / peak : 0.0;
            // warm ramp: black -> red -> yellow -> white
            out += byte(3.0 * v);
            out += byte(3.0 * v - 1.0);
            out += byte(3.0 * v - 2.0);
        }
    }
    return out;
}

} // namespace liveia::radiance
