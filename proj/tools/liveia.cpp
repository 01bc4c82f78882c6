// liveia: batch front end to the engine. Exit codes: 0 ok, 1 I/O or
// unparseable input, 2 invalid input, 3 engine failure.

#include "liveia/api.hpp"
#include "liveia/error.hpp"
#include "liveia/radiance.hpp"
#include "liveia/render.hpp"
#include "liveia/serialize.hpp"
#include "liveia/service.hpp"
#include "liveia/store.hpp"

#include <CLI11.hpp>

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <pthread.h>
#include <sstream>
#include <thread>

namespace {

using namespace liveia;
using api::json;

int exit_code(ErrorCode c)
{
    switch (c) {
    case ErrorCode::Io:
    case ErrorCode::Malformed: return 1;
    case ErrorCode::Validation:
    case ErrorCode::DanglingRef:
    case ErrorCode::MalformedNumeral:
    case ErrorCode::Version:
    case ErrorCode::VersionMissing:
    case ErrorCode::VersionMismatch:
    case ErrorCode::NotFound: return 2;
    case ErrorCode::Contract:
    case ErrorCode::Corrupt:
    case ErrorCode::Internal: return 3;
    }
    return 3;
}

std::string read_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw Error(ErrorCode::Io, "cannot read " + path);
    return ss.str();
}

/// "-" or empty writes to stdout.
void write_output(const std::string& path, const std::string& bytes)
{
    if (path.empty() || path == "-") {
        std::cout << bytes;
        std::cout.flush();
        if (!std::cout) throw Error(ErrorCode::Io, "cannot write to stdout");
        return;
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << bytes;
    out.close();
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path);
}

json read_json(const std::string& path)
{
    const auto text = read_file(path);
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::Malformed, path + ": " + e.what());
    }
}

scene::Scenario load(const std::string& path)
{
    return serial::deserialize(read_file(path));
}

std::string dump(const json& j)
{
    return serial::canonical_dump(j) + "\n";
}

struct RadianceArgs {
    std::uint64_t seed{1};
    int grid{64};
    int rays{2000};
    int max_iter{200};
    double tol{1e-3};

    void attach(CLI::App* cmd)
    {
        cmd->add_option("--seed", seed, "random seed")->capture_default_str();
        cmd->add_option("--grid", grid, "cells per side")->capture_default_str()->check(CLI::Range(1, 512));
        cmd->add_option("--rays", rays, "rays per iteration")->capture_default_str()->check(CLI::PositiveNumber);
        cmd->add_option("--max-iter", max_iter, "iteration cap")->capture_default_str()->check(CLI::PositiveNumber);
        cmd->add_option("--tol", tol, "convergence tolerance")->capture_default_str()->check(CLI::PositiveNumber);
    }

    radiance::Params params() const
    {
        radiance::Params p;
        p.seed = seed;
        p.grid = grid;
        p.rays_per_iter = rays;
        p.max_iter = max_iter;
        p.tol = tol;
        return p;
    }
};

int serve(const std::string& host, int port, std::string data_dir)
{
    if (data_dir.empty()) {
        const char* env = std::getenv("LIVEIA_DATA");
        data_dir = env && *env ? env : "liveia-data";
    }
    // signals go to the waiter thread only
    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &set, nullptr);

    store::Store st(data_dir);
    service::Service svc(st);
    const int bound = svc.bind(host, port);
    std::cerr << "liveia: serving " << data_dir << " on http://" << host << ":" << bound << std::endl;
    std::thread waiter([&] {
        int sig = 0;
        sigwait(&set, &sig);
        svc.stop();
    });
    svc.run();
    // run() can also end on its own (e.g. listener failure); wake the waiter
    pthread_kill(waiter.native_handle(), SIGTERM);
    waiter.join();
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"liveia: light-metaphor scenario engine"};
    app.require_subcommand(1);

    std::string file, out, mode = "view", focus, beam, sphere, data_dir, format = "svg", host = "127.0.0.1";
    int width = 800, max_events = 32, port = service::kDefaultPort, max_components = 8;
    double min_intensity = 1e-3, floor = 0.01, duration = 1.0, rate = 64.0;
    bool no_rays = false, link = false;
    std::vector<std::string> wave_files;
    RadianceArgs rad;

    auto* validate = app.add_subcommand("validate", "check a scenario document");
    validate->add_option("file", file)->required();

    auto* render_cmd = app.add_subcommand("render", "draw a scenario as SVG (or a radiance PPM)");
    render_cmd->add_option("file", file)->required();
    render_cmd->add_option("-o,--output", out, "output path, - for stdout");
    render_cmd->add_option("--format", format)->check(CLI::IsMember({"svg", "ppm"}))->capture_default_str();
    render_cmd->add_option("--mode", mode)->check(CLI::IsMember({"view", "overview", "perspective"}))->capture_default_str();
    render_cmd->add_option("--focus", focus, "sphere id for perspective mode");
    render_cmd->add_option("--sphere", sphere, "sphere for --format ppm (default: focus, else first)");
    render_cmd->add_option("--width", width)->capture_default_str()->check(CLI::Range(16, 8192));
    render_cmd->add_flag("--no-rays", no_rays, "omit traced beams");
    render_cmd->add_option("--data-dir", data_dir, "store to read the fork tree from in overview mode");
    rad.attach(render_cmd);

    auto* trace_cmd = app.add_subcommand("trace", "trace beams and print paths with events");
    trace_cmd->add_option("file", file)->required();
    trace_cmd->add_option("--beam", beam, "beam id (default: all beams)");
    trace_cmd->add_option("--json", out, "write JSON here instead of stdout");
    trace_cmd->add_option("--max-events", max_events)->capture_default_str()->check(CLI::Range(1, 4096));
    trace_cmd->add_option("--min-intensity", min_intensity)->capture_default_str()->check(CLI::PositiveNumber);

    auto* metrics_cmd = app.add_subcommand("metrics", "equilibrium metrics of one sphere as JSON");
    metrics_cmd->add_option("file", file)->required();
    metrics_cmd->add_option("--sphere", sphere)->required();
    rad.attach(metrics_cmd);

    auto* fork_cmd = app.add_subcommand("fork", "write a child scenario");
    fork_cmd->add_option("file", file)->required();
    fork_cmd->add_option("-o,--output", out)->required();
    fork_cmd->add_flag("--link", link, "also rewrite the parent file with the child link");

    auto* wave = app.add_subcommand("wave", "waveform tools");
    wave->require_subcommand(1);
    auto* superpose = wave->add_subcommand("superpose", "sum two waveforms");
    superpose->add_option("waveforms", wave_files, "two waveform files")->required()->expected(2);
    superpose->add_option("-o,--output", out);
    auto* decompose = wave->add_subcommand("decompose", "Fourier components of a sampled signal");
    decompose->add_option("signal", file)->required();
    decompose->add_option("--max-components", max_components)->capture_default_str()->check(CLI::PositiveNumber);
    decompose->add_option("--floor", floor)->capture_default_str()->check(CLI::PositiveNumber);
    decompose->add_option("-o,--output", out);
    auto* sample = wave->add_subcommand("sample", "evaluate a waveform on a grid");
    sample->add_option("waveform", file)->required();
    sample->add_option("--duration", duration)->capture_default_str();
    sample->add_option("--rate", rate)->capture_default_str();
    sample->add_option("-o,--output", out);

    auto* serve_cmd = app.add_subcommand("serve", "run the HTTP service");
    serve_cmd->add_option("--port", port)->capture_default_str()->check(CLI::Range(0, 65535));
    serve_cmd->add_option("--host", host)->capture_default_str();
    serve_cmd->add_option("--data-dir", data_dir, "defaults to $LIVEIA_DATA, then ./liveia-data");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (*validate) {
            const auto text = read_file(file);
            scene::Scenario s;
            try {
                s = serial::deserialize(text);
            } catch (const Error& e) {
                std::cerr << file << ": " << to_string(e.code()) << ": " << e.what() << "\n";
                return exit_code(e.code());
            }
            const auto violations = scene::validate(s);
            for (const auto& v : violations) std::cerr << file << ": " << v.rule << " [" << v.object_id << "] " << v.message << "\n";
            if (!violations.empty()) return 2;
            std::cout << "ok\n";
            return 0;
        }
        if (*render_cmd) {
            const auto s = load(file);
            scene::require_valid(s);
            if (format == "ppm") {
                const std::string id = !sphere.empty() ? sphere : !focus.empty() ? focus : s.spheres.empty() ? "" : s.spheres.front().id;
                if (id.empty()) throw Error(ErrorCode::Validation, "scenario has no spheres");
                write_output(out, radiance::to_ppm(api::equilibrium(s, id, rad.params()).grid));
                return 0;
            }
            render::Options opts;
            opts.mode = render::parse_mode(mode);
            if (!focus.empty()) opts.focus = focus;
            opts.width = width;
            opts.rays = !no_rays;
            std::optional<render::Timeline> tl;
            if (opts.mode == render::Mode::Overview && !data_dir.empty()) {
                store::Store st(data_dir);
                auto lin = st.lineage(s.id);
                tl = render::Timeline{std::move(lin.ancestors), std::move(lin.descendants)};
            }
            write_output(out, render::render_svg(s, opts, tl ? &*tl : nullptr));
            return 0;
        }
        if (*trace_cmd) {
            const auto s = load(file);
            json req = {{"limits", {{"max_events", max_events}, {"min_intensity", min_intensity}}}};
            if (!beam.empty()) req["beam"] = beam;
            write_output(out, dump(api::trace(s, req)));
            return 0;
        }
        if (*metrics_cmd) {
            const auto s = load(file);
            const auto r = api::equilibrium(s, sphere, rad.params());
            write_output("-", dump(api::metrics(s, sphere, r)));
            return 0;
        }
        if (*fork_cmd) {
            auto parent = load(file);
            const auto child = scene::fork(parent);
            write_output(out, serial::serialize(child) + "\n");
            if (link) write_output(file, serial::serialize(parent) + "\n");
            return 0;
        }
        if (*superpose) {
            write_output(out, dump(api::waves_superpose({{"a", read_json(wave_files[0])}, {"b", read_json(wave_files[1])}})));
            return 0;
        }
        if (*decompose) {
            json req = read_json(file);
            if (!req.is_object()) throw Error(ErrorCode::Malformed, "signal file must hold an object");
            req["max_components"] = max_components;
            req["floor"] = floor;
            write_output(out, dump(api::waves_decompose(req)));
            return 0;
        }
        if (*sample) {
            write_output(out, dump(api::waves_sample({{"waveform", read_json(file)}, {"duration", duration}, {"rate", rate}})));
            return 0;
        }
        if (*serve_cmd) return serve(host, port, data_dir);
    } catch (const Error& e) {
        std::cerr << "liveia: " << to_string(e.code()) << ": " << e.what() << "\n";
        return exit_code(e.code());
    } catch (const json::exception& e) {
        std::cerr << "liveia: MALFORMED: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "liveia: INTERNAL: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
