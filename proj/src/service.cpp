#include "liveia/service.hpp"

#include "liveia/api.hpp"
#include "liveia/error.hpp"
#include "liveia/render.hpp"
#include "liveia/serialize.hpp"

#include <httplib.h>

#include <charconv>
#include <functional>

namespace liveia::service {

namespace {

using api::json;

constexpr const char* kJson = "application/json";
constexpr const char* kSvg = "image/svg+xml";
constexpr const char* kPpm = "image/x-portable-pixmap";

void send_json(httplib::Response& res, int status, const json& body)
{
    res.status = status;
    res.set_content(serial::canonical_dump(body), kJson);
}

void send_error(httplib::Response& res, const Error& e, json detail = json::object())
{
    send_json(res, api::http_status(e.code()), api::error_body(e, std::move(detail)));
}

/// Runs a handler and turns every failure into the error envelope.
void guarded(httplib::Response& res, const std::function<void()>& fn)
{
    try {
        fn();
    } catch (const Error& e) {
        send_error(res, e);
    } catch (const json::exception& e) {
        send_error(res, Error(ErrorCode::Malformed, std::string("bad JSON: ") + e.what()));
    } catch (const std::exception& e) {
        send_error(res, Error(ErrorCode::Internal, e.what()));
    }
}

std::optional<std::string> query(const httplib::Request& req, const char* key)
{
    if (!req.has_param(key)) return std::nullopt;
    return req.get_param_value(key);
}

long long int_param(const httplib::Request& req, const char* key, long long fallback)
{
    const auto v = query(req, key);
    if (!v) return fallback;
    long long out = 0;
    const auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
    if (ec != std::errc() || ptr != v->data() + v->size())
        throw Error(ErrorCode::Validation, std::string("query parameter '") + key + "' must be an integer");
    return out;
}

double real_param(const httplib::Request& req, const char* key, double fallback)
{
    const auto v = query(req, key);
    if (!v) return fallback;
    try {
        std::size_t used = 0;
        const double d = std::stod(*v, &used);
        if (used == v->size() && std::isfinite(d)) return d;
    } catch (const std::exception&) {
    }
    throw Error(ErrorCode::Validation, std::string("query parameter '") + key + "' must be a number");
}

bool flag_param(const httplib::Request& req, const char* key, bool fallback)
{
    const auto v = query(req, key);
    if (!v) return fallback;
    if (*v == "1" || *v == "true") return true;
    if (*v == "0" || *v == "false") return false;
    throw Error(ErrorCode::Validation, std::string("query parameter '") + key + "' must be 0/1/true/false");
}

int bounded(long long v, long long lo, long long hi, const char* key)
{
    if (v < lo || v > hi)
        throw Error(ErrorCode::Validation, std::string("'") + key + "' must be in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    return static_cast<int>(v);
}

radiance::Params radiance_params(const httplib::Request& req)
{
    radiance::Params p;
    p.seed = static_cast<std::uint64_t>(int_param(req, "seed", static_cast<long long>(p.seed)));
    p.grid = bounded(int_param(req, "grid", p.grid), 1, 512, "grid");
    p.rays_per_iter = bounded(int_param(req, "rays_per_iter", p.rays_per_iter), 1, 1000000, "rays_per_iter");
    p.max_iter = bounded(int_param(req, "max_iter", p.max_iter), 1, 100000, "max_iter");
    p.tol = real_param(req, "tol", p.tol);
    return p;
}

std::string sphere_param(const httplib::Request& req, const scene::Scenario& s, const char* key)
{
    if (auto v = query(req, key)) return *v;
    if (s.spheres.empty()) throw Error(ErrorCode::Validation, "scenario has no spheres");
    return s.spheres.front().id;
}

/// Scenario from a request body. Fills a missing id and creation time.
scene::Scenario scenario_body(const httplib::Request& req, httplib::Response& res, bool& ok)
{
    scene::Scenario s = serial::deserialize(req.body);
    if (s.id.empty()) s.id = scene::new_id();
    if (s.created_at.empty()) s.created_at = scene::now_utc_iso8601();
    const auto violations = scene::validate(s);
    ok = violations.empty();
    if (!ok) {
        send_error(res, Error(ErrorCode::Validation, violations.front().message), {{"violations", api::violations_json(violations)}});
    }
    return s;
}

} // namespace

struct Service::Impl {
    store::Store& store;
    httplib::Server server;

    explicit Impl(store::Store& st) : store(st) { routes(); }

    render::Options render_options(const httplib::Request& req, const scene::Scenario& s) const
    {
        render::Options o;
        if (auto m = query(req, "mode")) o.mode = render::parse_mode(*m);
        o.focus = query(req, "focus");
        o.width = bounded(int_param(req, "width", o.width), 16, 8192, "width");
        o.rays = flag_param(req, "rays", true);
        if (auto sh = query(req, "shadows")) o.overlays.push_back(api::equilibrium(s, *sh, radiance_params(req)));
        return o;
    }

    std::optional<render::Timeline> timeline_for(const std::string& id, const render::Options& o) const
    {
        if (o.mode != render::Mode::Overview) return std::nullopt;
        auto lin = store.lineage(id);
        return render::Timeline{std::move(lin.ancestors), std::move(lin.descendants)};
    }

    void routes()
    {
        server.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
            send_json(res, 200, {{"status", "ok"}});
        });

        server.Post("/scenarios", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                bool ok = false;
                auto s = scenario_body(req, res, ok);
                if (!ok) return;
                if (store.contains(s.id)) throw Error(ErrorCode::Version, "scenario '" + s.id + "' already exists; use PUT");
                const auto digest = store.put(s);
                res.set_header("Location", "/scenarios/" + s.id);
                send_json(res, 201, {{"id", s.id}, {"digest", digest}});
            });
        });

        server.Get(R"(/scenarios/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                res.status = 200;
                res.set_content(store.document(req.matches[1]), kJson);
            });
        });

        server.Put(R"(/scenarios/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                const std::string id = req.matches[1];
                const auto existing = store.get(id);
                scene::Scenario s = serial::deserialize(req.body);
                if (!s.id.empty() && s.id != id) throw Error(ErrorCode::Validation, "document id does not match the URL");
                // identity and lineage are not editable through PUT
                s.id = id;
                s.parent = existing.parent;
                s.created_at = existing.created_at;
                const auto violations = scene::validate(s);
                if (!violations.empty()) {
                    send_error(res, Error(ErrorCode::Validation, violations.front().message), {{"violations", api::violations_json(violations)}});
                    return;
                }
                const auto digest = store.put(s);
                send_json(res, 200, {{"id", id}, {"digest", digest}});
            });
        });

        server.Delete(R"(/scenarios/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                store.remove(req.matches[1]);
                res.status = 204;
            });
        });

        server.Post(R"(/scenarios/([^/]+)/fork)", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                const std::string parent = req.matches[1];
                const auto child = store.fork(parent);
                res.set_header("Location", "/scenarios/" + child.id);
                send_json(res, 201, {{"id", child.id}, {"parent", parent}});
            });
        });

        server.Post(R"(/scenarios/([^/]+)/trace)", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                const auto s = store.get(req.matches[1]);
                const json request = req.body.empty() ? json() : json::parse(req.body);
                send_json(res, 200, api::trace(s, request));
            });
        });

        server.Get(R"(/scenarios/([^/]+)/radiance)", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                const auto s = store.get(req.matches[1]);
                const auto sphere = sphere_param(req, s, "sphere");
                const auto r = api::equilibrium(s, sphere, radiance_params(req));
                json body = api::to_json(r);
                body["enlightenment_score"] = api::metrics(s, sphere, r)["enlightenment_score"];
                send_json(res, 200, body);
            });
        });

        server.Get(R"(/scenarios/([^/]+)/render)", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                const std::string id = req.matches[1];
                const auto s = store.get(id);
                const auto format = query(req, "format").value_or("svg");
                if (format == "ppm") {
                    const auto sphere = query(req, "sphere") ? sphere_param(req, s, "sphere") : sphere_param(req, s, "focus");
                    const auto r = api::equilibrium(s, sphere, radiance_params(req));
                    res.status = 200;
                    res.set_content(radiance::to_ppm(r.grid), kPpm);
                    return;
                }
                if (format != "svg") throw Error(ErrorCode::Validation, "format must be svg or ppm");
                const auto opts = render_options(req, s);
                const auto tl = timeline_for(id, opts);
                res.status = 200;
                res.set_content(render::render_svg(s, opts, tl ? &*tl : nullptr), kSvg);
            });
        });

        server.Get(R"(/scenarios/([^/]+)/frames)", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                const std::string id = req.matches[1];
                const auto s = store.get(id);
                const int steps = bounded(int_param(req, "steps", 8), 1, kMaxFrames, "steps");
                const auto opts = render_options(req, s);
                const auto tl = timeline_for(id, opts);
                send_json(res, 200, {{"steps", steps}, {"frames", render::render_frames(s, steps, opts, tl ? &*tl : nullptr)}});
            });
        });

        server.Get(R"(/scenarios/([^/]+)/similar)", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                const int k = bounded(int_param(req, "k", 5), 1, 1000, "k");
                send_json(res, 200, {{"id", std::string(req.matches[1])}, {"results", api::to_json(store.similar(req.matches[1], k))}});
            });
        });

        server.Get(R"(/scenarios/([^/]+)/suggest)", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                const int k = bounded(int_param(req, "k", 5), 1, 1000, "k");
                send_json(res, 200, {{"id", std::string(req.matches[1])}, {"suggestions", api::to_json(store.suggest(req.matches[1], k))}});
            });
        });

        server.Get(R"(/timeline/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] { send_json(res, 200, api::to_json(store.timeline(req.matches[1]))); });
        });

        auto waves_route = [this](const char* path, json (*fn)(const json&)) {
            server.Post(path, [fn](const httplib::Request& req, httplib::Response& res) {
                guarded(res, [&] { send_json(res, 200, fn(json::parse(req.body))); });
            });
        };
        waves_route("/waves/superpose", &api::waves_superpose);
        waves_route("/waves/decompose", &api::waves_decompose);
        waves_route("/waves/sample", &api::waves_sample);

        // unmatched routes and handler-less statuses get the envelope too
        server.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
            if (!res.body.empty()) return;
            if (res.status == 404) {
                send_error(res, Error(ErrorCode::NotFound, "no route " + req.method + " " + req.path));
            } else {
                send_json(res, res.status, api::error_body(Error(ErrorCode::Internal, "HTTP status " + std::to_string(res.status))));
            }
        });
        server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr) {
            send_error(res, Error(ErrorCode::Internal, "unhandled exception"));
        });
    }
};

Service::Service(store::Store& store) : impl_(std::make_unique<Impl>(store)) {}

Service::~Service()
{
    stop();
}

int Service::bind(const std::string& host, int port)
{
    if (port == 0) {
        const int bound = impl_->server.bind_to_any_port(host);
        if (bound <= 0) throw Error(ErrorCode::Io, "cannot bind " + host);
        return bound;
    }
    if (!impl_->server.bind_to_port(host, port)) throw Error(ErrorCode::Io, "cannot bind " + host + ":" + std::to_string(port));
    return port;
}

void Service::run()
{
    impl_->server.listen_after_bind();
}

void Service::stop()
{
    if (impl_) impl_->server.stop();
}

} // namespace liveia::service
