#include "doctest.h"

#include "liveia/render.hpp"
#include "liveia/serialize.hpp"

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace liveia;
using serial::json;

namespace {

const std::string kCli = LIVEIA_CLI_PATH;
const std::string kData = LIVEIA_TEST_DATA;

struct Run {
    int code{-1};
    std::string out;
};

/// Runs the CLI with stderr discarded; returns exit status and stdout.
Run run(const std::string& args)
{
    const std::string cmd = kCli + " " + args + " 2>/dev/null";
    FILE* p = ::popen(cmd.c_str(), "r");
    REQUIRE(p != nullptr);
    Run r;
    char buf[4096];
    for (std::size_t n; (n = std::fread(buf, 1, sizeof buf, p)) > 0;) r.out.append(buf, n);
    const int status = ::pclose(p);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::string slurp(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string tmp_path(const std::string& name)
{
    return (std::filesystem::temp_directory_path() / ("liveia-cli-" + std::to_string(::getpid()) + "-" + name)).string();
}

} // namespace

TEST_CASE("validate exit codes")
{
    CHECK(run("validate " + kData + "/family.json").code == 0);
    CHECK(run("validate " + kData + "/empty.json").code == 0);

    const auto truncated = tmp_path("trunc.json");
    std::ofstream(truncated) << slurp(kData + "/family.json").substr(0, 120);
    CHECK(run("validate " + truncated).code == 1);

    const auto invalid = tmp_path("invalid.json");
    auto doc = json::parse(slurp(kData + "/bright_sphere.json"));
    doc["scenario"]["spheres"][0]["radius"] = -1;
    std::ofstream(invalid) << doc.dump();
    CHECK(run("validate " + invalid).code == 2);

    CHECK(run("validate /nonexistent/file.json").code == 1);
    CHECK(run("frobnicate").code == 2);
    std::filesystem::remove(truncated);
    std::filesystem::remove(invalid);
}

TEST_CASE("render matches the shared renderer byte for byte")
{
    const auto r = run("render " + kData + "/empty.json");
    REQUIRE(r.code == 0);
    std::istringstream in(r.out);
    boost::property_tree::ptree tree;
    boost::property_tree::read_xml(in, tree);
    CHECK(tree.count("svg") == 1);

    const auto s = serial::deserialize(slurp(kData + "/family.json"));
    render::Options opts;
    opts.mode = render::Mode::Perspective;
    opts.focus = "ben";
    const auto out = tmp_path("f.svg");
    REQUIRE(run("render " + kData + "/family.json -o " + out + " --mode perspective --focus ben").code == 0);
    CHECK(slurp(out) == render::render_svg(s, opts));
    CHECK(run("render " + kData + "/family.json --mode perspective --focus nobody").code == 2);
    std::filesystem::remove(out);

    const auto ppm = run("render " + kData + "/bright_sphere.json --format ppm --grid 8 --rays 200 --max-iter 3");
    REQUIRE(ppm.code == 0);
    CHECK(ppm.out.rfind("P6\n8 8\n255\n", 0) == 0);
    CHECK(ppm.out.size() == 11 + 8 * 8 * 3);
}

TEST_CASE("metrics is reproducible and reports uniformity")
{
    const std::string args = "metrics " + kData + "/bright_sphere.json --sphere self --seed 5 --grid 24 --rays 1500 --tol 0.05 --max-iter 60";
    const auto a = run(args);
    const auto b = run(args);
    REQUIRE(a.code == 0);
    CHECK(a.out == b.out);
    const auto j = json::parse(a.out);
    for (const char* key : {"uniformity", "shadow_fraction", "iterations", "enlightenment_score", "converged"}) CHECK(j.contains(key));
    CHECK(j["uniformity"].get<double>() >= 0.9);
    CHECK(run("metrics " + kData + "/bright_sphere.json --sphere ghost --grid 8 --max-iter 1").code == 2);
}

TEST_CASE("trace, fork and wave tools")
{
    const auto t = run("trace " + kData + "/family.json --beam lie");
    REQUIRE(t.code == 0);
    const auto tj = json::parse(t.out);
    CHECK(tj["beams"][0]["beam"] == "lie");
    CHECK(tj["beams"][0]["paths"].size() >= 3);
    CHECK(run("trace " + kData + "/family.json --beam nope").code == 2);

    const auto parent = tmp_path("parent.json");
    const auto child = tmp_path("child.json");
    std::filesystem::copy_file(kData + "/family.json", parent, std::filesystem::copy_options::overwrite_existing);
    REQUIRE(run("fork " + parent + " -o " + child + " --link").code == 0);
    const auto c = serial::deserialize(slurp(child));
    const auto p = serial::deserialize(slurp(parent));
    CHECK(c.parent == std::optional<std::string>("family"));
    CHECK(p.children == std::vector<std::string>{c.id});
    CHECK(serial::content_digest(c) != serial::content_digest(p)); // ids differ
    std::filesystem::remove(parent);
    std::filesystem::remove(child);

    const auto wa = tmp_path("a.json"), wb = tmp_path("b.json");
    std::ofstream(wa) << R"({"label":"a","components":[{"frequency":1,"amplitude":1,"phase":0}]})";
    std::ofstream(wb) << R"({"label":"b","components":[{"frequency":1,"amplitude":1,"phase":3.141592653589793}]})";
    const auto sum = run("wave superpose " + wa + " " + wb);
    REQUIRE(sum.code == 0);
    CHECK(json::parse(sum.out)["components"].size() == 2);

    const auto sampled = run("wave sample " + wa + " --duration 8 --rate 16");
    REQUIRE(sampled.code == 0);
    const auto sig = tmp_path("sig.json");
    std::ofstream(sig) << sampled.out;
    const auto dec = run("wave decompose " + sig);
    REQUIRE(dec.code == 0);
    const auto comps = json::parse(dec.out)["components"];
    REQUIRE(comps.size() == 1);
    CHECK(comps[0]["frequency"].get<double>() == doctest::Approx(1.0));
    CHECK(run("wave sample " + wa + " --rate 1").code == 2); // below Nyquist
    for (const auto& f : {wa, wb, sig}) std::filesystem::remove(f);
}
