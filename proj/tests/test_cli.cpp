#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "limitset/cli.hpp"
#include "limitset/system_spec.hpp"

using namespace limitset;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

json run_json(std::vector<std::string> args, int expected = cli::ok) {
    const Run r = run(std::move(args));
    REQUIRE_MESSAGE(r.code == expected, r.err);
    return json::parse(r.out);
}

// A spec file in the temporary directory, removed on destruction.
struct TempSpec {
    fs::path path;
    explicit TempSpec(const std::string& text, const std::string& name = "spec.json") {
        path = fs::temp_directory_path() / ("limitset_test_" + std::to_string(::getpid()) + "_" + name);
        std::ofstream(path) << text;
    }
    ~TempSpec() { fs::remove(path); }
    std::string str() const { return path.string(); }
};

}  // namespace

TEST_CASE("examples lists the built-in systems") {
    const Run r = run({"examples"});
    CHECK(r.code == cli::ok);
    for (const char* name : {"eq4", "harmonic", "blowup"}) CHECK(r.out.find(name) != std::string::npos);

    const Run show = run({"examples", "--show", "eq4"});
    CHECK(show.code == cli::ok);
    const SystemSpec spec = parse_system_spec_text(show.out);
    CHECK(spec.name == "eq4");
    CHECK(spec.f_text == std::vector<std::string>{"-abs(x2)*x2", "abs(x2)*x1"});
    CHECK(spec.v_text == "x1");
    CHECK(spec.region("axis").kind() == RegionKind::zero_set);
    CHECK(spec.region("omega_circle").kind() == RegionKind::zero_set);

    CHECK(run({"examples", "--show", "nope"}).code == cli::input_error);
}

TEST_CASE("usage errors exit with 2 and print nothing on stdout") {
    for (const auto& args : std::vector<std::vector<std::string>>{
             {"frobnicate"}, {}, {"omega", "--x0", "1,2"}, {"omega", "--system", "eq4", "--bogus", "1"},
             {"invariance", "--system", "eq4", "--region", "axis", "--mode", "sideways"}}) {
        const Run r = run(args);
        CHECK(r.code == cli::usage_error);
        CHECK(r.out.empty());
        CHECK_FALSE(r.err.empty());
    }
    const Run help = run({"--help"});
    CHECK(help.code == cli::ok);
    CHECK(help.out.find("check-thm1") != std::string::npos);
}

TEST_CASE("omega on the planar example") {
    const json j = run_json({"omega", "--system", "eq4", "--x0", "3,4"});
    CHECK(j["command"] == "omega");
    CHECK(j["system"] == "eq4");
    REQUIRE(j["representatives"].size() == 1);
    const auto rep = j["representatives"][0];
    CHECK(std::hypot(rep[0].get<double>() + 5.0, rep[1].get<double>()) < 1e-2);
    CHECK(j["settled"] == true);
    // Resolved parameters are echoed.
    CHECK(j["parameters"]["tail_fraction"] == 0.25);
    CHECK(j["parameters"]["sample_count"] == 2000);
    CHECK(j["integrator"]["t_end"] == 200.0);

    const json k = run_json({"omega", "--system", "eq4", "--x0", "2,0", "--t-end", "50", "--cluster-eps", "0.05"});
    CHECK(k["integrator"]["t_end"] == 50.0);
    CHECK(k["parameters"]["cluster_eps"] == 0.05);
    CHECK(k["representatives"][0] == json::array({2.0, 0.0}));
}

TEST_CASE("omega refuses unbounded orbits") {
    const Run r = run({"omega", "--system", "blowup", "--x0", "1"});
    CHECK(r.code == cli::verdict_inconclusive);
    const json j = json::parse(r.out);
    CHECK(j["termination"] == "blowup");
    CHECK(j["representatives"].empty());
}

TEST_CASE("simulate writes a CSV trajectory") {
    const Run r = run({"simulate", "--system", "harmonic", "--x0", "1,0", "--t-end", "2.5"});
    CHECK(r.code == cli::ok);
    std::istringstream in(r.out);
    std::string line, last;
    std::getline(in, line);
    CHECK(line == "t,x1,x2");
    std::getline(in, line);
    CHECK(line == "0,1,0");
    while (std::getline(in, line)) last = line;
    CHECK(last.rfind("2.5,", 0) == 0);

    const Run b = run({"simulate", "--system", "blowup", "--x0", "1"});
    CHECK(b.code == cli::ok);
    CHECK(b.err.find("blowup") != std::string::npos);

    const Run wrong = run({"simulate", "--system", "eq4", "--x0", "1,2,3"});
    CHECK(wrong.code == cli::input_error);
    CHECK(wrong.out.empty());
}

TEST_CASE("verdicts map to exit codes") {
    CHECK(run({"invariance", "--system", "eq4", "--region", "omega_circle", "--mode", "positive"}).code == cli::ok);
    CHECK(run({"invariance", "--system", "eq4", "--region", "left_half_plane", "--mode", "positive"}).code ==
          cli::verdict_fail);
    CHECK(run({"invariance", "--system", "eq4", "--region", "axis", "--mode", "negative"}).code == cli::ok);
    const json j = run_json({"invariance", "--system", "eq4", "--region", "vertical_axis", "--mode", "negative"},
                            cli::verdict_fail);
    CHECK(j["verdict"] == "FAIL");
    CHECK(j["first_entry"].is_object());

    const Run missing = run({"invariance", "--system", "eq4", "--region", "nope", "--mode", "positive"});
    CHECK(missing.code == cli::input_error);
    CHECK(missing.out.empty());
    CHECK(missing.err.find("regions.nope") != std::string::npos);
}

TEST_CASE("theorem checks from the command line") {
    const json t2 = run_json({"check-thm2", "--system", "eq4", "--x0", "3,4", "--x0", "0,1", "--x0=-1,-1"});
    CHECK(t2["overall"] == "PASS");
    CHECK(t2["points"].size() == 3);

    const json sweep = run_json({"sweep-weak-attractor", "--system", "eq4", "--grid", "-2:2:5"});
    CHECK(sweep["fraction"] == 1.0);

    const json sig = run_json({"lie-signal", "--system", "eq4", "--x0", "0,1"});
    CHECK(sig["sign_changes"] == 0);

    const Run bad_grid = run({"sweep-weak-attractor", "--system", "eq4", "--grid", "1:2"});
    CHECK(bad_grid.code == cli::input_error);
}

TEST_CASE("reports are deterministic") {
    const std::vector<std::string> args{"check-thm2", "--system", "eq4", "--x0", "3,4;0,1", "--reach-grid", "-1:1:3"};
    const Run a = run(args), b = run(args);
    CHECK(a.code == b.code);
    CHECK(a.out == b.out);
    const std::vector<std::string> inv{"invariance", "--system", "eq4", "--region", "unit_disk", "--mode", "positive"};
    CHECK(run(inv).out == run(inv).out);
}

TEST_CASE("system specs from files") {
    const TempSpec good(R"({
      "name": "damped",
      "dimension": 2,
      "f": ["x2", "-x1 - 0.5*x2"],
      "V": "x1^2 + x2^2",
      "box": [[-3, 3], [-3, 3]],
      "integrator": {"t_end": 80},
      "regions": {"origin": {"kind": "point_set", "points": [[0, 0]], "tol": 1e-3},
                  "disk": {"kind": "sublevel", "g": "x1^2+x2^2-4"}}
    })", "good.json");
    const json j = run_json({"omega", "--system", good.str(), "--x0", "1,1"});
    CHECK(j["system"] == "damped");
    CHECK(j["integrator"]["t_end"] == 80.0);
    CHECK(std::fabs(j["representatives"][0][0].get<double>()) < 1e-6);
    CHECK(run({"invariance", "--system", good.str(), "--region", "disk", "--mode", "positive"}).code == cli::ok);

    const SystemSpec spec = load_system_spec(good.str());
    CHECK(spec.region("disk").box().size() == 2);  // inherited from the spec box
    CHECK(spec.region("origin").tol() == 1e-3);
}

TEST_CASE("spec errors name the offending field") {
    auto error_of = [](const std::string& text) {
        try {
            parse_system_spec_text(text);
        } catch (const SpecError& e) {
            return std::make_pair(e.path(), std::string(e.what()));
        }
        return std::make_pair(std::string("<none>"), std::string());
    };
    auto [p1, m1] = error_of(R"({"name":"x","dimension":2,"f":["x2","x1","x3"]})");
    CHECK(p1 == "f");
    CHECK(m1.find("dimension mismatch") != std::string::npos);

    auto [p2, m2] = error_of(R"({"name":"x","dimension":2,"f":["x2","x1"],"V":"x1 +"})");
    CHECK(p2 == "V");
    CHECK(m2.find("position 4") != std::string::npos);

    CHECK(error_of(R"({"name":"x","dimension":2,"f":["x2","sin("]})").first == "f[1]");
    CHECK(error_of(R"({"name":"x","dimension":1,"f":["x2"]})").first == "f[0]");
    CHECK(error_of(R"({"name":"x","dimension":2,"f":["x2","x1"],"regions":{"a":{"kind":"zero_set","g":"x1 *"}}})").first ==
          "regions.a.g");
    CHECK(error_of(R"({"name":"x","dimension":2,"f":["x2","x1"],"name":"y"})").second.find("duplicate") !=
          std::string::npos);
    CHECK(error_of(R"({"name":"x",)").first == "$");
    CHECK(error_of(R"({"name":"x","dimension":2,"f":["x2","x1"],"colour":1})").first == "colour");
    CHECK(error_of(R"({"name":"x","dimension":0,"f":[]})").first == "dimension");
    CHECK(error_of(R"({"name":"x","dimension":2,"f":["x2","x1"],"integrator":{"rel_tol":-1}})").first.rfind(
              "integrator", 0) == 0);

    const TempSpec bad(R"({"name":"x","dimension":2,"f":["x2","x1"],"V":"x1 +"})", "bad.json");
    const Run r = run({"omega", "--system", bad.str(), "--x0", "1,0"});
    CHECK(r.code == cli::input_error);
    CHECK(r.out.empty());
    CHECK(r.err.find("V") != std::string::npos);

    CHECK(run({"omega", "--system", "/nonexistent/spec.json", "--x0", "1,0"}).code == cli::input_error);
}
