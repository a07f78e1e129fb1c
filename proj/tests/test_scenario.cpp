#include <doctest.h>

#include <unistd.h>

#include <filesystem>
#include <fstream>

#include "nldiff/scenario.hpp"

using namespace nldiff;
namespace fs = std::filesystem;

namespace {

const fs::path kData = NLDIFF_TEST_DATA;

ErrorKind kind_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected an error");
    return ErrorKind::ConfigError;
}

struct Scratch {
    fs::path dir = fs::temp_directory_path() / ("nldiff_scenario_" + std::to_string(::getpid()));
    Scratch() { fs::create_directories(dir); }
    ~Scratch() { fs::remove_all(dir); }
    fs::path write(const std::string& name, const std::string& body) const {
        std::ofstream(dir / name) << body;
        return dir / name;
    }
};

}

TEST_CASE("commands round-trip through their names") {
    using scenario::Command;
    for (auto c : {Command::Stationary, Command::Evolve, Command::Dtn, Command::Check})
        CHECK(scenario::parse_command(scenario::to_string(c)) == c);
    CHECK(kind_of([] { scenario::parse_command("solve"); }) == ErrorKind::ConfigError);
}

TEST_CASE("exit codes follow the error class") {
    CHECK(scenario::exit_code_for(ErrorKind::ConfigError) == 1);
    CHECK(scenario::exit_code_for(ErrorKind::NotConnected) == 1);
    CHECK(scenario::exit_code_for(ErrorKind::AsymmetricWeights) == 1);
    CHECK(scenario::exit_code_for(ErrorKind::RangeInfeasible) == 2);
    CHECK(scenario::exit_code_for(ErrorKind::CompatibilityViolated) == 2);
    CHECK(scenario::exit_code_for(ErrorKind::SolverDiverged) == 3);
    CHECK(scenario::exit_code_for(ErrorKind::NumericalFailure) == 3);
}

TEST_CASE("graph descriptions") {
    auto st = scenario::parse_graph_json(R"({"type": "stefan", "latent": 2.0})");
    CHECK(st.values(0.0).lo == doctest::Approx(0.0));
    CHECK(st.values(0.0).hi == doctest::Approx(2.0));
    CHECK(st.minimal_section(1.0) == doctest::Approx(3.0));

    auto hs = scenario::parse_graph_json(R"("hele_shaw")");
    CHECK(hs.range_bounds().first == 0.0);
    CHECK(hs.range_bounds().second == 1.0);

    auto pw = scenario::parse_graph_json(R"({"type": "power", "s": 3.0})");
    CHECK(pw.minimal_section(-2.0) == doctest::Approx(-8.0));

    auto ob = scenario::parse_graph_json(R"({"type": "obstacle", "lo": -1, "hi": 1, "inner": "identity"})");
    CHECK(ob.domain().first == -1.0);
    CHECK(ob.domain().second == 1.0);

    auto pc = scenario::parse_graph_json(R"({"type": "piecewise", "segments": [
        {"hi": 0, "coef": 1},
        {"point": 0, "vlo": 0, "vhi": 0.5},
        {"lo": 0, "offset": 0.5, "coef": 2}]})");
    CHECK(pc.minimal_section(1.0) == doctest::Approx(2.5));
    CHECK(pc.values(0.0).hi == doctest::Approx(0.5));

    CHECK(kind_of([] { scenario::parse_graph_json(R"({"type": "cubic"})"); }) == ErrorKind::ConfigError);
    CHECK(kind_of([] { scenario::parse_graph_json("{not json"); }) == ErrorKind::ConfigError);
}

TEST_CASE("space descriptions") {
    auto s = scenario::parse_space_json(R"({"nodes": 3, "edges": [[0, 1, 1.0], [1, 2, 2.5]]})");
    CHECK(s.node_count() == 3);
    CHECK(s.nu(1) == doctest::Approx(3.5));
    CHECK(s.m(1, 2) == doctest::Approx(2.5 / 3.5));

    auto csv = scenario::load_graph_file(kData / "path4.csv");
    CHECK(csv.node_count() == 4);
    CHECK(csv.nu(1) == doctest::Approx(3.0));

    auto rel = scenario::parse_space_json(R"("path4.csv")", kData);
    CHECK(rel.nu(2) == doctest::Approx(3.0));

    auto grid = scenario::parse_space_json(
        R"({"points": [[0], [1], [2]], "spacing": 1.0, "profile": {"type": "indicator"}})");
    CHECK(grid.node_count() == 3);

    CHECK(kind_of([] { scenario::parse_space_json(R"({"nodes": 2, "edges": [[0, 1]]})"); }) ==
          ErrorKind::ConfigError);
    CHECK(kind_of([] { scenario::parse_space_json(R"({"nodes": 3, "edges": [[0, 1, 1.0]]})"); }) ==
          ErrorKind::IsolatedNode);
    CHECK(kind_of([] { scenario::load_graph_file(kData / "absent.csv"); }) == ErrorKind::ConfigError);
}

TEST_CASE("malformed graph CSV files are configuration errors") {
    Scratch s;
    CHECK(kind_of([&] { scenario::load_graph_file(s.write("h.csv", "a,b,c\n0,1,1\n")); }) == ErrorKind::ConfigError);
    CHECK(kind_of([&] { scenario::load_graph_file(s.write("r.csv", "i,j,w\n0,1\n")); }) == ErrorKind::ConfigError);
    CHECK(kind_of([&] { scenario::load_graph_file(s.write("e.csv", "i,j,w\n")); }) == ErrorKind::ConfigError);
}

TEST_CASE("run reports configuration problems without throwing") {
    Scratch s;
    auto missing = scenario::run(scenario::Command::Stationary, s.dir / "nope.json", s.dir / "out");
    CHECK(missing.exit_code == 1);
    CHECK(missing.summary.find("config_error") != std::string::npos);

    auto no_graph = scenario::run(scenario::Command::Stationary, kData / "missing_graph.json", s.dir / "out");
    CHECK(no_graph.exit_code == 1);
    CHECK_FALSE(no_graph.diagnostics.empty());

    auto bad_len = s.write("len.json", R"({"space": {"nodes": 2, "edges": [[0, 1, 1]]}, "data": {"phi": [1, 2, 3]}})");
    CHECK(scenario::run(scenario::Command::Stationary, bad_len, s.dir / "out").exit_code == 1);

    auto bad_p = s.write("p.json", R"({"space": {"nodes": 2, "edges": [[0, 1, 1]]}, "flux": {"p": 1.0},
                                      "data": {"phi": [1, 2]}})");
    CHECK(scenario::run(scenario::Command::Stationary, bad_p, s.dir / "out").exit_code == 1);
}

TEST_CASE("a stationary run writes its outputs") {
    Scratch s;
    auto o = scenario::run(scenario::Command::Stationary, kData / "stationary_ok.json", s.dir / "out");
    CHECK(o.exit_code == 0);
    CHECK(fs::exists(s.dir / "out" / "solution.csv"));
    CHECK(fs::exists(s.dir / "out" / "report.json"));
    std::ifstream in(s.dir / "out" / "solution.csv");
    std::string header;
    std::getline(in, header);
    CHECK(header == "node,u,v");
    int rows = 0;
    for (std::string line; std::getline(in, line);) rows += !line.empty();
    CHECK(rows == 4);
}

TEST_CASE("infeasible data exits with code 2") {
    Scratch s;
    CHECK(scenario::run(scenario::Command::Stationary, kData / "stationary_infeasible.json", s.dir / "a").exit_code == 2);
    CHECK(scenario::run(scenario::Command::Stationary, kData / "stationary_boundary.json", s.dir / "b").exit_code == 2);
    CHECK(scenario::run(scenario::Command::Evolve, kData / "evolve_infeasible.json", s.dir / "c").exit_code == 2);
}
