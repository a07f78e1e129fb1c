#include <algorithm>
#include <atomic>
#include <filesystem>
#include <iostream>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "nldiff/scenario.hpp"

namespace fs = std::filesystem;
using namespace nldiff;

namespace {

std::vector<scenario::Outcome> run_batch(scenario::Command cmd, const std::vector<fs::path>& configs,
                                         const fs::path& out, bool nested, unsigned jobs) {
    std::vector<scenario::Outcome> results(configs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < configs.size(); i = next++) {
            auto dir = nested ? out / configs[i].stem() : out;
            results[i] = scenario::run(cmd, configs[i], dir);
        }
    };
    std::vector<std::thread> pool;
    jobs = std::max(1u, std::min<unsigned>(jobs, unsigned(configs.size())));
    for (unsigned t = 1; t < jobs; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    return results;
}

}

int main(int argc, char** argv) {
    CLI::App app{"Nonlocal doubly nonlinear diffusion on finite random walk spaces"};
    app.require_subcommand(1);
    std::string config, out = "nldiff_out";
    unsigned jobs = 1;
    for (const char* name : {"stationary", "evolve", "dtn", "check"}) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", config, "scenario file, or a directory of *.json scenarios")->required();
        sub->add_option("--out", out, "output directory");
        sub->add_option("--jobs", jobs, "parallel scenarios for a directory batch")->check(CLI::PositiveNumber);
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }
    auto cmd = scenario::parse_command(app.get_subcommands().front()->get_name());

    std::vector<fs::path> configs;
    bool nested = fs::is_directory(config);
    if (nested) {
        for (const auto& entry : fs::directory_iterator(config))
            if (entry.is_regular_file() && entry.path().extension() == ".json") configs.push_back(entry.path());
        std::sort(configs.begin(), configs.end());
        if (configs.empty()) {
            std::cerr << "no *.json scenarios in " << config << "\n";
            return 1;
        }
    } else {
        configs.push_back(config);
    }

    int code = 0;
    auto results = run_batch(cmd, configs, out, nested, jobs);
    for (const auto& r : results) {
        std::cout << r.summary << "\n";
        if (!r.diagnostics.empty()) std::cerr << "nldiff: " << r.diagnostics << "\n";
        code = std::max(code, r.exit_code);
    }
    return code;
}
