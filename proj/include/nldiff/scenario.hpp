#pragma once

#include <filesystem>
#include <string>

#include "nldiff/evolution.hpp"

namespace nldiff::scenario {

enum class Command { Stationary, Evolve, Dtn, Check };

Command parse_command(const std::string& name);
std::string to_string(Command c);

struct Outcome {
    int exit_code = 0;
    std::string summary;      // one-line JSON
    std::string diagnostics;  // human-readable, empty on success
};

// Exit codes: 0 success, 1 configuration error, 2 infeasible data
// (range or compatibility), 3 solver failure.
int exit_code_for(ErrorKind kind);

// Never throws; failures are reported through the outcome.
Outcome run(Command command, const std::filesystem::path& config, const std::filesystem::path& out_dir);

// Graph and kernel inputs, exposed for the Python layer and tests.
FiniteRandomWalkSpace load_graph_file(const std::filesystem::path& file);
FiniteRandomWalkSpace parse_space_json(const std::string& json_text, const std::filesystem::path& base_dir = {});
MonotoneGraph parse_graph_json(const std::string& json_text);

}
