#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace flare::cli {

/// Entry point; `args[0]` is the program name. Returns 0 on success, 2 on
/// usage errors and 1 on data or format errors.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Path of the run manifest written next to an output.
std::filesystem::path manifest_path(const std::filesystem::path& output);

/// Execute one command from its structured configuration (the "config"
/// object of a run manifest) and write its manifest.
void execute(const std::string& command, const nlohmann::json& config,
             const std::filesystem::path& output, int threads, std::ostream& out);

}  // namespace flare::cli
