#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace surgflow {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitIo = 2;

// Entry point of the `surgflow` tool. Subcommands: generate, perturb,
// postprocess, metrics, evaluate, compare.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Procedure directories (those holding labels.csv) under `root`, sorted by name.
std::vector<std::filesystem::path> procedure_dirs(const std::filesystem::path& root);

}  // namespace surgflow
