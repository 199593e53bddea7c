#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace labyrinth {

/// Entry point of the `labyrinth` tool; returns the process exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Render the SVG that belongs to a CSV written by one of the verbs
/// (dispatch on its "# kind=" line). Returns the SVG path, or empty when
/// the kind has no plot.
std::filesystem::path plot_csv(const std::filesystem::path& csv);

/// Thread count: explicit flag, else LATTICE_THREADS, else the fallback.
int resolve_threads(int flag, int fallback);

}  // namespace labyrinth
