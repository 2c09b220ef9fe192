#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace plumerl::cli {

/// Entry point behind the `plumerl` binary. Returns 0 on success, 1 on
/// usage errors (bad flags/arguments), 2 on runtime failures.
int run(int argc, const char* const* argv);
int run(const std::vector<std::string>& args); // args without argv[0]

/// Appends a trailing moving-average reward column (window episodes wide,
/// clamped at the start) to a metrics CSV; all original columns are kept
/// untouched. Returns the output rows including the header.
std::vector<std::string> learning_curve_rows(const std::filesystem::path& metrics_csv,
                                             int window);

} // namespace plumerl::cli
