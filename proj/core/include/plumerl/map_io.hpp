#pragma once

#include "plumerl/plume.hpp"

#include <filesystem>
#include <iosfwd>

namespace plumerl {

/// Plume map file: a self-describing text header (grid dimensions, cell
/// size, origin, sources with all parameters, source cells) followed by the
/// row-major concentration values (z fastest, one x/y row per line).
/// Numbers are printed with 17 significant digits, so save/load round-trips
/// bit-exactly and identical fields produce byte-identical files.
void save_map(const PlumeField& field, std::ostream& out);
void save_map(const PlumeField& field, const std::filesystem::path& path);

PlumeField load_map(std::istream& in);
PlumeField load_map(const std::filesystem::path& path);

/// Formats a double with enough digits to round-trip ("%.17g").
std::string format_double(double v);

} // namespace plumerl
