#pragma once

#include <filesystem>
#include <iosfwd>

#include "dampwave/mesh.hpp"

namespace dampwave::cli {

/// Field file: the domain fingerprint on the first line, then one nodal value
/// per line in x-fastest order, printed with 17 significant digits.
void write_field(std::ostream& out, const GridField& field);
void write_field(const std::filesystem::path& path, const GridField& field);

/// Throws ConfigError on a malformed header, a wrong value count or a
/// non-finite value.
GridField read_field(std::istream& in);
GridField read_field(const std::filesystem::path& path);

}  // namespace dampwave::cli
