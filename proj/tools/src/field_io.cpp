#include "field_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include "dampwave/error.hpp"

namespace dampwave::cli {

void write_field(std::ostream& out, const GridField& field) {
  out << field.domain().fingerprint() << '\n';
  char buf[32];
  for (double v : field.values()) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out << buf << '\n';
  }
}

void write_field(const std::filesystem::path& path, const GridField& field) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write field file '" + path.string() + "'");
  write_field(out, field);
}

GridField read_field(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("field file is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  GridField field(Domain::from_fingerprint(line));
  std::size_t count = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (count == field.size()) throw ConfigError("field file has more values than the domain");
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(line.data(), line.data() + line.size(), v);
    if (ec != std::errc() || ptr != line.data() + line.size() || !std::isfinite(v))
      throw ConfigError("field file value " + std::to_string(count + 1) + " is not a finite number");
    field[count++] = v;
  }
  if (count != field.size())
    throw ConfigError("field file has " + std::to_string(count) + " values, the domain needs " +
                      std::to_string(field.size()));
  return field;
}

GridField read_field(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open field file '" + path.string() + "'");
  return read_field(in);
}

}  // namespace dampwave::cli
