#include "nlch/snapshot.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "nlch/errors.hpp"

namespace nlch {

namespace {

constexpr const char* kMagic = "NLCH-SNAPSHOT";
constexpr int kVersion = 1;

std::string num(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

std::uint64_t to_little_endian(std::uint64_t bits) {
  if constexpr (std::endian::native == std::endian::big) {
    std::uint64_t out = 0;
    for (int b = 0; b < 8; ++b) out |= ((bits >> (8 * b)) & 0xffu) << (8 * (7 - b));
    return out;
  }
  return bits;
}

[[noreturn]] void bad(const std::filesystem::path& path, const std::string& why) {
  throw ValidationError("snapshot " + path.string() + ": " + why);
}

}  // namespace

void write_snapshot(const std::filesystem::path& path, const Field& field, const std::string& name,
                    double time) {
  const Grid& g = field.grid();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << kMagic << "\nversion " << kVersion << "\ndim " << g.dim() << "\ncells";
  for (int k = 0; k < g.dim(); ++k) out << ' ' << g.cells(k);
  out << "\nextent";
  for (int k = 0; k < g.dim(); ++k) out << ' ' << num(g.extent(k));
  out << "\nspacing";
  for (int k = 0; k < g.dim(); ++k) out << ' ' << num(g.spacing(k));
  out << "\nfield " << name << "\ntime " << num(time) << "\ncount " << field.size() << "\nend\n";
  for (double v : field.values()) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    bits = to_little_endian(bits);
    out.write(reinterpret_cast<const char*>(&bits), sizeof bits);
  }
  if (!out) throw Error("failed writing " + path.string());
}

Snapshot read_snapshot(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) bad(path, "cannot open");
  std::string line;
  if (!std::getline(in, line) || line != kMagic) bad(path, "missing magic string");

  int version = 0, dim = 0;
  std::size_t count = 0;
  int cells[2] = {0, 1};
  double extent[2] = {0.0, 1.0};
  Snapshot snap;
  bool saw_end = false;
  while (std::getline(in, line)) {
    if (line == "end") {
      saw_end = true;
      break;
    }
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "version") ls >> version;
    else if (key == "dim") ls >> dim;
    else if (key == "cells") for (int k = 0; k < dim; ++k) ls >> cells[k];
    else if (key == "extent") for (int k = 0; k < dim; ++k) ls >> extent[k];
    else if (key == "spacing") continue;
    else if (key == "field") ls >> snap.name;
    else if (key == "time") ls >> snap.time;
    else if (key == "count") ls >> count;
    else bad(path, "unknown header key '" + key + "'");
    if (ls.fail()) bad(path, "malformed header line '" + line + "'");
  }
  if (!saw_end) bad(path, "header not terminated");
  if (version != kVersion) bad(path, "unsupported version " + std::to_string(version));
  if (dim != 1 && dim != 2) bad(path, "dim must be 1 or 2");

  const Grid grid = dim == 1 ? Grid::line(cells[0], extent[0])
                             : Grid::rect(cells[0], cells[1], extent[0], extent[1]);
  if (count != grid.size())
    bad(path, "header count " + std::to_string(count) + " does not match " +
                  std::to_string(grid.size()) + " cells");
  std::vector<double> values(count);
  for (double& v : values) {
    std::uint64_t bits;
    if (!in.read(reinterpret_cast<char*>(&bits), sizeof bits)) bad(path, "payload shorter than header count");
    bits = to_little_endian(bits);
    std::memcpy(&v, &bits, sizeof bits);
  }
  if (in.peek() != std::char_traits<char>::eof()) bad(path, "payload longer than header count");
  snap.field = Field(grid, std::move(values));
  return snap;
}

}  // namespace nlch
