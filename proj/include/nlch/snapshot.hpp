#pragma once

#include <filesystem>
#include <string>

#include "nlch/geometry.hpp"

namespace nlch {

/// Field snapshot file:
///
///   NLCH-SNAPSHOT
///   version 1
///   dim <1|2>
///   cells <n0> [n1]
///   extent <L0> [L1]
///   spacing <h0> [h1]
///   field <name>
///   time <t>
///   count <cells>
///   end
///   <count little-endian float64 values, row-major>
///
/// Numbers in the header are printed with 17 significant digits, so
/// read_snapshot(write_snapshot(x)) reproduces x bitwise.
struct Snapshot {
  Field field;
  std::string name;
  double time = 0.0;
};

void write_snapshot(const std::filesystem::path& path, const Field& field, const std::string& name,
                    double time);
Snapshot read_snapshot(const std::filesystem::path& path);

}  // namespace nlch
