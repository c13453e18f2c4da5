#pragma once

#include "stochvec/grid.hpp"

#include <cstdint>
#include <filesystem>
#include <string>

namespace stochvec {

struct FieldMeta {
  std::string name;
  double t = 0.0;
  std::uint64_t seed = 0;
};

/// Writes `path` as CSV (header x1..xd,f1..fm, one row per node in flat
/// order, %.17g) and a JSON sidecar with the same stem: {dim, L, n, t, name, seed}.
void write_field_csv(const std::filesystem::path& path, const GridField& f, const FieldMeta& meta);

/// Reads a CSV written by write_field_csv together with its sidecar.
GridField read_field_csv(const std::filesystem::path& path, FieldMeta* meta = nullptr);

/// Writes a CSV table with the given header and rows (%.17g).
void write_table_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
                     const std::vector<std::vector<double>>& rows);

}  // namespace stochvec
