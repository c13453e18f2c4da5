#include "stochvec/io.hpp"

#include "stochvec/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace stochvec {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

}  // namespace

void write_field_csv(const std::filesystem::path& path, const GridField& f, const FieldMeta& meta) {
  const GridSpec& spec = f.spec();
  auto out = open_out(path);
  std::string line;
  for (int i = 0; i < spec.dim; ++i) line += (i ? ",x" : "x") + std::to_string(i + 1);
  for (int a = 0; a < f.ncomp(); ++a) line += ",f" + std::to_string(a + 1);
  out << line << '\n';
  for (std::size_t k = 0; k < f.nodes(); ++k) {
    line.clear();
    const Vec x = spec.node(k);
    for (int i = 0; i < spec.dim; ++i) {
      if (i) line += ',';
      line += fmt(x[i]);
    }
    for (int a = 0; a < f.ncomp(); ++a) line += ',' + fmt(f.at(k, a));
    out << line << '\n';
  }
  nlohmann::ordered_json side;
  side["dim"] = spec.dim;
  side["L"] = spec.L;
  side["n"] = spec.n;
  side["t"] = meta.t;
  side["name"] = meta.name;
  side["seed"] = meta.seed;
  auto js = open_out(std::filesystem::path(path).replace_extension(".json"));
  js << side.dump(2) << '\n';
}

GridField read_field_csv(const std::filesystem::path& path, FieldMeta* meta) {
  std::ifstream js(std::filesystem::path(path).replace_extension(".json"));
  if (!js) throw InvalidConfig("missing sidecar for " + path.string());
  const auto side = nlohmann::json::parse(js);
  GridSpec spec{side.at("dim").get<int>(), side.at("L").get<double>(), side.at("n").get<int>()};
  spec.validate();
  if (meta) {
    meta->name = side.at("name").get<std::string>();
    meta->t = side.at("t").get<double>();
    meta->seed = side.at("seed").get<std::uint64_t>();
  }
  std::ifstream in(path);
  if (!in) throw InvalidConfig("cannot read " + path.string());
  std::string line;
  std::getline(in, line);
  const int columns = static_cast<int>(std::count(line.begin(), line.end(), ',')) + 1;
  const int ncomp = columns - spec.dim;
  if (ncomp < 1) throw InvalidConfig(path.string() + ": header has no value columns");
  GridField f(spec, ncomp);
  std::size_t k = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (k >= f.nodes()) throw InvalidConfig(path.string() + ": more rows than grid nodes");
    std::stringstream ss(line);
    std::string cell;
    for (int c = 0; c < columns; ++c) {
      if (!std::getline(ss, cell, ',')) throw InvalidConfig(path.string() + ": short row " + std::to_string(k + 2));
      if (c >= spec.dim) f.at(k, c - spec.dim) = std::stod(cell);
    }
    ++k;
  }
  if (k != f.nodes()) throw InvalidConfig(path.string() + ": row count does not match the grid");
  return f;
}

void write_table_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
                     const std::vector<std::vector<double>>& rows) {
  auto out = open_out(path);
  std::string line;
  for (std::size_t i = 0; i < header.size(); ++i) line += (i ? "," : "") + header[i];
  out << line << '\n';
  for (const auto& row : rows) {
    line.clear();
    for (std::size_t i = 0; i < row.size(); ++i) line += (i ? "," : "") + fmt(row[i]);
    out << line << '\n';
  }
}

}  // namespace stochvec
