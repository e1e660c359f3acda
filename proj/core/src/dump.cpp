#include "hardylab/dump.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

#include "hardylab/rng.hpp"
#include "json.hpp"

namespace hardylab {

namespace {

static_assert(std::endian::native == std::endian::little, "raw dumps assume a little-endian host");

void atomic_write(const std::string& path, const void* data, std::size_t len) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw Error(ErrorCode::ConfigInvalid, "output: cannot write " + tmp);
    os.write(static_cast<const char*>(data), std::streamsize(len));
    if (!os) throw Error(ErrorCode::ConfigInvalid, "output: short write to " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

std::string slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorCode::ConfigInvalid, "input: cannot open " + path);
  return std::string(std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>());
}

}  // namespace

void write_raw(const std::string& path, const std::vector<double>& values) {
  atomic_write(path, values.data(), values.size() * sizeof(double));
}

std::vector<double> read_raw(const std::string& path) {
  const std::string bytes = slurp(path);
  if (bytes.size() % sizeof(double) != 0)
    throw Error(ErrorCode::ConfigInvalid, "input: " + path + " is not a float64 dump");
  std::vector<double> v(bytes.size() / sizeof(double));
  std::memcpy(v.data(), bytes.data(), bytes.size());
  return v;
}

void write_text(const std::string& path, const std::string& text) { atomic_write(path, text.data(), text.size()); }

void write_dump(const std::string& path, const VectorField& f) {
  write_raw(path, f.values);
  nlohmann::ordered_json side;
  side["n"] = f.grid.n();
  side["J"] = f.grid.J();
  side["L_box"] = f.grid.L_box();
  side["codomain"] = f.m == 1 ? "scalar" : "vector";
  side["m"] = f.m;
  write_text(path + ".json", side.dump(2) + "\n");
}

VectorField read_dump(const std::string& path) {
  nlohmann::json side;
  try {
    side = nlohmann::json::parse(slurp(path + ".json"));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigInvalid, "input: bad sidecar " + path + ".json: " + e.what());
  }
  for (const char* key : {"n", "J", "L_box", "m"})
    if (!side.contains(key)) throw Error(ErrorCode::ConfigInvalid, std::string("input.") + key + ": missing in sidecar");
  const Grid g(side["n"].get<int>(), side["J"].get<int>(), side["L_box"].get<double>());
  const int m = side["m"].get<int>();
  std::vector<double> v = read_raw(path);
  if (v.size() != g.size() * std::size_t(m))
    throw Error(ErrorCode::ConfigInvalid, "input: " + path + " holds " + std::to_string(v.size()) + " values, expected " +
                                              std::to_string(g.size() * std::size_t(m)));
  return VectorField(g, m, std::move(v));
}

std::uint64_t checksum(const std::vector<double>& values) {
  return fnv1a64(values.data(), values.size() * sizeof(double));
}

std::uint64_t file_checksum(const std::string& path) {
  const std::string bytes = slurp(path);
  return fnv1a64(bytes.data(), bytes.size());
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace hardylab
