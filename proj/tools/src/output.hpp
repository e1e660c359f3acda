#pragma once

#include <chrono>
#include <cstdint>
#include <string>
#include <vector>

#include "config.hpp"
#include "hardylab/grid.hpp"

namespace hardylab::cli {

std::string num(double v);  // %.17g, "nan" / "inf" spelled out

// CSV table whose every row starts with the config hash.
class Csv {
 public:
  Csv(std::string hash, std::vector<std::string> header);
  Csv& row();
  Csv& add(const std::string& s);
  Csv& add(double v);
  Csv& add(long long v);
  Csv& add(std::size_t v) { return add((long long)(v)); }
  Csv& add(int v) { return add((long long)(v)); }
  Csv& add(bool v) { return add(std::string(v ? "1" : "0")); }
  std::string str() const;

 private:
  std::string hash_;
  std::size_t cols_;
  std::string text_;
  std::vector<std::string> cur_;
  void flush();
};

// Output directory, output registry and contract bookkeeping for one command.
class Run {
 public:
  Run(std::string command, const ExperimentConfig& cfg, std::string out_dir, std::uint64_t seed, int threads);

  const std::string& dir() const { return dir_; }
  const std::string& hash() const { return hash_; }
  std::string path(const std::string& name) const;

  void write_json(const std::string& name, const json& j);
  void write_csv(const std::string& name, const Csv& csv);
  void write_field(const std::string& name, const VectorField& f);  // raw dump + sidecar
  void write_doubles(const std::string& name, const std::vector<double>& v);
  void note_input(const std::string& path);

  void contract(bool ok, const std::string& what);
  bool passed() const { return violations_.empty(); }
  const std::vector<std::string>& violations() const { return violations_; }

  // Writes run_<command>.json; returns the exit code (0 pass, 2 contract violation).
  int finish();

 private:
  void record(const std::string& name);
  std::string command_;
  std::string dir_;
  std::string hash_;
  std::uint64_t seed_;
  int threads_;
  json config_;
  json outputs_ = json::array();
  json inputs_ = json::array();
  std::vector<std::string> violations_;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace hardylab::cli
