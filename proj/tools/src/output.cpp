#include "output.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "hardylab/dump.hpp"
#include "hardylab/errors.hpp"

namespace hardylab::cli {

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Csv::Csv(std::string hash, std::vector<std::string> header) : hash_(std::move(hash)), cols_(header.size() + 1) {
  text_ = "config_hash";
  for (const auto& h : header) text_ += "," + h;
  text_ += "\n";
}

void Csv::flush() {
  if (cur_.empty()) return;
  if (cur_.size() != cols_) throw std::logic_error("csv row has " + std::to_string(cur_.size()) + " columns");
  for (std::size_t i = 0; i < cur_.size(); ++i) text_ += (i ? "," : "") + cur_[i];
  text_ += "\n";
  cur_.clear();
}

Csv& Csv::row() {
  flush();
  cur_.push_back(hash_);
  return *this;
}
Csv& Csv::add(const std::string& s) {
  // Labels carry commas (preset parameter lists); quote them.
  if (s.find_first_of(",\"") != std::string::npos) {
    std::string q = "\"";
    for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
    cur_.push_back(q + "\"");
  } else {
    cur_.push_back(s);
  }
  return *this;
}
Csv& Csv::add(double v) {
  cur_.push_back(num(v));
  return *this;
}
Csv& Csv::add(long long v) {
  cur_.push_back(std::to_string(v));
  return *this;
}
std::string Csv::str() const {
  Csv c = *this;
  c.flush();
  return c.text_;
}

Run::Run(std::string command, const ExperimentConfig& cfg, std::string out_dir, std::uint64_t seed, int threads)
    : command_(std::move(command)), dir_(std::move(out_dir)), hash_(cfg.hash()), seed_(seed), threads_(threads),
      config_(cfg.to_json()), start_(std::chrono::steady_clock::now()) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) throw Error(ErrorCode::ConfigInvalid, "--out: cannot create '" + dir_ + "': " + ec.message());
}

std::string Run::path(const std::string& name) const { return (std::filesystem::path(dir_) / name).string(); }

void Run::record(const std::string& name) {
  const std::string p = path(name);
  outputs_.push_back({{"path", name},
                      {"bytes", std::filesystem::file_size(p)},
                      {"checksum", hex64(file_checksum(p))}});
}

void Run::write_json(const std::string& name, const json& j) {
  write_text(path(name), j.dump(2) + "\n");
  record(name);
}

void Run::write_csv(const std::string& name, const Csv& csv) {
  write_text(path(name), csv.str());
  record(name);
}

void Run::write_field(const std::string& name, const VectorField& f) {
  write_dump(path(name), f);
  record(name);
  record(name + ".json");
}

void Run::write_doubles(const std::string& name, const std::vector<double>& v) {
  write_raw(path(name), v);
  record(name);
}

void Run::note_input(const std::string& p) {
  inputs_.push_back({{"path", p}, {"checksum", hex64(file_checksum(p))}});
}

void Run::contract(bool ok, const std::string& what) {
  if (!ok) violations_.push_back(what);
}

int Run::finish() {
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  json m;
  m["tool"] = "hardylab";
  m["version"] = HARDYLAB_VERSION;
  m["command"] = command_;
  m["config_hash"] = hash_;
  m["config"] = config_;
  m["seed"] = seed_;
  m["threads"] = threads_;
  m["inputs"] = inputs_;
  m["outputs"] = outputs_;
  m["contracts"] = {{"pass", passed()}, {"violations", violations_}};
  m["wall_seconds"] = secs;
  write_text(path("run_" + command_ + ".json"), m.dump(2) + "\n");
  return passed() ? 0 : 2;
}

}  // namespace hardylab::cli
