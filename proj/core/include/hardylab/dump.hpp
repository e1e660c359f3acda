#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hardylab/grid.hpp"

namespace hardylab {

// Raw little-endian float64 samples in grid order, with a JSON sidecar <path>.json holding
// {n, J, L_box, codomain, m}. Writes go through a temporary file and a rename.
void write_dump(const std::string& path, const VectorField& f);
VectorField read_dump(const std::string& path);  // throws ConfigInvalid on a missing or inconsistent file

void write_raw(const std::string& path, const std::vector<double>& values);
std::vector<double> read_raw(const std::string& path);
void write_text(const std::string& path, const std::string& text);

std::uint64_t checksum(const std::vector<double>& values);
std::uint64_t file_checksum(const std::string& path);
std::string hex64(std::uint64_t v);

}  // namespace hardylab
