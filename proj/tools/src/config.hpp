#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "json.hpp"

#include "hardylab/decomp.hpp"
#include "hardylab/grid.hpp"
#include "hardylab/maximal.hpp"
#include "hardylab/vexp.hpp"
#include "hardylab/weights.hpp"

namespace hardylab::cli {

using json = nlohmann::json;

struct GridConfig {
  int n = 1;
  int J = 8;
  double L_box = 4.0;
};

struct MaximalConfig {
  // radial | grand_radial | nontangential | peetre | grand_peetre | hl | variable | christ_goldberg | reducing_cg
  std::string kind = "grand_radial";
  int N = 2;
  double a = 1.0;
  double l = 2.0;
  double max_scale = 0.0;
  std::optional<double> alpha;
  std::optional<double> u;
};

struct DecompConfig {
  int s = 0;
  int K_levels = 6;
  std::string measure_rule = "strict";
  int up_to_level = -1;
  double C_atom = 1e6;
};

struct SuiteConfig {
  std::string kind = "moment_free";  // moment_free | smooth
  int count = 10;
  std::uint64_t seed = 1;
  int index = 0;  // member decomposed when no input dump is given
};

struct SweepConfig {
  std::string target = "equivalence";  // equivalence | certificate | cz | coefficients
  int refinements = 1;
  double max_change = 0.2;
};

struct ExperimentConfig {
  GridConfig grid;
  ExponentSpec exponent = ExponentSpec::constant(2.0);
  WeightSpec weight = WeightSpec::identity(2);
  MaximalConfig maximal;
  DecompConfig decomposition;
  std::string kernel = "hilbert";
  SuiteConfig suite;
  SweepConfig sweep;
  std::string input;     // grid dump for decompose / norm
  std::string manifest;  // decomposition manifest for validate-atoms / reconstruct
  double campanato_q = 2.0;
  int certify_random_cubes = 200;

  Grid make_grid() const { return Grid(grid.n, grid.J, grid.L_box); }
  json to_json() const;          // canonical, fully resolved form
  std::string hash() const;      // FNV-1a of the canonical form
};

// Throws Error(ConfigInvalid) naming the offending field.
ExperimentConfig parse_config(const json& j);
ExperimentConfig load_config(const std::string& path);
void validate(const ExperimentConfig& c);

ExponentSpec parse_exponent(const json& j, const std::string& where);
WeightSpec parse_weight(const json& j, const std::string& where);

}  // namespace hardylab::cli
