#include "config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "hardylab/czops.hpp"
#include "hardylab/dump.hpp"
#include "hardylab/rng.hpp"

namespace hardylab::cli {
namespace {

[[noreturn]] void bad(const std::string& field, const std::string& msg) {
  throw Error(ErrorCode::ConfigInvalid, field + ": " + msg);
}

void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) bad(where.empty() ? "config" : where, "must be a JSON object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!ok.count(it.key())) bad(where.empty() ? it.key() : where + "." + it.key(), "unknown field");
}

std::string path_of(const std::string& where, const char* key) { return where.empty() ? key : where + "." + key; }

double get_num(const json& j, const std::string& where, const char* key, double def) {
  if (!j.contains(key)) return def;
  const json& v = j.at(key);
  if (!v.is_number()) bad(path_of(where, key), "must be a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) bad(path_of(where, key), "must be finite");
  return x;
}

int get_int(const json& j, const std::string& where, const char* key, int def) {
  if (!j.contains(key)) return def;
  const json& v = j.at(key);
  if (!v.is_number_integer()) bad(path_of(where, key), "must be an integer");
  return v.get<int>();
}

std::uint64_t get_u64(const json& j, const std::string& where, const char* key, std::uint64_t def) {
  if (!j.contains(key)) return def;
  const json& v = j.at(key);
  if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0))
    bad(path_of(where, key), "must be a non-negative integer");
  return v.get<std::uint64_t>();
}

std::string get_str(const json& j, const std::string& where, const char* key, const std::string& def) {
  if (!j.contains(key)) return def;
  const json& v = j.at(key);
  if (!v.is_string()) bad(path_of(where, key), "must be a string");
  return v.get<std::string>();
}

std::vector<double> get_params(const json& j, const std::string& where, bool* infinite) {
  std::vector<double> out;
  if (!j.contains("params")) return out;
  const json& v = j.at("params");
  if (!v.is_array()) bad(where + ".params", "must be an array");
  for (std::size_t i = 0; i < v.size(); ++i) {
    const std::string f = where + ".params[" + std::to_string(i) + "]";
    if (v[i].is_string() && infinite && (v[i] == "inf" || v[i] == "infinity")) {
      *infinite = true;
      continue;
    }
    if (!v[i].is_number()) bad(f, "must be a number");
    out.push_back(v[i].get<double>());
  }
  return out;
}

json spec_json(const std::string& preset, const std::vector<double>& params) {
  json j;
  j["preset"] = preset;
  j["params"] = params;
  return j;
}

}  // namespace

ExponentSpec parse_exponent(const json& j, const std::string& where) {
  check_keys(j, where, {"preset", "params"});
  ExponentSpec s;
  s.preset = get_str(j, where, "preset", "constant");
  bool inf = false;
  s.params = get_params(j, where, &inf);
  s.infinite = inf;
  if (inf && (s.preset != "constant" || !s.params.empty())) bad(where + ".params", "\"inf\" is only valid as constant([\"inf\"])");
  s.validate();
  return s;
}

WeightSpec parse_weight(const json& j, const std::string& where) {
  check_keys(j, where, {"preset", "params", "m"});
  WeightSpec s;
  s.preset = get_str(j, where, "preset", "identity");
  s.params = get_params(j, where, nullptr);
  int mdef = 2;
  if (s.preset == "diag_power" && !s.params.empty()) mdef = int(s.params.size());
  s.m = get_int(j, where, "m", mdef);
  try {
    s.validate();
  } catch (const Error& e) {
    bad(where, e.what());
  }
  return s;
}

ExperimentConfig parse_config(const json& j) {
  check_keys(j, "", {"grid", "exponent", "weight", "maximal", "decomposition", "kernel", "suite", "sweep", "input",
                     "manifest", "campanato_q", "certify_random_cubes"});
  ExperimentConfig c;
  if (j.contains("grid")) {
    const json& g = j["grid"];
    check_keys(g, "grid", {"n", "J", "L_box"});
    c.grid.n = get_int(g, "grid", "n", 1);
    c.grid.J = get_int(g, "grid", "J", 8);
    c.grid.L_box = get_num(g, "grid", "L_box", 4.0);
  }
  if (j.contains("exponent")) c.exponent = parse_exponent(j["exponent"], "exponent");
  if (j.contains("weight")) c.weight = parse_weight(j["weight"], "weight");
  if (j.contains("maximal")) {
    const json& m = j["maximal"];
    check_keys(m, "maximal", {"kind", "N", "a", "l", "max_scale", "alpha", "u"});
    c.maximal.kind = get_str(m, "maximal", "kind", c.maximal.kind);
    c.maximal.N = get_int(m, "maximal", "N", c.maximal.N);
    c.maximal.a = get_num(m, "maximal", "a", c.maximal.a);
    c.maximal.l = get_num(m, "maximal", "l", c.maximal.l);
    c.maximal.max_scale = get_num(m, "maximal", "max_scale", c.maximal.max_scale);
    if (m.contains("alpha")) c.maximal.alpha = get_num(m, "maximal", "alpha", 1.0);
    if (m.contains("u")) c.maximal.u = get_num(m, "maximal", "u", 0.5);
  }
  if (j.contains("decomposition")) {
    const json& d = j["decomposition"];
    check_keys(d, "decomposition", {"s", "K_levels", "measure_rule", "up_to_level", "C_atom"});
    c.decomposition.s = get_int(d, "decomposition", "s", 0);
    c.decomposition.K_levels = get_int(d, "decomposition", "K_levels", 6);
    c.decomposition.measure_rule = get_str(d, "decomposition", "measure_rule", "strict");
    c.decomposition.up_to_level = get_int(d, "decomposition", "up_to_level", -1);
    c.decomposition.C_atom = get_num(d, "decomposition", "C_atom", c.decomposition.C_atom);
  }
  c.kernel = get_str(j, "", "kernel", c.kernel);
  if (j.contains("suite")) {
    const json& s = j["suite"];
    check_keys(s, "suite", {"kind", "count", "seed", "index"});
    c.suite.kind = get_str(s, "suite", "kind", c.suite.kind);
    c.suite.count = get_int(s, "suite", "count", c.suite.count);
    c.suite.seed = get_u64(s, "suite", "seed", c.suite.seed);
    c.suite.index = get_int(s, "suite", "index", 0);
  }
  if (j.contains("sweep")) {
    const json& s = j["sweep"];
    check_keys(s, "sweep", {"target", "refinements", "max_change"});
    c.sweep.target = get_str(s, "sweep", "target", c.sweep.target);
    c.sweep.refinements = get_int(s, "sweep", "refinements", 1);
    c.sweep.max_change = get_num(s, "sweep", "max_change", 0.2);
  }
  c.input = get_str(j, "", "input", "");
  c.manifest = get_str(j, "", "manifest", "");
  c.campanato_q = get_num(j, "", "campanato_q", 2.0);
  c.certify_random_cubes = get_int(j, "", "certify_random_cubes", 200);
  validate(c);
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigInvalid, "--config: cannot open '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ConfigInvalid, "--config: " + std::string(e.what()));
  }
  return parse_config(j);
}

void validate(const ExperimentConfig& c) {
  if (c.grid.n != 1 && c.grid.n != 2) bad("grid.n", "must be 1 or 2");
  if (c.grid.n == 1 && (c.grid.J < 4 || c.grid.J > 12)) bad("grid.J", "must lie in [4, 12] for n = 1");
  if (c.grid.n == 2 && (c.grid.J < 4 || c.grid.J > 9)) bad("grid.J", "must lie in [4, 9] for n = 2");
  if (!(c.grid.L_box > 0.0) || std::exp2(std::round(std::log2(c.grid.L_box))) != c.grid.L_box)
    bad("grid.L_box", "must be a positive power of two");
  static const std::set<std::string> kinds{"radial",   "grand_radial", "nontangential",   "peetre",     "grand_peetre",
                                           "hl",       "variable",     "christ_goldberg", "reducing_cg"};
  if (!kinds.count(c.maximal.kind)) bad("maximal.kind", "unknown kind '" + c.maximal.kind + "'");
  if (c.maximal.N < 0 || c.maximal.N > 6) bad("maximal.N", "must lie in [0, 6]");
  if (!(c.maximal.a > 0.0)) bad("maximal.a", "must be > 0");
  if (!(c.maximal.l > 0.0)) bad("maximal.l", "must be > 0");
  if (c.maximal.max_scale < 0.0) bad("maximal.max_scale", "must be >= 0");
  if (c.maximal.alpha && !(*c.maximal.alpha > 0.0 && *c.maximal.alpha <= 1.0)) bad("maximal.alpha", "must lie in (0, 1]");
  if (c.maximal.u && !(*c.maximal.u > 0.0)) bad("maximal.u", "must be > 0");
  if (c.decomposition.s < 0 || c.decomposition.s > 3) bad("decomposition.s", "must lie in [0, 3]");
  if (c.decomposition.K_levels < 0 || c.decomposition.K_levels > 32) bad("decomposition.K_levels", "must lie in [0, 32]");
  if (c.decomposition.measure_rule != "strict" && c.decomposition.measure_rule != "premise")
    bad("decomposition.measure_rule", "must be \"strict\" or \"premise\"");
  if (!(c.decomposition.C_atom > 0.0)) bad("decomposition.C_atom", "must be > 0");
  if (c.kernel == "hilbert") {
    if (c.grid.n != 1) bad("kernel", "hilbert requires grid.n = 1");
  } else if (c.kernel == "riesz_1" || c.kernel == "riesz_2") {
    if (c.grid.n != 2) bad("kernel", c.kernel + " requires grid.n = 2");
  } else {
    bad("kernel", "unknown kernel '" + c.kernel + "'");
  }
  if (c.suite.kind != "moment_free" && c.suite.kind != "smooth") bad("suite.kind", "must be moment_free or smooth");
  if (c.suite.count < 1 || c.suite.count > 1000) bad("suite.count", "must lie in [1, 1000]");
  if (c.suite.index < 0 || c.suite.index >= c.suite.count) bad("suite.index", "must lie in [0, suite.count)");
  static const std::set<std::string> targets{"equivalence", "certificate", "cz", "coefficients"};
  if (!targets.count(c.sweep.target)) bad("sweep.target", "unknown target '" + c.sweep.target + "'");
  if (c.sweep.refinements < 1 || c.sweep.refinements > 3) bad("sweep.refinements", "must lie in [1, 3]");
  const int top = c.grid.J + c.sweep.refinements;
  if (top > (c.grid.n == 1 ? 12 : 9)) bad("sweep.refinements", "grid.J + refinements exceeds the resolution limit");
  if (!(c.sweep.max_change > 0.0)) bad("sweep.max_change", "must be > 0");
  if (!(c.campanato_q >= 1.0)) bad("campanato_q", "must be >= 1");
  if (c.certify_random_cubes < 0 || c.certify_random_cubes > 10000) bad("certify_random_cubes", "must lie in [0, 10000]");
}

json ExperimentConfig::to_json() const {
  json j;
  j["grid"] = {{"n", grid.n}, {"J", grid.J}, {"L_box", grid.L_box}};
  json e = spec_json(exponent.preset, exponent.params);
  if (exponent.infinite) e["params"] = json::array({"inf"});
  j["exponent"] = e;
  json w = spec_json(weight.preset, weight.params);
  w["m"] = weight.m;
  j["weight"] = w;
  json m = {{"kind", maximal.kind}, {"N", maximal.N}, {"a", maximal.a}, {"l", maximal.l}, {"max_scale", maximal.max_scale}};
  if (maximal.alpha) m["alpha"] = *maximal.alpha;
  if (maximal.u) m["u"] = *maximal.u;
  j["maximal"] = m;
  j["decomposition"] = {{"s", decomposition.s},
                        {"K_levels", decomposition.K_levels},
                        {"measure_rule", decomposition.measure_rule},
                        {"up_to_level", decomposition.up_to_level},
                        {"C_atom", decomposition.C_atom}};
  j["kernel"] = kernel;
  j["suite"] = {{"kind", suite.kind}, {"count", suite.count}, {"seed", suite.seed}, {"index", suite.index}};
  j["sweep"] = {{"target", sweep.target}, {"refinements", sweep.refinements}, {"max_change", sweep.max_change}};
  j["input"] = input;
  j["manifest"] = manifest;
  j["campanato_q"] = campanato_q;
  j["certify_random_cubes"] = certify_random_cubes;
  return j;
}

std::string ExperimentConfig::hash() const { return hex64(fnv1a64(to_json().dump())); }

}  // namespace hardylab::cli
