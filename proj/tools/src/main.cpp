#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "commands.hpp"
#include "config.hpp"
#include "hardylab/errors.hpp"
#include "hardylab/parallel.hpp"

using namespace hardylab;
using namespace hardylab::cli;

namespace {

struct Options {
  std::string config;
  std::string out = "out";
  std::optional<std::uint64_t> seed;
  int threads = 1;
  // overrides applied to the raw config before parsing
  std::optional<std::string> kind, weight_spec, exponent_spec, input, kernel, manifest, measure_rule, target, suite_kind;
  std::optional<double> alpha, u, a, l;
  std::optional<int> N, s, levels, J, n, up_to_level, count, index, refinements;
};

json parse_spec(const std::string& text, const char* flag) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ConfigInvalid, std::string(flag) + ": " + e.what());
  }
}

json raw_config(const Options& o) {
  json j = json::object();
  if (!o.config.empty()) {
    std::ifstream in(o.config);
    if (!in) throw Error(ErrorCode::ConfigInvalid, "--config: cannot open '" + o.config + "'");
    try {
      j = json::parse(in);
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::ConfigInvalid, "--config: " + std::string(e.what()));
    }
    if (!j.is_object()) throw Error(ErrorCode::ConfigInvalid, "--config: top level must be an object");
  }
  if (o.kind) j["maximal"]["kind"] = *o.kind;
  if (o.N) j["maximal"]["N"] = *o.N;
  if (o.a) j["maximal"]["a"] = *o.a;
  if (o.l) j["maximal"]["l"] = *o.l;
  if (o.alpha) j["maximal"]["alpha"] = *o.alpha;
  if (o.u) j["maximal"]["u"] = *o.u;
  if (o.weight_spec) j["weight"] = parse_spec(*o.weight_spec, "--weight-spec");
  if (o.exponent_spec) j["exponent"] = parse_spec(*o.exponent_spec, "--exponent-spec");
  if (o.input) j["input"] = *o.input;
  if (o.manifest) j["manifest"] = *o.manifest;
  if (o.kernel) j["kernel"] = *o.kernel;
  if (o.s) j["decomposition"]["s"] = *o.s;
  if (o.levels) j["decomposition"]["K_levels"] = *o.levels;
  if (o.measure_rule) j["decomposition"]["measure_rule"] = *o.measure_rule;
  if (o.up_to_level) j["decomposition"]["up_to_level"] = *o.up_to_level;
  if (o.J) j["grid"]["J"] = *o.J;
  if (o.n) j["grid"]["n"] = *o.n;
  if (o.seed) j["suite"]["seed"] = *o.seed;
  if (o.suite_kind) j["suite"]["kind"] = *o.suite_kind;
  if (o.count) j["suite"]["count"] = *o.count;
  if (o.index) j["suite"]["index"] = *o.index;
  if (o.target) j["sweep"]["target"] = *o.target;
  if (o.refinements) j["sweep"]["refinements"] = *o.refinements;
  return j;
}

template <class T>
void opt(CLI::App* app, const std::string& name, std::optional<T>& slot, const std::string& help) {
  app->add_option_function<T>(name, [&slot](const T& v) { slot = v; }, help);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hardylab: matrix-weighted variable-exponent Hardy space experiments"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(HARDYLAB_VERSION));
  Options o;

  using Cmd = std::function<int(const ExperimentConfig&, Run&)>;
  const std::map<std::string, std::pair<Cmd, std::string>> commands = {
      {"certify-weight", {cmd_certify_weight, "characteristics, dimensions, reverse Hoelder exponent, alpha and u"}},
      {"norm", {cmd_norm, "variable-exponent norm of |Wf| and the weighted Hardy norm"}},
      {"maximal", {cmd_maximal, "convex-body or scalar maximal operators and the equivalence table"}},
      {"decompose", {cmd_decompose, "atomic decomposition of a dump or suite member"}},
      {"validate-atoms", {cmd_validate_atoms, "re-check support, moments and size of stored atoms"}},
      {"reconstruct", {cmd_reconstruct, "partial or full atomic sums from a stored decomposition"}},
      {"cz-bench", {cmd_cz_bench, "Calderon-Zygmund boundedness tables and atom decay fits"}},
      {"duality", {cmd_duality, "pairing against the Campanato-type space for p_plus <= 1"}},
      {"sweep", {cmd_sweep, "refinement sweep of a chosen quantity"}},
  };

  std::string chosen;
  for (const auto& [name, entry] : commands) {
    CLI::App* sub = app.add_subcommand(name, entry.second);
    sub->add_option("--config", o.config, "JSON experiment configuration");
    sub->add_option("--out", o.out, "output directory")->capture_default_str();
    opt(sub, "--seed", o.seed, "suite and certificate seed");
    sub->add_option("--threads", o.threads, "worker threads")->capture_default_str()->check(CLI::Range(1, 256));
    opt(sub, "--kind", o.kind, "maximal.kind");
    opt(sub, "--N", o.N, "maximal.N");
    opt(sub, "--a", o.a, "maximal.a");
    opt(sub, "--l", o.l, "maximal.l");
    opt(sub, "--alpha", o.alpha, "maximal.alpha");
    opt(sub, "--u", o.u, "maximal.u");
    opt(sub, "--weight-spec", o.weight_spec, "weight as JSON, e.g. {\"preset\":\"identity\",\"m\":2}");
    opt(sub, "--exponent-spec", o.exponent_spec, "exponent as JSON, e.g. {\"preset\":\"constant\",\"params\":[2]}");
    opt(sub, "--input", o.input, "grid dump");
    opt(sub, "--manifest", o.manifest, "decomposition.json or its directory");
    opt(sub, "--kernel", o.kernel, "hilbert | riesz_1 | riesz_2");
    opt(sub, "--s", o.s, "decomposition.s");
    opt(sub, "--levels", o.levels, "decomposition.K_levels");
    opt(sub, "--measure-rule", o.measure_rule, "strict | premise");
    opt(sub, "--up-to-level", o.up_to_level, "decomposition.up_to_level");
    opt(sub, "--J", o.J, "grid.J");
    opt(sub, "--n", o.n, "grid.n");
    opt(sub, "--suite", o.suite_kind, "moment_free | smooth");
    opt(sub, "--count", o.count, "suite.count");
    opt(sub, "--index", o.index, "suite.index");
    opt(sub, "--target", o.target, "sweep.target");
    opt(sub, "--refinements", o.refinements, "sweep.refinements");
    sub->callback([&chosen, name = name] { chosen = name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    const ExperimentConfig cfg = parse_config(raw_config(o));
    set_thread_count(o.threads);
    Run run(chosen, cfg, o.out, cfg.suite.seed, o.threads);
    const int rc = commands.at(chosen).first(cfg, run);
    for (const auto& v : run.violations()) std::fprintf(stderr, "contract violated: %s\n", v.c_str());
    return rc;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return e.code() == ErrorCode::ConfigInvalid ? 1 : 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
