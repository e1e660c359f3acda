#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <optional>

#include "hardylab/czops.hpp"
#include "hardylab/decomp.hpp"
#include "hardylab/dump.hpp"
#include "hardylab/maximal.hpp"
#include "hardylab/testfun.hpp"
#include "hardylab/weights.hpp"

namespace hardylab::cli {
namespace {

constexpr double kOrderingSlack = 1e-12;

struct Setup {
  Grid g;
  MatrixWeight W;
  ExponentProfile p;
  explicit Setup(const ExperimentConfig& c)
      : g(c.make_grid()), W(c.weight, g), p(ExponentProfile::realize(c.exponent, g)) {}
};

WeightCertificate certify(const ExperimentConfig& c, const Grid& g) {
  CertifyOptions o;
  o.seed = c.suite.seed;
  o.random_cubes = c.certify_random_cubes;
  return certify_weight(c.weight, c.exponent, g, o);
}

// Catalog order N, raised to ceil(n / alpha) + 1 when the certificate demands it.
int catalog_order(const ExperimentConfig& c, const WeightCertificate& cert) {
  const int need = int(std::ceil(double(c.grid.n) / cert.alpha - 1e-12)) + 1;
  return std::max(c.maximal.N, need);
}

std::vector<VectorField> make_suite(const ExperimentConfig& c, const Grid& g, int s) {
  SuiteOptions o;
  o.count = c.suite.count;
  o.seed = c.suite.seed;
  o.s = s;
  return c.suite.kind == "smooth" ? smooth_suite(g, c.weight.m, o) : moment_free_suite(g, c.weight.m, o);
}

MaximalParams maximal_params(const ExperimentConfig& c) {
  MaximalParams mp;
  mp.kind = parse_maximal_kind(c.maximal.kind == "hl" || c.maximal.kind == "variable" ||
                                       c.maximal.kind == "christ_goldberg" || c.maximal.kind == "reducing_cg"
                                   ? std::string("grand_radial")
                                   : c.maximal.kind);
  mp.a = c.maximal.a;
  mp.l = c.maximal.l;
  mp.max_scale = c.maximal.max_scale;
  return mp;
}

ScalarField weighted_abs(const VectorField& f, const MatrixWeight& W) {
  ScalarField out(f.grid);
  double y[3];
  for (std::size_t i = 0; i < f.size(); ++i) {
    mat_vec(W.W(i), f.at(i), y, f.m);
    out[i] = euclid(y, f.m);
  }
  return out;
}

VectorField as_vector(const ScalarField& s) { return VectorField(s.grid, 1, s.values); }

json cube_json(const Cube& q) {
  json j;
  j["center"] = std::vector<double>(q.center().begin(), q.center().begin() + q.n());
  j["edge"] = q.edge();
  if (q.dyadic_index()) {
    const DyadicIndex& d = *q.dyadic_index();
    j["k"] = d.k;
    j["m"] = std::vector<long long>(d.m.begin(), d.m.begin() + q.n());
    j["shift"] = d.shift;
  }
  return j;
}

Cube cube_from_json(const json& j, int n, const std::string& where) {
  if (!j.contains("k") || !j.contains("m") || !j.contains("shift"))
    throw Error(ErrorCode::ConfigInvalid, where + ": cube lacks its dyadic index");
  DyadicIndex d;
  d.k = j["k"].get<int>();
  const auto mm = j["m"].get<std::vector<long long>>();
  if (int(mm.size()) != n) throw Error(ErrorCode::ConfigInvalid, where + ": cube dimension does not match the grid");
  for (int i = 0; i < n; ++i) d.m[std::size_t(i)] = mm[std::size_t(i)];
  d.shift = j["shift"].get<unsigned>();
  return Cube::dyadic(n, d);
}

VectorField load_input(const ExperimentConfig& c, const Grid& g, Run& run, int s) {
  if (!c.input.empty()) {
    VectorField f = read_dump(c.input);
    if (f.grid != g) throw Error(ErrorCode::ConfigInvalid, "input: dump grid does not match grid.{n,J,L_box}");
    if (f.m != c.weight.m) throw Error(ErrorCode::ConfigInvalid, "input: dump has m = " + std::to_string(f.m) + ", weight.m = " + std::to_string(c.weight.m));
    run.note_input(c.input);
    return f;
  }
  return make_suite(c, g, s)[std::size_t(c.suite.index)];
}

struct LoadedDecomposition {
  json manifest;
  std::vector<AtomRecord> atoms;
  std::string dir;
};

LoadedDecomposition load_decomposition(const ExperimentConfig& c, const Grid& g, int m, Run& run) {
  std::string path = c.manifest.empty() ? run.path("decomposition.json") : c.manifest;
  if (std::filesystem::is_directory(path)) path = (std::filesystem::path(path) / "decomposition.json").string();
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigInvalid, "manifest: cannot open '" + path + "'");
  LoadedDecomposition L;
  try {
    L.manifest = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ConfigInvalid, "manifest: " + std::string(e.what()));
  }
  run.note_input(path);
  L.dir = std::filesystem::path(path).parent_path().string();
  const json& mg = L.manifest["grid"];
  if (mg["n"] != g.n() || mg["J"] != g.J() || mg["L_box"].get<double>() != g.L_box())
    throw Error(ErrorCode::ConfigInvalid, "manifest: grid differs from grid.{n,J,L_box}");
  if (L.manifest["m"].get<int>() != m) throw Error(ErrorCode::ConfigInvalid, "manifest: m differs from weight.m");
  const std::string atoms_path = (std::filesystem::path(L.dir) / L.manifest["atoms_file"].get<std::string>()).string();
  const std::vector<double> raw = read_raw(atoms_path);
  run.note_input(atoms_path);
  const std::size_t stride = std::size_t(m) + 1;
  std::size_t idx = 0;
  for (const json& a : L.manifest["atoms"]) {
    const std::string where = "manifest.atoms[" + std::to_string(idx++) + "]";
    AtomRecord r;
    r.level = a["level"].get<int>();
    r.Q = cube_from_json(a["cube"], g.n(), where);
    r.support = r.Q.dilate(3, 1);
    r.lambda = a["lambda"].get<double>();
    r.threshold = a["threshold"].get<double>();
    const std::size_t off = a["offset"].get<std::size_t>(), cells = a["cells"].get<std::size_t>();
    if (off + cells * stride > raw.size()) throw Error(ErrorCode::ConfigInvalid, where + ": offset beyond the atom file");
    r.cells.resize(cells);
    r.values.resize(cells * std::size_t(m));
    for (std::size_t k = 0; k < cells; ++k) {
      const double ci = raw[off + k * stride];
      if (!(ci >= 0.0) || ci >= double(g.size()) || ci != std::floor(ci))
        throw Error(ErrorCode::ConfigInvalid, where + ": bad cell index in the atom file");
      r.cells[k] = std::size_t(ci);
      for (int cc = 0; cc < m; ++cc) r.values[k * std::size_t(m) + std::size_t(cc)] = raw[off + k * stride + 1 + std::size_t(cc)];
    }
    L.atoms.push_back(std::move(r));
  }
  return L;
}

VectorField sum_atoms(const std::vector<AtomRecord>& atoms, const Grid& g, int m, int up_to_level) {
  VectorField out(g, m, 0.0);
  for (const auto& a : atoms) {
    if (up_to_level >= 0 && a.level > up_to_level) continue;
    for (std::size_t r = 0; r < a.cells.size(); ++r)
      for (int c = 0; c < m; ++c) out.at(a.cells[r])[c] += a.lambda * a.values[r * std::size_t(m) + std::size_t(c)];
  }
  return out;
}

double decay_threshold(int n, int s) { return -(double(n) + double(s) + 1.0) + 0.3; }

}  // namespace

// ---------------------------------------------------------------------------------------------

int cmd_certify_weight(const ExperimentConfig& cfg, Run& run) {
  const Grid g = cfg.make_grid();
  const WeightCertificate c = certify(cfg, g);
  const ExponentProfile p = ExponentProfile::realize(cfg.exponent, g);
  const LHConstants lh = certify_lh(p);
  json j = {{"weight", c.weight_label},     {"exponent", c.exponent_label}, {"ap_char", c.ap_char},
            {"apinfty_char", c.apinfty_char}, {"d1", c.d1},                 {"d2", c.d2},
            {"Delta", c.Delta},             {"r_W", c.r_W},                 {"alpha", c.alpha},
            {"u", c.u},                     {"fit_max_ratio", c.fit_max_ratio}, {"class_guard", c.class_guard},
            {"catalog_size", c.catalog_size}, {"p_minus", p.p_minus()},     {"p_plus", p.p_plus()},
            {"C0", lh.C0},                  {"Cinf", lh.Cinf},              {"p_inf", lh.p_inf}};
  if (std::isnan(c.ap_char)) j["ap_char"] = nullptr;
  run.write_json("certificate.json", j);
  Csv csv(run.hash(), {"weight", "exponent", "ap_char", "apinfty_char", "d1", "d2", "Delta", "r_W", "alpha", "u",
                       "fit_max_ratio", "class_guard", "catalog_size", "p_minus", "p_plus", "C0", "Cinf"});
  csv.row().add(c.weight_label).add(c.exponent_label).add(c.ap_char).add(c.apinfty_char).add(c.d1).add(c.d2).add(c.Delta)
      .add(c.r_W).add(c.alpha).add(c.u).add(c.fit_max_ratio).add(c.class_guard).add(c.catalog_size)
      .add(p.p_minus()).add(p.p_plus()).add(lh.C0).add(lh.Cinf);
  run.write_csv("certificate.csv", csv);

  const double bracket = std::sqrt(double(cfg.weight.m)) * 1.001;
  run.contract(c.fit_max_ratio <= bracket, "reducing-operator bracket " + num(c.fit_max_ratio) + " > sqrt(m)*1.001");
  run.contract(std::isnan(c.ap_char) || c.ap_char >= 1.0 - 1e-6, "ap characteristic below 1");
  run.contract(c.apinfty_char >= 1.0 - 1e-6, "apinfty characteristic below 1");
  run.contract(c.r_W > 1.0, "no reverse-Hoelder exponent above 1 passed");
  return run.finish();
}

int cmd_norm(const ExperimentConfig& cfg, Run& run) {
  Setup S(cfg);
  const WeightCertificate cert = certify(cfg, S.g);
  const TestFunctionCatalog cat(S.g.n(), catalog_order(cfg, cert));
  std::vector<VectorField> fs;
  if (!cfg.input.empty()) fs.push_back(load_input(cfg, S.g, run, cfg.decomposition.s));
  else fs = make_suite(cfg, S.g, cfg.decomposition.s);
  Csv csv(run.hash(), {"member", "vnorm_Wf", "hardy_norm", "ratio", "l2"});
  for (std::size_t k = 0; k < fs.size(); ++k) {
    const double v = vnorm(weighted_abs(fs[k], S.W), S.p);
    const double h = hardy_norm(fs[k], S.W, S.p, cat, cfg.maximal.max_scale);
    csv.row().add(k).add(v).add(h).add(v > 0.0 ? h / v : 1.0).add(l2_norm(fs[k]));
    run.contract(std::isfinite(v) && std::isfinite(h), "non-finite norm for member " + std::to_string(k));
  }
  run.write_csv("norms.csv", csv);
  return run.finish();
}

int cmd_maximal(const ExperimentConfig& cfg, Run& run) {
  Setup S(cfg);
  const std::string& kind = cfg.maximal.kind;
  const WeightCertificate cert = certify(cfg, S.g);
  const double alpha = cfg.maximal.alpha.value_or(cert.alpha);
  const double u = cfg.maximal.u.value_or(cert.u);

  if (kind == "hl" || kind == "variable" || kind == "christ_goldberg" || kind == "reducing_cg") {
    const MaximalCatalog mc(S.g);
    std::vector<ReducingOperator> ops;
    if (kind == "reducing_cg") ops = catalog_reducing_operators(S.W, S.p, mc);
    std::optional<ExponentProfile> q;
    if (kind == "variable") {
      // p = r q with r = min(2, p_minus) > 1
      if (!(S.p.p_minus() > 1.0)) throw Error(ErrorCode::ConfigInvalid, "maximal.kind: variable needs exponent p_minus > 1");
      q = S.p.scaled(1.0 / std::min(2.0, S.p.p_minus()));
    }
    Csv csv(run.hash(), {"member", "kind", "parameter", "norm_in", "norm_out", "ratio"});
    double worst = 0.0;
    for (int k = 0; k < cfg.suite.count; ++k) {
      const BodyField F = random_body_field(S.g, cfg.weight.m, cfg.suite.seed, k);
      const ScalarField Fn = body_norms(F);
      ScalarField out(S.g);
      double par = 0.0;
      if (kind == "hl") out = hl_maximal(Fn, par = alpha, mc);
      else if (kind == "variable") out = variable_maximal(Fn, *q, mc);
      else if (kind == "christ_goldberg") out = christ_goldberg(S.W, F, par = alpha, mc);
      else out = reducing_cg(S.W, F, par = u, mc, ops);
      const double ni = vnorm(Fn, S.p), no = vnorm(out, S.p);
      const double r = ni > 0.0 ? no / ni : 0.0;
      worst = std::max(worst, r);
      csv.row().add(k).add(kind).add(par).add(ni).add(no).add(r);
      if (k == 0) run.write_field("maximal_000.bin", as_vector(out));
      run.contract(std::isfinite(r), "non-finite operator ratio for member " + std::to_string(k));
    }
    run.write_csv("maximal.csv", csv);
    run.write_json("maximal_summary.json", {{"kind", kind}, {"max_ratio", worst}, {"alpha", alpha}, {"u", u}});
    return run.finish();
  }

  const TestFunctionCatalog cat(S.g.n(), catalog_order(cfg, cert));
  const MaximalParams mp = maximal_params(cfg);
  const auto suite = make_suite(cfg, S.g, cfg.decomposition.s);
  Csv csv(run.hash(), {"member", "radial", "nontangential", "peetre", "grand", "ratio_nt", "ratio_peetre", "ratio_grand",
                       "ordering_violation"});
  double lo[3] = {1e300, 1e300, 1e300}, hi[3] = {0, 0, 0};
  for (std::size_t k = 0; k < suite.size(); ++k) {
    const EquivalenceRow r = equivalence_row(suite[k], S.W, S.p, cat, mp);
    csv.row().add(k).add(r.radial).add(r.nontangential).add(r.peetre).add(r.grand).add(r.ratio_nt).add(r.ratio_peetre)
        .add(r.ratio_grand).add(r.ordering_violation);
    const double rs[3] = {r.ratio_nt, r.ratio_peetre, r.ratio_grand};
    for (int t = 0; t < 3; ++t) {
      lo[t] = std::min(lo[t], rs[t]);
      hi[t] = std::max(hi[t], rs[t]);
    }
    run.contract(r.ordering_violation <= kOrderingSlack, "ordering chain violated for member " + std::to_string(k));
    if (k == 0) run.write_field("maximal_000.bin", as_vector(cb_maximal_weighted(suite[k], mp, cat, S.W)));
  }
  run.write_csv("equivalence.csv", csv);
  run.write_json("equivalence_summary.json",
                 {{"kind", kind},
                  {"N", cat.N()},
                  {"bracket_nt", {lo[0], hi[0]}},
                  {"bracket_peetre", {lo[1], hi[1]}},
                  {"bracket_grand", {lo[2], hi[2]}}});
  return run.finish();
}

int cmd_decompose(const ExperimentConfig& cfg, Run& run) {
  Setup S(cfg);
  const int m = cfg.weight.m;
  const WeightCertificate cert = certify(cfg, S.g);
  const TestFunctionCatalog cat(S.g.n(), catalog_order(cfg, cert));
  const VectorField f = load_input(cfg, S.g, run, cfg.decomposition.s);
  DecompOptions o;
  o.s = cfg.decomposition.s;
  o.K_levels = cfg.decomposition.K_levels;
  o.measure_rule = cfg.decomposition.measure_rule;
  o.maximal.max_scale = cfg.maximal.max_scale;
  const Decomposition D = atomic_decompose(f, S.W, S.p, cat, cert, o);

  // atoms.bin: per atom, per cell [cell index, a_1..a_m]
  std::vector<double> raw;
  json atoms = json::array();
  Csv csv(run.hash(), {"atom", "level", "lambda", "threshold", "cells", "C_A", "C_W", "moment_max", "support_ok", "ok"});
  std::size_t failures = 0;
  double C_A_max = 0.0;
  for (std::size_t k = 0; k < D.atoms.size(); ++k) {
    const AtomRecord& a = D.atoms[k];
    const AtomReport rep = validate_atom(a, S.W, S.p, D.s, cfg.decomposition.C_atom);
    C_A_max = std::max(C_A_max, rep.C_A);
    if (!rep.ok()) ++failures;
    atoms.push_back({{"level", a.level},
                     {"cube", cube_json(a.Q)},
                     {"support", cube_json(a.support)},
                     {"lambda", a.lambda},
                     {"threshold", a.threshold},
                     {"cells", a.cells.size()},
                     {"offset", raw.size()},
                     {"C_A", rep.C_A},
                     {"C_W", rep.C_W},
                     {"moment_max", rep.moment_max},
                     {"ok", rep.ok()}});
    for (std::size_t r = 0; r < a.cells.size(); ++r) {
      raw.push_back(double(a.cells[r]));
      for (int c = 0; c < m; ++c) raw.push_back(a.values[r * std::size_t(m) + std::size_t(c)]);
    }
    csv.row().add(k).add(a.level).add(a.lambda).add(a.threshold).add(a.cells.size()).add(rep.C_A).add(rep.C_W)
        .add(rep.moment_max).add(rep.support_ok).add(rep.ok());
  }
  run.write_doubles("atoms.bin", raw);
  run.write_csv("atoms.csv", csv);

  const VectorField R = reconstruct(D);
  run.write_field("reconstruction.bin", R);
  const double err = relative_l2_error(R, f);
  const double hn = hardy_norm(f, S.W, S.p, cat, cfg.maximal.max_scale);
  const double cn = D.empty() ? 0.0 : coefficient_norm(D, S.p.r(), S.p);

  json levels = json::array();
  std::vector<std::size_t> counts;
  bool structure_ok = true;
  for (const auto& L : D.levels) counts.push_back(L.size());
  for (const auto& d : D.diagnostics) {
    levels.push_back({{"k", d.k},
                      {"cubes", d.cubes},
                      {"E_cells", d.E_cells},
                      {"raw_cells", d.raw_cells},
                      {"dropped_cells", d.dropped_cells},
                      {"threshold_min", d.threshold_min},
                      {"threshold_max", d.threshold_max},
                      {"premise_ok", d.premise_ok},
                      {"stopping_ok", d.stopping_ok},
                      {"residual_l2", d.residual_l2}});
    structure_ok = structure_ok && d.premise_ok && d.stopping_ok;
  }
  json man;
  man["config_hash"] = run.hash();
  man["grid"] = {{"n", S.g.n()}, {"J", S.g.J()}, {"L_box", S.g.L_box()}};
  man["m"] = m;
  man["s"] = D.s;
  man["measure_rule"] = D.measure_rule;
  man["shift"] = D.shift;
  man["Q0"] = D.empty() ? json() : cube_json(D.Q0);
  man["eps"] = D.eps;
  man["L_dec"] = D.L_dec;
  man["u"] = D.u;
  man["ccap"] = D.ccap;
  man["l_min"] = D.l_min;
  man["catalog_N"] = cat.N();
  man["cube_counts"] = counts;
  man["atom_count"] = D.atoms.size();
  man["null_atoms"] = D.null_pieces;
  man["levels"] = levels;
  man["f_l2"] = D.f_l2;
  man["input_moment_max"] = D.input_moment_max;
  man["resolution_exhausted"] = D.resolution_exhausted;
  man["basis_orthonormality"] = D.basis_orthonormality;
  man["basis_reproduction"] = D.basis_reproduction;
  man["projection_moment"] = D.projection_moment;
  man["gram_condition_max"] = D.gram_condition_max;
  man["c_eta"] = D.c_eta;
  man["C_atom"] = cfg.decomposition.C_atom;
  man["C_A_max"] = C_A_max;
  man["hardy_norm"] = hn;
  man["coefficient_norm"] = cn;
  man["residual_l2"] = l2_norm(D.residual);
  man["atoms_file"] = "atoms.bin";
  man["reconstruction"] = {{"file", "reconstruction.bin"}, {"checksum", hex64(checksum(R.values))}, {"relative_l2_error", err}};
  man["atoms"] = atoms;
  run.write_json("decomposition.json", man);

  run.contract(failures == 0, std::to_string(failures) + " atoms fail validation");
  run.contract(structure_ok, "a level violates the stopping properties or the measure premise");
  run.contract(err <= 1e-3, "reconstruction error " + num(err) + " > 1e-3");
  const std::size_t cubes_total = std::accumulate(counts.begin(), counts.end(), std::size_t(0));
  run.contract(D.empty() || D.atoms.size() == cubes_total,
               "atom count " + std::to_string(D.atoms.size()) + " differs from the stopping-cube count " + std::to_string(cubes_total));
  return run.finish();
}

int cmd_validate_atoms(const ExperimentConfig& cfg, Run& run) {
  Setup S(cfg);
  const LoadedDecomposition L = load_decomposition(cfg, S.g, cfg.weight.m, run);
  const int s = L.manifest["s"].get<int>();
  Csv csv(run.hash(), {"atom", "level", "C_A", "C_W", "moment_max", "support_ok", "moment_ok", "size_ok"});
  std::size_t bad = 0;
  double C_A_max = 0.0;
  for (std::size_t k = 0; k < L.atoms.size(); ++k) {
    const AtomReport r = validate_atom(L.atoms[k], S.W, S.p, s, cfg.decomposition.C_atom);
    C_A_max = std::max(C_A_max, r.C_A);
    if (!r.ok()) ++bad;
    csv.row().add(k).add(L.atoms[k].level).add(r.C_A).add(r.C_W).add(r.moment_max).add(r.support_ok).add(r.moment_ok).add(r.size_ok);
  }
  run.write_csv("validation.csv", csv);
  run.write_json("validation.json", {{"atoms", L.atoms.size()}, {"failures", bad}, {"C_A_max", C_A_max}, {"C_atom", cfg.decomposition.C_atom}});
  run.contract(bad == 0, std::to_string(bad) + " atoms fail validation");
  return run.finish();
}

int cmd_reconstruct(const ExperimentConfig& cfg, Run& run) {
  const Grid g = cfg.make_grid();
  const LoadedDecomposition L = load_decomposition(cfg, g, cfg.weight.m, run);
  const int lvl = cfg.decomposition.up_to_level;
  const VectorField R = sum_atoms(L.atoms, g, cfg.weight.m, lvl);
  run.write_field("reconstruction.bin", R);
  const std::string sum = hex64(checksum(R.values));
  json out = {{"up_to_level", lvl}, {"checksum", sum}};
  if (lvl < 0) {
    const std::string want = L.manifest["reconstruction"]["checksum"].get<std::string>();
    out["manifest_checksum"] = want;
    out["match"] = sum == want;
    run.contract(sum == want, "reconstruction checksum " + sum + " differs from the manifest's " + want);
  }
  run.write_json("reconstruct.json", out);
  return run.finish();
}

int cmd_cz_bench(const ExperimentConfig& cfg, Run& run) {
  Setup S(cfg);
  const int s = cfg.decomposition.s;
  const WeightCertificate cert = certify(cfg, S.g);
  const TestFunctionCatalog cat(S.g.n(), catalog_order(cfg, cert));
  const CZOperator T{make_kernel(cfg.kernel), 0.0};
  const auto suite = make_suite(cfg, S.g, s);
  const CzBench B = cz_bench(T, S.W, S.p, suite, cat, s);
  Csv csv(run.hash(), {"member", "kernel", "hl", "hh", "moments_ok", "moment_worst"});
  for (std::size_t k = 0; k < B.rows.size(); ++k)
    csv.row().add(k).add(cfg.kernel).add(B.rows[k].hl).add(B.rows[k].hh).add(B.rows[k].moments_ok).add(B.rows[k].moment_worst);
  run.write_csv("cz_bench.csv", csv);

  DecompOptions o;
  o.s = s;
  o.K_levels = cfg.decomposition.K_levels;
  o.measure_rule = cfg.decomposition.measure_rule;
  const double thr = decay_threshold(S.g.n(), s);
  json fits = json::array();
  std::size_t total = 0, good = 0;
  const std::size_t members = std::min<std::size_t>(suite.size(), 3);
  for (std::size_t k = 0; k < members; ++k) {
    const Decomposition D = atomic_decompose(suite[k], S.W, S.p, cat, cert, o);
    for (std::size_t i = 0; i < D.atoms.size(); ++i) {
      if (D.atoms[i].null()) continue;
      const DecayFit fit = atom_image_decay(T, D.atoms[i], S.W, S.p);
      if (fit.empty) continue;
      ++total;
      const bool pass = fit.slope <= thr;
      good += pass;
      fits.push_back({{"member", k}, {"atom", i}, {"level", D.atoms[i].level}, {"slope", fit.slope},
                      {"intercept", fit.intercept}, {"radii", fit.radii}, {"pass", pass}});
    }
  }
  const double frac = total ? double(good) / double(total) : 1.0;
  run.write_json("decay.json", {{"kernel", cfg.kernel}, {"slope_threshold", thr}, {"atoms", total}, {"passing", good},
                                {"pass_fraction", frac}, {"fits", fits}, {"max_hl", B.max_hl}, {"max_hh", B.max_hh}});
  run.contract(frac >= 0.9, "decay slope criterion holds for " + num(frac) + " of atoms (< 0.9)");
  run.contract(std::isfinite(B.max_hl) && std::isfinite(B.max_hh), "non-finite boundedness ratio");
  return run.finish();
}

int cmd_duality(const ExperimentConfig& cfg, Run& run) {
  Setup S(cfg);
  if (!(S.p.p_plus() <= 1.0 + 1e-12)) throw Error(ErrorCode::ConfigInvalid, "exponent: duality requires p_plus <= 1");
  const int s = cfg.decomposition.s;
  const WeightCertificate cert = certify(cfg, S.g);
  const TestFunctionCatalog cat(S.g.n(), catalog_order(cfg, cert));
  SuiteOptions fo;
  fo.count = cfg.suite.count;
  fo.seed = cfg.suite.seed;
  fo.s = s;
  const auto fs = moment_free_suite(S.g, cfg.weight.m, fo);
  SuiteOptions go = fo;
  go.seed = cfg.suite.seed ^ 0x9E3779B97F4A7C15ULL;
  auto gs = smooth_suite(S.g, cfg.weight.m, go);
  // Control pair: a polynomial g against a moment-free f.
  VectorField poly(S.g, cfg.weight.m);
  for (std::size_t i = 0; i < S.g.size(); ++i) {
    const Point x = S.g.midpoint(i);
    for (int c = 0; c < cfg.weight.m; ++c) poly.at(i)[c] = 1.0 + (s >= 1 ? 0.5 * x[0] * double(c + 1) : 0.0);
  }
  std::vector<VectorField> fs2 = fs, gs2 = gs;
  fs2.push_back(fs.front());
  gs2.push_back(poly);
  std::vector<Cube> cubes;
  for (const Cube& q : maximal_catalog(S.g))
    if (cells_in(S.g, q).size() >= std::size_t(std::pow(2.0 * (s + 1), S.g.n())) && cell_range(S.g, q, false).inside(S.g))
      cubes.push_back(q);
  const DualityReport rep = duality_pairing_check(fs2, gs2, S.W, S.p, cfg.campanato_q, s, cat, cubes);
  const double poly_norm = campanato_norm(poly, S.W, S.p, cfg.campanato_q, s, cubes);
  Csv csv(run.hash(), {"pair", "ratio"});
  double worst = 0.0;
  for (std::size_t k = 0; k < rep.ratios.size(); ++k) {
    csv.row().add(k).add(rep.ratios[k]);
    if (k + 1 < rep.ratios.size()) worst = std::max(worst, rep.ratios[k]);
  }
  run.write_csv("duality.csv", csv);
  run.write_json("duality.json", {{"pairs", rep.ratios.size()}, {"max_ratio", worst}, {"cancellations", rep.cancellations},
                                  {"polynomial_campanato", poly_norm}, {"cubes", cubes.size()}});
  run.contract(std::isfinite(worst), "unbounded pairing ratio");
  run.contract(poly_norm <= 1e-9, "Campanato norm of a polynomial " + num(poly_norm) + " > 1e-9");
  return run.finish();
}

// ---------------------------------------------------------------------------------------------

namespace {

std::vector<std::pair<std::string, double>> sweep_values(const ExperimentConfig& cfg) {
  Setup S(cfg);
  std::vector<std::pair<std::string, double>> v;
  const WeightCertificate cert = certify(cfg, S.g);
  if (cfg.sweep.target == "certificate") {
    if (!std::isnan(cert.ap_char)) v.push_back({"ap_char", cert.ap_char});
    v.push_back({"apinfty_char", cert.apinfty_char});
    v.push_back({"fit_max_ratio", cert.fit_max_ratio});
    return v;
  }
  const TestFunctionCatalog cat(S.g.n(), catalog_order(cfg, cert));
  const auto suite = make_suite(cfg, S.g, cfg.decomposition.s);
  if (cfg.sweep.target == "equivalence") {
    const auto rows = equivalence_report(suite, S.W, S.p, cat, maximal_params(cfg));
    double hi[3] = {0, 0, 0};
    for (const auto& r : rows) {
      hi[0] = std::max(hi[0], r.ratio_nt);
      hi[1] = std::max(hi[1], r.ratio_peetre);
      hi[2] = std::max(hi[2], r.ratio_grand);
    }
    v = {{"max_ratio_nt", hi[0]}, {"max_ratio_peetre", hi[1]}, {"max_ratio_grand", hi[2]}};
  } else if (cfg.sweep.target == "cz") {
    const CzBench B = cz_bench(CZOperator{make_kernel(cfg.kernel), 0.0}, S.W, S.p, suite, cat, cfg.decomposition.s);
    v = {{"max_hl", B.max_hl}, {"max_hh", B.max_hh}};
  } else {
    DecompOptions o;
    o.s = cfg.decomposition.s;
    o.K_levels = cfg.decomposition.K_levels;
    o.measure_rule = cfg.decomposition.measure_rule;
    double worst = 0.0;
    for (const auto& f : suite) {
      const Decomposition D = atomic_decompose(f, S.W, S.p, cat, cert, o);
      const double h = hardy_norm(f, S.W, S.p, cat);
      if (h > 0.0 && !D.empty()) worst = std::max(worst, coefficient_norm(D, S.p.r(), S.p) / h);
    }
    v = {{"max_coef_over_hardy", worst}};
  }
  return v;
}

}  // namespace

int cmd_sweep(const ExperimentConfig& cfg, Run& run) {
  std::vector<std::vector<std::pair<std::string, double>>> vals;
  for (int r = 0; r <= cfg.sweep.refinements; ++r) {
    ExperimentConfig c = cfg;
    c.grid.J = cfg.grid.J + r;
    vals.push_back(sweep_values(c));
  }
  Csv csv(run.hash(), {"target", "quantity", "J", "value", "change", "pass"});
  for (std::size_t q = 0; q < vals[0].size(); ++q) {
    for (std::size_t r = 0; r < vals.size(); ++r) {
      const double v0 = vals[r == 0 ? 0 : r - 1][q].second, v = vals[r][q].second;
      const double change = r == 0 ? 0.0 : (v0 == v ? 0.0 : std::abs(v - v0) / std::max(std::abs(v0), 1e-300));
      const bool pass = change < cfg.sweep.max_change;
      csv.row().add(cfg.sweep.target).add(vals[r][q].first).add(cfg.grid.J + int(r)).add(v).add(change).add(pass);
      run.contract(pass, vals[r][q].first + " changes by " + num(change) + " at J = " + std::to_string(cfg.grid.J + int(r)));
    }
  }
  run.write_csv("sweep.csv", csv);
  return run.finish();
}

}  // namespace hardylab::cli
