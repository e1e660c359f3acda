// Acceptance suite: one PASS/FAIL line per criterion. Tolerances are fixed below.
#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "hardylab/czops.hpp"
#include "hardylab/decomp.hpp"
#include "hardylab/maximal.hpp"
#include "hardylab/rng.hpp"
#include "hardylab/testfun.hpp"
#include "hardylab/vexp.hpp"
#include "hardylab/weights.hpp"

using namespace hardylab;

namespace {

// Tolerances and pinned constants.
constexpr int kJ = 8;
constexpr int kSuite = 10;
constexpr std::uint64_t kSeed = 1;
constexpr double kVnormTol = 1e-9;
constexpr double kEstQStability = 0.10;
constexpr double kFitSlack = 1.001;
constexpr double kScalarFitTol = 1e-9;
constexpr double kCharTol = 1e-6;
constexpr double kSpotTol = 0.02;
constexpr double kOrthoTol = 1e-10;
constexpr double kReproTol = 1e-9;
constexpr double kMomentTol = 1e-8;
constexpr double kRoundTripTol = 1e-3;
constexpr double kCAtom = 1e6;  // global size constant for validate_atom
constexpr double kCoefStability = 0.20;
constexpr double kOrderingSlack = 1e-12;
constexpr double kEquivStability = 0.20;
constexpr double kMaximalStability = 0.15;
constexpr int kBodyInputs = 30;
constexpr double kDecayMargin = 0.3;
constexpr double kDecayFraction = 0.9;
constexpr double kHilbertTol = 1e-2;
constexpr double kHilbertOrder = 1.0;
constexpr double kCzGrowth = 0.20;
constexpr int kDualPairs = 25;
constexpr double kCDual = 1e4;
constexpr double kDualStability = 0.20;
constexpr double kPolyCampanato = 1e-9;

using Clock = std::chrono::steady_clock;
double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

std::string fmt(double v) {
  char b[64];
  std::snprintf(b, sizeof b, "%.4g", v);
  return b;
}

double rel_change(double a, double b) {
  if (a == b) return 0.0;
  return std::abs(b - a) / std::max(std::abs(a), 1e-300);
}

struct Pair {
  std::string name;
  WeightSpec w;
  ExponentSpec p;
};

std::vector<Pair> preset_matrix() {
  const std::vector<std::pair<std::string, WeightSpec>> ws = {
      {"identity", WeightSpec::identity(2)},
      {"scalar_power(1/2)", WeightSpec::scalar_power(2, 0.5)},
      {"diag_power(1/2,1/4)", WeightSpec::diag_power({0.5, 0.25})},
      {"rotated_diag(pi/6,1/2,1/4)", WeightSpec::rotated_diag(M_PI / 6, 0.5, 0.25)}};
  const std::vector<std::pair<std::string, ExponentSpec>> ps = {
      {"constant(2)", ExponentSpec::constant(2)},
      {"constant(1)", ExponentSpec::constant(1)},
      {"log_decay(2,1)", ExponentSpec::log_decay(2, 1)},
      {"smooth_step(1,2,0.5)", ExponentSpec::smooth_step(1, 2, 0.5)}};
  std::vector<Pair> out;
  for (const auto& w : ws)
    for (const auto& p : ps) out.push_back({w.first + " x " + p.first, w.second, p.second});
  return out;
}

// Per-(pair, J) state shared across criteria.
struct PairState {
  Grid g;
  MatrixWeight W;
  ExponentProfile p;
  WeightCertificate cert;
  TestFunctionCatalog cat;
  std::vector<VectorField> suite;
  std::vector<Decomposition> decomps;
  std::vector<double> hardy;
  double decompose_seconds = 0.0;
  PairState(const Pair& pr, int J)
      : g(1, J, 4.0),
        W(pr.w, g),
        p(ExponentProfile::realize(pr.p, g)),
        cert(certify(pr, g)),
        cat(1, std::max(2, int(std::ceil(1.0 / cert.alpha - 1e-12)) + 1)) {
    SuiteOptions o;
    o.count = kSuite;
    o.seed = kSeed;
    suite = moment_free_suite(g, 2, o);
  }
  static WeightCertificate certify(const Pair& pr, const Grid& g) {
    CertifyOptions o;
    o.seed = kSeed;
    return certify_weight(pr.w, pr.p, g, o);
  }
  void decompose() {
    if (!decomps.empty()) return;
    const auto t0 = Clock::now();
    for (const auto& f : suite) {
      decomps.push_back(atomic_decompose(f, W, p, cat, cert));
      hardy.push_back(hardy_norm(f, W, p, cat));
    }
    decompose_seconds = seconds_since(t0);
  }
};

class Context {
 public:
  std::vector<Pair> pairs = preset_matrix();
  PairState& at(std::size_t k, int J) {
    auto key = std::make_pair(k, J);
    auto it = cache_.find(key);
    if (it == cache_.end()) it = cache_.emplace(key, std::make_unique<PairState>(pairs[k], J)).first;
    return *it->second;
  }
  void drop(int J) {
    for (auto it = cache_.begin(); it != cache_.end();)
      it = it->first.second == J ? cache_.erase(it) : std::next(it);
  }
  // Multi-level inputs: narrow moment-free spikes at J = 10, premise rule.
  struct Spiky {
    Decomposition d;
    VectorField f;
    MatrixWeight W;
    ExponentProfile p;
  };
  std::vector<Spiky>& spiky() {
    if (!spiky_.empty()) return spiky_;
    const Grid g(1, 10, 4.0);
    const WeightSpec ws = WeightSpec::diag_power({0.5, 0.25});
    const ExponentSpec ps = ExponentSpec::constant(2);
    CertifyOptions co;
    co.seed = kSeed;
    const WeightCertificate cert = certify_weight(ws, ps, g, co);
    const MatrixWeight W(ws, g);
    const ExponentProfile p = ExponentProfile::realize(ps, g);
    const TestFunctionCatalog cat(1, std::max(2, int(std::ceil(1.0 / cert.alpha - 1e-12)) + 1));
    for (int s : {0, 1})
      for (double R : {6.0, 24.0}) {
        VectorField f = spike_input(g, s, R);
        DecompOptions o;
        o.s = s;
        o.measure_rule = "premise";
        spiky_.push_back({atomic_decompose(f, W, p, cat, cert, o), f, W, p});
      }
    return spiky_;
  }

  static VectorField spike_input(const Grid& g, int s, double radius_cells) {
    VectorField f(g, 2);
    for (double c : {-1.0, 0.7, 1.9}) {
      const double r = radius_cells * g.h();
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double y = (g.midpoint(i)[0] - c) / r;
        if (std::abs(y) >= 1) continue;
        const double b = std::exp(-1 / (1 - y * y));
        f.at(i)[0] += b * (c + 2);
        f.at(i)[1] += b * (1 - c);
      }
    }
    remove_moments(f, s, {0.0, 0.0}, 3.0);
    return f;
  }

 private:
  std::map<std::pair<std::size_t, int>, std::unique_ptr<PairState>> cache_;
  std::vector<Spiky> spiky_;
};

struct Result {
  bool pass = true;
  std::string detail;
  void require(bool ok, const std::string& why) {
    if (ok) return;
    if (pass) detail = why;
    pass = false;
  }
};

// ---------------------------------------------------------------------------------------------

Result variable_norm_oracle() {
  const auto t0 = Clock::now();
  Result r;
  const Grid g(1, kJ, 4.0);
  CounterRng rng(101);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const double p0 = rng.uniform(0.5, 4.0);
    ScalarField f(g);
    for (double& v : f.values) v = rng.uniform() < 0.25 ? 0.0 : rng.normal();
    double s = 0.0;
    for (double v : f.values) s += std::pow(std::abs(v), p0);
    const double closed = std::pow(s * g.cell_volume(), 1.0 / p0);
    worst = std::max(worst, std::abs(vnorm(f, ExponentProfile::constant(g, p0)) / closed - 1.0));
  }
  const ExponentProfile two = ExponentProfile::realize(ExponentSpec::two_level(1, 2, 0.5), g);
  const ScalarField ind = sample_scalar(g, [](const Point& x) { return x[0] > 0 && x[0] < 1 ? 1.0 : 0.0; });
  const double q = vnorm(ind, two);
  const double dt = seconds_since(t0);
  r.require(worst <= kVnormTol, "closed-form mismatch " + fmt(worst));
  r.require(std::abs(q - 1.0) <= kVnormTol, "two_level example " + fmt(q));
  r.require(dt < 5.0, "runtime " + fmt(dt) + " s");
  if (r.pass) r.detail = "max rel err " + fmt(worst) + ", two_level " + fmt(q) + ", " + fmt(dt) + " s";
  return r;
}

Result est_q_bracket() {
  const auto t0 = Clock::now();
  Result r;
  std::string d;
  const std::vector<std::pair<std::string, ExponentSpec>> lh = {{"constant(2)", ExponentSpec::constant(2)},
                                                             {"constant(1)", ExponentSpec::constant(1)},
                                                             {"log_decay(2,1)", ExponentSpec::log_decay(2, 1)},
                                                             {"smooth_step(1,2,0.5)", ExponentSpec::smooth_step(1, 2, 0.5)}};
  for (const auto& [name, spec] : lh) {
    double B[2];
    for (int k = 0; k < 2; ++k) {
      const Grid g(1, kJ + k, 4.0);
      const ExponentProfile p = ExponentProfile::realize(spec, g);
      double b = 1.0;
      for (const Cube& q : maximal_catalog(g)) {
        if (cells_in(g, q).empty()) continue;
        const double v = est_q_ratio(p, q);
        b = std::max({b, v, 1.0 / v});
      }
      B[k] = b;
    }
    const double ch = rel_change(B[0], B[1]);
    r.require(std::isfinite(B[0]) && ch <= kEstQStability, name + ": B " + fmt(B[0]) + " -> " + fmt(B[1]));
    d += name + " B=" + fmt(B[0]) + "/" + fmt(B[1]) + " ";
  }
  const double dt = seconds_since(t0);
  r.require(dt < 30.0, "runtime " + fmt(dt) + " s");
  if (r.pass) r.detail = d + fmt(dt) + " s";
  return r;
}

Result reducing_certificate(Context& C) {
  const auto t0 = Clock::now();
  Result r;
  double lo = INFINITY, hi = 0.0;
  std::size_t cubes = 0;
  for (std::size_t k = 0; k < C.pairs.size(); ++k) {
    PairState& S = C.at(k, kJ);
    for (const Cube& q : characteristic_catalog(S.g, kSeed, 200)) {
      const ReducingOperator A = reducing_operator(S.W, S.p, q);
      lo = std::min(lo, A.min_ratio);
      hi = std::max(hi, A.max_ratio);
      ++cubes;
      r.require(A.min_ratio >= 1.0 - 1e-12 && A.max_ratio <= std::sqrt(2.0) * kFitSlack,
                C.pairs[k].name + ": fit ratio outside [1, sqrt(m) 1.001]");
    }
  }
  // m = 1: the operator is the scalar reduced norm itself.
  const Grid g(1, kJ, 4.0);
  const MatrixWeight W(WeightSpec::scalar_power(1, 0.5), g);
  double scalar = 0.0;
  for (const auto& ps : {ExponentSpec::constant(2), ExponentSpec::smooth_step(1, 2, 0.5)}) {
    const ExponentProfile p = ExponentProfile::realize(ps, g);
    for (const Cube& q : characteristic_catalog(g, kSeed, 50)) {
      const double one = 1.0;
      const double N = reduced_norm(W, p, cells_in(g, q), &one);
      scalar = std::max(scalar, std::abs(reducing_operator(W, p, q).A(0, 0) / N - 1.0));
    }
  }
  r.require(scalar <= kScalarFitTol, "scalar mismatch " + fmt(scalar));
  const double dt = seconds_since(t0);
  r.require(dt < 60.0, "runtime " + fmt(dt) + " s");
  if (r.pass)
    r.detail = std::to_string(cubes) + " cubes, ratios in [" + fmt(lo) + ", " + fmt(hi) + "], scalar err " + fmt(scalar) + ", " +
               fmt(dt) + " s";
  return r;
}

Result characteristics() {
  const auto t0 = Clock::now();
  Result r;
  const Grid g(1, kJ, 4.0);
  const auto catalog = characteristic_catalog(g, kSeed, 200);
  Mat A(2, 2);
  A << 2.0, 0.5, 0.5, 1.0;
  // ||W(x) W^{-1}(y)|| = 1 for these weights, so ap is the unweighted constant
  // sup_Q ||1_Q||_p ||1_Q||_p' / |Q|: exactly 1 for constant p, computed directly otherwise.
  double worst = 0.0, unweighted_max = 1.0;
  for (const auto& ps : {ExponentSpec::constant(2), ExponentSpec::constant(1), ExponentSpec::log_decay(2, 1),
                         ExponentSpec::smooth_step(1, 2, 0.5)}) {
    const ExponentProfile p = ExponentProfile::realize(ps, g);
    const ExponentProfile pc = conjugate(p);
    double want = 1.0;
    if (p.p_minus() != p.p_plus()) {
      want = 0.0;
      for (const Cube& q : catalog) {
        const auto cells = cells_in(g, q);
        want = std::max(want, vnorm_indicator(p, cells) * vnorm_indicator(pc, cells) / (double(cells.size()) * g.h()));
      }
    }
    unweighted_max = std::max(unweighted_max, want);
    for (const WeightSpec& ws : {WeightSpec::identity(2), WeightSpec::constant(A)}) {
      const MatrixWeight W(ws, g);
      worst = std::max(worst, std::abs(ap_characteristic(W, p, catalog).value / want - 1.0));
      worst = std::max(worst, std::abs(apinfty_characteristic(W, p, catalog).value - 1.0));
    }
  }
  const MatrixWeight S(WeightSpec::scalar_power(1, 0.5), g);
  const double spot = apinfty_on_cube(S, ExponentProfile::constant(g, 2.0), Cube(1, {0.5, 0.0}, 1.0));
  const double want = std::exp(0.5) / std::sqrt(2.0);
  const double dt = seconds_since(t0);
  r.require(worst <= kCharTol, "trivial-weight characteristic off by " + fmt(worst));
  r.require(std::abs(spot / want - 1.0) <= kSpotTol, "spot value " + fmt(spot));
  r.require(dt < 60.0, "runtime " + fmt(dt) + " s");
  if (r.pass) r.detail = "trivial err " + fmt(worst) + " (variable-exponent ap " + fmt(unweighted_max) + "), spot " + fmt(spot) + " vs " + fmt(want) + ", " + fmt(dt) + " s";
  return r;
}

// 9L inside E and the box, cell by cell.
bool nine_inside(const Grid& g, const Mask& E, const Cube& L) {
  const Cube D = L.dilate(9, 1);
  for (int ax = 0; ax < g.n(); ++ax)
    if (D.lower(ax) < -g.L_box() || D.upper(ax) > g.L_box()) return false;
  for (auto c : cells_in(g, D))
    if (!E[c]) return false;
  return true;
}

// Brute-force selection: coarse to fine, accept every lattice cube meeting uncovered E with 9L inside E.
std::vector<Cube> brute_whitney(const Mask& E, unsigned shift) {
  const Grid& g = E.grid;
  std::vector<Cube> out;
  std::vector<char> covered(g.size(), 0);
  const int kmax = int(std::floor(std::log2(2.0 * g.L_box()) + 1e-9));
  const int kmin = int(std::lround(std::log2(g.h())));
  for (int k = kmax; k >= kmin; --k) {
    const double l = std::ldexp(1.0, k);
    const long count = long(std::ceil(2.0 * g.L_box() / l)) + 2;
    for (long j = -count; j <= count; ++j) {
      DyadicIndex d;
      d.k = k;
      d.m = {j, 0};
      d.shift = shift;
      const Cube L = Cube::dyadic(1, d);
      const auto cells = cells_in(g, L);
      bool fresh = false;
      for (auto c : cells) fresh = fresh || (E[c] && !covered[c]);
      if (!fresh || !nine_inside(g, E, L)) continue;
      for (auto c : cells) covered[c] = 1;
      out.push_back(L);
    }
  }
  return out;
}

Mask random_open_set(const Grid& g, CounterRng& rng) {
  Mask E(g);
  const int blobs = 1 + int(rng.uniform() * 4);
  for (int b = 0; b < blobs; ++b) {
    const Point c{rng.uniform(-3, 3), rng.uniform(-3, 3)};
    const double rad = rng.uniform(0.05, 1.5);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const Point x = g.midpoint(i);
      double d = std::abs(x[0] - c[0]);
      if (g.n() == 2) d = std::max(d, std::abs(x[1] - c[1]));
      if (d < rad) E.set(i);
    }
  }
  return E;
}

Result whitney_stopping_check() {
  const auto t0 = Clock::now();
  Result r;
  CounterRng rng(55);
  int failures = 0, premise_sets = 0, brute = 0;
  for (int t = 0; t < 50; ++t) {
    const int n = t % 5 == 4 ? 2 : 1;
    const Grid g(n, n == 1 ? (t % 2 ? 10 : 8) : 6, 4.0);
    const Mask E = random_open_set(g, rng);
    const unsigned shift = unsigned(t) % (n == 1 ? 2u : 4u);
    const StoppingCollection S = whitney_stopping(E, shift);
    const StoppingReport rep = check_stopping(S);
    if (!(rep.disjoint && rep.covers && rep.nine_inside && rep.escapes && rep.scale_gap)) ++failures;
    if (n == 1 && g.size() <= 1024) {
      ++brute;
      const auto want = brute_whitney(E, shift);
      bool same = want.size() == S.cubes.size();
      for (std::size_t k = 0; same && k < want.size(); ++k) {
        bool found = false;
        for (const Cube& c : S.cubes) found = found || (c.edge() == want[k].edge() && c.center() == want[k].center());
        same = found;
      }
      if (!same) ++failures;
    }
  }
  r.require(failures == 0, std::to_string(failures) + " sets violate (i)-(iv) or disagree with the brute-force oracle");

  // (v): sets inside 3Q of a few parents with |3Q cap E| < 2^{-4n} |Q|.
  int v_fail = 0;
  for (int t = 0; t < 30; ++t) {
    const Grid g(1, 10, 4.0);
    std::vector<Cube> parents;
    Mask E(g);
    const int np = 1 + t % 3;
    for (int k = 0; k < np; ++k) {
      DyadicIndex d;
      d.k = k + 1 == np ? 0 : -1;
      d.m = {long(std::floor(rng.uniform(-2.0, 2.0) / std::ldexp(1.0, d.k))), 0};
      parents.push_back(Cube::dyadic(1, d));
    }
    for (const Cube& Q : parents) {
      const Cube T = Q.dilate(3, 1);
      const int blobs = 1 + int(rng.uniform() * 3);
      const double budget = Q.edge() / 16.0 / blobs * 0.9;
      for (int b = 0; b < blobs; ++b) {
        const double w = rng.uniform(0.3, 1.0) * budget;
        const double c = rng.uniform(T.lower(0) + w, T.upper(0) - w);
        for (std::size_t i = 0; i < g.size(); ++i)
          if (std::abs(g.midpoint(i)[0] - c) < 0.5 * w) E.set(i);
      }
    }
    if (!measure_premise(E, parents)) continue;
    ++premise_sets;
    const StoppingReport rep = check_stopping(whitney_stopping(E, unsigned(t % 2)), parents);
    if (!rep.premise || !rep.parents_ok) ++v_fail;
  }
  r.require(v_fail == 0, std::to_string(v_fail) + " premise sets violate (v)");
  r.require(premise_sets >= 10, "only " + std::to_string(premise_sets) + " premise sets generated");
  const double dt = seconds_since(t0);
  r.require(dt < 30.0, "runtime " + fmt(dt) + " s");
  if (r.pass)
    r.detail = "50 sets (" + std::to_string(brute) + " brute-forced), " + std::to_string(premise_sets) + " premise sets, " +
               fmt(dt) + " s";
  return r;
}

Result projection_and_basis(Context& C) {
  Result r;
  double ortho = 0.0, repro = 0.0, mom = 0.0;
  std::size_t count = 0;
  auto absorb = [&](const Decomposition& d) {
    ortho = std::max(ortho, d.basis_orthonormality);
    repro = std::max(repro, d.basis_reproduction);
    mom = std::max(mom, d.projection_moment);
    ++count;
  };
  for (std::size_t k = 0; k < C.pairs.size(); ++k) {
    PairState& S = C.at(k, kJ);
    S.decompose();
    for (const auto& d : S.decomps) absorb(d);
  }
  for (const auto& s : C.spiky()) absorb(s.d);
  r.require(ortho <= kOrthoTol, "orthonormality " + fmt(ortho));
  r.require(repro <= kReproTol, "reproduction " + fmt(repro));
  r.require(mom <= kMomentTol, "moment orthogonality " + fmt(mom));
  if (r.pass)
    r.detail = std::to_string(count) + " decompositions: ortho " + fmt(ortho) + ", repro " + fmt(repro) + ", moments " + fmt(mom);
  return r;
}

Result atomic_round_trip(Context& C) {
  Result r;
  double worst_err = 0.0, worst_CA = 0.0, worst_time = 0.0, worst_mom = 0.0;
  std::size_t atoms = 0, levels_max = 0;
  auto check = [&](const Decomposition& d, const VectorField& f, const MatrixWeight& W, const ExponentProfile& p,
                   const std::string& who) {
    const double e = relative_l2_error(reconstruct(d), f);
    worst_err = std::max(worst_err, e);
    r.require(e <= kRoundTripTol, who + ": reconstruction error " + fmt(e));
    double prev = INFINITY;
    for (int k = 0; k < int(d.levels.size()); ++k) {
      const double ek = relative_l2_error(reconstruct(d, k), f);
      r.require(ek <= prev * (1 + 1e-9) + 1e-15, who + ": level error increases at level " + std::to_string(k));
      prev = ek;
    }
    levels_max = std::max(levels_max, d.levels.size());
    for (const auto& a : d.atoms) {
      const AtomReport rep = validate_atom(a, W, p, d.s, kCAtom, kMomentTol);
      worst_CA = std::max(worst_CA, rep.C_A);
      worst_mom = std::max(worst_mom, rep.moment_max);
      ++atoms;
      r.require(rep.ok(), who + ": atom fails validation (C_A " + fmt(rep.C_A) + ", moments " + fmt(rep.moment_max) + ")");
    }
  };
  for (std::size_t k = 0; k < C.pairs.size(); ++k) {
    const auto t0 = Clock::now();
    PairState& S = C.at(k, kJ);
    S.decompose();
    for (std::size_t i = 0; i < S.suite.size(); ++i) check(S.decomps[i], S.suite[i], S.W, S.p, C.pairs[k].name);
    worst_time = std::max(worst_time, seconds_since(t0) + S.decompose_seconds);
  }
  for (const auto& s : C.spiky()) check(s.d, s.f, s.W, s.p, "spiky J=10");
  r.require(worst_time < 300.0, "pair runtime " + fmt(worst_time) + " s");
  if (r.pass)
    r.detail = std::to_string(atoms) + " atoms, max err " + fmt(worst_err) + ", max C_A " + fmt(worst_CA) + " (C_atom " +
               fmt(kCAtom) + "), moments " + fmt(worst_mom) + ", depth " + std::to_string(levels_max) +
               ", slowest pair " + fmt(worst_time) + " s";
  return r;
}

Result coefficient_bounds(Context& C) {
  Result r;
  double worst_coef = 0.0, worst_rec = 0.0, worst_ch = 0.0;
  for (std::size_t k = 0; k < C.pairs.size(); ++k) {
    double coef[2] = {0, 0}, rec[2] = {0, 0};
    for (int j = 0; j < 2; ++j) {
      PairState& S = C.at(k, kJ + j);
      S.decompose();
      for (std::size_t i = 0; i < S.suite.size(); ++i) {
        const Decomposition& d = S.decomps[i];
        const double c = coefficient_norm(d, S.p.r(), S.p);
        if (!(c > 0.0) || !(S.hardy[i] > 0.0)) continue;
        coef[j] = std::max(coef[j], c / S.hardy[i]);
        rec[j] = std::max(rec[j], hardy_norm(reconstruct(d), S.W, S.p, S.cat) / c);
      }
    }
    const double ch = std::max(rel_change(coef[0], coef[1]), rel_change(rec[0], rec[1]));
    worst_coef = std::max(worst_coef, coef[0]);
    worst_rec = std::max(worst_rec, rec[0]);
    worst_ch = std::max(worst_ch, ch);
    r.require(std::isfinite(coef[0]) && std::isfinite(rec[0]) && coef[0] > 0 && rec[0] > 0,
              C.pairs[k].name + ": degenerate constants");
    r.require(ch <= kCoefStability, C.pairs[k].name + ": C_coef " + fmt(coef[0]) + "->" + fmt(coef[1]) + ", C_rec " +
                                        fmt(rec[0]) + "->" + fmt(rec[1]));
  }
  if (r.pass)
    r.detail = "C_coef " + fmt(worst_coef) + ", C_rec " + fmt(worst_rec) + ", max refinement change " + fmt(worst_ch);
  return r;
}

Result maximal_equivalences(Context& C) {
  Result r;
  double viol = 0.0, worst_ch = 0.0, hi_nt = 0.0;
  for (std::size_t k = 0; k < C.pairs.size(); ++k) {
    double lo[2][3], hi[2][3];
    for (int j = 0; j < 2; ++j) {
      PairState& S = C.at(k, kJ + j);
      for (int t = 0; t < 3; ++t) {
        lo[j][t] = INFINITY;
        hi[j][t] = 0.0;
      }
      for (const auto& row : equivalence_report(S.suite, S.W, S.p, S.cat, MaximalParams{})) {
        viol = std::max(viol, row.ordering_violation);
        const double v[3] = {row.ratio_nt, row.ratio_peetre, row.ratio_grand};
        for (int t = 0; t < 3; ++t) {
          lo[j][t] = std::min(lo[j][t], v[t]);
          hi[j][t] = std::max(hi[j][t], v[t]);
        }
      }
    }
    hi_nt = std::max(hi_nt, hi[0][0]);
    for (int t = 0; t < 3; ++t) {
      const double ch = std::max(rel_change(lo[0][t], lo[1][t]), rel_change(hi[0][t], hi[1][t]));
      worst_ch = std::max(worst_ch, ch);
      r.require(ch < kEquivStability, C.pairs[k].name + ": ratio bracket moves by " + fmt(ch));
    }
  }
  r.require(viol <= kOrderingSlack, "ordering chain violated by " + fmt(viol));
  if (r.pass)
    r.detail = "ordering slack " + fmt(viol) + ", max nontangential ratio " + fmt(hi_nt) + ", max bracket change " + fmt(worst_ch);
  return r;
}

Result maximal_boundedness(Context& C) {
  Result r;
  double worst_ch = 0.0, cg_max = 0.0, rcg_max = 0.0, var_max = 0.0;
  for (std::size_t k = 0; k < C.pairs.size(); ++k) {
    double cg[2] = {0, 0}, rcg[2] = {0, 0}, var[2] = {0, 0};
    bool variable = false;
    for (int j = 0; j < 2; ++j) {
      PairState& S = C.at(k, kJ + j);
      const MaximalCatalog mc(S.g);
      const auto ops = catalog_reducing_operators(S.W, S.p, mc);
      variable = S.p.p_minus() > 1.0;
      std::optional<ExponentProfile> q;
      if (variable) q = S.p.scaled(1.0 / std::min(2.0, S.p.p_minus()));
      for (int i = 0; i < kBodyInputs; ++i) {
        const BodyField F = random_body_field(S.g, 2, kSeed, i);
        const ScalarField Fn = body_norms(F);
        const double in = vnorm(Fn, S.p);
        if (!(in > 0.0)) continue;
        cg[j] = std::max(cg[j], vnorm(christ_goldberg(S.W, F, S.cert.alpha, mc), S.p) / in);
        rcg[j] = std::max(rcg[j], vnorm(reducing_cg(S.W, F, S.cert.u, mc, ops), S.p) / in);
        if (variable) var[j] = std::max(var[j], vnorm(variable_maximal(Fn, *q, mc), S.p) / in);
      }
    }
    double ch = std::max(rel_change(cg[0], cg[1]), rel_change(rcg[0], rcg[1]));
    if (variable) ch = std::max(ch, rel_change(var[0], var[1]));
    worst_ch = std::max(worst_ch, ch);
    cg_max = std::max(cg_max, cg[0]);
    rcg_max = std::max(rcg_max, rcg[0]);
    var_max = std::max(var_max, var[0]);
    r.require(std::isfinite(cg[0]) && std::isfinite(rcg[0]) && std::isfinite(var[0]), C.pairs[k].name + ": unbounded estimate");
    r.require(ch < kMaximalStability, C.pairs[k].name + ": estimate moves by " + fmt(ch));
  }
  C.drop(kJ + 1);
  if (r.pass)
    r.detail = "christ_goldberg " + fmt(cg_max) + ", reducing_cg " + fmt(rcg_max) + ", variable " + fmt(var_max) +
               ", max refinement change " + fmt(worst_ch);
  return r;
}

Result hardy_equals_lebesgue() {
  Result r;
  Mat A(2, 2);
  A << 2.0, 0.5, 0.5, 1.0;
  std::string d;
  for (const WeightSpec& ws : {WeightSpec::identity(2), WeightSpec::constant(A)}) {
    double lo[2] = {INFINITY, INFINITY}, hi[2] = {0, 0};
    for (int j = 0; j < 2; ++j) {
      const Grid g(1, kJ + j, 4.0);
      const MatrixWeight W(ws, g);
      const ExponentProfile p = ExponentProfile::constant(g, 2.0);
      const TestFunctionCatalog cat(1, 2);
      SuiteOptions o;
      o.count = 10;
      o.seed = kSeed;
      for (const auto& f : smooth_suite(g, 2, o)) {
        ScalarField wf(g);
        double y[2];
        for (std::size_t i = 0; i < g.size(); ++i) {
          mat_vec(W.W(i), f.at(i), y, 2);
          wf[i] = euclid(y, 2);
        }
        const double ratio = hardy_norm(f, W, p, cat) / vnorm(wf, p);
        lo[j] = std::min(lo[j], ratio);
        hi[j] = std::max(hi[j], ratio);
      }
    }
    const double ch = std::max(rel_change(lo[0], lo[1]), rel_change(hi[0], hi[1]));
    r.require(lo[0] > 0 && std::isfinite(hi[0]) && ch < 0.2, ws.label() + ": bracket moves by " + fmt(ch));
    d += ws.label() + " [" + fmt(lo[0]) + ", " + fmt(hi[0]) + "] change " + fmt(ch) + "; ";
  }
  if (r.pass) r.detail = d;
  return r;
}

Result cz_decay(Context& C) {
  Result r;
  const CZOperator T{make_kernel("hilbert")};
  std::size_t total = 0, good = 0, deep = 0, deep_good = 0;
  auto fit_all = [&](const Decomposition& d, const MatrixWeight& W, const ExponentProfile& p) {
    const double thr = -(1.0 + double(d.s) + 1.0) + kDecayMargin;
    for (const auto& a : d.atoms) {
      if (a.null()) continue;
      const DecayFit fit = atom_image_decay(T, a, W, p);
      if (fit.empty) continue;
      ++total;
      const bool ok = fit.slope <= thr;
      good += ok;
      if (a.level > 0) {
        ++deep;
        deep_good += ok;
      }
    }
  };
  for (std::size_t k = 0; k < C.pairs.size(); ++k) {
    PairState& S = C.at(k, kJ);
    S.decompose();
    for (const auto& d : S.decomps) fit_all(d, S.W, S.p);
  }
  for (const auto& s : C.spiky()) fit_all(s.d, s.W, s.p);
  const double frac = total ? double(good) / double(total) : 0.0;
  r.require(total > 0 && frac >= kDecayFraction, "decay criterion holds for " + fmt(frac) + " of " + std::to_string(total));
  r.require(deep > 0, "no atoms below level 0");

  // Closed form: (1/pi) log |(x+1)/(x-1)| for the indicator of [-1, 1].
  double err[3] = {0, 0, 0};
  for (int j = 0; j < 3; ++j) {
    const Grid g(1, kJ + j, 4.0);
    VectorField f(g, 1);
    for (std::size_t i = 0; i < g.size(); ++i) f.at(i)[0] = std::abs(g.midpoint(i)[0]) < 1 ? 1.0 : 0.0;
    for (double x : {2.0, -2.5, 3.25, 1.5}) {
      double out = 0.0;
      apply_at(T, f, {x, 0.0}, &out);
      err[j] = std::max(err[j], std::abs(out - std::log(std::abs((x + 1) / (x - 1))) / M_PI));
    }
  }
  const double order = std::min(std::log2(err[0] / err[1]), std::log2(err[1] / err[2]));
  r.require(err[0] <= kHilbertTol, "closed-form error " + fmt(err[0]));
  r.require(order >= kHilbertOrder, "observed order " + fmt(order));
  if (r.pass)
    r.detail = "pass fraction " + fmt(frac) + " over " + std::to_string(total) + " atoms (" + std::to_string(deep_good) + "/" +
               std::to_string(deep) + " below level 0), closed-form err " + fmt(err[0]) + ", order " + fmt(order);
  return r;
}

Result cz_boundedness(Context& C) {
  Result r;
  const CZOperator T{make_kernel("hilbert")};
  double worst_growth = -INFINITY, hl_max = 0.0, hh_max = 0.0;
  std::size_t hh_rows = 0;
  for (std::size_t k = 0; k < C.pairs.size(); ++k) {
    CzBench B[2];
    for (int j = 0; j < 2; ++j) {
      PairState& S = C.at(k, kJ + j);
      B[j] = cz_bench(T, S.W, S.p, S.suite, S.cat, 0);
    }
    for (const auto& row : B[0].rows) hh_rows += row.moments_ok;
    const double g_hl = B[1].max_hl / B[0].max_hl - 1.0;
    const double g_hh = B[0].max_hh > 0 ? B[1].max_hh / B[0].max_hh - 1.0 : 0.0;
    worst_growth = std::max({worst_growth, g_hl, g_hh});
    hl_max = std::max(hl_max, B[0].max_hl);
    hh_max = std::max(hh_max, B[0].max_hh);
    r.require(std::isfinite(B[0].max_hl) && std::isfinite(B[0].max_hh), C.pairs[k].name + ": unbounded ratio");
    r.require(g_hl < kCzGrowth && g_hh < kCzGrowth,
              C.pairs[k].name + ": growth H->L " + fmt(g_hl) + ", H->H " + fmt(g_hh));
  }
  r.require(hh_rows > 0, "no input passed the moment check");
  C.drop(kJ + 1);
  if (r.pass)
    r.detail = "max H->L " + fmt(hl_max) + ", max H->H " + fmt(hh_max) + " (" + std::to_string(hh_rows) +
               " moment-checked rows), worst growth " + fmt(worst_growth);
  return r;
}

Result duality() {
  Result r;
  double worst = 0.0, worst_ch = 0.0, poly_max = 0.0;
  std::size_t cancels = 0;
  for (const WeightSpec& ws : {WeightSpec::identity(2), WeightSpec::scalar_power(2, 0.5), WeightSpec::diag_power({0.5, 0.25}),
                               WeightSpec::rotated_diag(M_PI / 6, 0.5, 0.25)}) {
    double mr[2] = {0, 0};
    for (int j = 0; j < 2; ++j) {
      const Grid g(1, kJ + j, 4.0);
      const MatrixWeight W(ws, g);
      const ExponentProfile p = ExponentProfile::constant(g, 1.0);
      CertifyOptions co;
      co.seed = kSeed;
      const WeightCertificate cert = certify_weight(ws, ExponentSpec::constant(1), g, co);
      const TestFunctionCatalog cat(1, std::max(2, int(std::ceil(1.0 / cert.alpha - 1e-12)) + 1));
      SuiteOptions fo;
      fo.count = kDualPairs;
      fo.seed = kSeed;
      SuiteOptions go = fo;
      go.seed = kSeed ^ 0x9E3779B97F4A7C15ULL;
      const auto fs = moment_free_suite(g, 2, fo);
      const auto gs = smooth_suite(g, 2, go);
      std::vector<Cube> cubes;
      for (const Cube& q : maximal_catalog(g))
        if (cells_in(g, q).size() >= 2 && cell_range(g, q, false).inside(g)) cubes.push_back(q);
      const DualityReport rep = duality_pairing_check(fs, gs, W, p, 2.0, 0, cat, cubes);
      mr[j] = rep.max_ratio;
      cancels += rep.cancellations;
      VectorField poly(g, 2, 1.0);
      poly_max = std::max(poly_max, campanato_norm(poly, W, p, 2.0, 0, cubes));
      std::vector<Cube> wide;
      for (const Cube& q : cubes)
        if (cells_in(g, q).size() >= 4) wide.push_back(q);
      for (std::size_t i = 0; i < g.size(); ++i) {
        poly.at(i)[0] = 1.0 - 0.5 * g.midpoint(i)[0];
        poly.at(i)[1] = 2.0 * g.midpoint(i)[0];
      }
      poly_max = std::max(poly_max, campanato_norm(poly, W, p, 2.0, 1, wide));
    }
    const double ch = rel_change(mr[0], mr[1]);
    worst = std::max(worst, mr[0]);
    worst_ch = std::max(worst_ch, ch);
    r.require(mr[0] <= kCDual && std::isfinite(mr[0]), ws.label() + ": max ratio " + fmt(mr[0]));
    r.require(ch < kDualStability, ws.label() + ": max ratio " + fmt(mr[0]) + " -> " + fmt(mr[1]));
  }
  r.require(poly_max <= kPolyCampanato, "polynomial Campanato norm " + fmt(poly_max));
  if (r.pass)
    r.detail = "max ratio " + fmt(worst) + " (C_dual " + fmt(kCDual) + "), refinement change " + fmt(worst_ch) +
               ", polynomial Campanato " + fmt(poly_max) + ", cancellations " + std::to_string(cancels);
  return r;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

Result determinism(const std::string& cli) {
  Result r;
  if (cli.empty()) {
    r.require(false, "no CLI path given (--cli)");
    return r;
  }
  const auto base = std::filesystem::temp_directory_path() / "hardylab_acceptance_determinism";
  std::filesystem::remove_all(base);
  const std::vector<std::string> runs = {
      "certify-weight --seed 3",
      "decompose --seed 3 --index 1",
      "maximal --kind christ_goldberg --count 3 --seed 3",
      "maximal --kind grand_radial --count 3 --seed 3",
      "cz-bench --count 3 --seed 3",
  };
  std::size_t files = 0;
  for (std::size_t k = 0; k < runs.size(); ++k) {
    std::filesystem::path dirs[2];
    for (int t = 0; t < 2; ++t) {
      dirs[t] = base / (std::to_string(k) + "_" + std::to_string(t));
      const std::string cmd = cli + " " + runs[k] + " --out " + dirs[t].string() + " >/dev/null 2>&1";
      const int st = std::system(cmd.c_str());
      r.require(WIFEXITED(st) && WEXITSTATUS(st) == 0, "'" + runs[k] + "' exited with " + std::to_string(st));
    }
    for (const auto& e : std::filesystem::directory_iterator(dirs[0])) {
      const std::string name = e.path().filename().string();
      if (name.rfind("run_", 0) == 0) continue;  // timing and host details live here
      ++files;
      r.require(slurp(e.path()) == slurp(dirs[1] / name), "'" + runs[k] + "': " + name + " differs");
    }
  }
  std::filesystem::remove_all(base);
  r.require(files > 0, "no outputs compared");
  if (r.pass) r.detail = std::to_string(files) + " files byte-identical across " + std::to_string(runs.size()) + " command pairs";
  return r;
}

}  // namespace

int main(int argc, char** argv) {
  std::string cli;
  std::vector<int> only;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--cli" && i + 1 < argc) cli = argv[++i];
    else if (a == "--only" && i + 1 < argc) {
      std::stringstream ss(argv[++i]);
      for (std::string t; std::getline(ss, t, ',');) only.push_back(std::stoi(t));
    } else {
      std::fprintf(stderr, "usage: %s [--cli PATH] [--only 1,2,...]\n", argv[0]);
      return 1;
    }
  }
  Context C;
  const std::vector<std::pair<int, std::function<Result()>>> criteria = {
      {1, [] { return variable_norm_oracle(); }},
      {2, [] { return est_q_bracket(); }},
      {3, [&] { return reducing_certificate(C); }},
      {4, [] { return characteristics(); }},
      {5, [] { return whitney_stopping_check(); }},
      {6, [&] { return projection_and_basis(C); }},
      {7, [&] { return atomic_round_trip(C); }},
      {8, [&] { return coefficient_bounds(C); }},
      {9, [&] { return maximal_equivalences(C); }},
      {10, [&] { return maximal_boundedness(C); }},
      {11, [] { return hardy_equals_lebesgue(); }},
      {12, [&] { return cz_decay(C); }},
      {13, [&] { return cz_boundedness(C); }},
      {14, [] { return duality(); }},
      {15, [&] { return determinism(cli); }},
  };
  int failed = 0, ran = 0;
  for (const auto& [id, fn] : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    const auto t0 = Clock::now();
    Result res;
    try {
      res = fn();
    } catch (const std::exception& e) {
      res.pass = false;
      res.detail = std::string("exception: ") + e.what();
    }
    ++ran;
    failed += !res.pass;
    std::printf("criterion %2d: %s  %s  [%.1f s]\n", id, res.pass ? "PASS" : "FAIL", res.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
  }
  std::printf("%d/%d criteria passed\n", ran - failed, ran);
  return failed == 0 ? 0 : 1;
}
