#include "hardylab/maximal.hpp"

#include <algorithm>
#include <cmath>

#include "hardylab/rng.hpp"

namespace hardylab {

MaximalCatalog::MaximalCatalog(const Grid& g) : MaximalCatalog(g, maximal_catalog(g)) {}

MaximalCatalog::MaximalCatalog(const Grid& g, std::vector<Cube> c) : grid(g), cubes(std::move(c)) {
  ranges.reserve(cubes.size());
  for (const auto& q : cubes) ranges.push_back(cell_range(g, q));
}

std::vector<std::size_t> MaximalCatalog::cells(std::size_t k) const {
  std::vector<std::size_t> out;
  out.reserve(std::size_t(ranges[k].count()));
  for_each_cell(grid, ranges[k], [&](std::size_t i) { out.push_back(i); });
  return out;
}

ScalarField abs_field(const VectorField& f) {
  ScalarField out(f.grid);
  for (std::size_t i = 0; i < f.size(); ++i) out[i] = f.norm_at(i);
  return out;
}

ScalarField body_norms(const BodyField& F) {
  ScalarField out(F.grid);
  for (std::size_t i = 0; i < F.size(); ++i) out[i] = F.bodies[i].norm();
  return out;
}

namespace {

// Prefix sums over the grid for O(1) cube sums.
struct Prefix {
  const Grid& g;
  long N;
  std::vector<double> S;
  Prefix(const Grid& grid, const std::vector<double>& v) : g(grid), N(grid.per_axis()) {
    if (g.n() == 1) {
      S.assign(std::size_t(N + 1), 0.0);
      for (long i = 0; i < N; ++i) S[std::size_t(i + 1)] = S[std::size_t(i)] + v[std::size_t(i)];
    } else {
      S.assign(std::size_t((N + 1) * (N + 1)), 0.0);
      for (long i = 0; i < N; ++i)
        for (long j = 0; j < N; ++j)
          S[std::size_t((i + 1) * (N + 1) + j + 1)] = v[g.flat(i, j)] + S[std::size_t(i * (N + 1) + j + 1)] +
                                                      S[std::size_t((i + 1) * (N + 1) + j)] -
                                                      S[std::size_t(i * (N + 1) + j)];
    }
  }
  double sum(const CellRange& r) const {
    if (g.n() == 1) return S[std::size_t(r.hi[0])] - S[std::size_t(r.lo[0])];
    auto at = [&](long i, long j) { return S[std::size_t(i * (N + 1) + j)]; };
    return at(r.hi[0], r.hi[1]) - at(r.lo[0], r.hi[1]) - at(r.hi[0], r.lo[1]) + at(r.lo[0], r.lo[1]);
  }
};

// Generators of W^{-1}(y) F(y), flattened per sample.
std::vector<ConvexBody> premultiplied(const MatrixWeight& W, const BodyField& F) {
  std::vector<ConvexBody> out;
  out.reserve(F.size());
  for (std::size_t i = 0; i < F.size(); ++i) out.push_back(transform(W.Winv(i), F.bodies[i]));
  return out;
}

}  // namespace

ScalarField hl_maximal(const ScalarField& f, double alpha, const MaximalCatalog& cat) {
  require_same_grid(f.grid, cat.grid, "hl_maximal");
  std::vector<double> g(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) g[i] = alpha == 1.0 ? std::abs(f[i]) : std::pow(std::abs(f[i]), alpha);
  Prefix P(f.grid, g);
  ScalarField out(f.grid, 0.0);
  for (std::size_t k = 0; k < cat.size(); ++k) {
    const CellRange& r = cat.ranges[k];
    const long c = r.count();
    if (c <= 0) continue;
    const double avg = std::max(0.0, P.sum(r) / double(c));
    for_each_cell(f.grid, r, [&](std::size_t i) { out[i] = std::max(out[i], avg); });
  }
  if (alpha != 1.0)
    for (auto& v : out.values) v = std::pow(v, 1.0 / alpha);
  return out;
}

ScalarField hl_maximal(const ScalarField& f, double alpha) { return hl_maximal(f, alpha, MaximalCatalog(f.grid)); }

ScalarField variable_maximal(const ScalarField& f, const ExponentProfile& q, const MaximalCatalog& cat) {
  require_same_grid(f.grid, q.grid(), "variable_maximal");
  ScalarField out(f.grid, 0.0);
  std::vector<double> vals;
  for (std::size_t k = 0; k < cat.size(); ++k) {
    auto cells = cat.cells(k);
    if (cells.empty()) continue;
    LocalExponent ex = restrict_exponent(q, cells);
    vals.resize(cells.size());
    bool any = false;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      vals[i] = f[cells[i]];
      any = any || vals[i] != 0.0;
    }
    if (!any) continue;
    const double num = luxemburg(vals.data(), ex);
    std::fill(vals.begin(), vals.end(), 1.0);
    const double v = num / luxemburg(vals.data(), ex);
    for (auto i : cells) out[i] = std::max(out[i], v);
  }
  return out;
}

ScalarField christ_goldberg(const MatrixWeight& W, const BodyField& F, double alpha, const MaximalCatalog& cat) {
  require_same_grid(W.grid(), F.grid, "christ_goldberg");
  const auto G = premultiplied(W, F);
  ScalarField out(F.grid, 0.0);
  for (std::size_t k = 0; k < cat.size(); ++k) {
    auto cells = cat.cells(k);
    if (cells.empty()) continue;
    for (auto x : cells) {
      double s = 0.0;
      for (auto y : cells) {
        const double v = G[y].norm_after(W.W(x));
        if (v > 0.0) s += alpha == 1.0 ? v : std::pow(v, alpha);
      }
      s /= double(cells.size());
      const double val = alpha == 1.0 ? s : std::pow(s, 1.0 / alpha);
      out[x] = std::max(out[x], val);
    }
  }
  return out;
}

std::vector<ReducingOperator> catalog_reducing_operators(const MatrixWeight& W, const ExponentProfile& p,
                                                         const MaximalCatalog& cat) {
  std::vector<ReducingOperator> ops;
  ops.reserve(cat.size());
  for (std::size_t k = 0; k < cat.size(); ++k) ops.push_back(reducing_operator(W, p, cat.cells(k)));
  return ops;
}

ScalarField reducing_cg(const MatrixWeight& W, const BodyField& F, double u, const MaximalCatalog& cat,
                        const std::vector<ReducingOperator>& ops) {
  require_same_grid(W.grid(), F.grid, "reducing_cg");
  if (ops.size() != cat.size()) throw Error(ErrorCode::GridMismatch, "reducing operators do not match the catalog");
  const auto G = premultiplied(W, F);
  ScalarField out(F.grid, 0.0);
  for (std::size_t k = 0; k < cat.size(); ++k) {
    auto cells = cat.cells(k);
    if (cells.empty()) continue;
    double s = 0.0;
    for (auto y : cells) {
      const double v = G[y].norm_after(ops[k].A.data());
      if (v > 0.0) s += std::pow(v, u);
    }
    const double val = std::pow(s / double(cells.size()), 1.0 / u);
    for (auto x : cells) out[x] = std::max(out[x], val);
  }
  return out;
}

MaximalKind parse_maximal_kind(const std::string& s) {
  if (s == "radial") return MaximalKind::radial;
  if (s == "grand_radial") return MaximalKind::grand_radial;
  if (s == "nontangential") return MaximalKind::nontangential;
  if (s == "peetre") return MaximalKind::peetre;
  if (s == "grand_peetre") return MaximalKind::grand_peetre;
  throw Error(ErrorCode::ConfigInvalid, "maximal.kind: unknown kind '" + s + "'");
}

const char* maximal_kind_name(MaximalKind k) {
  switch (k) {
    case MaximalKind::radial: return "radial";
    case MaximalKind::grand_radial: return "grand_radial";
    case MaximalKind::nontangential: return "nontangential";
    case MaximalKind::peetre: return "peetre";
    case MaximalKind::grand_peetre: return "grand_peetre";
  }
  return "unknown";
}

std::vector<double> maximal_scales(const Grid& g, double max_scale) {
  if (max_scale <= 0.0) max_scale = g.n() == 1 ? g.L_box() : 16.0 * g.h();
  std::vector<double> out;
  for (double t = g.h(); t <= max_scale * (1.0 + 1e-12); t *= 2.0) out.push_back(t);
  return out;
}

ConvolutionBank convolve_bank(const VectorField& f, const TestFunctionCatalog& cat, std::size_t members,
                              double max_scale) {
  const Grid& g = f.grid;
  const int n = g.n();
  const int m = f.m;
  const long N = g.per_axis();
  const double h = g.h();
  ConvolutionBank bank;
  bank.scales = maximal_scales(g, max_scale);
  bank.members = std::min(members, cat.size());
  for (std::size_t k = 0; k < bank.members; ++k) {
    for (double t : bank.scales) {
      const long R = long(std::ceil(t / h));
      const double pre = std::pow(t, -double(n)) * g.cell_volume();
      struct Tap {
        long o0, o1;
        double w;
      };
      std::vector<Tap> taps;
      for (long a = -R; a <= R; ++a)
        for (long b = (n == 2 ? -R : 0); b <= (n == 2 ? R : 0); ++b) {
          const double w = pre * cat.value(k, {a * h / t, b * h / t});
          if (w != 0.0) taps.push_back({a, b, w});
        }
      VectorField out(g, m, 0.0);
      for (std::size_t i = 0; i < g.size(); ++i) {
        const auto mi = g.multi_index(i);
        double* o = out.at(i);
        for (const Tap& tp : taps) {
          const long y0 = mi[0] - tp.o0;
          if (y0 < 0 || y0 >= N) continue;
          std::size_t y;
          if (n == 1) {
            y = std::size_t(y0);
          } else {
            const long y1 = mi[1] - tp.o1;
            if (y1 < 0 || y1 >= N) continue;
            y = g.flat(y0, y1);
          }
          const double* v = f.at(y);
          for (int c = 0; c < m; ++c) o[c] += tp.w * v[c];
        }
      }
      bank.conv.push_back(std::move(out));
    }
  }
  return bank;
}

namespace {

bool is_grand(MaximalKind k) { return k == MaximalKind::grand_radial || k == MaximalKind::grand_peetre; }

double dist(const Grid& g, std::size_t a, std::size_t b) {
  const Point x = g.midpoint(a), y = g.midpoint(b);
  return g.n() == 1 ? std::abs(x[0] - y[0]) : std::hypot(x[0] - y[0], x[1] - y[1]);
}

// Visits every candidate generator of the body at x: fn(weight, vector).
template <class Fn>
void visit_candidates(const ConvolutionBank& bank, const MaximalParams& P, std::size_t x, Fn&& fn) {
  const Grid& g = bank.conv.front().grid;
  for (std::size_t k = 0; k < bank.members; ++k) {
    for (std::size_t j = 0; j < bank.scales.size(); ++j) {
      const VectorField& c = bank.at(k, j);
      const double t = bank.scales[j];
      switch (P.kind) {
        case MaximalKind::radial:
        case MaximalKind::grand_radial: fn(1.0, c.at(x)); break;
        case MaximalKind::nontangential:
          for (std::size_t y = 0; y < g.size(); ++y)
            if (dist(g, x, y) < P.a * t) fn(1.0, c.at(y));
          break;
        case MaximalKind::peetre:
        case MaximalKind::grand_peetre:
          for (std::size_t y = 0; y < g.size(); ++y) fn(std::pow(1.0 + dist(g, x, y) / t, -P.l), c.at(y));
          break;
      }
    }
  }
}

}  // namespace

BodyField cb_maximal(const VectorField& f, const MaximalParams& params, const TestFunctionCatalog& cat) {
  const std::size_t members = is_grand(params.kind) ? cat.size() : 1;
  ConvolutionBank bank = convolve_bank(f, cat, members, params.max_scale);
  BodyField out(f.grid, f.m);
  std::vector<double> buf(std::size_t(f.m));
  for (std::size_t x = 0; x < f.size(); ++x) {
    ConvexBody K(f.m);
    visit_candidates(bank, params, x, [&](double w, const double* v) {
      bool nz = false;
      for (int c = 0; c < f.m; ++c) {
        buf[std::size_t(c)] = w * v[c];
        nz = nz || buf[std::size_t(c)] != 0.0;
      }
      if (nz) K.add(buf.data());
    });
    out.bodies[x] = prune(K, params.cap);
  }
  return out;
}

ScalarField cb_maximal_weighted(const VectorField& f, const MaximalParams& params, const TestFunctionCatalog& cat,
                                const MatrixWeight& W) {
  require_same_grid(f.grid, W.grid(), "cb_maximal_weighted");
  const std::size_t members = is_grand(params.kind) ? cat.size() : 1;
  ConvolutionBank bank = convolve_bank(f, cat, members, params.max_scale);
  const int m = f.m;
  ScalarField out(f.grid, 0.0);
  double y[3];
  for (std::size_t x = 0; x < f.size(); ++x) {
    const double* Wx = W.W(x);
    double best = 0.0;
    visit_candidates(bank, params, x, [&](double w, const double* v) {
      mat_vec(Wx, v, y, m);
      best = std::max(best, w * euclid(y, m));
    });
    out[x] = best;
  }
  return out;
}

double hardy_norm(const VectorField& f, const MatrixWeight& W, const ExponentProfile& p,
                  const TestFunctionCatalog& cat, double max_scale) {
  MaximalParams P;
  P.kind = MaximalKind::grand_radial;
  P.max_scale = max_scale;
  return vnorm(cb_maximal_weighted(f, P, cat, W), p);
}

EquivalenceRow equivalence_row(const VectorField& f, const MatrixWeight& W, const ExponentProfile& p,
                               const TestFunctionCatalog& cat, const MaximalParams& params) {
  MaximalParams P = params;
  P.kind = MaximalKind::radial;
  ScalarField rad = cb_maximal_weighted(f, P, cat, W);
  P.kind = MaximalKind::nontangential;
  ScalarField nt = cb_maximal_weighted(f, P, cat, W);
  P.kind = MaximalKind::peetre;
  ScalarField pe = cb_maximal_weighted(f, P, cat, W);
  P.kind = MaximalKind::grand_radial;
  ScalarField gr = cb_maximal_weighted(f, P, cat, W);
  EquivalenceRow row;
  const double c = std::pow(1.0 + params.a, params.l);
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double s1 = nt[i] > 0.0 ? (rad[i] - nt[i]) / nt[i] : (rad[i] > 0.0 ? 1.0 : 0.0);
    const double b = c * pe[i];
    const double s2 = b > 0.0 ? (nt[i] - b) / b : (nt[i] > 0.0 ? 1.0 : 0.0);
    row.ordering_violation = std::max({row.ordering_violation, s1, s2});
  }
  row.radial = vnorm(rad, p);
  row.nontangential = vnorm(nt, p);
  row.peetre = vnorm(pe, p);
  row.grand = vnorm(gr, p);
  auto ratio = [&](double a) { return row.radial > 0.0 ? a / row.radial : 1.0; };
  row.ratio_nt = ratio(row.nontangential);
  row.ratio_peetre = ratio(row.peetre);
  row.ratio_grand = ratio(row.grand);
  return row;
}

std::vector<EquivalenceRow> equivalence_report(const std::vector<VectorField>& suite, const MatrixWeight& W,
                                               const ExponentProfile& p, const TestFunctionCatalog& cat,
                                               const MaximalParams& params) {
  std::vector<EquivalenceRow> out;
  for (const auto& f : suite) out.push_back(equivalence_row(f, W, p, cat, params));
  return out;
}

double embedding_pairing_check(const VectorField& f, const TestFunctionCatalog& cat, std::size_t k,
                               const MatrixWeight& W, const ExponentProfile& p) {
  const ScalarField phi = sample_member(cat, k, f.grid, {0.0, 0.0}, 1.0);
  std::vector<double> v(std::size_t(f.m), 0.0);
  for (std::size_t i = 0; i < f.size(); ++i)
    for (int c = 0; c < f.m; ++c) v[std::size_t(c)] += f.at(i)[c] * phi[i];
  double num = 0.0;
  for (double x : v) num += x * x;
  num = std::sqrt(num) * f.grid.cell_volume();
  if (num == 0.0) return 0.0;
  return num / (cat.seminorm(k) * hardy_norm(f, W, p, cat));
}

BodyField random_body_field(const Grid& g, int m, std::uint64_t seed, int index) {
  CounterRng rng(seed, 0x4246ULL * 1000003ULL + std::uint64_t(index));
  const double L = g.L_box();
  // Amplitudes are constant on blocks of edge L/32, so the field is the same function at every J >= 6.
  const double block = L / 32.0;
  BodyField F(g, m);
  for (int part = 0; part < 2; ++part) {
    const double e = rng.uniform(L / 8.0, 0.75 * L);
    Point c{0.0, 0.0};
    for (int ax = 0; ax < g.n(); ++ax) c[std::size_t(ax)] = rng.uniform(-0.75 * L + 0.5 * e, 0.75 * L - 0.5 * e);
    const Cube q(g.n(), c, e);
    std::vector<double> base(static_cast<std::size_t>(m));
    for (auto& b : base) b = rng.normal();
    const std::uint64_t stream = rng.next();
    std::vector<double> v(static_cast<std::size_t>(m));
    for (auto i : cells_in(g, q)) {
      const Point x = g.midpoint(i);
      std::uint64_t id = 0;
      for (int ax = 0; ax < g.n(); ++ax) id = id * 4096 + std::uint64_t(std::floor((x[std::size_t(ax)] + L) / block));
      CounterRng cell(stream, id);
      const double amp = cell.uniform(0.2, 2.0);
      for (int k = 0; k < m; ++k) v[std::size_t(k)] = amp * base[std::size_t(k)] + 0.3 * cell.normal();
      F.bodies[i].add(v.data());
    }
  }
  for (auto& K : F.bodies) K = prune(K);
  return F;
}

}  // namespace hardylab
