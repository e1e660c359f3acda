#include "hardylab/decomp.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "hardylab/linalg.hpp"
#include "hardylab/parallel.hpp"
#include "hardylab/rng.hpp"

namespace hardylab {

namespace {

std::string describe_cube(const Cube& q) {
  std::ostringstream os;
  os << "cube(center=" << q.center()[0];
  if (q.n() == 2) os << "," << q.center()[1];
  os << " edge=" << q.edge() << ")";
  return os.str();
}

// Inclusive-exclusive prefix counts of a mask.
class MaskPrefix {
 public:
  explicit MaskPrefix(const Mask& E) : g_(E.grid), N_(E.grid.per_axis()) {
    if (g_.n() == 1) {
      s_.assign(std::size_t(N_ + 1), 0);
      for (long i = 0; i < N_; ++i) s_[std::size_t(i + 1)] = s_[std::size_t(i)] + (E[std::size_t(i)] ? 1 : 0);
    } else {
      const std::size_t W = std::size_t(N_ + 1);
      s_.assign(W * W, 0);
      for (long i = 0; i < N_; ++i)
        for (long j = 0; j < N_; ++j)
          s_[std::size_t(i + 1) * W + std::size_t(j + 1)] = s_[std::size_t(i) * W + std::size_t(j + 1)] +
                                                            s_[std::size_t(i + 1) * W + std::size_t(j)] -
                                                            s_[std::size_t(i) * W + std::size_t(j)] +
                                                            (E[g_.flat(i, j)] ? 1 : 0);
    }
  }
  // Count over a range clipped to the grid.
  long count(const CellRange& r) const {
    auto cl = [&](long v) { return std::clamp(v, 0L, N_); };
    if (g_.n() == 1) return s_[std::size_t(cl(r.hi[0]))] - s_[std::size_t(cl(r.lo[0]))];
    const std::size_t W = std::size_t(N_ + 1);
    const std::size_t a0 = std::size_t(cl(r.lo[0])), a1 = std::size_t(cl(r.hi[0]));
    const std::size_t b0 = std::size_t(cl(r.lo[1])), b1 = std::size_t(cl(r.hi[1]));
    if (a1 <= a0 || b1 <= b0) return 0;
    return s_[a1 * W + b1] - s_[a0 * W + b1] - s_[a1 * W + b0] + s_[a0 * W + b0];
  }

 private:
  Grid g_;
  long N_;
  std::vector<long> s_;
};

// 9L in E: the unclipped range stays in the grid and every cell is in E.
bool dilate_inside(const Grid& g, const MaskPrefix& P, const Cube& L, int factor) {
  const CellRange r = cell_range(g, L.dilate(factor, 1), false);
  if (!r.inside(g)) return false;
  return P.count(r) == r.count();
}

// Dilation meets the complement of E or leaves the box.
bool dilate_escapes(const Grid& g, const MaskPrefix& P, const Cube& L, int factor) {
  const CellRange r = cell_range(g, L.dilate(factor, 1), false);
  if (!r.inside(g)) return true;
  return P.count(r) < r.count();
}

int floor_log2(double x) { return int(std::floor(std::log2(x) + 1e-12)); }
int ceil_log2(double x) { return int(std::ceil(std::log2(x) - 1e-12)); }

template <class F>
void for_cells(const Grid& g, const CellRange& r, F&& fn) {
  for_each_cell(g, r, fn);
}

double cube_measure(const Cube& q) { return q.volume(); }

std::size_t count_in(const Mask& E, const std::vector<std::size_t>& cells) {
  std::size_t c = 0;
  for (auto i : cells) c += E[i] ? 1 : 0;
  return c;
}

}  // namespace

// ---------------------------------------------------------------------------------------------
// Stopping collections

StoppingCollection whitney_stopping(const Mask& E, unsigned shift, double l_min, bool require_open) {
  const Grid& g = E.grid;
  StoppingCollection S(g);
  S.shift = shift;
  S.E = E;
  S.l_min = l_min > 0.0 ? l_min : g.h();
  const int n = g.n();
  const MaskPrefix P(E);
  std::vector<std::uint8_t> covered(g.size(), 0);
  const int kmax = floor_log2(2.0 * g.L_box());
  const int kmin = ceil_log2(S.l_min);
  for (int k = kmax; k >= kmin; --k) {
    std::set<std::array<long long, 2>> seen;
    std::vector<Cube> candidates;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (!E[i] || covered[i]) continue;
      Cube L = dyadic_containing(n, k, shift, g.midpoint(i));
      if (seen.insert(L.dyadic_index()->m).second) candidates.push_back(L);
    }
    std::sort(candidates.begin(), candidates.end(), [](const Cube& a, const Cube& b) {
      return a.dyadic_index()->m < b.dyadic_index()->m;
    });
    for (const Cube& L : candidates) {
      if (!dilate_inside(g, P, L, 9)) continue;
      for_cells(g, cell_range(g, L), [&](std::size_t c) { covered[c] = 1; });
      S.cubes.push_back(L);
    }
  }
  for (std::size_t i = 0; i < g.size(); ++i)
    if (E[i] && !covered[i]) ++S.uncovered;
  if (require_open && S.uncovered > 0)
    throw Error(ErrorCode::NotOpen, std::to_string(S.uncovered) + " cells of the set are not covered by stopping cubes");
  return S;
}

Mask dilate_mask(const Mask& E, long radius) {
  const Grid& g = E.grid;
  const long N = g.per_axis();
  Mask out(g);
  // Separable: dilate along each axis in turn with a running count.
  std::vector<std::uint8_t> cur(E.values), next(g.size(), 0);
  for (int ax = 0; ax < g.n(); ++ax) {
    std::fill(next.begin(), next.end(), 0);
    const long lines = g.n() == 1 ? 1 : N;
    for (long line = 0; line < lines; ++line) {
      auto idx = [&](long t) { return g.n() == 1 ? std::size_t(t) : (ax == 0 ? g.flat(t, line) : g.flat(line, t)); };
      long last = -(radius + 1) - 1;
      for (long t = 0; t < N; ++t)
        if (cur[idx(t)]) last = t;
        else if (t - last <= radius) next[idx(t)] = 1;
      last = N + radius + 1;
      for (long t = N - 1; t >= 0; --t) {
        if (cur[idx(t)]) {
          last = t;
          next[idx(t)] = 1;
        } else if (last - t <= radius) {
          next[idx(t)] = 1;
        }
      }
    }
    cur.swap(next);
  }
  out.values = cur;
  return out;
}

Mask covered_mask(const StoppingCollection& S) {
  Mask out(S.grid);
  for (const Cube& L : S.cubes) for_cells(S.grid, cell_range(S.grid, L), [&](std::size_t c) { out.set(c); });
  return out;
}

bool measure_premise(const Mask& E, const std::vector<Cube>& parents) {
  const double bound = std::pow(2.0, -4.0 * E.grid.n());
  for (const Cube& Q : parents) {
    const double m = double(count_in(E, cells_in(E.grid, Q.dilate(3, 1)))) * E.grid.cell_volume();
    if (!(m < bound * cube_measure(Q))) return false;
  }
  return true;
}

StoppingReport check_stopping(const StoppingCollection& S, const std::vector<Cube>& parents) {
  const Grid& g = S.grid;
  StoppingReport rep;
  rep.uncovered = S.uncovered;
  const MaskPrefix P(S.E);
  std::vector<int> cover(g.size(), 0);
  for (const Cube& L : S.cubes) {
    for_cells(g, cell_range(g, L), [&](std::size_t c) { ++cover[c]; });
    if (!dilate_inside(g, P, L, 9)) rep.nine_inside = false;
    if (!dilate_escapes(g, P, L, 32)) rep.escapes = false;
  }
  const int kmax = floor_log2(2.0 * g.L_box());
  const int kmin = ceil_log2(S.l_min);
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (cover[i] > 1) rep.disjoint = false;
    if (cover[i] > 0 && !S.E[i]) rep.covers = false;
    if (cover[i] == 0 && S.E[i]) {
      for (int k = kmin; k <= kmax && rep.covers; ++k)
        if (dilate_inside(g, P, dyadic_containing(g.n(), k, S.shift, g.midpoint(i)), 9)) rep.covers = false;
    }
  }
  std::vector<ExactBox> seven;
  seven.reserve(S.cubes.size());
  for (const Cube& L : S.cubes) seven.push_back(*exact_box(L.dilate(7, 1)));
  for (std::size_t a = 0; a < S.cubes.size() && rep.scale_gap; ++a) {
    const int ka = S.cubes[a].dyadic_index()->k;
    for (std::size_t b = a + 1; b < S.cubes.size(); ++b) {
      const int kb = S.cubes[b].dyadic_index()->k;
      if (std::abs(ka - kb) < 8) continue;
      if (exact_intersects(seven[a], seven[b])) {
        rep.scale_gap = false;
        break;
      }
    }
  }
  if (!parents.empty()) {
    rep.premise = measure_premise(S.E, parents);
    if (rep.premise) {
      for (const Cube& Q : parents) {
        const Cube Qs = Q.star();
        const Cube Q3 = Q.dilate(3, 1);
        for (const Cube& L : S.cubes) {
          if (!cubes_intersect(L.star(), Qs)) continue;
          const Cube L32 = L.dilate(32, 1);
          if (!cube_contains(Q3, L32)) {
            rep.parents_ok = false;
            continue;
          }
          if (!dilate_escapes(g, P, L, 32)) rep.parents_ok = false;
        }
      }
    }
  }
  return rep;
}

namespace {

// Interval [lo, hi) of the 1D lattice cube with index m at scale k, dilated by 7, as exact integers.
ExactBox seven_box_1d(int k, long long m, unsigned shift_bit) {
  DyadicIndex d;
  d.k = k;
  d.m = {m, 0};
  d.shift = shift_bit;
  return *exact_box(Cube::dyadic(1, d).dilate(7, 1));
}

// counts[d + 7] for Q = index m0 at scale k0 against every scale k0 + d.
std::array<long, 15> axis_counts(int k0, long long m0, unsigned bit) {
  std::array<long, 15> out{};
  const ExactBox q = seven_box_1d(k0, m0, bit);
  for (int d = -7; d <= 7; ++d) {
    const int k = k0 + d;
    // Candidate indices: centers within 3.5 (2^k0 + 2^k) of the center of Q, plus margin.
    const double ratio = std::ldexp(1.0, k0 - k);
    const long long mc = (long long)std::floor((double(m0) + 0.5) * ratio);
    const long long span = (long long)std::ceil(3.5 * (ratio + 1.0)) + 3;
    long c = 0;
    for (long long m = mc - span; m <= mc + span; ++m)
      if (exact_intersects(q, seven_box_1d(k, m, bit))) ++c;
    out[std::size_t(d + 7)] = c;
  }
  return out;
}

}  // namespace

long ccap_count(int n) {
  static long cache[3] = {0, 0, 0};
  if (n >= 1 && n <= 2 && cache[n] > 0) return cache[n];
  constexpr long long kPositions = 384;
  long best = 0;
  for (int k0 = 0; k0 <= 1; ++k0) {
    std::array<std::vector<std::array<long, 15>>, 2> per_bit;
    for (unsigned bit = 0; bit < 2; ++bit) {
      per_bit[bit].reserve(std::size_t(2 * kPositions));
      for (long long m0 = -kPositions; m0 < kPositions; ++m0) per_bit[bit].push_back(axis_counts(k0, m0, bit));
    }
    if (n == 1) {
      for (unsigned bit = 0; bit < 2; ++bit)
        for (const auto& c : per_bit[bit]) {
          long s = 0;
          for (long v : c) s += v;
          best = std::max(best, s);
        }
    } else {
      for (unsigned bx = 0; bx < 2; ++bx)
        for (unsigned by = 0; by < 2; ++by)
          for (const auto& cx : per_bit[bx])
            for (const auto& cy : per_bit[by]) {
              long s = 0;
              for (std::size_t d = 0; d < 15; ++d) s += cx[d] * cy[d];
              best = std::max(best, s);
            }
    }
  }
  if (n >= 1 && n <= 2) cache[n] = best;
  return best;
}

// ---------------------------------------------------------------------------------------------
// Partition of unity

namespace {

// CDF of the normalized 1D bump on [-1, 1], tabulated and evaluated by cubic Hermite with the
// exact density as the derivative.
class BumpCdf {
 public:
  BumpCdf() : x_(kNodes + 1), F_(kNodes + 1), f_(kNodes + 1) {
    const double c = bump_constant(1);
    auto density = [c](double x) { return std::abs(x) < 1.0 ? c * std::exp(-1.0 / (1.0 - x * x)) : 0.0; };
    const int sub = 16;
    double acc = 0.0;
    for (int i = 0; i <= kNodes; ++i) {
      x_[std::size_t(i)] = -1.0 + 2.0 * i / kNodes;
      f_[std::size_t(i)] = density(x_[std::size_t(i)]);
      if (i > 0) {
        // Simpson on sub-intervals of the cell.
        const double a = x_[std::size_t(i - 1)], h = (x_[std::size_t(i)] - a) / sub;
        double s = 0.0;
        for (int j = 0; j < sub; ++j) {
          const double l = a + j * h;
          s += h / 6.0 * (density(l) + 4.0 * density(l + 0.5 * h) + density(l + h));
        }
        acc += s;
      }
      F_[std::size_t(i)] = acc;
    }
    for (auto& v : F_) v /= acc;
    for (auto& v : f_) v /= acc;
  }
  double operator()(double s) const {
    if (s <= -1.0) return 0.0;
    if (s >= 1.0) return 1.0;
    const double pos = (s + 1.0) * 0.5 * kNodes;
    const int i = std::min(kNodes - 1, int(pos));
    const double h = 2.0 / kNodes;
    const double t = pos - i;
    const double h00 = (1 + 2 * t) * (1 - t) * (1 - t), h10 = t * (1 - t) * (1 - t);
    const double h01 = t * t * (3 - 2 * t), h11 = t * t * (t - 1);
    const std::size_t a = std::size_t(i), b = a + 1;
    return h00 * F_[a] + h10 * h * f_[a] + h01 * F_[b] + h11 * h * f_[b];
  }

 private:
  static constexpr int kNodes = 4096;
  std::vector<double> x_, F_, f_;
};

const BumpCdf& bump_cdf() {
  static const BumpCdf cdf;
  return cdf;
}

}  // namespace

double mollified_indicator(const Cube& L, double r, const Point& x) {
  const BumpCdf& F = bump_cdf();
  double v = 1.0;
  for (int i = 0; i < L.n(); ++i) v *= F((x[std::size_t(i)] - L.lower(i)) / r) - F((x[std::size_t(i)] - L.upper(i)) / r);
  return v;
}

PartitionOfUnity partition_of_unity(const StoppingCollection& S) {
  const Grid& g = S.grid;
  PartitionOfUnity pu;
  pu.bumps.resize(S.cubes.size());
  parallel_for(S.cubes.size(), [&](std::size_t k) {
    LocalBump& b = pu.bumps[k];
    b.L = S.cubes[k];
    b.cells = cells_in(g, b.L.star());
    b.eta.resize(b.cells.size());
    const double r = b.L.edge() / 16.0;
    for (std::size_t j = 0; j < b.cells.size(); ++j) b.eta[j] = mollified_indicator(b.L, r, g.midpoint(b.cells[j]));
  });
  std::vector<double> sum(g.size(), 0.0);
  for (const auto& b : pu.bumps)
    for (std::size_t j = 0; j < b.cells.size(); ++j) sum[b.cells[j]] += b.eta[j];
  pu.c_eta = pu.bumps.empty() ? 1.0 : std::numeric_limits<double>::infinity();
  pu.max_ratio = 0.0;
  std::vector<double> scratch(g.size(), 0.0);
  for (auto& b : pu.bumps) {
    b.integral = 0.0;
    for (std::size_t j = 0; j < b.cells.size(); ++j) {
      const std::size_t c = b.cells[j];
      b.eta[j] = (S.E[c] && sum[c] > 0.0) ? b.eta[j] / sum[c] : 0.0;
      b.integral += b.eta[j];
    }
    b.integral *= g.cell_volume();
    const double ratio = b.integral / b.L.volume();
    pu.c_eta = std::min(pu.c_eta, ratio);
    pu.max_ratio = std::max(pu.max_ratio, ratio);
    for (std::size_t j = 0; j < b.cells.size(); ++j) scratch[b.cells[j]] = b.eta[j];
    for (std::size_t j = 0; j < b.cells.size(); ++j) {
      const auto mi = g.multi_index(b.cells[j]);
      for (int ax = 0; ax < g.n(); ++ax) {
        auto nb = mi;
        nb[std::size_t(ax)] += 1;
        if (nb[std::size_t(ax)] >= g.per_axis()) continue;
        const std::size_t c2 = g.flat(nb[0], nb[1]);
        const double d = std::abs(scratch[c2] - b.eta[j]) / g.h() * b.L.edge();
        pu.grad_bound = std::max(pu.grad_bound, d);
      }
    }
    for (std::size_t j = 0; j < b.cells.size(); ++j) scratch[b.cells[j]] = 0.0;
  }
  return pu;
}

// ---------------------------------------------------------------------------------------------
// Polynomial bases and projections

namespace {

double monomial(const std::array<int, 2>& beta, const Point& y, int n) {
  double v = 1.0;
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < beta[std::size_t(i)]; ++k) v *= y[std::size_t(i)];
  return v;
}

Point scaled_coord(const Cube& L, const Point& x) {
  const double l = L.edge();
  return {(x[0] - L.center()[0]) / l, L.n() == 2 ? (x[1] - L.center()[1]) / l : 0.0};
}

double falling(int b, int a) {
  double v = 1.0;
  for (int k = 0; k < a; ++k) v *= double(b - k);
  return v;
}

}  // namespace

double PolyBasis::eval(std::size_t i, const Point& x) const {
  const Point y = scaled_coord(L, x);
  double v = 0.0;
  for (std::size_t j = 0; j < betas.size(); ++j) v += C(Eigen::Index(i), Eigen::Index(j)) * monomial(betas[j], y, n);
  return v;
}

PolyBasis poly_basis(const Grid& g, const Cube& L, const std::vector<std::size_t>& cells,
                     const std::vector<double>& eta, int s) {
  PolyBasis B;
  B.L = L;
  B.n = g.n();
  B.s = s;
  B.betas = multi_indices(g.n(), s);
  B.cells = cells;
  const Eigen::Index M = Eigen::Index(B.betas.size());
  const Eigen::Index K = Eigen::Index(cells.size());
  double total = 0.0;
  for (double e : eta) total += e;
  if (!(total > 0.0)) throw Error(ErrorCode::IllConditioned, "zero bump mass on " + describe_cube(L));
  B.weight.resize(cells.size());
  for (std::size_t j = 0; j < cells.size(); ++j) B.weight[j] = eta[j] / total;

  Mat V(K, M);
  for (Eigen::Index r = 0; r < K; ++r) {
    const Point y = scaled_coord(L, g.midpoint(cells[std::size_t(r)]));
    for (Eigen::Index c = 0; c < M; ++c) V(r, c) = monomial(B.betas[std::size_t(c)], y, B.n);
  }
  const Vec w = Eigen::Map<const Vec>(B.weight.data(), K);
  const Mat G = V.transpose() * w.asDiagonal() * V;
  Eigen::SelfAdjointEigenSolver<Mat> es(G);
  const double lo = es.eigenvalues().minCoeff(), hi = es.eigenvalues().maxCoeff();
  B.gram_condition = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
  if (!(B.gram_condition <= 1e10))
    throw Error(ErrorCode::IllConditioned, "Gram condition " + std::to_string(B.gram_condition) + " on " + describe_cube(L) +
                                               " for degree " + std::to_string(s));

  Mat Qm = V;
  Mat C = Mat::Identity(M, M);
  auto ip = [&](Eigen::Index a, Eigen::Index b) { return (Qm.col(a).array() * Qm.col(b).array() * w.array()).sum(); };
  for (int pass = 0; pass < 2; ++pass) {
    for (Eigen::Index i = 0; i < M; ++i) {
      for (Eigen::Index j = 0; j < i; ++j) {
        const double r = ip(i, j);
        Qm.col(i) -= r * Qm.col(j);
        C.row(i) -= r * C.row(j);
      }
      const double nrm = std::sqrt(ip(i, i));
      Qm.col(i) /= nrm;
      C.row(i) /= nrm;
    }
  }
  B.C = C;
  B.values = V * C.transpose();
  const Mat O = B.values.transpose() * w.asDiagonal() * B.values;
  B.orthonormality_error = (O - Mat::Identity(M, M)).cwiseAbs().maxCoeff();

  // sup |d^a e_i| in the scaled variable equals l^{|a|} sup |d^a_x e_i|.
  double bound = 0.0;
  for (const auto& alpha : B.betas) {
    for (Eigen::Index r = 0; r < K; ++r) {
      const Point y = scaled_coord(L, g.midpoint(cells[std::size_t(r)]));
      for (Eigen::Index i = 0; i < M; ++i) {
        double v = 0.0;
        for (Eigen::Index j = 0; j < M; ++j) {
          const auto& beta = B.betas[std::size_t(j)];
          if (beta[0] < alpha[0] || beta[1] < alpha[1]) continue;
          const std::array<int, 2> rest{beta[0] - alpha[0], beta[1] - alpha[1]};
          v += C(i, j) * falling(beta[0], alpha[0]) * falling(beta[1], alpha[1]) * monomial(rest, y, B.n);
        }
        bound = std::max(bound, std::abs(v));
      }
    }
  }
  B.derivative_bound = bound;
  return B;
}

std::vector<double> project_local(const PolyBasis& B, const std::vector<double>& vals, int m) {
  const std::size_t K = B.cells.size(), M = B.size();
  std::vector<double> coef(M * std::size_t(m), 0.0);
  for (std::size_t r = 0; r < K; ++r) {
    const double w = B.weight[r];
    if (w == 0.0) continue;
    for (std::size_t i = 0; i < M; ++i) {
      const double e = B.values(Eigen::Index(r), Eigen::Index(i)) * w;
      for (int c = 0; c < m; ++c) coef[i * std::size_t(m) + std::size_t(c)] += e * vals[r * std::size_t(m) + std::size_t(c)];
    }
  }
  std::vector<double> out(K * std::size_t(m), 0.0);
  for (std::size_t r = 0; r < K; ++r)
    for (std::size_t i = 0; i < M; ++i) {
      const double e = B.values(Eigen::Index(r), Eigen::Index(i));
      for (int c = 0; c < m; ++c) out[r * std::size_t(m) + std::size_t(c)] += e * coef[i * std::size_t(m) + std::size_t(c)];
    }
  return out;
}

namespace {
std::vector<double> gather(const VectorField& h, const std::vector<std::size_t>& cells) {
  std::vector<double> v(cells.size() * std::size_t(h.m));
  for (std::size_t r = 0; r < cells.size(); ++r)
    for (int c = 0; c < h.m; ++c) v[r * std::size_t(h.m) + std::size_t(c)] = h.at(cells[r])[c];
  return v;
}

// max_i |<v, e_i w>| over components, v local (cells x m).
double weighted_moments_max(const PolyBasis& B, const std::vector<double>& v, int m) {
  double worst = 0.0;
  for (std::size_t i = 0; i < B.size(); ++i)
    for (int c = 0; c < m; ++c) {
      double s = 0.0;
      for (std::size_t r = 0; r < B.cells.size(); ++r)
        s += B.weight[r] * B.values(Eigen::Index(r), Eigen::Index(i)) * v[r * std::size_t(m) + std::size_t(c)];
      worst = std::max(worst, std::abs(s));
    }
  return worst;
}
}  // namespace

std::vector<double> projection_PL(const VectorField& h, const PolyBasis& B) {
  return project_local(B, gather(h, B.cells), h.m);
}

double projection_residual(const VectorField& h, const PolyBasis& B) {
  const int m = h.m;
  std::vector<double> v = gather(h, B.cells);
  std::vector<double> P = project_local(B, v, m);
  double mass = 0.0;
  for (std::size_t r = 0; r < B.cells.size(); ++r) mass += B.weight[r] * euclid(&v[r * std::size_t(m)], m);
  if (mass == 0.0) return 0.0;
  for (std::size_t k = 0; k < v.size(); ++k) v[k] -= P[k];
  return weighted_moments_max(B, v, m) / mass;
}

// ---------------------------------------------------------------------------------------------
// Level sets

std::vector<double> level_values(const BodyField& B, const Cube& Q, const Mat& M3Q) {
  const std::vector<std::size_t> cells = cells_in(B.grid, Q.dilate(3, 1));
  const Mat Minv = M3Q.inverse();
  std::vector<double> out(cells.size());
  for (std::size_t j = 0; j < cells.size(); ++j) out[j] = B.bodies[cells[j]].norm_after(Minv.data());
  return out;
}

LevelSetResult level_set_at(const BodyField& B, const Cube& Q, const Mat& M3Q, double threshold) {
  LevelSetResult res{Mask(B.grid), threshold, 0, 0.0};
  const std::vector<std::size_t> cells = cells_in(B.grid, Q.dilate(3, 1));
  const std::vector<double> v = level_values(B, Q, M3Q);
  for (std::size_t j = 0; j < cells.size(); ++j)
    if (v[j] > threshold) res.E.set(cells[j]);
  return res;
}

LevelSetResult level_set(const BodyField& B, const Cube& Q, const Mat& M3Q, double u, double target) {
  const std::vector<std::size_t> cells = cells_in(B.grid, Q.dilate(3, 1));
  const std::vector<double> v = level_values(B, Q, M3Q);
  double s = 0.0;
  for (double x : v) s += std::pow(x, u);
  const double seed = v.empty() ? 0.0 : std::pow(s / double(v.size()), 1.0 / u);
  LevelSetResult res{Mask(B.grid), seed > 0.0 ? seed : 1.0, 0, seed};
  auto measure = [&](double C) {
    std::size_t c = 0;
    for (double x : v) c += x > C ? 1 : 0;
    return double(c) * B.grid.cell_volume();
  };
  while (!(measure(res.threshold) < target)) {
    res.threshold *= 2.0;
    ++res.doublings;
  }
  for (std::size_t j = 0; j < cells.size(); ++j)
    if (v[j] > res.threshold) res.E.set(cells[j]);
  return res;
}

// ---------------------------------------------------------------------------------------------
// Atomic decomposition

std::size_t Decomposition::atom_count(int level) const {
  std::size_t c = 0;
  for (const auto& a : atoms) c += a.level == level ? 1 : 0;
  return c;
}

namespace {

struct CubeOps {
  Mat M;               // convex-body reducing operator of order u over 3Q
  double lambda = 0.0; // vnorm(1_{3Q}) ||A_{3Q} M||
};

struct LevelLocal {
  std::vector<Cube> cubes;
  PartitionOfUnity pu;
  std::vector<PolyBasis> bases;
  std::vector<std::vector<double>> f;   // f on bump cells
  std::vector<std::vector<double>> Pf;  // P_L f on bump cells
};

LevelLocal build_local(const StoppingCollection& S, const VectorField& f, int s, Decomposition& D) {
  LevelLocal out;
  out.cubes = S.cubes;
  out.pu = partition_of_unity(S);
  D.c_eta = std::min(D.c_eta, out.pu.c_eta);
  const std::size_t K = S.cubes.size();
  out.bases.resize(K);
  out.f.resize(K);
  out.Pf.resize(K);
  std::vector<double> ortho(K, 0.0), repro(K, 0.0), mom(K, 0.0);
  const int m = f.m;
  parallel_for(K, [&](std::size_t k) {
    const LocalBump& b = out.pu.bumps[k];
    out.bases[k] = poly_basis(f.grid, b.L, b.cells, b.eta, s);
    const PolyBasis& B = out.bases[k];
    out.f[k] = gather(f, b.cells);
    out.Pf[k] = project_local(B, out.f[k], m);
    ortho[k] = B.orthonormality_error;
    // Reproduction of every scaled monomial in every component.
    double rep = 0.0;
    for (const auto& beta : B.betas) {
      std::vector<double> q(b.cells.size() * std::size_t(m));
      for (std::size_t r = 0; r < b.cells.size(); ++r) {
        const double v = monomial(beta, scaled_coord(b.L, f.grid.midpoint(b.cells[r])), f.grid.n());
        for (int c = 0; c < m; ++c) q[r * std::size_t(m) + std::size_t(c)] = v;
      }
      const std::vector<double> Pq = project_local(B, q, m);
      for (std::size_t j = 0; j < q.size(); ++j) rep = std::max(rep, std::abs(Pq[j] - q[j]));
    }
    repro[k] = rep;
    // Moments of (f - P_L f) eta_L, relative to the mass of f eta_L.
    double mass = 0.0;
    std::vector<double> d(out.f[k].size());
    for (std::size_t r = 0; r < b.cells.size(); ++r) {
      mass += B.weight[r] * euclid(&out.f[k][r * std::size_t(m)], m);
      for (int c = 0; c < m; ++c) {
        const std::size_t j = r * std::size_t(m) + std::size_t(c);
        d[j] = out.f[k][j] - out.Pf[k][j];
      }
    }
    double mon = 0.0;
    for (const auto& gamma : B.betas) {
      for (int c = 0; c < m; ++c) {
        double acc = 0.0;
        for (std::size_t r = 0; r < b.cells.size(); ++r)
          acc += B.weight[r] * d[r * std::size_t(m) + std::size_t(c)] *
                 monomial(gamma, scaled_coord(b.L, f.grid.midpoint(b.cells[r])), f.grid.n());
        mon = std::max(mon, std::abs(acc));
      }
    }
    mom[k] = mass > 0.0 ? mon / mass : 0.0;
  });
  for (std::size_t k = 0; k < K; ++k) {
    D.basis_orthonormality = std::max(D.basis_orthonormality, ortho[k]);
    D.basis_reproduction = std::max(D.basis_reproduction, repro[k]);
    D.projection_moment = std::max(D.projection_moment, mom[k]);
    D.gram_condition_max = std::max(D.gram_condition_max, out.bases[k].gram_condition);
  }
  return out;
}

// b = sum_L (f - P_L f) eta_L on the full grid.
VectorField bad_part(const LevelLocal& lv, const Grid& g, int m) {
  VectorField b(g, m, 0.0);
  for (std::size_t k = 0; k < lv.cubes.size(); ++k) {
    const LocalBump& bp = lv.pu.bumps[k];
    for (std::size_t r = 0; r < bp.cells.size(); ++r)
      for (int c = 0; c < m; ++c) {
        const std::size_t j = r * std::size_t(m) + std::size_t(c);
        b.at(bp.cells[r])[c] += (lv.f[k][j] - lv.Pf[k][j]) * bp.eta[r];
      }
  }
  return b;
}

struct Support {
  Cube Q0;
  unsigned shift = 0;
  bool empty = true;
};

Support support_cube(const VectorField& f) {
  const Grid& g = f.grid;
  std::array<long, 2> lo{g.per_axis(), g.per_axis()}, hi{-1, -1};
  bool any = false;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (f.norm_at(i) == 0.0) continue;
    any = true;
    const auto mi = g.multi_index(i);
    for (int a = 0; a < g.n(); ++a) {
      lo[std::size_t(a)] = std::min(lo[std::size_t(a)], mi[std::size_t(a)]);
      hi[std::size_t(a)] = std::max(hi[std::size_t(a)], mi[std::size_t(a)]);
    }
  }
  Support s;
  if (!any) return s;
  s.empty = false;
  Point c{0.0, 0.0};
  double edge = 0.0;
  for (int a = 0; a < g.n(); ++a) {
    const double a0 = g.coord(lo[std::size_t(a)]) - 0.5 * g.h();
    const double a1 = g.coord(hi[std::size_t(a)]) + 0.5 * g.h();
    c[std::size_t(a)] = 0.5 * (a0 + a1);
    edge = std::max(edge, a1 - a0);
  }
  const DyadicCover cov = dyadic_cover(Cube(g.n(), c, edge));
  s.Q0 = cov.cube;
  s.shift = cov.shift;
  return s;
}

}  // namespace

Decomposition atomic_decompose(const VectorField& f, const MatrixWeight& W, const ExponentProfile& p,
                               const TestFunctionCatalog& cat, const WeightCertificate& cert, const DecompOptions& opt) {
  const Grid& g = f.grid;
  require_same_grid(g, W.grid(), "atomic_decompose weight");
  require_same_grid(g, p.grid(), "atomic_decompose exponent");
  if (opt.measure_rule != "strict" && opt.measure_rule != "premise")
    throw Error(ErrorCode::ConfigInvalid, "decomposition.measure_rule: expected strict or premise, got " + opt.measure_rule);
  if (opt.s < 0) throw Error(ErrorCode::ConfigInvalid, "decomposition.s: must be >= 0");
  if (opt.K_levels < 0) throw Error(ErrorCode::ConfigInvalid, "decomposition.K_levels: must be >= 0");
  const int n = g.n(), m = f.m;
  Decomposition D(g, m);
  D.s = opt.s;
  D.measure_rule = opt.measure_rule;
  D.u = cert.u;
  D.ccap = ccap_count(n);
  D.l_min = g.h() * std::ldexp(1.0, ceil_log2(double(opt.s + 1)));
  D.L_dec = cert.d2 + double(n) / p.r() + 1.0;
  D.f_l2 = l2_norm(f);
  double f_sup = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) f_sup = std::max(f_sup, f.norm_at(i));

  const Support sup = support_cube(f);
  if (sup.empty) return D;
  D.Q0 = sup.Q0;
  D.shift = sup.shift;
  {
    double mass = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) mass += f.norm_at(i) * g.cell_volume();
    const auto mom = moments(f, opt.s, D.Q0.center());
    const auto betas = multi_indices(n, opt.s);
    double worst = 0.0;
    for (std::size_t b = 0; b < betas.size(); ++b) {
      const double scale = std::pow(D.Q0.edge(), double(betas[b][0] + betas[b][1]));
      for (int c = 0; c < m; ++c) worst = std::max(worst, std::abs(mom[b * std::size_t(m) + std::size_t(c)]) / scale);
    }
    D.input_moment_max = mass > 0.0 ? worst / mass : 0.0;
  }

  MaximalParams mp = opt.maximal;
  mp.kind = MaximalKind::grand_radial;
  const BodyField B = cb_maximal(f, mp, cat);
  const double hardy = vnorm(cb_maximal_weighted(f, mp, cat, W), p);
  ScalarField decay(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Point x = g.midpoint(i);
    const double r = std::sqrt(x[0] * x[0] + (n == 2 ? x[1] * x[1] : 0.0));
    decay[i] = std::pow(1.0 + r, -D.L_dec);
  }
  {
    ScalarField wd = decay;
    for (std::size_t i = 0; i < g.size(); ++i) wd[i] *= W.norm(i);
    const double base = vnorm(wd, p);
    D.eps = opt.eps_override > 0.0 ? opt.eps_override : std::ldexp(1.0, int(std::floor(std::log2(hardy / base))));
  }
  BodyField Baug(g, m);
  for (std::size_t i = 0; i < g.size(); ++i)
    Baug.bodies[i] = hull_union({B.bodies[i], ConvexBody::ball(m, D.eps * decay[i])}, mp.cap);

  auto cube_ops = [&](const std::vector<Cube>& cubes) {
    std::vector<CubeOps> ops(cubes.size());
    parallel_for(cubes.size(), [&](std::size_t k) {
      const std::vector<std::size_t> cells = cells_in(g, cubes[k].dilate(3, 1));
      ops[k].M = cb_reducing_operator(Baug, cells, D.u).A;
      const Mat A = reducing_operator(W, p, cells).A;
      ops[k].lambda = vnorm_indicator(p, cells) * spectral_norm(Mat(A * ops[k].M));
    });
    return ops;
  };

  const double premise_factor = std::pow(2.0, -4.0 * n);
  const double strict_factor = std::pow(2.0, -12.0 * n) / double(D.ccap);

  // Level sets of every cube of a level, combined into the next open set.
  struct NextLevel {
    Mask raw;
    Mask E;
    std::vector<double> thresholds;
    bool premise_ok = true;
  };
  // Raw level sets are widened by the reach of the smallest admissible 9L so that every raw cell can be
  // covered, then clipped to the cells covered at the current level.
  const long margin = long(std::ceil(5.0 * D.l_min / g.h() - 1e-9));
  auto next_level = [&](const std::vector<Cube>& cubes, const std::vector<CubeOps>& ops, const Mask& covered) {
    NextLevel nl{Mask(g), Mask(g), std::vector<double>(cubes.size(), 1.0), true};
    std::vector<std::vector<double>> vals(cubes.size());
    std::vector<std::vector<std::size_t>> cells(cubes.size());
    parallel_for(cubes.size(), [&](std::size_t k) {
      const double target = (opt.measure_rule == "strict" ? strict_factor : premise_factor) * cubes[k].volume();
      nl.thresholds[k] = level_set(B, cubes[k], ops[k].M, D.u, target).threshold;
      vals[k] = level_values(B, cubes[k], ops[k].M);
      cells[k] = cells_in(g, cubes[k].dilate(3, 1));
    });
    auto assemble = [&] {
      nl.raw = Mask(g);
      for (std::size_t k = 0; k < cubes.size(); ++k)
        for (std::size_t j = 0; j < cells[k].size(); ++j)
          if (vals[k][j] > nl.thresholds[k]) nl.raw.set(cells[k][j]);
      nl.E = dilate_mask(nl.raw, margin);
      for (std::size_t i = 0; i < g.size(); ++i)
        if (!covered[i]) nl.E.set(i, false);
    };
    assemble();
    auto violated = [&](std::size_t k) {
      return !(double(count_in(nl.E, cells[k])) * g.cell_volume() < premise_factor * cubes[k].volume());
    };
    if (opt.measure_rule == "premise") {
      for (int iter = 0; iter < 4096; ++iter) {
        std::vector<std::size_t> bad;
        for (std::size_t k = 0; k < cubes.size(); ++k)
          if (violated(k)) bad.push_back(k);
        if (bad.empty()) break;
        std::vector<std::uint8_t> bump(cubes.size(), 0);
        for (auto k : bad) {
          const Cube Q3 = cubes[k].dilate(3, 1);
          for (std::size_t j = 0; j < cubes.size(); ++j)
            if (cubes_intersect(Q3, cubes[j].dilate(3, 1))) bump[j] = 1;
        }
        for (std::size_t j = 0; j < cubes.size(); ++j)
          if (bump[j]) nl.thresholds[j] *= 2.0;
        assemble();
      }
    }
    for (std::size_t k = 0; k < cubes.size(); ++k)
      if (violated(k)) nl.premise_ok = false;
    return nl;
  };

  std::vector<Cube> cur_cubes{D.Q0};
  Mask cur_covered(g, true);
  LevelLocal cur;  // local data of the current level (unused at level 0)
  VectorField partial(g, m, 0.0);
  std::vector<double> scratch_eta(g.size(), 0.0);
  std::vector<double> acc(g.size() * std::size_t(m), 0.0);
  std::vector<std::uint8_t> touched(g.size(), 0);

  for (int k = 0;; ++k) {
    D.levels.push_back(cur_cubes);
    const std::vector<CubeOps> ops = cube_ops(cur_cubes);
    NextLevel nl = next_level(cur_cubes, ops, cur_covered);
    StoppingCollection Fn = whitney_stopping(nl.E, D.shift, D.l_min);
    const Mask next_covered = covered_mask(Fn);
    const StoppingReport rep = check_stopping(Fn, cur_cubes);
    LevelLocal next = build_local(Fn, f, opt.s, D);

    LevelDiagnostics diag;
    diag.k = k;
    diag.cubes = cur_cubes.size();
    diag.raw_cells = nl.raw.count();
    diag.E_cells = nl.E.count();
    for (std::size_t i = 0; i < g.size(); ++i)
      if (nl.raw[i] && !next_covered[i]) ++diag.dropped_cells;
    diag.premise_ok = nl.premise_ok;
    diag.stopping_ok = rep.ok();
    diag.threshold_min = *std::min_element(nl.thresholds.begin(), nl.thresholds.end());
    diag.threshold_max = *std::max_element(nl.thresholds.begin(), nl.thresholds.end());
    if (diag.dropped_cells > 0) {
      D.resolution_exhausted = true;
      if (opt.throw_on_resolution)
        throw Error(ErrorCode::ResolutionExhausted, std::to_string(diag.dropped_cells) + " level-set cells at level " +
                                                        std::to_string(k + 1) + " need stopping cubes finer than the grid");
    }

    // Neighbours: for each current cube, the next-level cubes whose stars meet its star.
    std::vector<std::vector<std::size_t>> G(cur_cubes.size());
    if (k == 0) {
      for (std::size_t l = 0; l < next.cubes.size(); ++l) G[0].push_back(l);
    } else {
      for (std::size_t q = 0; q < cur_cubes.size(); ++q) {
        const Cube Qs = cur_cubes[q].star();
        for (std::size_t l = 0; l < next.cubes.size(); ++l)
          if (cubes_intersect(next.cubes[l].star(), Qs)) G[q].push_back(l);
      }
    }

    for (std::size_t q = 0; q < cur_cubes.size(); ++q) {
      std::vector<std::size_t> list;
      auto touch = [&](std::size_t c) {
        if (!touched[c]) {
          touched[c] = 1;
          list.push_back(c);
        }
      };
      if (k == 0) {
        // g = f - b_1
        for (std::size_t i = 0; i < g.size(); ++i) {
          if (f.norm_at(i) == 0.0) continue;
          touch(i);
          for (int c = 0; c < m; ++c) acc[i * std::size_t(m) + std::size_t(c)] += f.at(i)[c];
        }
        for (std::size_t l : G[0]) {
          const LocalBump& bl = next.pu.bumps[l];
          for (std::size_t r = 0; r < bl.cells.size(); ++r) {
            touch(bl.cells[r]);
            for (int c = 0; c < m; ++c) {
              const std::size_t j = r * std::size_t(m) + std::size_t(c);
              acc[bl.cells[r] * std::size_t(m) + std::size_t(c)] -= (next.f[l][j] - next.Pf[l][j]) * bl.eta[r];
            }
          }
        }
      } else {
        const LocalBump& bq = cur.pu.bumps[q];
        for (std::size_t r = 0; r < bq.cells.size(); ++r) {
          scratch_eta[bq.cells[r]] = bq.eta[r];
          touch(bq.cells[r]);
          for (int c = 0; c < m; ++c) {
            const std::size_t j = r * std::size_t(m) + std::size_t(c);
            acc[bq.cells[r] * std::size_t(m) + std::size_t(c)] += bq.eta[r] * (cur.f[q][j] - cur.Pf[q][j]);
          }
        }
        for (std::size_t l : G[q]) {
          const LocalBump& bl = next.pu.bumps[l];
          std::vector<double> v(next.f[l].size());
          for (std::size_t r = 0; r < bl.cells.size(); ++r)
            for (int c = 0; c < m; ++c) {
              const std::size_t j = r * std::size_t(m) + std::size_t(c);
              v[j] = (next.f[l][j] - next.Pf[l][j]) * scratch_eta[bl.cells[r]];
            }
          const std::vector<double> cQL = project_local(next.bases[l], v, m);
          for (std::size_t r = 0; r < bl.cells.size(); ++r) {
            touch(bl.cells[r]);
            for (int c = 0; c < m; ++c) {
              const std::size_t j = r * std::size_t(m) + std::size_t(c);
              acc[bl.cells[r] * std::size_t(m) + std::size_t(c)] += bl.eta[r] * (cQL[j] - v[j]);
            }
          }
        }
        for (std::size_t r = 0; r < bq.cells.size(); ++r) scratch_eta[bq.cells[r]] = 0.0;
      }
      std::sort(list.begin(), list.end());
      // Pieces at roundoff level (f equal to its local polynomial near Q) become zero atoms with lambda = 0.
      double piece_sup = 0.0;
      for (std::size_t i : list) {
        double s2 = 0.0;
        for (int c = 0; c < m; ++c) s2 += acc[i * std::size_t(m) + std::size_t(c)] * acc[i * std::size_t(m) + std::size_t(c)];
        piece_sup = std::max(piece_sup, std::sqrt(s2));
      }
      if (piece_sup <= kNullPiece * f_sup) {
        for (std::size_t i : list) {
          for (int c = 0; c < m; ++c) acc[i * std::size_t(m) + std::size_t(c)] = 0.0;
          touched[i] = 0;
        }
        ++D.null_pieces;
        D.null_piece_max = std::max(D.null_piece_max, piece_sup);
        AtomRecord z;
        z.level = k;
        z.Q = cur_cubes[q];
        z.support = cur_cubes[q].dilate(3, 1);
        z.threshold = nl.thresholds[q];
        D.atoms.push_back(std::move(z));
        continue;
      }
      AtomRecord a;
      a.level = k;
      a.Q = cur_cubes[q];
      a.support = cur_cubes[q].dilate(3, 1);
      a.lambda = ops[q].lambda;
      a.threshold = nl.thresholds[q];
      a.cells = list;
      a.values.resize(list.size() * std::size_t(m));
      for (std::size_t r = 0; r < list.size(); ++r) {
        const std::size_t i = list[r];
        for (int c = 0; c < m; ++c) {
          double& src = acc[i * std::size_t(m) + std::size_t(c)];
          partial.at(i)[c] += src;
          a.values[r * std::size_t(m) + std::size_t(c)] = src / a.lambda;
          src = 0.0;
        }
        touched[i] = 0;
      }
      D.atoms.push_back(std::move(a));
    }

    VectorField diff = partial;
    for (std::size_t j = 0; j < diff.values.size(); ++j) diff.values[j] = f.values[j] - partial.values[j];
    diag.residual_l2 = l2_norm(diff);
    D.diagnostics.push_back(diag);

    if (next.cubes.empty()) {
      D.residual = VectorField(g, m, 0.0);
      break;
    }
    if (k == opt.K_levels) {
      D.residual = bad_part(next, g, m);
      break;
    }
    cur_cubes = next.cubes;
    cur_covered = next_covered;
    cur = std::move(next);
  }
  return D;
}

// ---------------------------------------------------------------------------------------------
// Atom checks, coefficients, reconstruction

AtomReport validate_atom(const AtomRecord& a, const MatrixWeight& W, const ExponentProfile& p, int s, double C_atom,
                         double moment_tol) {
  const Grid& g = W.grid();
  const int m = W.m();
  AtomReport rep;
  double mass = 0.0;
  for (std::size_t r = 0; r < a.cells.size(); ++r) {
    const double v = euclid(&a.values[r * std::size_t(m)], m);
    mass += v * g.cell_volume();
    if (v != 0.0 && !a.support.contains(g.midpoint(a.cells[r]))) rep.support_ok = false;
  }
  if (mass == 0.0) return rep;
  const auto betas = multi_indices(g.n(), s);
  for (const auto& beta : betas)
    for (int c = 0; c < m; ++c) {
      double acc = 0.0;
      for (std::size_t r = 0; r < a.cells.size(); ++r)
        acc += a.values[r * std::size_t(m) + std::size_t(c)] *
               monomial(beta, scaled_coord(a.support, g.midpoint(a.cells[r])), g.n()) * g.cell_volume();
      rep.moment_max = std::max(rep.moment_max, std::abs(acc) / mass);
    }
  rep.moment_ok = rep.moment_max <= moment_tol;

  const std::vector<std::size_t> Qcells = cells_in(g, a.support);
  const double ind = vnorm_indicator(p, Qcells);
  const Mat A = reducing_operator(W, p, Qcells).A;
  std::vector<std::pair<double, std::size_t>> order;
  order.reserve(a.cells.size());
  double y[3];
  for (std::size_t r = 0; r < a.cells.size(); ++r) {
    mat_vec(A.data(), &a.values[r * std::size_t(m)], y, m);
    const double v = euclid(y, m);
    rep.C_A = std::max(rep.C_A, v * ind);
    if (v > 0.0) order.push_back({v, r});
  }
  // N_Q(z) <= |A_Q z| on the probe mesh, so the scan stops once |A_Q a(x)| drops below the best N_Q.
  std::sort(order.begin(), order.end(), [](const auto& x, const auto& z) { return x.first > z.first || (x.first == z.first && x.second < z.second); });
  double best = 0.0;
  for (const auto& [v, r] : order) {
    if (v * 1.001 < best) break;
    best = std::max(best, reduced_norm(W, p, Qcells, &a.values[r * std::size_t(m)]));
  }
  rep.C_W = best * ind;
  rep.size_ok = rep.C_A <= C_atom;
  return rep;
}

double coefficient_norm(const std::vector<double>& lambda, const std::vector<Cube>& cubes, const Grid& g, double r,
                        const ExponentProfile& p) {
  ScalarField S(g, 0.0);
  for (std::size_t k = 0; k < cubes.size(); ++k) {
    const std::vector<std::size_t> cells = cells_in(g, cubes[k]);
    if (cells.empty() || lambda[k] == 0.0) continue;
    const double t = std::pow(std::abs(lambda[k]) / vnorm_indicator(p, cells), r);
    for (auto c : cells) S[c] += t;
  }
  for (auto& v : S.values) v = std::pow(v, 1.0 / r);
  return vnorm(S, p);
}

double coefficient_norm(const Decomposition& d, double r, const ExponentProfile& p) {
  std::vector<double> lam;
  std::vector<Cube> cubes;
  for (const auto& a : d.atoms) {
    lam.push_back(a.lambda);
    cubes.push_back(a.support);
  }
  return coefficient_norm(lam, cubes, d.grid, r, p);
}

VectorField reconstruct(const Decomposition& d, int up_to_level) {
  VectorField out(d.grid, d.m, 0.0);
  for (const auto& a : d.atoms) {
    if (up_to_level >= 0 && a.level > up_to_level) continue;
    for (std::size_t r = 0; r < a.cells.size(); ++r)
      for (int c = 0; c < d.m; ++c) out.at(a.cells[r])[c] += a.lambda * a.values[r * std::size_t(d.m) + std::size_t(c)];
  }
  return out;
}

double relative_l2_error(const VectorField& approx, const VectorField& f) {
  require_same_grid(approx.grid, f.grid, "relative_l2_error");
  VectorField d = approx;
  for (std::size_t j = 0; j < d.values.size(); ++j) d.values[j] -= f.values[j];
  const double base = l2_norm(f);
  const double e = l2_norm(d);
  return base > 0.0 ? e / base : e;
}

// ---------------------------------------------------------------------------------------------
// Decay and atom functionals

std::vector<FsFamily> random_fs_families(const Grid& g, int m, int count, std::uint64_t seed) {
  CounterRng rng(seed, 0xF5);
  std::vector<FsFamily> out;
  const int n = g.n();
  const int kmin = ceil_log2(4.0 * g.h());
  const int kmax = std::max(kmin, floor_log2(0.5 * g.L_box()));
  for (int f = 0; f < count; ++f) {
    FsFamily fam;
    const int K = 1 + int(rng.next() % 6);
    while (int(fam.cubes.size()) < K) {
      const int k = kmin + int(rng.next() % std::uint64_t(kmax - kmin + 1));
      const unsigned shift = unsigned(rng.next() % std::uint64_t(num_shifts(n)));
      Point x{rng.uniform(-g.L_box(), g.L_box()), n == 2 ? rng.uniform(-g.L_box(), g.L_box()) : 0.0};
      Cube Q = dyadic_containing(n, k, shift, x);
      bool inside = true;
      for (int a = 0; a < n; ++a) inside = inside && Q.lower(a) >= -g.L_box() && Q.upper(a) <= g.L_box();
      if (!inside) continue;
      fam.cubes.push_back(Q);
      fam.lambda.push_back(std::exp(rng.normal()));
      VectorField a(g, m, 0.0);
      for (auto c : cells_in(g, Q))
        for (int j = 0; j < m; ++j) a.at(c)[j] = rng.uniform(-1.0, 1.0);
      fam.a.push_back(std::move(a));
    }
    out.push_back(std::move(fam));
  }
  return out;
}

FsReport fs_substitute_checks(const MatrixWeight& W, const ExponentProfile& p, const WeightCertificate& cert,
                              const std::vector<FsFamily>& families, double q) {
  const Grid& g = W.grid();
  const int n = g.n(), m = W.m();
  const double r = p.r();
  FsReport rep;
  rep.L = cert.d2 + double(n) / r + 1.0;
  const MaximalCatalog mcat(g);
  const double dil = 2.0 * std::sqrt(double(n));
  for (const auto& fam : families) {
    ScalarField lhs_d(g, 0.0), lhs_a(g, 0.0), rhs_d(g, 0.0), rhs_a(g, 0.0);
    for (std::size_t k = 0; k < fam.cubes.size(); ++k) {
      const Cube& Q = fam.cubes[k];
      const double lam = fam.lambda[k];
      const std::vector<std::size_t> cells = cells_in(g, Q);
      if (cells.empty()) continue;
      const Mat Ainv = reducing_operator(W, p, cells).A.inverse();
      ScalarField absa(g, 0.0);
      double lq = 0.0;
      for (auto c : cells) {
        absa[c] = fam.a[k].norm_at(c);
        lq += std::pow(absa[c], q) * g.cell_volume();
      }
      lq = std::pow(lq, 1.0 / q);
      const ScalarField T = hl_maximal(absa, 1.0, mcat);
      const Cube Qd = Q.dilate(dil);
      const double l = Q.edge();
      double M[9];
      for (std::size_t i = 0; i < g.size(); ++i) {
        mat_mul(W.W(i), Ainv.data(), M, m);
        const double wn = spectral_norm(M, m);
        const Point x = g.midpoint(i);
        double d2 = 0.0;
        for (int a = 0; a < n; ++a) d2 += (x[std::size_t(a)] - Q.center()[std::size_t(a)]) * (x[std::size_t(a)] - Q.center()[std::size_t(a)]);
        lhs_d[i] += lam * wn * std::pow(l / (l + std::sqrt(d2)), rep.L);
        if (Qd.contains(x)) lhs_a[i] += lam * wn * T[i];
      }
      const double vol = double(cells.size()) * g.cell_volume();
      const double ca = std::pow(vol, -1.0 / q) * lam * lq;
      for (auto c : cells) {
        rhs_d[c] += std::pow(lam, r);
        rhs_a[c] += std::pow(ca, r);
      }
    }
    for (auto& v : rhs_d.values) v = std::pow(v, 1.0 / r);
    for (auto& v : rhs_a.values) v = std::pow(v, 1.0 / r);
    auto ratio = [&](const ScalarField& L, const ScalarField& R) {
      const double a = vnorm(L, p), b = vnorm(R, p);
      if (a == 0.0) return 0.0;
      return b > 0.0 ? a / b : std::numeric_limits<double>::infinity();
    };
    rep.ratio_decay.push_back(ratio(lhs_d, rhs_d));
    rep.ratio_atom.push_back(ratio(lhs_a, rhs_a));
  }
  for (double v : rep.ratio_decay) rep.max_decay = std::max(rep.max_decay, v);
  for (double v : rep.ratio_atom) rep.max_atom = std::max(rep.max_atom, v);
  rep.finite = std::isfinite(rep.max_decay) && std::isfinite(rep.max_atom);
  return rep;
}

}  // namespace hardylab
