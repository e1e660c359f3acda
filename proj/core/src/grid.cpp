#include "hardylab/grid.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

namespace hardylab {

namespace {

bool is_power_of_two(double x) {
  if (!(x > 0.0) || !std::isfinite(x)) return false;
  int e = 0;
  double mant = std::frexp(x, &e);
  return mant == 0.5;
}

double pow2(int k) { return std::ldexp(1.0, k); }

constexpr int kExactShift = 24;  // bounds are integers over 48 * 2^24

std::string describe(const Cube& q) {
  std::ostringstream os;
  os << "cube(center=(" << q.center()[0];
  if (q.n() == 2) os << "," << q.center()[1];
  os << "), edge=" << q.edge() << ")";
  return os.str();
}

}  // namespace

Grid::Grid(int n, int J, double L_box) : n_(n), J_(J), L_(L_box) {
  if (n != 1 && n != 2) throw Error(ErrorCode::ConfigInvalid, "grid.n must be 1 or 2");
  if (J < 4 || J > 14) throw Error(ErrorCode::ConfigInvalid, "grid.J must give at least 16 cells per axis");
  if (!is_power_of_two(L_box)) throw Error(ErrorCode::ConfigInvalid, "grid.L_box must be a power of two");
  N_ = 1L << J;
  h_ = std::ldexp(L_box, 1 - J);
}

double Grid::box_volume() const { return n_ == 1 ? 2.0 * L_ : 4.0 * L_ * L_; }

Point Grid::midpoint(std::size_t idx) const {
  if (n_ == 1) return {coord(long(idx)), 0.0};
  return {coord(long(idx) / N_), coord(long(idx) % N_)};
}

std::array<long, 2> Grid::multi_index(std::size_t idx) const {
  if (n_ == 1) return {long(idx), 0};
  return {long(idx) / N_, long(idx) % N_};
}

void require_same_grid(const Grid& a, const Grid& b, const char* what) {
  if (a != b) throw Error(ErrorCode::GridMismatch, what);
}

Cube::Cube(int n, Point center, double edge) : n_(n), c_(center), l_(edge) {
  if (n == 1) c_[1] = 0.0;
}

Cube Cube::dyadic(int n, const DyadicIndex& idx) {
  const double side = pow2(idx.k);
  const double sign = (idx.k % 2 == 0) ? 1.0 : -1.0;
  Point c{0.0, 0.0};
  for (int i = 0; i < n; ++i) {
    const double t = (idx.shift >> i) & 1U ? 1.0 / 3.0 : 0.0;
    c[i] = side * (double(idx.m[i]) + sign * t + 0.5);
  }
  Cube q(n, c, side);
  q.idx_ = idx;
  for (int i = n; i < 2; ++i) q.idx_->m[i] = 0;
  return q;
}

std::optional<int> Cube::scale() const {
  if (!is_dyadic()) return std::nullopt;
  return -idx_->k;
}

std::optional<unsigned> Cube::lattice_shift() const {
  if (!is_dyadic()) return std::nullopt;
  return idx_->shift;
}

bool Cube::contains(const Point& x) const {
  for (int i = 0; i < n_; ++i) {
    if (x[i] < lower(i) || x[i] >= upper(i)) return false;
  }
  return true;
}

Cube Cube::dilate(int num, int den) const {
  Cube q(n_, c_, l_ * double(num) / double(den));
  if (idx_) {
    long long a = (long long)dil_num_ * num;
    long long b = (long long)dil_den_ * den;
    long long g = std::gcd(a, b);
    a /= g;
    b /= g;
    if (8 % b == 0) {
      q.idx_ = idx_;
      q.dil_num_ = int(a);
      q.dil_den_ = int(b);
    }
  }
  return q;
}

Cube Cube::dilate(double lambda) const {
  const double scaled = lambda * 8.0;
  const double r = std::round(scaled);
  if (std::abs(scaled - r) < 1e-12 && r > 0) return dilate(int(r), 8);
  return Cube(n_, c_, l_ * lambda);
}

std::optional<ExactBox> exact_box(const Cube& q) {
  if (!q.dyadic_index()) return std::nullopt;
  const DyadicIndex& d = *q.dyadic_index();
  const int e = d.k + kExactShift;
  if (e < 0 || e > 60) return std::nullopt;
  const Int128 unit = (Int128)1 << e;
  const int num = q.dilation_num();
  const int den = q.dilation_den();
  ExactBox b;
  b.n = q.n();
  for (int i = 0; i < q.n(); ++i) {
    const int t3 = (d.shift >> i) & 1U ? 1 : 0;
    const int sigma = (d.k % 2 == 0) ? t3 : -t3;
    const Int128 center = unit * 8 * (6 * (Int128)d.m[i] + 2 * sigma + 3);
    const Int128 half = unit * (24 * (Int128)num / den);
    b.lo[i] = center - half;
    b.hi[i] = center + half;
  }
  return b;
}

bool exact_intersects(const ExactBox& a, const ExactBox& b) {
  for (int i = 0; i < a.n; ++i) {
    const Int128 lo = a.lo[i] > b.lo[i] ? a.lo[i] : b.lo[i];
    const Int128 hi = a.hi[i] < b.hi[i] ? a.hi[i] : b.hi[i];
    if (!(lo < hi)) return false;
  }
  return true;
}

bool exact_contains(const ExactBox& outer, const ExactBox& inner) {
  for (int i = 0; i < outer.n; ++i) {
    if (inner.lo[i] < outer.lo[i] || inner.hi[i] > outer.hi[i]) return false;
  }
  return true;
}

bool cubes_intersect(const Cube& a, const Cube& b) {
  auto ea = exact_box(a);
  auto eb = exact_box(b);
  if (ea && eb) return exact_intersects(*ea, *eb);
  for (int i = 0; i < a.n(); ++i) {
    if (!(std::max(a.lower(i), b.lower(i)) < std::min(a.upper(i), b.upper(i)))) return false;
  }
  return true;
}

bool cube_contains(const Cube& outer, const Cube& inner) {
  auto eo = exact_box(outer);
  auto ei = exact_box(inner);
  if (eo && ei) return exact_contains(*eo, *ei);
  for (int i = 0; i < outer.n(); ++i) {
    if (inner.lower(i) < outer.lower(i) || inner.upper(i) > outer.upper(i)) return false;
  }
  return true;
}

int num_shifts(int n) { return 1 << n; }

Cube dyadic_containing(int n, int k, unsigned shift, const Point& x) {
  const double side = pow2(k);
  const double sign = (k % 2 == 0) ? 1.0 : -1.0;
  DyadicIndex idx;
  idx.k = k;
  idx.shift = shift;
  for (int i = 0; i < n; ++i) {
    const double t = (shift >> i) & 1U ? 1.0 / 3.0 : 0.0;
    idx.m[i] = (long long)std::floor(x[i] / side - sign * t);
  }
  Cube q = Cube::dyadic(n, idx);
  // Guard against rounding at a lattice boundary.
  for (int i = 0; i < n; ++i) {
    if (x[i] < q.lower(i)) { idx.m[i] -= 1; q = Cube::dyadic(n, idx); }
    else if (x[i] >= q.upper(i)) { idx.m[i] += 1; q = Cube::dyadic(n, idx); }
  }
  return q;
}

DyadicCover dyadic_cover(const Cube& q) {
  const int n = q.n();
  const int k0 = int(std::ceil(std::log2(q.edge()) - 1e-12));
  Point corner{q.lower(0), n == 2 ? q.lower(1) : 0.0};
  for (int k = k0; k <= k0 + 6; ++k) {
    for (unsigned s = 0; s < unsigned(num_shifts(n)); ++s) {
      Cube d = dyadic_containing(n, k, s, corner);
      bool ok = true;
      for (int i = 0; i < n; ++i) {
        if (q.lower(i) < d.lower(i) || q.upper(i) > d.upper(i)) ok = false;
      }
      if (ok) return {s, d};
    }
  }
  throw Error(ErrorCode::EmptyCube, "no dyadic cover found for " + describe(q));
}

long CellRange::count() const {
  long c = 1;
  for (int i = 0; i < n; ++i) c *= std::max(0L, hi[i] - lo[i]);
  return c;
}

bool CellRange::inside(const Grid& g) const {
  for (int i = 0; i < n; ++i) {
    if (lo[i] < 0 || hi[i] > g.per_axis()) return false;
  }
  return true;
}

CellRange cell_range(const Grid& g, const Cube& q, bool clip_to_box) {
  CellRange r;
  r.n = g.n();
  for (int i = 0; i < g.n(); ++i) {
    const double a = (q.lower(i) + g.L_box()) / g.h() - 0.5;
    const double b = (q.upper(i) + g.L_box()) / g.h() - 0.5;
    long lo = long(std::ceil(a));
    long hi = long(std::ceil(b));
    if (clip_to_box) {
      lo = std::clamp(lo, 0L, g.per_axis());
      hi = std::clamp(hi, 0L, g.per_axis());
    }
    if (hi < lo) hi = lo;
    r.lo[i] = lo;
    r.hi[i] = hi;
  }
  return r;
}

std::vector<std::size_t> cells_in(const Grid& g, const Cube& q) {
  CellRange r = cell_range(g, q, true);
  std::vector<std::size_t> out;
  out.reserve(std::size_t(std::max(0L, r.count())));
  if (g.n() == 1) {
    for (long i = r.lo[0]; i < r.hi[0]; ++i) out.push_back(std::size_t(i));
  } else {
    for (long i = r.lo[0]; i < r.hi[0]; ++i)
      for (long j = r.lo[1]; j < r.hi[1]; ++j) out.push_back(g.flat(i, j));
  }
  return out;
}

std::size_t cell_of(const Grid& g, const Point& x) {
  long idx[2] = {0, 0};
  for (int i = 0; i < g.n(); ++i) {
    long c = long(std::floor((x[i] + g.L_box()) / g.h()));
    idx[i] = std::clamp(c, 0L, g.per_axis() - 1);
  }
  return g.flat(idx[0], idx[1]);
}

ScalarField::ScalarField(const Grid& g, std::vector<double> v) : grid(g), values(std::move(v)) {
  if (values.size() != g.size()) throw Error(ErrorCode::GridMismatch, "scalar sample count does not match grid");
}

VectorField::VectorField(const Grid& g, int m_, std::vector<double> v) : grid(g), m(m_), values(std::move(v)) {
  if (values.size() != g.size() * std::size_t(m_)) throw Error(ErrorCode::GridMismatch, "vector sample count does not match grid");
}

double VectorField::norm_at(std::size_t i) const {
  const double* p = at(i);
  double s = 0.0;
  for (int c = 0; c < m; ++c) s += p[c] * p[c];
  return std::sqrt(s);
}

std::size_t Mask::count() const {
  std::size_t c = 0;
  for (auto v : values) c += v ? 1 : 0;
  return c;
}

double integrate(const ScalarField& f, const Cube& q) {
  auto idx = cells_in(f.grid, q);
  if (idx.empty()) throw Error(ErrorCode::EmptyCube, describe(q) + " holds no cell midpoint");
  double s = 0.0;
  for (auto i : idx) s += f.values[i];
  return s * f.grid.cell_volume();
}

double average(const ScalarField& f, const Cube& q) {
  auto idx = cells_in(f.grid, q);
  if (idx.empty()) throw Error(ErrorCode::EmptyCube, describe(q) + " holds no cell midpoint");
  double s = 0.0;
  for (auto i : idx) s += f.values[i];
  return s / double(idx.size());
}

double integrate_box(const ScalarField& f) {
  double s = 0.0;
  for (double v : f.values) s += v;
  return s * f.grid.cell_volume();
}

double pair(const VectorField& f, const VectorField& phi) {
  require_same_grid(f.grid, phi.grid, "pair: grids differ");
  if (f.m != phi.m) throw Error(ErrorCode::GridMismatch, "pair: codomain dimensions differ");
  double s = 0.0;
  for (std::size_t i = 0; i < f.values.size(); ++i) s += f.values[i] * phi.values[i];
  return s * f.grid.cell_volume();
}

double l2_norm(const VectorField& f) {
  double s = 0.0;
  for (double v : f.values) s += v * v;
  return std::sqrt(s * f.grid.cell_volume());
}

}  // namespace hardylab
