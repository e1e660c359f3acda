#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hardylab/errors.hpp"

namespace hardylab {

using Point = std::array<double, 2>;

// Uniform cell-midpoint grid on [-L_box, L_box]^n with 2^J cells per axis.
// Flat index is row-major: idx = i0 * per_axis + i1.
class Grid {
 public:
  Grid(int n, int J, double L_box);

  int n() const { return n_; }
  int J() const { return J_; }
  double L_box() const { return L_; }
  double h() const { return h_; }
  long per_axis() const { return N_; }
  std::size_t size() const { return n_ == 1 ? std::size_t(N_) : std::size_t(N_) * std::size_t(N_); }
  double cell_volume() const { return n_ == 1 ? h_ : h_ * h_; }
  double box_volume() const;

  // Midpoint coordinate of integer cell index i along one axis; i may lie outside [0, N).
  double coord(long i) const { return -L_ + (double(i) + 0.5) * h_; }
  Point midpoint(std::size_t idx) const;
  std::array<long, 2> multi_index(std::size_t idx) const;
  std::size_t flat(long i0, long i1 = 0) const { return n_ == 1 ? std::size_t(i0) : std::size_t(i0 * N_ + i1); }
  Grid refined() const { return Grid(n_, J_ + 1, L_); }

  bool operator==(const Grid& o) const { return n_ == o.n_ && J_ == o.J_ && L_ == o.L_; }
  bool operator!=(const Grid& o) const { return !(*this == o); }

 private:
  int n_;
  int J_;
  double L_;
  double h_;
  long N_;
};

void require_same_grid(const Grid& a, const Grid& b, const char* what);

// Member of the lattice 2^k([0,1)^n + m + (-1)^k t) with t_i = 1/3 when bit i of `shift` is set.
struct DyadicIndex {
  int k = 0;
  std::array<long long, 2> m{0, 0};
  unsigned shift = 0;
  bool operator==(const DyadicIndex&) const = default;
};

// Half-open cube [c - l/2, c + l/2)^n. Dyadic cubes keep their lattice index;
// rational dilations of dyadic cubes keep it too, so set relations can be decided exactly.
class Cube {
 public:
  Cube() = default;
  Cube(int n, Point center, double edge);

  static Cube dyadic(int n, const DyadicIndex& idx);

  int n() const { return n_; }
  const Point& center() const { return c_; }
  double edge() const { return l_; }
  double lower(int axis) const { return c_[axis] - 0.5 * l_; }
  double upper(int axis) const { return c_[axis] + 0.5 * l_; }
  double volume() const { return n_ == 1 ? l_ : l_ * l_; }

  // Origin data for exact geometry: the generating dyadic index and the dilation num/den.
  const std::optional<DyadicIndex>& dyadic_index() const { return idx_; }
  bool is_dyadic() const { return idx_.has_value() && dil_num_ == 1 && dil_den_ == 1; }
  std::optional<int> scale() const;            // s_Q = -log2 l(Q)
  std::optional<unsigned> lattice_shift() const;
  int dilation_num() const { return dil_num_; }
  int dilation_den() const { return dil_den_; }

  bool contains(const Point& x) const;
  Cube dilate(double lambda) const;            // exact origin kept when lambda = num/den with den | 8
  Cube dilate(int num, int den) const;
  Cube star() const { return dilate(9, 8); }

 private:
  int n_ = 1;
  Point c_{0.0, 0.0};
  double l_ = 1.0;
  std::optional<DyadicIndex> idx_;
  int dil_num_ = 1;
  int dil_den_ = 1;
};

__extension__ typedef __int128 Int128;

// Exact box for a cube carrying a dyadic origin: integer bounds over a fixed common denominator.
struct ExactBox {
  int n = 1;
  std::array<Int128, 2> lo{0, 0};
  std::array<Int128, 2> hi{0, 0};
};
std::optional<ExactBox> exact_box(const Cube& q);
bool exact_intersects(const ExactBox& a, const ExactBox& b);
bool exact_contains(const ExactBox& outer, const ExactBox& inner);
// Exact when both cubes carry dyadic origins, floating point otherwise.
bool cubes_intersect(const Cube& a, const Cube& b);
bool cube_contains(const Cube& outer, const Cube& inner);

Cube dyadic_containing(int n, int k, unsigned shift, const Point& x);
int num_shifts(int n);  // 2^n lattice shifts

struct DyadicCover {
  unsigned shift = 0;
  Cube cube;
};
// Smallest dyadic cube from any shifted lattice that contains q; edge <= 6 l(q).
DyadicCover dyadic_cover(const Cube& q);

// Per-axis half-open range of cell indices whose midpoints lie in a cube.
struct CellRange {
  int n = 1;
  std::array<long, 2> lo{0, 0};
  std::array<long, 2> hi{0, 0};
  long count() const;
  bool inside(const Grid& g) const;  // all indices within [0, N)
};
CellRange cell_range(const Grid& g, const Cube& q, bool clip_to_box = true);
std::vector<std::size_t> cells_in(const Grid& g, const Cube& q);
std::size_t cell_of(const Grid& g, const Point& x);  // cell containing x (x inside the box)

// Scalar-valued grid function.
struct ScalarField {
  Grid grid;
  std::vector<double> values;
  explicit ScalarField(const Grid& g, double fill = 0.0) : grid(g), values(g.size(), fill) {}
  ScalarField(const Grid& g, std::vector<double> v);
  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }
  std::size_t size() const { return values.size(); }
};

// C^m-valued (real) grid function stored contiguously: sample i occupies [i*m, i*m+m).
struct VectorField {
  Grid grid;
  int m = 1;
  std::vector<double> values;
  VectorField(const Grid& g, int m_, double fill = 0.0) : grid(g), m(m_), values(g.size() * std::size_t(m_), fill) {}
  VectorField(const Grid& g, int m_, std::vector<double> v);
  double* at(std::size_t i) { return values.data() + i * std::size_t(m); }
  const double* at(std::size_t i) const { return values.data() + i * std::size_t(m); }
  double norm_at(std::size_t i) const;
  std::size_t size() const { return grid.size(); }
};

// Grid mask (subset of cells).
struct Mask {
  Grid grid;
  std::vector<std::uint8_t> values;
  explicit Mask(const Grid& g, bool fill = false) : grid(g), values(g.size(), fill ? 1 : 0) {}
  bool operator[](std::size_t i) const { return values[i] != 0; }
  void set(std::size_t i, bool v = true) { values[i] = v ? 1 : 0; }
  std::size_t count() const;
  bool empty() const { return count() == 0; }
};

template <class F>
ScalarField sample_scalar(const Grid& g, F&& fn) {
  ScalarField out(g);
  for (std::size_t i = 0; i < g.size(); ++i) out.values[i] = fn(g.midpoint(i));
  return out;
}

double integrate(const ScalarField& f, const Cube& q);
double average(const ScalarField& f, const Cube& q);
double integrate_box(const ScalarField& f);
double pair(const VectorField& f, const VectorField& phi);
double l2_norm(const VectorField& f);

}  // namespace hardylab
