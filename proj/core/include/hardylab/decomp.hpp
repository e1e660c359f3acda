#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "hardylab/convexbody.hpp"
#include "hardylab/grid.hpp"
#include "hardylab/maximal.hpp"
#include "hardylab/testfun.hpp"
#include "hardylab/vexp.hpp"
#include "hardylab/weights.hpp"

namespace hardylab {

// Maximal dyadic cubes L of one lattice with 9L inside E (midpoint semantics: every cell of the
// unclipped 9L lies in the grid and in E), selected coarse to fine down to edge l_min.
struct StoppingCollection {
  Grid grid;
  unsigned shift = 0;
  std::vector<Cube> cubes;
  Mask E;
  double l_min = 0.0;
  std::size_t uncovered = 0;  // cells of E outside every selected cube
  explicit StoppingCollection(const Grid& g) : grid(g), E(g) {}
};

// l_min = 0 means h. Throws NotOpen when require_open is set and some cell of E stays uncovered.
StoppingCollection whitney_stopping(const Mask& E, unsigned shift, double l_min = 0.0, bool require_open = false);
// Cells within `radius` cells of E in every axis (cube neighbourhood).
Mask dilate_mask(const Mask& E, long radius);
// Cells covered by the stopping cubes.
Mask covered_mask(const StoppingCollection& S);

struct StoppingReport {
  bool disjoint = true;
  bool covers = true;       // union of L inside E, and every uncovered cell of E admits no cube of edge >= l_min
  bool nine_inside = true;  // every 9L inside E
  bool escapes = true;      // 32L meets the complement of E (or leaves the box)
  bool scale_gap = true;    // 7L meets 7L' implies |s_L - s_L'| < 8
  bool premise = false;     // |3Q_k cap E| < 2^{-4n}|Q_k| for every parent
  bool parents_ok = true;   // when the premise holds: L* meets Q_k* implies 32L in 3Q_k and 32L meets 3Q_k \ E
  std::size_t uncovered = 0;
  bool ok() const { return disjoint && covers && nine_inside && escapes && scale_gap && parents_ok; }
};
StoppingReport check_stopping(const StoppingCollection& S, const std::vector<Cube>& parents = {});
// |3Q cap E| < 2^{-4n}|Q| for every Q.
bool measure_premise(const Mask& E, const std::vector<Cube>& parents);

// Largest count of lattice cubes Q' with 7Q cap 7Q' nonempty and |s_Q - s_Q'| < 8, maximized over the
// position of Q and over lattice shifts. Exact.
long ccap_count(int n);

struct LocalBump {
  Cube L;
  std::vector<std::size_t> cells;  // cells of L*
  std::vector<double> eta;         // eta_L on those cells
  double integral = 0.0;
};
struct PartitionOfUnity {
  std::vector<LocalBump> bumps;
  double c_eta = 1.0;      // min integral / |L|
  double max_ratio = 1.0;  // max integral / |L|
  double grad_bound = 0.0; // max l(L) |finite-difference gradient of eta_L|
};
// Smoothed indicators of L (separable bump CDF at scale l/16, vanishing off L*), normalized on E.
PartitionOfUnity partition_of_unity(const StoppingCollection& S);
// 1_L convolved with the product bump at scale r, evaluated at x.
double mollified_indicator(const Cube& L, double r, const Point& x);

// Orthonormal basis of polynomials of degree <= s in y = (x - c_L)/l(L) for <f, g> = sum h^n f g eta/int(eta).
struct PolyBasis {
  Cube L;
  int n = 1;
  int s = 0;
  std::vector<std::array<int, 2>> betas;
  Mat C;                           // e_i = sum_j C(i, j) y^{beta_j}
  std::vector<std::size_t> cells;  // support of the weight
  std::vector<double> weight;      // h^n eta / int eta on cells
  Mat values;                      // cells x M samples of e_i
  double gram_condition = 1.0;
  double orthonormality_error = 0.0;
  double derivative_bound = 0.0;   // sup |d^a e_i| l^{|a|} over the cells
  std::size_t size() const { return betas.size(); }
  double eval(std::size_t i, const Point& x) const;
};
// Throws IllConditioned when the monomial Gram condition exceeds 1e10.
PolyBasis poly_basis(const Grid& g, const Cube& L, const std::vector<std::size_t>& cells,
                     const std::vector<double>& eta, int s);

// P_L(h) on the basis cells for local samples vals (cells x m).
std::vector<double> project_local(const PolyBasis& B, const std::vector<double>& vals, int m);
// P_L(h) on the basis cells (cells x m).
std::vector<double> projection_PL(const VectorField& h, const PolyBasis& B);
// max_i |<h - P_L h, e_i eta~>| / ||h||_{L^1(L*)}.
double projection_residual(const VectorField& h, const PolyBasis& B);

struct LevelSetResult {
  Mask E;
  double threshold = 0.0;
  int doublings = 0;
  double seed = 0.0;
};
// |M3Q^{-1} B(x)| for x in 3Q (clipped cells).
std::vector<double> level_values(const BodyField& B, const Cube& Q, const Mat& M3Q);
// {x in 3Q : |M3Q^{-1} B(x)| > C}, with C doubled from the u-average until |E_Q| < target.
LevelSetResult level_set(const BodyField& B, const Cube& Q, const Mat& M3Q, double u, double target);
LevelSetResult level_set_at(const BodyField& B, const Cube& Q, const Mat& M3Q, double threshold);

struct AtomRecord {
  int level = 0;
  Cube Q;        // stopping cube
  Cube support;  // 3Q
  double lambda = 0.0;
  double threshold = 0.0;
  std::vector<std::size_t> cells;  // sorted
  std::vector<double> values;      // normalized atom, cells x m
  bool null() const { return cells.empty(); }
};

struct LevelDiagnostics {
  int k = 0;
  std::size_t cubes = 0;         // |F_k|
  std::size_t E_cells = 0;       // |E_k| in cells
  std::size_t raw_cells = 0;     // union of the level sets before widening
  std::size_t dropped_cells = 0; // raw cells not covered by stopping cubes of edge >= l_min
  double threshold_min = 0.0;
  double threshold_max = 0.0;
  bool premise_ok = true;        // |E_{k+1} cap 3Q| < 2^{-4n}|Q| for Q in F_k
  bool stopping_ok = true;
  double residual_l2 = 0.0;      // ||f - partial reconstruction through level k||
};

// Relative sup below which a level piece counts as roundoff.
inline constexpr double kNullPiece = 1e-11;

struct DecompOptions {
  int s = 0;
  int K_levels = 6;
  std::string measure_rule = "strict";  // strict | premise
  MaximalParams maximal{};
  bool throw_on_resolution = false;
  double eps_override = 0.0;            // > 0 replaces the dyadic choice of eps
};

struct Decomposition {
  Grid grid;
  int m = 1;
  int s = 0;
  unsigned shift = 0;
  Cube Q0;
  double eps = 0.0;
  double L_dec = 0.0;
  double u = 0.5;
  long ccap = 0;
  double l_min = 0.0;
  std::string measure_rule;
  std::vector<std::vector<Cube>> levels;  // F_0 = {Q0}, F_1, ...
  std::vector<AtomRecord> atoms;
  VectorField residual;
  std::vector<LevelDiagnostics> diagnostics;
  double f_l2 = 0.0;
  double input_moment_max = 0.0;
  bool resolution_exhausted = false;
  std::size_t null_pieces = 0;   // pieces below kNullPiece ||f||_inf, emitted as zero atoms (lambda = 0)
  double null_piece_max = 0.0;
  // worst basis and projection figures over every cube of every level
  double basis_orthonormality = 0.0;
  double basis_reproduction = 0.0;
  double projection_moment = 0.0;
  double gram_condition_max = 1.0;
  double c_eta = 1.0;
  Decomposition(const Grid& g, int m_) : grid(g), m(m_), residual(g, m_) {}
  bool empty() const { return atoms.empty(); }
  std::size_t atom_count(int level) const;
};

Decomposition atomic_decompose(const VectorField& f, const MatrixWeight& W, const ExponentProfile& p,
                               const TestFunctionCatalog& cat, const WeightCertificate& cert,
                               const DecompOptions& opt = {});

struct AtomReport {
  bool support_ok = true;
  double moment_max = 0.0;  // relative to the L^1 mass, monomials scaled by the support edge
  bool moment_ok = true;
  double C_A = 0.0;         // sup |A_Q a| vnorm(1_Q)
  double C_W = 0.0;         // sup_x vnorm(|W(.) a(x)| 1_Q)
  bool size_ok = true;
  bool ok() const { return support_ok && moment_ok && size_ok; }
};
AtomReport validate_atom(const AtomRecord& a, const MatrixWeight& W, const ExponentProfile& p, int s,
                         double C_atom = std::numeric_limits<double>::infinity(), double moment_tol = 1e-8);

double coefficient_norm(const std::vector<double>& lambda, const std::vector<Cube>& cubes, const Grid& g, double r,
                        const ExponentProfile& p);
double coefficient_norm(const Decomposition& d, double r, const ExponentProfile& p);

// Sum of lambda a over atoms of level <= up_to_level (-1: all).
VectorField reconstruct(const Decomposition& d, int up_to_level = -1);
double relative_l2_error(const VectorField& approx, const VectorField& f);

struct FsFamily {
  std::vector<double> lambda;
  std::vector<Cube> cubes;
  std::vector<VectorField> a;  // bounded, supported in the cube
};
std::vector<FsFamily> random_fs_families(const Grid& g, int m, int count, std::uint64_t seed);
struct FsReport {
  std::vector<double> ratio_decay;  // f-dec display
  std::vector<double> ratio_atom;   // a-atom display
  double max_decay = 0.0;
  double max_atom = 0.0;
  double L = 0.0;
  bool finite = true;
};
FsReport fs_substitute_checks(const MatrixWeight& W, const ExponentProfile& p, const WeightCertificate& cert,
                              const std::vector<FsFamily>& families, double q = 2.0);

}  // namespace hardylab
