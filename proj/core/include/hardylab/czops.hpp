#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "hardylab/decomp.hpp"
#include "hardylab/grid.hpp"
#include "hardylab/testfun.hpp"
#include "hardylab/vexp.hpp"
#include "hardylab/weights.hpp"

namespace hardylab {

enum class KernelKind { hilbert, riesz1, riesz2 };

// Odd convolution kernels: hilbert 1/(pi (x-y)) on the line, riesz_j (x_j-y_j)/(2 pi |x-y|^3) in the plane.
struct Kernel {
  KernelKind kind = KernelKind::hilbert;
  int n = 1;
  double delta = 1.0;
  std::string name() const;
  double operator()(const Point& x, const Point& y) const;
  // d^gamma_x K(x, y); closed form for |gamma| <= 2, central differences of the order-2 form beyond.
  double derivative(const std::array<int, 2>& gamma, const Point& x, const Point& y) const;
};
Kernel make_kernel(const std::string& name);  // hilbert | riesz_1 | riesz_2; throws ConfigInvalid

struct KernelConstants {
  std::vector<double> size;  // per order |gamma| = 0..gamma_max: sup |d^gamma K| |x-y|^{n+|gamma|}
  double holder = 0.0;       // sup |K(x,y) - K(x',y)| |x-y|^{n+delta} / |x-x'|^delta over |x-x'| <= |x-y|/2
  double antisymmetry = 0.0; // sup |K(x,y) + K(y,x)|
};
KernelConstants kernel_certify(const Kernel& K, int gamma_max, int samples = 2000, std::uint64_t seed = 7);

struct CZOperator {
  Kernel kernel;
  double trunc = 0.0;  // pairs with |x-y| < trunc are dropped; 0 drops only the diagonal cell
};

// Principal-value midpoint quadrature, componentwise.
VectorField apply(const CZOperator& T, const VectorField& f);
ScalarField apply(const CZOperator& T, const ScalarField& f);
// T f at an arbitrary point x (no diagonal handling; meant for points away from the support).
void apply_at(const CZOperator& T, const VectorField& f, const Point& x, double* out);

struct DecayFit {
  double slope = 0.0;
  double intercept = 0.0;
  std::size_t radii = 0;  // dyadic radii with nonzero envelope
  std::vector<double> radius;
  std::vector<double> envelope;
  bool empty = true;
};
// Envelope of |W(x) T a(x)| / (||W(x) A_Q^{-1}|| / vnorm(1_Q)) on dyadic annuli 4 r_Q 2^j, j < far_levels,
// evaluated off the grid where needed, fitted in log-log. InsufficientFarField when far_levels < 8.
DecayFit atom_image_decay(const CZOperator& T, const AtomRecord& a, const MatrixWeight& W, const ExponentProfile& p,
                          int far_levels = 11, int points_per_annulus = 8);

struct MomentCheck {
  double worst = 0.0;      // max_gamma |moment of T a over the box| minus the allowance, relative (<= 0 passes)
  double tail = 0.0;       // truncation estimate for the worst gamma
  bool pass = true;
};
// |int x^gamma T f| over the box against 4 x (tail beyond the box under the decay n+s+1) + 1e-6 scale.
MomentCheck moment_preservation(const VectorField& Tf, const Point& c, int s, double tol = 1e-6);

struct CzRow {
  double hl = 0.0;     // vnorm(|W T f|) / hardy_norm(f)
  double hh = 0.0;     // hardy_norm(T f) / hardy_norm(f), when the moment check passes
  bool moments_ok = false;
  double moment_worst = 0.0;
};
struct CzBench {
  std::vector<CzRow> rows;
  double max_hl = 0.0;
  double max_hh = 0.0;
};
CzBench cz_bench(const CZOperator& T, const MatrixWeight& W, const ExponentProfile& p,
                 const std::vector<VectorField>& suite, const TestFunctionCatalog& cat, int s);

// max over cubes of (|Q| / vnorm(1_Q)) (avg_Q |A_Q^{-1}(g - Pi_Q g)|^q)^{1/q}, Pi_Q the L^2(Q) projection
// onto polynomials of degree <= s.
double campanato_norm(const VectorField& g, const MatrixWeight& W, const ExponentProfile& p, double q, int s,
                      const std::vector<Cube>& cubes);
double campanato_norm(const VectorField& g, const ExponentProfile& p, double q, int s, const std::vector<Cube>& cubes,
                      const std::vector<ReducingOperator>& ops);

struct DualityReport {
  std::vector<double> ratios;
  double max_ratio = 0.0;
  std::size_t cancellations = 0;  // pairs with vanishing numerator and denominator
};
DualityReport duality_pairing_check(const std::vector<VectorField>& fs, const std::vector<VectorField>& gs,
                                    const MatrixWeight& W, const ExponentProfile& p, double q, int s,
                                    const TestFunctionCatalog& cat, const std::vector<Cube>& cubes);

}  // namespace hardylab
