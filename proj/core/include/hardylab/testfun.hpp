#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "hardylab/grid.hpp"

namespace hardylab {

// Truncated multivariate Taylor polynomial in n <= 2 variables, total degree <= d.
class Jet {
 public:
  Jet(int n, int d) : n_(n), d_(d), c_(std::size_t((d + 1) * (d + 1)), 0.0) {}
  static Jet constant(int n, int d, double v);
  static Jet variable(int n, int d, int axis, double x0);

  int n() const { return n_; }
  int degree() const { return d_; }
  double& at(int a, int b = 0) { return c_[std::size_t(a * (d_ + 1) + b)]; }
  double at(int a, int b = 0) const { return c_[std::size_t(a * (d_ + 1) + b)]; }
  double value() const { return c_[0]; }
  // Partial derivative d^{a+b} / dx^a dy^b at the expansion point.
  double derivative(int a, int b = 0) const;

  Jet operator+(const Jet& o) const;
  Jet operator-(const Jet& o) const;
  Jet operator*(const Jet& o) const;
  Jet operator*(double s) const;

 private:
  int n_;
  int d_;
  std::vector<double> c_;
};

Jet jet_exp(const Jet& h);
Jet jet_reciprocal(const Jet& u);

// Normalizing constant of the base bump exp(-1/(1-|x|^2)) 1_{|x|<1}.
double bump_constant(int n);
// Jet of x^beta psi_0(x) at x0, degree d.
Jet member_jet(int n, const std::array<int, 2>& beta, const Point& x0, int d);
// Jet of the unnormalized bump exp(-1/(1-|x|^2)) at x0.
Jet bump_jet(int n, const Point& x0, int d);

struct TestMember {
  std::array<int, 2> beta{0, 0};
  double factor = 1.0;        // multiplier applied to x^beta psi_0
  double raw_seminorm = 0.0;  // seminorm before normalization
};

// Finite surrogate for the Schwartz seminorm ball: {x^beta psi_0 : |beta| <= N}, each scaled so that
// sup (1+|x|)^{N+n+1} |d^a phi| <= 1 over |a| <= N+1 on a reference grid.
class TestFunctionCatalog {
 public:
  TestFunctionCatalog(int n, int N, int reference_points = 0);

  int n() const { return n_; }
  int N() const { return N_; }
  std::size_t size() const { return members_.size(); }
  const TestMember& member(std::size_t k) const { return members_[k]; }
  // Sub-catalog holding only the first `count` members.
  TestFunctionCatalog truncated(std::size_t count) const;

  double value(std::size_t k, const Point& x) const;
  // Seminorm of member k estimated on the reference grid (after normalization).
  double seminorm(std::size_t k) const;
  // Seminorm sup (1+|x|)^{N+n+1}|d^a phi| of an arbitrary member-like scalar jet function.
  double seminorm_of(const std::array<int, 2>& beta, double factor) const;

 private:
  int n_;
  int N_;
  int ref_;
  std::vector<TestMember> members_;
};

// Samples of t^{-n} phi_k((x - c) / t) on the grid.
ScalarField sample_member(const TestFunctionCatalog& cat, std::size_t k, const Grid& g, const Point& c, double t);

// Discrete moments: m-vector of sum h^n f(x) (x - c)^gamma for every |gamma| <= s.
std::vector<double> moments(const VectorField& f, int s, const Point& c = {0.0, 0.0});
std::vector<std::array<int, 2>> multi_indices(int n, int s);  // |gamma| <= s, graded order

// Subtracts a polynomial times a bump of radius R at c so all discrete moments up to order s vanish.
void remove_moments(VectorField& f, int s, const Point& c, double R);

struct SuiteOptions {
  int count = 10;
  std::uint64_t seed = 1;
  int s = 0;                 // vanishing moment order (moment-free suites)
  double support_frac = 0.75;
};
// Compactly supported C^infty moment-free vector functions: derivatives of scaled bumps of order s+1
// with random amplitudes, followed by exact discrete moment removal.
std::vector<VectorField> moment_free_suite(const Grid& g, int m, const SuiteOptions& opt);
// Smooth random bumps (not moment-free).
std::vector<VectorField> smooth_suite(const Grid& g, int m, const SuiteOptions& opt);

}  // namespace hardylab
