#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "hardylab/grid.hpp"
#include "hardylab/linalg.hpp"
#include "hardylab/vexp.hpp"

namespace hardylab {

// Weight families, all symmetric positive definite at every cell midpoint:
//   identity                        I
//   constant(entries, column-major) fixed SPD matrix
//   scalar_power(a)                 |x|^a I
//   diag_power(a_1..a_m)            diag(|x|^{a_i})
//   rotated_diag(theta, a1, a2)     R_theta diag(|x|^{a1}, |x|^{a2}) R_theta^T      (m = 2)
//   bump_conjugated(t0, w, d1, d2)  R(t(x)) diag(d1, d2) R(t(x))^T, t(x) = t0 exp(-|x|^2/w^2)   (m = 2)
struct WeightSpec {
  std::string preset = "identity";
  std::vector<double> params;
  int m = 2;

  static WeightSpec identity(int m);
  static WeightSpec constant(const Mat& A);
  static WeightSpec scalar_power(int m, double a);
  static WeightSpec diag_power(std::vector<double> a);
  static WeightSpec rotated_diag(double theta, double a1, double a2);
  static WeightSpec bump_conjugated(double theta0, double width, double d1, double d2);

  void validate() const;  // throws ConfigInvalid
  Mat at(const Point& x, int n) const;
  bool is_constant() const { return preset == "identity" || preset == "constant"; }
  std::vector<double> power_exponents() const;
  // |a_i| < n / p_minus for every power exponent.
  bool class_guard(int n, double p_minus) const;
  std::string label() const;
};

class MatrixWeight {
 public:
  MatrixWeight(const WeightSpec& spec, const Grid& g);
  // Column-major m x m samples; every sample is checked (SingularSample on failure).
  static MatrixWeight from_samples(const Grid& g, int m, std::vector<double> samples, std::string label);

  const Grid& grid() const { return grid_; }
  int m() const { return m_; }
  const std::string& label() const { return label_; }
  bool has_spec() const { return has_spec_; }
  const WeightSpec& spec() const { return spec_; }
  bool is_constant() const { return constant_; }

  const double* W(std::size_t i) const { return w_.data() + i * std::size_t(m_ * m_); }
  const double* Winv(std::size_t i) const { return winv_.data() + i * std::size_t(m_ * m_); }
  double norm(std::size_t i) const { return norm_[i]; }
  double inv_norm(std::size_t i) const { return inv_norm_[i]; }
  Mat matrix(std::size_t i) const;
  Mat inverse_matrix(std::size_t i) const;
  // Preset formula when available, otherwise the containing cell's sample (x inside the box).
  Mat at(const Point& x) const;

  MatrixWeight inverse() const;  // W^{-1} as a weight on the same grid

 private:
  MatrixWeight(const Grid& g, int m) : grid_(g), m_(m) {}
  void finish();

  Grid grid_;
  int m_ = 1;
  std::string label_;
  WeightSpec spec_;
  bool has_spec_ = false;
  bool constant_ = false;
  bool inverted_ = false;
  std::vector<double> w_, winv_, norm_, inv_norm_;
};

// Catalog for weight characteristics: dyadic cubes of every shifted lattice lying inside the box
// with edges 2 L_box 2^{-4} ... 2 L_box, then `random_count` seeded cubes inside the box with edges
// in [2 L_box / 32, L_box]. Cubes with fewer than 2^n midpoints or more than `max_cells` are dropped.
std::vector<Cube> characteristic_catalog(const Grid& g, std::uint64_t seed = 0, int random_count = 200,
                                         std::size_t max_cells = 0);
// Every dyadic cube of every shifted lattice with h <= edge <= 2 L_box meeting the box.
std::vector<Cube> maximal_catalog(const Grid& g);

struct CatalogMax {
  double value = 0.0;
  std::size_t argmax = 0;
};

double ap_on_cube(const MatrixWeight& W, const ExponentProfile& p, const Cube& q);
double apinfty_on_cube(const MatrixWeight& W, const ExponentProfile& p, const Cube& q);
CatalogMax ap_characteristic(const MatrixWeight& W, const ExponentProfile& p, const std::vector<Cube>& catalog);
CatalogMax apinfty_characteristic(const MatrixWeight& W, const ExponentProfile& p, const std::vector<Cube>& catalog);

// N_Q(z) = vnorm(|W z| 1_Q, p) / vnorm(1_Q, p).
double reduced_norm(const MatrixWeight& W, const ExponentProfile& p, const std::vector<std::size_t>& cells,
                    const double* z);
using ReducingOperator = EllipsoidFit;
ReducingOperator reducing_operator(const MatrixWeight& W, const ExponentProfile& p, const Cube& q, int mesh_count = 64);
ReducingOperator reducing_operator(const MatrixWeight& W, const ExponentProfile& p,
                                   const std::vector<std::size_t>& cells, int mesh_count = 64);
std::vector<ReducingOperator> reducing_operators(const MatrixWeight& W, const ExponentProfile& p,
                                                 const std::vector<Cube>& cubes);

// ||A_Q M|| / (vnorm(||W M|| 1_Q, p) / vnorm(1_Q, p)).
double reducing_matrix_norm_check(const Mat& A, const MatrixWeight& W, const ExponentProfile& p, const Cube& q,
                                  const Mat& M);

struct Dimensions {
  double d1 = 0.0;
  double d2 = 0.0;
};
Dimensions weight_dimensions(const MatrixWeight& W, const ExponentProfile& p, const std::vector<Cube>& catalog,
                             const std::vector<double>& lambdas, double apinfty_char);

double qp5_check(const MatrixWeight& W, const ExponentProfile& p, const std::vector<std::pair<Cube, Cube>>& pairs,
                 double d1, double d2);

double reverse_holder_ratio(const MatrixWeight& W, const ExponentProfile& p, double r, const std::vector<Cube>& catalog,
                            const std::vector<Mat>& M_list);
struct ReverseHolderResult {
  double ratio = 0.0;         // at the base resolution
  double ratio_refined = 0.0; // one refinement finer
  bool pass = false;          // finite and growth <= 10%
};
ReverseHolderResult reverse_holder_check(const WeightSpec& ws, const ExponentSpec& ps, const Grid& g, double r,
                                         const std::vector<Cube>& catalog, const std::vector<Mat>& M_list);

struct AlphaU {
  double alpha = 1.0;
  double u = 0.5;
  double sup_average = 0.0;  // sup_Q avg_Q ||W^{-1} A_Q||^{2 alpha} at the chosen alpha
};
AlphaU select_alpha_u(const MatrixWeight& W, const ExponentProfile& p, const std::vector<Cube>& catalog,
                      double budget = 100.0);
AlphaU select_alpha_u(const MatrixWeight& W, const ExponentProfile& p, const std::vector<Cube>& catalog,
                      const std::vector<ReducingOperator>& ops, double budget = 100.0);

struct WeightCertificate {
  std::string weight_label;
  std::string exponent_label;
  double ap_char = 1.0;
  double apinfty_char = 1.0;
  double d1 = 0.0;
  double d2 = 0.0;
  double Delta = 0.0;
  double r_W = 1.0;
  double alpha = 1.0;
  double u = 0.5;
  double fit_max_ratio = 1.0;  // worst |A_Q z| / N_Q(z) over catalog and mesh
  bool class_guard = true;
  std::size_t catalog_size = 0;
};

struct CertifyOptions {
  std::uint64_t seed = 0;
  int random_cubes = 200;
  std::size_t max_cells = 0;  // 0: no limit
  std::vector<double> lambdas{2.0, 4.0, 8.0};
  std::vector<double> r_ladder{1.05, 1.1, 1.25, 1.5, 2.0};
  double alpha_budget = 100.0;
};
WeightCertificate certify_weight(const WeightSpec& ws, const ExponentSpec& ps, const Grid& g,
                                 const CertifyOptions& opt = {});

}  // namespace hardylab
