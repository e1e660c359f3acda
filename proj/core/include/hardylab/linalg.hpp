#pragma once

#include <Eigen/Dense>
#include <vector>

namespace hardylab {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// Raw small-matrix kernels on column-major m x m storage (m <= 3 in practice).
double spectral_norm(const double* M, int m);
void mat_mul(const double* A, const double* B, double* C, int m);
void mat_vec(const double* A, const double* x, double* y, int m);
double euclid(const double* x, int m);

double spectral_norm(const Mat& M);
Mat sym_sqrt(const Mat& S);
Mat sym_inverse(const Mat& S);
double condition_number_spd(const Mat& S);

// Direction meshes on the unit sphere of R^m: m = 1 {1}; m = 2 `count` angles over [0, pi);
// m = 3 a 242-point Fibonacci sphere (scaled by `count`/64 when refined).
std::vector<Vec> probe_mesh(int m, int count = 64);

// Centered minimum-volume ellipsoid containing +-z_k/N(z_k), rescaled so that
// N(z_k) <= |A z_k| on every mesh direction with equality at the tightest one.
struct EllipsoidFit {
  Mat A;
  double min_ratio = 1.0;  // min_k |A z_k| / N(z_k)
  double max_ratio = 1.0;  // max_k |A z_k| / N(z_k)
  int iterations = 0;
};
EllipsoidFit fit_norm_ellipsoid(const std::vector<Vec>& dirs, const std::vector<double>& norms, double tol = 1e-9);

}  // namespace hardylab
