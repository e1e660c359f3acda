#include "hardylab/linalg.hpp"

#include <algorithm>
#include <cmath>

#include "hardylab/errors.hpp"

namespace hardylab {

double spectral_norm(const double* M, int m) {
  if (m == 1) return std::abs(M[0]);
  if (m == 2) {
    const double a = M[0], c = M[1], b = M[2], d = M[3];
    const double S = a * a + b * b + c * c + d * d;
    const double D = a * d - b * c;
    const double disc = std::max(0.0, S * S - 4.0 * D * D);
    return std::sqrt(0.5 * (S + std::sqrt(disc)));
  }
  if (m == 3) {
    Eigen::Map<const Eigen::Matrix3d> A(M);
    Eigen::Matrix3d G = A.transpose() * A;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(G, Eigen::EigenvaluesOnly);
    return std::sqrt(std::max(0.0, es.eigenvalues()(2)));
  }
  Eigen::Map<const Mat> A(M, m, m);
  return spectral_norm(Mat(A));
}

void mat_mul(const double* A, const double* B, double* C, int m) {
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < m; ++i) {
      double s = 0.0;
      for (int k = 0; k < m; ++k) s += A[i + k * m] * B[k + j * m];
      C[i + j * m] = s;
    }
}

void mat_vec(const double* A, const double* x, double* y, int m) {
  for (int i = 0; i < m; ++i) {
    double s = 0.0;
    for (int k = 0; k < m; ++k) s += A[i + k * m] * x[k];
    y[i] = s;
  }
}

double euclid(const double* x, int m) {
  double s = 0.0;
  for (int i = 0; i < m; ++i) s += x[i] * x[i];
  return std::sqrt(s);
}

double spectral_norm(const Mat& M) {
  if (M.rows() <= 3 && M.rows() == M.cols()) return spectral_norm(M.data(), int(M.rows()));
  Eigen::JacobiSVD<Mat> svd(M);
  return svd.singularValues()(0);
}

Mat sym_sqrt(const Mat& S) {
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (S + S.transpose()));
  Vec ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  Mat R = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
  return 0.5 * (R + R.transpose());
}

Mat sym_inverse(const Mat& S) {
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (S + S.transpose()));
  Vec ev = es.eigenvalues().cwiseInverse();
  Mat R = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
  return 0.5 * (R + R.transpose());
}

double condition_number_spd(const Mat& S) {
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (S + S.transpose()), Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (!(lo > 0.0)) return std::numeric_limits<double>::infinity();
  return hi / lo;
}

std::vector<Vec> probe_mesh(int m, int count) {
  std::vector<Vec> out;
  if (m == 1) {
    out.push_back(Vec::Ones(1));
    return out;
  }
  if (m == 2) {
    for (int k = 0; k < count; ++k) {
      const double t = M_PI * double(k) / double(count);
      Vec v(2);
      v << std::cos(t), std::sin(t);
      out.push_back(v);
    }
    return out;
  }
  if (m == 3) {
    const int K = std::max(242, 242 * count / 64);
    const double golden = M_PI * (3.0 - std::sqrt(5.0));
    for (int k = 0; k < K; ++k) {
      const double z = 1.0 - 2.0 * (double(k) + 0.5) / double(K);
      const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
      const double phi = golden * double(k);
      Vec v(3);
      v << r * std::cos(phi), r * std::sin(phi), z;
      out.push_back(v);
    }
    return out;
  }
  throw Error(ErrorCode::ConfigInvalid, "probe meshes exist for m <= 3 only");
}

EllipsoidFit fit_norm_ellipsoid(const std::vector<Vec>& dirs, const std::vector<double>& norms, double tol) {
  const int K = int(dirs.size());
  const int m = int(dirs.front().size());
  for (int k = 0; k < K; ++k) {
    if (!(norms[k] > 0.0) || !std::isfinite(norms[k]))
      throw Error(ErrorCode::DegenerateNorm, "norm vanishes or is not finite on probe direction " + std::to_string(k));
  }
  EllipsoidFit fit;
  if (m == 1) {
    fit.A = Mat::Constant(1, 1, norms[0]);
    return fit;
  }
  std::vector<Vec> v(K);
  for (int k = 0; k < K; ++k) v[k] = dirs[k] / norms[k];

  // Minimum-volume centered ellipsoid {z : z^T M z <= 1} containing every v_k: minimize
  // -log det M - mu sum log(1 - v_k^T M v_k) over the m(m+1)/2 entries of M, by damped Newton,
  // decreasing mu until the barrier gap K mu is below tol.
  std::vector<std::pair<int, int>> ent;
  for (int a = 0; a < m; ++a)
    for (int b = a; b < m; ++b) ent.emplace_back(a, b);
  const int P = int(ent.size());
  auto basis = [&](int p_) {
    Mat E = Mat::Zero(m, m);
    E(ent[p_].first, ent[p_].second) = 1.0;
    E(ent[p_].second, ent[p_].first) = 1.0;
    return E;
  };
  std::vector<Mat> Eb(P);
  for (int q = 0; q < P; ++q) Eb[q] = basis(q);
  // a_kq = v_k^T E_q v_k
  Mat Akq(K, P);
  for (int k = 0; k < K; ++k)
    for (int q = 0; q < P; ++q) Akq(k, q) = v[k].dot(Eb[q] * v[k]);

  double vmax = 0.0;
  for (int k = 0; k < K; ++k) vmax = std::max(vmax, v[k].squaredNorm());
  Mat M = Mat::Identity(m, m) / (1.5 * vmax);
  auto objective = [&](const Mat& Mt, double mu, bool& ok) {
    ok = false;
    Eigen::LLT<Mat> llt(Mt);
    if (llt.info() != Eigen::Success) return 0.0;
    double ld = 0.0;
    for (int i = 0; i < m; ++i) ld += 2.0 * std::log(llt.matrixL()(i, i));
    double bar = 0.0;
    for (int k = 0; k < K; ++k) {
      const double sk = v[k].dot(Mt * v[k]);
      if (!(sk < 1.0)) return 0.0;
      bar += std::log(1.0 - sk);
    }
    ok = true;
    return -ld - mu * bar;
  };
  int it = 0;
  double mu = 1.0;
  const double mu_end = std::max(tol, 1e-15) / double(K);
  for (; it < 2000; ++it) {
    const Mat Mi = sym_inverse(M);
    Vec grad(P);
    Mat H(P, P);
    std::vector<Mat> MiE(P);
    for (int q = 0; q < P; ++q) MiE[q] = Mi * Eb[q];
    for (int q = 0; q < P; ++q) {
      grad[q] = -MiE[q].trace();
      for (int r = 0; r <= q; ++r) H(q, r) = H(r, q) = (MiE[q] * MiE[r]).trace();
    }
    for (int k = 0; k < K; ++k) {
      const double d = 1.0 - v[k].dot(M * v[k]);
      for (int q = 0; q < P; ++q) {
        grad[q] += mu * Akq(k, q) / d;
        for (int r = 0; r <= q; ++r) {
          const double t = mu * Akq(k, q) * Akq(k, r) / (d * d);
          H(q, r) += t;
          if (r != q) H(r, q) += t;
        }
      }
    }
    const Vec step = -H.ldlt().solve(grad);
    const double dec2 = -grad.dot(step);
    if (dec2 < 1e-12) {
      if (mu <= mu_end) break;
      mu = std::max(mu * 0.1, mu_end);
      continue;
    }
    Mat dM = Mat::Zero(m, m);
    for (int q = 0; q < P; ++q) dM += step[q] * Eb[q];
    bool ok = false;
    const double f0 = objective(M, mu, ok);
    double t = 1.0;
    for (int ls = 0; ls < 60; ++ls, t *= 0.5) {
      const Mat Mt = M + t * dM;
      const double f1 = objective(Mt, mu, ok);
      if (ok && f1 <= f0 - 0.25 * t * dec2) break;
      ok = false;
    }
    if (!ok) {
      if (mu <= mu_end) break;
      mu = std::max(mu * 0.1, mu_end);
      continue;
    }
    M += t * dM;
    M = 0.5 * (M + M.transpose());
  }
  fit.iterations = it;
  Mat A0 = sym_sqrt(M);
  double rmin = 1e300, rmax = 0.0;
  std::vector<double> r(K);
  for (int k = 0; k < K; ++k) {
    r[k] = (A0 * dirs[k]).norm() / norms[k];
    rmin = std::min(rmin, r[k]);
    rmax = std::max(rmax, r[k]);
  }
  fit.A = A0 / rmin;
  fit.A = 0.5 * (fit.A + fit.A.transpose());
  fit.min_ratio = 1e300;
  fit.max_ratio = 0.0;
  for (int k = 0; k < K; ++k) {
    const double q = (fit.A * dirs[k]).norm() / norms[k];
    fit.min_ratio = std::min(fit.min_ratio, q);
    fit.max_ratio = std::max(fit.max_ratio, q);
  }
  if (fit.min_ratio < 1.0) {
    fit.A /= fit.min_ratio;
    fit.max_ratio /= fit.min_ratio;
    fit.min_ratio = 1.0;
  }
  return fit;
}

}  // namespace hardylab
