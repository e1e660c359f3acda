#include <gtest/gtest.h>

#include <cmath>

#include "hardylab/rng.hpp"
#include "hardylab/weights.hpp"

using namespace hardylab;

namespace {

Mat spd2() {
  Mat A(2, 2);
  A << 2.0, 0.5, 0.5, 1.0;
  return A;
}

struct Fixture1D {
  Grid g{1, 8, 4.0};
  ExponentProfile p2 = ExponentProfile::constant(g, 2.0);
};

}  // namespace

TEST(WeightSpec, Validation) {
  EXPECT_NO_THROW(WeightSpec::identity(2).validate());
  WeightSpec w = WeightSpec::identity(2);
  w.preset = "spiral";
  EXPECT_THROW(w.validate(), Error);
  Mat nonsym(2, 2);
  nonsym << 1.0, 0.3, 0.0, 1.0;
  EXPECT_THROW(WeightSpec::constant(nonsym).validate(), Error);
  Mat indef(2, 2);
  indef << 1.0, 0.0, 0.0, -1.0;
  EXPECT_THROW(WeightSpec::constant(indef).validate(), Error);
}

TEST(MatrixWeight, SamplesAreSymmetricPositiveDefinite) {
  const Grid g(1, 8, 4.0);
  for (const WeightSpec& ws : {WeightSpec::rotated_diag(M_PI / 6, 0.5, 0.25), WeightSpec::bump_conjugated(1.0, 1.0, 1.0, 3.0),
                               WeightSpec::diag_power({0.5, 0.25})}) {
    const MatrixWeight W(ws, g);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const Mat A = W.matrix(i);
      EXPECT_LE((A - A.transpose()).norm(), 1e-12);
      EXPECT_GT(Eigen::SelfAdjointEigenSolver<Mat>(A).eigenvalues().minCoeff(), 0.0);
      EXPECT_LE((A * W.inverse_matrix(i) - Mat::Identity(2, 2)).norm(), 1e-10);
    }
  }
}

TEST(MatrixWeight, FromSamplesRejectsSingular) {
  const Grid g(1, 4, 1.0);
  std::vector<double> s(g.size() * 4, 0.0);
  EXPECT_THROW(MatrixWeight::from_samples(g, 2, s, "zero"), Error);
}

TEST(Characteristics, IdentityAndConstantAreOne) {
  Fixture1D F;
  const auto cat = characteristic_catalog(F.g, 3, 40);
  for (const WeightSpec& ws : {WeightSpec::identity(2), WeightSpec::constant(spd2())}) {
    const MatrixWeight W(ws, F.g);
    EXPECT_NEAR(ap_characteristic(W, F.p2, cat).value, 1.0, 1e-6);
    EXPECT_NEAR(apinfty_characteristic(W, F.p2, cat).value, 1.0, 1e-6);
  }
}

TEST(Characteristics, ScalarPowerSpotValue) {
  // exp(avg_y log((avg_x x)^{1/2} / y^{1/2})) on [0, 1] = e^{1/2} / sqrt 2
  Fixture1D F;
  const MatrixWeight W(WeightSpec::scalar_power(1, 0.5), F.g);
  EXPECT_NEAR(apinfty_on_cube(W, F.p2, Cube(1, {0.5, 0.0}, 1.0)) / (std::exp(0.5) / std::sqrt(2.0)), 1.0, 0.02);
}

TEST(Characteristics, ScalarPowerApStableUnderRefinement) {
  double v[2];
  for (int r = 0; r < 2; ++r) {
    const Grid g(1, 8 + r, 4.0);
    const MatrixWeight W(WeightSpec::scalar_power(1, 0.5), g);
    v[r] = ap_characteristic(W, ExponentProfile::constant(g, 2.0), characteristic_catalog(g, 1, 40)).value;
    EXPECT_TRUE(std::isfinite(v[r]));
  }
  EXPECT_LT(std::abs(v[1] / v[0] - 1.0), 0.1);
}

TEST(ReducingOperator, ScaledIdentity) {
  Fixture1D F;
  Mat c = 3.0 * Mat::Identity(2, 2);
  const MatrixWeight W(WeightSpec::constant(c), F.g);
  const ReducingOperator A = reducing_operator(W, F.p2, Cube(1, {0.3, 0.0}, 1.5));
  EXPECT_LE((A.A - c).norm(), 1e-6);
}

TEST(ReducingOperator, ScalarAgreesWithNormRatio) {
  Fixture1D F;
  const ExponentProfile p = ExponentProfile::realize(ExponentSpec::smooth_step(1, 2, 0.5), F.g);
  const MatrixWeight W(WeightSpec::scalar_power(1, 0.5), F.g);
  for (const Cube q : {Cube(1, {0.5, 0.0}, 1.0), Cube(1, {-1.2, 0.0}, 2.5)}) {
    const ReducingOperator A = reducing_operator(W, p, q);
    const auto cells = cells_in(F.g, q);
    ScalarField w1q(F.g);
    for (auto i : cells) w1q[i] = W.norm(i);
    const double want = vnorm(w1q, p) / vnorm_indicator(p, q);
    EXPECT_NEAR(A.A(0, 0) / want, 1.0, 1e-9);
  }
}

TEST(ReducingOperator, DiagonalWeightQuadrature) {
  // W = diag(1, |x|), Q = [1, 2], p = 2: A_Q = diag(1, (avg x^2)^{1/2}) = diag(1, sqrt(7/3))
  Fixture1D F;
  const MatrixWeight W(WeightSpec::diag_power({0.0, 1.0}), F.g);
  const ReducingOperator A = reducing_operator(W, F.p2, Cube(1, {1.5, 0.0}, 1.0));
  EXPECT_NEAR(A.A(0, 0), 1.0, 1e-3);
  EXPECT_NEAR(A.A(1, 1), std::sqrt(7.0 / 3.0), 1e-3);
  EXPECT_NEAR(A.A(0, 1), 0.0, 1e-3);
}

TEST(ReducingOperator, BracketOnProbeMesh) {
  Fixture1D F;
  const ExponentProfile p = ExponentProfile::realize(ExponentSpec::log_decay(2, 1), F.g);
  const MatrixWeight W(WeightSpec::rotated_diag(M_PI / 6, 0.5, 0.25), F.g);
  const Cube q(1, {0.6, 0.0}, 1.0);
  const ReducingOperator A = reducing_operator(W, p, q);
  const auto cells = cells_in(F.g, q);
  // a finer mesh than the fit used
  for (const Vec& z : probe_mesh(2, 256)) {
    const double N = reduced_norm(W, p, cells, z.data());
    const double Az = (A.A * z).norm();
    EXPECT_GE(Az, N * (1.0 - 1e-3));
    EXPECT_LE(Az, std::sqrt(2.0) * 1.001 * N);
  }
}

TEST(ReducingOperator, MatrixNormCheck) {
  Fixture1D F;
  const Cube q(1, {0.5, 0.0}, 1.0);
  const MatrixWeight I(WeightSpec::identity(2), F.g);
  const ReducingOperator AI = reducing_operator(I, F.p2, q);
  EXPECT_NEAR(reducing_matrix_norm_check(AI.A, I, F.p2, q, Mat::Identity(2, 2)), 1.0, 1e-6);

  const MatrixWeight W(WeightSpec::diag_power({0.5, 0.25}), F.g);
  const ReducingOperator A = reducing_operator(W, F.p2, q);
  const double r = reducing_matrix_norm_check(A.A, W, F.p2, q, A.A.inverse());
  EXPECT_GT(r, 0.5);
  EXPECT_LT(r, 2.0);
  CounterRng rng(9);
  for (int t = 0; t < 5; ++t) {
    Mat M(2, 2);
    for (int i = 0; i < 4; ++i) M.data()[i] = rng.normal();
    const double v = reducing_matrix_norm_check(A.A, W, F.p2, q, M);
    EXPECT_GE(v, 0.5 - 1e-9);  // 1/m
    EXPECT_LE(v, std::sqrt(2.0) * 1.001);
  }
}

TEST(WeightDimensions, TrivialWeightsHaveZeroDimensions) {
  Fixture1D F;
  const auto cat = characteristic_catalog(F.g, 1, 20);
  for (const WeightSpec& ws : {WeightSpec::identity(2), WeightSpec::constant(spd2())}) {
    const MatrixWeight W(ws, F.g);
    const Dimensions d = weight_dimensions(W, F.p2, cat, {2, 4, 8}, 1.0);
    EXPECT_NEAR(d.d1, 0.0, 1e-6);
    EXPECT_NEAR(d.d2, 0.0, 1e-6);
  }
}

TEST(WeightDimensions, ScalarPowerFiniteAndCatalogStable) {
  Fixture1D F;
  const MatrixWeight W(WeightSpec::scalar_power(1, 0.5), F.g);
  const auto c1 = characteristic_catalog(F.g, 1, 100), c2 = characteristic_catalog(F.g, 2, 100);
  const double ai = apinfty_characteristic(W, F.p2, c1).value;
  const Dimensions a = weight_dimensions(W, F.p2, c1, {2, 4, 8}, ai);
  const Dimensions b = weight_dimensions(W, F.p2, c2, {2, 4, 8}, ai);
  EXPECT_LT(a.d1, 0.5 + 0.5);
  EXPECT_LT(a.d2, 0.5 + 0.5);
  EXPECT_LE(std::abs(a.d1 - b.d1), 0.15 * std::max(a.d1, 1e-3) + 1e-9);
  EXPECT_LE(std::abs(a.d2 - b.d2), 0.15 * std::max(a.d2, 1e-3) + 1e-9);
}

TEST(Qp5, IdentityAndEqualCubes) {
  Fixture1D F;
  const MatrixWeight I(WeightSpec::identity(2), F.g);
  const Cube q(1, {0.5, 0.0}, 0.5), r(1, {0.5, 0.0}, 2.0);
  EXPECT_LE(qp5_check(I, F.p2, {{q, r}}, 0.0, 0.0), 1.0 + 1e-6);
  const MatrixWeight W(WeightSpec::diag_power({0.5, 0.25}), F.g);
  EXPECT_NEAR(qp5_check(W, F.p2, {{q, q}}, 0.1, 0.1), 1.0, 1e-3);
}

TEST(ReverseHoelder, TrivialWeights) {
  Fixture1D F;
  const auto cat = characteristic_catalog(F.g, 1, 20);
  const std::vector<Mat> Ms{Mat::Identity(2, 2)};
  EXPECT_NEAR(reverse_holder_ratio(MatrixWeight(WeightSpec::identity(2), F.g), F.p2, 1.5, cat, Ms), 1.0, 1e-9);
  EXPECT_NEAR(reverse_holder_ratio(MatrixWeight(WeightSpec::constant(spd2()), F.g), F.p2, 1.5, cat, Ms), 1.0, 1e-9);
}

TEST(ReverseHoelder, ScalarQuarterPowerTwoResolutions) {
  // ratio on [0, 1] agrees with itself at one refinement within 2%
  const std::vector<Mat> Ms{Mat::Identity(1, 1)};
  double v[2];
  for (int r = 0; r < 2; ++r) {
    const Grid g(1, 8 + r, 4.0);
    v[r] = reverse_holder_ratio(MatrixWeight(WeightSpec::scalar_power(1, 0.25), g), ExponentProfile::constant(g, 2.0), 1.25,
                                {Cube(1, {0.5, 0.0}, 1.0)}, Ms);
  }
  EXPECT_TRUE(std::isfinite(v[0]));
  EXPECT_NEAR(v[1] / v[0], 1.0, 0.02);
}

TEST(AlphaU, IdentityAndConstant) {
  Fixture1D F;
  const auto cat = characteristic_catalog(F.g, 1, 20);
  for (double p0 : {2.0, 0.8}) {
    const ExponentProfile p = ExponentProfile::constant(F.g, p0);
    const AlphaU a = select_alpha_u(MatrixWeight(WeightSpec::identity(2), F.g), p, cat);
    EXPECT_EQ(a.alpha, 1.0);
    EXPECT_NEAR(a.u, std::min(0.5, p0 / 2.0), 1e-5);
    EXPECT_LT(a.u, p0 / 2.0);
  }
  EXPECT_EQ(select_alpha_u(MatrixWeight(WeightSpec::constant(spd2()), F.g), F.p2, cat).alpha, 1.0);
}

TEST(AlphaU, ScalarPowerReproducedAcrossCatalogs) {
  Fixture1D F;
  const MatrixWeight W(WeightSpec::scalar_power(1, 0.5), F.g);
  EXPECT_EQ(select_alpha_u(W, F.p2, characteristic_catalog(F.g, 1, 60)).alpha,
            select_alpha_u(W, F.p2, characteristic_catalog(F.g, 2, 60)).alpha);
}

TEST(Certificate, InvariantsOnPresets) {
  Fixture1D F;
  CertifyOptions o;
  o.random_cubes = 40;
  const WeightCertificate c = certify_weight(WeightSpec::diag_power({0.5, 0.25}), ExponentSpec::constant(2), F.g, o);
  EXPECT_GE(c.d1, 0.0);
  EXPECT_LT(c.d1, 1.0 / 2.0);
  EXPECT_GE(c.d2, 0.0);
  EXPECT_GT(c.r_W, 1.0);
  EXPECT_GT(c.alpha, 0.0);
  EXPECT_LE(c.alpha, 1.0);
  EXPECT_GT(c.u, 0.0);
  EXPECT_LT(c.u, 1.0);
  EXPECT_LE(c.fit_max_ratio, std::sqrt(2.0) * 1.001);
  // p_minus < 1: the A_p characteristic is skipped
  EXPECT_TRUE(std::isnan(certify_weight(WeightSpec::identity(2), ExponentSpec::constant(0.8), F.g, o).ap_char));
}
