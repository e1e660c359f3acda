#include <gtest/gtest.h>

#include <cmath>

#include "hardylab/czops.hpp"
#include "hardylab/rng.hpp"

using namespace hardylab;

namespace {

VectorField sample_vector(const Grid& g, double (*fn)(double)) {
  VectorField f(g, 1);
  for (std::size_t i = 0; i < g.size(); ++i) f.at(i)[0] = fn(g.midpoint(i)[0]);
  return f;
}

double bump(double x) { return std::abs(x) < 1 ? std::exp(-1 / (1 - x * x)) : 0.0; }
double bump_slope(double x) { return std::abs(x) < 1 ? -2 * x / std::pow(1 - x * x, 2) * bump(x) : 0.0; }

// Atom on Q = [0, 1) built from a derivative of order s+1 of a bump centred at 1/2.
AtomRecord derivative_atom(const Grid& g, int s) {
  AtomRecord a;
  a.Q = Cube(1, {0.5, 0.0}, 1.0);
  a.support = a.Q.dilate(3, 1);
  a.lambda = 1.0;
  VectorField f(g, 1);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double y = 2.0 * (g.midpoint(i)[0] - 0.5);
    f.at(i)[0] = s == 0 ? bump_slope(y) : bump(y) * (1 - 3 * y * y);
  }
  remove_moments(f, s, {0.5, 0.0}, 0.5);
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (f.at(i)[0] == 0.0) continue;
    a.cells.push_back(i);
    a.values.push_back(f.at(i)[0]);
  }
  return a;
}

}  // namespace

TEST(Kernel, SizeConstantsAndAntisymmetry) {
  const KernelConstants h = kernel_certify(make_kernel("hilbert"), 2);
  EXPECT_NEAR(h.size[0], 1.0 / M_PI, 1e-12);
  EXPECT_NEAR(h.size[1], 1.0 / M_PI, 1e-12);
  EXPECT_NEAR(h.size[2], 2.0 / M_PI, 1e-12);
  EXPECT_LE(h.antisymmetry, 1e-15);
  EXPECT_TRUE(std::isfinite(h.holder));
  for (const char* r : {"riesz_1", "riesz_2"}) {
    const KernelConstants c = kernel_certify(make_kernel(r), 1);
    EXPECT_LE(c.size[0], 1.0 / (2 * M_PI) + 1e-12);
    EXPECT_GE(c.size[0], 0.9 / (2 * M_PI));
    EXPECT_LE(c.antisymmetry, 1e-15);
  }
  EXPECT_THROW(make_kernel("beurling"), Error);
}

TEST(Kernel, DerivativeMatchesFiniteDifference) {
  const Kernel K = make_kernel("riesz_1");
  const Point x{0.3, -0.2}, y{-0.4, 0.5};
  const double e = 1e-5;
  const double fd = (K({x[0] + e, x[1]}, y) - K({x[0] - e, x[1]}, y)) / (2 * e);
  EXPECT_NEAR(K.derivative({1, 0}, x, y), fd, 1e-6 * std::abs(fd) + 1e-9);
}

TEST(Hilbert, IndicatorAwayFromSupport) {
  // (1/pi) int_{-1}^{1} dy / (2 - y) = log(3) / pi
  const double want = std::log(3.0) / M_PI;
  double prev = 0.0;
  for (int J : {7, 9}) {
    const Grid g(1, J, 4.0);
    VectorField f = sample_vector(g, [](double x) { return std::abs(x) < 1 ? 1.0 : 0.0; });
    double out = 0.0;
    apply_at(CZOperator{make_kernel("hilbert")}, f, {2.0, 0.0}, &out);
    const double err = std::abs(out - want);
    EXPECT_LE(err, 1e-2);
    if (prev > 0.0) EXPECT_LE(err, prev / 2.0);  // at least first order in h
    prev = err;
  }
}

TEST(Hilbert, ParityAndZero) {
  const Grid g(1, 8, 4.0);
  const CZOperator T{make_kernel("hilbert")};
  const VectorField even = sample_vector(g, bump);
  const VectorField Te = apply(T, even);
  const long N = g.per_axis();
  for (long i = 0; i < N; ++i) EXPECT_NEAR(Te.at(std::size_t(i))[0], -Te.at(std::size_t(N - 1 - i))[0], 1e-12);
  for (double v : apply(T, VectorField(g, 2)).values) EXPECT_EQ(v, 0.0);
}

TEST(Hilbert, ApproximateL2Isometry) {
  const Grid g(1, 10, 16.0);
  const VectorField f = sample_vector(g, bump_slope);
  const VectorField Tf = apply(CZOperator{make_kernel("hilbert")}, f);
  EXPECT_NEAR(l2_norm(Tf) / l2_norm(f), 1.0, 0.05);
}

TEST(AtomDecay, SlopeTracksMomentOrder) {
  const Grid g(1, 9, 4.0);
  const MatrixWeight W(WeightSpec::identity(1), g);
  const ExponentProfile p = ExponentProfile::constant(g, 1.0);
  const CZOperator T{make_kernel("hilbert")};
  for (int s : {0, 1}) {
    const DecayFit d = atom_image_decay(T, derivative_atom(g, s), W, p);
    ASSERT_FALSE(d.empty);
    EXPECT_NEAR(d.slope, -(2.0 + s), 0.3);
  }
  AtomRecord z;
  z.Q = Cube(1, {0.5, 0.0}, 1.0);
  z.support = z.Q.dilate(3, 1);
  EXPECT_TRUE(atom_image_decay(T, z, W, p).empty);
  EXPECT_THROW(atom_image_decay(T, derivative_atom(g, 0), W, p, 4), Error);
}

TEST(AtomDecay, SlopeIsScaleFree) {
  const Grid g(1, 9, 4.0);
  const MatrixWeight W(WeightSpec::identity(1), g);
  const ExponentProfile p = ExponentProfile::constant(g, 1.0);
  const CZOperator T{make_kernel("hilbert")};
  AtomRecord a = derivative_atom(g, 0);
  const DecayFit d1 = atom_image_decay(T, a, W, p);
  for (double& v : a.values) v *= 2.0;
  const DecayFit d2 = atom_image_decay(T, a, W, p);
  EXPECT_NEAR(d1.slope, d2.slope, 1e-9);
  EXPECT_NEAR(d2.intercept - d1.intercept, std::log(2.0), 1e-9);
}

TEST(MomentPreservation, ImageOfMomentFreeFunction) {
  const Grid g(1, 10, 16.0);
  const VectorField f = sample_vector(g, bump_slope);
  const MomentCheck m = moment_preservation(apply(CZOperator{make_kernel("hilbert")}, f), {0.0, 0.0}, 0);
  EXPECT_TRUE(m.pass);
  const MomentCheck bad = moment_preservation(sample_vector(g, bump), {0.0, 0.0}, 0);
  EXPECT_FALSE(bad.pass);
}

TEST(CzBench, RatiosAreScaleInvariant) {
  const Grid g(1, 8, 4.0);
  const MatrixWeight W(WeightSpec::identity(2), g);
  const ExponentProfile p = ExponentProfile::constant(g, 2.0);
  const TestFunctionCatalog cat(1, 2);
  SuiteOptions o;
  o.count = 2;
  std::vector<VectorField> suite = moment_free_suite(g, 2, o);
  const CZOperator T{make_kernel("hilbert")};
  const CzBench a = cz_bench(T, W, p, suite, cat, 0);
  for (auto& f : suite)
    for (double& v : f.values) v *= 3.0;
  const CzBench b = cz_bench(T, W, p, suite, cat, 0);
  ASSERT_EQ(a.rows.size(), 2u);
  for (std::size_t k = 0; k < a.rows.size(); ++k) {
    EXPECT_NEAR(a.rows[k].hl, b.rows[k].hl, 1e-9 * a.rows[k].hl);
    EXPECT_NEAR(a.rows[k].hh, b.rows[k].hh, 1e-9 * std::max(1.0, a.rows[k].hh));
    EXPECT_GT(a.rows[k].hl, 0.0);
  }
  EXPECT_GE(a.max_hl, a.rows[0].hl);
}

TEST(Campanato, PolynomialsVanishAndAreInvisible) {
  const Grid g(1, 8, 4.0);
  const MatrixWeight W(WeightSpec::identity(1), g);
  const ExponentProfile p = ExponentProfile::constant(g, 1.0);
  const std::vector<Cube> cubes{Cube(1, {0.0, 0.0}, 2.0), Cube(1, {1.0, 0.0}, 1.0), Cube(1, {-1.5, 0.0}, 0.5)};
  const VectorField poly = sample_vector(g, [](double x) { return 1.0 - 2.0 * x; });
  EXPECT_LE(campanato_norm(poly, W, p, 2.0, 1, cubes), 1e-12);
  const VectorField b = sample_vector(g, [](double x) { return std::sin(2 * x); });
  VectorField bp = b;
  for (std::size_t j = 0; j < bp.values.size(); ++j) bp.values[j] += poly.values[j];
  EXPECT_NEAR(campanato_norm(bp, W, p, 2.0, 1, cubes), campanato_norm(b, W, p, 2.0, 1, cubes), 1e-12);
}

TEST(Campanato, SignFunctionOnSymmetricCube) {
  const Grid g(1, 8, 4.0);
  const MatrixWeight W(WeightSpec::identity(1), g);
  const ExponentProfile p = ExponentProfile::constant(g, 1.0);
  const VectorField sgn = sample_vector(g, [](double x) { return x > 0 ? 1.0 : -1.0; });
  EXPECT_NEAR(campanato_norm(sgn, W, p, 1.0, 0, {Cube(1, {0.0, 0.0}, 2.0)}), 1.0, 1e-12);
}

TEST(Duality, PolynomialPartnerCancels) {
  const Grid g(1, 8, 4.0);
  const MatrixWeight W(WeightSpec::identity(1), g);
  const ExponentProfile p = ExponentProfile::constant(g, 1.0);
  const TestFunctionCatalog cat(1, 2);
  SuiteOptions o;
  o.count = 1;
  const std::vector<VectorField> fs = moment_free_suite(g, 1, o);
  const std::vector<VectorField> gs{sample_vector(g, [](double) { return 2.0; })};
  const DualityReport r = duality_pairing_check(fs, gs, W, p, 2.0, 0, cat, {Cube(1, {0.0, 0.0}, 2.0)});
  EXPECT_EQ(r.cancellations, 1u);
  EXPECT_EQ(r.max_ratio, 0.0);
  const std::vector<VectorField> gs2{sample_vector(g, [](double x) { return std::sin(3 * x); })};
  const DualityReport r2 = duality_pairing_check(fs, gs2, W, p, 2.0, 0, cat, {Cube(1, {0.0, 0.0}, 8.0)});
  EXPECT_EQ(r2.cancellations, 0u);
  EXPECT_TRUE(std::isfinite(r2.max_ratio));
  EXPECT_GT(r2.max_ratio, 0.0);
}
