#include <gtest/gtest.h>

#include <cmath>

#include "hardylab/convexbody.hpp"
#include "hardylab/rng.hpp"

using namespace hardylab;

namespace {

Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

ConvexBody random_body(CounterRng& rng, int m, int count) {
  ConvexBody K(m);
  std::vector<double> g(static_cast<std::size_t>(m));
  for (int k = 0; k < count; ++k) {
    for (auto& x : g) x = rng.normal();
    K.add(g.data());
  }
  return K;
}

}  // namespace

TEST(ConvexBody, SegmentExamples) {
  const ConvexBody e1 = ConvexBody::segment(v2(1, 0));
  EXPECT_EQ(e1.norm(), 1.0);
  EXPECT_EQ(e1.support(v2(1, 0)), 1.0);
  EXPECT_EQ(e1.support(v2(0, 1)), 0.0);
  EXPECT_EQ(ConvexBody::segment(v2(0, 0)).norm(), 0.0);
  EXPECT_EQ(ConvexBody::segment(v2(3, 4)).norm(), 5.0);
}

TEST(ConvexBody, SupportIsSymmetric) {
  CounterRng rng(1);
  const ConvexBody K = random_body(rng, 2, 7);
  for (int t = 0; t < 20; ++t) {
    const Vec z = v2(rng.normal(), rng.normal());
    EXPECT_EQ(K.support(z), K.support(Vec(-z)));
  }
}

TEST(ConvexBody, TransformExamples) {
  const ConvexBody K = ConvexBody::segment(v2(0.6, 0.8));
  EXPECT_EQ(transform(Mat::Identity(2, 2), K).flat(), K.flat());
  Mat D = Mat::Zero(2, 2);
  D(0, 0) = 3.0;
  D(1, 1) = 1.0;
  EXPECT_DOUBLE_EQ(transform(D, ConvexBody::segment(v2(1, 0))).norm(), 3.0);
}

TEST(ConvexBody, TransformedNormMatchesGeneratorEnumeration) {
  CounterRng rng(2);
  for (int t = 0; t < 20; ++t) {
    const ConvexBody K = random_body(rng, 3, 5);
    Mat A(3, 3);
    for (int i = 0; i < 9; ++i) A.data()[i] = rng.normal();
    double brute = 0.0;
    for (std::size_t k = 0; k < K.count(); ++k) {
      const Vec g = Eigen::Map<const Vec>(K.generator(k), 3);
      brute = std::max(brute, (A * g).norm());
    }
    EXPECT_NEAR(transform(A, K).norm(), brute, 1e-12 * brute);
    EXPECT_NEAR(K.norm_after(A.data()), brute, 1e-12 * brute);
  }
}

TEST(HullUnion, SingleBodyAndTwoSegments) {
  CounterRng rng(3);
  const ConvexBody K = random_body(rng, 2, 6);
  const ConvexBody H = hull_union({K});
  for (const Vec& z : probe_mesh(2, 128)) EXPECT_NEAR(H.support(z), K.support(z), 1e-14);
  const ConvexBody U = hull_union({ConvexBody::segment(v2(1, 0)), ConvexBody::segment(v2(0, 1))});
  EXPECT_NEAR(U.support(v2(1, 1) / std::sqrt(2.0)), 1.0 / std::sqrt(2.0), 1e-15);
}

TEST(HullUnion, NormOfTransformedUnionIsMaxOverParts) {
  CounterRng rng(4);
  for (int m : {2, 3}) {
    std::vector<ConvexBody> parts;
    for (int k = 0; k < 4; ++k) parts.push_back(random_body(rng, m, 3));
    Mat A(m, m);
    for (int i = 0; i < m * m; ++i) A.data()[i] = rng.normal();
    double want = 0.0;
    for (const auto& K : parts) want = std::max(want, transform(A, K).norm());
    const ConvexBody U = hull_union(parts);
    // exact for m = 2 (hull vertices kept); the m = 3 pruning is mesh based
    EXPECT_NEAR(transform(A, U).norm(), want, m == 2 ? 1e-12 * want : 2e-2 * want);
  }
}

TEST(HullUnion, PlanarPruningKeepsSupportEverywhere) {
  CounterRng rng(5);
  std::vector<ConvexBody> parts;
  for (int k = 0; k < 30; ++k) parts.push_back(random_body(rng, 2, 2));
  const ConvexBody U = hull_union(parts, 1024);
  for (int t = 0; t < 200; ++t) {
    const Vec z = v2(rng.normal(), rng.normal());
    double want = 0.0;
    for (const auto& K : parts) want = std::max(want, K.support(z));
    EXPECT_NEAR(U.support(z), want, 1e-12 * want);
  }
}

TEST(CbReducingOperator, ScalarFormula) {
  const Grid g(1, 8, 4.0);
  BodyField F(g, 1);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double v = 1.0 + std::sin(g.midpoint(i)[0]);
    F.bodies[i].add(&v);
  }
  const Cube q(1, {0.25, 0.0}, 1.5);
  const double u = 0.4;
  const auto cells = cells_in(g, q);
  double s = 0.0;
  for (auto i : cells) s += std::pow(1.0 + std::sin(g.midpoint(i)[0]), u);
  const double want = std::pow(s / double(cells.size()), 1.0 / u);
  EXPECT_NEAR(cb_reducing_operator(F, q, u).A(0, 0) / want, 1.0, 1e-9);
}

TEST(CbReducingOperator, ConstantCrossBodyIsDiagonal) {
  const Grid g(1, 6, 1.0);
  BodyField F(g, 2);
  const double e1[2] = {1, 0}, e2[2] = {0, 1};
  for (auto& K : F.bodies) {
    K.add(e1);
    K.add(e2);
  }
  const EllipsoidFit M = cb_reducing_operator(F, Cube(1, {0.0, 0.0}, 1.0), 0.5);
  EXPECT_NEAR(M.A(0, 1), 0.0, 1e-6);
  EXPECT_NEAR(M.A(0, 0), M.A(1, 1), 1e-6);
  // rho of the body is the l^inf norm; the fit brackets it on the mesh
  for (const Vec& z : probe_mesh(2)) {
    const double rho = std::max(std::abs(z[0]), std::abs(z[1]));
    EXPECT_GE((M.A * z).norm(), rho * (1 - 1e-9));
    EXPECT_LE((M.A * z).norm(), std::sqrt(2.0) * 1.001 * rho);
  }
}

TEST(CbReducingOperator, UnitBallAgainstDenserMesh) {
  const Grid g(1, 6, 1.0);
  BodyField F(g, 2);
  for (auto& K : F.bodies) K = hull_union({ConvexBody::segment(v2(1, 0)), ConvexBody::segment(v2(0, 1))});
  const Cube q(1, {0.0, 0.0}, 1.0);
  const Mat A = cb_reducing_operator(F, q, 0.5, 64).A;
  const Mat D = cb_reducing_operator(F, q, 0.5, 640).A;
  EXPECT_LE((A - D).norm(), 0.01);
}

TEST(CbReducingOperator, VanishingBodyIsNotAbsorbing) {
  const Grid g(1, 6, 1.0);
  BodyField F(g, 2);
  EXPECT_THROW(cb_reducing_operator(F, Cube(1, {0.0, 0.0}, 1.0), 0.5), Error);
}
