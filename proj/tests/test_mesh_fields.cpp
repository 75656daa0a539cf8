#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "transop/field.hpp"
#include "transop/mesh.hpp"
#include "transop/numerics.hpp"

using namespace transop;

TEST(Mesh, NodesHitBothEndsExactly) {
  SpatialMesh xm(0.7, 11);
  EXPECT_EQ(xm.node(0), 0.0);
  EXPECT_EQ(xm.node(10), 0.7);
  EXPECT_NEAR(xm.step(), 0.07, 1e-15);
  TimeMesh tm(2.5, 6);
  EXPECT_EQ(tm.node(5), 2.5);
  EXPECT_NEAR(tm.node(2), 1.0, 1e-15);
}

TEST(Mesh, RefinementInterleavesNodes) {
  SpatialMesh xm(1.0, 9);
  const auto fine = xm.refined();
  ASSERT_EQ(fine.size(), 17u);
  for (std::size_t i = 0; i < xm.size(); ++i) EXPECT_NEAR(fine.node(2 * i), xm.node(i), 1e-15);
}

TEST(Mesh, RejectsDegenerateSizes) {
  EXPECT_THROW(SpatialMesh(1.0, 1), std::invalid_argument);
  EXPECT_THROW(SpatialMesh(-1.0, 5), std::invalid_argument);
  EXPECT_THROW(TimeMesh(0.0, 5), std::invalid_argument);
}

// Composite Simpson with a 3/8 closure is exact for cubics on every prefix length.
TEST(Numerics, SimpsonExactForCubicsOnAnyLength) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int trial = 0; trial < 20; ++trial) {
    const double a = u(rng), b = u(rng), c = u(rng), d = u(rng);
    auto f = [&](double x) { return a + b * x + c * x * x + d * x * x * x; };
    auto F = [&](double x) { return a * x + b * x * x / 2 + c * x * x * x / 3 + d * x * x * x * x / 4; };
    for (std::size_t n : {2u, 3u, 4u, 5u, 8u, 13u}) {
      const double h = 0.37 / static_cast<double>(n - 1);
      std::vector<double> s(n);
      for (std::size_t i = 0; i < n; ++i) s[i] = f(i * h);
      const double got = simpson_integral<double>(s, h);
      const double exact = F((n - 1) * h);
      // Trapezoid on two points is only exact for linears.
      if (n == 2)
        EXPECT_NEAR(got, 0.5 * h * (s[0] + s[1]), 1e-14);
      else
        EXPECT_NEAR(got, exact, 1e-13) << "n = " << n;
    }
  }
}

TEST(Numerics, CumulativeSimpsonMatchesPrefixIntegrals) {
  const std::size_t n = 41;
  const double h = 1.0 / (n - 1);
  std::vector<double> f(n);
  for (std::size_t i = 0; i < n; ++i) f[i] = std::cos(3.0 * i * h);
  const auto cum = cumulative_simpson<double>(f, h);
  for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(cum[i], std::sin(3.0 * i * h) / 3.0, 2e-6);
  EXPECT_EQ(cum[0], 0.0);
}

TEST(Numerics, FornbergReproducesClassicStencils) {
  const std::vector<double> nodes{-1.0, 0.0, 1.0};
  const auto w2 = fornberg_weights(0.0, nodes, 2);
  EXPECT_NEAR(w2[0], 1.0, 1e-14);
  EXPECT_NEAR(w2[1], -2.0, 1e-14);
  EXPECT_NEAR(w2[2], 1.0, 1e-14);
  const auto w1 = uniform_stencil(3, 0, 1);
  EXPECT_NEAR(w1[0], -1.5, 1e-14);
  EXPECT_NEAR(w1[1], 2.0, 1e-14);
  EXPECT_NEAR(w1[2], -0.5, 1e-14);
}

TEST(Numerics, DerivativeAtStartExactForPolynomials) {
  const double dt = 0.01;
  std::vector<double> f(20);
  for (std::size_t j = 0; j < f.size(); ++j) {
    const double t = j * dt;
    f[j] = 2.0 + 3.0 * t - t * t + 4.0 * t * t * t;
  }
  EXPECT_NEAR(derivative_at_start<double>(f, dt, 0), 2.0, 1e-12);
  EXPECT_NEAR(derivative_at_start<double>(f, dt, 1), 3.0, 1e-9);
  EXPECT_NEAR(derivative_at_start<double>(f, dt, 2), -2.0, 1e-6);
  EXPECT_NEAR(derivative_at_start<double>(f, dt, 3), 24.0, 1e-3);
}

TEST(Numerics, SeriesDerivativeIsFourthOrder) {
  std::vector<double> errs;
  for (int n : {41, 81, 161}) {
    const double dt = 1.0 / (n - 1);
    std::vector<double> f(n);
    for (int j = 0; j < n; ++j) f[j] = std::sin(2.0 * j * dt);
    const auto d = series_derivative<double>(f, dt, 1);
    double e = 0.0;
    for (int j = 0; j < n; ++j) e = std::max(e, std::abs(d[j] - 2.0 * std::cos(2.0 * j * dt)));
    errs.push_back(e);
  }
  for (double o : observed_orders(errs)) EXPECT_GT(o, 3.5);
}

TEST(Numerics, ObservedOrdersOfExactSequence) {
  const std::vector<double> e{1.0, 0.25, 0.0625};
  const auto o = observed_orders(e);
  ASSERT_EQ(o.size(), 2u);
  EXPECT_NEAR(o[0], 2.0, 1e-12);
  EXPECT_NEAR(o[1], 2.0, 1e-12);
}

TEST(PotentialField, InterpolationReproducesNodesAndCubicsInside) {
  SpatialMesh xm(1.0, 21);
  auto f = [](double x) { return cplx(1.0 + x * x, -x); };
  const auto P = PotentialField::from_function(1, xm, f);
  for (std::size_t i = 0; i < xm.size(); ++i) EXPECT_EQ(P.scalar(xm.node(i)), f(xm.node(i)));
  // Off-node error of Hermite interpolation with FD slopes is O(h^3) at worst.
  for (double x : {0.013, 0.5123, 0.977}) EXPECT_LT(std::abs(P.scalar(x) - f(x)), 1e-4);
}

TEST(PotentialField, RejectsNonFiniteAndWrongSize) {
  SpatialMesh xm(1.0, 5);
  EXPECT_THROW(PotentialField(1, xm, std::vector<cplx>(4)), std::invalid_argument);
  std::vector<cplx> s(5, 1.0);
  s[2] = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(PotentialField(1, xm, s), std::invalid_argument);
}

TEST(PotentialField, AxpyAndNorms) {
  SpatialMesh xm(1.0, 11);
  const auto P = PotentialField::from_function(1, xm, [](double x) { return cplx(x); });
  const auto D = PotentialField::from_function(1, xm, [](double x) { return cplx(x > 0.5 ? 1.0 : 0.0); });
  const auto Q = axpy(P, 2.0, D);
  EXPECT_NEAR(Q.sup_norm(), 3.0, 1e-15);
  EXPECT_NEAR(sup_norm_prefix(axpy(Q, -1.0, P), 0.5), 0.0, 1e-15);
  EXPECT_THROW(axpy(P, 1.0, PotentialField::zero(1, SpatialMesh(1.0, 12))), std::invalid_argument);
}

TEST(PotentialField, MatrixEntriesStayInPlace) {
  SpatialMesh xm(1.0, 6);
  const auto P = PotentialField::from_function(2, xm, [](double x) {
    SquareMatrix m(2);
    m.a = {cplx(1.0), cplx(x), cplx(-x), cplx(2.0)};
    return m;
  });
  EXPECT_EQ(P.at(3, 0, 1), cplx(xm.node(3)));
  EXPECT_EQ(P.at(3, 1, 0), cplx(-xm.node(3)));
  EXPECT_EQ(P.node_value(5).a[3], cplx(2.0));
}

TEST(SolutionField, IndexingAndSlices) {
  SolutionField u(2, TimeMesh(1.0, 4), SpatialMesh(1.0, 3));
  u(2, 1, 1) = cplx(5.0, 1.0);
  EXPECT_EQ(u.slice(2)[1 * 2 + 1], cplx(5.0, 1.0));
  EXPECT_EQ(u.time_series(1, 1)[2], cplx(5.0, 1.0));
  EXPECT_EQ(u.profile(2, 1)[1], cplx(5.0, 1.0));
  EXPECT_TRUE(u.all_finite());
  u(0, 0, 0) = cplx(std::numeric_limits<double>::infinity());
  EXPECT_FALSE(u.all_finite());
}

TEST(SolutionField, DiscreteL2NormOfConstant) {
  const std::vector<cplx> ones(11, cplx(0.0, 2.0));
  EXPECT_NEAR(l2_norm(ones, 1, 0.1), 2.0, 1e-14);
  EXPECT_NEAR(max_abs_diff(ones, std::vector<cplx>(11)), 2.0, 0.0);
}
