#include <cmath>
#include <numbers>
#include <random>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "transop/goursat.hpp"

using namespace transop;

namespace {

// Closed-form kernel for P = 0, Q = q > 0 constant:
// K(x, y) = q x I1(sqrt(q) w) / (sqrt(q) w), w = sqrt(x^2 - y^2).
double constant_kernel(double q, double x, double y) {
  const double w = std::sqrt(std::max(x * x - y * y, 0.0));
  const double s = std::sqrt(q) * w;
  if (s < 1e-8) return 0.5 * q * x;
  return q * x * std::cyl_bessel_i(1.0, s) / s;
}

double bessel_error(std::size_t n, double q = 1.0) {
  const SpatialMesh xm(1.0, n);
  const auto K = solve_goursat(PotentialField::zero(1, xm), PotentialField::from_function(1, xm, [q](double) { return cplx(q); }));
  double e = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j <= i; ++j) e = std::max(e, std::abs(K(i, j) - constant_kernel(q, xm.node(i), xm.node(j))));
  return e;
}

PotentialField random_matrix_potential(std::size_t dim, const SpatialMesh& xm, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> c(dim * dim * 3);
  for (auto& v : c) v = u(rng);
  return PotentialField::from_function(dim, xm, [&](double x) {
    SquareMatrix m(dim);
    for (std::size_t e = 0; e < dim * dim; ++e)
      m.a[e] = c[3 * e] + c[3 * e + 1] * std::cos(std::numbers::pi * x) + c[3 * e + 2] * x * x;
    return m;
  });
}

} // namespace

TEST(Goursat, BesselOracleConvergesAtSecondOrder) {
  std::vector<double> errs;
  for (std::size_t n : {65u, 129u, 257u}) errs.push_back(bessel_error(n));
  EXPECT_LT(errs.back(), 1e-4);
  for (double o : observed_orders(errs)) EXPECT_GE(o, 1.7);
}

TEST(Goursat, DecoupledSystemMatchesScalarOracles) {
  const SpatialMesh xm(1.0, 65);
  const auto Q = PotentialField::from_function(2, xm, [](double) {
    SquareMatrix m(2);
    m.a = {cplx(1.0), cplx(0.0), cplx(0.0), cplx(4.0)};
    return m;
  });
  const auto K = solve_goursat(PotentialField::zero(2, xm), Q);
  double e = 0.0, off = 0.0;
  for (std::size_t i = 0; i < xm.size(); ++i)
    for (std::size_t j = 0; j <= i; ++j) {
      e = std::max(e, std::abs(K(i, j, 0, 0) - constant_kernel(1.0, xm.node(i), xm.node(j))));
      e = std::max(e, std::abs(K(i, j, 1, 1) - constant_kernel(4.0, xm.node(i), xm.node(j))));
      off = std::max({off, std::abs(K(i, j, 0, 1)), std::abs(K(i, j, 1, 0))});
    }
  EXPECT_LT(e, 5e-4);
  EXPECT_EQ(off, 0.0);
}

TEST(Goursat, EqualPotentialsGiveExactlyZeroKernel) {
  for (std::size_t dim : {1u, 2u, 3u}) {
    const SpatialMesh xm(1.3, 33);
    const auto P = random_matrix_potential(dim, xm, 11 + static_cast<unsigned>(dim));
    const auto K = solve_goursat(P, P);
    EXPECT_LE(K.sup_abs(), 1e-14) << "dim " << dim;
  }
}

// K(x, x) = 1/2 int_0^x (Q - P) with the integral done analytically.
TEST(Goursat, DiagonalCarriesHalfTheIntegratedDifference) {
  const SpatialMesh xm(1.0, 129);
  const auto P = PotentialField::from_function(1, xm, [](double x) { return cplx(std::cos(2.0 * x)); });
  const auto Q = PotentialField::from_function(1, xm, [](double x) { return cplx(1.0 + x * x, 0.5 * x); });
  const auto K = solve_goursat(P, Q);
  for (std::size_t i = 0; i < xm.size(); i += 8) {
    const double x = xm.node(i);
    const cplx integral = cplx(x + x * x * x / 3.0 - std::sin(2.0 * x) / 2.0, 0.25 * x * x);
    EXPECT_LT(std::abs(K(i, i) - 0.5 * integral), 1e-6) << "x = " << x;
  }
}

// First-order kernel for Q = P + eps Delta with P = 0 solves the plain wave
// equation: K ~ g((x + y)/2) + g((x - y)/2), g(s) = eps/2 int_0^s Delta.
TEST(Goursat, SmallPerturbationMatchesDAlembertKernel) {
  const SpatialMesh xm(1.0, 129);
  const double eps = 1e-3;
  auto D = [](double s) { return std::sin(3.0 * s) / 3.0 + s * s / 2.0; }; // int_0^s (cos 3t + t)
  const auto Q = PotentialField::from_function(1, xm, [&](double x) { return cplx(eps * (std::cos(3.0 * x) + x)); });
  const auto K = solve_goursat(PotentialField::zero(1, xm), Q);
  double e = 0.0;
  for (std::size_t i = 0; i < xm.size(); ++i)
    for (std::size_t j = 0; j <= i; ++j) {
      const double x = xm.node(i), y = xm.node(j);
      e = std::max(e, std::abs(K(i, j) - 0.5 * eps * (D(0.5 * (x + y)) + D(0.5 * (x - y)))));
    }
  EXPECT_LT(e / eps, 2e-3);
}

TEST(Goursat, ResidualsShrinkForNonCommutingSystems) {
  std::vector<double> interior, diag, neumann;
  for (std::size_t n : {33u, 65u, 129u}) {
    const SpatialMesh xm(1.0, n);
    const auto P = random_matrix_potential(2, xm, 1), Q = random_matrix_potential(2, xm, 2);
    const auto r = goursat_residual(solve_goursat(P, Q), P, Q);
    interior.push_back(r.interior_sup);
    diag.push_back(r.diagonal_sup);
    neumann.push_back(r.neumann_sup);
  }
  for (const auto* v : {&interior, &diag, &neumann}) {
    EXPECT_LT(v->back(), v->front());
    EXPECT_LT(v->back(), 1e-2);
  }
}

TEST(Goursat, SweepOrdersAgree) {
  const SpatialMesh xm(1.0, 65);
  const auto P = random_matrix_potential(2, xm, 5), Q = random_matrix_potential(2, xm, 6);
  GoursatOptions a, b;
  b.order = SweepOrder::characteristic_diagonal;
  const auto Ka = solve_goursat(P, Q, a), Kb = solve_goursat(P, Q, b);
  EXPECT_LT(max_abs_diff(Ka.values(), Kb.values()), 1e-10);
}

TEST(Goursat, IterationCapRaisesWithHistory) {
  const SpatialMesh xm(1.0, 33);
  GoursatOptions o;
  o.max_iter = 1;
  o.tol = 1e-15;
  try {
    solve_goursat(PotentialField::zero(1, xm), PotentialField::from_function(1, xm, [](double) { return cplx(50.0); }), o);
    FAIL() << "expected ConvergenceError";
  } catch (const ConvergenceError& e) {
    EXPECT_FALSE(e.history().empty());
  }
}

TEST(Goursat, MismatchedInputsRejected) {
  EXPECT_THROW(solve_goursat(PotentialField::zero(1, SpatialMesh(1.0, 9)), PotentialField::zero(1, SpatialMesh(1.0, 11))),
               std::invalid_argument);
  EXPECT_THROW(solve_goursat(PotentialField::zero(1, SpatialMesh(1.0, 9)), PotentialField::zero(2, SpatialMesh(1.0, 9))),
               std::invalid_argument);
}

TEST(Goursat, LinearizationRatiosSettle) {
  const SpatialMesh xm(1.0, 65);
  const auto Delta = PotentialField::from_function(1, xm, [](double x) { return cplx(1.0 + x); });
  const std::vector<double> eps{1e-2, 1e-3, 1e-4};
  const auto r = kernel_linearization_ratio(PotentialField::zero(1, xm), Delta, eps);
  ASSERT_EQ(r.size(), 3u);
  for (double v : r) EXPECT_NEAR(v / r.back(), 1.0, 0.05);
  const std::vector<double> bad{1e-3, 1e-2};
  EXPECT_THROW(kernel_linearization_ratio(PotentialField::zero(1, xm), Delta, bad), std::invalid_argument);
}

TEST(ExtendedKernel, EvenInYAndFlatAcrossZero) {
  const SpatialMesh xm(1.0, 65);
  const auto K = solve_goursat(PotentialField::zero(1, xm), PotentialField::from_function(1, xm, [](double x) { return cplx(x); }));
  const auto ext = even_extend(K);
  for (std::size_t i = 0; i < xm.size(); i += 7)
    for (long j = 0; j <= static_cast<long>(i); ++j) EXPECT_EQ(ext(i, j), ext(i, -j));
  EXPECT_LT(ext.neumann_defect, kNeumannWarnThreshold);
  EXPECT_THROW(ext(3, 4), std::out_of_range);
  EXPECT_LT(extended_residual(ext, PotentialField::zero(1, xm), PotentialField::from_function(1, xm, [](double x) { return cplx(x); })),
            1e-2);
}

TEST(ExtendedKernel, LightTriangleOfZeroKernelIsZero) {
  const SpatialMesh xm(1.0, 65);
  const auto P = random_matrix_potential(1, xm, 3);
  const auto ext = even_extend(solve_goursat(P, P));
  EXPECT_EQ(dependence_zero_check(ext, 0.4), 0.0);
  EXPECT_THROW(dependence_zero_check(ext, 0.0), std::invalid_argument);
  EXPECT_THROW(dependence_zero_check(ext, 1.0), std::invalid_argument);
}

TEST(Goursat, KernelCsvHasOneRowPerNode) {
  const SpatialMesh xm(1.0, 5);
  const auto K = solve_goursat(PotentialField::zero(1, xm), PotentialField::from_function(1, xm, [](double) { return cplx(1.0); }));
  std::ostringstream os;
  write_kernel_csv(os, K);
  const std::string s = os.str();
  EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 1 + 15);
  EXPECT_EQ(s.substr(0, 3), "x,y");
}
