#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "surrogate/basis.hpp"
#include "surrogate/errors.hpp"

using namespace surrogate;

namespace {

// Trapezoid grid sum of omega_a * omega_b over a box. The integrand is a
// product of 1-D Gaussians, so the 3-D grid sum factorizes exactly into
// three 1-D grid sums.
double grid_overlap(double alpha, const Point3& a, double beta, const Point3& b, double h,
                    double half_width) {
  const double norm = gaussian_normalization(alpha) * gaussian_normalization(beta);
  double total = norm;
  for (int axis = 0; axis < 3; ++axis) {
    const double mid = 0.5 * (a[axis] + b[axis]);
    double sum = 0.0;
    for (double x = mid - half_width; x <= mid + half_width; x += h) {
      sum += std::exp(-alpha * (x - a[axis]) * (x - a[axis]) - beta * (x - b[axis]) * (x - b[axis]));
    }
    total *= sum * h;
  }
  return total;
}

OverlapMatrix random_spd(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Matrix a(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a(i, j) = normal(rng);
  Matrix s = a * a.transpose() / static_cast<double>(n) + 0.1 * Matrix::Identity(n, n);
  s = 0.5 * (s + s.transpose()).eval();
  return OverlapMatrix(s);
}

}  // namespace

TEST(Basis, IdenticalFunctionsOverlapOne) {
  BasisSet b({Point3(0, 0, 0), Point3(0, 0, 0)}, {1.3, 1.3});
  const Matrix s = overlap_matrix(b).matrix();
  EXPECT_NEAR(s(0, 0), 1.0, 1e-15);
  EXPECT_NEAR(s(0, 1), 1.0, 1e-15);
  EXPECT_NEAR(s(1, 1), 1.0, 1e-15);
}

TEST(Basis, FarApartOverlapVanishes) {
  BasisSet b({Point3(0, 0, 0), Point3(50, 0, 0)}, {1.0, 1.0});
  const Matrix s = overlap_matrix(b).matrix();
  EXPECT_LT(s(0, 1), 1e-300);
  EXPECT_DOUBLE_EQ(s(0, 0), 1.0);
}

TEST(Basis, UnitDistanceOverlapMatchesQuadrature) {
  const Point3 a(0, 0, 0), b(1, 0, 0);
  const double quad = grid_overlap(1.0, a, 1.0, b, 0.15, 8.0);
  EXPECT_NEAR(quad, 0.60653, 1e-5);
  EXPECT_NEAR(gaussian_overlap(1.0, a, 1.0, b), quad, 1e-9);
  EXPECT_NEAR(gaussian_overlap(1.0, a, 1.0, b), std::exp(-0.5), 1e-15);
}

TEST(Basis, RandomBasesAgreeWithQuadrature) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> pos(-1.5, 1.5), expo(0.3, 2.0);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<Point3> centers;
    std::vector<double> exps;
    for (int i = 0; i < 5; ++i) {
      centers.emplace_back(pos(rng), pos(rng), pos(rng));
      exps.push_back(expo(rng));
    }
    const Matrix s = overlap_matrix(BasisSet(centers, exps)).matrix();
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 5; ++j)
        EXPECT_NEAR(s(i, j), grid_overlap(exps[i], centers[i], exps[j], centers[j], 0.05, 10.0), 1e-6);
  }
}

TEST(Basis, OverlapIsSymmetricWithUnitDiagonal) {
  BasisSet b({Point3(0, 0, 0), Point3(0.7, 0.2, 0), Point3(0, 1, 1)}, {0.5, 2.0, 6.0});
  const Matrix s = overlap_matrix(b).matrix();
  EXPECT_LT((s - s.transpose()).norm(), 1e-15);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(s(i, i), 1.0, 1e-14);
}

TEST(Basis, RejectsInvalidBasis) {
  EXPECT_THROW(BasisSet({Point3(0, 0, 0)}, {0.0}), ContractViolation);
  EXPECT_THROW(BasisSet({Point3(0, 0, 0)}, {1.0, 2.0}), ContractViolation);
  EXPECT_THROW(BasisSet({}, {}), ContractViolation);
  EXPECT_THROW(BasisSet({Point3(NAN, 0, 0)}, {1.0}), ContractViolation);
}

TEST(Lowdin, IdentityAndDiagonal) {
  auto r = lowdin_roots(OverlapMatrix(Matrix::Identity(3, 3)));
  EXPECT_LT((r.half - Matrix::Identity(3, 3)).norm(), 1e-15);
  Matrix d = Matrix::Zero(2, 2);
  d(0, 0) = 1;
  d(1, 1) = 4;
  r = lowdin_roots(OverlapMatrix(d));
  EXPECT_NEAR(r.half(0, 0), 1.0, 1e-14);
  EXPECT_NEAR(r.half(1, 1), 2.0, 1e-14);
  EXPECT_NEAR(r.half(0, 1), 0.0, 1e-14);
  EXPECT_NEAR(r.inv_half(1, 1), 0.5, 1e-14);
}

TEST(Lowdin, TwoByTwoMatchesEigenOracle) {
  Matrix s(2, 2);
  s << 2, 1, 1, 2;
  // eigenvalues 1 (vector (1,-1)) and 3 (vector (1,1))
  const double hi = 0.5 * (std::sqrt(3.0) + 1.0), lo = 0.5 * (std::sqrt(3.0) - 1.0);
  const auto r = lowdin_roots(OverlapMatrix(s));
  EXPECT_NEAR(r.half(0, 0), hi, 1e-14);
  EXPECT_NEAR(r.half(0, 1), lo, 1e-14);
  EXPECT_NEAR(r.half(1, 0), lo, 1e-14);
  EXPECT_NEAR(r.half(1, 1), hi, 1e-14);
  EXPECT_NEAR(r.half(0, 0), 1.3660, 5e-5);
  EXPECT_NEAR(r.half(0, 1), 0.3660, 5e-5);
}

TEST(Lowdin, RandomRoundTrip) {
  std::mt19937_64 rng(3);
  for (std::size_t n : {1u, 2u, 7u, 20u, 64u}) {
    const OverlapMatrix s = random_spd(n, rng);
    const auto r = lowdin_roots(s);
    EXPECT_LT((r.half * r.half - s.matrix()).norm(), 1e-10);
    EXPECT_LT((r.inv_half * r.half - Matrix::Identity(n, n)).norm(), 1e-10);
    EXPECT_LT((r.half - r.half.transpose()).norm(), 1e-15);
  }
}

TEST(Lowdin, SingularOverlapSignals) {
  Matrix s = Matrix::Ones(2, 2);
  EXPECT_THROW(lowdin_roots(OverlapMatrix(s)), NumericError);
}

TEST(DensityError, Examples) {
  Matrix s(2, 2);
  s << 2, 1, 1, 2;
  EXPECT_EQ(density_l2_error(Vector::Zero(2), OverlapMatrix(Matrix::Identity(2, 2))), 0.0);
  EXPECT_DOUBLE_EQ(density_l2_error(Vector::Unit(2, 0), OverlapMatrix(Matrix::Identity(2, 2))), 1.0);
  Vector dp(2);
  dp << 1, -1;
  EXPECT_NEAR(density_l2_error(dp, OverlapMatrix(s)), std::sqrt(2.0), 1e-15);
  EXPECT_THROW(density_l2_error(Vector::Zero(3), OverlapMatrix(s)), ContractViolation);
}

TEST(DensityError, MatchesQuadratureOfSquaredDensity) {
  BasisSet b({Point3(0, 0, 0), Point3(0.8, 0, 0)}, {1.0, 0.6});
  Vector dp(2);
  dp << 1.0, -0.7;
  // sum over pairs of dp_a dp_b S_ab, with S_ab from quadrature
  double q = 0.0;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      q += dp[i] * dp[j] *
           grid_overlap(b.exponents()[i], b.centers()[i], b.exponents()[j], b.centers()[j], 0.05, 10.0);
  EXPECT_NEAR(density_l2_error(dp, overlap_matrix(b)), std::sqrt(q), 1e-8);
}

TEST(DensityError, NatrepIsometry) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 20; ++trial) {
    const OverlapMatrix s = random_spd(12, rng);
    const auto r = lowdin_roots(s);
    Vector dp(12);
    for (auto& x : dp) x = normal(rng);
    EXPECT_NEAR((r.half * dp).norm(), density_l2_error(dp, s), 1e-10);
  }
}

TEST(Density, PointValues) {
  BasisSet b({Point3(0, 0, 0)}, {1.0});
  Coefficients p(1);
  p << 1.0;
  EXPECT_NEAR(density_at_point(p, b, Point3(0, 0, 0)), 0.71271, 5e-6);
  EXPECT_DOUBLE_EQ(density_at_point(p, b, Point3(0, 0, 0)), std::pow(2.0 / M_PI, 0.75));
  EXPECT_EQ(density_at_point(Coefficients::Zero(1), b, Point3(0.3, 1, 2)), 0.0);
}

TEST(Density, Linearity) {
  BasisSet b({Point3(0, 0, 0), Point3(1, 0, 0), Point3(0, 1, 0)}, {1.0, 0.5, 2.0});
  Coefficients p(3), q(3);
  p << 0.2, -0.4, 1.0;
  q << 0.5, 0.1, -0.3;
  for (const Point3& r : {Point3(0.1, 0.2, 0.3), Point3(-1, 0.5, 2)}) {
    EXPECT_NEAR(density_at_point(p + q, b, r),
                density_at_point(p, b, r) + density_at_point(q, b, r), 1e-15);
  }
}
