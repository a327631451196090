#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <vector>

namespace surrogate {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Point3 = Eigen::Vector3d;

/// Density coefficients p: the weights of the basis functions in
/// rho(r) = sum_mu p_mu omega_mu(r).
using Coefficients = Eigen::VectorXd;

/// A set of normalized s-type Gaussians
///   omega_mu(r) = (2 alpha_mu / pi)^{3/4} exp(-alpha_mu |r - R_mu|^2).
class BasisSet {
 public:
  BasisSet() = default;
  BasisSet(std::vector<Point3> centers, std::vector<double> exponents);

  std::size_t size() const { return exponents_.size(); }
  const std::vector<Point3>& centers() const { return centers_; }
  const std::vector<double>& exponents() const { return exponents_; }

  /// Value of basis function `mu` at point `r`.
  double evaluate(std::size_t mu, const Point3& r) const;

 private:
  std::vector<Point3> centers_;
  std::vector<double> exponents_;
};

/// Symmetric matrix of pairwise basis-function overlaps.
///
/// Construction checks symmetry and finiteness only; positive definiteness
/// is checked where it matters (lowdin_roots), since duplicated basis
/// functions legitimately produce a singular overlap.
class OverlapMatrix {
 public:
  OverlapMatrix() = default;
  explicit OverlapMatrix(Matrix entries);

  const Matrix& matrix() const { return entries_; }
  Eigen::Index size() const { return entries_.rows(); }

 private:
  Matrix entries_;
};

struct LowdinRoots {
  Matrix half;      // S^{1/2}
  Matrix inv_half;  // S^{-1/2}
};

/// Normalization constant (2 alpha / pi)^{3/4} of an s-Gaussian.
double gaussian_normalization(double exponent);

/// Closed-form overlap of two normalized s-Gaussians (Gaussian product theorem).
double gaussian_overlap(double alpha, const Point3& a, double beta, const Point3& b);

OverlapMatrix overlap_matrix(const BasisSet& basis);

/// Symmetric square root and inverse square root of S by dense eigendecomposition.
/// Throws NumericError if S has a non-positive eigenvalue.
LowdinRoots lowdin_roots(const OverlapMatrix& overlap);

/// L2 norm of the density difference represented by `dp`: sqrt(dp^T S dp).
double density_l2_error(const Vector& dp, const OverlapMatrix& overlap);

/// rho(r) = sum_mu p_mu omega_mu(r). LCAB densities are allowed to be negative.
double density_at_point(const Coefficients& p, const BasisSet& basis, const Point3& r);

}  // namespace surrogate
