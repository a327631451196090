#include "surrogate/basis.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "surrogate/errors.hpp"

namespace surrogate {

BasisSet::BasisSet(std::vector<Point3> centers, std::vector<double> exponents)
    : centers_(std::move(centers)), exponents_(std::move(exponents)) {
  require(!exponents_.empty(), "basis set must contain at least one function");
  require(centers_.size() == exponents_.size(),
          "basis set needs one center per exponent");
  for (std::size_t i = 0; i < exponents_.size(); ++i) {
    require(std::isfinite(exponents_[i]) && exponents_[i] > 0.0,
            "basis exponent " + std::to_string(i) + " must be positive and finite");
    require(centers_[i].allFinite(), "basis center " + std::to_string(i) + " is not finite");
  }
}

double BasisSet::evaluate(std::size_t mu, const Point3& r) const {
  const double alpha = exponents_.at(mu);
  return gaussian_normalization(alpha) * std::exp(-alpha * (r - centers_[mu]).squaredNorm());
}

OverlapMatrix::OverlapMatrix(Matrix entries) : entries_(std::move(entries)) {
  require(entries_.rows() == entries_.cols() && entries_.rows() > 0,
          "overlap matrix must be square and non-empty");
  require(entries_.allFinite(), "overlap matrix has non-finite entries");
  const double asym = (entries_ - entries_.transpose()).cwiseAbs().maxCoeff();
  require(asym <= 1e-12, "overlap matrix is not symmetric");
}

double gaussian_normalization(double exponent) {
  return std::pow(2.0 * exponent / std::numbers::pi, 0.75);
}

double gaussian_overlap(double alpha, const Point3& a, double beta, const Point3& b) {
  const double sum = alpha + beta;
  const double prefactor = std::pow(2.0 * std::sqrt(alpha * beta) / sum, 1.5);
  return prefactor * std::exp(-alpha * beta / sum * (a - b).squaredNorm());
}

OverlapMatrix overlap_matrix(const BasisSet& basis) {
  const auto n = static_cast<Eigen::Index>(basis.size());
  Matrix s(n, n);
  const auto& centers = basis.centers();
  const auto& exps = basis.exponents();
  for (Eigen::Index i = 0; i < n; ++i) {
    s(i, i) = 1.0;
    for (Eigen::Index j = 0; j < i; ++j) {
      const double v = gaussian_overlap(exps[i], centers[i], exps[j], centers[j]);
      s(i, j) = v;
      s(j, i) = v;
    }
  }
  return OverlapMatrix(std::move(s));
}

LowdinRoots lowdin_roots(const OverlapMatrix& overlap) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(overlap.matrix());
  if (eig.info() != Eigen::Success) throw NumericError("overlap eigendecomposition failed");
  const Vector& values = eig.eigenvalues();
  if (values.minCoeff() <= 0.0) {
    throw NumericError("overlap matrix has a non-positive eigenvalue (" +
                       std::to_string(values.minCoeff()) + "); basis is numerically singular");
  }
  const Matrix& vecs = eig.eigenvectors();
  LowdinRoots roots;
  roots.half = vecs * values.cwiseSqrt().asDiagonal() * vecs.transpose();
  roots.inv_half = vecs * values.cwiseSqrt().cwiseInverse().asDiagonal() * vecs.transpose();
  // Symmetrize away the rounding asymmetry of V D V^T.
  roots.half = 0.5 * (roots.half + roots.half.transpose()).eval();
  roots.inv_half = 0.5 * (roots.inv_half + roots.inv_half.transpose()).eval();
  return roots;
}

double density_l2_error(const Vector& dp, const OverlapMatrix& overlap) {
  require(dp.size() == overlap.size(), "density_l2_error: dimension mismatch");
  const double quad = dp.dot(overlap.matrix() * dp);
  return std::sqrt(std::max(0.0, quad));
}

double density_at_point(const Coefficients& p, const BasisSet& basis, const Point3& r) {
  require(static_cast<std::size_t>(p.size()) == basis.size(),
          "density_at_point: dimension mismatch");
  double rho = 0.0;
  for (std::size_t mu = 0; mu < basis.size(); ++mu) {
    rho += p[static_cast<Eigen::Index>(mu)] * basis.evaluate(mu, r);
  }
  return rho;
}

}  // namespace surrogate
