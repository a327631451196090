#pragma once

#include <random>
#include <string>

#include "surrogate/synth.hpp"

namespace testing_support {

using namespace surrogate;

/// Hand-built molecule: `n` one-function atoms far apart (identity overlap),
/// features all zero unless given.
inline Molecule toy_molecule(const Matrix& hessian, double quartic, const Coefficients& p_star,
                             const Coefficients& dsad, std::size_t feature_dim = kFeatureDim,
                             const std::string& id = "toy") {
  std::vector<Point3> centers;
  std::vector<double> exps;
  for (Eigen::Index i = 0; i < p_star.size(); ++i) {
    centers.emplace_back(60.0 * static_cast<double>(i), 0.0, 0.0);
    exps.push_back(1.0);
  }
  Molecule m;
  m.id = id;
  m.basis = BasisSet(centers, exps);
  m.features = Vector::Zero(static_cast<Eigen::Index>(feature_dim));
  m.ground_state = p_star;
  m.dsad = dsad;
  m.reference.hessian = hessian;
  m.reference.quartic = quartic;
  return m;
}

inline Vector random_vector(Eigen::Index n, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  Vector v(n);
  for (auto& x : v) x = normal(rng);
  return v;
}

inline Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

}  // namespace testing_support
