#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "surrogate/denopt.hpp"
#include "surrogate/model.hpp"
#include "surrogate/synth.hpp"
#include "surrogate/trainer.hpp"

namespace surrogate {

/// ||p - lambda grad - p*|| / ||p - p*||. Throws ContractViolation at p = p*.
double contraction_factor(const Coefficients& p, const Coefficients& p_star, const Vector& grad,
                          double step_size);

struct ContractionRecord {
  std::string molecule_id;
  double distance = 0.0;
  double factor = 0.0;
  double step_size = 0.0;
};

/// Gradient of some energy functional for a molecule at p.
using GradientSource = std::function<Vector(const Molecule&, const Coefficients&)>;
GradientSource reference_gradient_source();
GradientSource surrogate_gradient_source(const SurrogateModel& model);

struct ContractionScanOptions {
  double step_size = 0.05;
  double beta = 0.9;
  std::size_t samples = 1000;  // spread round-robin over the molecules
  std::uint64_t seed = 0;
  PerturbationConfig perturbation;
};

struct ContractionScan {
  std::vector<ContractionRecord> records;
  double fraction_below_beta = 0.0;
};

/// One record per perturbed sample p = p* + r u; samples that land exactly on
/// p* are redrawn.
ContractionScan contraction_scan(const Dataset& dataset, const GradientSource& gradient,
                                 const ContractionScanOptions& opt);

void write_contraction_csv(std::ostream& out, const std::vector<ContractionRecord>& records);

struct ConvergenceReport {
  bool holds = true;
  std::size_t checked_steps = 0;           // states examined, including a violating one
  std::optional<std::size_t> first_violation;  // first n where the bound fails
  std::optional<std::size_t> excluded_from;    // first step with gdi_loss > 0
};

/// Checks dist(n) <= beta^n dist(0) (1 + 1e-10) on every recorded state n
/// whose preceding steps 0..n-1 all had zero GDI loss.
ConvergenceReport verify_exponential_convergence(const Trajectory& traj, double beta);

struct GroupError {
  std::size_t group = 0;
  double error_norm = 0.0;
  double share = 0.0;  // fraction of the squared total error
};

/// Per-group norm of `error` and its share of ||error||^2. `groups` must
/// partition {0, ..., dim-1}.
std::vector<GroupError> loophole_report(const Vector& error,
                                        const std::vector<std::vector<std::size_t>>& groups);
std::vector<GroupError> loophole_report(const Trajectory& traj, const Coefficients& p_star,
                                        const std::vector<std::vector<std::size_t>>& groups);

/// Eigen-coordinates of the reference Hessian: `basis` columns are
/// eigenvectors in descending eigenvalue order; groups are {stiff half, soft half}.
struct StiffnessGroups {
  Matrix basis;
  std::vector<std::vector<std::size_t>> groups;
};
StiffnessGroups stiffness_groups(const Matrix& hessian);

struct SliceGrid {
  std::vector<double> coords;  // shared grid coordinates along both directions
  Matrix energy;               // energy(i, j) at origin + coords[i] d1 + coords[j] d2
  Matrix grad_norm;
};

/// Energy and gradient norm of the surrogate on the affine plane
/// origin + a d1 + b d2, a, b in linspace(-extent, extent, resolution).
SliceGrid gradient_norm_slice(const SurrogateModel& model, const Molecule& mol,
                              const Coefficients& origin, const Vector& d1, const Vector& d2,
                              std::size_t resolution, double extent);

/// Plane through p* spanned by the directions to the first two optimizer
/// iterates from the initial guess, orthonormalized and scaled to the
/// initial distance. Falls back to p-bar - p* plus a fixed orthogonal vector
/// when the iterates are collinear.
std::pair<Vector, Vector> descent_plane(const SurrogateModel& model, const Molecule& mol,
                                        double step_size);

void write_slice_csv(std::ostream& out, const SliceGrid& grid, const Matrix& values);

}  // namespace surrogate
