#include "surrogate/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "surrogate/csv.hpp"
#include "surrogate/errors.hpp"
#include "surrogate/losses.hpp"

namespace surrogate {

double contraction_factor(const Coefficients& p, const Coefficients& p_star, const Vector& grad,
                          double step_size) {
  const auto d = step_distances(p, p_star, grad, step_size);
  require(d.before > 0.0, "contraction_factor: undefined at p = p*");
  return d.after / d.before;
}

GradientSource reference_gradient_source() {
  return [](const Molecule& mol, const Coefficients& p) {
    return reference_energy_grad(mol, p).gradient;
  };
}

GradientSource surrogate_gradient_source(const SurrogateModel& model) {
  return [&model](const Molecule& mol, const Coefficients& p) {
    return surrogate_input_gradient(model, mol, p);
  };
}

ContractionScan contraction_scan(const Dataset& dataset, const GradientSource& gradient,
                                 const ContractionScanOptions& opt) {
  require(!dataset.molecules.empty(), "contraction_scan: empty dataset");
  require(opt.step_size >= 0.0, "contraction_scan: step size must be nonnegative");
  Rng rng(opt.seed);
  ContractionScan scan;
  scan.records.reserve(opt.samples);
  std::size_t below = 0;
  for (std::size_t k = 0; k < opt.samples; ++k) {
    const Molecule& mol = dataset.molecules[k % dataset.molecules.size()];
    Coefficients p;
    do {
      p = perturb(mol.ground_state, rng, opt.perturbation);
    } while ((p - mol.ground_state).norm() == 0.0);
    ContractionRecord rec;
    rec.molecule_id = mol.id;
    rec.distance = (p - mol.ground_state).norm();
    rec.factor = contraction_factor(p, mol.ground_state, gradient(mol, p), opt.step_size);
    rec.step_size = opt.step_size;
    if (rec.factor < opt.beta) ++below;
    scan.records.push_back(std::move(rec));
  }
  scan.fraction_below_beta =
      opt.samples ? static_cast<double>(below) / static_cast<double>(opt.samples) : 0.0;
  return scan;
}

void write_contraction_csv(std::ostream& out, const std::vector<ContractionRecord>& records) {
  csv::Writer w(out);
  w.write("molecule_id", "distance", "contraction_factor", "lambda");
  for (const auto& r : records) w.write(r.molecule_id, r.distance, r.factor, r.step_size);
}

ConvergenceReport verify_exponential_convergence(const Trajectory& traj, double beta) {
  require(beta > 0.0 && beta < 1.0, "verify_exponential_convergence: beta must lie in (0, 1)");
  ConvergenceReport report;
  if (traj.steps.empty()) return report;
  require(traj.steps.front().index == 0, "verify_exponential_convergence: trajectory lacks state 0");
  report.excluded_from = traj.first_gdi_violation;
  const double d0 = traj.steps.front().dist_to_gs;
  for (const auto& s : traj.steps) {
    // State n is covered when steps 0..n-1 all satisfied the GDI criterion.
    if (traj.first_gdi_violation && s.index > *traj.first_gdi_violation) break;
    ++report.checked_steps;
    const double bound = std::pow(beta, static_cast<double>(s.index)) * d0 * (1.0 + 1e-10);
    if (!(s.dist_to_gs <= bound)) {
      report.holds = false;
      report.first_violation = s.index;
      break;
    }
  }
  return report;
}

std::vector<GroupError> loophole_report(const Vector& error,
                                        const std::vector<std::vector<std::size_t>>& groups) {
  const auto dim = static_cast<std::size_t>(error.size());
  std::vector<int> seen(dim, 0);
  for (const auto& g : groups) {
    for (const auto i : g) {
      require(i < dim, "loophole_report: group index out of range");
      ++seen[i];
    }
  }
  require(std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; }),
          "loophole_report: groups must partition the coefficient indices");
  const double total = error.squaredNorm();
  std::vector<GroupError> out;
  for (std::size_t k = 0; k < groups.size(); ++k) {
    double sq = 0.0;
    for (const auto i : groups[k]) sq += error[static_cast<Eigen::Index>(i)] * error[static_cast<Eigen::Index>(i)];
    out.push_back({k, std::sqrt(sq), total > 0.0 ? sq / total : 0.0});
  }
  return out;
}

std::vector<GroupError> loophole_report(const Trajectory& traj, const Coefficients& p_star,
                                        const std::vector<std::vector<std::size_t>>& groups) {
  require(traj.final_p.size() == p_star.size(), "loophole_report: trajectory has no final state");
  return loophole_report(Vector(traj.final_p - p_star), groups);
}

StiffnessGroups stiffness_groups(const Matrix& hessian) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(hessian);
  if (eig.info() != Eigen::Success) throw NumericError("stiffness_groups: eigensolver failed");
  const Eigen::Index n = hessian.rows();
  StiffnessGroups out;
  out.basis = eig.eigenvectors().rowwise().reverse();  // descending eigenvalues
  out.groups.resize(2);
  const auto half = static_cast<std::size_t>((n + 1) / 2);
  for (std::size_t i = 0; i < static_cast<std::size_t>(n); ++i) out.groups[i < half ? 0 : 1].push_back(i);
  return out;
}

SliceGrid gradient_norm_slice(const SurrogateModel& model, const Molecule& mol,
                              const Coefficients& origin, const Vector& d1, const Vector& d2,
                              std::size_t resolution, double extent) {
  require(resolution >= 2, "gradient_norm_slice: resolution must be at least 2");
  require(origin.size() == d1.size() && d1.size() == d2.size(),
          "gradient_norm_slice: dimension mismatch");
  const double n1 = d1.norm();
  const double n2 = d2.norm();
  require(n1 > 0.0 && n2 > 0.0, "gradient_norm_slice: zero direction");
  const double cosine = std::abs(d1.dot(d2)) / (n1 * n2);
  require(cosine < 1.0 - 1e-12, "gradient_norm_slice: directions must be linearly independent");

  SliceGrid grid;
  const auto res = static_cast<Eigen::Index>(resolution);
  for (std::size_t i = 0; i < resolution; ++i) {
    grid.coords.push_back(-extent + 2.0 * extent * static_cast<double>(i) /
                                        static_cast<double>(resolution - 1));
  }
  grid.energy.resize(res, res);
  grid.grad_norm.resize(res, res);
  for (Eigen::Index i = 0; i < res; ++i) {
    for (Eigen::Index j = 0; j < res; ++j) {
      const Coefficients p = origin + grid.coords[static_cast<std::size_t>(i)] * d1 +
                             grid.coords[static_cast<std::size_t>(j)] * d2;
      const auto eg = surrogate_evaluate(model, mol, p);
      grid.energy(i, j) = eg.energy;
      grid.grad_norm(i, j) = eg.gradient.norm();
    }
  }
  return grid;
}

std::pair<Vector, Vector> descent_plane(const SurrogateModel& model, const Molecule& mol,
                                        double step_size) {
  OptimizerConfig cfg;
  cfg.step_size = step_size;
  cfg.max_steps = 2;
  cfg.stop_tol = 0.0;
  const Trajectory traj = optimize(model, mol, cfg);
  const Vector& p_star = mol.ground_state;
  const double scale = (initial_guess(mol) - p_star).norm();
  require(scale > 0.0, "descent_plane: initial guess coincides with the ground state");

  Vector a = traj.steps.size() > 1 ? Vector(traj.steps[1].p - p_star) : Vector(initial_guess(mol) - p_star);
  Vector b = traj.steps.size() > 2 ? Vector(traj.steps[2].p - p_star) : Vector::Zero(a.size());
  if (a.norm() == 0.0) a = initial_guess(mol) - p_star;
  a.normalize();
  b -= a.dot(b) * a;
  if (b.norm() < 1e-8 * scale) {
    // Collinear iterates: take the coordinate axis least aligned with a.
    Eigen::Index k = 0;
    a.cwiseAbs().minCoeff(&k);
    b = Vector::Unit(a.size(), k);
    b -= a.dot(b) * a;
  }
  b.normalize();
  return {scale * a, scale * b};
}

void write_slice_csv(std::ostream& out, const SliceGrid& grid, const Matrix& values) {
  csv::Writer w(out);
  w.write("i", "j", "a", "b", "value");
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    for (Eigen::Index j = 0; j < values.cols(); ++j) {
      w.write(static_cast<std::size_t>(i), static_cast<std::size_t>(j),
              grid.coords[static_cast<std::size_t>(i)], grid.coords[static_cast<std::size_t>(j)],
              values(i, j));
    }
  }
}

}  // namespace surrogate
