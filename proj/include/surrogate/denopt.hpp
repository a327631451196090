#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "surrogate/basis.hpp"
#include "surrogate/model.hpp"
#include "surrogate/synth.hpp"

namespace surrogate {

struct OptimizerConfig {
  double step_size = 0.1;  // lambda
  std::size_t max_steps = 500;
  bool natrep = false;
  double stop_tol = 1e-6;  // on the gradient norm in the optimization coordinates
  std::size_t record_every = 1;
  double beta = 0.9;  // only used to record the per-step GDI loss

  void validate() const;
};

/// State k of a run: coefficients p_k, the energy and gradient there, the
/// distance to the ground state and the GDI loss of the step taken from p_k.
/// In natrep mode the gradient norm, distance and GDI loss are measured in
/// Loewdin coordinates q = S^{1/2} p, in which the update is plain descent.
struct TrajectoryStep {
  std::size_t index = 0;
  Coefficients p;
  double energy = 0.0;
  double grad_norm = 0.0;
  double dist_to_gs = 0.0;
  double gdi_loss = 0.0;
};

enum class Termination { MaxSteps, StopTol, NonFinite };
std::string to_string(Termination t);

struct Trajectory {
  std::vector<TrajectoryStep> steps;
  Termination terminated_by = Termination::MaxSteps;
  std::size_t steps_taken = 0;  // number of descent updates applied
  Coefficients final_p;
  /// Index of the first state whose step had a positive GDI loss, recorded or not.
  std::optional<std::size_t> first_gdi_violation;

  bool diverged() const { return terminated_by == Termination::NonFinite; }
};

using Functional = std::function<EnergyGradient(const Coefficients&)>;

Coefficients initial_guess(const Molecule& mol);

Coefficients gd_step(const Coefficients& p, const Vector& grad, double step_size);

/// Plain gradient descent on `energy` from p0. With `natrep_roots` the descent
/// runs on q = S^{1/2} p using the gradient S^{-1/2} grad_p E.
Trajectory optimize(const Functional& energy, const Coefficients& p0,
                    const Coefficients& p_star, const OptimizerConfig& cfg,
                    const LowdinRoots* natrep_roots = nullptr);

/// Runs from the initial guess of `mol` on the surrogate. Natrep mode builds
/// the Loewdin roots of the molecule's overlap matrix.
Trajectory optimize(const SurrogateModel& model, const Molecule& mol, const OptimizerConfig& cfg);

Functional surrogate_functional(const SurrogateModel& model, const Molecule& mol);
Functional reference_functional(const Molecule& mol);

/// Long-format trajectory CSV: molecule_id,step,energy,grad_norm,dist_to_gs,gdi_loss.
void write_trajectory_header(std::ostream& out);
void write_trajectory_rows(std::ostream& out, const std::string& molecule_id,
                           const Trajectory& traj);

struct NamedTrajectory {
  std::string molecule_id;
  Trajectory trajectory;  // steps carry no coefficient vectors
};
std::vector<NamedTrajectory> read_trajectory_csv(std::istream& in);

}  // namespace surrogate
