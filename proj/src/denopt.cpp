#include "surrogate/denopt.hpp"

#include <cmath>
#include <map>
#include <ostream>

#include "surrogate/csv.hpp"
#include "surrogate/errors.hpp"
#include "surrogate/losses.hpp"

namespace surrogate {

void OptimizerConfig::validate() const {
  require(std::isfinite(step_size) && step_size > 0.0, "optimizer: step size must be positive");
  require(max_steps >= 1, "optimizer: need at least one step");
  require(stop_tol >= 0.0, "optimizer: stop tolerance must be nonnegative");
  require(record_every >= 1, "optimizer: record_every must be at least 1");
  require(beta > 0.0 && beta < 1.0, "optimizer: beta must lie in (0, 1)");
}

std::string to_string(Termination t) {
  switch (t) {
    case Termination::MaxSteps:
      return "max_steps";
    case Termination::StopTol:
      return "stop_tol";
    case Termination::NonFinite:
      return "non_finite";
  }
  return "unknown";
}

Coefficients initial_guess(const Molecule& mol) { return dsad_coefficients(mol); }

Coefficients gd_step(const Coefficients& p, const Vector& grad, double step_size) {
  require(p.size() == grad.size(), "gd_step: dimension mismatch");
  return p - step_size * grad;
}

Trajectory optimize(const Functional& energy, const Coefficients& p0,
                    const Coefficients& p_star, const OptimizerConfig& cfg,
                    const LowdinRoots* natrep_roots) {
  cfg.validate();
  require(p0.size() == p_star.size(), "optimize: dimension mismatch between p0 and p*");
  if (natrep_roots) {
    require(natrep_roots->half.rows() == p0.size() && natrep_roots->inv_half.rows() == p0.size(),
            "optimize: Loewdin roots have the wrong dimension");
  }

  // x is the optimization variable: p itself, or q = S^{1/2} p in natrep mode.
  Vector x = natrep_roots ? Vector(natrep_roots->half * p0) : p0;
  const Vector x_star = natrep_roots ? Vector(natrep_roots->half * p_star) : p_star;

  Trajectory traj;
  for (std::size_t k = 0;; ++k) {
    const Coefficients p = natrep_roots ? Vector(natrep_roots->inv_half * x) : x;
    EnergyGradient eg = energy(p);
    require(eg.gradient.size() == p.size(), "optimize: functional returned a wrong-size gradient");
    const Vector g = natrep_roots ? Vector(natrep_roots->inv_half * eg.gradient) : eg.gradient;

    TrajectoryStep step;
    step.index = k;
    step.p = p;
    step.energy = eg.energy;
    step.grad_norm = g.norm();
    step.dist_to_gs = (x - x_star).norm();
    const bool finite = std::isfinite(eg.energy) && g.allFinite();
    step.gdi_loss = finite ? gdi_loss(x, x_star, g, cfg.beta, cfg.step_size) : HUGE_VAL;
    if (step.gdi_loss > 0.0 && !traj.first_gdi_violation) traj.first_gdi_violation = k;

    std::optional<Termination> done;
    if (!finite) {
      done = Termination::NonFinite;
    } else if (step.grad_norm <= cfg.stop_tol) {
      done = Termination::StopTol;
    } else if (k == cfg.max_steps) {
      done = Termination::MaxSteps;
    }

    if (done || k % cfg.record_every == 0) traj.steps.push_back(std::move(step));
    if (done) {
      traj.terminated_by = *done;
      traj.final_p = p;
      return traj;
    }
    x -= cfg.step_size * g;
    ++traj.steps_taken;
  }
}

Functional surrogate_functional(const SurrogateModel& model, const Molecule& mol) {
  check_compatible(model, mol);
  return [&model, &mol](const Coefficients& p) { return surrogate_evaluate(model, mol, p); };
}

Functional reference_functional(const Molecule& mol) {
  return [&mol](const Coefficients& p) { return reference_energy_grad(mol, p); };
}

Trajectory optimize(const SurrogateModel& model, const Molecule& mol, const OptimizerConfig& cfg) {
  const Functional f = surrogate_functional(model, mol);
  if (!cfg.natrep) return optimize(f, initial_guess(mol), mol.ground_state, cfg);
  const LowdinRoots roots = lowdin_roots(overlap_matrix(mol.basis));
  return optimize(f, initial_guess(mol), mol.ground_state, cfg, &roots);
}

void write_trajectory_header(std::ostream& out) {
  csv::Writer(out).write("molecule_id", "step", "energy", "grad_norm", "dist_to_gs", "gdi_loss");
}

void write_trajectory_rows(std::ostream& out, const std::string& molecule_id,
                           const Trajectory& traj) {
  csv::Writer w(out);
  for (const auto& s : traj.steps) {
    w.write(molecule_id, s.index, s.energy, s.grad_norm, s.dist_to_gs, s.gdi_loss);
  }
}

std::vector<NamedTrajectory> read_trajectory_csv(std::istream& in) {
  const csv::Table t = csv::read(in);
  const auto c_id = t.column("molecule_id");
  const auto c_step = t.column("step");
  const auto c_energy = t.column("energy");
  const auto c_grad = t.column("grad_norm");
  const auto c_dist = t.column("dist_to_gs");
  const auto c_gdi = t.column("gdi_loss");

  std::vector<NamedTrajectory> out;
  std::map<std::string, std::size_t> slot;
  for (const auto& row : t.rows) {
    auto [it, inserted] = slot.try_emplace(row[c_id], out.size());
    if (inserted) out.push_back({row[c_id], {}});
    Trajectory& traj = out[it->second].trajectory;
    TrajectoryStep s;
    s.index = static_cast<std::size_t>(std::stoull(row[c_step]));
    require(traj.steps.empty() || s.index > traj.steps.back().index,
            "trajectory CSV: step indices must increase within a molecule");
    s.energy = csv::parse_double(row[c_energy]);
    s.grad_norm = csv::parse_double(row[c_grad]);
    s.dist_to_gs = csv::parse_double(row[c_dist]);
    s.gdi_loss = csv::parse_double(row[c_gdi]);
    if (s.gdi_loss > 0.0 && !traj.first_gdi_violation) traj.first_gdi_violation = s.index;
    traj.steps_taken = s.index;
    traj.steps.push_back(std::move(s));
  }
  return out;
}

}  // namespace surrogate
