#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "surrogate/basis.hpp"

namespace surrogate {

enum class LossKind { Gdi, LowerBound, GradToGs, GradNormRange };

std::string_view to_string(LossKind kind);
std::optional<LossKind> parse_loss_kind(std::string_view name);

struct LossConfig {
  LossKind kind = LossKind::Gdi;
  double beta = 0.9;
  double step_size = 0.1;  // lambda
  double grad_min = 0.01;
  double grad_max = 100.0;

  void validate() const;
};

/// A loss value together with its derivative with respect to the gradient
/// argument it consumes.
struct LossWithGrad {
  double value = 0.0;
  Vector d_grad;
};

/// Distances before and after one gradient-descent step. Both the GDI loss and
/// the contraction factor are computed from these two numbers.
struct StepDistances {
  double before = 0.0;  // ||p - p*||
  double after = 0.0;   // ||p - lambda grad - p*||
};
StepDistances step_distances(const Coefficients& p, const Coefficients& p_star,
                             const Vector& grad, double step_size);

/// max(0, ||p - lambda grad - p*|| - beta ||p - p*||), evaluated as
/// before * max(0, after / before - beta) so that it is zero exactly when the
/// contraction factor after / before is <= beta.
double gdi_loss(const Coefficients& p, const Coefficients& p_star, const Vector& grad,
                double beta, double step_size);
LossWithGrad gdi_loss_with_grad(const Coefficients& p, const Coefficients& p_star,
                                const Vector& grad, double beta, double step_size);

/// max(0, E(p*) - E(p)).
double lower_bound_loss(double energy_at_ground_state, double energy_at_p);

/// 1 - cos(grad, p - p*). Zero at p = p*; 1 for a zero gradient elsewhere.
double grad_to_gs_loss(const Coefficients& p, const Coefficients& p_star, const Vector& grad);
LossWithGrad grad_to_gs_loss_with_grad(const Coefficients& p, const Coefficients& p_star,
                                       const Vector& grad);

/// max(0, ||grad|| - g_max) + max(0, g_min - ||grad||).
double grad_norm_range_loss(const Vector& grad, double grad_min, double grad_max);
LossWithGrad grad_norm_range_loss_with_grad(const Vector& grad, double grad_min, double grad_max);

/// Dispatches the gradient-consuming losses (everything except LowerBound).
LossWithGrad gradient_loss(const LossConfig& cfg, const Coefficients& p,
                           const Coefficients& p_star, const Vector& grad);

}  // namespace surrogate
