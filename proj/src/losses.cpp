#include "surrogate/losses.hpp"

#include <algorithm>
#include <cmath>

#include "surrogate/errors.hpp"

namespace surrogate {

std::string_view to_string(LossKind kind) {
  switch (kind) {
    case LossKind::Gdi:
      return "gdi";
    case LossKind::LowerBound:
      return "lower_bound";
    case LossKind::GradToGs:
      return "grad_to_gs";
    case LossKind::GradNormRange:
      return "grad_norm_range";
  }
  return "unknown";
}

std::optional<LossKind> parse_loss_kind(std::string_view name) {
  for (const auto kind :
       {LossKind::Gdi, LossKind::LowerBound, LossKind::GradToGs, LossKind::GradNormRange}) {
    if (name == to_string(kind)) return kind;
  }
  return std::nullopt;
}

void LossConfig::validate() const {
  require(beta > 0.0 && beta < 1.0, "loss: beta must lie in (0, 1)");
  require(std::isfinite(step_size) && step_size > 0.0, "loss: step size must be positive");
  require(grad_min >= 0.0 && grad_min < grad_max, "loss: need 0 <= g_min < g_max");
}

StepDistances step_distances(const Coefficients& p, const Coefficients& p_star,
                             const Vector& grad, double step_size) {
  require(p.size() == p_star.size() && p.size() == grad.size(),
          "step_distances: dimension mismatch");
  return {(p - p_star).norm(), (p - step_size * grad - p_star).norm()};
}

double gdi_loss(const Coefficients& p, const Coefficients& p_star, const Vector& grad,
                double beta, double step_size) {
  return gdi_loss_with_grad(p, p_star, grad, beta, step_size).value;
}

LossWithGrad gdi_loss_with_grad(const Coefficients& p, const Coefficients& p_star,
                                const Vector& grad, double beta, double step_size) {
  require(p.size() == p_star.size() && p.size() == grad.size(), "gdi_loss: dimension mismatch");
  const Vector after_vec = p - step_size * grad - p_star;
  const double before = (p - p_star).norm();
  const double after = after_vec.norm();
  LossWithGrad out;
  out.d_grad = Vector::Zero(grad.size());
  if (before > 0.0) {
    out.value = before * std::max(0.0, after / before - beta);
  } else {
    out.value = after;
  }
  if (out.value > 0.0) out.d_grad = (-step_size / after) * after_vec;
  return out;
}

double lower_bound_loss(double energy_at_ground_state, double energy_at_p) {
  return std::max(0.0, energy_at_ground_state - energy_at_p);
}

double grad_to_gs_loss(const Coefficients& p, const Coefficients& p_star, const Vector& grad) {
  return grad_to_gs_loss_with_grad(p, p_star, grad).value;
}

LossWithGrad grad_to_gs_loss_with_grad(const Coefficients& p, const Coefficients& p_star,
                                       const Vector& grad) {
  require(p.size() == p_star.size() && p.size() == grad.size(),
          "grad_to_gs_loss: dimension mismatch");
  const Vector d = p - p_star;
  const double dn = d.norm();
  const double gn = grad.norm();
  LossWithGrad out;
  out.d_grad = Vector::Zero(grad.size());
  if (dn == 0.0) {
    out.value = 0.0;
    return out;
  }
  if (gn == 0.0) {
    out.value = 1.0;
    return out;
  }
  const double cosine = grad.dot(d) / (gn * dn);
  out.value = 1.0 - cosine;
  // d cos / d g = d / (|g||d|) - cos g / |g|^2
  out.d_grad = -(d / (gn * dn) - (cosine / (gn * gn)) * grad);
  return out;
}

double grad_norm_range_loss(const Vector& grad, double grad_min, double grad_max) {
  return grad_norm_range_loss_with_grad(grad, grad_min, grad_max).value;
}

LossWithGrad grad_norm_range_loss_with_grad(const Vector& grad, double grad_min, double grad_max) {
  const double gn = grad.norm();
  LossWithGrad out;
  out.value = std::max(0.0, gn - grad_max) + std::max(0.0, grad_min - gn);
  out.d_grad = Vector::Zero(grad.size());
  if (gn > grad_max) {
    out.d_grad = grad / gn;
  } else if (gn < grad_min && gn > 0.0) {
    out.d_grad = -grad / gn;
  }
  return out;
}

LossWithGrad gradient_loss(const LossConfig& cfg, const Coefficients& p,
                           const Coefficients& p_star, const Vector& grad) {
  switch (cfg.kind) {
    case LossKind::Gdi:
      return gdi_loss_with_grad(p, p_star, grad, cfg.beta, cfg.step_size);
    case LossKind::GradToGs:
      return grad_to_gs_loss_with_grad(p, p_star, grad);
    case LossKind::GradNormRange:
      return grad_norm_range_loss_with_grad(grad, cfg.grad_min, cfg.grad_max);
    case LossKind::LowerBound:
      break;
  }
  throw ContractViolation("gradient_loss: lower_bound does not consume gradients");
}

}  // namespace surrogate
