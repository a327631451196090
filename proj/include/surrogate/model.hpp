#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "surrogate/autodiff.hpp"
#include "surrogate/synth.hpp"

namespace surrogate {

struct ModelSpec {
  std::size_t coeff_dim = 0;
  std::size_t feature_dim = 0;
  std::vector<std::size_t> hidden{64, 64};
  double parabola_prefactor = 0.1;  // a
  double input_scale = 10.0;        // s

  void validate() const;
  std::size_t network_input_dim() const { return coeff_dim + feature_dim; }
};

/// Learned functional
///   E~(p; theta) = a ||p - p-bar||^2 + N(concat(s p, features); theta)
/// where N is a tanh multilayer perceptron with a scalar linear output.
class SurrogateModel {
 public:
  SurrogateModel(ModelSpec spec, Vector theta);

  const ModelSpec& spec() const { return spec_; }
  const Vector& theta() const { return theta_; }
  void set_theta(Vector theta);
  std::size_t parameter_count() const { return static_cast<std::size_t>(theta_.size()); }
  const ad::Graph& network() const { return network_; }

  /// Offset and size of the final affine layer's weights inside theta.
  std::size_t output_layer_offset() const { return output_offset_; }
  std::size_t output_layer_size() const { return parameter_count() - output_offset_; }

 private:
  ModelSpec spec_;
  Vector theta_;
  ad::Graph network_;
  std::size_t output_offset_ = 0;
};

/// Number of parameters of the network described by `spec`.
std::size_t parameter_count(const ModelSpec& spec);

/// Hidden layers get N(0, 1/fan_in) weights and zero biases; the output layer
/// is exactly zero so the initial surrogate is the bare parabola.
SurrogateModel initialize_parameters(const ModelSpec& spec, std::uint64_t seed);

/// Network input concat(s p, features).
Vector network_input(const SurrogateModel& model, const Molecule& mol, const Coefficients& p);

double surrogate_energy(const SurrogateModel& model, const Molecule& mol, const Coefficients& p);
Vector surrogate_input_gradient(const SurrogateModel& model, const Molecule& mol,
                                const Coefficients& p);
EnergyGradient surrogate_evaluate(const SurrogateModel& model, const Molecule& mol,
                                  const Coefficients& p);

/// d E~(p; theta) / d theta. The parabola does not depend on theta.
Vector surrogate_param_gradient(const SurrogateModel& model, const Molecule& mol,
                                const Coefficients& p);

struct SurrogateMixed {
  double energy = 0.0;
  Vector input_gradient;  // grad_p E~
  double loss = 0.0;      // g(grad_p E~)
  Vector param_gradient;  // d g(grad_p E~) / d theta
};

/// Evaluates g on the full surrogate gradient and returns its theta-gradient.
/// `g` returns its value and derivative with respect to grad_p E~.
SurrogateMixed surrogate_mixed(const SurrogateModel& model, const Molecule& mol,
                               const Coefficients& p, const ad::Graph::Outer& g);

void check_compatible(const SurrogateModel& model, const Molecule& mol);

/// Checkpoint serialization. `training_config` and `rng_state` are opaque
/// JSON blobs carried along for reproducibility.
struct Checkpoint {
  SurrogateModel model;
  nlohmann::json training_config = nlohmann::json::object();
  nlohmann::json rng_state = nlohmann::json::object();
};

void write_checkpoint_json(std::ostream& out, const Checkpoint& ckpt);
Checkpoint read_checkpoint_json(std::istream& in);
void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace surrogate
