#include "surrogate/model.hpp"

#include <cmath>
#include <fstream>
#include <random>

#include "surrogate/errors.hpp"

namespace surrogate {

namespace {

using nlohmann::json;

constexpr int kCheckpointVersion = 1;

struct BuiltNetwork {
  ad::Graph graph;
  std::size_t output_offset;
};

BuiltNetwork build_network(const ModelSpec& spec) {
  ad::Graph g(spec.network_input_dim(), parameter_count(spec));
  ad::Node x = g.input();
  std::size_t offset = 0;
  std::size_t fan_in = spec.network_input_dim();
  for (const std::size_t width : spec.hidden) {
    x = g.tanh(g.affine(x, width, offset));
    offset += width * fan_in + width;
    fan_in = width;
  }
  const std::size_t output_offset = offset;
  g.set_output(g.affine(x, 1, offset));
  return {std::move(g), output_offset};
}

}  // namespace

void ModelSpec::validate() const {
  require(coeff_dim >= 1, "model: coefficient dimension must be positive");
  require(std::isfinite(parabola_prefactor) && parabola_prefactor > 0.0,
          "model: parabola prefactor must be positive");
  require(std::isfinite(input_scale) && input_scale > 0.0, "model: input scale must be positive");
  for (const auto w : hidden) require(w >= 1, "model: hidden widths must be positive");
}

std::size_t parameter_count(const ModelSpec& spec) {
  std::size_t count = 0;
  std::size_t fan_in = spec.network_input_dim();
  for (const std::size_t width : spec.hidden) {
    count += width * fan_in + width;
    fan_in = width;
  }
  return count + fan_in + 1;
}

SurrogateModel::SurrogateModel(ModelSpec spec, Vector theta)
    : spec_(std::move(spec)), theta_(std::move(theta)), network_(0, 0) {
  spec_.validate();
  require(static_cast<std::size_t>(theta_.size()) == surrogate::parameter_count(spec_),
          "model: parameter vector has size " + std::to_string(theta_.size()) + ", expected " +
              std::to_string(surrogate::parameter_count(spec_)));
  require(theta_.allFinite(), "model: parameters must be finite");
  auto built = build_network(spec_);
  network_ = std::move(built.graph);
  output_offset_ = built.output_offset;
}

void SurrogateModel::set_theta(Vector theta) {
  require(theta.size() == theta_.size(), "model: parameter vector size mismatch");
  require(theta.allFinite(), "model: parameters must be finite");
  theta_ = std::move(theta);
}

SurrogateModel initialize_parameters(const ModelSpec& spec, std::uint64_t seed) {
  spec.validate();
  std::mt19937_64 rng(seed);
  Vector theta = Vector::Zero(static_cast<Eigen::Index>(parameter_count(spec)));
  Eigen::Index offset = 0;
  std::size_t fan_in = spec.network_input_dim();
  for (const std::size_t width : spec.hidden) {
    std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(fan_in)));
    const auto n_weights = static_cast<Eigen::Index>(width * fan_in);
    for (Eigen::Index i = 0; i < n_weights; ++i) theta[offset + i] = normal(rng);
    offset += n_weights + static_cast<Eigen::Index>(width);
    fan_in = width;
  }
  return SurrogateModel(spec, std::move(theta));
}

void check_compatible(const SurrogateModel& model, const Molecule& mol) {
  require(mol.dim() == model.spec().coeff_dim,
          "molecule " + mol.id + " has " + std::to_string(mol.dim()) +
              " coefficients, model expects " + std::to_string(model.spec().coeff_dim));
  require(static_cast<std::size_t>(mol.features.size()) == model.spec().feature_dim,
          "molecule " + mol.id + " has " + std::to_string(mol.features.size()) +
              " features, model expects " + std::to_string(model.spec().feature_dim));
}

Vector network_input(const SurrogateModel& model, const Molecule& mol, const Coefficients& p) {
  check_compatible(model, mol);
  require(static_cast<std::size_t>(p.size()) == model.spec().coeff_dim,
          "surrogate: coefficient dimension mismatch");
  Vector z(static_cast<Eigen::Index>(model.spec().network_input_dim()));
  z << model.spec().input_scale * p, mol.features;
  return z;
}

double surrogate_energy(const SurrogateModel& model, const Molecule& mol, const Coefficients& p) {
  const Vector z = network_input(model, mol, p);
  const double a = model.spec().parabola_prefactor;
  return a * (p - mol.dsad).squaredNorm() + model.network().value(z, model.theta());
}

EnergyGradient surrogate_evaluate(const SurrogateModel& model, const Molecule& mol,
                                  const Coefficients& p) {
  const Vector z = network_input(model, mol, p);
  const auto& spec = model.spec();
  const auto n = static_cast<Eigen::Index>(spec.coeff_dim);
  const auto g = model.network().gradients(z, model.theta());
  const Vector offset = p - mol.dsad;
  EnergyGradient out;
  out.energy = spec.parabola_prefactor * offset.squaredNorm() + g.value;
  out.gradient = (2.0 * spec.parabola_prefactor) * offset + spec.input_scale * g.input.head(n);
  return out;
}

Vector surrogate_input_gradient(const SurrogateModel& model, const Molecule& mol,
                                const Coefficients& p) {
  return surrogate_evaluate(model, mol, p).gradient;
}

Vector surrogate_param_gradient(const SurrogateModel& model, const Molecule& mol,
                                const Coefficients& p) {
  return model.network().param_gradient(network_input(model, mol, p), model.theta());
}

SurrogateMixed surrogate_mixed(const SurrogateModel& model, const Molecule& mol,
                               const Coefficients& p, const ad::Graph::Outer& g) {
  const Vector z = network_input(model, mol, p);
  const auto& spec = model.spec();
  const auto n = static_cast<Eigen::Index>(spec.coeff_dim);
  const Vector parabola_grad = (2.0 * spec.parabola_prefactor) * (p - mol.dsad);

  // The network sees v_z; the loss sees grad_p E~ = parabola_grad + s v_z[:n].
  Vector full_gradient;
  auto network_outer = [&](const Vector& vz) {
    full_gradient = parabola_grad + spec.input_scale * vz.head(n);
    auto [value, dg] = g(full_gradient);
    Vector dz = Vector::Zero(vz.size());
    dz.head(n) = spec.input_scale * dg;
    return std::pair<double, Vector>(value, std::move(dz));
  };
  const auto mixed = model.network().mixed(z, model.theta(), network_outer);

  SurrogateMixed out;
  out.energy = spec.parabola_prefactor * (p - mol.dsad).squaredNorm() + mixed.value;
  out.input_gradient = std::move(full_gradient);
  out.loss = mixed.outer_value;
  out.param_gradient = mixed.param_gradient;
  return out;
}

void write_checkpoint_json(std::ostream& out, const Checkpoint& ckpt) {
  const auto& spec = ckpt.model.spec();
  const Vector& theta = ckpt.model.theta();
  json root;
  root["version"] = kCheckpointVersion;
  root["spec"] = {{"coeff_dim", spec.coeff_dim},
                  {"feature_dim", spec.feature_dim},
                  {"hidden", spec.hidden}};
  root["a"] = spec.parabola_prefactor;
  root["s"] = spec.input_scale;
  root["theta"] = std::vector<double>(theta.data(), theta.data() + theta.size());
  root["training_config"] = ckpt.training_config;
  root["rng_state"] = ckpt.rng_state;
  out << root.dump() << '\n';
}

Checkpoint read_checkpoint_json(std::istream& in) {
  json root;
  try {
    in >> root;
    require(root.at("version").get<int>() == kCheckpointVersion, "unsupported checkpoint version");
    ModelSpec spec;
    spec.coeff_dim = root.at("spec").at("coeff_dim").get<std::size_t>();
    spec.feature_dim = root.at("spec").at("feature_dim").get<std::size_t>();
    spec.hidden = root.at("spec").at("hidden").get<std::vector<std::size_t>>();
    spec.parabola_prefactor = root.at("a").get<double>();
    spec.input_scale = root.at("s").get<double>();
    const auto theta = root.at("theta").get<std::vector<double>>();
    Checkpoint ckpt{SurrogateModel(
        spec, Eigen::Map<const Vector>(theta.data(), static_cast<Eigen::Index>(theta.size())))};
    ckpt.training_config = root.value("training_config", json::object());
    ckpt.rng_state = root.value("rng_state", json::object());
    return ckpt;
  } catch (const json::exception& e) {
    throw ContractViolation(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream out(path);
  if (!out) throw ContractViolation("cannot open '" + path + "' for writing");
  write_checkpoint_json(out, ckpt);
  if (!out) throw ContractViolation("failed writing '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ContractViolation("cannot open checkpoint '" + path + "'");
  return read_checkpoint_json(in);
}

}  // namespace surrogate
