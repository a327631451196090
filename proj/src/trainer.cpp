#include "surrogate/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <sstream>

#include "surrogate/csv.hpp"
#include "surrogate/denopt.hpp"
#include "surrogate/errors.hpp"

namespace surrogate {

namespace {

using nlohmann::json;

Rng make_stream(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream)};
  return Rng(seq);
}

std::string engine_state(const Rng& rng) {
  std::ostringstream ss;
  ss << rng;
  return ss.str();
}

json vec_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

}  // namespace

double sample_radius(Rng& rng, const PerturbationConfig& cfg) {
  std::normal_distribution<double> normal(cfg.radius_mean, cfg.radius_std);
  return std::abs(normal(rng));
}

Coefficients perturb_with_radius(const Coefficients& p_star, double radius, Rng& rng) {
  return p_star + radius * random_unit_vector(static_cast<std::size_t>(p_star.size()), rng);
}

Coefficients perturb(const Coefficients& p_star, Rng& rng, const PerturbationConfig& cfg) {
  const double r = sample_radius(rng, cfg);
  return perturb_with_radius(p_star, r, rng);
}

TrainCache::TrainCache(double q_reset, PerturbationConfig perturbation)
    : q_reset_(q_reset), perturbation_(perturbation) {
  require(q_reset >= 0.0 && q_reset <= 1.0, "cache: q_reset must lie in [0, 1]");
}

const Coefficients* TrainCache::find(const std::string& id) const {
  const auto it = entries_.find(id);
  return it == entries_.end() ? nullptr : &it->second;
}

TrainCache::Fetch TrainCache::fetch(const Molecule& mol, Rng& perturb_rng) const {
  if (const auto* cached = find(mol.id)) return {*cached, true};
  return {perturb(mol.ground_state, perturb_rng, perturbation_), false};
}

bool TrainCache::commit(const std::string& id, Coefficients p, Rng& reset_rng) {
  require(p.allFinite(), "cache: refusing to store non-finite coefficients for " + id);
  const auto it = entries_.find(id);
  require(it == entries_.end() || it->second.size() == p.size(),
          "cache: dimension changed for " + id);
  entries_[id] = std::move(p);
  ++commits_;
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  if (uniform(reset_rng) < q_reset_) {
    entries_.erase(id);
    ++resets_;
    return true;
  }
  return false;
}

Coefficients cache_step(const TrainCache& cache, const Molecule& mol, Rng& rng) {
  return cache.fetch(mol, rng).p;
}

Adam::Adam(std::size_t dim, AdamConfig cfg)
    : cfg_(cfg),
      m_(Vector::Zero(static_cast<Eigen::Index>(dim))),
      v_(Vector::Zero(static_cast<Eigen::Index>(dim))) {}

void Adam::step(Vector& theta, const Vector& grad) {
  require(grad.size() == theta.size() && theta.size() == m_.size(), "adam: dimension mismatch");
  ++t_;
  m_ = cfg_.beta1 * m_ + (1.0 - cfg_.beta1) * grad;
  v_ = cfg_.beta2 * v_ + (1.0 - cfg_.beta2) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  theta.array() -= cfg_.learning_rate * (m_.array() / c1) / ((v_.array() / c2).sqrt() + cfg_.epsilon);
}

std::string to_string(SamplingMode mode) { return mode == SamplingMode::Pcd ? "pcd" : "static"; }

void TrainConfig::validate() const {
  loss.validate();
  require(batch_size >= 1, "train: batch size must be at least 1");
  require(epochs >= 1, "train: need at least one epoch");
  require(adam.learning_rate > 0.0, "train: learning rate must be positive");
  require(lr_final_fraction > 0.0 && lr_final_fraction <= 1.0,
          "train: final learning-rate fraction must lie in (0, 1]");
  require(q_reset >= 0.0 && q_reset <= 1.0, "train: q_reset must lie in [0, 1]");
  require(perturbation.radius_std >= 0.0, "train: perturbation std must be nonnegative");
}

json TrainConfig::to_json() const {
  return {{"loss", std::string(to_string(loss.kind))},
          {"beta", loss.beta},
          {"lambda", loss.step_size},
          {"g_min", loss.grad_min},
          {"g_max", loss.grad_max},
          {"batch_size", batch_size},
          {"epochs", epochs},
          {"optimizer", {{"name", "adam"},
                         {"learning_rate", adam.learning_rate},
                         {"lr_final_fraction", lr_final_fraction},
                         {"beta1", adam.beta1},
                         {"beta2", adam.beta2},
                         {"epsilon", adam.epsilon}}},
          {"mode", to_string(mode)},
          {"seed", seed},
          {"q_reset", q_reset},
          {"perturbation", {{"mean", perturbation.radius_mean}, {"std", perturbation.radius_std}}}};
}

void write_train_log_csv(std::ostream& out, const std::vector<TrainLogRow>& log) {
  csv::Writer w(out);
  w.write("step", "epoch", "loss", "mean_contraction", "cache_hits", "resets");
  for (const auto& r : log) {
    w.write(r.step, r.epoch, r.loss, r.mean_contraction, r.cache_hits, r.resets);
  }
}

Trainer::Trainer(const Dataset& dataset, SurrogateModel model, TrainConfig cfg)
    : dataset_(dataset),
      model_(std::move(model)),
      cfg_(std::move(cfg)),
      cache_(cfg_.q_reset, cfg_.perturbation),
      adam_(model_.parameter_count(), cfg_.adam),
      shuffle_rng_(make_stream(cfg_.seed, 1)),
      perturb_rng_(make_stream(cfg_.seed, 2)),
      reset_rng_(make_stream(cfg_.seed, 3)) {
  cfg_.validate();
  require(!dataset_.molecules.empty(), "train: dataset is empty");
  require(dataset_.duplication >= 1, "train: dataset duplication must be at least 1");
  for (const auto& m : dataset_.molecules) check_compatible(model_, m);
}

json Trainer::rng_state() const {
  return {{"shuffle", engine_state(shuffle_rng_)},
          {"perturb", engine_state(perturb_rng_)},
          {"reset", engine_state(reset_rng_)},
          {"adam_step", adam_.iterations()}};
}

Checkpoint Trainer::checkpoint() const {
  Checkpoint ckpt{model_};
  ckpt.training_config = cfg_.to_json();
  ckpt.training_config["steps"] = step_;
  ckpt.training_config["epochs_done"] = epoch_;
  ckpt.training_config["duplication"] = dataset_.duplication;
  ckpt.rng_state = rng_state();
  return ckpt;
}

void Trainer::run() {
  while (epoch_ < cfg_.epochs) run_epoch();
}

void Trainer::run_epoch() {
  const std::size_t n = dataset_.molecules.size();
  std::vector<std::size_t> order(n * dataset_.duplication);
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i % n;
  std::shuffle(order.begin(), order.end(), shuffle_rng_);
  for (std::size_t start = 0; start < order.size(); start += cfg_.batch_size) {
    const std::size_t stop = std::min(order.size(), start + cfg_.batch_size);
    train_step({order.begin() + static_cast<std::ptrdiff_t>(start),
                order.begin() + static_cast<std::ptrdiff_t>(stop)});
  }
  ++epoch_;
}

void Trainer::train_step(const std::vector<std::size_t>& batch) {
  const bool pcd = cfg_.mode == SamplingMode::Pcd;
  const auto& spec = model_.spec();
  const auto n = static_cast<Eigen::Index>(spec.coeff_dim);

  // Batch assembly: repeated occurrences of a molecule share one entry.
  std::vector<BatchEntry> entries;
  std::unordered_map<std::size_t, std::size_t> slot;
  for (const std::size_t mi : batch) {
    auto [it, inserted] = slot.try_emplace(mi, entries.size());
    if (inserted) {
      const Molecule& mol = dataset_.molecules[mi];
      BatchEntry e;
      e.molecule = mi;
      if (pcd) {
        auto fetched = cache_.fetch(mol, perturb_rng_);
        e.p = std::move(fetched.p);
        e.cache_hit = fetched.hit;
      } else {
        e.p = perturb(mol.ground_state, perturb_rng_, cfg_.perturbation);
      }
      entries.push_back(std::move(e));
    }
    ++entries[it->second].occurrences;
  }

  double loss_sum = 0.0;
  Vector grad_sum = Vector::Zero(static_cast<Eigen::Index>(model_.parameter_count()));
  for (auto& e : entries) {
    const Molecule& mol = dataset_.molecules[e.molecule];
    const auto weight = static_cast<double>(e.occurrences);
    double loss = 0.0;
    if (cfg_.loss.kind == LossKind::LowerBound) {
      const auto at_p = model_.network().gradients(network_input(model_, mol, e.p), model_.theta());
      const auto at_gs =
          model_.network().gradients(network_input(model_, mol, mol.ground_state), model_.theta());
      const double e_p = spec.parabola_prefactor * (e.p - mol.dsad).squaredNorm() + at_p.value;
      const double e_gs =
          spec.parabola_prefactor * (mol.ground_state - mol.dsad).squaredNorm() + at_gs.value;
      e.grad = (2.0 * spec.parabola_prefactor) * (e.p - mol.dsad) +
               spec.input_scale * at_p.input.head(n);
      loss = lower_bound_loss(e_gs, e_p);
      if (loss > 0.0) grad_sum += weight * (at_gs.param - at_p.param);
    } else {
      const auto mixed = surrogate_mixed(model_, mol, e.p, [&](const Vector& v) {
        auto r = gradient_loss(cfg_.loss, e.p, mol.ground_state, v);
        return std::pair<double, Vector>(r.value, std::move(r.d_grad));
      });
      e.grad = mixed.input_gradient;
      loss = mixed.loss;
      grad_sum += weight * mixed.param_gradient;
    }
    loss_sum += weight * loss;
  }
  const auto total = static_cast<double>(batch.size());
  const double loss = loss_sum / total;
  const Vector grad = grad_sum / total;

  const auto diverged = [&](const std::string& what) {
    json dump;
    dump["step"] = step_;
    dump["epoch"] = epoch_;
    dump["loss"] = std::isfinite(loss) ? json(loss) : json(std::to_string(loss));
    dump["entries"] = json::array();
    for (const auto& e : entries) {
      dump["entries"].push_back({{"id", dataset_.molecules[e.molecule].id},
                                 {"occurrences", e.occurrences},
                                 {"p", vec_json(e.p)},
                                 {"grad", e.grad.allFinite() ? vec_json(e.grad) : json("non-finite")}});
    }
    return TrainingDiverged(what + " at training step " + std::to_string(step_), dump.dump(1));
  };
  if (!std::isfinite(loss) || !grad.allFinite()) throw diverged("non-finite surrogate loss");

  const Vector theta_before = model_.theta();
  Vector theta = theta_before;
  if (cfg_.lr_final_fraction < 1.0) {
    const double per_epoch = std::ceil(static_cast<double>(dataset_.molecules.size() * dataset_.duplication) /
                                       static_cast<double>(cfg_.batch_size));
    const double last_step = std::max(1.0, per_epoch * static_cast<double>(cfg_.epochs) - 1.0);
    const double progress = std::min(1.0, static_cast<double>(step_) / last_step);
    const double f = cfg_.lr_final_fraction;
    adam_.set_learning_rate(cfg_.adam.learning_rate *
                            (f + (1.0 - f) * 0.5 * (1.0 + std::cos(std::acos(-1.0) * progress))));
  }
  adam_.step(theta, grad);
  if (!theta.allFinite()) throw diverged("non-finite parameters");
  model_.set_theta(std::move(theta));

  TrainLogRow row;
  row.step = step_;
  row.epoch = epoch_;
  row.loss = loss;
  double contraction_sum = 0.0;
  std::size_t contraction_count = 0;
  for (auto& e : entries) {
    const Molecule& mol = dataset_.molecules[e.molecule];
    const auto d = step_distances(e.p, mol.ground_state, e.grad, cfg_.loss.step_size);
    if (d.before > 0.0) {
      contraction_sum += d.after / d.before;
      ++contraction_count;
    }
    if (e.cache_hit) ++row.cache_hits;
    if (pcd) {
      e.next_p = gd_step(e.p, e.grad, cfg_.loss.step_size);
      e.committed = true;
      e.reset = cache_.commit(mol.id, e.next_p, reset_rng_);
      if (e.reset) ++row.resets;
    }
  }
  row.mean_contraction = contraction_count ? contraction_sum / static_cast<double>(contraction_count) : 0.0;
  log_.push_back(row);

  if (observer_) {
    StepEvent ev;
    ev.step = step_;
    ev.epoch = epoch_;
    ev.loss = loss;
    ev.theta_before = &theta_before;
    ev.theta_after = &model_.theta();
    ev.entries = &entries;
    observer_(ev);
  }
  ++step_;
  if (checkpoint_ && cfg_.checkpoint_every > 0 && step_ % cfg_.checkpoint_every == 0) {
    checkpoint_(*this);
  }
}

TrainResult train(const Dataset& dataset, SurrogateModel model, const TrainConfig& cfg,
                  Trainer::StepObserver observer) {
  Trainer trainer(dataset, std::move(model), cfg);
  trainer.set_step_observer(std::move(observer));
  trainer.run();
  return {trainer.model(), trainer.log(), trainer.cache().commits(), trainer.cache().resets()};
}

}  // namespace surrogate
