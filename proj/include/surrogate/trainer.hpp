#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "surrogate/errors.hpp"
#include "surrogate/losses.hpp"
#include "surrogate/model.hpp"
#include "surrogate/synth.hpp"

namespace surrogate {

struct PerturbationConfig {
  double radius_mean = 0.05;
  double radius_std = 0.05;
};

/// |r| with r ~ Normal(radius_mean, radius_std).
double sample_radius(Rng& rng, const PerturbationConfig& cfg = {});

/// p* + r u with u uniform on the unit sphere and r from sample_radius.
Coefficients perturb(const Coefficients& p_star, Rng& rng, const PerturbationConfig& cfg = {});
Coefficients perturb_with_radius(const Coefficients& p_star, double radius, Rng& rng);

/// Persistent per-molecule coefficients for train-time density optimization.
class TrainCache {
 public:
  explicit TrainCache(double q_reset = 0.01, PerturbationConfig perturbation = {});

  struct Fetch {
    Coefficients p;
    bool hit = false;
  };
  /// Cached coefficients if present, otherwise a fresh (uncommitted) perturbation.
  Fetch fetch(const Molecule& mol, Rng& perturb_rng) const;

  /// Stores p, then deletes the entry with probability q_reset.
  /// Returns true if the entry was deleted.
  bool commit(const std::string& id, Coefficients p, Rng& reset_rng);

  bool contains(const std::string& id) const { return entries_.count(id) != 0; }
  const Coefficients* find(const std::string& id) const;
  std::size_t size() const { return entries_.size(); }
  double q_reset() const { return q_reset_; }
  std::size_t commits() const { return commits_; }
  std::size_t resets() const { return resets_; }

 private:
  double q_reset_;
  PerturbationConfig perturbation_;
  std::unordered_map<std::string, Coefficients> entries_;
  std::size_t commits_ = 0;
  std::size_t resets_ = 0;
};

Coefficients cache_step(const TrainCache& cache, const Molecule& mol, Rng& rng);

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class Adam {
 public:
  Adam(std::size_t dim, AdamConfig cfg);
  void step(Vector& theta, const Vector& grad);
  std::size_t iterations() const { return t_; }
  double learning_rate() const { return cfg_.learning_rate; }
  void set_learning_rate(double lr) { cfg_.learning_rate = lr; }

 private:
  AdamConfig cfg_;
  Vector m_;
  Vector v_;
  std::size_t t_ = 0;
};

enum class SamplingMode { Pcd, Static };
std::string to_string(SamplingMode mode);

struct TrainConfig {
  LossConfig loss;
  std::size_t batch_size = 16;
  std::size_t epochs = 50;
  AdamConfig adam;
  // Cosine decay of the Adam step size down to this fraction by the last step; 1 keeps it constant.
  double lr_final_fraction = 1.0;
  SamplingMode mode = SamplingMode::Pcd;
  std::uint64_t seed = 0;
  double q_reset = 0.01;
  PerturbationConfig perturbation;
  std::size_t checkpoint_every = 0;  // steps; 0 disables periodic checkpoints

  void validate() const;
  nlohmann::json to_json() const;
};

struct TrainLogRow {
  std::size_t step = 0;
  std::size_t epoch = 0;
  double loss = 0.0;
  double mean_contraction = 0.0;
  std::size_t cache_hits = 0;
  std::size_t resets = 0;
};

void write_train_log_csv(std::ostream& out, const std::vector<TrainLogRow>& log);

/// One distinct molecule of a batch as seen by the step observer.
struct BatchEntry {
  std::size_t molecule = 0;  // index into the dataset
  std::size_t occurrences = 0;
  Coefficients p;            // coefficients the loss was evaluated at
  Vector grad;               // grad_p E~ under the pre-update parameters
  bool cache_hit = false;
  bool committed = false;
  Coefficients next_p;       // value written to the cache (pcd only)
  bool reset = false;
};

struct StepEvent {
  std::size_t step = 0;
  std::size_t epoch = 0;
  double loss = 0.0;
  const Vector* theta_before = nullptr;
  const Vector* theta_after = nullptr;
  const std::vector<BatchEntry>* entries = nullptr;
};

/// Raised on a non-finite loss; `diagnostic()` holds a JSON dump of the batch.
class TrainingDiverged : public NumericError {
 public:
  TrainingDiverged(const std::string& what, std::string diagnostic)
      : NumericError(what), diagnostic_(std::move(diagnostic)) {}
  const std::string& diagnostic() const { return diagnostic_; }

 private:
  std::string diagnostic_;
};

/// Surrogate training with train-time density optimization.
///
/// Each step loads a batch of the duplicated, shuffled dataset, substitutes
/// cached (or freshly perturbed) coefficients, evaluates the surrogate loss,
/// updates theta with Adam and, in pcd mode, advances every distinct molecule
/// of the batch by one descent step computed from the pre-update gradient.
/// The new coefficients go to the cache and each is dropped with probability
/// q_reset. Static mode draws a fresh perturbation on every visit.
class Trainer {
 public:
  using StepObserver = std::function<void(const StepEvent&)>;
  using CheckpointCallback = std::function<void(const Trainer&)>;

  Trainer(const Dataset& dataset, SurrogateModel model, TrainConfig cfg);

  void set_step_observer(StepObserver obs) { observer_ = std::move(obs); }
  void set_checkpoint_callback(CheckpointCallback cb) { checkpoint_ = std::move(cb); }

  void run_epoch();
  void run();

  const SurrogateModel& model() const { return model_; }
  const TrainConfig& config() const { return cfg_; }
  const TrainCache& cache() const { return cache_; }
  const std::vector<TrainLogRow>& log() const { return log_; }
  std::size_t steps() const { return step_; }
  std::size_t epochs_done() const { return epoch_; }
  /// Serialized state of the three random streams (shuffle, perturb, reset).
  nlohmann::json rng_state() const;
  Checkpoint checkpoint() const;

 private:
  void train_step(const std::vector<std::size_t>& batch);

  const Dataset& dataset_;
  SurrogateModel model_;
  TrainConfig cfg_;
  TrainCache cache_;
  Adam adam_;
  Rng shuffle_rng_;
  Rng perturb_rng_;
  Rng reset_rng_;
  std::vector<TrainLogRow> log_;
  std::size_t step_ = 0;
  std::size_t epoch_ = 0;
  StepObserver observer_;
  CheckpointCallback checkpoint_;
};

struct TrainResult {
  SurrogateModel model;
  std::vector<TrainLogRow> log;
  std::size_t commits = 0;
  std::size_t resets = 0;
};

TrainResult train(const Dataset& dataset, SurrogateModel model, const TrainConfig& cfg,
                  Trainer::StepObserver observer = {});

}  // namespace surrogate
