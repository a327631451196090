#include "surrogate/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <memory>
#include <numeric>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "surrogate/basis.hpp"
#include "surrogate/csv.hpp"
#include "surrogate/denopt.hpp"
#include "surrogate/diagnostics.hpp"
#include "surrogate/errors.hpp"
#include "surrogate/losses.hpp"
#include "surrogate/model.hpp"
#include "surrogate/synth.hpp"
#include "surrogate/trainer.hpp"

namespace surrogate::cli {

namespace {

using nlohmann::json;

/// Raised for checkpoint/dataset dimension mismatches.
class Incompatible : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// JSON config files: top-level keys are option names of the selected
// subcommand, nested objects address subcommands explicitly.
class JsonConfig : public CLI::Config {
 public:
  explicit JsonConfig(const CLI::App* root) : root_(root) {}

  std::string to_config(const CLI::App*, bool, bool, std::string) const override { return "{}"; }

  std::vector<CLI::ConfigItem> from_config(std::istream& in) const override {
    json doc;
    try {
      in >> doc;
    } catch (const json::exception& e) {
      throw CLI::ConversionError(std::string("invalid JSON config: ") + e.what());
    }
    if (!doc.is_object()) throw CLI::ConversionError("JSON config must be an object");
    std::vector<std::string> chain;
    for (const CLI::App* app = root_; app != nullptr;) {
      const auto subs = app->get_subcommands();
      if (subs.empty()) break;
      app = subs.front();
      chain.push_back(app->get_name());
    }
    std::vector<CLI::ConfigItem> items;
    flatten(doc, chain, items);
    return items;
  }

 private:
  static std::string scalar(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number_float()) return csv::format(v.get<double>());
    return v.dump();
  }

  static void flatten(const json& obj, const std::vector<std::string>& parents,
                      std::vector<CLI::ConfigItem>& items) {
    for (const auto& [key, value] : obj.items()) {
      if (value.is_object()) {
        auto nested = parents;
        nested.push_back(key);
        flatten(value, nested, items);
        continue;
      }
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = key;
      if (value.is_array()) {
        for (const auto& v : value) item.inputs.push_back(scalar(v));
      } else {
        item.inputs.push_back(scalar(value));
      }
      items.push_back(std::move(item));
    }
  }

  const CLI::App* root_;
};

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ContractViolation("cannot open '" + path + "' for writing");
  return out;
}

void check_written(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) throw ContractViolation("failed writing '" + path + "'");
}

void check_dims(const SurrogateModel& model, const Dataset& data) {
  if (data.dim() != model.spec().coeff_dim || data.feature_dim() != model.spec().feature_dim) {
    throw Incompatible("checkpoint expects " + std::to_string(model.spec().coeff_dim) +
                       " coefficients and " + std::to_string(model.spec().feature_dim) +
                       " features, dataset has " + std::to_string(data.dim()) + " and " +
                       std::to_string(data.feature_dim()));
  }
}

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string default_sibling(const std::string& path, const std::string& suffix) {
  std::filesystem::path p(path);
  if (p.extension() == ".json") p.replace_extension();
  return p.string() + suffix;
}

// ---- option groups shared by several subcommands ----

struct TrainFlags {
  std::string loss = "gdi";
  std::string mode = "pcd";
  std::size_t epochs = 50;
  std::size_t batch_size = 16;
  double lr = 1e-3;
  double lr_final_fraction = 1.0;
  double beta = 0.9;
  double lambda = 0.1;
  double grad_min = 0.01;
  double grad_max = 100.0;
  double q_reset = 0.01;
  std::size_t duplication = 21;
  std::uint64_t seed = 0;
  std::vector<std::size_t> hidden{64, 64};
  double parabola = 0.1;
  double input_scale = 10.0;

  void add_to(CLI::App* sub, bool with_mode_and_loss) {
    if (with_mode_and_loss) {
      sub->add_option("--loss", loss, "gdi | lower_bound | grad_to_gs | grad_norm_range")
          ->capture_default_str();
      sub->add_option("--mode", mode, "pcd | static")->capture_default_str();
    }
    sub->add_option("--epochs", epochs)->capture_default_str()->check(CLI::PositiveNumber);
    sub->add_option("--batch-size", batch_size)->capture_default_str()->check(CLI::PositiveNumber);
    sub->add_option("--lr", lr, "Adam step size")->capture_default_str()->check(CLI::PositiveNumber);
    sub->add_option("--lr-final-fraction", lr_final_fraction,
                    "cosine-decay the step size to this fraction (1 = constant)")
        ->capture_default_str()
        ->check(CLI::Range(0.0, 1.0));
    sub->add_option("--beta", beta)->capture_default_str()->check(CLI::Range(0.0, 1.0));
    sub->add_option("--lambda", lambda, "density step size")->capture_default_str();
    sub->add_option("--grad-min", grad_min)->capture_default_str();
    sub->add_option("--grad-max", grad_max)->capture_default_str();
    sub->add_option("--q-reset", q_reset)->capture_default_str()->check(CLI::Range(0.0, 1.0));
    sub->add_option("--duplication", duplication)->capture_default_str()->check(CLI::PositiveNumber);
    sub->add_option("--seed", seed)->capture_default_str();
    sub->add_option("--hidden", hidden, "hidden layer widths")->capture_default_str()->delimiter(',');
    sub->add_option("--parabola", parabola, "parabola prefactor a")->capture_default_str();
    sub->add_option("--input-scale", input_scale, "coefficient input scale s")->capture_default_str();
  }

  TrainConfig train_config() const {
    TrainConfig cfg;
    const auto kind = parse_loss_kind(loss);
    require(kind.has_value(), "unknown loss '" + loss + "'");
    cfg.loss.kind = *kind;
    cfg.loss.beta = beta;
    cfg.loss.step_size = lambda;
    cfg.loss.grad_min = grad_min;
    cfg.loss.grad_max = grad_max;
    require(mode == "pcd" || mode == "static", "unknown mode '" + mode + "'");
    cfg.mode = mode == "pcd" ? SamplingMode::Pcd : SamplingMode::Static;
    cfg.epochs = epochs;
    cfg.batch_size = batch_size;
    cfg.adam.learning_rate = lr;
    cfg.lr_final_fraction = lr_final_fraction;
    cfg.seed = seed;
    cfg.q_reset = q_reset;
    cfg.validate();
    return cfg;
  }

  SurrogateModel initial_model(const Dataset& data) const {
    ModelSpec spec;
    spec.coeff_dim = data.dim();
    spec.feature_dim = data.feature_dim();
    spec.hidden = hidden;
    spec.parabola_prefactor = parabola;
    spec.input_scale = input_scale;
    return initialize_parameters(spec, seed);
  }
};

struct OptimizeFlags {
  bool natrep = false;
  double lambda = 0.1;
  std::size_t max_steps = 500;
  double stop_tol = 1e-6;
  double beta = 0.9;

  void add_to(CLI::App* sub) {
    sub->add_flag("--natrep,!--no-natrep", natrep, "optimize in Loewdin coordinates");
    sub->add_option("--lambda", lambda, "step size")->capture_default_str();
    sub->add_option("--max-steps", max_steps)->capture_default_str();
    sub->add_option("--stop-tol", stop_tol, "gradient-norm threshold")->capture_default_str();
    sub->add_option("--beta", beta, "contraction target for the recorded GDI loss")
        ->capture_default_str();
  }

  OptimizerConfig config() const {
    OptimizerConfig cfg;
    cfg.natrep = natrep;
    cfg.step_size = lambda;
    cfg.max_steps = max_steps;
    cfg.stop_tol = stop_tol;
    cfg.beta = beta;
    cfg.validate();
    return cfg;
  }
};

// ---- subcommands ----

struct GenDataCmd {
  std::size_t molecules = 64;
  std::size_t dim = 16;
  std::uint64_t seed = 0;
  bool isolated = false;
  std::string out_path;

  void add(CLI::App& app, std::function<void()>& action, std::ostream& out) {
    auto* sub = app.add_subcommand("gen-data", "generate a synthetic dataset");
    sub->add_option("--molecules", molecules)->capture_default_str()->check(CLI::PositiveNumber);
    sub->add_option("--dim", dim, "coefficients per molecule (>= 2)")->capture_default_str();
    sub->add_option("--seed", seed)->capture_default_str();
    sub->add_flag("--isolated-atoms", isolated, "far-apart one-function atoms (identity overlap)");
    sub->add_option("--out", out_path)->required();
    sub->callback([this, &action, &out] { action = [this, &out] { run(out); }; });
  }

  void run(std::ostream& out) const {
    GeneratorOptions opts;
    opts.isolated_atoms = isolated;
    const Dataset data = generate_dataset(molecules, dim, seed, opts);
    const std::string path = resolve_output(out_path);
    save_dataset(path, data);
    out << "generated " << data.molecules.size() << " molecules, dim " << data.dim() << ", seed "
        << seed << " -> " << path << "\n";
  }
};

struct TrainCmd {
  std::string data_path;
  std::string out_path;
  std::string log_path;
  std::size_t checkpoint_every = 0;
  TrainFlags flags;

  void add(CLI::App& app, std::function<void()>& action, std::ostream& out) {
    auto* sub = app.add_subcommand("train", "train a surrogate functional");
    sub->add_option("--data", data_path)->required();
    sub->add_option("--out", out_path, "checkpoint path")->required();
    sub->add_option("--log", log_path, "training log CSV (default <out>.log.csv)");
    sub->add_option("--checkpoint-every", checkpoint_every, "steps between checkpoints (0 = end only)")
        ->capture_default_str();
    flags.add_to(sub, true);
    sub->callback([this, &action, &out] { action = [this, &out] { run(out); }; });
  }

  void run(std::ostream& out) const {
    Dataset data = load_dataset(data_path);
    data.duplication = flags.duplication;
    TrainConfig cfg = flags.train_config();
    cfg.checkpoint_every = checkpoint_every;
    const std::string ckpt_path = resolve_output(out_path);
    const std::string log_out =
        resolve_output(log_path.empty() ? default_sibling(out_path, ".log.csv") : log_path);

    Trainer trainer(data, flags.initial_model(data), cfg);
    trainer.set_checkpoint_callback(
        [&ckpt_path](const Trainer& t) { save_checkpoint(ckpt_path, t.checkpoint()); });
    try {
      trainer.run();
    } catch (const TrainingDiverged& e) {
      const std::string dump_path = default_sibling(ckpt_path, ".diag.json");
      std::ofstream dump(dump_path);
      dump << e.diagnostic() << "\n";
      throw NumericError(std::string(e.what()) + "; diagnostic dump written to " + dump_path);
    }
    save_checkpoint(ckpt_path, trainer.checkpoint());
    auto log = open_output(log_out);
    write_train_log_csv(log, trainer.log());
    check_written(log, log_out);
    const auto& rows = trainer.log();
    out << "trained " << trainer.epochs_done() << " epochs (" << trainer.steps() << " steps), final loss "
        << (rows.empty() ? 0.0 : rows.back().loss) << ", cache commits " << trainer.cache().commits()
        << ", resets " << trainer.cache().resets() << " -> " << ckpt_path << "\n";
  }
};

struct OptimizeCmd {
  std::string ckpt_path;
  std::string data_path;
  std::string out_path;
  std::string traj_path;
  OptimizeFlags flags;

  void add(CLI::App& app, std::function<void()>& action, std::ostream& out) {
    auto* sub = app.add_subcommand("optimize", "run density optimization on every molecule");
    sub->add_option("--ckpt", ckpt_path)->required();
    sub->add_option("--data", data_path)->required();
    sub->add_option("--out", out_path, "results CSV")->required();
    sub->add_option("--traj-out", traj_path, "optional long-format trajectory CSV");
    flags.add_to(sub);
    sub->callback([this, &action, &out] { action = [this, &out] { run(out); }; });
  }

  void run(std::ostream& out) const {
    const Checkpoint ckpt = load_checkpoint(ckpt_path);
    const Dataset data = load_dataset(data_path);
    check_dims(ckpt.model, data);
    const OptimizerConfig cfg = flags.config();

    const std::string results_path = resolve_output(out_path);
    auto results = open_output(results_path);
    std::unique_ptr<std::ofstream> traj;
    std::string traj_out;
    if (!traj_path.empty()) {
      traj_out = resolve_output(traj_path);
      traj = std::make_unique<std::ofstream>(open_output(traj_out));
      write_trajectory_header(*traj);
    }

    csv::Writer w(results);
    w.write("molecule_id", "initial_l2_error", "final_l2_error", "steps", "terminated_by",
            "wall_time_s");
    std::vector<double> initial, final, times;
    std::size_t converged = 0;
    for (const Molecule& mol : data.molecules) {
      const auto t0 = std::chrono::steady_clock::now();
      const Trajectory t = optimize(ckpt.model, mol, cfg);
      const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      const OverlapMatrix s = overlap_matrix(mol.basis);
      const double e0 = density_l2_error(initial_guess(mol) - mol.ground_state, s);
      const double e1 = density_l2_error(t.final_p - mol.ground_state, s);
      initial.push_back(e0);
      final.push_back(e1);
      times.push_back(wall);
      if (t.terminated_by == Termination::StopTol) ++converged;
      w.write(mol.id, e0, e1, t.steps_taken, to_string(t.terminated_by), wall);
      if (traj) write_trajectory_rows(*traj, mol.id, t);
    }
    const double mean_time =
        times.empty() ? 0.0 : std::accumulate(times.begin(), times.end(), 0.0) / static_cast<double>(times.size());
    w.write("summary", median(initial), median(final), converged, "median_error_mean_time", mean_time);
    check_written(results, results_path);
    if (traj) check_written(*traj, traj_out);
    out << "optimized " << data.molecules.size() << " molecules (" << (cfg.natrep ? "natrep" : "no-natrep")
        << "): median error " << median(final) << " (initial " << median(initial) << "), "
        << converged << " converged, mean time " << mean_time << " s -> " << results_path << "\n";
  }
};

struct ContractionCmd {
  std::string data_path;
  std::string ckpt_path;
  std::string out_path = "contraction.csv";
  ContractionScanOptions opt;

  void add(CLI::App* analyze, std::function<void()>& action, std::ostream& out) {
    auto* sub = analyze->add_subcommand("contraction", "contraction factors of perturbed samples");
    sub->add_option("--data", data_path)->required();
    sub->add_option("--ckpt", ckpt_path, "use the surrogate gradient instead of the reference");
    sub->add_option("--lambda", opt.step_size)->capture_default_str();
    sub->add_option("--beta", opt.beta)->capture_default_str();
    sub->add_option("--samples", opt.samples)->capture_default_str()->check(CLI::PositiveNumber);
    sub->add_option("--seed", opt.seed)->capture_default_str();
    sub->add_option("--out", out_path)->capture_default_str();
    sub->callback([this, &action, &out] { action = [this, &out] { run(out); }; });
  }

  void run(std::ostream& out) const {
    const Dataset data = load_dataset(data_path);
    std::optional<Checkpoint> ckpt;
    if (!ckpt_path.empty()) {
      ckpt = load_checkpoint(ckpt_path);
      check_dims(ckpt->model, data);
    }
    const GradientSource source =
        ckpt ? surrogate_gradient_source(ckpt->model) : reference_gradient_source();
    const ContractionScan scan = contraction_scan(data, source, opt);
    const std::string path = resolve_output(out_path);
    auto file = open_output(path);
    write_contraction_csv(file, scan.records);
    check_written(file, path);
    out << "fraction below beta " << opt.beta << ": " << scan.fraction_below_beta << " ("
        << scan.records.size() << " samples, lambda " << opt.step_size << ") -> " << path << "\n";
  }
};

struct ConvergenceCmd {
  std::string traj_path;
  std::string out_path;
  double beta = 0.9;

  void add(CLI::App* analyze, std::function<void()>& action, std::ostream& out) {
    auto* sub = analyze->add_subcommand("convergence", "check the exponential convergence bound");
    sub->add_option("--traj", traj_path, "trajectory CSV from optimize --traj-out")->required();
    sub->add_option("--beta", beta)->capture_default_str();
    sub->add_option("--out", out_path, "optional per-trajectory report CSV");
    sub->callback([this, &action, &out] { action = [this, &out] { run(out); }; });
  }

  void run(std::ostream& out) const {
    std::ifstream in(traj_path);
    require(static_cast<bool>(in), "cannot open trajectory file '" + traj_path + "'");
    const auto trajectories = read_trajectory_csv(in);
    std::unique_ptr<std::ofstream> file;
    std::unique_ptr<csv::Writer> w;
    std::string path;
    if (!out_path.empty()) {
      path = resolve_output(out_path);
      file = std::make_unique<std::ofstream>(open_output(path));
      w = std::make_unique<csv::Writer>(*file);
      w->write("molecule_id", "holds", "checked_steps", "first_violation", "excluded_from");
    }
    std::size_t passed = 0;
    for (const auto& [id, traj] : trajectories) {
      const ConvergenceReport r = verify_exponential_convergence(traj, beta);
      if (r.holds) ++passed;
      const auto opt_str = [](const std::optional<std::size_t>& v) {
        return v ? std::to_string(*v) : std::string();
      };
      out << id << ": " << (r.holds ? "pass" : "fail") << " (" << r.checked_steps << " steps checked";
      if (r.first_violation) out << ", violated at step " << *r.first_violation;
      if (r.excluded_from) out << ", positive GDI loss from step " << *r.excluded_from;
      out << ")\n";
      if (w) w->write(id, r.holds ? "true" : "false", r.checked_steps, opt_str(r.first_violation),
                      opt_str(r.excluded_from));
    }
    if (file) check_written(*file, path);
    out << passed << "/" << trajectories.size() << " trajectories satisfy the bound\n";
  }
};

struct SliceCmd {
  std::string ckpt_path;
  std::string data_path;
  std::string molecule = "id0";
  std::size_t resolution = 41;
  double extent = 1.5;
  double lambda = 0.1;
  std::string prefix = "slice";

  void add(CLI::App* analyze, std::function<void()>& action, std::ostream& out) {
    auto* sub = analyze->add_subcommand("slice", "energy and gradient-norm grids on a 2-D plane");
    sub->add_option("--ckpt", ckpt_path)->required();
    sub->add_option("--data", data_path)->required();
    sub->add_option("--molecule", molecule)->capture_default_str();
    sub->add_option("--resolution", resolution)->capture_default_str()->check(CLI::Range(2, 1001));
    sub->add_option("--extent", extent, "half-width in units of the initial distance")
        ->capture_default_str();
    sub->add_option("--lambda", lambda, "step size used to trace the plane")->capture_default_str();
    sub->add_option("--out-prefix", prefix)->capture_default_str();
    sub->callback([this, &action, &out] { action = [this, &out] { run(out); }; });
  }

  void run(std::ostream& out) const {
    const Checkpoint ckpt = load_checkpoint(ckpt_path);
    const Dataset data = load_dataset(data_path);
    check_dims(ckpt.model, data);
    const Molecule& mol = data.find(molecule);
    const auto [d1, d2] = descent_plane(ckpt.model, mol, lambda);
    const SliceGrid grid =
        gradient_norm_slice(ckpt.model, mol, mol.ground_state, d1, d2, resolution, extent);
    const std::string energy_path = resolve_output(prefix + "_energy.csv");
    const std::string grad_path = resolve_output(prefix + "_grad_norm.csv");
    auto e = open_output(energy_path);
    write_slice_csv(e, grid, grid.energy);
    check_written(e, energy_path);
    auto g = open_output(grad_path);
    write_slice_csv(g, grid, grid.grad_norm);
    check_written(g, grad_path);
    const double lo = grid.grad_norm.minCoeff();
    const double hi = grid.grad_norm.maxCoeff();
    out << "slice of " << mol.id << ": gradient norm in [" << lo << ", " << hi << "], ratio "
        << (lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity()) << " -> " << energy_path
        << ", " << grad_path << "\n";
  }
};

struct LoopholeCmd {
  std::string data_path;
  std::string out_path = "loophole.csv";
  TrainFlags flags;
  OptimizeFlags opt;

  void add(CLI::App* analyze, std::function<void()>& action, std::ostream& out) {
    auto* sub = analyze->add_subcommand(
        "loophole", "train static and pcd models, compare residual error in stiff vs soft directions");
    sub->add_option("--data", data_path)->required();
    sub->add_option("--out", out_path)->capture_default_str();
    flags.add_to(sub, false);
    sub->add_option("--max-steps", opt.max_steps)->capture_default_str();
    sub->add_option("--stop-tol", opt.stop_tol)->capture_default_str();
    sub->callback([this, &action, &out] { action = [this, &out] { run(out); }; });
  }

  void run(std::ostream& out) const {
    Dataset data = load_dataset(data_path);
    data.duplication = flags.duplication;
    OptimizeFlags of = opt;
    of.lambda = flags.lambda;
    of.beta = flags.beta;
    const OptimizerConfig ocfg = of.config();

    const std::string path = resolve_output(out_path);
    auto file = open_output(path);
    csv::Writer w(file);
    w.write("mode", "molecule_id", "group", "error_norm", "share");
    for (const char* mode : {"static", "pcd"}) {
      TrainFlags tf = flags;
      tf.mode = mode;
      Trainer trainer(data, tf.initial_model(data), tf.train_config());
      trainer.run();
      double soft_share = 0.0;
      std::vector<double> errors;
      for (const Molecule& mol : data.molecules) {
        const Trajectory t = optimize(trainer.model(), mol, ocfg);
        const StiffnessGroups sg = stiffness_groups(mol.reference.hessian);
        const Vector err = sg.basis.transpose() * (t.final_p - mol.ground_state);
        errors.push_back(err.norm());
        const auto report = loophole_report(err, sg.groups);
        for (const auto& g : report) {
          w.write(mode, mol.id, g.group == 0 ? "stiff" : "soft", g.error_norm, g.share);
        }
        soft_share += report.back().share;
      }
      soft_share /= static_cast<double>(data.molecules.size());
      w.write(mode, "summary", "soft", median(errors), soft_share);
      out << mode << ": median final error " << median(errors) << ", mean soft-group share "
          << soft_share << "\n";
    }
    check_written(file, path);
    out << "loophole report -> " << path << "\n";
  }
};

}  // namespace

std::string resolve_output(const std::string& path) {
  const char* dir = std::getenv(kOutputDirEnv);
  if (dir == nullptr || *dir == '\0' || std::filesystem::path(path).is_absolute()) return path;
  return (std::filesystem::path(dir) / path).string();
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app("Surrogate density functionals: data generation, training, density optimization, analysis",
               "surrogate");
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "JSON file with option values; command-line flags take precedence");
  app.config_formatter(std::make_shared<JsonConfig>(&app));

  std::function<void()> action;
  GenDataCmd gen;
  TrainCmd train_cmd;
  OptimizeCmd optimize_cmd;
  ContractionCmd contraction;
  ConvergenceCmd convergence;
  SliceCmd slice;
  LoopholeCmd loophole;
  gen.add(app, action, out);
  train_cmd.add(app, action, out);
  optimize_cmd.add(app, action, out);
  auto* analyze = app.add_subcommand("analyze", "diagnostics");
  analyze->require_subcommand(1);
  contraction.add(analyze, action, out);
  convergence.add(analyze, action, out);
  slice.add(analyze, action, out);
  loophole.add(analyze, action, out);

  std::vector<const char*> argv{"surrogate"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == static_cast<int>(CLI::ExitCodes::Success)) {
      app.exit(e, out, err);
      return kOk;
    }
    err << "error: " << e.what() << "\n";
    return kValidation;
  }

  try {
    if (action) action();
    return kOk;
  } catch (const Incompatible& e) {
    err << "error: " << e.what() << "\n";
    return kCompatibility;
  } catch (const ContractViolation& e) {
    err << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const NumericError& e) {
    err << "error: " << e.what() << "\n";
    return kNumeric;
  }
}

}  // namespace surrogate::cli
