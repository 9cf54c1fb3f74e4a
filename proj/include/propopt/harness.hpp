#pragma once

#include "propopt/core.hpp"
#include "propopt/objectives.hpp"
#include "propopt/optimizers.hpp"
#include "propopt/theory.hpp"

#include "json.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace propopt {

/// Raised when an experiment spec fails validation; what() lists every violation.
struct ValidationError : ConfigError {
  ValidationError(std::vector<std::string> violations);
  std::vector<std::string> violations;
};

struct LabeledOptimizer {
  std::string label;
  OptimizerConfig config;
};

struct InitSpec {
  enum class Kind { EXPLICIT, UNIFORM } kind = Kind::UNIFORM;
  std::vector<double> values;  // EXPLICIT
  double lo = -0.05;           // UNIFORM
  double hi = 0.05;
};

struct BatchSpec {
  enum class Mode { FULL, MINIBATCH } mode = Mode::FULL;
  Index size = 0;
};

/// Declarative experiment. `objective` is kept as JSON and built on demand.
struct ExperimentSpec {
  std::string name = "experiment";
  std::uint64_t seed = 0;
  nlohmann::json objective;
  std::vector<LabeledOptimizer> optimizers;
  InitSpec w0;
  std::uint64_t max_steps = 1000;
  BatchSpec batch;
  std::string output_dir = "out";
};

/// Parses and validates a spec document. Unknown keys are rejected.
ExperimentSpec parse_experiment(const nlohmann::json& doc);
nlohmann::json to_json(const ExperimentSpec& spec);

/// Sets the existing key at dotted `path` (array indices allowed, e.g. optimizers.0.schedule.eta0).
/// `value` is parsed as JSON when possible, else taken as a string. Missing keys are an error.
void apply_override(nlohmann::json& doc, const std::string& path, const std::string& value);

/// Builds the objective described by spec.objective, drawing any synthetic data from the spec seed.
std::shared_ptr<const Objective> build_objective(const ExperimentSpec& spec);
ParamVector build_initial_point(const ExperimentSpec& spec, Index dim);

// Independent random streams expanded from the spec seed.
enum class SeedStream : std::uint64_t { DATASET = 1, INIT = 2, BATCH = 3, PROBE = 4 };
inline std::uint64_t stream_seed(const ExperimentSpec& spec, SeedStream s) {
  return derive_seed(spec.seed, static_cast<std::uint64_t>(s));
}

/// Mini-batch gradient source: sequential epochs over a seeded shuffle, reshuffled each
/// epoch. Rows within a batch are summed in ascending index order, so a batch of the
/// full dataset reproduces the full gradient bit for bit.
class MiniBatchSampler {
 public:
  MiniBatchSampler(std::shared_ptr<const FiniteSumObjective> obj, Index batch_size, std::uint64_t seed);
  ParamVector operator()(const ParamVector& w, std::uint64_t step);
  std::uint64_t epoch() const { return epoch_; }

 private:
  std::shared_ptr<const FiniteSumObjective> obj_;
  Index batch_size_;
  Rng rng_;
  std::vector<Index> order_;
  std::size_t cursor_;
  std::uint64_t epoch_ = 0;
};

inline constexpr double kStdTailFraction = 0.1;        // tail used for loss standard deviation
inline constexpr double kAmplitudeTailFraction = 0.5;  // tail used for oscillation amplitude

struct OptimizerSummary {
  std::string label;
  std::string method;
  std::string schedule;
  double eta0 = 0.0;
  std::uint64_t steps = 0;
  double epochs = 0.0;
  double final_loss = 0.0;
  double min_loss = 0.0;
  std::optional<double> final_gap;
  double tail_loss_std = 0.0;
  double oscillation_amplitude = 0.0;
  std::optional<std::uint64_t> entry_step;  // 1D quadratic: first step inside the absorbing interval
  std::vector<std::optional<std::uint64_t>> steps_to_threshold;
  std::string trajectory_file;
};

struct ComparisonReport {
  std::string name;
  std::string output_dir;
  std::uint64_t seed = 0;
  std::optional<double> f_star;
  bool thresholds_are_gaps = true;  // else relative to the best loss over all optimizers
  std::vector<double> thresholds;
  std::vector<OptimizerSummary> optimizers;
  std::vector<Trajectory> trajectories;
  std::vector<Certificate> certificates;
  std::string summary_file;
};

/// Runs every optimizer of the spec (up to `jobs` in parallel), writes one trajectory CSV per
/// optimizer and summary.json into spec.output_dir.
ComparisonReport run_experiment(const ExperimentSpec& spec, unsigned jobs = 1);

inline constexpr const char* kTrajectoryHeader =
    "step,f_value,grad_norm_l2,w_norm_l2,dist_to_opt,lr,step_norm_l2,fallback_any";

void write_trajectory_csv(const std::string& path, const Trajectory& t);
nlohmann::json summary_json(const ComparisonReport& report, const ExperimentSpec& spec);

enum class SweepParameter { ETA, W0, SEED };
SweepParameter sweep_parameter_from_string(const std::string& s);
std::string to_string(SweepParameter p);

/// One report per value, each in <output_dir>/<param>_<index>, plus <output_dir>/sweep.csv.
std::vector<ComparisonReport> sweep(const ExperimentSpec& spec, SweepParameter parameter,
                                    const std::vector<double>& values, unsigned jobs = 1);

/// Two-column whitespace-delimited (step, loss) and (step, dist_to_opt) files per optimizer,
/// plus a README. Returns the paths written.
std::vector<std::string> emit_plotdata(const ComparisonReport& report, const std::string& dir);

// Built-in experiments.
struct SweepPlan {
  SweepParameter parameter;
  std::vector<double> values;
};

struct Preset {
  std::string name;
  std::string description;
  nlohmann::json spec;
  std::optional<SweepPlan> sweep;
};

const std::vector<Preset>& presets();
const Preset& find_preset(const std::string& name);

/// Shortest round-trip decimal form of x (locale independent).
std::string format_double(double x);

}  // namespace propopt
