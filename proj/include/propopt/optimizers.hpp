#pragma once

#include "propopt/core.hpp"
#include "propopt/objectives.hpp"
#include "propopt/schedules.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace propopt {

enum class Method { LARS, PERCENT_DELTA, GD, MOMENTUM, ADAM };

std::string to_string(Method m);
Method method_from_string(const std::string& s);

struct OptimizerConfig {
  Method method = Method::LARS;
  Schedule schedule;
  // Unset means the method's default: 0.9 for MOMENTUM and ADAM, 0 for LARS and PERCENT_DELTA.
  std::optional<double> momentum_coeff;
  double eps_stabilizer = 1e-8;
  double fallback_threshold = 0.01;  // beta: blocks with L2 norm below this take a plain gradient step
  double adam_beta2 = 0.999;

  double momentum() const;
  void validate() const;
};

/// Per-block moment buffers plus the step counter. Owned by exactly one run.
struct OptimizerState {
  std::uint64_t step_count = 0;
  std::vector<ParamVector> first_moment;
  std::vector<ParamVector> second_moment;

  static OptimizerState for_blocks(const BlockSet& blocks);
  /// True when every buffer is identically zero.
  bool quiescent() const;
};

struct BlockReport {
  double trust_ratio = 1.0;
  bool fallback_used = false;
  double step_norm_l2 = 0.0;
};

struct StepReport {
  std::vector<BlockReport> blocks;
  double lr_used = 0.0;
};

struct StepResult {
  ParamVector w;      // w_{k+1}
  ParamVector delta;  // applied update, w_{k+1} = w_k - delta
  StepReport report;
};

// Single steps. All take the gradient g at w, the block partition and the current rate,
// and advance `state` by one step.

/// Proportional update with L2 norms, per block: w_b -= lr * |w_b| / (|g_b| + eps) * g_b.
StepResult lars_step(const ParamVector& w, const ParamVector& g, const BlockSet& blocks, double lr,
                     const OptimizerConfig& cfg, OptimizerState& state);
/// Same rule with L1 norms in the trust ratio.
StepResult percent_delta_step(const ParamVector& w, const ParamVector& g, const BlockSet& blocks,
                              double lr, const OptimizerConfig& cfg, OptimizerState& state);
StepResult gd_step(const ParamVector& w, const ParamVector& g, const BlockSet& blocks, double lr,
                   const OptimizerConfig& cfg, OptimizerState& state);
StepResult momentum_step(const ParamVector& w, const ParamVector& g, const BlockSet& blocks, double lr,
                         const OptimizerConfig& cfg, OptimizerState& state);
StepResult adam_step(const ParamVector& w, const ParamVector& g, const BlockSet& blocks, double lr,
                     const OptimizerConfig& cfg, OptimizerState& state);

/// Dispatches on cfg.method.
StepResult step(const ParamVector& w, const ParamVector& g, const BlockSet& blocks, double lr,
                const OptimizerConfig& cfg, OptimizerState& state);

struct StoppingRule {
  // Stop once f - f* < f_gap_tol. Requires f* in the objective metadata.
  std::optional<double> f_gap_tol;
};

struct RunOptions {
  std::uint64_t max_steps = 1000;
  StoppingRule stop;
  std::optional<BlockSet> blocks;  // defaults to the objective's own partition
  bool keep_iterates = false;
};

struct RunResult {
  Trajectory trajectory;
  ParamVector final_w;
  std::vector<ParamVector> iterates;  // w_0 .. w_K, only when keep_iterates
};

/// Supplies the gradient used for the step at index k (e.g. a mini-batch gradient).
using GradientOracle = std::function<ParamVector(const ParamVector& w, std::uint64_t k)>;

/// Runs the optimizer from w0. Each record holds f(w_k) before the update and the norm of
/// the transition to w_{k+1}. Also stops early at an exact fixed point (zero gradient,
/// zero update, empty buffers), which no later step could leave.
RunResult run(const Objective& obj, const ParamVector& w0, const OptimizerConfig& cfg,
              const RunOptions& opts);
RunResult run(const Objective& obj, const GradientOracle& oracle, const ParamVector& w0,
              const OptimizerConfig& cfg, const RunOptions& opts);

}  // namespace propopt
