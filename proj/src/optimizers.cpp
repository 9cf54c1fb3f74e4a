#include "propopt/optimizers.hpp"

#include <cmath>

namespace propopt {

std::string to_string(Method m) {
  switch (m) {
    case Method::LARS: return "lars";
    case Method::PERCENT_DELTA: return "percent_delta";
    case Method::GD: return "gd";
    case Method::MOMENTUM: return "momentum";
    case Method::ADAM: return "adam";
  }
  return "?";
}

Method method_from_string(const std::string& s) {
  if (s == "lars") return Method::LARS;
  if (s == "percent_delta") return Method::PERCENT_DELTA;
  if (s == "gd" || s == "sgd") return Method::GD;
  if (s == "momentum") return Method::MOMENTUM;
  if (s == "adam") return Method::ADAM;
  throw ConfigError("unknown method '" + s + "' (expected lars, percent_delta, gd, momentum, adam)");
}

double OptimizerConfig::momentum() const {
  if (momentum_coeff) return *momentum_coeff;
  return method == Method::MOMENTUM || method == Method::ADAM ? 0.9 : 0.0;
}

void OptimizerConfig::validate() const {
  schedule.validate();
  const double mu = momentum();
  if (!(mu >= 0.0 && mu < 1.0)) throw ConfigError("momentum_coeff must lie in [0, 1)");
  if (!(eps_stabilizer >= 0.0)) throw ConfigError("eps_stabilizer must be >= 0");
  if (!(fallback_threshold >= 0.0)) throw ConfigError("fallback_threshold must be >= 0");
  if (!(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) throw ConfigError("adam_beta2 must lie in [0, 1)");
}

OptimizerState OptimizerState::for_blocks(const BlockSet& blocks) {
  OptimizerState s;
  for (const auto& b : blocks) {
    s.first_moment.push_back(ParamVector::Zero(b.size));
    s.second_moment.push_back(ParamVector::Zero(b.size));
  }
  return s;
}

bool OptimizerState::quiescent() const {
  for (const auto& v : first_moment)
    if (!v.isZero(0.0)) return false;
  for (const auto& v : second_moment)
    if (!v.isZero(0.0)) return false;
  return true;
}

namespace {

void check_shapes(const ParamVector& w, const ParamVector& g, const BlockSet& blocks,
                  OptimizerState& state, double lr) {
  if (w.size() != g.size() || w.size() != blocks.dim())
    throw ConfigError("step: w, g and block partition disagree on dimension");
  if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("step: learning rate must be positive");
  require_finite(w, "parameters");
  require_finite(g, "gradient");
  if (state.first_moment.empty() && state.second_moment.empty()) state = OptimizerState::for_blocks(blocks);
  if (state.first_moment.size() != blocks.size()) throw ConfigError("optimizer state does not match blocks");
  for (std::size_t i = 0; i < blocks.size(); ++i)
    if (state.first_moment[i].size() != blocks[i].size)
      throw ConfigError("optimizer buffer size does not match block '" + blocks[i].name + "'");
}

StepResult finish(const ParamVector& w, ParamVector delta, StepReport report, const BlockSet& blocks,
                  OptimizerState& state) {
  for (std::size_t i = 0; i < blocks.size(); ++i)
    report.blocks[i].step_norm_l2 = delta.segment(blocks[i].begin, blocks[i].size).norm();
  ParamVector next = w - delta;
  require_finite(next, "updated parameters");
  ++state.step_count;
  return {std::move(next), std::move(delta), std::move(report)};
}

StepResult proportional_step(const ParamVector& w, const ParamVector& g, const BlockSet& blocks,
                             double lr, const OptimizerConfig& cfg, OptimizerState& state, Norm p) {
  check_shapes(w, g, blocks, state, lr);
  const double mu = cfg.momentum();
  ParamVector delta(w.size());
  StepReport report;
  report.lr_used = lr;
  report.blocks.resize(blocks.size());

  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const auto& b = blocks[i];
    const auto wb = w.segment(b.begin, b.size);
    const auto gb = g.segment(b.begin, b.size);
    BlockReport& br = report.blocks[i];

    ParamVector scaled;
    if (norm(wb, Norm::L2) < cfg.fallback_threshold) {
      br.fallback_used = true;
      br.trust_ratio = 1.0;
      scaled = gb;
    } else {
      const double gn = norm(gb, p);
      const double denom = gn + cfg.eps_stabilizer;
      if (denom == 0.0)
        throw NumericError("zero gradient in block '" + b.name +
                           "' with eps_stabilizer = 0; set eps_stabilizer > 0");
      br.trust_ratio = norm(wb, p) / denom;
      scaled = br.trust_ratio * gb;
    }

    if (mu > 0.0) {
      ParamVector& v = state.first_moment[i];
      v = mu * v + scaled;
      delta.segment(b.begin, b.size) = lr * v;
    } else {
      delta.segment(b.begin, b.size) = lr * scaled;
    }
  }
  return finish(w, std::move(delta), std::move(report), blocks, state);
}

StepReport unit_report(const BlockSet& blocks, double lr) {
  StepReport r;
  r.lr_used = lr;
  r.blocks.resize(blocks.size());
  return r;
}

}  // namespace

StepResult lars_step(const ParamVector& w, const ParamVector& g, const BlockSet& blocks, double lr,
                     const OptimizerConfig& cfg, OptimizerState& state) {
  return proportional_step(w, g, blocks, lr, cfg, state, Norm::L2);
}

StepResult percent_delta_step(const ParamVector& w, const ParamVector& g, const BlockSet& blocks,
                              double lr, const OptimizerConfig& cfg, OptimizerState& state) {
  return proportional_step(w, g, blocks, lr, cfg, state, Norm::L1);
}

StepResult gd_step(const ParamVector& w, const ParamVector& g, const BlockSet& blocks, double lr,
                   const OptimizerConfig&, OptimizerState& state) {
  check_shapes(w, g, blocks, state, lr);
  return finish(w, lr * g, unit_report(blocks, lr), blocks, state);
}

StepResult momentum_step(const ParamVector& w, const ParamVector& g, const BlockSet& blocks, double lr,
                         const OptimizerConfig& cfg, OptimizerState& state) {
  check_shapes(w, g, blocks, state, lr);
  const double mu = cfg.momentum();
  ParamVector delta(w.size());
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const auto& b = blocks[i];
    ParamVector& v = state.first_moment[i];
    v = mu * v + g.segment(b.begin, b.size);
    delta.segment(b.begin, b.size) = lr * v;
  }
  return finish(w, std::move(delta), unit_report(blocks, lr), blocks, state);
}

StepResult adam_step(const ParamVector& w, const ParamVector& g, const BlockSet& blocks, double lr,
                     const OptimizerConfig& cfg, OptimizerState& state) {
  check_shapes(w, g, blocks, state, lr);
  const double beta1 = cfg.momentum();
  const double beta2 = cfg.adam_beta2;
  const double t = static_cast<double>(state.step_count + 1);
  const double c1 = 1.0 - std::pow(beta1, t);
  const double c2 = 1.0 - std::pow(beta2, t);
  ParamVector delta(w.size());
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const auto& b = blocks[i];
    const auto gb = g.segment(b.begin, b.size);
    ParamVector& m = state.first_moment[i];
    ParamVector& v = state.second_moment[i];
    m = beta1 * m + (1.0 - beta1) * gb;
    v = beta2 * v + (1.0 - beta2) * gb.cwiseAbs2();
    const ParamVector m_hat = m / c1;
    const ParamVector v_hat = v / c2;
    delta.segment(b.begin, b.size) =
        lr * (m_hat.array() / (v_hat.array().sqrt() + cfg.eps_stabilizer)).matrix();
  }
  return finish(w, std::move(delta), unit_report(blocks, lr), blocks, state);
}

StepResult step(const ParamVector& w, const ParamVector& g, const BlockSet& blocks, double lr,
                const OptimizerConfig& cfg, OptimizerState& state) {
  switch (cfg.method) {
    case Method::LARS: return lars_step(w, g, blocks, lr, cfg, state);
    case Method::PERCENT_DELTA: return percent_delta_step(w, g, blocks, lr, cfg, state);
    case Method::GD: return gd_step(w, g, blocks, lr, cfg, state);
    case Method::MOMENTUM: return momentum_step(w, g, blocks, lr, cfg, state);
    case Method::ADAM: return adam_step(w, g, blocks, lr, cfg, state);
  }
  throw ConfigError("unknown method");
}

namespace {

RunResult run_impl(const Objective& obj, const GradientOracle* oracle, const ParamVector& w0,
                   const OptimizerConfig& cfg, const RunOptions& opts) {
  cfg.validate();
  if (opts.max_steps < 1) throw ConfigError("run: max_steps must be >= 1");
  if (w0.size() != obj.dim()) throw ConfigError("run: w0 dimension does not match the objective");
  if (cfg.schedule.kind == ScheduleKind::LINEAR_TO_ZERO && cfg.schedule.horizon < opts.max_steps)
    throw ConfigError("run: linear_to_zero horizon is shorter than max_steps");
  const auto& meta = obj.metadata();
  if (opts.stop.f_gap_tol && !meta.f_star)
    throw ConfigError("run: f-gap stopping needs a known optimal value");
  require_finite(w0, "initial point");

  const BlockSet blocks = opts.blocks ? *opts.blocks : obj.blocks();
  if (blocks.dim() != obj.dim()) throw ConfigError("run: block partition does not match the objective");
  OptimizerState state = OptimizerState::for_blocks(blocks);

  RunResult out;
  ParamVector w = w0;
  if (opts.keep_iterates) out.iterates.push_back(w);
  for (std::uint64_t k = 0; k < opts.max_steps; ++k) {
    const auto at = [k] { return " at step " + std::to_string(k); };
    const double f = obj.value(w);
    if (!std::isfinite(f)) throw NumericError("non-finite objective value" + at());
    ParamVector g = oracle ? (*oracle)(w, k) : obj.gradient(w);
    if (!g.allFinite()) throw NumericError("non-finite gradient" + at());

    const double lr = rate(cfg.schedule, k);
    StepResult s;
    try {
      s = step(w, g, blocks, lr, cfg, state);
    } catch (const NumericError& e) {
      throw NumericError(e.what() + at());
    }

    TrajectoryRecord rec;
    rec.step = k;
    rec.f_value = f;
    rec.grad_norm_l2 = g.norm();
    rec.w_norm_l2 = w.norm();
    if (meta.w_star) rec.dist_to_opt = (w - *meta.w_star).norm();
    rec.lr = lr;
    rec.step_norm_l2 = s.delta.norm();
    rec.fallback_active.reserve(s.report.blocks.size());
    for (const auto& br : s.report.blocks) rec.fallback_active.push_back(br.fallback_used);
    out.trajectory.append(std::move(rec));

    const bool fixed_point = !oracle && g.isZero(0.0) && s.delta.isZero(0.0) && state.quiescent();
    w = std::move(s.w);
    if (opts.keep_iterates) out.iterates.push_back(w);
    if (fixed_point) break;
    if (opts.stop.f_gap_tol && f - *meta.f_star < *opts.stop.f_gap_tol) break;
  }
  out.final_w = std::move(w);
  return out;
}

}  // namespace

RunResult run(const Objective& obj, const ParamVector& w0, const OptimizerConfig& cfg,
              const RunOptions& opts) {
  return run_impl(obj, nullptr, w0, cfg, opts);
}

RunResult run(const Objective& obj, const GradientOracle& oracle, const ParamVector& w0,
              const OptimizerConfig& cfg, const RunOptions& opts) {
  return run_impl(obj, &oracle, w0, cfg, opts);
}

}  // namespace propopt
