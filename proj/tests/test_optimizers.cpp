#include "propopt/optimizers.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

using namespace propopt;
using testing_support::random_vector;
using testing_support::ulps;

namespace {

OptimizerConfig cfg_for(Method m, double eps = 0.0, double beta = 0.0) {
  OptimizerConfig c;
  c.method = m;
  c.eps_stabilizer = eps;
  c.fallback_threshold = beta;
  return c;
}

ParamVector vec(std::initializer_list<double> xs) {
  ParamVector v(static_cast<Index>(xs.size()));
  Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

// f(w) = w^2 / 2 whose gradient turns NaN once w drops below 0.5.
class PoisonedObjective : public Objective {
 public:
  Index dim() const override { return 1; }
  double value(const ParamVector& w) const override { return 0.5 * w[0] * w[0]; }
  ParamVector gradient(const ParamVector& w) const override {
    return vec({w[0] > 0.5 ? w[0] : std::numeric_limits<double>::quiet_NaN()});
  }
  std::string name() const override { return "poisoned"; }
};

}  // namespace

TEST(Lars, Example) {
  OptimizerState st;
  const auto cfg = cfg_for(Method::LARS);
  const auto r = lars_step(vec({3, 4}), vec({0, 2}), BlockSet::single(2), 0.1, cfg, st);
  EXPECT_EQ(r.w, vec({3, 3.5}));
  EXPECT_EQ(r.report.blocks[0].trust_ratio, 2.5);
  EXPECT_FALSE(r.report.blocks[0].fallback_used);
  EXPECT_EQ(r.delta, vec({0, 0.5}));
  for (double c : {1e-6, 0.3, 7.0, 1e6}) {
    OptimizerState s;
    EXPECT_EQ(lars_step(vec({3, 4}), vec({0, 2 * c}), BlockSet::single(2), 0.1, cfg, s).w, vec({3, 3.5}));
  }
}

TEST(Lars, FallbackBelowThreshold) {
  OptimizerState st;
  const auto r = lars_step(vec({0.001}), vec({1}), BlockSet::single(1), 0.1, cfg_for(Method::LARS, 1e-8, 0.01), st);
  EXPECT_DOUBLE_EQ(r.w[0], 0.001 - 0.1);
  EXPECT_TRUE(r.report.blocks[0].fallback_used);
}

TEST(Lars, ZeroGradientWithoutStabilizerIsAnError) {
  OptimizerState st;
  try {
    lars_step(vec({1, 1}), vec({0, 0}), BlockSet::single(2), 0.1, cfg_for(Method::LARS), st);
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("eps_stabilizer"), std::string::npos);
  }
}

TEST(Lars, BlocksAreIndependent) {
  OptimizerState st;
  const BlockSet blocks({{"small", 0, 1}, {"big", 1, 2}}, 3);
  const auto r = lars_step(vec({0.001, 3, 4}), vec({1, 0, 2}), blocks, 0.1, cfg_for(Method::LARS, 0.0, 0.01), st);
  EXPECT_TRUE(r.report.blocks[0].fallback_used);
  EXPECT_FALSE(r.report.blocks[1].fallback_used);
  EXPECT_DOUBLE_EQ(r.w[0], 0.001 - 0.1);
  EXPECT_EQ(r.w[2], 3.5);
}

TEST(Lars, ProportionalityProperty) {
  Rng rng(8);
  for (int i = 0; i < 300; ++i) {
    const Index dim = 1 + static_cast<Index>(rng.below(10));
    const ParamVector w = random_vector(rng, dim, -3, 3);
    const ParamVector g = random_vector(rng, dim, -3, 3);
    const double lr = rng.uniform(0.001, 1.0);
    OptimizerState st;
    const auto r = lars_step(w, g, BlockSet::single(dim), lr, cfg_for(Method::LARS), st);
    EXPECT_LE(testing_support::rel_err(r.report.blocks[0].step_norm_l2, lr * w.norm()), 1e-9);
    EXPECT_EQ(st.step_count, 1u);
  }
}

TEST(Proportional, GradientScaleInvarianceProperty) {
  Rng rng(99);
  for (Method m : {Method::LARS, Method::PERCENT_DELTA}) {
    for (int i = 0; i < 300; ++i) {
      const Index dim = 1 + static_cast<Index>(rng.below(10));
      const ParamVector w = random_vector(rng, dim, -3, 3);
      const ParamVector g = random_vector(rng, dim, -3, 3);
      const double pow2 = std::ldexp(1.0, static_cast<int>(rng.below(41)) - 20);
      OptimizerState s1, s2, s3;
      const auto a = step(w, g, BlockSet::single(dim), 0.1, cfg_for(m), s1);
      const auto b = step(w, ParamVector(1e3 * g), BlockSet::single(dim), 0.1, cfg_for(m), s2);
      const auto c = step(w, ParamVector(pow2 * g), BlockSet::single(dim), 0.1, cfg_for(m), s3);
      for (Index j = 0; j < dim; ++j) EXPECT_LE(ulps(a.delta[j], b.delta[j]), 4u);
      EXPECT_EQ(a.delta, c.delta);
    }
  }
}

TEST(PercentDelta, Example) {
  OptimizerState st;
  const auto r = percent_delta_step(vec({3, -4}), vec({0, 2}), BlockSet::single(2), 0.1,
                                    cfg_for(Method::PERCENT_DELTA), st);
  EXPECT_EQ(r.report.blocks[0].trust_ratio, 3.5);
  EXPECT_DOUBLE_EQ(r.w[1], -4.7);
  EXPECT_EQ(r.w[0], 3.0);
}

TEST(PercentDelta, ZeroGradientWithStabilizer) {
  OptimizerState st;
  const auto r = percent_delta_step(vec({3, -4}), vec({0, 0}), BlockSet::single(2), 0.1,
                                    cfg_for(Method::PERCENT_DELTA, 1e-8), st);
  EXPECT_EQ(r.report.blocks[0].step_norm_l2, 0.0);
}

TEST(PercentDelta, EqualsLarsInOneDimension) {
  Rng rng(4);
  for (int i = 0; i < 500; ++i) {
    const ParamVector w = vec({rng.uniform(-10, 10)});
    const ParamVector g = vec({rng.uniform(-10, 10)});
    OptimizerState a, b;
    const auto cfg = cfg_for(Method::LARS, 1e-8, 0.01);
    auto pd = cfg;
    pd.method = Method::PERCENT_DELTA;
    EXPECT_EQ(lars_step(w, g, BlockSet::single(1), 0.2, cfg, a).w,
              percent_delta_step(w, g, BlockSet::single(1), 0.2, pd, b).w);
  }
}

TEST(Baselines, GdMomentumAdam) {
  OptimizerState st;
  EXPECT_DOUBLE_EQ(gd_step(vec({1}), vec({2}), BlockSet::single(1), 0.1, cfg_for(Method::GD), st).w[0], 0.8);

  OptimizerConfig mom = cfg_for(Method::MOMENTUM);
  EXPECT_EQ(mom.momentum(), 0.9);
  OptimizerState ms;
  ParamVector w = vec({0});
  w = momentum_step(w, vec({1}), BlockSet::single(1), 0.1, mom, ms).w;
  w = momentum_step(w, vec({1}), BlockSet::single(1), 0.1, mom, ms).w;
  EXPECT_DOUBLE_EQ(w[0], -0.29);
  EXPECT_EQ(ms.step_count, 2u);

  for (double g : {10.0, 0.1}) {
    OptimizerState as;
    const auto r = adam_step(vec({0.5}), vec({g}), BlockSet::single(1), 0.001, cfg_for(Method::ADAM, 1e-8), as);
    EXPECT_NEAR(std::abs(r.delta[0]), 0.001, 1e-9);
  }
}

TEST(Lars, MomentumActsOnScaledGradient) {
  auto cfg = cfg_for(Method::LARS);
  cfg.momentum_coeff = 0.5;
  OptimizerState st;
  const BlockSet b = BlockSet::single(1);
  // Step 1: trust ratio 2/1, scaled gradient 2, v = 2.
  auto r1 = lars_step(vec({2}), vec({1}), b, 0.1, cfg, st);
  EXPECT_DOUBLE_EQ(r1.w[0], 1.8);
  // Step 2: scaled gradient 1.8 (ratio 1.8/1), v = 0.5*2 + 1.8 = 2.8.
  auto r2 = lars_step(r1.w, vec({1}), b, 0.1, cfg, st);
  EXPECT_DOUBLE_EQ(r2.w[0], 1.8 - 0.28);
}

TEST(Config, Validation) {
  auto c = cfg_for(Method::MOMENTUM);
  c.momentum_coeff = 1.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = cfg_for(Method::LARS, -1.0);
  EXPECT_THROW(c.validate(), ConfigError);
  c = cfg_for(Method::LARS, 0.0, -0.1);
  EXPECT_THROW(c.validate(), ConfigError);
  EXPECT_EQ(method_from_string("sgd"), Method::GD);
  EXPECT_THROW(method_from_string("rmsprop"), ConfigError);
}

TEST(Step, ShapeMismatch) {
  OptimizerState st;
  EXPECT_THROW(gd_step(vec({1, 2}), vec({1}), BlockSet::single(2), 0.1, cfg_for(Method::GD), st), ConfigError);
  EXPECT_THROW(gd_step(vec({1}), vec({1}), BlockSet::single(1), 0.0, cfg_for(Method::GD), st), ConfigError);
}

TEST(Run, StartAtOptimumDoesNotMove) {
  auto f = quadratic_1d(1.0);
  for (Method m : {Method::LARS, Method::PERCENT_DELTA, Method::GD, Method::MOMENTUM, Method::ADAM}) {
    OptimizerConfig cfg;
    cfg.method = m;
    RunOptions opts;
    opts.max_steps = 50;
    const auto r = run(*f, vec({1}), cfg, opts);
    EXPECT_EQ(r.trajectory.size(), 1u) << to_string(m);
    EXPECT_EQ(r.final_w[0], 1.0);
    EXPECT_EQ(r.trajectory[0].step_norm_l2, 0.0);
  }
}

TEST(Run, QuadraticAbsorptionExample) {
  auto f = quadratic_1d(1.0);
  RunOptions opts;
  opts.max_steps = 200;
  opts.keep_iterates = true;
  auto cfg = cfg_for(Method::LARS);
  cfg.schedule = Schedule::fixed(0.1);
  const auto r = run(*f, vec({0.1}), cfg, opts);
  ASSERT_EQ(r.iterates.size(), 201u);
  EXPECT_LT(r.iterates[23][0], 0.9);
  for (std::size_t k = 24; k < r.iterates.size(); ++k) {
    EXPECT_GE(r.iterates[k][0], 0.9);
    EXPECT_LE(r.iterates[k][0], 1.1);
  }
}

TEST(Run, SignTrapExample) {
  auto f = quadratic_1d(1.0);
  RunOptions opts;
  opts.max_steps = 60;
  opts.keep_iterates = true;
  auto cfg = cfg_for(Method::LARS);
  cfg.schedule = Schedule::fixed(0.5);
  const auto r = run(*f, vec({-1}), cfg, opts);
  for (std::size_t k = 0; k < r.iterates.size(); ++k) EXPECT_EQ(r.iterates[k][0], -std::ldexp(1.0, -static_cast<int>(k)));
}

TEST(Run, OneDimensionalProperties) {
  Rng rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    const double a = rng.uniform(0.1, 10);
    const double eta = rng.uniform(0.01, 0.9);
    const bool negative = trial % 4 == 0;
    const double w0 = negative ? -rng.uniform(0.01, 10) : rng.uniform(0.01, 20);
    auto cfg = cfg_for(Method::LARS);
    cfg.schedule = Schedule::fixed(eta);
    RunOptions opts;
    opts.max_steps = 500;
    opts.keep_iterates = true;
    const auto it = run(*quadratic_1d(a), vec({w0}), cfg, opts).iterates;
    const double lo = a * (1 - eta), hi = a * (1 + eta);
    bool inside = false;
    for (std::size_t k = 0; k + 1 < it.size(); ++k) {
      const double w = it[k][0], next = it[k + 1][0];
      if (negative) {
        ASSERT_LT(next, 0.0);
        if (std::abs(next) < 1e-290) break;  // subnormal range
        ASSERT_LE(testing_support::rel_err(std::abs(next), (1 - eta) * std::abs(w)),
                  8 * std::numeric_limits<double>::epsilon() / (1 - eta))
            << "a=" << a << " eta=" << eta << " w=" << w << " next=" << next << " k=" << k;
        continue;
      }
      if (w < lo) ASSERT_LE(next, hi) << "skipped the interval";
      inside = inside || (lo <= w && w <= hi);
      if (inside) ASSERT_TRUE(lo <= next && next <= hi) << "left the interval";
    }
  }
}

TEST(Run, RecordsPreUpdateValues) {
  auto f = quadratic_1d(1.0);
  RunOptions opts;
  opts.max_steps = 5;
  opts.keep_iterates = true;
  auto cfg = cfg_for(Method::GD);
  cfg.schedule = Schedule::fixed(0.25);
  const auto r = run(*f, vec({3}), cfg, opts);
  ASSERT_EQ(r.trajectory.size(), 5u);
  for (std::size_t k = 0; k < 5; ++k) {
    const auto& rec = r.trajectory[k];
    EXPECT_EQ(rec.step, k);
    EXPECT_EQ(rec.f_value, f->value(r.iterates[k]));
    EXPECT_EQ(rec.step_norm_l2, (r.iterates[k + 1] - r.iterates[k]).norm());
    EXPECT_EQ(*rec.dist_to_opt, std::abs(r.iterates[k][0] - 1.0));
    EXPECT_EQ(rec.lr, 0.25);
    EXPECT_EQ(rec.fallback_active.size(), 1u);
  }
}

TEST(Run, NonFiniteAbortsWithStepIndex) {
  PoisonedObjective f;
  auto cfg = cfg_for(Method::GD);
  cfg.schedule = Schedule::fixed(0.2);
  RunOptions opts;
  opts.max_steps = 100;
  try {
    run(f, vec({1}), cfg, opts);
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("at step 4"), std::string::npos) << e.what();
  }
}

TEST(Run, StoppingAndConfigErrors) {
  auto f = quadratic_1d(1.0);
  auto cfg = cfg_for(Method::GD);
  cfg.schedule = Schedule::fixed(0.5);
  RunOptions opts;
  opts.max_steps = 1000;
  opts.stop.f_gap_tol = 1e-6;
  const auto r = run(*f, vec({3}), cfg, opts);
  EXPECT_LT(r.trajectory.back().f_value, 1e-6);
  EXPECT_LT(r.trajectory.size(), 1000u);

  class NoMeta : public Objective {
   public:
    Index dim() const override { return 1; }
    double value(const ParamVector& w) const override { return w[0] * w[0]; }
    ParamVector gradient(const ParamVector& w) const override { return 2 * w; }
    std::string name() const override { return "nometa"; }
  } nometa;
  EXPECT_THROW(run(nometa, vec({1}), cfg, opts), ConfigError);

  opts.stop.f_gap_tol.reset();
  EXPECT_THROW(run(*f, vec({1, 2}), cfg, opts), ConfigError);
  cfg.schedule = Schedule::linear_to_zero(0.1, 10);
  EXPECT_THROW(run(*f, vec({1}), cfg, opts), ConfigError);
  opts.max_steps = 0;
  cfg.schedule = Schedule::fixed(0.1);
  EXPECT_THROW(run(*f, vec({1}), cfg, opts), ConfigError);
}

TEST(Run, OracleGradientIsUsed) {
  auto f = quadratic_1d(1.0);
  auto cfg = cfg_for(Method::GD);
  cfg.schedule = Schedule::fixed(0.1);
  RunOptions opts;
  opts.max_steps = 3;
  std::vector<std::uint64_t> calls;
  GradientOracle oracle = [&](const ParamVector&, std::uint64_t k) {
    calls.push_back(k);
    return vec({1.0});
  };
  const auto r = run(*f, oracle, vec({0}), cfg, opts);
  EXPECT_EQ(calls, (std::vector<std::uint64_t>{0, 1, 2}));
  EXPECT_DOUBLE_EQ(r.final_w[0], -0.3);
  EXPECT_EQ(r.trajectory[0].grad_norm_l2, 1.0);
}

TEST(Run, Deterministic) {
  auto f = quadratic_nd(Eigen::MatrixXd(Eigen::Vector2d(1, 3).asDiagonal()), Eigen::Vector2d(1, -1));
  OptimizerConfig cfg;
  cfg.method = Method::ADAM;
  RunOptions opts;
  opts.max_steps = 300;
  const auto a = run(*f, Eigen::Vector2d(4, 4), cfg, opts);
  const auto b = run(*f, Eigen::Vector2d(4, 4), cfg, opts);
  EXPECT_EQ(a.final_w, b.final_w);
  for (std::size_t k = 0; k < a.trajectory.size(); ++k) EXPECT_EQ(a.trajectory[k].f_value, b.trajectory[k].f_value);
}
