#include "propopt/optimizers.hpp"
#include "propopt/theory.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

using namespace propopt;
using testing_support::random_vector;

namespace {

ParamVector scalar(double x) { return ParamVector::Constant(1, x); }

// Plain scalar recursion of the proportional update on (w - a)^2 / 2.
double lars_1d(double w, double a, double eta) {
  if (w == a) return w;
  return w - eta * std::abs(w) * (w > a ? 1.0 : -1.0);
}

std::uint64_t simulated_entry(double a, double w0, double eta) {
  double w = w0;
  for (std::uint64_t k = 0;; ++k) {
    if (a * (1 - eta) <= w && w <= a * (1 + eta)) return k;
    w = lars_1d(w, a, eta);
  }
}

OptimizerConfig exact_lars(Schedule s) {
  OptimizerConfig c;
  c.method = Method::LARS;
  c.schedule = s;
  c.eps_stabilizer = 0.0;
  c.fallback_threshold = 0.0;
  return c;
}

}  // namespace

TEST(AbsorbingInterval, Examples) {
  const Interval a = absorbing_interval(1, 0.1);
  EXPECT_DOUBLE_EQ(a.lo, 0.9);
  EXPECT_DOUBLE_EQ(a.hi, 1.1);
  const Interval b = absorbing_interval(2, 0.5);
  EXPECT_EQ(b.lo, 1.0);
  EXPECT_EQ(b.hi, 3.0);
  EXPECT_NEAR(absorbing_interval(1, 1e-6).width(), 2e-6, 1e-15);
  EXPECT_THROW(absorbing_interval(1, 1.0), DomainError);
  EXPECT_THROW(absorbing_interval(-1, 0.1), DomainError);
}

TEST(HittingTime, Examples) {
  EXPECT_EQ(hitting_time(1, 0.1, 0.1), 24u);
  EXPECT_EQ(hitting_time(1, 1, 0.1), 0u);
  EXPECT_EQ(hitting_time(1, 4, 0.1), 13u);
  EXPECT_EQ(hitting_time(1, 10, 0.1), 21u);
  EXPECT_THROW(hitting_time(1, -1, 0.1), DomainError);
}

TEST(HittingTime, MatchesSimulationProperty) {
  Rng rng(77);
  for (int i = 0; i < 200; ++i) {
    const double a = rng.uniform(0.1, 10);
    const double w0 = rng.uniform(0.01, 30);
    const double eta = rng.uniform(0.01, 0.9);
    const auto predicted = hitting_time(a, w0, eta);
    const auto entry = simulated_entry(a, w0, eta);
    EXPECT_LE(entry, predicted);
    EXPECT_GE(entry + 1, predicted);  // the closed form is tight up to boundary rounding

    // Once inside, the scalar recursion never leaves.
    double w = w0;
    for (std::uint64_t k = 0; k < entry; ++k) w = lars_1d(w, a, eta);
    for (int k = 0; k < 10000; ++k) {
      w = lars_1d(w, a, eta);
      ASSERT_TRUE(a * (1 - eta) <= w && w <= a * (1 + eta));
    }
  }
}

TEST(EpsilonRate, ExamplesAndSimulation) {
  EXPECT_DOUBLE_EQ(epsilon_lr_bound(2, 0.01), 0.005);
  EXPECT_EQ(epsilon_lr_bound(1, 1), 1.0);
  EXPECT_DOUBLE_EQ(epsilon_lr_bound(10, 0.1), 0.01);
  double w = 0.5, amp = 0;
  for (int k = 0; k < 5000; ++k) {
    w = lars_1d(w, 2.0, 0.005);
    if (k > 2500) amp = std::max(amp, std::abs(w - 2.0));
  }
  EXPECT_LE(amp, 0.01);
  EXPECT_GT(amp, 0.0095);
}

TEST(FixedPointDecay, Examples) {
  EXPECT_EQ(fixed_point_decay(-1, 0.5, 3), -0.125);
  EXPECT_EQ(fixed_point_decay(-2.5, 0.3, 0), -2.5);
  for (std::uint64_t k = 0; k < 200; ++k) EXPECT_LT(fixed_point_decay(-1, 0.9, k), 0.0);
  EXPECT_THROW(fixed_point_decay(1, 0.5, 3), DomainError);
}

TEST(Lemma1, OneDimensionalExamples) {
  auto f = quadratic_1d(1.0);
  EXPECT_FALSE(lemma1_set_member(scalar(0.5), *f, 0.1));
  EXPECT_TRUE(lemma1_set_member(scalar(1.01), *f, 0.1));
  EXPECT_THROW(lemma1_set_member(scalar(1.0), *f, 0.1), DomainError);
}

TEST(Lemma1, GridMatchesAnalyticInterval) {
  const double eta = 0.1;
  auto f = quadratic_1d(1.0);
  // Solving |w - eta|w| sign(w - 1) - 1| > |w - 1| by hand gives (2/(2+eta), 2/(2-eta)) minus {1}.
  const double lo = 2.0 / (2.0 + eta), hi = 2.0 / (2.0 - eta);
  const Interval lib = lemma1_interval_quadratic_1d(1.0, eta);
  EXPECT_DOUBLE_EQ(lib.lo, lo);
  EXPECT_DOUBLE_EQ(lib.hi, hi);
  int disagreements = 0;
  for (int i = -30000; i <= 30000; ++i) {
    const double w = i / 10000.0;
    if (w == 1.0) continue;
    disagreements += lemma1_set_member(scalar(w), *f, eta) != (lo < w && w < hi);
  }
  EXPECT_EQ(disagreements, 0);
}

TEST(Lemma1, RadiusIsTightInOneDimension) {
  // With m = L the radius reduces to the upper end of the 1D escaping set.
  for (double a : {0.5, 1.0, 7.0})
    for (double eta : {0.05, 0.1, 0.5}) {
      EXPECT_DOUBLE_EQ(lemma1_radius(1, 1, eta, a), lemma1_interval_quadratic_1d(a, eta).hi);
    }
  EXPECT_THROW(lemma1_radius(1, 4, 0.5, 1), DomainError);  // 2m/(eta L) = 1
  EXPECT_EQ(theorem1_distance_bound(2, 0.1, 1, 10), 10.0);
  EXPECT_DOUBLE_EQ(theorem1_distance_bound(2, 0.1, 1, 1), 3.3);
}

TEST(Lemma1, MembersStayInsideRadiusProperty) {
  Rng rng(14);
  for (int trial = 0; trial < 20; ++trial) {
    const double m = rng.uniform(0.5, 2), L = m * rng.uniform(1, 5);
    Eigen::MatrixXd A = Eigen::Vector2d(m, L).asDiagonal();
    const ParamVector b = random_vector(rng, 2, -3, 3);
    auto f = quadratic_nd(A, b);
    const double eta = rng.uniform(0.05, 1.0) * m / L;
    const double R = lemma1_radius(m, L, eta, b.norm());
    for (int i = 0; i < 20000; ++i) {
      const ParamVector w = random_vector(rng, 2, -4 * R, 4 * R);
      if (lemma1_set_member(w, *f, eta)) ASSERT_LE(w.norm(), R);
    }
  }
}

TEST(CosAlpha, Examples) {
  auto id = quadratic_nd(Eigen::MatrixXd::Identity(2, 2), Eigen::Vector2d::Zero());
  EXPECT_DOUBLE_EQ(cos_alpha(Eigen::Vector2d(3, -1), *id), 1.0);
  Eigen::MatrixXd A = Eigen::Vector2d(1, 4).asDiagonal();
  auto f = quadratic_nd(A, Eigen::Vector2d::Zero());
  EXPECT_DOUBLE_EQ(cos_alpha(Eigen::Vector2d(1, 1), *f), 5.0 / std::sqrt(34.0));
  EXPECT_THROW(cos_alpha(Eigen::Vector2d(0, 0), *f), DomainError);
}

TEST(CosAlpha, BoundedByConditioningProperty) {
  Rng rng(15);
  for (int trial = 0; trial < 10; ++trial) {
    const Index n = 2 + static_cast<Index>(rng.below(4));
    Eigen::VectorXd eig = random_vector(rng, n, 0.2, 5.0);
    auto f = quadratic_nd(Eigen::MatrixXd(eig.asDiagonal()), random_vector(rng, n, -1, 1));
    const double bound = eta_small_enough(*f->metadata().m, *f->metadata().L);
    const auto probe = conjecture1_probe(*f, 20000, 3.0, trial);
    EXPECT_GE(probe.min_cos, bound - 1e-12);
    EXPECT_EQ(probe.evaluated, 20000u);
  }
}

TEST(EtaSmallEnough, Examples) {
  EXPECT_EQ(eta_small_enough(1, 4), 0.25);
  EXPECT_EQ(eta_small_enough(3, 3), 1.0);
  EXPECT_THROW(eta_small_enough(0, 4), DomainError);
}

TEST(Theorem2, Examples) {
  const BoundConstants c(2, 0.5, 1, 1, 1, 1);
  const auto b = theorem2_bound(100, 0.1, c);
  EXPECT_DOUBLE_EQ(b.C1, 2.0);
  EXPECT_DOUBLE_EQ(b.C2, 4.5);
  EXPECT_DOUBLE_EQ(b.value, 0.245);
  EXPECT_NEAR(theorem2_bound(1u << 30, 0.1, c).value, 0.01 * 4.5, 1e-7);
}

TEST(Theorem2, DominatesRandomRunsProperty) {
  Rng rng(61);
  for (int trial = 0; trial < 15; ++trial) {
    const double m = rng.uniform(0.5, 2), L = m * rng.uniform(1, 4);
    Eigen::MatrixXd A = Eigen::Vector2d(m, L).asDiagonal();
    auto f = quadratic_nd(A, random_vector(rng, 2, -3, 3));
    const double eta = rng.uniform(0.05, 1.0) * m / L;
    RunOptions opts;
    opts.max_steps = 2000;
    opts.keep_iterates = true;
    const auto r = run(*f, random_vector(rng, 2, -10, 10), exact_lars(Schedule::fixed(eta)), opts);
    const BoundConstants c = BoundConstants::measured(r.iterates, *f);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k < r.iterates.size(); ++k) {
      best = std::min(best, f->value(r.iterates[k]));
      ASSERT_LE(best, theorem2_bound(k, eta, c).value) << "trial " << trial << " k " << k;
    }
  }
}

TEST(BoundConstants, Invariants) {
  const BoundConstants c(2, 0.5, 3, 1, 1.5, 4);
  EXPECT_EQ(c.M3(), 1.5 + 2);
  EXPECT_THROW(BoundConstants(0, 1, 1, 0, 0, 0), DomainError);
  EXPECT_THROW(BoundConstants(1, 1, 1, -1, 0, 0), DomainError);

  auto f = quadratic_nd(Eigen::MatrixXd(Eigen::Vector2d(1, 2).asDiagonal()), Eigen::Vector2d(2, 2));
  const std::vector<ParamVector> it = {Eigen::Vector2d(4, 4), Eigen::Vector2d(1, 1), Eigen::Vector2d(2, 3)};
  const BoundConstants m = BoundConstants::measured(it, *f);
  EXPECT_DOUBLE_EQ(m.M1(), std::sqrt(8.0));
  EXPECT_DOUBLE_EQ(m.M2(), std::sqrt(2.0));
  for (const auto& w : it) EXPECT_LE(m.M2(), w.norm());
  EXPECT_EQ(m.M3(), m.w_star_norm() + m.M1());
  EXPECT_EQ(m.L(), 2.0);
}

TEST(Corollary, Examples) {
  EXPECT_NEAR(corollary_eta_star(0.006, 2).eta, 0.0316228, 1e-7);
  for (double eps : {1e-4, 0.01, 0.5}) {
    const double eta = corollary_eta_star(eps, 7).eta;
    EXPECT_LT(eta * eta * 7, eps);
    EXPECT_NEAR(eta * eta * 7, eps / 3, 1e-15);
  }
  EXPECT_EQ(corollary_eta_star(3, 1).eta, 1.0);
  const BoundConstants c(1, 1, 1.0, 0.5, 1, 1);  // C2 = 2
  const auto r = corollary_eta_star(6.0, c);
  EXPECT_EQ(r.eta, 1.0);
  ASSERT_TRUE(r.admissible.has_value());
  EXPECT_FALSE(*r.admissible);
  const double C1 = theorem2_bound(1, 1, c).C1;
  EXPECT_DOUBLE_EQ(*r.k_bound, 3 * std::sqrt(6.0) * C1 / (2 * 6.0 * std::sqrt(6.0)));
}

TEST(Theorem3, Examples) {
  const BoundConstants one(1, 1, 1, 0, 0, 1);
  const double single[] = {1.0};
  EXPECT_DOUBLE_EQ(theorem3_bound(single, one), 1.0);
  EXPECT_THROW(theorem3_bound(std::span<const double>{}, one), DomainError);

  const BoundConstants c(2, 0.5, 3, 0, 1, 2);
  std::vector<double> etas;
  for (std::uint64_t k = 0; k < 100000; ++k) etas.push_back(rate(Schedule::inverse_k(0.1), k));
  const auto prefix = theorem3_bound_prefix(etas, c);
  for (std::size_t k = 10; k + 1 < prefix.size(); ++k) ASSERT_LT(prefix[k + 1], prefix[k]);
  EXPECT_DOUBLE_EQ(prefix.back(), theorem3_bound(etas, c));
  // Direct evaluation of the closed form at k = 10.
  double s = 0, s2 = 0;
  for (std::size_t i = 0; i < 10; ++i) {
    s += etas[i];
    s2 += etas[i] * etas[i];
  }
  EXPECT_DOUBLE_EQ(prefix[9], (4 + 9 * s2) / (2 * (0.5 / (2 * 3)) * s));
}

TEST(ConjectureProbe, Examples) {
  Eigen::MatrixXd A = Eigen::Vector2d(1, 4).asDiagonal();
  EXPECT_GE(conjecture1_probe(*quadratic_nd(A, Eigen::Vector2d::Zero()), 100000, 10, 3).min_cos, 0.25 - 1e-12);
  EXPECT_NEAR(conjecture1_probe(*quadratic_nd(Eigen::MatrixXd::Identity(3, 3), Eigen::Vector3d(1, 2, 3)), 1000, 5, 1)
                  .min_cos,
              1.0, 1e-12);
  EXPECT_NEAR(conjecture1_probe(*convex_1d_power(0, 4), 1000, 2, 1).min_cos, 1.0, 1e-12);
}

TEST(Certificate, ComparatorSemantics) {
  EXPECT_TRUE(make_certificate("a", {}, Comparator::LE, 1.0, 1.0).passed);
  EXPECT_FALSE(make_certificate("a", {}, Comparator::LE, 1.0, 1.01).passed);
  EXPECT_TRUE(make_certificate("a", {}, Comparator::LE, 1.0, 1.01, 0.02).passed);
  EXPECT_TRUE(make_certificate("a", {}, Comparator::GE, 2.0, 2.5).passed);
  EXPECT_FALSE(make_certificate("a", {}, Comparator::GE, 2.0, 1.9).passed);
  EXPECT_TRUE(make_certificate("a", {}, Comparator::IN_INTERVAL, 2.0, 1.5, 0.0, 1.0).passed);
  EXPECT_FALSE(make_certificate("a", {}, Comparator::IN_INTERVAL, 2.0, 0.5, 0.0, 1.0).passed);
  EXPECT_THROW(make_certificate("a", {}, Comparator::IN_INTERVAL, 2.0, 1.5), ConfigError);
  EXPECT_TRUE(make_certificate("a", {}, Comparator::EQ_WITHIN, 0.1, 0.104, 0.05).passed);
  EXPECT_FALSE(make_certificate("a", {}, Comparator::EQ_WITHIN, 0.1, 0.11, 0.05).passed);
  EXPECT_FALSE(make_certificate("a", {}, Comparator::LE, 1.0, std::nan("")).passed);
}

TEST(Certificate, SoundnessAndRoundTripProperty) {
  Rng rng(5);
  const Comparator cmps[] = {Comparator::LE, Comparator::GE, Comparator::IN_INTERVAL, Comparator::EQ_WITHIN};
  for (int i = 0; i < 1000; ++i) {
    const Comparator cmp = cmps[rng.below(4)];
    const double bound = rng.uniform(-5, 5);
    const double observed = i % 50 == 0 ? std::numeric_limits<double>::infinity() : rng.uniform(-5, 5);
    const double tol = rng.below(2) ? 0.0 : rng.uniform(0, 0.5);
    const std::optional<double> lower =
        cmp == Comparator::IN_INTERVAL ? std::optional<double>(bound - rng.uniform(0, 5)) : std::nullopt;
    const Certificate c = make_certificate("c" + std::to_string(i), {{"x", bound}}, cmp, bound, observed, tol, lower);
    EXPECT_EQ(c.passed, c.holds());
    const Certificate back = certificate_from_json(nlohmann::json::parse(to_json(c).dump()));
    EXPECT_EQ(back.passed, c.passed);
    EXPECT_EQ(back.holds(), c.passed);
    EXPECT_EQ(back.name, c.name);
    EXPECT_EQ(back.comparator, c.comparator);
  }
}

TEST(Certificate, ReportFileFields) {
  const auto dir = testing_support::scratch_dir("cert_report");
  const auto path = (dir / "report.json").string();
  write_certificate_report(path, {make_certificate("x", {{"a", 1.0}}, Comparator::LE, 2.0, 1.0)});
  const auto j = nlohmann::json::parse(testing_support::read_file(path));
  ASSERT_TRUE(j.is_array());
  for (const char* key : {"name", "inputs", "bound_value", "observed_value", "comparator", "tolerance", "passed"})
    EXPECT_TRUE(j[0].contains(key)) << key;
  EXPECT_EQ(j[0]["inputs"]["a"], 1.0);
}
