#include "propopt/certify.hpp"

#include "propopt/harness.hpp"
#include "propopt/optimizers.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <limits>

namespace propopt {

namespace {

OptimizerConfig exact(Method method, Schedule schedule) {
  OptimizerConfig cfg;
  cfg.method = method;
  cfg.schedule = schedule;
  cfg.eps_stabilizer = 0.0;
  cfg.fallback_threshold = 0.0;
  return cfg;
}

OptimizerConfig exact_lars(double eta) { return exact(Method::LARS, Schedule::fixed(eta)); }

ParamVector scalar(double x) { return ParamVector::Constant(1, x); }

std::vector<ParamVector> iterates(const Objective& obj, const ParamVector& w0, const OptimizerConfig& cfg,
                                  std::uint64_t steps) {
  RunOptions opts;
  opts.max_steps = steps;
  opts.keep_iterates = true;
  return run(obj, w0, cfg, opts).iterates;
}

struct Absorption {
  std::uint64_t entry = std::numeric_limits<std::uint64_t>::max();
  std::uint64_t exits = 0;
};

/// Entry step into the absorbing interval and the number of later iterates found outside it.
Absorption absorption(double a, double w0, double eta, std::uint64_t extra) {
  const Interval in = absorbing_interval(a, eta);
  const auto w = iterates(*quadratic_1d(a), scalar(w0), exact_lars(eta), hitting_time(a, w0, eta) + extra);
  Absorption out;
  for (std::size_t k = 0; k < w.size(); ++k) {
    const bool inside = in.contains(w[k][0]);
    if (out.entry == std::numeric_limits<std::uint64_t>::max()) {
      if (inside) out.entry = k;
    } else if (!inside) {
      ++out.exits;
    }
  }
  return out;
}

double tail_amplitude(double a, double eta, std::uint64_t steps) {
  const auto w = iterates(*quadratic_1d(a), scalar(0.1 * a), exact_lars(eta), steps);
  double amp = 0.0;
  for (std::size_t k = w.size() / 2; k < w.size(); ++k) amp = std::max(amp, std::abs(w[k][0] - a));
  return amp;
}

std::uint64_t ulp_distance(double x, double y) {
  if (x == y) return 0;
  if (std::signbit(x) != std::signbit(y)) return std::numeric_limits<std::uint64_t>::max();
  const auto a = std::bit_cast<std::uint64_t>(std::abs(x));
  const auto b = std::bit_cast<std::uint64_t>(std::abs(y));
  return a > b ? a - b : b - a;
}

Certificate empirical(Certificate c) {
  c.empirical = true;
  return c;
}

// Min-so-far gap of f_1..f_{k} divided by the bound, maximized over k.
struct Dominance {
  double worst_ratio = 0.0;
  std::uint64_t steps = 0;
  std::optional<std::uint64_t> steps_to_tol;
  BoundConstants constants{1, 1, 1, 0, 0, 0};
};

Dominance dominance(const Objective& obj, const ParamVector& w0, const OptimizerConfig& cfg,
                    std::uint64_t max_steps, std::optional<double> gap_tol, bool inverse_k) {
  RunOptions opts;
  opts.max_steps = max_steps;
  opts.keep_iterates = true;
  opts.stop.f_gap_tol = gap_tol;
  const RunResult r = run(obj, w0, cfg, opts);
  const double f_star = *obj.metadata().f_star;
  Dominance d;
  d.constants = BoundConstants::measured(r.iterates, obj);
  d.steps = r.trajectory.size();
  std::vector<double> etas;
  for (const auto& rec : r.trajectory) etas.push_back(rec.lr);
  const auto t3 = inverse_k ? theorem3_bound_prefix(etas, d.constants) : std::vector<double>{};
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k < r.iterates.size(); ++k) {
    best = std::min(best, obj.value(r.iterates[k]) - f_star);
    const double bound =
        inverse_k ? t3[k - 1] : theorem2_bound(k, cfg.schedule.eta0, d.constants).value;
    d.worst_ratio = std::max(d.worst_ratio, best / bound);
    if (gap_tol && !d.steps_to_tol && best < *gap_tol) d.steps_to_tol = k;
  }
  return d;
}

std::string fmt(double x) { return format_double(x); }

// ---------------------------------------------------------------------------

std::vector<Certificate> check_absorption(const CheckContext&) {
  std::vector<Certificate> out;
  const double a = 1.0, w0 = 0.1, eta = 0.1;
  const auto predicted = hitting_time(a, w0, eta);
  const Absorption s = absorption(a, w0, eta, 10000);
  out.push_back(make_certificate("absorption_entry", {{"a", a}, {"w0", w0}, {"eta", eta}}, Comparator::LE,
                                 static_cast<double>(predicted), static_cast<double>(s.entry)));
  out.push_back(make_certificate("absorption_stay", {{"a", a}, {"w0", w0}, {"eta", eta}, {"further_steps", 10000}},
                                 Comparator::LE, 0.0, static_cast<double>(s.exits)));

  const double w0_above = 4.0;
  const Absorption above = absorption(a, w0_above, eta, 10000);
  out.push_back(make_certificate("absorption_entry_from_above", {{"a", a}, {"w0", w0_above}, {"eta", eta}},
                                 Comparator::LE, static_cast<double>(hitting_time(a, w0_above, eta)),
                                 static_cast<double>(above.entry)));

  // Random instances: count runs that enter late or ever leave.
  Rng rng(derive_seed(1, 0xab50));
  std::uint64_t failures = 0;
  for (int i = 0; i < 200; ++i) {
    const double ra = rng.uniform(0.1, 10.0);
    const double rw0 = rng.uniform(0.01, 20.0);
    const double reta = rng.uniform(0.01, 0.9);
    const Absorption r = absorption(ra, rw0, reta, 10000);
    if (r.entry > hitting_time(ra, rw0, reta) || r.exits != 0) ++failures;
  }
  out.push_back(make_certificate("absorption_random_instances", {{"instances", 200}, {"further_steps", 10000}},
                                 Comparator::LE, 0.0, static_cast<double>(failures)));
  return out;
}

std::vector<Certificate> check_amplitude(const CheckContext&) {
  std::vector<Certificate> out;
  const double etas[] = {0.05, 0.1, 0.2};
  for (double a : {1.0, 10.0}) {
    double prev = 0.0, min_ratio = std::numeric_limits<double>::infinity();
    for (double eta : etas) {
      const double amp = tail_amplitude(a, eta, 4000);
      out.push_back(make_certificate("amplitude[a=" + fmt(a) + ",eta=" + fmt(eta) + "]", {{"a", a}, {"eta", eta}},
                                     Comparator::EQ_WITHIN, eta * a, amp, 0.05));
      if (prev > 0.0) min_ratio = std::min(min_ratio, amp / prev);
      prev = amp;
    }
    out.push_back(make_certificate("amplitude_increasing[a=" + fmt(a) + "]", {{"a", a}}, Comparator::GE,
                                   std::nextafter(1.0, 2.0), min_ratio));
  }
  // A rate of eps/a keeps the limiting oscillation within eps.
  const double a = 2.0, eps = 0.01;
  const double eta = epsilon_lr_bound(a, eps);
  out.push_back(make_certificate("epsilon_rate", {{"a", a}, {"eps", eps}, {"eta", eta}}, Comparator::LE, eps,
                                 tail_amplitude(a, eta, 4000)));
  return out;
}

std::vector<Certificate> check_attractive_origin(const CheckContext&) {
  const double a = 1.0, w0 = -1.0, eta = 0.5;
  const auto w = iterates(*quadratic_1d(a), scalar(w0), exact_lars(eta), 50);
  double worst = 0.0;
  std::uint64_t nonnegative = 0;
  for (std::size_t k = 0; k < w.size(); ++k) {
    const double expected = fixed_point_decay(w0, eta, k);
    worst = std::max(worst, std::abs(w[k][0] - expected) / std::abs(expected));
    if (w[k][0] >= 0.0) ++nonnegative;
  }
  return {make_certificate("origin_decay", {{"a", a}, {"w0", w0}, {"eta", eta}, {"steps", 50}}, Comparator::LE,
                           1e-12, worst),
          make_certificate("origin_sign_kept", {{"a", a}, {"w0", w0}, {"eta", eta}}, Comparator::LE, 0.0,
                           static_cast<double>(nonnegative))};
}

std::vector<Certificate> check_convex_equivalence(const CheckContext&) {
  const auto cfg = exact_lars(0.1);
  const auto q = iterates(*quadratic_1d(1.0), scalar(0.1), cfg, 500);
  const auto p = iterates(*convex_1d_power(1.0, 4), scalar(0.1), cfg, 500);
  double worst = q.size() == p.size() ? 0.0 : std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < std::min(q.size(), p.size()); ++k)
    worst = std::max(worst, std::abs(q[k][0] - p[k][0]) / std::abs(q[k][0]));
  return {make_certificate("sign_only_dynamics", {{"a", 1.0}, {"p", 4}, {"w0", 0.1}, {"eta", 0.1}, {"steps", 500}},
                           Comparator::LE, 1e-12, worst)};
}

std::vector<Certificate> check_scale_invariance(const CheckContext&) {
  Rng rng(derive_seed(1, 0x5ca1e));
  std::vector<Certificate> out;
  for (Method method : {Method::LARS, Method::PERCENT_DELTA}) {
    const auto cfg = exact(method, Schedule::fixed(0.1));
    std::uint64_t worst = 0;
    for (int i = 0; i < 100; ++i) {
      const Index dim = 1 + static_cast<Index>(rng.below(12));
      ParamVector w(dim), g(dim);
      for (Index j = 0; j < dim; ++j) {
        w[j] = rng.uniform(-5.0, 5.0);
        g[j] = rng.normal();
      }
      const BlockSet blocks = dim >= 4 ? BlockSet::uniform(2, dim / 2, "b") : BlockSet::single(dim);
      if (blocks.dim() != dim) continue;
      OptimizerState s1, s2;
      const auto d1 = step(w, g, blocks, 0.1, cfg, s1).delta;
      const auto d2 = step(w, ParamVector(1e3 * g), blocks, 0.1, cfg, s2).delta;
      for (Index j = 0; j < dim; ++j) worst = std::max(worst, ulp_distance(d1[j], d2[j]));
    }
    out.push_back(make_certificate("scale_invariance[" + to_string(method) + "]", {{"samples", 100}, {"scale", 1e3}},
                                   Comparator::LE, 4.0, static_cast<double>(worst)));
  }
  return out;
}

std::shared_ptr<const Objective> benchmark_quadratic() {
  Eigen::MatrixXd A = Eigen::Vector2d(1.0, 2.0).asDiagonal();
  return quadratic_nd(A, Eigen::Vector2d(2.0, 2.0));
}

std::vector<Certificate> check_theorem2(const CheckContext&) {
  const auto obj = benchmark_quadratic();
  const double eta = 0.05;
  const auto& meta = obj->metadata();
  const Dominance d = dominance(*obj, Eigen::Vector2d(4.0, 4.0), exact_lars(eta), 5000, std::nullopt, false);
  const auto b = theorem2_bound(d.steps, eta, d.constants);
  return {make_certificate("rate_admissible", {{"m", *meta.m}, {"L", *meta.L}}, Comparator::LE,
                           eta_small_enough(*meta.m, *meta.L), eta),
          empirical(make_certificate("theorem2_dominance",
                                     {{"eta", eta},
                                      {"steps", static_cast<double>(d.steps)},
                                      {"M1", d.constants.M1()},
                                      {"M2", d.constants.M2()},
                                      {"C1", b.C1},
                                      {"C2", b.C2}},
                                     Comparator::LE, 1.0, d.worst_ratio))};
}

std::vector<Certificate> check_theorem3(const CheckContext&) {
  const auto obj = benchmark_quadratic();
  const double tol = 1e-3;
  const std::uint64_t budget = 100000;
  const Dominance d = dominance(*obj, Eigen::Vector2d(4.0, 4.0), exact(Method::LARS, Schedule::inverse_k(0.1)),
                                budget, tol, true);
  return {empirical(make_certificate("theorem3_dominance",
                                     {{"eta0", 0.1},
                                      {"steps", static_cast<double>(d.steps)},
                                      {"M1", d.constants.M1()},
                                      {"M2", d.constants.M2()},
                                      {"M3", d.constants.M3()}},
                                     Comparator::LE, 1.0, d.worst_ratio)),
          make_certificate("theorem3_convergence", {{"gap_tol", tol}, {"eta0", 0.1}}, Comparator::LE,
                           static_cast<double>(budget),
                           d.steps_to_tol ? static_cast<double>(*d.steps_to_tol)
                                          : std::numeric_limits<double>::infinity())};
}

std::vector<Certificate> check_corollary(const CheckContext&) {
  std::vector<Certificate> out;
  const double a = 1.0, w0 = 0.5;
  const auto obj = quadratic_1d(a);
  // Iterates start below a and never pass a(1 + eta), so |w - a| <= |w0 - a| and |w| >= w0.
  const BoundConstants c(std::abs(w0 - a), w0, 1.0, 1.0, a, std::abs(w0 - a));
  std::vector<double> xs, ys;
  for (double eps : {1e-1, 1e-2, 1e-3}) {
    const CorollaryRate rate = corollary_eta_star(eps, c);
    const auto w = iterates(*obj, scalar(w0), exact_lars(rate.eta), 10 * static_cast<std::uint64_t>(*rate.k_bound) + 10);
    double best = std::numeric_limits<double>::infinity();
    std::uint64_t hit = 0;
    for (std::size_t k = 1; k < w.size() && hit == 0; ++k) {
      best = std::min(best, obj->value(w[k]));
      if (best < eps) hit = k;
    }
    const double steps = hit ? static_cast<double>(hit) : std::numeric_limits<double>::infinity();
    out.push_back(make_certificate("corollary_steps[eps=" + fmt(eps) + "]",
                                   {{"eps", eps}, {"eta", rate.eta}, {"C1", theorem2_bound(1, rate.eta, c).C1},
                                    {"C2", theorem2_bound(1, rate.eta, c).C2}},
                                   Comparator::LE, *rate.k_bound, steps));
    xs.push_back(std::log(1.0 / eps));
    ys.push_back(std::log(steps));
  }
  const double mx = (xs[0] + xs[1] + xs[2]) / 3.0, my = (ys[0] + ys[1] + ys[2]) / 3.0;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  out.push_back(make_certificate("corollary_rate_slope", {{"a", a}, {"w0", w0}}, Comparator::LE, 1.6, sxy / sxx));
  return out;
}

std::vector<Certificate> check_cos_alpha(const CheckContext& ctx) {
  std::vector<Certificate> out;
  Eigen::MatrixXd A = Eigen::Vector2d(1.0, 4.0).asDiagonal();
  const auto obj = quadratic_nd(A, Eigen::Vector2d::Zero());
  const auto& meta = obj->metadata();
  const ConjectureProbe p = conjecture1_probe(*obj, 1000000, 10.0, derive_seed(ctx.seed, 0xc05));
  out.push_back(make_certificate("cos_alpha_lower_bound",
                                 {{"m", *meta.m}, {"L", *meta.L}, {"samples", static_cast<double>(p.evaluated)}},
                                 Comparator::GE, eta_small_enough(*meta.m, *meta.L) - 1e-12, p.min_cos));

  const auto identity = quadratic_nd(Eigen::MatrixXd::Identity(3, 3), Eigen::Vector3d(1.0, -2.0, 0.5));
  const ConjectureProbe pi = conjecture1_probe(*identity, 10000, 5.0, derive_seed(ctx.seed, 0xc06));
  out.push_back(empirical(make_certificate("conjecture_probe[identity]", {{"samples", 10000}}, Comparator::EQ_WITHIN,
                                           1.0, pi.min_cos, 1e-12)));
  const auto power = convex_1d_power(0.0, 4);
  const ConjectureProbe pp = conjecture1_probe(*power, 10000, 3.0, derive_seed(ctx.seed, 0xc07));
  out.push_back(empirical(make_certificate("conjecture_probe[power4]", {{"samples", 10000}}, Comparator::EQ_WITHIN,
                                           1.0, pp.min_cos, 1e-12)));
  return out;
}

std::vector<Certificate> check_lemma1(const CheckContext&) {
  std::vector<Certificate> out;
  {
    const double a = 1.0, eta = 0.1;
    const auto obj = quadratic_1d(a);
    const Interval s = lemma1_interval_quadratic_1d(a, eta);
    std::uint64_t disagreements = 0, points = 0;
    for (int i = -30000; i <= 30000; ++i) {
      const double w = i / 10000.0;
      if (w == a) continue;
      const bool analytic = s.lo < w && w < s.hi;
      if (lemma1_set_member(scalar(w), *obj, eta) != analytic) ++disagreements;
      ++points;
    }
    out.push_back(make_certificate("escaping_set_1d", {{"a", a}, {"eta", eta}, {"points", static_cast<double>(points)}},
                                   Comparator::LE, 0.0, static_cast<double>(disagreements)));
  }

  // Diagonal quadratic: members of the escaping set stay inside the constructive radius.
  Eigen::MatrixXd A = Eigen::Vector2d(1.0, 4.0).asDiagonal();
  const auto obj = quadratic_nd(A, Eigen::Vector2d(2.0, 2.0));
  const auto& meta = obj->metadata();
  const double ws = meta.w_star->norm();
  for (double eta : {0.1, eta_small_enough(*meta.m, *meta.L)}) {
    const double R = lemma1_radius(*meta.m, *meta.L, eta, ws);
    double max_norm = 0.0;
    std::uint64_t outside = 0, members = 0;
    auto scan = [&](double half, int n) {
      for (int i = 0; i <= n; ++i)
        for (int j = 0; j <= n; ++j) {
          const Eigen::Vector2d w(-half + 2.0 * half * i / n, -half + 2.0 * half * j / n);
          if (w == *meta.w_star) continue;
          if (!lemma1_set_member(w, *obj, eta)) continue;
          ++members;
          max_norm = std::max(max_norm, w.norm());
          if (w.norm() > R) ++outside;
        }
    };
    scan(3.0 * ws + 3.0, 1000);
    scan(1000.0, 1000);
    out.push_back(make_certificate("escaping_set_bounded[eta=" + fmt(eta) + "]",
                                   {{"eta", eta}, {"radius", R}, {"members", static_cast<double>(members)},
                                    {"max_member_norm", max_norm}},
                                   Comparator::LE, 0.0, static_cast<double>(outside)));
  }
  return out;
}

std::vector<Certificate> check_theorem1(const CheckContext& ctx) {
  Eigen::MatrixXd A = Eigen::Vector2d(1.0, 4.0).asDiagonal();
  const auto obj = quadratic_nd(A, Eigen::Vector2d(2.0, 2.0));
  const auto& meta = obj->metadata();
  const double eta = 0.1;
  const double ws = meta.w_star->norm();
  const double R = lemma1_radius(*meta.m, *meta.L, eta, ws);
  Rng rng(derive_seed(ctx.seed, 0x7431));
  double worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    const Eigen::Vector2d w0(rng.uniform(-100.0, 100.0), rng.uniform(-100.0, 100.0));
    const double bound = theorem1_distance_bound(R, eta, ws, (w0 - *meta.w_star).norm());
    for (const auto& w : iterates(*obj, w0, exact_lars(eta), 10000))
      worst = std::max(worst, (w - *meta.w_star).norm() / bound);
  }
  return {make_certificate("bounded_iterates", {{"eta", eta}, {"radius", R}, {"starts", 50}, {"steps", 10000}},
                           Comparator::LE, 1.0, worst)};
}

std::vector<Certificate> check_robbins_monro(const CheckContext&) {
  const Schedule s = Schedule::inverse_k(1.0);
  double sum = 0.0, sum_sq = 0.0;
  for (std::uint64_t k = 0; k < 1000000; ++k) {
    const double e = rate(s, k);
    sum += e;
    sum_sq += e * e;
  }
  const bool classified = robbins_monro_class(s) == RobbinsMonro::SATISFIES;
  return {make_certificate("inverse_k_sum_grows", {{"terms", 1e6}}, Comparator::GE, 13.0, sum),
          make_certificate("inverse_k_square_sum_bounded", {{"terms", 1e6}}, Comparator::LE,
                           std::acos(-1.0) * std::acos(-1.0) / 6.0, sum_sq),
          make_certificate("inverse_k_classified", {}, Comparator::EQ_WITHIN, 1.0, classified ? 1.0 : 0.0)};
}

std::vector<Certificate> check_benchmarks(const CheckContext& ctx) {
  std::vector<Certificate> out;
  for (const char* name : {"svm-desk", "logistic-desk"}) {
    ExperimentSpec spec = parse_experiment(find_preset(name).spec);
    spec.output_dir = (std::filesystem::path(ctx.output_dir) / "benchmarks" / name).string();
    const ComparisonReport r = run_experiment(spec, ctx.jobs);
    for (Certificate c : r.certificates) {
      c.name = std::string(name) + ":" + c.name;
      out.push_back(std::move(c));
    }
  }
  return out;
}

}  // namespace

const std::vector<CertificateCheck>& certificate_checks() {
  static const std::vector<CertificateCheck> checks = {
      {"absorption", "1D quadratic: entry into [a(1-eta), a(1+eta)] by the hitting time, then no exits",
       check_absorption},
      {"amplitude", "1D quadratic: limiting oscillation amplitude equals eta*a and grows with eta", check_amplitude},
      {"attractive_origin", "1D quadratic from w0 < 0: iterates are (1-eta)^k w0 and never change sign",
       check_attractive_origin},
      {"convex_equivalence", "1D: quadratic and quartic produce identical proportional-update trajectories",
       check_convex_equivalence},
      {"scale_invariance", "scaling the gradient by 1e3 leaves proportional steps unchanged", check_scale_invariance},
      {"theorem2", "fixed rate: min-so-far gap below C1/(k eta) + eta^2 C2 at every k", check_theorem2},
      {"theorem3", "1/k rate: min-so-far gap below the decaying-rate bound and under 1e-3", check_theorem3},
      {"corollary", "steps to eps with eta*(eps) grow at most like eps^-1.5", check_corollary},
      {"cos_alpha", "cos(angle between w - w* and gradient) >= m/L; probes on convex objectives", check_cos_alpha},
      {"lemma1", "escaping set: exact 1D interval and bounded radius on a diagonal quadratic", check_lemma1},
      {"theorem1", "fixed-rate iterates stay within the constructive distance bound", check_theorem1},
      {"robbins_monro", "1/k rates: partial sums diverge, squared sums stay bounded", check_robbins_monro},
      {"benchmarks", "svm-desk and logistic-desk: same optimum, decay removes tail oscillation", check_benchmarks},
  };
  return checks;
}

const CertificateCheck& find_check(const std::string& name) {
  for (const auto& c : certificate_checks())
    if (c.name == name) return c;
  throw ConfigError("unknown certificate check '" + name + "'");
}

bool CheckOutcome::passed() const {
  return !certificates.empty() &&
         std::all_of(certificates.begin(), certificates.end(), [](const Certificate& c) { return c.passed; });
}

bool SuiteReport::all_passed() const {
  return !checks.empty() && std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed(); });
}

std::vector<Certificate> SuiteReport::certificates() const {
  std::vector<Certificate> all;
  for (const auto& c : checks) all.insert(all.end(), c.certificates.begin(), c.certificates.end());
  return all;
}

CheckOutcome run_check(const CertificateCheck& check, const CheckContext& ctx) {
  const auto t0 = std::chrono::steady_clock::now();
  CheckOutcome out{check.name, check.run(ctx), 0.0};
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

SuiteReport run_certificate_suite(const CheckContext& ctx, const std::vector<std::string>& only) {
  const auto t0 = std::chrono::steady_clock::now();
  SuiteReport report;
  for (const auto& check : certificate_checks()) {
    if (!only.empty() && std::find(only.begin(), only.end(), check.name) == only.end()) continue;
    report.checks.push_back(run_check(check, ctx));
  }
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::filesystem::create_directories(ctx.output_dir);
  write_certificate_report((std::filesystem::path(ctx.output_dir) / "certificates.json").string(),
                           report.certificates());
  return report;
}

}  // namespace propopt
