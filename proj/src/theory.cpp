#include "propopt/theory.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace propopt {

std::string to_string(Comparator c) {
  switch (c) {
    case Comparator::LE: return "LE";
    case Comparator::GE: return "GE";
    case Comparator::IN_INTERVAL: return "IN_INTERVAL";
    case Comparator::EQ_WITHIN: return "EQ_WITHIN";
  }
  return "?";
}

Comparator comparator_from_string(const std::string& s) {
  if (s == "LE") return Comparator::LE;
  if (s == "GE") return Comparator::GE;
  if (s == "IN_INTERVAL") return Comparator::IN_INTERVAL;
  if (s == "EQ_WITHIN") return Comparator::EQ_WITHIN;
  throw ConfigError("unknown comparator '" + s + "'");
}

bool Certificate::holds() const {
  if (!std::isfinite(observed_value) || !std::isfinite(bound_value)) return false;
  const double slack = tolerance * std::abs(bound_value);
  switch (comparator) {
    case Comparator::LE:
      return observed_value <= bound_value + slack;
    case Comparator::GE:
      return observed_value >= bound_value - slack;
    case Comparator::IN_INTERVAL: {
      if (!bound_lower || !std::isfinite(*bound_lower)) return false;
      const double lo_slack = tolerance * std::abs(*bound_lower);
      return observed_value >= *bound_lower - lo_slack && observed_value <= bound_value + slack;
    }
    case Comparator::EQ_WITHIN:
      return std::abs(observed_value - bound_value) <=
             tolerance * std::max(std::abs(observed_value), std::abs(bound_value));
  }
  return false;
}

Certificate make_certificate(std::string name, std::vector<std::pair<std::string, double>> inputs,
                             Comparator cmp, double bound, double observed, double tolerance,
                             std::optional<double> bound_lower) {
  if (cmp == Comparator::IN_INTERVAL && !bound_lower)
    throw ConfigError("IN_INTERVAL certificate needs a lower bound");
  Certificate c;
  c.name = std::move(name);
  c.inputs = std::move(inputs);
  c.comparator = cmp;
  c.bound_value = bound;
  c.bound_lower = bound_lower;
  c.observed_value = observed;
  c.tolerance = tolerance;
  c.passed = c.holds();
  return c;
}

namespace {
// JSON has no NaN/Inf; those become null and read back as NaN.
nlohmann::json number(double x) {
  if (!std::isfinite(x)) return nullptr;
  return x;
}
double read_number(const nlohmann::json& j) {
  return j.is_null() ? std::nan("") : j.get<double>();
}
}  // namespace

nlohmann::json to_json(const Certificate& c) {
  nlohmann::json inputs = nlohmann::json::object();
  for (const auto& [k, v] : c.inputs) inputs[k] = number(v);
  nlohmann::json j = {
      {"name", c.name},
      {"inputs", inputs},
      {"bound_value", number(c.bound_value)},
      {"observed_value", number(c.observed_value)},
      {"comparator", to_string(c.comparator)},
      {"tolerance", c.tolerance},
      {"passed", c.passed},
  };
  if (c.bound_lower) j["bound_lower"] = number(*c.bound_lower);
  if (c.empirical) j["empirical"] = true;
  return j;
}

Certificate certificate_from_json(const nlohmann::json& j) {
  Certificate c;
  c.name = j.at("name").get<std::string>();
  for (const auto& [k, v] : j.at("inputs").items()) c.inputs.emplace_back(k, read_number(v));
  c.bound_value = read_number(j.at("bound_value"));
  c.observed_value = read_number(j.at("observed_value"));
  c.comparator = comparator_from_string(j.at("comparator").get<std::string>());
  c.tolerance = j.at("tolerance").get<double>();
  c.passed = j.at("passed").get<bool>();
  if (j.contains("bound_lower")) c.bound_lower = read_number(j.at("bound_lower"));
  c.empirical = j.value("empirical", false);
  return c;
}

nlohmann::json to_json(const std::vector<Certificate>& certs) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& c : certs) arr.push_back(to_json(c));
  return arr;
}

void write_certificate_report(const std::string& path, const std::vector<Certificate>& certs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write certificate report: " + path);
  out << to_json(certs).dump(2) << '\n';
  if (!out) throw std::runtime_error("failed writing certificate report: " + path);
}

// ---------------------------------------------------------------------------

namespace {
void require_rate(double eta) {
  if (!(eta > 0.0 && eta < 1.0)) throw DomainError("learning rate must lie in (0, 1)");
}
}  // namespace

Interval absorbing_interval(double a, double eta) {
  if (!(a > 0.0)) throw DomainError("absorbing_interval: a must be positive");
  require_rate(eta);
  return {a * (1.0 - eta), a * (1.0 + eta)};
}

std::uint64_t hitting_time(double a, double w0, double eta) {
  if (!(w0 > 0.0)) throw DomainError("hitting_time: w0 must be positive");
  const Interval in = absorbing_interval(a, eta);
  if (in.contains(w0)) return 0;
  // Below: w_k = (1+eta)^k w0 grows until it reaches a(1-eta).
  // Above: w_k = (1-eta)^k w0 shrinks until it reaches a(1+eta).
  const double k = w0 < in.lo ? std::log(in.lo / w0) / std::log1p(eta)
                              : std::log(in.hi / w0) / std::log1p(-eta);
  return static_cast<std::uint64_t>(std::ceil(k));
}

double epsilon_lr_bound(double a, double eps_target) {
  if (!(a > 0.0) || !(eps_target > 0.0)) throw DomainError("epsilon_lr_bound: a and eps must be positive");
  return eps_target / a;
}

double fixed_point_decay(double w0, double eta, std::uint64_t k) {
  if (!(w0 < 0.0)) throw DomainError("fixed_point_decay: w0 must be negative");
  require_rate(eta);
  return std::pow(1.0 - eta, static_cast<double>(k)) * w0;
}

Interval lemma1_interval_quadratic_1d(double a, double eta) {
  if (!(a > 0.0)) throw DomainError("lemma1_interval_quadratic_1d: a must be positive");
  if (!(eta > 0.0 && eta < 2.0)) throw DomainError("lemma1_interval_quadratic_1d: eta must lie in (0, 2)");
  return {2.0 * a / (2.0 + eta), 2.0 * a / (2.0 - eta)};
}

namespace {
const ParamVector& require_w_star(const Objective& obj, const char* who) {
  const auto& ws = obj.metadata().w_star;
  if (!ws) throw DomainError(std::string(who) + ": objective has no known optimum");
  return *ws;
}
}  // namespace

bool lemma1_set_member(const ParamVector& w, const Objective& obj, double eta) {
  const ParamVector& w_star = require_w_star(obj, "lemma1_set_member");
  if (!(eta > 0.0)) throw DomainError("lemma1_set_member: eta must be positive");
  const ParamVector g = obj.gradient(w);
  const double gn = g.norm();
  if (gn == 0.0 || w == w_star) throw DomainError("lemma1_set_member: undefined at a stationary point");
  const ParamVector next = w - (eta * w.norm() / gn) * g;
  return (next - w_star).norm() > (w - w_star).norm();
}

double cos_alpha(const ParamVector& w, const Objective& obj) {
  const ParamVector& w_star = require_w_star(obj, "cos_alpha");
  const ParamVector d = w - w_star;
  const ParamVector g = obj.gradient(w);
  const double dn = d.norm();
  const double gn = g.norm();
  if (dn == 0.0 || gn == 0.0) throw DomainError("cos_alpha: undefined at a stationary point");
  return std::clamp(d.dot(g) / (dn * gn), -1.0, 1.0);
}

double eta_small_enough(double m, double L) {
  if (!(m > 0.0)) throw DomainError("eta_small_enough: needs strong convexity (m > 0)");
  if (!(L >= m)) throw DomainError("eta_small_enough: needs L >= m");
  return m / L;
}

double lemma1_radius(double m, double L, double eta, double w_star_norm) {
  if (!(m > 0.0) || !(L >= m) || !(eta > 0.0)) throw DomainError("lemma1_radius: invalid constants");
  const double kappa = 2.0 * m / (eta * L);
  if (!(kappa > 1.0)) throw DomainError("lemma1_radius: eta must be below 2m/L");
  return w_star_norm * kappa / (kappa - 1.0);
}

double theorem1_distance_bound(double lemma_radius, double eta, double w_star_norm,
                               double initial_distance) {
  return std::max(initial_distance, (1.0 + eta) * (lemma_radius + w_star_norm));
}

BoundConstants::BoundConstants(double M1, double M2, double L, double m, double w_star_norm,
                               double initial_distance)
    : M1_(M1), M2_(M2), M3_(w_star_norm + M1), L_(L), m_(m), w_star_norm_(w_star_norm),
      initial_distance_(initial_distance) {
  if (!(M1 > 0.0) || !(M2 > 0.0) || !(L > 0.0) || !(m >= 0.0) || !(w_star_norm >= 0.0) ||
      !(initial_distance >= 0.0))
    throw DomainError("BoundConstants: M1, M2, L must be positive; m, |w*|, |w0 - w*| nonnegative");
}

BoundConstants BoundConstants::measured(std::span<const ParamVector> iterates, const Objective& obj) {
  const ParamVector& w_star = require_w_star(obj, "BoundConstants::measured");
  const auto& meta = obj.metadata();
  if (!meta.L) throw DomainError("BoundConstants::measured: objective has no Lipschitz constant");
  if (iterates.empty()) throw DomainError("BoundConstants::measured: empty trajectory");
  double sup_dist = 0.0;
  double min_norm = iterates.front().norm();
  for (const auto& w : iterates) {
    sup_dist = std::max(sup_dist, (w - w_star).norm());
    min_norm = std::min(min_norm, w.norm());
  }
  return BoundConstants(sup_dist, min_norm, *meta.L, meta.m.value_or(0.0), w_star.norm(),
                        (iterates.front() - w_star).norm());
}

Theorem2Bound theorem2_bound(std::uint64_t k, double eta, const BoundConstants& c) {
  if (k == 0 || !(eta > 0.0)) throw DomainError("theorem2_bound: k and eta must be positive");
  Theorem2Bound b;
  b.C1 = c.L() * c.M1() / (2.0 * c.M2()) * c.initial_distance() * c.initial_distance();
  b.C2 = c.L() * c.M3() * c.M3() / 2.0;
  b.value = b.C1 / (static_cast<double>(k) * eta) + eta * eta * b.C2;
  return b;
}

CorollaryRate corollary_eta_star(double eps, double C2) {
  if (!(eps > 0.0) || !(C2 > 0.0)) throw DomainError("corollary_eta_star: eps and C2 must be positive");
  return {std::sqrt(eps / (3.0 * C2)), std::nullopt, std::nullopt};
}

CorollaryRate corollary_eta_star(double eps, const BoundConstants& c) {
  const Theorem2Bound t = theorem2_bound(1, 1.0, c);
  CorollaryRate r = corollary_eta_star(eps, t.C2);
  r.k_bound = 3.0 * std::sqrt(3.0 * t.C2) * t.C1 / (2.0 * eps * std::sqrt(eps));
  if (c.m() > 0.0) r.admissible = r.eta <= eta_small_enough(c.m(), c.L());
  return r;
}

double theorem3_bound(std::span<const double> etas, const BoundConstants& c) {
  if (etas.empty()) throw DomainError("theorem3_bound: empty rate sequence");
  return theorem3_bound_prefix(etas, c).back();
}

std::vector<double> theorem3_bound_prefix(std::span<const double> etas, const BoundConstants& c) {
  std::vector<double> out;
  out.reserve(etas.size());
  double sum = 0.0;
  double sum_sq = 0.0;
  const double scale = 2.0 * c.M2() / (c.M1() * c.L());
  for (double eta : etas) {
    if (!(eta > 0.0)) throw DomainError("theorem3_bound: rates must be positive");
    sum += eta;
    sum_sq += eta * eta;
    out.push_back((c.M1() * c.M1() + c.M3() * c.M3() * sum_sq) / (scale * sum));
  }
  return out;
}

ConjectureProbe conjecture1_probe(const Objective& obj, std::uint64_t n_samples, double radius,
                                  std::uint64_t seed) {
  const ParamVector& w_star = require_w_star(obj, "conjecture1_probe");
  if (!(radius > 0.0)) throw DomainError("conjecture1_probe: radius must be positive");
  Rng rng(seed);
  const Index dim = obj.dim();
  ConjectureProbe probe;
  probe.argmin_w = w_star;
  ParamVector dir(dim);
  for (std::uint64_t i = 0; i < n_samples; ++i) {
    for (Index j = 0; j < dim; ++j) dir[j] = rng.normal();
    const double dn = dir.norm();
    const double r = radius * std::pow(rng.uniform(), 1.0 / static_cast<double>(dim));
    if (dn == 0.0 || r == 0.0) continue;
    const ParamVector w = w_star + (r / dn) * dir;
    if (w == w_star || obj.gradient(w).isZero(0.0)) continue;
    const double c = cos_alpha(w, obj);
    ++probe.evaluated;
    if (c < probe.min_cos) {
      probe.min_cos = c;
      probe.argmin_w = w;
    }
  }
  return probe;
}

}  // namespace propopt
