#pragma once

#include "propopt/core.hpp"
#include "propopt/objectives.hpp"

#include "json.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace propopt {

// ---------------------------------------------------------------------------
// Certificates

enum class Comparator { LE, GE, IN_INTERVAL, EQ_WITHIN };

std::string to_string(Comparator c);
Comparator comparator_from_string(const std::string& s);

/// A checkable inequality instance. Tolerances are relative to the bound:
///   LE          observed <= bound_value * (1 + tol)           (slack tol*|bound_value|)
///   GE          observed >= bound_value - tol*|bound_value|
///   IN_INTERVAL bound_lower - tol*|bound_lower| <= observed <= bound_value + tol*|bound_value|
///   EQ_WITHIN   |observed - bound_value| <= tol * max(|observed|, |bound_value|)
struct Certificate {
  std::string name;
  std::vector<std::pair<std::string, double>> inputs;
  double bound_value = 0.0;
  std::optional<double> bound_lower;
  double observed_value = 0.0;
  Comparator comparator = Comparator::LE;
  double tolerance = 0.0;
  bool passed = false;
  bool empirical = false;  // constants measured from a trajectory rather than known a priori

  /// The comparator relation recomputed from the stored fields.
  bool holds() const;
};

Certificate make_certificate(std::string name, std::vector<std::pair<std::string, double>> inputs,
                             Comparator cmp, double bound, double observed, double tolerance = 0.0,
                             std::optional<double> bound_lower = std::nullopt);

nlohmann::json to_json(const Certificate& c);
Certificate certificate_from_json(const nlohmann::json& j);
nlohmann::json to_json(const std::vector<Certificate>& certs);
void write_certificate_report(const std::string& path, const std::vector<Certificate>& certs);

// ---------------------------------------------------------------------------
// One-dimensional quadratic f(w) = (w - a)^2 / 2 under fixed-rate proportional updates.

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double x) const { return lo <= x && x <= hi; }
  double width() const { return hi - lo; }
};

/// [a(1 - eta), a(1 + eta)]: once an iterate lands here it never leaves.
Interval absorbing_interval(double a, double eta);

/// Number of steps from w0 > 0 until the iterate first lies in the absorbing interval.
std::uint64_t hitting_time(double a, double w0, double eta);

/// Largest fixed rate whose limiting oscillation stays within eps of the optimum a.
double epsilon_lr_bound(double a, double eps_target);

/// Iterate after k steps when w0 < 0 < a: (1 - eta)^k * w0.
double fixed_point_decay(double w0, double eta, std::uint64_t k);

/// Open interval (2a/(2+eta), 2a/(2-eta)); minus {a} it is exactly the set of points whose
/// next step moves farther from a.
Interval lemma1_interval_quadratic_1d(double a, double eta);

// ---------------------------------------------------------------------------
// General strongly convex objectives

/// True iff one proportional step from w ends strictly farther from w* than w is.
/// Throws DomainError at w = w* or where the gradient vanishes.
bool lemma1_set_member(const ParamVector& w, const Objective& obj, double eta);

/// Cosine of the angle between w - w* and grad f(w).
double cos_alpha(const ParamVector& w, const Objective& obj);

/// m / L: the rate threshold below which the escaping set is bounded.
double eta_small_enough(double m, double L);

/// Radius R with |w| <= R for every member of the escaping set, from cos(alpha) >= m/L.
/// Needs kappa = 2m/(eta L) > 1; throws DomainError otherwise.
double lemma1_radius(double m, double L, double eta, double w_star_norm);

/// Distance bound for every iterate of a fixed-rate run:
/// max(|w0 - w*|, (1 + eta)(R + |w*|)).
double theorem1_distance_bound(double lemma_radius, double eta, double w_star_norm,
                               double initial_distance);

/// Constants used by the rate bounds. M3 = |w*| + M1 holds by construction.
class BoundConstants {
 public:
  BoundConstants(double M1, double M2, double L, double m, double w_star_norm, double initial_distance);

  /// Measured on a realized trajectory: M1 = sup |w_k - w*|, M2 = min |w_k|.
  static BoundConstants measured(std::span<const ParamVector> iterates, const Objective& obj);

  double M1() const { return M1_; }
  double M2() const { return M2_; }
  double M3() const { return M3_; }
  double L() const { return L_; }
  double m() const { return m_; }
  double w_star_norm() const { return w_star_norm_; }
  double initial_distance() const { return initial_distance_; }

 private:
  double M1_, M2_, M3_, L_, m_, w_star_norm_, initial_distance_;
};

struct Theorem2Bound {
  double C1 = 0.0;
  double C2 = 0.0;
  double value = 0.0;
};

/// C1/(k eta) + eta^2 C2 with C1 = L M1 / (2 M2) |w0 - w*|^2 and C2 = L (|w*| + M1)^2 / 2.
Theorem2Bound theorem2_bound(std::uint64_t k, double eta, const BoundConstants& c);

struct CorollaryRate {
  double eta = 0.0;
  std::optional<double> k_bound;     // 3 sqrt(3 C2) C1 / (2 eps^1.5)
  std::optional<bool> admissible;    // eta <= m / L, when m > 0 is known
};

/// eta* = sqrt(eps / (3 C2)).
CorollaryRate corollary_eta_star(double eps, double C2);
CorollaryRate corollary_eta_star(double eps, const BoundConstants& c);

/// (M1^2 + M3^2 sum eta_i^2) / (2 (M2 / (M1 L)) sum eta_i).
double theorem3_bound(std::span<const double> etas, const BoundConstants& c);

/// Running form: element k is the bound over etas[0..k].
std::vector<double> theorem3_bound_prefix(std::span<const double> etas, const BoundConstants& c);

struct ConjectureProbe {
  double min_cos = 1.0;
  ParamVector argmin_w;
  std::uint64_t evaluated = 0;
};

/// Smallest cos_alpha over n uniform samples in the ball of `radius` around w*.
/// Empirical evidence only.
ConjectureProbe conjecture1_probe(const Objective& obj, std::uint64_t n_samples, double radius,
                                  std::uint64_t seed);

}  // namespace propopt
