#pragma once

#include <cstdint>
#include <string>

namespace propopt {

enum class ScheduleKind { FIXED, INVERSE_K, LINEAR_TO_ZERO };

/// Learning-rate schedule. Value type; rates are strictly positive on the valid range.
struct Schedule {
  ScheduleKind kind = ScheduleKind::FIXED;
  double eta0 = 0.1;
  std::uint64_t horizon = 0;  // LINEAR_TO_ZERO only
  std::uint64_t offset = 1;   // INVERSE_K only

  static Schedule fixed(double eta0) { return {ScheduleKind::FIXED, eta0, 0, 1}; }
  static Schedule inverse_k(double eta0, std::uint64_t offset = 1) {
    return {ScheduleKind::INVERSE_K, eta0, 0, offset};
  }
  static Schedule linear_to_zero(double eta0, std::uint64_t horizon) {
    return {ScheduleKind::LINEAR_TO_ZERO, eta0, horizon, 1};
  }

  /// Throws ConfigError when the parameters cannot produce positive rates.
  void validate() const;
};

/// Lower bound on LINEAR_TO_ZERO rates, relative to eta0.
inline constexpr double kLinearFloor = 1e-6;

/// Rate at step k. LINEAR_TO_ZERO throws DomainError for k >= horizon.
double rate(const Schedule& s, std::uint64_t k);

enum class RobbinsMonro { SATISFIES, VIOLATES_SUM_INF, VIOLATES_SUM_SQ, NOT_APPLICABLE };

/// Whether the schedule family meets sum(eta) = inf and sum(eta^2) < inf.
RobbinsMonro robbins_monro_class(const Schedule& s);

std::string to_string(ScheduleKind k);
std::string to_string(RobbinsMonro c);
ScheduleKind schedule_kind_from_string(const std::string& s);

}  // namespace propopt
