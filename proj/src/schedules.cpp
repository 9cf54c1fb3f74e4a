#include "propopt/schedules.hpp"

#include "propopt/core.hpp"

#include <algorithm>
#include <cmath>

namespace propopt {

void Schedule::validate() const {
  if (!(eta0 > 0.0) || !std::isfinite(eta0)) throw ConfigError("schedule eta0 must be positive and finite");
  if (kind == ScheduleKind::LINEAR_TO_ZERO && horizon == 0)
    throw ConfigError("linear_to_zero schedule needs a positive horizon");
  if (kind == ScheduleKind::INVERSE_K && offset == 0)
    throw ConfigError("inverse_k schedule needs a positive offset");
}

double rate(const Schedule& s, std::uint64_t k) {
  switch (s.kind) {
    case ScheduleKind::FIXED:
      return s.eta0;
    case ScheduleKind::INVERSE_K:
      return s.eta0 / static_cast<double>(k + s.offset);
    case ScheduleKind::LINEAR_TO_ZERO: {
      if (k >= s.horizon)
        throw DomainError("step " + std::to_string(k) + " is beyond schedule horizon " +
                          std::to_string(s.horizon));
      const double frac = static_cast<double>(k) / static_cast<double>(s.horizon);
      return std::max(s.eta0 * (1.0 - frac), s.eta0 * kLinearFloor);
    }
  }
  throw ConfigError("unknown schedule kind");
}

RobbinsMonro robbins_monro_class(const Schedule& s) {
  switch (s.kind) {
    case ScheduleKind::INVERSE_K:
      return RobbinsMonro::SATISFIES;
    case ScheduleKind::FIXED:
      return RobbinsMonro::VIOLATES_SUM_SQ;
    case ScheduleKind::LINEAR_TO_ZERO:
      return RobbinsMonro::NOT_APPLICABLE;
  }
  return RobbinsMonro::NOT_APPLICABLE;
}

std::string to_string(ScheduleKind k) {
  switch (k) {
    case ScheduleKind::FIXED: return "fixed";
    case ScheduleKind::INVERSE_K: return "inverse_k";
    case ScheduleKind::LINEAR_TO_ZERO: return "linear_to_zero";
  }
  return "?";
}

std::string to_string(RobbinsMonro c) {
  switch (c) {
    case RobbinsMonro::SATISFIES: return "SATISFIES";
    case RobbinsMonro::VIOLATES_SUM_INF: return "VIOLATES_SUM_INF";
    case RobbinsMonro::VIOLATES_SUM_SQ: return "VIOLATES_SUM_SQ";
    case RobbinsMonro::NOT_APPLICABLE: return "NOT_APPLICABLE";
  }
  return "?";
}

ScheduleKind schedule_kind_from_string(const std::string& s) {
  if (s == "fixed") return ScheduleKind::FIXED;
  if (s == "inverse_k") return ScheduleKind::INVERSE_K;
  if (s == "linear_to_zero") return ScheduleKind::LINEAR_TO_ZERO;
  throw ConfigError("unknown schedule kind '" + s + "' (expected fixed, inverse_k, linear_to_zero)");
}

}  // namespace propopt
