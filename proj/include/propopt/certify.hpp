#pragma once

#include "propopt/theory.hpp"

#include <functional>
#include <string>
#include <vector>

namespace propopt {

struct CheckContext {
  std::string output_dir = "out/certify";  // benchmark checks write their runs below this
  unsigned jobs = 1;
  std::uint64_t seed = 20180529;
};

/// A named group of certificates evaluated on built-in problems.
struct CertificateCheck {
  std::string name;
  std::string description;
  std::function<std::vector<Certificate>(const CheckContext&)> run;
};

/// Every check, in report order.
const std::vector<CertificateCheck>& certificate_checks();
const CertificateCheck& find_check(const std::string& name);

struct CheckOutcome {
  std::string name;
  std::vector<Certificate> certificates;
  double seconds = 0.0;
  bool passed() const;
};

struct SuiteReport {
  std::vector<CheckOutcome> checks;
  double seconds = 0.0;
  bool all_passed() const;
  std::vector<Certificate> certificates() const;
};

CheckOutcome run_check(const CertificateCheck& check, const CheckContext& ctx);

/// Runs all checks (or the named subset) and writes <output_dir>/certificates.json.
SuiteReport run_certificate_suite(const CheckContext& ctx, const std::vector<std::string>& only = {});

}  // namespace propopt
