#include "cli.hpp"

#include "propopt/certify.hpp"
#include "propopt/harness.hpp"

#include "CLI11.hpp"

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

namespace propopt::cli {

namespace {

using nlohmann::json;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CommonOptions {
  std::string spec_path;
  std::string preset;
  std::string out_dir;
  std::vector<std::string> overrides;
  unsigned jobs = 1;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* sub, CommonOptions& o, bool spec) {
  if (spec) {
    auto* s = sub->add_option("--spec", o.spec_path, "Experiment spec (JSON file)");
    auto* p = sub->add_option("--preset", o.preset, "Built-in experiment (see the list below)");
    s->excludes(p);
    sub->add_option("--set", o.overrides, "Override an existing spec key, e.g. --set max_steps=500")
        ->type_name("KEY=VALUE")
        ->allow_extra_args(false);
  }
  sub->add_option("--out", o.out_dir, "Output directory");
  sub->add_option("--jobs", o.jobs, "Worker threads")->check(CLI::PositiveNumber);
  sub->add_option("--seed", o.seed, "Root seed for all randomness");
}

std::string env_out() {
  const char* v = std::getenv("PROPOPT_OUT");
  return v && *v ? v : "";
}

std::string resolve_out(const CommonOptions& o, const std::string& name, const std::string& fallback) {
  if (!o.out_dir.empty()) return o.out_dir;
  if (const auto e = env_out(); !e.empty()) return (std::filesystem::path(e) / name).string();
  return fallback;
}

json load_spec_document(const CommonOptions& o) {
  if (o.spec_path.empty() == o.preset.empty()) throw UsageError("give exactly one of --spec or --preset");
  json doc;
  if (!o.preset.empty()) {
    doc = find_preset(o.preset).spec;
  } else {
    std::ifstream in(o.spec_path);
    if (!in) throw UsageError("cannot open spec file: " + o.spec_path);
    doc = json::parse(in, nullptr, false);
    if (doc.is_discarded()) throw UsageError("spec file is not valid JSON: " + o.spec_path);
  }
  for (const auto& kv : o.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) throw UsageError("--set expects KEY=VALUE, got '" + kv + "'");
    apply_override(doc, kv.substr(0, eq), kv.substr(eq + 1));
  }
  return doc;
}

ExperimentSpec load_spec(const CommonOptions& o) {
  ExperimentSpec spec = parse_experiment(load_spec_document(o));
  if (o.seed) spec.seed = *o.seed;
  spec.output_dir = resolve_out(o, spec.name, spec.output_dir);
  return spec;
}

double parse_number(const std::string& key, const std::string& text) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) throw UsageError(key + ": not a number: '" + text + "'");
  return v;
}

/// Parses KEY=VALUE tokens into numbers; `required` keys must appear, others must be in `optional`.
std::map<std::string, double> parse_kv(const std::string& what, const std::vector<std::string>& tokens,
                                       const std::set<std::string>& required, const std::set<std::string>& optional) {
  std::map<std::string, double> out;
  for (const auto& t : tokens) {
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw UsageError(what + ": expected KEY=VALUE, got '" + t + "'");
    const std::string key = t.substr(0, eq);
    if (!required.count(key) && !optional.count(key)) throw UsageError(what + ": unknown key '" + key + "'");
    out[key] = parse_number(key, t.substr(eq + 1));
  }
  for (const auto& k : required)
    if (!out.count(k)) throw UsageError(what + ": missing " + k + "=VALUE");
  return out;
}

std::string interval_text(const Interval& i) { return "[" + format_double(i.lo) + "," + format_double(i.hi) + "]"; }

// Lines of "key value"; mirrored into a JSON object for --json.
struct Printer {
  std::ostream& out;
  bool as_json;
  json doc = json::object();

  void put(const std::string& key, const json& value, const std::string& text) {
    if (as_json) doc[key] = value;
    else out << key << ' ' << text << '\n';
  }
  void put(const std::string& key, double v) { put(key, v, format_double(v)); }
  void finish() {
    if (as_json) out << doc.dump() << '\n';
  }
};

std::string summary_line(const OptimizerSummary& s) {
  auto opt = [](const auto& v) { return v ? format_double(static_cast<double>(*v)) : std::string("-"); };
  return s.label + " steps=" + std::to_string(s.steps) + " epochs=" + format_double(s.epochs) +
         " final_loss=" + format_double(s.final_loss) + " min_loss=" + format_double(s.min_loss) +
         " final_gap=" + opt(s.final_gap) + " tail_std=" + format_double(s.tail_loss_std) +
         " amplitude=" + format_double(s.oscillation_amplitude) + " entry_step=" + opt(s.entry_step);
}

std::string certificate_line(const Certificate& c) {
  return std::string(c.passed ? "PASS " : "FAIL ") + c.name + " observed=" + format_double(c.observed_value) +
         " " + to_string(c.comparator) + " bound=" + format_double(c.bound_value) +
         (c.tolerance > 0.0 ? " tol=" + format_double(c.tolerance) : "") + (c.empirical ? " (empirical)" : "");
}

void print_report(std::ostream& out, const ComparisonReport& r) {
  out << "experiment " << r.name << " -> " << r.output_dir << '\n';
  for (const auto& s : r.optimizers) out << "  " << summary_line(s) << '\n';
  for (const auto& c : r.certificates) out << "  " << certificate_line(c) << '\n';
  out << "summary " << r.summary_file << '\n';
}

std::vector<double> parse_values(const std::string& list) {
  std::vector<double> v;
  std::size_t start = 0;
  while (start <= list.size()) {
    const auto comma = list.find(',', start);
    const std::string item = list.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    if (!item.empty()) v.push_back(parse_number("--values", item));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return v;
}

void error_json(std::ostream& err, const std::string& kind, const std::string& message,
                const std::vector<std::string>& violations = {}) {
  json j = {{"error", kind}, {"message", message}};
  if (!violations.empty()) j["violations"] = violations;
  err << j.dump() << '\n';
}

std::string footer() {
  std::string s = "\nPresets:\n";
  for (const auto& p : presets()) s += "  " + p.name + "  " + p.description + "\n";
  s += "\nCertificate checks (certify --only NAME):\n";
  for (const auto& c : certificate_checks()) s += "  " + c.name + "  " + c.description + "\n";
  s += "\nExit codes: 0 success, 1 failed certificates or runtime error, 2 usage error.\n"
       "PROPOPT_OUT sets the base output directory when --out is not given.";
  return s;
}

}  // namespace

int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Proportional-update gradient descent: experiments, certificates and closed-form predictions",
               "propopt"};
  app.require_subcommand(1);
  app.footer(footer());

  CommonOptions run_opts, sweep_opts, cert_opts;
  bool plot = false;
  auto* run_cmd = app.add_subcommand("run", "Run an experiment and write trajectories and summary.json");
  add_common(run_cmd, run_opts, true);
  run_cmd->add_flag("--plot", plot, "Also write plot data files into <out>/plot");

  std::string param, values;
  auto* sweep_cmd = app.add_subcommand("sweep", "Run an experiment once per parameter value and tabulate");
  add_common(sweep_cmd, sweep_opts, true);
  sweep_cmd->add_option("--param", param, "eta, w0 or seed (defaults to the preset's sweep)");
  sweep_cmd->add_option("--values", values, "Comma-separated values");

  std::vector<std::string> only;
  bool list_checks = false;
  auto* cert_cmd = app.add_subcommand("certify", "Evaluate the certificate suite; exit 0 iff every certificate holds");
  add_common(cert_cmd, cert_opts, false);
  cert_cmd->add_option("--only", only, "Run only the named check (repeatable)");
  cert_cmd->add_flag("--list", list_checks, "List the checks and exit");

  std::vector<std::string> q1d, corollary, thm2, thm3, lemma;
  bool as_json = false;
  auto* pred_cmd = app.add_subcommand("predict", "Print closed-form predictions without simulating");
  pred_cmd->add_option("--quadratic1d", q1d, "a=A eta=ETA [w0=W0] [eps=EPS] [k=K]")->expected(1, -1);
  pred_cmd->add_option("--corollary", corollary, "eps=EPS C2=C2 [C1=C1] [m=M L=L]")->expected(1, -1);
  pred_cmd->add_option("--theorem2", thm2, "k=K eta=ETA L=L M1=M1 M2=M2 w_star=NORM dist0=DIST")->expected(1, -1);
  pred_cmd->add_option("--theorem3", thm3, "k=K eta0=ETA0 L=L M1=M1 M2=M2 w_star=NORM [offset=1]")->expected(1, -1);
  pred_cmd->add_option("--lemma1", lemma, "m=M L=L eta=ETA w_star=NORM [dist0=DIST]")->expected(1, -1);
  pred_cmd->add_flag("--json", as_json, "Print one JSON object instead of key/value lines");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    error_json(err, "usage", e.what());
    return 2;
  }

  try {
    if (run_cmd->parsed()) {
      const ExperimentSpec spec = load_spec(run_opts);
      const ComparisonReport report = run_experiment(spec, run_opts.jobs);
      print_report(out, report);
      if (plot) {
        const auto files = emit_plotdata(report, (std::filesystem::path(spec.output_dir) / "plot").string());
        out << "plot " << files.size() << " files in " << (std::filesystem::path(spec.output_dir) / "plot").string()
            << '\n';
      }
      return 0;
    }

    if (sweep_cmd->parsed()) {
      const ExperimentSpec spec = load_spec(sweep_opts);
      std::optional<SweepPlan> plan;
      if (!sweep_opts.preset.empty()) plan = find_preset(sweep_opts.preset).sweep;
      if (!param.empty() || !values.empty()) {
        if (param.empty() || values.empty()) throw UsageError("sweep needs both --param and --values");
        plan = SweepPlan{sweep_parameter_from_string(param), parse_values(values)};
      }
      if (!plan) throw UsageError("sweep needs --param and --values (this preset has no default sweep)");
      const auto reports = sweep(spec, plan->parameter, plan->values, sweep_opts.jobs);
      for (std::size_t i = 0; i < reports.size(); ++i) {
        out << to_string(plan->parameter) << '=' << format_double(plan->values[i]) << '\n';
        print_report(out, reports[i]);
      }
      out << "table " << (std::filesystem::path(spec.output_dir) / "sweep.csv").string() << '\n';
      return 0;
    }

    if (cert_cmd->parsed()) {
      if (list_checks) {
        for (const auto& c : certificate_checks()) out << c.name << "  " << c.description << '\n';
        return 0;
      }
      for (const auto& name : only) find_check(name);
      CheckContext ctx;
      ctx.output_dir = resolve_out(cert_opts, "certify", ctx.output_dir);
      ctx.jobs = cert_opts.jobs;
      if (cert_opts.seed) ctx.seed = *cert_opts.seed;
      const SuiteReport report = run_certificate_suite(ctx, only);
      std::size_t total = 0, failed = 0;
      for (const auto& check : report.checks) {
        out << "[" << check.name << "] " << format_double(check.seconds) << " s\n";
        for (const auto& c : check.certificates) {
          out << "  " << certificate_line(c) << '\n';
          ++total;
          failed += c.passed ? 0 : 1;
        }
      }
      out << (report.all_passed() ? "ALL PASSED " : "FAILED ") << (total - failed) << "/" << total
          << " certificates in " << format_double(report.seconds) << " s; report "
          << (std::filesystem::path(ctx.output_dir) / "certificates.json").string() << '\n';
      return report.all_passed() ? 0 : 1;
    }

    if (pred_cmd->parsed()) {
      if (q1d.empty() && corollary.empty() && thm2.empty() && thm3.empty() && lemma.empty())
        throw UsageError("predict needs one of --quadratic1d, --corollary, --theorem2, --theorem3, --lemma1");
      Printer p{out, as_json};
      if (!q1d.empty()) {
        const auto v = parse_kv("--quadratic1d", q1d, {"a", "eta"}, {"w0", "eps", "k"});
        const double a = v.at("a"), eta = v.at("eta");
        const Interval in = absorbing_interval(a, eta);
        p.put("absorbing_interval", json::array({in.lo, in.hi}), interval_text(in));
        p.put("oscillation_amplitude", eta * a);
        const Interval s = lemma1_interval_quadratic_1d(a, eta);
        p.put("escaping_set", json::array({s.lo, s.hi}),
              "(" + format_double(s.lo) + "," + format_double(s.hi) + ")\\{" + format_double(a) + "}");
        if (v.count("w0")) {
          const double w0 = v.at("w0");
          if (w0 > 0.0) {
            const auto h = hitting_time(a, w0, eta);
            p.put("hitting_time", h, std::to_string(h));
          } else if (w0 < 0.0) {
            const auto k = static_cast<std::uint64_t>(v.count("k") ? v.at("k") : 10.0);
            p.put("attracted_to_origin", true, "true");
            p.put("iterate_at_k", json::array({k, fixed_point_decay(w0, eta, k)}),
                  std::to_string(k) + " " + format_double(fixed_point_decay(w0, eta, k)));
          } else {
            throw UsageError("--quadratic1d: w0 = 0 is a fixed point");
          }
        }
        if (v.count("eps")) p.put("epsilon_lr_bound", epsilon_lr_bound(a, v.at("eps")));
      }
      if (!corollary.empty()) {
        const auto v = parse_kv("--corollary", corollary, {"eps", "C2"}, {"C1", "m", "L"});
        const CorollaryRate r = corollary_eta_star(v.at("eps"), v.at("C2"));
        p.put("eta_star", r.eta);
        if (v.count("C1")) {
          const double eps = v.at("eps");
          p.put("k_bound", 3.0 * std::sqrt(3.0 * v.at("C2")) * v.at("C1") / (2.0 * eps * std::sqrt(eps)));
        }
        if (v.count("m") && v.count("L")) {
          const bool ok = r.eta <= eta_small_enough(v.at("m"), v.at("L"));
          p.put("admissible", ok, ok ? "true" : "false (eta_star exceeds m/L)");
        }
      }
      if (!thm2.empty()) {
        const auto v = parse_kv("--theorem2", thm2, {"k", "eta", "L", "M1", "M2", "w_star", "dist0"}, {});
        const BoundConstants c(v.at("M1"), v.at("M2"), v.at("L"), 0.0, v.at("w_star"), v.at("dist0"));
        const auto b = theorem2_bound(static_cast<std::uint64_t>(v.at("k")), v.at("eta"), c);
        p.put("C1", b.C1);
        p.put("C2", b.C2);
        p.put("theorem2_bound", b.value);
      }
      if (!thm3.empty()) {
        const auto v = parse_kv("--theorem3", thm3, {"k", "eta0", "L", "M1", "M2", "w_star"}, {"offset"});
        const BoundConstants c(v.at("M1"), v.at("M2"), v.at("L"), 0.0, v.at("w_star"), v.at("M1"));
        const Schedule s = Schedule::inverse_k(v.at("eta0"), v.count("offset") ? static_cast<std::uint64_t>(v.at("offset")) : 1);
        s.validate();
        std::vector<double> etas;
        for (std::uint64_t i = 0; i < static_cast<std::uint64_t>(v.at("k")); ++i) etas.push_back(rate(s, i));
        p.put("theorem3_bound", theorem3_bound(etas, c));
      }
      if (!lemma.empty()) {
        const auto v = parse_kv("--lemma1", lemma, {"m", "L", "eta", "w_star"}, {"dist0"});
        const double R = lemma1_radius(v.at("m"), v.at("L"), v.at("eta"), v.at("w_star"));
        p.put("eta_small_enough", eta_small_enough(v.at("m"), v.at("L")));
        p.put("escaping_set_radius", R);
        if (v.count("dist0"))
          p.put("theorem1_distance_bound", theorem1_distance_bound(R, v.at("eta"), v.at("w_star"), v.at("dist0")));
      }
      p.finish();
      return 0;
    }
  } catch (const ValidationError& e) {
    error_json(err, "validation", e.what(), e.violations);
    return 2;
  } catch (const UsageError& e) {
    error_json(err, "usage", e.what());
    return 2;
  } catch (const ConfigError& e) {
    error_json(err, "usage", e.what());
    return 2;
  } catch (const DomainError& e) {
    error_json(err, "domain", e.what());
    return 2;
  } catch (const NumericError& e) {
    error_json(err, "numeric", e.what());
    return 1;
  } catch (const DataError& e) {
    error_json(err, "data", e.what());
    return 1;
  } catch (const std::exception& e) {
    error_json(err, "runtime", e.what());
    return 1;
  }
  error_json(err, "usage", "no command given");
  return 2;
}

}  // namespace propopt::cli
