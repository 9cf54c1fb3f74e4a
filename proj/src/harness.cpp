#include "propopt/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <numeric>
#include <regex>
#include <set>
#include <thread>

namespace fs = std::filesystem;
using nlohmann::json;

namespace propopt {

namespace {
std::string join_violations(const std::vector<std::string>& v) {
  std::string msg = "invalid experiment spec:";
  for (const auto& s : v) msg += "\n  - " + s;
  return msg;
}
}  // namespace

ValidationError::ValidationError(std::vector<std::string> v)
    : ConfigError(join_violations(v)), violations(std::move(v)) {}

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  if (ec != std::errc()) throw std::runtime_error("format_double failed");
  return std::string(buf, ptr);
}

// ---------------------------------------------------------------------------
// Spec parsing

namespace {

/// Collects violations while walking a spec document.
class Checker {
 public:
  std::vector<std::string> violations;

  void fail(const std::string& where, const std::string& what) { violations.push_back(where + ": " + what); }

  bool object(const json& j, const std::string& where) {
    if (j.is_object()) return true;
    fail(where, "expected an object");
    return false;
  }

  void only_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) return;
    for (const auto& [k, v] : j.items()) {
      bool ok = false;
      for (const char* a : allowed) ok = ok || k == a;
      if (!ok) fail(where, "unknown key '" + k + "'");
    }
  }

  template <typename T>
  std::optional<T> get(const json& j, const char* key, const std::string& where, bool required) {
    if (!j.is_object() || !j.contains(key)) {
      if (required) fail(where, std::string("missing required key '") + key + "'");
      return std::nullopt;
    }
    const json& v = j.at(key);
    try {
      if constexpr (std::is_same_v<T, double>) {
        if (!v.is_number()) throw std::invalid_argument("");
      } else if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
        if (!v.is_number_integer() && !v.is_number_unsigned()) throw std::invalid_argument("");
        if constexpr (std::is_unsigned_v<T>)
          if (v.is_number_integer() && v.get<std::int64_t>() < 0) throw std::invalid_argument("");
      } else if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw std::invalid_argument("");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw std::invalid_argument("");
      }
      return v.get<T>();
    } catch (const std::exception&) {
      fail(where + "." + key, "has the wrong type");
      return std::nullopt;
    }
  }
};

void check_dataset(Checker& c, const json& d, const std::string& where) {
  if (!c.object(d, where)) return;
  auto kind = c.get<std::string>(d, "kind", where, true);
  if (!kind) return;
  if (*kind == "separable") {
    c.only_keys(d, where, {"kind", "n", "dim", "margin"});
    auto n = c.get<std::int64_t>(d, "n", where, true);
    auto dim = c.get<std::int64_t>(d, "dim", where, true);
    auto margin = c.get<double>(d, "margin", where, true);
    if (n && (*n <= 0 || *n % 2 != 0)) c.fail(where + ".n", "must be positive and even");
    if (dim && *dim <= 0) c.fail(where + ".dim", "must be positive");
    if (margin && !(*margin > 0.0)) c.fail(where + ".margin", "must be positive");
  } else if (*kind == "blobs") {
    c.only_keys(d, where, {"kind", "n", "dim", "n_classes", "separation", "spread"});
    auto n = c.get<std::int64_t>(d, "n", where, true);
    auto dim = c.get<std::int64_t>(d, "dim", where, true);
    auto k = c.get<std::int64_t>(d, "n_classes", where, true);
    auto sep = c.get<double>(d, "separation", where, true);
    auto spread = c.get<double>(d, "spread", where, true);
    if (n && *n <= 0) c.fail(where + ".n", "must be positive");
    if (dim && *dim <= 0) c.fail(where + ".dim", "must be positive");
    if (k && *k < 2) c.fail(where + ".n_classes", "must be at least 2");
    if (sep && !(*sep >= 0.0)) c.fail(where + ".separation", "must be nonnegative");
    if (spread && !(*spread > 0.0)) c.fail(where + ".spread", "must be positive");
  } else if (*kind == "csv") {
    c.only_keys(d, where, {"kind", "path"});
    c.get<std::string>(d, "path", where, true);
  } else {
    c.fail(where + ".kind", "unknown dataset kind '" + *kind + "' (expected separable, blobs, csv)");
  }
}

void check_objective(Checker& c, const json& o, const std::string& where) {
  if (!c.object(o, where)) return;
  auto kind = c.get<std::string>(o, "kind", where, true);
  if (!kind) return;
  if (*kind == "quadratic_1d") {
    c.only_keys(o, where, {"kind", "a"});
    c.get<double>(o, "a", where, true);
  } else if (*kind == "quadratic_nd") {
    c.only_keys(o, where, {"kind", "A", "b"});
    auto A = c.get<std::vector<std::vector<double>>>(o, "A", where, true);
    auto b = c.get<std::vector<double>>(o, "b", where, true);
    if (A && b) {
      if (A->size() != b->size() || b->empty()) c.fail(where + ".A", "must be square and match b");
      for (const auto& row : *A)
        if (row.size() != b->size()) c.fail(where + ".A", "must be square and match b");
    }
  } else if (*kind == "convex_1d_power") {
    c.only_keys(o, where, {"kind", "a", "p"});
    c.get<double>(o, "a", where, true);
    auto p = c.get<int>(o, "p", where, true);
    if (p && (*p < 4 || *p % 2 != 0)) c.fail(where + ".p", "must be an even integer >= 4");
  } else if (*kind == "svm_hinge") {
    c.only_keys(o, where, {"kind", "dataset", "reg", "add_bias"});
    auto reg = c.get<double>(o, "reg", where, false);
    if (reg && !(*reg >= 0.0)) c.fail(where + ".reg", "must be nonnegative");
    c.get<bool>(o, "add_bias", where, false);
    if (!o.contains("dataset")) c.fail(where, "missing required key 'dataset'");
    else check_dataset(c, o.at("dataset"), where + ".dataset");
  } else if (*kind == "logistic_regression") {
    c.only_keys(o, where, {"kind", "dataset", "n_classes", "block_per_class", "add_bias"});
    auto k = c.get<int>(o, "n_classes", where, true);
    if (k && *k < 1) c.fail(where + ".n_classes", "must be positive");
    c.get<bool>(o, "block_per_class", where, false);
    c.get<bool>(o, "add_bias", where, false);
    if (!o.contains("dataset")) c.fail(where, "missing required key 'dataset'");
    else check_dataset(c, o.at("dataset"), where + ".dataset");
  } else {
    c.fail(where + ".kind", "unknown objective kind '" + *kind + "'");
  }
}

std::optional<LabeledOptimizer> parse_optimizer(Checker& c, const json& o, const std::string& where,
                                                std::uint64_t max_steps) {
  if (!c.object(o, where)) return std::nullopt;
  c.only_keys(o, where, {"label", "method", "schedule", "momentum", "eps", "beta", "adam_beta2"});
  const std::size_t before = c.violations.size();
  LabeledOptimizer out;
  if (auto label = c.get<std::string>(o, "label", where, true)) {
    static const std::regex safe("[A-Za-z0-9_.-]+");
    if (!std::regex_match(*label, safe))
      c.fail(where + ".label", "must match [A-Za-z0-9_.-]+ (used as a file name)");
    out.label = *label;
  }
  if (auto m = c.get<std::string>(o, "method", where, true)) {
    try {
      out.config.method = method_from_string(*m);
    } catch (const ConfigError& e) {
      c.fail(where + ".method", e.what());
    }
  }
  if (!o.contains("schedule")) {
    c.fail(where, "missing required key 'schedule'");
  } else if (const json& s = o.at("schedule"); c.object(s, where + ".schedule")) {
    const std::string sw = where + ".schedule";
    c.only_keys(s, sw, {"kind", "eta0", "horizon", "offset"});
    if (auto kind = c.get<std::string>(s, "kind", sw, true)) {
      try {
        out.config.schedule.kind = schedule_kind_from_string(*kind);
      } catch (const ConfigError& e) {
        c.fail(sw + ".kind", e.what());
      }
    }
    if (auto eta0 = c.get<double>(s, "eta0", sw, true)) out.config.schedule.eta0 = *eta0;
    out.config.schedule.horizon = c.get<std::uint64_t>(s, "horizon", sw, false).value_or(max_steps);
    out.config.schedule.offset = c.get<std::uint64_t>(s, "offset", sw, false).value_or(1);
  }
  if (auto mu = c.get<double>(o, "momentum", where, false)) out.config.momentum_coeff = *mu;
  if (auto eps = c.get<double>(o, "eps", where, false)) out.config.eps_stabilizer = *eps;
  if (auto beta = c.get<double>(o, "beta", where, false)) out.config.fallback_threshold = *beta;
  if (auto b2 = c.get<double>(o, "adam_beta2", where, false)) out.config.adam_beta2 = *b2;
  if (c.violations.size() != before) return std::nullopt;
  try {
    out.config.validate();
    if (out.config.schedule.kind == ScheduleKind::LINEAR_TO_ZERO && out.config.schedule.horizon < max_steps)
      c.fail(where + ".schedule.horizon", "must be >= max_steps");
  } catch (const ConfigError& e) {
    c.fail(where, e.what());
  }
  return out;
}

}  // namespace

ExperimentSpec parse_experiment(const json& doc) {
  Checker c;
  ExperimentSpec spec;
  if (!c.object(doc, "spec")) throw ValidationError(c.violations);
  c.only_keys(doc, "spec",
              {"name", "seed", "objective", "optimizers", "w0", "max_steps", "batch", "output_dir"});

  spec.name = c.get<std::string>(doc, "name", "spec", false).value_or("experiment");
  spec.seed = c.get<std::uint64_t>(doc, "seed", "spec", false).value_or(0);
  spec.output_dir = c.get<std::string>(doc, "output_dir", "spec", false).value_or("out/" + spec.name);
  if (auto steps = c.get<std::uint64_t>(doc, "max_steps", "spec", true)) {
    if (*steps < 1) c.fail("spec.max_steps", "must be >= 1");
    spec.max_steps = *steps;
  }

  if (!doc.contains("objective")) c.fail("spec", "missing required key 'objective'");
  else {
    check_objective(c, doc.at("objective"), "spec.objective");
    spec.objective = doc.at("objective");
  }

  if (!doc.contains("optimizers") || !doc.at("optimizers").is_array() || doc.at("optimizers").empty()) {
    c.fail("spec.optimizers", "must be a non-empty array");
  } else {
    std::set<std::string> labels;
    const auto& arr = doc.at("optimizers");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string where = "spec.optimizers[" + std::to_string(i) + "]";
      if (auto o = parse_optimizer(c, arr[i], where, spec.max_steps)) {
        if (!labels.insert(o->label).second) c.fail(where + ".label", "duplicate label '" + o->label + "'");
        spec.optimizers.push_back(std::move(*o));
      }
    }
  }

  if (doc.contains("w0")) {
    const json& w = doc.at("w0");
    if (c.object(w, "spec.w0")) {
      c.only_keys(w, "spec.w0", {"explicit", "uniform"});
      if (w.contains("explicit") == w.contains("uniform")) {
        c.fail("spec.w0", "give exactly one of 'explicit' or 'uniform'");
      } else if (w.contains("explicit")) {
        spec.w0.kind = InitSpec::Kind::EXPLICIT;
        try {
          spec.w0.values = w.at("explicit").get<std::vector<double>>();
        } catch (const std::exception&) {
          c.fail("spec.w0.explicit", "must be an array of numbers");
        }
      } else {
        const json& u = w.at("uniform");
        spec.w0.kind = InitSpec::Kind::UNIFORM;
        if (c.object(u, "spec.w0.uniform")) {
          c.only_keys(u, "spec.w0.uniform", {"lo", "hi"});
          spec.w0.lo = c.get<double>(u, "lo", "spec.w0.uniform", true).value_or(spec.w0.lo);
          spec.w0.hi = c.get<double>(u, "hi", "spec.w0.uniform", true).value_or(spec.w0.hi);
          if (!(spec.w0.lo < spec.w0.hi)) c.fail("spec.w0.uniform", "needs lo < hi");
        }
      }
    }
  }

  if (doc.contains("batch")) {
    const json& b = doc.at("batch");
    if (c.object(b, "spec.batch")) {
      c.only_keys(b, "spec.batch", {"mode", "size"});
      auto mode = c.get<std::string>(b, "mode", "spec.batch", true);
      if (mode && *mode == "full") {
        spec.batch.mode = BatchSpec::Mode::FULL;
        if (b.contains("size")) c.fail("spec.batch.size", "only valid for minibatch mode");
      } else if (mode && *mode == "minibatch") {
        spec.batch.mode = BatchSpec::Mode::MINIBATCH;
        if (auto size = c.get<std::int64_t>(b, "size", "spec.batch", true)) {
          if (*size <= 0) c.fail("spec.batch.size", "must be positive");
          spec.batch.size = *size;
        }
      } else if (mode) {
        c.fail("spec.batch.mode", "must be 'full' or 'minibatch'");
      }
    }
  }

  // Semantic checks that need the built objective.
  if (c.violations.empty()) {
    try {
      const auto obj = build_objective(spec);
      if (spec.w0.kind == InitSpec::Kind::EXPLICIT &&
          static_cast<Index>(spec.w0.values.size()) != obj->dim())
        c.fail("spec.w0.explicit", "has " + std::to_string(spec.w0.values.size()) +
                                       " entries but the objective has dimension " +
                                       std::to_string(obj->dim()));
      if (spec.batch.mode == BatchSpec::Mode::MINIBATCH) {
        const auto* fs = dynamic_cast<const FiniteSumObjective*>(obj.get());
        if (!fs) c.fail("spec.batch", "minibatch mode needs a dataset objective");
        else if (spec.batch.size > fs->n_samples())
          c.fail("spec.batch.size", "exceeds the number of samples (" + std::to_string(fs->n_samples()) + ")");
      }
    } catch (const std::exception& e) {
      c.fail("spec.objective", e.what());
    }
  }

  if (!c.violations.empty()) throw ValidationError(c.violations);
  return spec;
}

json to_json(const ExperimentSpec& spec) {
  json opts = json::array();
  for (const auto& o : spec.optimizers) {
    json s = {{"kind", to_string(o.config.schedule.kind)}, {"eta0", o.config.schedule.eta0}};
    if (o.config.schedule.kind == ScheduleKind::LINEAR_TO_ZERO) s["horizon"] = o.config.schedule.horizon;
    if (o.config.schedule.kind == ScheduleKind::INVERSE_K) s["offset"] = o.config.schedule.offset;
    json j = {{"label", o.label},
              {"method", to_string(o.config.method)},
              {"schedule", s},
              {"momentum", o.config.momentum()},
              {"eps", o.config.eps_stabilizer},
              {"beta", o.config.fallback_threshold}};
    if (o.config.method == Method::ADAM) j["adam_beta2"] = o.config.adam_beta2;
    opts.push_back(std::move(j));
  }
  json w0;
  if (spec.w0.kind == InitSpec::Kind::EXPLICIT) w0 = {{"explicit", spec.w0.values}};
  else w0 = {{"uniform", {{"lo", spec.w0.lo}, {"hi", spec.w0.hi}}}};
  json batch = {{"mode", spec.batch.mode == BatchSpec::Mode::FULL ? "full" : "minibatch"}};
  if (spec.batch.mode == BatchSpec::Mode::MINIBATCH) batch["size"] = spec.batch.size;
  return {{"name", spec.name},         {"seed", spec.seed},          {"objective", spec.objective},
          {"optimizers", opts},        {"w0", w0},                   {"max_steps", spec.max_steps},
          {"batch", batch},            {"output_dir", spec.output_dir}};
}

void apply_override(json& doc, const std::string& path, const std::string& value) {
  if (path.empty()) throw ConfigError("override has an empty key");
  json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = path.find('.', start);
    const std::string part = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (node->is_object()) {
      if (!node->contains(part)) throw ConfigError("override key '" + path + "' does not exist in the spec");
      node = &(*node)[part];
    } else if (node->is_array()) {
      std::size_t idx = 0;
      auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), idx);
      if (ec != std::errc() || ptr != part.data() + part.size() || idx >= node->size())
        throw ConfigError("override key '" + path + "' does not exist in the spec");
      node = &(*node)[idx];
    } else {
      throw ConfigError("override key '" + path + "' does not exist in the spec");
    }
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  json parsed = json::parse(value, nullptr, false);
  *node = parsed.is_discarded() ? json(value) : parsed;
}

// ---------------------------------------------------------------------------

namespace {
Dataset build_dataset(const json& d, std::uint64_t seed) {
  const std::string kind = d.at("kind").get<std::string>();
  if (kind == "separable")
    return make_separable_dataset(d.at("n").get<Index>(), d.at("dim").get<Index>(), d.at("margin").get<double>(),
                                  seed);
  if (kind == "blobs")
    return make_blob_dataset(d.at("n").get<Index>(), d.at("dim").get<Index>(), d.at("n_classes").get<int>(),
                             d.at("separation").get<double>(), d.at("spread").get<double>(), seed);
  return load_csv_dataset(d.at("path").get<std::string>());
}
}  // namespace

std::shared_ptr<const Objective> build_objective(const ExperimentSpec& spec) {
  const json& o = spec.objective;
  const std::string kind = o.at("kind").get<std::string>();
  if (kind == "quadratic_1d") return quadratic_1d(o.at("a").get<double>());
  if (kind == "convex_1d_power") return convex_1d_power(o.at("a").get<double>(), o.at("p").get<int>());
  if (kind == "quadratic_nd") {
    const auto rows = o.at("A").get<std::vector<std::vector<double>>>();
    const auto b = o.at("b").get<std::vector<double>>();
    Eigen::MatrixXd A(static_cast<Index>(rows.size()), static_cast<Index>(b.size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (std::size_t j = 0; j < rows[i].size(); ++j) A(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
    return quadratic_nd(A, Eigen::Map<const ParamVector>(b.data(), static_cast<Index>(b.size())));
  }
  const std::uint64_t seed = stream_seed(spec, SeedStream::DATASET);
  Dataset data = build_dataset(o.at("dataset"), seed);
  if (o.value("add_bias", true)) data = with_bias_column(data);
  if (kind == "svm_hinge") return svm_hinge(std::move(data), o.value("reg", 0.0));
  if (kind == "logistic_regression")
    return logistic_regression(std::move(data), o.at("n_classes").get<int>(), o.value("block_per_class", true));
  throw ConfigError("unknown objective kind '" + kind + "'");
}

ParamVector build_initial_point(const ExperimentSpec& spec, Index dim) {
  if (spec.w0.kind == InitSpec::Kind::EXPLICIT) {
    if (static_cast<Index>(spec.w0.values.size()) != dim) throw ConfigError("explicit w0 has the wrong dimension");
    return Eigen::Map<const ParamVector>(spec.w0.values.data(), dim);
  }
  Rng rng(stream_seed(spec, SeedStream::INIT));
  ParamVector w(dim);
  for (Index i = 0; i < dim; ++i) w[i] = rng.uniform(spec.w0.lo, spec.w0.hi);
  return w;
}

MiniBatchSampler::MiniBatchSampler(std::shared_ptr<const FiniteSumObjective> obj, Index batch_size,
                                   std::uint64_t seed)
    : obj_(std::move(obj)), batch_size_(batch_size), rng_(seed) {
  if (batch_size_ <= 0 || batch_size_ > obj_->n_samples())
    throw ConfigError("mini-batch size must lie in [1, n_samples]");
  order_.resize(static_cast<std::size_t>(obj_->n_samples()));
  std::iota(order_.begin(), order_.end(), Index{0});
  cursor_ = order_.size();
}

ParamVector MiniBatchSampler::operator()(const ParamVector& w, std::uint64_t) {
  const auto b = static_cast<std::size_t>(batch_size_);
  if (cursor_ + b > order_.size()) {
    // A trailing partial batch is dropped; every epoch starts from a fresh shuffle.
    for (std::size_t i = order_.size() - 1; i > 0; --i) std::swap(order_[i], order_[rng_.below(i + 1)]);
    cursor_ = 0;
    ++epoch_;
  }
  std::vector<Index> rows(order_.begin() + static_cast<std::ptrdiff_t>(cursor_),
                          order_.begin() + static_cast<std::ptrdiff_t>(cursor_ + b));
  cursor_ += b;
  std::sort(rows.begin(), rows.end());
  return obj_->batch_gradient(w, rows);
}

// ---------------------------------------------------------------------------
// Running and reporting

void write_trajectory_csv(const std::string& path, const Trajectory& t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write trajectory file: " + path);
  out << kTrajectoryHeader << '\n';
  for (const auto& r : t) {
    out << r.step << ',' << format_double(r.f_value) << ',' << format_double(r.grad_norm_l2) << ','
        << format_double(r.w_norm_l2) << ',' << (r.dist_to_opt ? format_double(*r.dist_to_opt) : "") << ','
        << format_double(r.lr) << ',' << format_double(r.step_norm_l2) << ',' << (r.fallback_any() ? 1 : 0)
        << '\n';
  }
  if (!out) throw std::runtime_error("failed writing trajectory file: " + path);
}

namespace {

struct RunOutput {
  Trajectory trajectory;
  std::vector<ParamVector> iterates;
  double epochs = 0.0;
};

RunOutput run_one(const ExperimentSpec& spec, const std::shared_ptr<const Objective>& obj,
                  const ParamVector& w0, const OptimizerConfig& cfg) {
  RunOptions opts;
  opts.max_steps = spec.max_steps;
  // Iterates feed the bound certificates; only kept for small problems with a known optimum.
  opts.keep_iterates = obj->metadata().w_star.has_value() && obj->dim() <= 64;
  RunOutput out;
  RunResult r;
  if (spec.batch.mode == BatchSpec::Mode::MINIBATCH) {
    auto fs = std::dynamic_pointer_cast<const FiniteSumObjective>(obj);
    if (!fs) throw ConfigError("minibatch mode needs a dataset objective");
    MiniBatchSampler sampler(fs, spec.batch.size, stream_seed(spec, SeedStream::BATCH));
    GradientOracle oracle = [&sampler](const ParamVector& w, std::uint64_t k) { return sampler(w, k); };
    r = run(*obj, oracle, w0, cfg, opts);
    out.epochs = static_cast<double>(r.trajectory.size()) * static_cast<double>(spec.batch.size) /
                 static_cast<double>(fs->n_samples());
  } else {
    r = run(*obj, w0, cfg, opts);
    out.epochs = static_cast<double>(r.trajectory.size());
  }
  out.trajectory = std::move(r.trajectory);
  out.iterates = std::move(r.iterates);
  return out;
}

std::size_t tail_begin(std::size_t n, double fraction) {
  const auto len = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(static_cast<double>(n) * fraction)));
  return n - std::min(n, len);
}

double tail_std(const Trajectory& t) {
  const std::size_t b = tail_begin(t.size(), kStdTailFraction);
  const double n = static_cast<double>(t.size() - b);
  double mean = 0.0;
  for (std::size_t i = b; i < t.size(); ++i) mean += t[i].f_value;
  mean /= n;
  double ss = 0.0;
  for (std::size_t i = b; i < t.size(); ++i) ss += (t[i].f_value - mean) * (t[i].f_value - mean);
  return std::sqrt(ss / n);
}

double amplitude(const Trajectory& t) {
  const std::size_t b = tail_begin(t.size(), kAmplitudeTailFraction);
  double lo = t[b].f_value, hi = t[b].f_value, dist = 0.0;
  bool have_dist = true;
  for (std::size_t i = b; i < t.size(); ++i) {
    lo = std::min(lo, t[i].f_value);
    hi = std::max(hi, t[i].f_value);
    if (t[i].dist_to_opt) dist = std::max(dist, *t[i].dist_to_opt);
    else have_dist = false;
  }
  return have_dist ? dist : hi - lo;
}

template <typename Fn>
void parallel_for(std::size_t n, unsigned jobs, Fn fn) {
  const unsigned workers = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(n)));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < workers; ++t)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::vector<double> gap_series(const Trajectory& t, double f_star, bool skip_first) {
  std::vector<double> out;
  double best = 0.0;
  for (std::size_t i = skip_first ? 1 : 0; i < t.size(); ++i) {
    const double gap = t[i].f_value - f_star;
    best = out.empty() ? gap : std::min(best, gap);
    out.push_back(best);
  }
  return out;
}

void attach_certificates(ComparisonReport& report, const ExperimentSpec& spec, const Objective& obj,
                         const std::vector<RunOutput>& runs) {
  const auto& meta = obj.metadata();
  const bool strongly_convex = meta.m && *meta.m > 0.0 && meta.L && meta.w_star && meta.f_star;

  for (std::size_t i = 0; i < runs.size(); ++i) {
    const auto& opt = spec.optimizers[i];
    const auto& cfg = opt.config;
    const auto& t = runs[i].trajectory;
    const bool proportional = cfg.method == Method::LARS && cfg.momentum() == 0.0;
    const bool fallback = std::any_of(t.begin(), t.end(), [](const auto& r) { return r.fallback_any(); });
    if (!proportional || fallback || runs[i].iterates.size() < 3) continue;

    if (obj.name() == "quadratic_1d" && cfg.schedule.kind == ScheduleKind::FIXED && cfg.schedule.eta0 < 1.0 &&
        (*meta.w_star)[0] > 0.0 && runs[i].iterates.front()[0] > 0.0 && report.optimizers[i].entry_step) {
      const double a = (*meta.w_star)[0];
      const double w0 = runs[i].iterates.front()[0];
      const auto predicted = hitting_time(a, w0, cfg.schedule.eta0);
      report.certificates.push_back(make_certificate(
          "absorbing_entry[" + opt.label + "]", {{"a", a}, {"w0", w0}, {"eta", cfg.schedule.eta0}}, Comparator::LE,
          static_cast<double>(predicted), static_cast<double>(*report.optimizers[i].entry_step)));
    }

    if (!strongly_convex) continue;
    const BoundConstants c = BoundConstants::measured(runs[i].iterates, obj);
    const auto gaps = gap_series(t, *meta.f_star, true);
    if (cfg.schedule.kind == ScheduleKind::FIXED && cfg.schedule.eta0 <= eta_small_enough(*meta.m, *meta.L)) {
      double worst = 0.0;
      for (std::size_t k = 0; k < gaps.size(); ++k)
        worst = std::max(worst, gaps[k] / theorem2_bound(k + 1, cfg.schedule.eta0, c).value);
      auto cert = make_certificate("theorem2_dominance[" + opt.label + "]",
                                   {{"eta", cfg.schedule.eta0}, {"M1", c.M1()}, {"M2", c.M2()}, {"L", c.L()}},
                                   Comparator::LE, 1.0, worst);
      cert.empirical = true;
      report.certificates.push_back(std::move(cert));
    } else if (cfg.schedule.kind == ScheduleKind::INVERSE_K) {
      std::vector<double> etas;
      for (const auto& r : t) etas.push_back(r.lr);
      const auto bound = theorem3_bound_prefix(etas, c);
      double worst = 0.0;
      for (std::size_t k = 0; k < gaps.size(); ++k) worst = std::max(worst, gaps[k] / bound[k]);
      auto cert = make_certificate("theorem3_dominance[" + opt.label + "]",
                                   {{"eta0", cfg.schedule.eta0}, {"M1", c.M1()}, {"M2", c.M2()}, {"L", c.L()}},
                                   Comparator::LE, 1.0, worst);
      cert.empirical = true;
      report.certificates.push_back(std::move(cert));
    }
  }

  // Dataset objectives: compare optimizers against each other.
  if (dynamic_cast<const FiniteSumObjective*>(&obj) && runs.size() >= 2) {
    double lo = report.optimizers[0].min_loss, hi = lo;
    for (const auto& s : report.optimizers) {
      lo = std::min(lo, s.min_loss);
      hi = std::max(hi, s.min_loss);
    }
    report.certificates.push_back(make_certificate("same_optimum", {{"best_min_loss", lo}, {"worst_min_loss", hi}},
                                                   Comparator::LE, 1e-2, (hi - lo) / std::abs(lo)));
    for (std::size_t i = 0; i < runs.size(); ++i) {
      const auto& fixed = spec.optimizers[i];
      if (fixed.config.method != Method::LARS || fixed.config.schedule.kind != ScheduleKind::FIXED) continue;
      for (std::size_t j = 0; j < runs.size(); ++j) {
        const auto& decay = spec.optimizers[j];
        if (decay.config.method != Method::LARS || decay.config.schedule.kind != ScheduleKind::LINEAR_TO_ZERO)
          continue;
        const std::string pair = fixed.label + "," + decay.label;
        report.certificates.push_back(make_certificate(
            "decay_removes_oscillation[" + pair + "]",
            {{"tail_std_fixed", report.optimizers[i].tail_loss_std},
             {"tail_std_decay", report.optimizers[j].tail_loss_std}},
            Comparator::LE, report.optimizers[i].tail_loss_std, 10.0 * report.optimizers[j].tail_loss_std));
        report.certificates.push_back(make_certificate(
            "decay_matches_optimum[" + decay.label + "]", {{"min_loss", report.optimizers[j].min_loss}},
            Comparator::LE, 1e-3, (report.optimizers[j].min_loss - lo) / std::abs(lo)));
      }
    }
  }
}

}  // namespace

ComparisonReport run_experiment(const ExperimentSpec& spec, unsigned jobs) {
  if (spec.optimizers.empty()) throw ValidationError({"spec.optimizers: must be a non-empty array"});
  const auto obj = build_objective(spec);
  const ParamVector w0 = build_initial_point(spec, obj->dim());

  std::vector<RunOutput> runs(spec.optimizers.size());
  parallel_for(runs.size(), jobs, [&](std::size_t i) { runs[i] = run_one(spec, obj, w0, spec.optimizers[i].config); });

  ComparisonReport report;
  report.name = spec.name;
  report.output_dir = spec.output_dir;
  report.seed = spec.seed;
  report.f_star = obj->metadata().f_star;
  report.thresholds_are_gaps = report.f_star.has_value();
  report.thresholds = {1e-1, 1e-2, 1e-3};

  double best = std::numeric_limits<double>::infinity();
  for (const auto& r : runs)
    for (const auto& rec : r.trajectory) best = std::min(best, rec.f_value);

  for (std::size_t i = 0; i < runs.size(); ++i) {
    const auto& t = runs[i].trajectory;
    const auto& cfg = spec.optimizers[i].config;
    OptimizerSummary s;
    s.label = spec.optimizers[i].label;
    s.method = to_string(cfg.method);
    s.schedule = to_string(cfg.schedule.kind);
    s.eta0 = cfg.schedule.eta0;
    s.steps = t.size();
    s.epochs = runs[i].epochs;
    s.final_loss = t.back().f_value;
    const auto mins = t.min_so_far();
    s.min_loss = mins.back();
    s.final_gap = report.f_star ? s.final_loss - *report.f_star : s.final_loss - best;
    s.tail_loss_std = tail_std(t);
    s.oscillation_amplitude = amplitude(t);
    for (double thr : report.thresholds) {
      std::optional<std::uint64_t> hit;
      for (std::size_t k = 0; k < mins.size(); ++k) {
        const bool ok = report.f_star ? mins[k] - *report.f_star < thr : mins[k] <= best + thr * std::abs(best);
        if (ok) {
          hit = t[k].step;
          break;
        }
      }
      s.steps_to_threshold.push_back(hit);
    }
    const bool proportional = cfg.method == Method::LARS || cfg.method == Method::PERCENT_DELTA;
    if (proportional && obj->name() == "quadratic_1d" && cfg.schedule.kind == ScheduleKind::FIXED &&
        cfg.schedule.eta0 < 1.0 && !runs[i].iterates.empty()) {
      const double a = (*obj->metadata().w_star)[0];
      if (a > 0.0) {
        const Interval in = absorbing_interval(a, cfg.schedule.eta0);
        for (std::size_t k = 0; k < runs[i].iterates.size(); ++k)
          if (in.contains(runs[i].iterates[k][0])) {
            s.entry_step = k;
            break;
          }
      }
    }
    s.trajectory_file = s.label + ".csv";
    report.optimizers.push_back(std::move(s));
  }
  attach_certificates(report, spec, *obj, runs);
  for (auto& r : runs) report.trajectories.push_back(std::move(r.trajectory));

  fs::create_directories(spec.output_dir);
  for (std::size_t i = 0; i < report.optimizers.size(); ++i)
    write_trajectory_csv((fs::path(spec.output_dir) / report.optimizers[i].trajectory_file).string(),
                         report.trajectories[i]);
  report.summary_file = (fs::path(spec.output_dir) / "summary.json").string();
  std::ofstream out(report.summary_file, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write summary: " + report.summary_file);
  out << summary_json(report, spec).dump(2) << '\n';
  if (!out) throw std::runtime_error("failed writing summary: " + report.summary_file);
  return report;
}

json summary_json(const ComparisonReport& report, const ExperimentSpec& spec) {
  auto num = [](double x) { return std::isfinite(x) ? json(x) : json(nullptr); };
  json opts = json::array();
  for (const auto& s : report.optimizers) {
    json steps = json::array();
    for (const auto& h : s.steps_to_threshold) steps.push_back(h ? json(*h) : json(nullptr));
    json j = {{"label", s.label},
              {"method", s.method},
              {"schedule", s.schedule},
              {"eta0", s.eta0},
              {"steps", s.steps},
              {"epochs", s.epochs},
              {"final_loss", num(s.final_loss)},
              {"min_loss", num(s.min_loss)},
              {"final_gap", s.final_gap ? num(*s.final_gap) : json(nullptr)},
              {"tail_loss_std", num(s.tail_loss_std)},
              {"oscillation_amplitude", num(s.oscillation_amplitude)},
              {"entry_step", s.entry_step ? json(*s.entry_step) : json(nullptr)},
              {"steps_to_threshold", steps},
              {"trajectory_file", s.trajectory_file}};
    opts.push_back(std::move(j));
  }
  return {{"name", report.name},
          {"seed", report.seed},
          {"seeds",
           {{"dataset", stream_seed(spec, SeedStream::DATASET)},
            {"init", stream_seed(spec, SeedStream::INIT)},
            {"batch", stream_seed(spec, SeedStream::BATCH)}}},
          {"f_star", report.f_star ? json(*report.f_star) : json(nullptr)},
          {"thresholds", report.thresholds},
          {"thresholds_kind", report.thresholds_are_gaps ? "f_gap" : "relative_to_best"},
          {"optimizers", opts},
          {"certificates", to_json(report.certificates)},
          {"spec", to_json(spec)}};
}

// ---------------------------------------------------------------------------
// Sweeps

SweepParameter sweep_parameter_from_string(const std::string& s) {
  if (s == "eta") return SweepParameter::ETA;
  if (s == "w0") return SweepParameter::W0;
  if (s == "seed") return SweepParameter::SEED;
  throw ConfigError("unknown sweep parameter '" + s + "' (expected eta, w0, seed)");
}

std::string to_string(SweepParameter p) {
  switch (p) {
    case SweepParameter::ETA: return "eta";
    case SweepParameter::W0: return "w0";
    case SweepParameter::SEED: return "seed";
  }
  return "?";
}

namespace {
ExperimentSpec with_value(const ExperimentSpec& base, SweepParameter p, double v, std::size_t index) {
  ExperimentSpec s = base;
  s.output_dir = (fs::path(base.output_dir) / (to_string(p) + "_" + std::to_string(index))).string();
  switch (p) {
    case SweepParameter::ETA:
      for (auto& o : s.optimizers) o.config.schedule.eta0 = v;
      break;
    case SweepParameter::W0: {
      const Index dim = build_objective(base)->dim();
      s.w0.kind = InitSpec::Kind::EXPLICIT;
      s.w0.values.assign(static_cast<std::size_t>(dim), v);
      break;
    }
    case SweepParameter::SEED:
      if (!(v >= 0.0) || v != std::floor(v)) throw ValidationError({"sweep: seed values must be nonnegative integers"});
      s.seed = static_cast<std::uint64_t>(v);
      break;
  }
  return s;
}

bool uses_randomness(const ExperimentSpec& spec) {
  return spec.w0.kind == InitSpec::Kind::UNIFORM || spec.batch.mode == BatchSpec::Mode::MINIBATCH ||
         spec.objective.contains("dataset");
}
}  // namespace

std::vector<ComparisonReport> sweep(const ExperimentSpec& spec, SweepParameter parameter,
                                    const std::vector<double>& values, unsigned jobs) {
  std::vector<std::string> violations;
  if (values.empty()) violations.push_back("sweep: values must not be empty");
  if (parameter == SweepParameter::SEED && !uses_randomness(spec))
    violations.push_back("sweep: seed does not affect this spec (explicit w0, full batch, no dataset)");
  for (double v : values)
    if (!std::isfinite(v)) violations.push_back("sweep: non-finite value");
  if (!violations.empty()) throw ValidationError(violations);

  std::vector<ExperimentSpec> specs;
  for (std::size_t i = 0; i < values.size(); ++i) specs.push_back(with_value(spec, parameter, values[i], i));
  for (const auto& s : specs)
    for (const auto& o : s.optimizers) o.config.validate();

  std::vector<ComparisonReport> reports(specs.size());
  parallel_for(specs.size(), jobs, [&](std::size_t i) { reports[i] = run_experiment(specs[i], 1); });

  fs::create_directories(spec.output_dir);
  const std::string path = (fs::path(spec.output_dir) / "sweep.csv").string();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write sweep table: " + path);
  out << "value,label,final_gap,oscillation_amplitude,entry_step,final_loss,min_loss\n";
  for (std::size_t i = 0; i < reports.size(); ++i)
    for (const auto& s : reports[i].optimizers)
      out << format_double(values[i]) << ',' << s.label << ','
          << (s.final_gap ? format_double(*s.final_gap) : "") << ',' << format_double(s.oscillation_amplitude)
          << ',' << (s.entry_step ? std::to_string(*s.entry_step) : "") << ',' << format_double(s.final_loss)
          << ',' << format_double(s.min_loss) << '\n';
  if (!out) throw std::runtime_error("failed writing sweep table: " + path);
  return reports;
}

// ---------------------------------------------------------------------------

std::vector<std::string> emit_plotdata(const ComparisonReport& report, const std::string& dir) {
  if (report.trajectories.size() != report.optimizers.size() || report.optimizers.empty())
    throw ConfigError("emit_plotdata: report is incomplete");
  for (std::size_t i = 0; i < report.trajectories.size(); ++i)
    if (report.trajectories[i].empty())
      throw ConfigError("emit_plotdata: trajectory '" + report.optimizers[i].label + "' is empty");

  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create plot directory " + dir + ": " + ec.message());

  std::vector<std::string> written;
  auto open = [&](const std::string& name) {
    const std::string path = (fs::path(dir) / name).string();
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write plot file: " + path);
    written.push_back(path);
    return f;
  };
  for (std::size_t i = 0; i < report.trajectories.size(); ++i) {
    const auto& label = report.optimizers[i].label;
    auto loss = open(label + ".loss.dat");
    auto dist = open(label + ".dist.dat");
    for (const auto& r : report.trajectories[i]) {
      loss << r.step << ' ' << format_double(r.f_value) << '\n';
      dist << r.step << ' ' << (r.dist_to_opt ? format_double(*r.dist_to_opt) : "nan") << '\n';
    }
    if (!loss || !dist) throw std::runtime_error("failed writing plot data for " + label);
  }
  auto readme = open("README.txt");
  readme << "Plot data for experiment '" << report.name << "'.\n\n"
         << "Each optimizer has two whitespace-delimited files with one row per step:\n"
         << "  <label>.loss.dat  columns: step f_value   (objective before the update)\n"
         << "  <label>.dist.dat  columns: step dist_to_opt   (L2 distance to the optimum; nan if unknown)\n\n"
         << "Optimizers:";
  for (const auto& s : report.optimizers) readme << ' ' << s.label;
  readme << '\n';
  if (!readme) throw std::runtime_error("failed writing plot README");
  return written;
}

// ---------------------------------------------------------------------------
// Presets

namespace {
json lars(const std::string& label, double eta, const std::string& schedule = "fixed") {
  return {{"label", label}, {"method", "lars"}, {"schedule", {{"kind", schedule}, {"eta0", eta}}}};
}
json plain(const std::string& label, const std::string& method, double eta) {
  return {{"label", label}, {"method", method}, {"schedule", {{"kind", "fixed"}, {"eta0", eta}}}};
}
}  // namespace

const std::vector<Preset>& presets() {
  static const std::vector<Preset> registry = [] {
    std::vector<Preset> p;
    // Exact proportional updates (no stabilizer, no fallback) so the 1D closed forms apply.
    json quad_lars = lars("lars", 0.1);
    quad_lars["eps"] = 0.0;
    quad_lars["beta"] = 0.0;

    p.push_back({"quad1d", "1D quadratic a=1 from w0=0.1: LARS absorption vs GD",
                 {{"name", "quad1d"},
                  {"seed", 1},
                  {"objective", {{"kind", "quadratic_1d"}, {"a", 1.0}}},
                  {"optimizers", {quad_lars, plain("gd", "gd", 0.1)}},
                  {"w0", {{"explicit", {0.1}}}},
                  {"max_steps", 200},
                  {"batch", {{"mode", "full"}}},
                  {"output_dir", "out/quad1d"}},
                 std::nullopt});

    json lars_small = lars("lars-0.05", 0.05), lars_big = lars("lars-0.2", 0.2);
    for (json* j : {&lars_small, &lars_big}) {
      (*j)["eps"] = 0.0;
      (*j)["beta"] = 0.0;
    }
    p.push_back({"quad2d-fig1", "2D quadratic diag(1,4): GD converges, LARS settles in an eta-sized region",
                 {{"name", "quad2d-fig1"},
                  {"seed", 1},
                  {"objective", {{"kind", "quadratic_nd"}, {"A", {{1.0, 0.0}, {0.0, 4.0}}}, {"b", {2.0, 1.0}}}},
                  {"optimizers", {plain("gd", "gd", 0.2), lars_small, lars_big}},
                  {"w0", {{"explicit", {0.5, 3.0}}}},
                  {"max_steps", 2000},
                  {"batch", {{"mode", "full"}}},
                  {"output_dir", "out/quad2d-fig1"}},
                 std::nullopt});

    p.push_back({"svm-desk", "Linear SVM on 1000 separable points, batch 100: SGD 0.01, ADAM 0.1, LARS 0.1 (+decay)",
                 {{"name", "svm-desk"},
                  {"seed", 7},
                  {"objective",
                   {{"kind", "svm_hinge"},
                    {"reg", 0.01},
                    {"add_bias", true},
                    {"dataset", {{"kind", "separable"}, {"n", 1000}, {"dim", 2}, {"margin", 0.5}}}}},
                  {"optimizers",
                   {plain("sgd", "gd", 0.01), plain("adam", "adam", 0.1), lars("lars", 0.1),
                    lars("lars-decay", 0.1, "linear_to_zero")}},
                  {"w0", {{"uniform", {{"lo", -1.0}, {"hi", 1.0}}}}},
                  {"max_steps", 3000},
                  {"batch", {{"mode", "minibatch"}, {"size", 100}}},
                  {"output_dir", "out/svm-desk"}},
                 std::nullopt});

    p.push_back({"logistic-desk",
                 "Softmax regression on 1200 Gaussian-blob points (5 classes), batch 200: SGD 0.5, ADAM 0.001, "
                 "LARS 0.05 (+decay)",
                 {{"name", "logistic-desk"},
                  {"seed", 11},
                  {"objective",
                   {{"kind", "logistic_regression"},
                    {"n_classes", 5},
                    {"block_per_class", true},
                    {"add_bias", true},
                    {"dataset",
                     {{"kind", "blobs"}, {"n", 1200}, {"dim", 10}, {"n_classes", 5}, {"separation", 1.5}, {"spread", 1.0}}}}},
                  {"optimizers",
                   {plain("sgd", "gd", 0.5), plain("adam", "adam", 0.001), lars("lars", 0.05),
                    lars("lars-decay", 0.05, "linear_to_zero")}},
                  {"w0", {{"uniform", {{"lo", -0.05}, {"hi", 0.05}}}}},
                  {"max_steps", 3000},
                  {"batch", {{"mode", "minibatch"}, {"size", 200}}},
                  {"output_dir", "out/logistic-desk"}},
                 std::nullopt});

    json sweep_lars = quad_lars;
    p.push_back({"eta-sweep", "1D quadratic a=1: LARS oscillation amplitude for eta in {0.05, 0.1, 0.2}",
                 {{"name", "eta-sweep"},
                  {"seed", 1},
                  {"objective", {{"kind", "quadratic_1d"}, {"a", 1.0}}},
                  {"optimizers", {sweep_lars}},
                  {"w0", {{"explicit", {0.1}}}},
                  {"max_steps", 4000},
                  {"batch", {{"mode", "full"}}},
                  {"output_dir", "out/eta-sweep"}},
                 SweepPlan{SweepParameter::ETA, {0.05, 0.1, 0.2}}});
    return p;
  }();
  return registry;
}

const Preset& find_preset(const std::string& name) {
  for (const auto& p : presets())
    if (p.name == name) return p;
  std::string known;
  for (const auto& p : presets()) known += (known.empty() ? "" : ", ") + p.name;
  throw ConfigError("unknown preset '" + name + "' (available: " + known + ")");
}

}  // namespace propopt
