#include "propopt/objectives.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace propopt {

double FiniteSumObjective::value(const ParamVector& w) const {
  const auto rows = all_rows();
  return batch_value(w, rows);
}

ParamVector FiniteSumObjective::gradient(const ParamVector& w) const {
  const auto rows = all_rows();
  return batch_gradient(w, rows);
}

std::vector<Index> FiniteSumObjective::all_rows() const {
  std::vector<Index> rows(static_cast<std::size_t>(n_samples()));
  std::iota(rows.begin(), rows.end(), Index{0});
  return rows;
}

void Dataset::validate() const {
  if (features.rows() == 0 || features.cols() == 0) throw DataError("dataset is empty");
  if (labels.size() != features.rows())
    throw DataError("label count " + std::to_string(labels.size()) + " does not match sample count " +
                    std::to_string(features.rows()));
  require_finite(features, "dataset features");
}

Dataset with_bias_column(const Dataset& data) {
  Dataset out;
  out.features.resize(data.n_samples(), data.n_features() + 1);
  out.features.leftCols(data.n_features()) = data.features;
  out.features.col(data.n_features()).setOnes();
  out.labels = data.labels;
  return out;
}

namespace {

void check_dim(const ParamVector& w, Index dim, const char* who) {
  if (w.size() != dim)
    throw ConfigError(std::string(who) + ": expected dimension " + std::to_string(dim) + ", got " +
                      std::to_string(w.size()));
}

Eigen::MatrixXd gather_rows(const Eigen::MatrixXd& x, std::span<const Index> rows) {
  Eigen::MatrixXd out(static_cast<Index>(rows.size()), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Index r = rows[i];
    if (r < 0 || r >= x.rows()) throw ConfigError("batch row index out of range");
    out.row(static_cast<Index>(i)) = x.row(r);
  }
  return out;
}

class Quadratic1d final : public Objective {
 public:
  explicit Quadratic1d(double a) : a_(a) {
    meta_.m = 1.0;
    meta_.L = 1.0;
    meta_.w_star = ParamVector::Constant(1, a);
    meta_.f_star = 0.0;
  }
  Index dim() const override { return 1; }
  double value(const ParamVector& w) const override {
    check_dim(w, 1, "quadratic_1d");
    const double d = w[0] - a_;
    return 0.5 * d * d;
  }
  ParamVector gradient(const ParamVector& w) const override {
    check_dim(w, 1, "quadratic_1d");
    return ParamVector::Constant(1, w[0] - a_);
  }
  std::string name() const override { return "quadratic_1d"; }

 private:
  double a_;
};

class QuadraticNd final : public Objective {
 public:
  QuadraticNd(Eigen::MatrixXd A, ParamVector b, double m, double L) : A_(std::move(A)), b_(std::move(b)) {
    meta_.m = m;
    meta_.L = L;
    meta_.w_star = b_;
    meta_.f_star = 0.0;
  }
  Index dim() const override { return b_.size(); }
  double value(const ParamVector& w) const override {
    check_dim(w, dim(), "quadratic_nd");
    const ParamVector d = w - b_;
    return 0.5 * d.dot(A_ * d);
  }
  ParamVector gradient(const ParamVector& w) const override {
    check_dim(w, dim(), "quadratic_nd");
    return A_ * (w - b_);
  }
  std::string name() const override { return "quadratic_nd"; }

 private:
  Eigen::MatrixXd A_;
  ParamVector b_;
};

double ipow(double x, int p) {
  double r = 1.0;
  for (int i = 0; i < p; ++i) r *= x;
  return r;
}

class Convex1dPower final : public Objective {
 public:
  Convex1dPower(double a, int p) : a_(a), p_(p) {
    meta_.w_star = ParamVector::Constant(1, a);
    meta_.f_star = 0.0;
  }
  Index dim() const override { return 1; }
  double value(const ParamVector& w) const override {
    check_dim(w, 1, "convex_1d_power");
    return ipow(w[0] - a_, p_) / p_;
  }
  ParamVector gradient(const ParamVector& w) const override {
    check_dim(w, 1, "convex_1d_power");
    return ParamVector::Constant(1, ipow(w[0] - a_, p_ - 1));
  }
  std::string name() const override { return "convex_1d_power"; }

 private:
  double a_;
  int p_;
};

class SvmHinge final : public FiniteSumObjective {
 public:
  SvmHinge(Dataset data, double reg) : data_(std::move(data)), reg_(reg) {}

  Index dim() const override { return data_.n_features(); }
  Index n_samples() const override { return data_.n_samples(); }
  std::string name() const override { return "svm_hinge"; }

  double batch_value(const ParamVector& w, std::span<const Index> rows) const override {
    check_dim(w, dim(), "svm_hinge");
    if (rows.empty()) throw ConfigError("svm_hinge: empty batch");
    const Eigen::MatrixXd x = gather_rows(data_.features, rows);
    const Eigen::VectorXd scores = x * w;
    double loss = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const double margin = data_.labels[rows[i]] * scores[static_cast<Index>(i)];
      loss += std::max(0.0, 1.0 - margin);
    }
    return loss / static_cast<double>(rows.size()) + reg_ * w.squaredNorm();
  }

  ParamVector batch_gradient(const ParamVector& w, std::span<const Index> rows) const override {
    check_dim(w, dim(), "svm_hinge");
    if (rows.empty()) throw ConfigError("svm_hinge: empty batch");
    const Eigen::MatrixXd x = gather_rows(data_.features, rows);
    const Eigen::VectorXd scores = x * w;
    // Per-row coefficient of x_i in the subgradient; the kink contributes zero.
    Eigen::VectorXd coef = Eigen::VectorXd::Zero(x.rows());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const double y = data_.labels[rows[i]];
      if (y * scores[static_cast<Index>(i)] < 1.0) coef[static_cast<Index>(i)] = -y;
    }
    ParamVector g = x.transpose() * coef / static_cast<double>(rows.size());
    if (reg_ != 0.0) g += 2.0 * reg_ * w;
    return g;
  }

 private:
  Dataset data_;
  double reg_;
};

class LogisticRegression final : public FiniteSumObjective {
  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

 public:
  LogisticRegression(Dataset data, int n_classes, bool block_per_class)
      : data_(std::move(data)), k_(n_classes), block_per_class_(block_per_class) {}

  Index dim() const override { return k_ * data_.n_features(); }
  Index n_samples() const override { return data_.n_samples(); }
  std::string name() const override { return "logistic_regression"; }

  BlockSet blocks() const override {
    if (!block_per_class_) return BlockSet::single(dim());
    return BlockSet::uniform(k_, data_.n_features(), "class");
  }

  double batch_value(const ParamVector& w, std::span<const Index> rows) const override {
    const auto probs = softmax(w, rows);
    double loss = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i)
      loss -= probs.log_p(static_cast<Index>(i), data_.labels[rows[i]]);
    return loss / static_cast<double>(rows.size());
  }

  ParamVector batch_gradient(const ParamVector& w, std::span<const Index> rows) const override {
    auto probs = softmax(w, rows);
    Eigen::MatrixXd residual = probs.p;  // b x K
    for (std::size_t i = 0; i < rows.size(); ++i)
      residual(static_cast<Index>(i), data_.labels[rows[i]]) -= 1.0;
    RowMajor grad = residual.transpose() * probs.x / static_cast<double>(rows.size());
    return Eigen::Map<const ParamVector>(grad.data(), grad.size());
  }

 private:
  struct Softmax {
    Eigen::MatrixXd x;          // b x d
    Eigen::MatrixXd p;          // b x K
    Eigen::VectorXd log_norm;   // log-sum-exp per row, relative to row max
    Eigen::MatrixXd shifted;    // logits minus row max

    double log_p(Index i, int c) const { return shifted(i, c) - log_norm[i]; }
  };

  Softmax softmax(const ParamVector& w, std::span<const Index> rows) const {
    check_dim(w, dim(), "logistic_regression");
    if (rows.empty()) throw ConfigError("logistic_regression: empty batch");
    Softmax s;
    s.x = gather_rows(data_.features, rows);
    Eigen::Map<const RowMajor> weights(w.data(), k_, data_.n_features());
    s.shifted = s.x * weights.transpose();
    s.log_norm.resize(s.shifted.rows());
    s.p.resize(s.shifted.rows(), k_);
    for (Index i = 0; i < s.shifted.rows(); ++i) {
      s.shifted.row(i).array() -= s.shifted.row(i).maxCoeff();
      s.p.row(i) = s.shifted.row(i).array().exp().matrix();
      const double z = s.p.row(i).sum();
      s.log_norm[i] = std::log(z);
      s.p.row(i) /= z;
    }
    return s;
  }

  Dataset data_;
  int k_;
  bool block_per_class_;
};

}  // namespace

std::shared_ptr<const Objective> quadratic_1d(double a) {
  require_finite(a, "quadratic_1d target");
  return std::make_shared<Quadratic1d>(a);
}

std::shared_ptr<const Objective> quadratic_nd(const Eigen::MatrixXd& A, const ParamVector& b) {
  if (A.rows() != A.cols() || A.rows() != b.size() || b.size() == 0)
    throw ConfigError("quadratic_nd: A must be square and match the size of b");
  require_finite(A, "quadratic_nd matrix");
  require_finite(b, "quadratic_nd offset");
  const double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
  if ((A - A.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw ConfigError("quadratic_nd: matrix is not symmetric");
  if (Eigen::LLT<Eigen::MatrixXd>(A).info() != Eigen::Success)
    throw ConfigError("quadratic_nd: matrix is not positive definite");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(A, Eigen::EigenvaluesOnly);
  const double m = eig.eigenvalues().minCoeff();
  const double L = eig.eigenvalues().maxCoeff();
  if (!(m > 0.0)) throw ConfigError("quadratic_nd: matrix is not positive definite");
  return std::make_shared<QuadraticNd>(A, b, m, L);
}

std::shared_ptr<const Objective> convex_1d_power(double a, int p) {
  require_finite(a, "convex_1d_power target");
  if (p < 4 || p % 2 != 0) throw ConfigError("convex_1d_power: p must be an even integer >= 4");
  return std::make_shared<Convex1dPower>(a, p);
}

std::shared_ptr<const FiniteSumObjective> svm_hinge(Dataset data, double reg) {
  data.validate();
  if (!(reg >= 0.0) || !std::isfinite(reg)) throw ConfigError("svm_hinge: reg must be >= 0");
  for (Index i = 0; i < data.labels.size(); ++i)
    if (data.labels[i] != 1 && data.labels[i] != -1)
      throw DataError("svm_hinge: label " + std::to_string(data.labels[i]) + " at row " +
                      std::to_string(i) + " is not -1 or +1");
  return std::make_shared<SvmHinge>(std::move(data), reg);
}

std::shared_ptr<const FiniteSumObjective> logistic_regression(Dataset data, int n_classes,
                                                               bool block_per_class) {
  data.validate();
  if (n_classes < 1) throw ConfigError("logistic_regression: n_classes must be positive");
  for (Index i = 0; i < data.labels.size(); ++i)
    if (data.labels[i] < 0 || data.labels[i] >= n_classes)
      throw DataError("logistic_regression: label " + std::to_string(data.labels[i]) + " at row " +
                      std::to_string(i) + " outside [0, " + std::to_string(n_classes) + ")");
  return std::make_shared<LogisticRegression>(std::move(data), n_classes, block_per_class);
}

namespace {
ParamVector random_unit(Rng& rng, Index dim) {
  ParamVector u(dim);
  do {
    for (Index j = 0; j < dim; ++j) u[j] = rng.normal();
  } while (u.norm() == 0.0);
  return u / u.norm();
}
}  // namespace

Dataset make_separable_dataset(Index n, Index dim, double margin, std::uint64_t seed) {
  if (n <= 0 || n % 2 != 0) throw ConfigError("make_separable_dataset: n must be positive and even");
  if (dim <= 0) throw ConfigError("make_separable_dataset: dim must be positive");
  if (!(margin > 0.0)) throw ConfigError("make_separable_dataset: margin must be positive");

  Rng rng(seed);
  const ParamVector normal = random_unit(rng, dim);
  Dataset d;
  d.features.resize(n, dim);
  d.labels.resize(n);
  for (Index i = 0; i < n; ++i) {
    const int y = i % 2 == 0 ? 1 : -1;
    ParamVector x(dim);
    for (Index j = 0; j < dim; ++j) x[j] = rng.normal();
    x -= x.dot(normal) * normal;
    // Small cushion so rounding in the projection never eats into the margin.
    const double offset = margin * (1.0 + 1e-9) + std::abs(rng.normal());
    x += y * offset * normal;
    d.features.row(i) = x.transpose();
    d.labels[i] = y;
  }
  return d;
}

Dataset make_blob_dataset(Index n, Index dim, int n_classes, double separation, double spread,
                          std::uint64_t seed) {
  if (n <= 0 || dim <= 0 || n_classes < 2) throw ConfigError("make_blob_dataset: invalid shape");
  if (!(spread > 0.0) || !(separation >= 0.0)) throw ConfigError("make_blob_dataset: invalid scale");
  Rng rng(seed);
  Eigen::MatrixXd centers(n_classes, dim);
  for (int c = 0; c < n_classes; ++c) centers.row(c) = separation * random_unit(rng, dim).transpose();
  Dataset d;
  d.features.resize(n, dim);
  d.labels.resize(n);
  for (Index i = 0; i < n; ++i) {
    const int c = static_cast<int>(i % n_classes);
    for (Index j = 0; j < dim; ++j) d.features(i, j) = centers(c, j) + spread * rng.normal();
    d.labels[i] = c;
  }
  return d;
}

Dataset load_csv_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": missing header row");

  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  std::size_t width = 0;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() < 2) throw DataError(path + ":" + std::to_string(line_no) + ": need features and a label");
    if (width == 0) width = cells.size();
    if (cells.size() != width)
      throw DataError(path + ":" + std::to_string(line_no) + ": inconsistent column count");

    std::vector<double> row(width - 1);
    for (std::size_t j = 0; j + 1 < width; ++j) {
      const auto& c = cells[j];
      auto [ptr, ec] = std::from_chars(c.data(), c.data() + c.size(), row[j]);
      if (ec != std::errc() || ptr != c.data() + c.size())
        throw DataError(path + ":" + std::to_string(line_no) + ": bad number '" + c + "'");
    }
    int label = 0;
    const auto& lc = cells.back();
    auto [ptr, ec] = std::from_chars(lc.data(), lc.data() + lc.size(), label);
    if (ec != std::errc() || ptr != lc.data() + lc.size())
      throw DataError(path + ":" + std::to_string(line_no) + ": bad integer label '" + lc + "'");
    rows.push_back(std::move(row));
    labels.push_back(label);
  }
  if (rows.empty()) throw DataError(path + ": no data rows");

  Dataset d;
  d.features.resize(static_cast<Index>(rows.size()), static_cast<Index>(width - 1));
  d.labels.resize(static_cast<Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      d.features(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
    d.labels[static_cast<Index>(i)] = labels[i];
  }
  d.validate();
  return d;
}

}  // namespace propopt
