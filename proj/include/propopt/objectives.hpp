#pragma once

#include "propopt/core.hpp"

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace propopt {

/// Known convexity facts about an objective. Each field is present only when exact.
struct ObjectiveMetadata {
  std::optional<double> m;  // strong convexity constant
  std::optional<double> L;  // Lipschitz constant of the gradient
  std::optional<ParamVector> w_star;
  std::optional<double> f_star;
};

/// Value + gradient oracle over a flat parameter vector. Implementations are
/// stateless after construction and safe to evaluate from several threads.
class Objective {
 public:
  virtual ~Objective() = default;

  virtual Index dim() const = 0;
  virtual double value(const ParamVector& w) const = 0;
  virtual ParamVector gradient(const ParamVector& w) const = 0;

  const ObjectiveMetadata& metadata() const { return meta_; }
  /// Natural per-layer partition of the parameters; a single block unless overridden.
  virtual BlockSet blocks() const { return BlockSet::single(dim()); }
  virtual std::string name() const = 0;

 protected:
  ObjectiveMetadata meta_;
};

/// An objective that is a mean over samples, so it can be evaluated on a mini-batch.
class FiniteSumObjective : public Objective {
 public:
  virtual Index n_samples() const = 0;
  /// Mean loss over `rows` plus any regularizer. Rows are summed in the given order.
  virtual double batch_value(const ParamVector& w, std::span<const Index> rows) const = 0;
  virtual ParamVector batch_gradient(const ParamVector& w, std::span<const Index> rows) const = 0;

  double value(const ParamVector& w) const override;
  ParamVector gradient(const ParamVector& w) const override;

 private:
  std::vector<Index> all_rows() const;
};

/// Labelled samples. For binary problems labels are -1/+1; for multi-class, 0..K-1.
struct Dataset {
  Eigen::MatrixXd features;  // n_samples x n_features
  Eigen::VectorXi labels;

  Index n_samples() const { return features.rows(); }
  Index n_features() const { return features.cols(); }
  void validate() const;
};

/// Copy of `data` with a trailing constant-1 column, so a bias lives inside the weight vector.
Dataset with_bias_column(const Dataset& data);

// Objectives. Each factory validates its inputs and throws ConfigError / DataError.
std::shared_ptr<const Objective> quadratic_1d(double a);
std::shared_ptr<const Objective> quadratic_nd(const Eigen::MatrixXd& A, const ParamVector& b);
std::shared_ptr<const Objective> convex_1d_power(double a, int p);
std::shared_ptr<const FiniteSumObjective> svm_hinge(Dataset data, double reg = 0.0);
/// Multinomial logistic regression; parameters are the K x d weight matrix in row-major
/// order. With `block_per_class` each class row is its own block.
std::shared_ptr<const FiniteSumObjective> logistic_regression(Dataset data, int n_classes,
                                                               bool block_per_class = true);

// Synthetic data.

/// Two classes on either side of a random hyperplane through the origin, each point at
/// least `margin` away from it. Labels alternate +1, -1.
Dataset make_separable_dataset(Index n, Index dim, double margin, std::uint64_t seed);

/// Gaussian blobs around `n_classes` random unit-norm centers scaled by `separation`,
/// with isotropic noise `spread`. Labels cycle 0..K-1.
Dataset make_blob_dataset(Index n, Index dim, int n_classes, double separation, double spread,
                          std::uint64_t seed);

/// Reads a CSV with a header row; last column is an integer label.
Dataset load_csv_dataset(const std::string& path);

}  // namespace propopt
