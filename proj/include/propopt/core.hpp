#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace propopt {

using ParamVector = Eigen::VectorXd;
using Index = Eigen::Index;

// Error taxonomy. Every failure surfaces as one of these.
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

enum class Norm { L1, L2 };

/// L1 or L2 norm of any dense Eigen expression. Empty input gives 0. L2 is scaled, so tiny or
/// huge entries neither underflow nor overflow.
template <typename Derived>
typename Derived::RealScalar norm(const Eigen::MatrixBase<Derived>& v, Norm p) {
  if (v.size() == 0) return typename Derived::RealScalar(0);
  return p == Norm::L1 ? v.template lpNorm<1>() : v.stableNorm();
}

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& v) {
  return v.allFinite();
}

/// Throws NumericError naming `where` if any entry is NaN or infinite.
template <typename Derived>
void require_finite(const Eigen::MatrixBase<Derived>& v, const std::string& where) {
  if (!v.allFinite()) throw NumericError("non-finite value in " + where);
}

inline void require_finite(double x, const std::string& where) {
  if (!std::isfinite(x)) throw NumericError("non-finite value in " + where);
}

/// A named contiguous slice [begin, begin + size) of a parameter vector.
struct ParamBlock {
  std::string name;
  Index begin = 0;
  Index size = 0;

  Index end() const { return begin + size; }
};

/// A validated set of blocks partitioning [0, dim). Immutable once built.
class BlockSet {
 public:
  BlockSet() = default;

  /// Validates that `blocks` (in any order) tile [0, dim) exactly; throws ConfigError otherwise.
  BlockSet(std::vector<ParamBlock> blocks, Index dim);

  static BlockSet single(Index dim, std::string name = "w");
  /// `count` equal blocks of `size` each, named prefix0, prefix1, ...
  static BlockSet uniform(Index count, Index size, const std::string& prefix);

  Index dim() const { return dim_; }
  std::size_t size() const { return blocks_.size(); }
  bool empty() const { return blocks_.empty(); }
  const ParamBlock& operator[](std::size_t i) const { return blocks_[i]; }
  auto begin() const { return blocks_.begin(); }
  auto end() const { return blocks_.end(); }

 private:
  std::vector<ParamBlock> blocks_;
  Index dim_ = 0;
};

/// Non-copying views of `w`, one per block, in block order.
std::vector<Eigen::Ref<const ParamVector>> block_view(const ParamVector& w, const BlockSet& blocks);

/// Concatenates per-block pieces back into a flat vector following `blocks`.
ParamVector assemble(const std::vector<ParamVector>& pieces, const BlockSet& blocks);

struct TrajectoryRecord {
  std::uint64_t step = 0;
  double f_value = 0.0;
  double grad_norm_l2 = 0.0;
  double w_norm_l2 = 0.0;
  std::optional<double> dist_to_opt;
  double lr = 0.0;
  double step_norm_l2 = 0.0;
  std::vector<bool> fallback_active;

  bool fallback_any() const;
};

/// Append-only log of one run. Enforces strictly increasing steps.
class Trajectory {
 public:
  void append(TrajectoryRecord rec);

  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  const TrajectoryRecord& operator[](std::size_t i) const { return records_[i]; }
  const TrajectoryRecord& back() const { return records_.back(); }
  auto begin() const { return records_.begin(); }
  auto end() const { return records_.end(); }

  /// Running minimum of f_value, one entry per record.
  std::vector<double> min_so_far() const;

 private:
  std::vector<TrajectoryRecord> records_;
};

/// Counter-based seed splitter: the same (root, stream) always yields the same seed.
std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream);

/// Uniform double in [0, 1) from the top 53 bits of a 64-bit draw.
inline double unit_uniform(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

/// Portable stream of reals on top of mt19937_64. Output depends only on the seed,
/// not on the standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return unit_uniform(engine_()); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Standard normal via Box-Muller; caches the second variate.
  double normal();
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

}  // namespace propopt
