#include "propopt/core.hpp"

#include <algorithm>
#include <limits>
#include <numbers>

namespace propopt {

BlockSet::BlockSet(std::vector<ParamBlock> blocks, Index dim) : dim_(dim) {
  if (dim <= 0) throw ConfigError("block set dimension must be positive");
  if (blocks.empty()) throw ConfigError("block set is empty");
  std::vector<std::size_t> order(blocks.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return blocks[a].begin < blocks[b].begin; });

  Index cursor = 0;
  for (std::size_t i : order) {
    const ParamBlock& b = blocks[i];
    if (b.size <= 0) throw ConfigError("block '" + b.name + "' is empty");
    if (b.begin < cursor)
      throw ConfigError("block '" + b.name + "' overlaps a preceding block at index " +
                        std::to_string(b.begin));
    if (b.begin > cursor)
      throw ConfigError("gap in block partition: indices [" + std::to_string(cursor) + ", " +
                        std::to_string(b.begin) + ") are not covered");
    cursor = b.end();
  }
  if (cursor != dim)
    throw ConfigError("block partition covers [0, " + std::to_string(cursor) +
                      ") but dimension is " + std::to_string(dim));

  blocks_.reserve(blocks.size());
  for (std::size_t i : order) blocks_.push_back(std::move(blocks[i]));
}

BlockSet BlockSet::single(Index dim, std::string name) {
  return BlockSet({ParamBlock{std::move(name), 0, dim}}, dim);
}

BlockSet BlockSet::uniform(Index count, Index size, const std::string& prefix) {
  std::vector<ParamBlock> blocks;
  blocks.reserve(static_cast<std::size_t>(count));
  for (Index i = 0; i < count; ++i)
    blocks.push_back(ParamBlock{prefix + std::to_string(i), i * size, size});
  return BlockSet(std::move(blocks), count * size);
}

std::vector<Eigen::Ref<const ParamVector>> block_view(const ParamVector& w, const BlockSet& blocks) {
  if (w.size() != blocks.dim())
    throw ConfigError("vector of size " + std::to_string(w.size()) +
                      " does not match block dimension " + std::to_string(blocks.dim()));
  std::vector<Eigen::Ref<const ParamVector>> views;
  views.reserve(blocks.size());
  for (const auto& b : blocks) views.emplace_back(w.segment(b.begin, b.size));
  return views;
}

ParamVector assemble(const std::vector<ParamVector>& pieces, const BlockSet& blocks) {
  if (pieces.size() != blocks.size()) throw ConfigError("piece count does not match block count");
  ParamVector out(blocks.dim());
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    if (pieces[i].size() != blocks[i].size)
      throw ConfigError("piece size mismatch for block '" + blocks[i].name + "'");
    out.segment(blocks[i].begin, blocks[i].size) = pieces[i];
  }
  return out;
}

bool TrajectoryRecord::fallback_any() const {
  return std::any_of(fallback_active.begin(), fallback_active.end(), [](bool b) { return b; });
}

void Trajectory::append(TrajectoryRecord rec) {
  if (!records_.empty() && rec.step <= records_.back().step)
    throw ConfigError("trajectory steps must strictly increase");
  records_.push_back(std::move(rec));
}

std::vector<double> Trajectory::min_so_far() const {
  std::vector<double> out;
  out.reserve(records_.size());
  double best = 0.0;
  for (std::size_t i = 0; i < records_.size(); ++i) {
    best = i == 0 ? records_[i].f_value : std::min(best, records_[i].f_value);
    out.push_back(best);
  }
  return out;
}

namespace {
std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}
}  // namespace

std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream) {
  return splitmix64(splitmix64(root) ^ (stream * 0xd1b54a32d192ed03ULL + 1));
}

double Rng::normal() {
  if (spare_) {
    double v = *spare_;
    spare_.reset();
    return v;
  }
  double u1 = 0.0;
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(theta);
  return r * std::cos(theta);
}

std::uint64_t Rng::below(std::uint64_t n) {
  // Rejection sampling keeps the draw unbiased.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x = engine_();
  while (x >= limit) x = engine_();
  return x % n;
}

}  // namespace propopt
