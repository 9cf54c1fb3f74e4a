#pragma once

#include "propopt/core.hpp"
#include "propopt/objectives.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

namespace testing_support {

using propopt::Index;
using propopt::ParamVector;

inline std::uint64_t ulps(double x, double y) {
  if (x == y) return 0;
  if (std::signbit(x) != std::signbit(y)) return std::numeric_limits<std::uint64_t>::max();
  const auto a = std::bit_cast<std::uint64_t>(std::abs(x));
  const auto b = std::bit_cast<std::uint64_t>(std::abs(y));
  return a > b ? a - b : b - a;
}

inline double rel_err(double x, double y) {
  const double scale = std::max(std::abs(x), std::abs(y));
  return scale == 0.0 ? 0.0 : std::abs(x - y) / scale;
}

// Central differences with step h = rel_step * (1 + |w_i|).
inline ParamVector fd_gradient(const propopt::Objective& obj, const ParamVector& w, double rel_step = 1e-5) {
  ParamVector g(w.size());
  for (Index i = 0; i < w.size(); ++i) {
    const double h = rel_step * (1.0 + std::abs(w[i]));
    ParamVector up = w, dn = w;
    up[i] += h;
    dn[i] -= h;
    g[i] = (obj.value(up) - obj.value(dn)) / (2.0 * h);
  }
  return g;
}

inline ParamVector random_vector(propopt::Rng& rng, Index dim, double lo, double hi) {
  ParamVector v(dim);
  for (Index i = 0; i < dim; ++i) v[i] = rng.uniform(lo, hi);
  return v;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::size_t count_lines(const std::filesystem::path& p) {
  const std::string s = read_file(p);
  std::size_t n = 0;
  for (char c : s) n += c == '\n';
  return n;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("propopt_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testing_support
