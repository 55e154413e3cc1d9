#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace curec {

// Configuration problems (bad fields, inconsistent manifests). CLI exit 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed input files. CLI exit 2.
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Non-finite losses or other numerical breakdown. CLI exit 3.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using Vec = std::vector<double>;
using Rng = std::mt19937_64;

// Dense row-major matrix. Everything in this project is small enough that a
// flat double buffer is the right representation.
struct Mat {
  int rows = 0;
  int cols = 0;
  Vec v;

  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), v(static_cast<size_t>(r) * c, 0.0) {}

  double& at(int r, int c) { return v[static_cast<size_t>(r) * cols + c]; }
  double at(int r, int c) const { return v[static_cast<size_t>(r) * cols + c]; }

  double* row(int r) { return v.data() + static_cast<size_t>(r) * cols; }
  const double* row(int r) const { return v.data() + static_cast<size_t>(r) * cols; }

  Vec row_vec(int r) const {
    return Vec(row(r), row(r) + cols);
  }
  void set_row(int r, std::span<const double> x) {
    for (int c = 0; c < cols; ++c) at(r, c) = x[c];
  }
  void zero() { std::fill(v.begin(), v.end(), 0.0); }
};

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline double cosine(std::span<const double> a, std::span<const double> b) {
  double na = norm(a), nb = norm(b);
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot(a, b) / (na * nb);
}

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

inline double uniform_real(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline std::int64_t uniform_int(Rng& rng, std::int64_t lo, std::int64_t hi) {
  return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng);
}

// FNV-1a, used for scenario hashes and stable per-user split keys.
inline std::uint64_t fnv1a(std::span<const char> bytes,
                           std::uint64_t h = 1469598103934665603ULL) {
  for (char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::uint64_t fnv1a_u64(std::uint64_t x, std::uint64_t h = 1469598103934665603ULL) {
  for (int i = 0; i < 8; ++i) {
    h ^= (x >> (8 * i)) & 0xff;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace curec
