#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "dads/errors.hpp"

namespace dads {

using Vec = std::vector<double>;

inline void require_same_size(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw InvalidInput(std::string(what) + ": dimension mismatch (" + std::to_string(a) + " vs " +
                       std::to_string(b) + ")");
  }
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  require_same_size(a.size(), b.size(), "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double squared_norm(std::span<const double> a) { return dot(a, a); }

inline double norm(std::span<const double> a) { return std::sqrt(squared_norm(a)); }

inline double distance(std::span<const double> a, std::span<const double> b) {
  require_same_size(a.size(), b.size(), "distance");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

inline Vec subtract(std::span<const double> a, std::span<const double> b) {
  require_same_size(a.size(), b.size(), "subtract");
  Vec out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

/// out = a + scale * b
inline Vec axpy(std::span<const double> a, double scale, std::span<const double> b) {
  require_same_size(a.size(), b.size(), "axpy");
  Vec out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + scale * b[i];
  return out;
}

}  // namespace dads
