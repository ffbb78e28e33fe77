#pragma once

#include <cmath>
#include <cstddef>
#include <span>

namespace vecmotif {

template <typename T, typename U>
double dot(std::span<const T> a, std::span<const U> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  return s;
}

template <typename T>
double norm(std::span<const T> a) {
  return std::sqrt(dot(a, a));
}

// Cosine similarity clamped to [-1, 1]. Callers guarantee non-zero inputs.
template <typename T, typename U>
double cosine(std::span<const T> a, std::span<const U> b) {
  double c = dot(a, b) / (norm(a) * norm(b));
  if (c > 1.0) c = 1.0;
  if (c < -1.0) c = -1.0;
  return c;
}

}  // namespace vecmotif
