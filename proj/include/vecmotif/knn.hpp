#pragma once

// Exact angular k-nearest-neighbour search and the symmetrised phrase graph.

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "vecmotif/error.hpp"
#include "vecmotif/ingest.hpp"
#include "vecmotif/vecmath.hpp"

namespace vecmotif {

struct Neighbor {
  PhraseId id = 0;
  double distance = 0.0;  // radians

  friend bool operator<(const Neighbor& a, const Neighbor& b) {
    return a.distance < b.distance || (a.distance == b.distance && a.id < b.id);
  }
  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

struct NeighborList {
  PhraseId query = 0;
  std::vector<Neighbor> neighbors;

  friend bool operator==(const NeighborList&, const NeighborList&) = default;
};

struct Edge {
  PhraseId u = 0;
  PhraseId v = 0;
  double weight = 0.0;

  friend bool operator==(const Edge&, const Edge&) = default;
};

// Undirected, u < v, edges sorted by (u, v).
struct PhraseGraph {
  std::size_t num_nodes = 0;
  std::vector<Edge> edges;
};

namespace detail {

// 2 atan2(|u - v|, |u + v|) on unit vectors: equals arccos(u . v) but stays
// exact for identical and antipodal directions.
inline double unit_angle(std::span<const double> u, std::span<const double> v) {
  double diff = 0.0, sum = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    diff += (u[i] - v[i]) * (u[i] - v[i]);
    sum += (u[i] + v[i]) * (u[i] + v[i]);
  }
  return 2.0 * std::atan2(std::sqrt(diff), std::sqrt(sum));
}

template <typename T>
std::vector<double> unit(std::span<const T> a, double n) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = static_cast<double>(a[i]) / n;
  return out;
}

}  // namespace detail

/// Angle between two non-zero vectors, in [0, pi].
template <typename T, typename U>
double angular_distance(std::span<const T> u, std::span<const U> v) {
  if (u.size() != v.size()) throw DomainError("angular_distance: dimension mismatch");
  double nu = norm(u), nv = norm(v);
  if (nu == 0.0 || nv == 0.0) throw DomainError("angular_distance: zero-norm vector");
  auto a = detail::unit(u, nu);
  auto b = detail::unit(v, nv);
  return detail::unit_angle(a, b);
}

/// Exact k nearest neighbours of every row, excluding the row itself.
/// Output is ordered by query id; neighbours by (distance, id).
inline std::vector<NeighborList> knn_exact(const EmbeddingTable& table, std::size_t k) {
  const std::size_t n = table.rows(), dim = table.dim();
  if (k == 0 || k >= n) throw ArgumentError("knn_exact: need 0 < k < rows (k=" + std::to_string(k) + ")");

  std::vector<double> units(n * dim);
  for (std::size_t i = 0; i < n; ++i) {
    auto row = table.row(i);
    auto u = detail::unit(row, norm(row));
    std::copy(u.begin(), u.end(), units.begin() + static_cast<std::ptrdiff_t>(i * dim));
  }
  auto unit_row = [&](std::size_t i) { return std::span<const double>(units.data() + i * dim, dim); };

  std::vector<NeighborList> out(n);
  std::vector<Neighbor> cand;
  cand.reserve(n - 1);
  for (std::size_t q = 0; q < n; ++q) {
    cand.clear();
    for (std::size_t r = 0; r < n; ++r)
      if (r != q) cand.push_back({static_cast<PhraseId>(r), detail::unit_angle(unit_row(q), unit_row(r))});
    std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k), cand.end());
    out[q].query = static_cast<PhraseId>(q);
    out[q].neighbors.assign(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k));
  }
  return out;
}

/// Symmetrises directed KNN pairs into undirected edges weighted 1 - d/pi.
inline PhraseGraph build_graph(const std::vector<NeighborList>& lists) {
  std::map<std::pair<PhraseId, PhraseId>, double> merged;
  PhraseId max_id = -1;
  for (const auto& l : lists) {
    max_id = std::max(max_id, l.query);
    for (const auto& nb : l.neighbors) {
      max_id = std::max(max_id, nb.id);
      if (nb.id == l.query) continue;
      auto key = std::minmax(l.query, nb.id);
      double w = 1.0 - nb.distance / std::numbers::pi;
      // Both directions carry the same distance; keep the first seen.
      merged.emplace(std::pair{key.first, key.second}, w);
    }
  }
  PhraseGraph g;
  g.num_nodes = static_cast<std::size_t>(max_id + 1);
  g.edges.reserve(merged.size());
  for (const auto& [key, w] : merged) g.edges.push_back({key.first, key.second, w});
  return g;
}

inline std::string neighbors_to_jsonl(const std::vector<NeighborList>& lists) {
  std::string out;
  for (const auto& l : lists) {
    auto nbs = nlohmann::json::array();
    for (const auto& nb : l.neighbors) nbs.push_back({nb.id, nb.distance});
    out += nlohmann::json{{"query", l.query}, {"neighbors", nbs}}.dump();
    out += '\n';
  }
  return out;
}

inline std::vector<NeighborList> neighbors_from_jsonl(std::istream& in) {
  std::vector<NeighborList> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto j = nlohmann::json::parse(line);
      NeighborList l;
      l.query = j.at("query").get<PhraseId>();
      for (const auto& p : j.at("neighbors")) l.neighbors.push_back({p.at(0).get<PhraseId>(), p.at(1).get<double>()});
      out.push_back(std::move(l));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("neighbors line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace vecmotif
