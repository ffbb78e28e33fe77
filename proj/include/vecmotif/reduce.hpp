#pragma once

// Low-dimensional embedding of community centroids that preserves pairwise
// cosine distances, and the Pearson quality metric used to judge it.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vecmotif/communities.hpp"
#include "vecmotif/error.hpp"
#include "vecmotif/ingest.hpp"
#include "vecmotif/vecmath.hpp"

namespace vecmotif {

struct VocabClass {
  ClassId class_id = 0;
  CommunityId community_id = -1;  // -1 when the class has no source community
  std::vector<double> vector;
  std::size_t size = 0;
  std::vector<std::string> examples;
};

struct Vocabulary {
  std::size_t dim = 0;
  std::vector<VocabClass> classes;  // classes[i].class_id == i
  std::optional<double> distance_correlation;
  std::optional<double> stress;

  std::size_t size() const noexcept { return classes.size(); }
  std::span<const double> vec(ClassId c) const { return classes[static_cast<std::size_t>(c)].vector; }
};

inline double cosine_distance(std::span<const double> a, std::span<const double> b) { return 1.0 - cosine(a, b); }

/// Pearson correlation between the pairwise cosine distances (i < j) of two
/// equally sized point sets.
inline double distance_correlation(const std::vector<std::vector<double>>& before,
                                   const std::vector<std::vector<double>>& after) {
  if (before.size() != after.size()) throw ArgumentError("distance_correlation: point sets differ in size");
  if (before.size() < 3) throw DomainError("distance_correlation: need at least 3 points");
  std::vector<double> x, y;
  for (std::size_t i = 0; i < before.size(); ++i)
    for (std::size_t j = i + 1; j < before.size(); ++j) {
      x.push_back(cosine_distance(before[i], before[j]));
      y.push_back(cosine_distance(after[i], after[j]));
    }
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    mx += x[k];
    my += y[k];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxy += (x[k] - mx) * (y[k] - my);
    sxx += (x[k] - mx) * (x[k] - mx);
    syy += (y[k] - my) * (y[k] - my);
  }
  if (sxx <= 0.0 || syy <= 0.0) throw DomainError("distance_correlation: zero variance, correlation undefined");
  return sxy / std::sqrt(sxx * syy);
}

struct ReduceTrace {
  std::vector<double> accepted_stress;  // stress after each accepted step
};

namespace detail {

// Stress over distinct points, pair terms weighted by duplicate multiplicity.
class CosineStress {
 public:
  CosineStress(std::vector<std::vector<double>> target, std::vector<double> mult)
      : target_(std::move(target)), mult_(std::move(mult)) {}

  double value(const std::vector<double>& y, std::size_t dim) const {
    const std::size_t n = mult_.size();
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) {
        double r = target_[i][j] - (1.0 - cos_rows(y, dim, i, j));
        s += mult_[i] * mult_[j] * r * r;
      }
    return s;
  }

  // Rows of y are unit length; d cos(y_i, y_j) / d y_i = y_j - cos * y_i.
  void gradient(const std::vector<double>& y, std::size_t dim, std::vector<double>& g) const {
    const std::size_t n = mult_.size();
    std::fill(g.begin(), g.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) {
        double c = cos_rows(y, dim, i, j);
        double r = target_[i][j] - (1.0 - c);
        double coef = 2.0 * mult_[i] * mult_[j] * r;
        for (std::size_t d = 0; d < dim; ++d) {
          g[i * dim + d] += coef * (y[j * dim + d] - c * y[i * dim + d]);
          g[j * dim + d] += coef * (y[i * dim + d] - c * y[j * dim + d]);
        }
      }
  }

 private:
  static double cos_rows(const std::vector<double>& y, std::size_t dim, std::size_t i, std::size_t j) {
    double s = 0.0;
    for (std::size_t d = 0; d < dim; ++d) s += y[i * dim + d] * y[j * dim + d];
    return std::clamp(s, -1.0, 1.0);
  }

  std::vector<std::vector<double>> target_;
  std::vector<double> mult_;
};

inline void normalize_rows(std::vector<double>& y, std::size_t dim) {
  for (std::size_t i = 0; i * dim < y.size(); ++i) {
    double s = 0.0;
    for (std::size_t d = 0; d < dim; ++d) s += y[i * dim + d] * y[i * dim + d];
    s = std::sqrt(s);
    for (std::size_t d = 0; d < dim; ++d) y[i * dim + d] /= s;
  }
}

}  // namespace detail

/// Minimises sum_{i<j} (D_in - D_out)^2 over cosine distances by gradient
/// descent from a seeded random start. Steps that raise the stress are
/// rejected and the step size halved; accepted steps grow it by 10%.
inline Vocabulary reduce_centroids(const CentroidTable& table, std::size_t dim_out, std::uint64_t seed,
                                   std::size_t iters, ReduceTrace* trace = nullptr) {
  const std::size_t n = table.centroids.size();
  if (n < 2) throw ArgumentError("reduce_centroids: need at least 2 centroids");
  if (dim_out < 2) throw ArgumentError("reduce_centroids: dim_out must be >= 2");
  for (std::size_t i = 0; i < n; ++i)
    if (norm(std::span<const double>(table.centroids[i])) == 0.0)
      throw DomainError("reduce_centroids: centroid of community " + std::to_string(table.community_ids[i]) +
                        " is the zero vector");

  // Coincident centroids (cosine distance 0) share one free point.
  std::vector<std::size_t> rep_of(n);
  std::vector<std::size_t> reps;
  for (std::size_t i = 0; i < n; ++i) {
    rep_of[i] = reps.size();
    for (std::size_t r = 0; r < reps.size(); ++r)
      if (cosine_distance(table.centroids[i], table.centroids[reps[r]]) <= 0.0) {
        rep_of[i] = r;
        break;
      }
    if (rep_of[i] == reps.size()) reps.push_back(i);
  }
  const std::size_t m = reps.size();
  std::vector<double> mult(m, 0.0);
  for (auto r : rep_of) mult[r] += 1.0;
  std::vector<std::vector<double>> target(m, std::vector<double>(m, 0.0));
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = a + 1; b < m; ++b)
      target[a][b] = target[b][a] = cosine_distance(table.centroids[reps[a]], table.centroids[reps[b]]);
  detail::CosineStress stress(std::move(target), std::move(mult));

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> y(m * dim_out);
  for (auto& v : y) v = gauss(rng);
  detail::normalize_rows(y, dim_out);

  double current = stress.value(y, dim_out);
  double step = 1.0 / static_cast<double>(n);
  std::vector<double> g(y.size()), cand(y.size());
  for (std::size_t it = 0; it < iters && m > 1 && current > 0.0; ++it) {
    stress.gradient(y, dim_out, g);
    for (std::size_t k = 0; k < y.size(); ++k) cand[k] = y[k] - step * g[k];
    detail::normalize_rows(cand, dim_out);
    double s = stress.value(cand, dim_out);
    if (s <= current) {
      y.swap(cand);
      current = s;
      step *= 1.1;
      if (trace) trace->accepted_stress.push_back(s);
    } else {
      step *= 0.5;
      if (step < 1e-15) break;
    }
  }

  Vocabulary vocab;
  vocab.dim = dim_out;
  vocab.stress = current;
  for (std::size_t i = 0; i < n; ++i) {
    VocabClass c;
    c.class_id = static_cast<ClassId>(i);
    c.community_id = table.community_ids[i];
    c.size = table.sizes[i];
    auto r = rep_of[i];
    c.vector.assign(y.begin() + static_cast<std::ptrdiff_t>(r * dim_out),
                    y.begin() + static_cast<std::ptrdiff_t>((r + 1) * dim_out));
    vocab.classes.push_back(std::move(c));
  }
  if (n >= 3) {
    std::vector<std::vector<double>> after;
    for (const auto& c : vocab.classes) after.push_back(c.vector);
    try {
      vocab.distance_correlation = distance_correlation(table.centroids, after);
    } catch (const DomainError&) {
      vocab.distance_correlation.reset();
    }
  }
  return vocab;
}

/// Fills each class's examples with the texts of the m members closest to its
/// original-space centroid (angular order, ties by phrase id).
inline void attach_examples(Vocabulary& vocab, const Partition& partition, const EmbeddingTable& table,
                            const CentroidTable& cents, const std::vector<PhraseInfo>& sidecar, std::size_t m) {
  std::map<CommunityId, std::size_t> slot;
  for (std::size_t k = 0; k < cents.community_ids.size(); ++k) slot[cents.community_ids[k]] = k;
  std::vector<std::vector<std::pair<double, PhraseId>>> members(cents.community_ids.size());
  for (std::size_t p = 0; p < partition.membership.size(); ++p) {
    auto it = slot.find(partition.membership[p]);
    if (it == slot.end()) continue;
    double d = 1.0 - cosine(table.row(p), std::span<const double>(cents.centroids[it->second]));
    members[it->second].push_back({d, static_cast<PhraseId>(p)});
  }
  for (std::size_t k = 0; k < members.size(); ++k) {
    auto& list = members[k];
    std::sort(list.begin(), list.end());
    auto& cls = vocab.classes[k];
    cls.examples.clear();
    for (std::size_t e = 0; e < std::min(m, list.size()); ++e) {
      auto pid = static_cast<std::size_t>(list[e].second);
      if (pid < sidecar.size()) cls.examples.push_back(sidecar[pid].text);
    }
  }
}

inline nlohmann::json vocabulary_to_json(const Vocabulary& v) {
  auto classes = nlohmann::json::array();
  for (const auto& c : v.classes)
    classes.push_back({{"class_id", c.class_id},
                       {"community_id", c.community_id},
                       {"vector", c.vector},
                       {"size", c.size},
                       {"examples", c.examples}});
  nlohmann::json j = {{"dim", v.dim}, {"classes", classes}};
  j["distance_correlation"] = v.distance_correlation ? nlohmann::json(*v.distance_correlation) : nlohmann::json();
  j["stress"] = v.stress ? nlohmann::json(*v.stress) : nlohmann::json();
  return j;
}

inline Vocabulary vocabulary_from_json(const nlohmann::json& j) {
  Vocabulary v;
  try {
    v.dim = j.at("dim").get<std::size_t>();
    for (const auto& e : j.at("classes")) {
      VocabClass c;
      c.class_id = e.at("class_id").get<ClassId>();
      c.community_id = e.value("community_id", CommunityId{-1});
      c.vector = e.at("vector").get<std::vector<double>>();
      c.size = e.value("size", std::size_t{0});
      c.examples = e.value("examples", std::vector<std::string>{});
      if (c.class_id != static_cast<ClassId>(v.classes.size()))
        throw FormatError("vocabulary: class ids must be contiguous from 0");
      if (c.vector.size() != v.dim) throw FormatError("vocabulary: class " + std::to_string(c.class_id) + " has wrong dim");
      double sq = 0.0;
      for (double x : c.vector) {
        if (!std::isfinite(x)) throw FormatError("vocabulary: non-finite component");
        sq += x * x;
      }
      if (sq == 0.0) throw FormatError("vocabulary: zero vector for class " + std::to_string(c.class_id));
      v.classes.push_back(std::move(c));
    }
    if (j.contains("distance_correlation") && j["distance_correlation"].is_number())
      v.distance_correlation = j["distance_correlation"].get<double>();
    if (j.contains("stress") && j["stress"].is_number()) v.stress = j["stress"].get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("vocabulary: ") + e.what());
  }
  return v;
}

}  // namespace vecmotif
