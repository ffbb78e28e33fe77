#pragma once

// Two-level map-equation community detection on an undirected weighted graph,
// plus size filtering and original-space centroids.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vecmotif/error.hpp"
#include "vecmotif/ingest.hpp"
#include "vecmotif/knn.hpp"

namespace vecmotif {

using CommunityId = std::int64_t;

struct Partition {
  std::vector<CommunityId> membership;  // indexed by phrase id
  double codelength = 0.0;              // bits

  std::size_t num_communities() const {
    return membership.empty() ? 0 : static_cast<std::size_t>(*std::max_element(membership.begin(), membership.end()) + 1);
  }
  std::vector<std::size_t> sizes() const {
    std::vector<std::size_t> s(num_communities(), 0);
    for (auto c : membership) ++s[static_cast<std::size_t>(c)];
    return s;
  }
};

struct CentroidTable {
  std::vector<CommunityId> community_ids;
  std::vector<std::vector<double>> centroids;
  std::vector<std::size_t> sizes;
};

namespace detail {

inline double plogp(double p) { return p > 0.0 ? p * std::log2(p) : 0.0; }

inline double entropy_of(std::span<const double> rates, double total) {
  double h = 0.0;
  if (total <= 0.0) return 0.0;
  for (double r : rates) h -= plogp(r / total);
  return h;
}

}  // namespace detail

/// Two-level map equation L(M) in bits. Visit rates are node strengths over
/// twice the total edge weight; a module's exit rate is its cut weight over
/// the same normaliser.
inline double map_equation(const PhraseGraph& graph, std::span<const CommunityId> membership) {
  const std::size_t n = graph.num_nodes;
  if (n == 0) throw DomainError("map_equation: empty graph");
  if (membership.size() != n) throw ArgumentError("map_equation: membership does not cover all nodes");

  std::vector<double> strength(n, 0.0);
  double total = 0.0;
  for (const auto& e : graph.edges) {
    strength[static_cast<std::size_t>(e.u)] += e.weight;
    strength[static_cast<std::size_t>(e.v)] += e.weight;
    total += e.weight;
  }
  if (total <= 0.0) return 0.0;

  std::map<CommunityId, std::size_t> index;
  for (auto c : membership) index.emplace(c, index.size());
  const std::size_t m = index.size();

  std::vector<double> exit(m, 0.0);
  for (const auto& e : graph.edges) {
    auto a = index[membership[static_cast<std::size_t>(e.u)]];
    auto b = index[membership[static_cast<std::size_t>(e.v)]];
    if (a != b) {
      exit[a] += e.weight / (2.0 * total);
      exit[b] += e.weight / (2.0 * total);
    }
  }

  std::vector<std::vector<double>> module_rates(m);
  for (std::size_t c = 0; c < m; ++c) module_rates[c].push_back(exit[c]);
  for (std::size_t a = 0; a < n; ++a) module_rates[index[membership[a]]].push_back(strength[a] / (2.0 * total));

  double exit_total = std::accumulate(exit.begin(), exit.end(), 0.0);
  double length = exit_total * detail::entropy_of(exit, exit_total);
  for (const auto& rates : module_rates) {
    double circ = std::accumulate(rates.begin(), rates.end(), 0.0);
    length += circ * detail::entropy_of(rates, circ);
  }
  return length;
}

namespace detail {

// One level of the optimiser. Node ids are internal ranks; adjacency excludes
// self-loops and is sorted by neighbour id.
struct FlowGraph {
  std::vector<double> flow;       // visit rate
  std::vector<double> exit;       // rate of leaving the node
  std::vector<std::vector<std::pair<std::size_t, double>>> adj;  // rates
};

class MapOptimizer {
 public:
  explicit MapOptimizer(const FlowGraph& g)
      : g_(g), module_(g.flow.size()), mod_flow_(g.flow), mod_exit_(g.exit),
        weight_to_(g.flow.size(), 0.0),
        seen_(g.flow.size(), 0) {
    std::iota(module_.begin(), module_.end(), std::size_t{0});
    for (double q : mod_exit_) {
      exit_sum_ += q;
      exit_plogp_ += plogp(q);
    }
    for (std::size_t i = 0; i < mod_exit_.size(); ++i) circ_plogp_ += plogp(mod_exit_[i] + mod_flow_[i]);
  }

  // Module-dependent part of the codelength; the node-entropy term is constant.
  double objective() const { return plogp(exit_sum_) - 2.0 * exit_plogp_ + circ_plogp_; }

  // Repeated passes in node-id order until no node moves. Returns the number
  // of moves made.
  std::size_t optimize(std::size_t max_passes = 1000) {
    constexpr double kMinImprovement = 1e-12;
    std::size_t total_moves = 0;
    std::vector<std::size_t> touched;
    for (std::size_t pass = 0; pass < max_passes; ++pass) {
      std::size_t moves = 0;
      for (std::size_t i = 0; i < g_.flow.size(); ++i) {
        const std::size_t from = module_[i];
        touched.clear();
        auto touch = [&](std::size_t m) {
          if (!seen_[m]) {
            seen_[m] = 1;
            touched.push_back(m);
          }
        };
        touch(from);
        for (auto [j, w] : g_.adj[i]) {
          touch(module_[j]);
          weight_to_[module_[j]] += w;
        }
        std::sort(touched.begin(), touched.end());

        const double w_from = weight_to_[from];
        double best_delta = 0.0;
        std::size_t best = from;
        for (std::size_t to : touched) {
          if (to == from) continue;
          double d = move_delta(i, from, to, w_from, weight_to_[to]);
          if (d < best_delta - kMinImprovement) {
            best_delta = d;
            best = to;
          }
        }
        if (best != from) {
          apply_move(i, from, best, w_from, weight_to_[best]);
          ++moves;
        }
        for (std::size_t mj : touched) {
          weight_to_[mj] = 0.0;
          seen_[mj] = 0;
        }
      }
      total_moves += moves;
      if (moves == 0) break;
    }
    return total_moves;
  }

  const std::vector<std::size_t>& modules() const { return module_; }

 private:
  struct Terms {
    double exit_sum, exit_plogp, circ_plogp;
  };

  Terms after_move(std::size_t i, std::size_t from, std::size_t to, double w_from, double w_to) const {
    double ef = mod_exit_[from], et = mod_exit_[to];
    double ff = mod_flow_[from], ft = mod_flow_[to];
    double ef2 = ef - g_.exit[i] + 2.0 * w_from;
    double et2 = et + g_.exit[i] - 2.0 * w_to;
    double ff2 = ff - g_.flow[i], ft2 = ft + g_.flow[i];
    return {exit_sum_ - ef - et + ef2 + et2,
            exit_plogp_ - plogp(ef) - plogp(et) + plogp(ef2) + plogp(et2),
            circ_plogp_ - plogp(ef + ff) - plogp(et + ft) + plogp(ef2 + ff2) + plogp(et2 + ft2)};
  }

  double move_delta(std::size_t i, std::size_t from, std::size_t to, double w_from, double w_to) const {
    auto t = after_move(i, from, to, w_from, w_to);
    return (plogp(t.exit_sum) - 2.0 * t.exit_plogp + t.circ_plogp) - objective();
  }

  void apply_move(std::size_t i, std::size_t from, std::size_t to, double w_from, double w_to) {
    auto t = after_move(i, from, to, w_from, w_to);
    mod_exit_[from] += -g_.exit[i] + 2.0 * w_from;
    mod_exit_[to] += g_.exit[i] - 2.0 * w_to;
    mod_flow_[from] -= g_.flow[i];
    mod_flow_[to] += g_.flow[i];
    if (mod_exit_[from] < 0.0) mod_exit_[from] = 0.0;
    if (mod_exit_[to] < 0.0) mod_exit_[to] = 0.0;
    exit_sum_ = t.exit_sum;
    exit_plogp_ = t.exit_plogp;
    circ_plogp_ = t.circ_plogp;
    module_[i] = to;
  }

  const FlowGraph& g_;
  std::vector<std::size_t> module_;
  std::vector<double> mod_flow_, mod_exit_;
  std::vector<double> weight_to_;
  std::vector<char> seen_;
  double exit_sum_ = 0.0, exit_plogp_ = 0.0, circ_plogp_ = 0.0;
};

// Collapses modules into supernodes, numbered by their lowest member id.
inline FlowGraph aggregate(const FlowGraph& g, const std::vector<std::size_t>& module,
                           std::vector<std::size_t>& node_to_super) {
  const std::size_t n = g.flow.size();
  std::vector<std::size_t> relabel(n, SIZE_MAX);
  std::size_t next = 0;
  node_to_super.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (relabel[module[i]] == SIZE_MAX) relabel[module[i]] = next++;
    node_to_super[i] = relabel[module[i]];
  }
  FlowGraph out;
  out.flow.assign(next, 0.0);
  out.exit.assign(next, 0.0);
  std::vector<std::map<std::size_t, double>> links(next);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t a = node_to_super[i];
    out.flow[a] += g.flow[i];
    for (auto [j, w] : g.adj[i]) {
      std::size_t b = node_to_super[j];
      if (a != b) {
        links[a][b] += w;
        out.exit[a] += w;
      }
    }
  }
  out.adj.resize(next);
  for (std::size_t a = 0; a < next; ++a) out.adj[a].assign(links[a].begin(), links[a].end());
  return out;
}

// Community ids ordered by descending size, ties by smaller minimum member.
inline std::vector<CommunityId> canonicalize(const std::vector<std::size_t>& raw) {
  std::map<std::size_t, std::pair<std::size_t, std::size_t>> stats;  // label -> (size, min member)
  for (std::size_t i = 0; i < raw.size(); ++i) {
    auto [it, fresh] = stats.emplace(raw[i], std::pair{std::size_t{0}, i});
    ++it->second.first;
  }
  std::vector<std::pair<std::size_t, std::pair<std::size_t, std::size_t>>> order(stats.begin(), stats.end());
  std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
    if (a.second.first != b.second.first) return a.second.first > b.second.first;
    return a.second.second < b.second.second;
  });
  std::map<std::size_t, CommunityId> id;
  for (std::size_t k = 0; k < order.size(); ++k) id[order[k].first] = static_cast<CommunityId>(k);
  std::vector<CommunityId> out(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) out[i] = id[raw[i]];
  return out;
}

}  // namespace detail

/// Greedy map-equation minimisation with an explicit first-level visit order.
/// Node moves and aggregation repeat until a level makes no move.
inline Partition detect_communities_ordered(const PhraseGraph& graph, std::span<const std::size_t> order) {
  const std::size_t n = graph.num_nodes;
  if (n == 0) throw DomainError("detect_communities: empty graph");
  if (order.size() != n) throw ArgumentError("detect_communities: visit order must cover all nodes");

  std::vector<std::size_t> rank(n);
  for (std::size_t r = 0; r < n; ++r) rank[order[r]] = r;

  double total = 0.0;
  for (const auto& e : graph.edges) total += e.weight;

  detail::FlowGraph level;
  level.flow.assign(n, 0.0);
  level.exit.assign(n, 0.0);
  level.adj.resize(n);
  if (total > 0.0) {
    for (const auto& e : graph.edges) {
      if (e.u == e.v) continue;
      double rate = e.weight / (2.0 * total);
      auto a = rank[static_cast<std::size_t>(e.u)], b = rank[static_cast<std::size_t>(e.v)];
      level.adj[a].push_back({b, rate});
      level.adj[b].push_back({a, rate});
    }
    for (std::size_t a = 0; a < n; ++a) {
      std::sort(level.adj[a].begin(), level.adj[a].end());
      for (auto [b, rate] : level.adj[a]) level.flow[a] += rate;
      level.exit[a] = level.flow[a];
    }
  }

  // internal rank -> current supernode
  std::vector<std::size_t> assignment(n);
  std::iota(assignment.begin(), assignment.end(), std::size_t{0});
  for (;;) {
    detail::MapOptimizer opt(level);
    if (opt.optimize() == 0) break;
    std::vector<std::size_t> to_super;
    auto next = detail::aggregate(level, opt.modules(), to_super);
    for (auto& a : assignment) a = to_super[a];
    if (next.flow.size() == level.flow.size()) break;
    level = std::move(next);
  }

  std::vector<std::size_t> raw(n);
  for (std::size_t v = 0; v < n; ++v) raw[v] = assignment[rank[v]];

  Partition best{detail::canonicalize(raw), 0.0};
  best.codelength = map_equation(graph, best.membership);

  // Greedy search starts from singletons; the one-module partition is the
  // other trivial bound and is checked explicitly.
  Partition one{std::vector<CommunityId>(n, 0), 0.0};
  one.codelength = map_equation(graph, one.membership);
  if (one.codelength < best.codelength) best = std::move(one);
  return best;
}

inline Partition detect_communities(const PhraseGraph& graph, std::uint64_t seed) {
  std::vector<std::size_t> order(graph.num_nodes);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  return detect_communities_ordered(graph, order);
}

/// Communities with at least min_size members.
inline std::set<CommunityId> filter_communities(const Partition& partition, std::size_t min_size) {
  if (min_size < 1) throw ArgumentError("filter_communities: min_size must be >= 1");
  std::set<CommunityId> keep;
  auto sizes = partition.sizes();
  for (std::size_t c = 0; c < sizes.size(); ++c)
    if (sizes[c] >= min_size) keep.insert(static_cast<CommunityId>(c));
  return keep;
}

inline CentroidTable centroids(const Partition& partition, const std::set<CommunityId>& retained,
                               const EmbeddingTable& table) {
  if (partition.membership.size() != table.rows())
    throw ArgumentError("centroids: partition covers " + std::to_string(partition.membership.size()) +
                        " phrases but the table has " + std::to_string(table.rows()));
  std::map<CommunityId, std::size_t> slot;
  CentroidTable out;
  for (auto c : retained) {
    if (c < 0 || static_cast<std::size_t>(c) >= partition.num_communities())
      throw ArgumentError("centroids: unknown community " + std::to_string(c));
    slot[c] = out.community_ids.size();
    out.community_ids.push_back(c);
    out.centroids.emplace_back(table.dim(), 0.0);
    out.sizes.push_back(0);
  }
  for (std::size_t p = 0; p < partition.membership.size(); ++p) {
    auto it = slot.find(partition.membership[p]);
    if (it == slot.end()) continue;
    auto& acc = out.centroids[it->second];
    auto row = table.row(p);
    for (std::size_t d = 0; d < acc.size(); ++d) acc[d] += row[d];
    ++out.sizes[it->second];
  }
  for (std::size_t s = 0; s < out.centroids.size(); ++s)
    for (auto& v : out.centroids[s]) v /= static_cast<double>(out.sizes[s]);
  return out;
}

inline nlohmann::json partition_to_json(const Partition& p) {
  nlohmann::json members = nlohmann::json::object();
  for (std::size_t i = 0; i < p.membership.size(); ++i) members[std::to_string(i)] = p.membership[i];
  return {{"codelength", p.codelength}, {"membership", members}};
}

inline Partition partition_from_json(const nlohmann::json& j) {
  Partition p;
  try {
    p.codelength = j.at("codelength").get<double>();
    const auto& m = j.at("membership");
    p.membership.assign(m.size(), -1);
    for (const auto& [key, val] : m.items()) {
      std::size_t id = std::stoul(key);
      if (id >= p.membership.size()) throw FormatError("partition: phrase ids are not contiguous");
      p.membership[id] = val.get<CommunityId>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("partition: ") + e.what());
  } catch (const std::logic_error&) {
    throw FormatError("partition: membership keys must be phrase ids");
  }
  for (auto c : p.membership)
    if (c < 0) throw FormatError("partition: negative or missing community id");
  return p;
}

}  // namespace vecmotif
