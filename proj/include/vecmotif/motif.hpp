#pragma once

// Gibbs-style motif search over sequences of vector-valued classes.
//
// Each sequence carries exactly one window of width W. Counts are spread over
// near-duplicate classes through a precomputed similarity dictionary, windows
// are scored by the mean foreground/background ratio of their elements, and a
// proposed window replaces the current one only if the global score of the
// whole motif set strictly improves.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vecmotif/error.hpp"
#include "vecmotif/ingest.hpp"
#include "vecmotif/reduce.hpp"
#include "vecmotif/vecmath.hpp"

namespace vecmotif {

using WeightedClass = std::pair<ClassId, double>;

struct SimilarityDictionary {
  double tau = 0.995;
  // Self entry (weight 1) plus every class with cosine above tau, weighted
  // (cos - tau) / (1 - tau). Sorted by class id.
  std::vector<std::vector<WeightedClass>> neighbors;
  // The same lists rescaled to unit mass; used wherever counts accumulate.
  std::vector<std::vector<WeightedClass>> mass;

  std::size_t size() const noexcept { return neighbors.size(); }
};

inline SimilarityDictionary build_similarity_dictionary(const Vocabulary& vocab, double tau) {
  if (!(tau > 0.0 && tau < 1.0)) throw ArgumentError("similarity cut-off tau must lie in (0, 1)");
  const std::size_t v = vocab.size();
  SimilarityDictionary d;
  d.tau = tau;
  d.neighbors.assign(v, {});
  for (std::size_t a = 0; a < v; ++a) d.neighbors[a].push_back({static_cast<ClassId>(a), 1.0});
  for (std::size_t a = 0; a < v; ++a)
    for (std::size_t b = a + 1; b < v; ++b) {
      double c = cosine(vocab.vec(static_cast<ClassId>(a)), vocab.vec(static_cast<ClassId>(b)));
      if (c > tau) {
        double w = (c - tau) / (1.0 - tau);
        d.neighbors[a].push_back({static_cast<ClassId>(b), w});
        d.neighbors[b].push_back({static_cast<ClassId>(a), w});
      }
    }
  d.mass = d.neighbors;
  for (auto& list : d.mass) {
    std::sort(list.begin(), list.end());
    double total = 0.0;
    for (const auto& [c, w] : list) total += w;
    for (auto& [c, w] : list) w /= total;
  }
  for (auto& list : d.neighbors) std::sort(list.begin(), list.end());
  return d;
}

struct Background {
  std::vector<double> p;  // class probabilities, each >= kFloor
  std::vector<double> b;  // pseudocounts, beta * p
  double B = 0.0;         // total pseudocount mass

  static constexpr double kFloor = 1e-9;
};

/// Corpus-wide class frequencies with similarity-spread counts.
inline Background background(std::span<const ClassSequence> seqs, const SimilarityDictionary& dict, double beta) {
  if (seqs.empty()) throw DomainError("background: no sequences");
  const std::size_t v = dict.size();
  std::vector<double> a(v, 0.0);
  for (const auto& s : seqs)
    for (ClassId e : s.classes) {
      if (e < 0 || static_cast<std::size_t>(e) >= v) throw ArgumentError("background: class id out of range");
      for (const auto& [j, w] : dict.mass[static_cast<std::size_t>(e)]) a[static_cast<std::size_t>(j)] += w;
    }
  double total = std::accumulate(a.begin(), a.end(), 0.0);
  if (total <= 0.0) throw DomainError("background: sequences are empty");

  Background bg;
  bg.p.resize(v);
  std::size_t floored = 0;
  double kept = 0.0;
  for (std::size_t j = 0; j < v; ++j) {
    bg.p[j] = a[j] / total;
    if (bg.p[j] < Background::kFloor)
      ++floored;
    else
      kept += bg.p[j];
  }
  if (floored > 0) {
    double scale = (1.0 - static_cast<double>(floored) * Background::kFloor) / kept;
    for (auto& x : bg.p) x = x < Background::kFloor ? Background::kFloor : x * scale;
  }
  bg.B = beta;
  bg.b.resize(v);
  for (std::size_t j = 0; j < v; ++j) bg.b[j] = beta * bg.p[j];
  return bg;
}

// W x V position-specific probabilities, row-major.
struct Profile {
  std::size_t width = 0;
  std::size_t classes = 0;
  std::vector<double> q;

  double operator()(std::size_t pos, ClassId c) const { return q[pos * classes + static_cast<std::size_t>(c)]; }
};

struct MotifState {
  std::size_t width = 0;
  std::vector<std::size_t> starts;  // one window start per sequence
};

/// q_{i,j} = (c_{i,j} + b_j) / (N - 1 + B), counts taken from every window
/// except the holdout's.
inline Profile profile(std::span<const ClassSequence> seqs, const MotifState& state, std::size_t holdout,
                       const SimilarityDictionary& dict, const Background& bg) {
  const std::size_t n = seqs.size();
  if (n < 2) throw DomainError("profile: need at least 2 sequences");
  if (holdout >= n) throw ArgumentError("profile: holdout out of range");
  const std::size_t w = state.width, v = dict.size();
  Profile prof{w, v, std::vector<double>(w * v, 0.0)};
  for (std::size_t m = 0; m < n; ++m) {
    if (m == holdout) continue;
    for (std::size_t i = 0; i < w; ++i) {
      ClassId e = seqs[m].classes[state.starts[m] + i];
      for (const auto& [j, wt] : dict.mass[static_cast<std::size_t>(e)]) prof.q[i * v + static_cast<std::size_t>(j)] += wt;
    }
  }
  const double denom = static_cast<double>(n - 1) + bg.B;
  for (std::size_t i = 0; i < w; ++i)
    for (std::size_t j = 0; j < v; ++j) prof.q[i * v + j] = (prof.q[i * v + j] + bg.b[j]) / denom;
  return prof;
}

/// A_x: mean over the window of q_{i, e(x+i)} / p(e(x+i)), for every start x.
inline std::vector<double> score_positions(const ClassSequence& seq, const Profile& prof, std::span<const double> p) {
  const std::size_t w = prof.width;
  if (seq.classes.size() < w) throw ArgumentError("score_positions: sequence " + seq.seq_id + " shorter than width");
  std::vector<double> a(seq.classes.size() - w + 1);
  for (std::size_t x = 0; x < a.size(); ++x) {
    double s = 0.0;
    for (std::size_t i = 0; i < w; ++i) {
      ClassId e = seq.classes[x + i];
      s += prof(i, e) / p[static_cast<std::size_t>(e)];
    }
    a[x] = s / static_cast<double>(w);
  }
  return a;
}

/// Draws x with probability A_x / sum(A); uniform if every score is zero.
template <typename Rng>
std::size_t sample_window(std::span<const double> scores, Rng& rng) {
  if (scores.empty()) throw ArgumentError("sample_window: no candidates");
  double total = std::accumulate(scores.begin(), scores.end(), 0.0);
  if (!(total > 0.0)) return std::uniform_int_distribution<std::size_t>(0, scores.size() - 1)(rng);
  double u = std::uniform_real_distribution<double>(0.0, total)(rng);
  double acc = 0.0;
  for (std::size_t x = 0; x < scores.size(); ++x) {
    acc += scores[x];
    if (u < acc) return x;
  }
  // u landed in the rounding slack past the last cumulative sum
  for (std::size_t x = scores.size(); x-- > 0;)
    if (scores[x] > 0.0) return x;
  return scores.size() - 1;
}

/// Cosine similarity mapped from [-1, 1] onto [0, 1].
inline double transformed_similarity(const Vocabulary& vocab, ClassId a, ClassId b) {
  return (cosine(vocab.vec(a), vocab.vec(b)) + 1.0) / 2.0;
}

struct GlobalPattern {
  std::vector<ClassId> pattern;
  std::vector<double> score_vector;
  double global_score = 0.0;
};

/// Per position, the class with the heaviest similarity-spread count (ties to
/// the smaller id), and the mean transformed similarity of every window's
/// element to it.
inline GlobalPattern global_pattern(std::span<const ClassSequence> seqs, const MotifState& state,
                                    const SimilarityDictionary& dict, const Vocabulary& vocab) {
  const std::size_t n = seqs.size(), w = state.width;
  if (n == 0) throw DomainError("global_pattern: no sequences");
  GlobalPattern gp;
  gp.pattern.resize(w);
  gp.score_vector.resize(w);
  std::map<ClassId, double> counts;
  for (std::size_t i = 0; i < w; ++i) {
    counts.clear();
    for (std::size_t m = 0; m < n; ++m) {
      ClassId e = seqs[m].classes[state.starts[m] + i];
      for (const auto& [j, wt] : dict.mass[static_cast<std::size_t>(e)]) counts[j] += wt;
    }
    ClassId best = counts.begin()->first;
    double best_count = counts.begin()->second;
    for (const auto& [j, c] : counts)
      if (c > best_count) {
        best = j;
        best_count = c;
      }
    gp.pattern[i] = best;
    double s = 0.0;
    for (std::size_t m = 0; m < n; ++m) s += transformed_similarity(vocab, seqs[m].classes[state.starts[m] + i], best);
    gp.score_vector[i] = s / static_cast<double>(n);
  }
  gp.global_score = std::accumulate(gp.score_vector.begin(), gp.score_vector.end(), 0.0) / static_cast<double>(w);
  return gp;
}

/// Mean transformed similarity between one window and the global pattern.
inline double local_alignment(std::span<const ClassId> motif, std::span<const ClassId> pattern,
                              const Vocabulary& vocab) {
  if (motif.size() != pattern.size() || motif.empty())
    throw ArgumentError("local_alignment: motif and pattern widths differ");
  double s = 0.0;
  for (std::size_t i = 0; i < motif.size(); ++i) s += transformed_similarity(vocab, motif[i], pattern[i]);
  return s / static_cast<double>(motif.size());
}

/// Over-representation z-score M_s = (N_s - N p_s) / sqrt(N p_s (1 - p_s)).
inline double z_score(std::size_t n_s, std::size_t n, double p_s) {
  if (!(p_s > 0.0 && p_s < 1.0)) throw DomainError("z_score: p_s must lie strictly between 0 and 1");
  if (n_s > n || n == 0) throw DomainError("z_score: need 0 <= N_s <= N and N > 0");
  const double nd = static_cast<double>(n);
  return (static_cast<double>(n_s) - nd * p_s) / std::sqrt(nd * p_s * (1.0 - p_s));
}

struct SignificanceConfig {
  std::size_t samples = 10000;
  double theta = 0.9;
};

struct Significance {
  std::size_t n_s = 0;
  std::size_t n = 0;
  double p_s = 0.0;
  std::size_t background_hits = 0;
  std::size_t background_length = 0;
  double z = 0.0;
};

namespace detail {

// sim[i][j] = transformed similarity of class j to pattern[i]
inline std::vector<std::vector<double>> pattern_similarity(std::span<const ClassId> pattern, const Vocabulary& vocab) {
  std::vector<std::vector<double>> sim(pattern.size(), std::vector<double>(vocab.size()));
  for (std::size_t i = 0; i < pattern.size(); ++i)
    for (std::size_t j = 0; j < vocab.size(); ++j)
      sim[i][j] = transformed_similarity(vocab, static_cast<ClassId>(j), pattern[i]);
  return sim;
}

inline bool has_aligned_window(std::span<const ClassId> seq, const std::vector<std::vector<double>>& sim,
                               double theta) {
  const std::size_t w = sim.size();
  for (std::size_t x = 0; x + w <= seq.size(); ++x) {
    double s = 0.0;
    for (std::size_t i = 0; i < w; ++i) s += sim[i][static_cast<std::size_t>(seq[x + i])];
    if (s / static_cast<double>(w) >= theta) return true;
  }
  return false;
}

}  // namespace detail

/// Counts sequences holding at least one window aligned to the pattern at
/// theta or better, and estimates the background rate of such sequences by
/// Monte Carlo over i.i.d. draws of median length. The rate is smoothed as
/// (hits + 1/2) / (samples + 1) so it stays inside (0, 1).
inline Significance significance(std::span<const ClassSequence> seqs, std::span<const ClassId> pattern,
                                 const Vocabulary& vocab, const Background& bg, const SignificanceConfig& cfg,
                                 std::uint64_t seed) {
  Significance sig;
  sig.n = seqs.size();
  if (sig.n == 0 || pattern.empty()) throw DomainError("significance: nothing to score");
  auto sim = detail::pattern_similarity(pattern, vocab);
  for (const auto& s : seqs)
    if (detail::has_aligned_window(s.classes, sim, cfg.theta)) ++sig.n_s;

  std::vector<std::size_t> lens;
  for (const auto& s : seqs) lens.push_back(s.classes.size());
  std::sort(lens.begin(), lens.end());
  sig.background_length = std::max(lens[(lens.size() - 1) / 2], pattern.size());

  std::mt19937_64 rng(seed);
  std::discrete_distribution<std::size_t> draw(bg.p.begin(), bg.p.end());
  std::vector<ClassId> buf(sig.background_length);
  for (std::size_t k = 0; k < cfg.samples; ++k) {
    for (auto& c : buf) c = static_cast<ClassId>(draw(rng));
    if (detail::has_aligned_window(buf, sim, cfg.theta)) ++sig.background_hits;
  }
  sig.p_s = (static_cast<double>(sig.background_hits) + 0.5) / (static_cast<double>(cfg.samples) + 1.0);
  sig.z = z_score(sig.n_s, sig.n, sig.p_s);
  return sig;
}

struct GibbsConfig {
  std::size_t max_iters = 1000;
  std::size_t patience = 100;
  std::size_t restarts = 40;  // independent random initialisations per run
  double tau = 0.995;
  std::optional<double> beta;  // default sqrt(N)
  std::uint64_t seed = 0;
  SignificanceConfig significance;
};

struct MotifResult {
  std::size_t width = 0;
  std::vector<ClassSequence> sequences;  // the eligible sequences, in input order
  MotifState state;
  std::vector<ClassId> global_pattern;
  std::vector<double> score_vector;
  double global_score = 0.0;
  std::vector<double> local_scores;  // per sequence
  Significance significance;
  std::size_t iterations_run = 0;
  std::size_t accepted = 0;
  std::size_t chains_run = 0;
  std::vector<std::string> excluded;  // ids of sequences shorter than the width
  std::vector<double> score_trace;    // best global score after each iteration
  std::uint64_t seed = 0;
  double beta = 0.0;
};

// A motif set at this distance from 1 cannot be strictly improved on.
inline constexpr double kPerfectScoreSlack = 1e-12;

/// Runs up to cfg.restarts chains from fresh random windows. Within a chain a
/// holdout's sampled window is kept only if the global score strictly rises;
/// a chain ends after max_iters steps or patience consecutive non-improving
/// steps. The best state seen across all chains is returned.
inline MotifResult run_gibbs(std::span<const ClassSequence> input, const Vocabulary& vocab, std::size_t width,
                             const GibbsConfig& cfg) {
  if (width == 0) throw ArgumentError("run_gibbs: width must be positive");
  MotifResult res;
  res.width = width;
  res.seed = cfg.seed;
  for (const auto& s : input) {
    for (ClassId c : s.classes)
      if (c < 0 || static_cast<std::size_t>(c) >= vocab.size())
        throw ArgumentError("run_gibbs: sequence " + s.seq_id + " uses class " + std::to_string(c) +
                            " outside the vocabulary");
    if (s.classes.size() >= width)
      res.sequences.push_back(s);
    else
      res.excluded.push_back(s.seq_id);
  }
  const std::size_t n = res.sequences.size();
  if (n < 2)
    throw DomainError("run_gibbs: need at least 2 sequences of length >= " + std::to_string(width) + ", have " +
                      std::to_string(n));
  std::span<const ClassSequence> seqs(res.sequences);

  res.beta = cfg.beta.value_or(std::sqrt(static_cast<double>(n)));
  auto dict = build_similarity_dictionary(vocab, cfg.tau);
  auto bg = background(seqs, dict, res.beta);

  std::mt19937_64 rng(cfg.seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  MotifState best_state;
  GlobalPattern best;
  bool have_best = false;
  for (std::size_t chain = 0; chain < std::max<std::size_t>(cfg.restarts, 1); ++chain) {
    MotifState state{width, std::vector<std::size_t>(n)};
    for (std::size_t m = 0; m < n; ++m)
      state.starts[m] = std::uniform_int_distribution<std::size_t>(0, seqs[m].classes.size() - width)(rng);

    auto current = global_pattern(seqs, state, dict, vocab);
    std::size_t iters = 0, stale = 0;
    auto record = [&] {
      if (!have_best || current.global_score > best.global_score) {
        best = current;
        best_state = state;
        have_best = true;
      }
    };
    record();
    while (iters < cfg.max_iters && stale < cfg.patience) {
      ++iters;
      std::size_t h = pick(rng);
      auto prof = profile(seqs, state, h, dict, bg);
      auto a = score_positions(seqs[h], prof, bg.p);
      std::size_t x = sample_window(std::span<const double>(a), rng);
      bool improved = false;
      if (x != state.starts[h]) {
        std::size_t old = state.starts[h];
        state.starts[h] = x;
        auto cand = global_pattern(seqs, state, dict, vocab);
        if (cand.global_score > current.global_score) {
          current = std::move(cand);
          improved = true;
          ++res.accepted;
        } else {
          state.starts[h] = old;
        }
      }
      stale = improved ? 0 : stale + 1;
      record();
      res.score_trace.push_back(best.global_score);
    }
    res.iterations_run += iters;
    ++res.chains_run;
    if (best.global_score >= 1.0 - kPerfectScoreSlack) break;
  }

  res.state = best_state;
  res.global_pattern = best.pattern;
  res.score_vector = best.score_vector;
  res.global_score = best.global_score;
  for (std::size_t m = 0; m < n; ++m) {
    std::span<const ClassId> motif(seqs[m].classes.data() + best_state.starts[m], width);
    res.local_scores.push_back(local_alignment(motif, best.pattern, vocab));
  }
  res.significance = significance(seqs, best.pattern, vocab, bg, cfg.significance, cfg.seed ^ 0x5EED5EEDULL);
  return res;
}

inline nlohmann::json motif_result_to_json(const MotifResult& r, const std::vector<PhraseInfo>* sidecar = nullptr) {
  auto motifs = nlohmann::json::array();
  for (std::size_t m = 0; m < r.sequences.size(); ++m) {
    const auto& s = r.sequences[m];
    std::size_t st = r.state.starts[m];
    std::vector<ClassId> classes(s.classes.begin() + static_cast<std::ptrdiff_t>(st),
                                 s.classes.begin() + static_cast<std::ptrdiff_t>(st + r.width));
    auto phrases = nlohmann::json::array();
    if (sidecar)
      for (std::size_t i = st; i < st + r.width; ++i) {
        auto pid = s.origin[i];
        if (pid >= 0 && static_cast<std::size_t>(pid) < sidecar->size())
          phrases.push_back((*sidecar)[static_cast<std::size_t>(pid)].text);
      }
    motifs.push_back({{"seq_id", s.seq_id},
                      {"start", st},
                      {"classes", classes},
                      {"local_score", r.local_scores[m]},
                      {"phrases", phrases}});
  }
  return {{"width", r.width},
          {"global_pattern", r.global_pattern},
          {"score_vector", r.score_vector},
          {"global_score", r.global_score},
          {"z", r.significance.z},
          {"significance",
           {{"n_s", r.significance.n_s},
            {"n", r.significance.n},
            {"p_s", r.significance.p_s},
            {"background_hits", r.significance.background_hits},
            {"background_length", r.significance.background_length}}},
          {"seed", r.seed},
          {"beta", r.beta},
          {"iterations_run", r.iterations_run},
          {"accepted", r.accepted},
          {"chains_run", r.chains_run},
          {"excluded", r.excluded},
          {"motifs", motifs}};
}

}  // namespace vecmotif
