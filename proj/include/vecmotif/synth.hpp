#pragma once

// Synthetic corpora of 2-d class vectors with one planted motif per sequence.

#include <algorithm>
#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vecmotif/error.hpp"
#include "vecmotif/ingest.hpp"
#include "vecmotif/motif.hpp"
#include "vecmotif/reduce.hpp"
#include "vecmotif/vecmath.hpp"

namespace vecmotif {

struct SynthConfig {
  std::size_t n_sequences = 22;
  std::size_t vocab_size = 50;
  std::size_t dim = 2;
  std::vector<ClassId> motif_classes{3, 5, 7};
  std::size_t min_len = 15;
  std::size_t max_len = 25;
  double max_pairwise_motif_cos = 0.4;
  std::uint64_t seed = 0;

  void validate() const {
    if (n_sequences == 0) throw ArgumentError("synth: n_sequences must be positive");
    if (dim < 2) throw ArgumentError("synth: dim must be >= 2");
    if (motif_classes.empty()) throw ArgumentError("synth: motif_classes is empty");
    std::set<ClassId> uniq(motif_classes.begin(), motif_classes.end());
    if (uniq.size() != motif_classes.size()) throw ArgumentError("synth: motif classes must be distinct");
    for (auto c : motif_classes)
      if (c < 0 || static_cast<std::size_t>(c) >= vocab_size)
        throw ArgumentError("synth: motif class " + std::to_string(c) + " outside the vocabulary");
    if (!(max_pairwise_motif_cos > 0.0 && max_pairwise_motif_cos < 1.0))
      throw ArgumentError("synth: max_pairwise_motif_cos must lie in (0, 1)");
    if (min_len < motif_classes.size() || max_len < min_len)
      throw ArgumentError("synth: need motif width <= min_len <= max_len");
  }
};

struct SynthCorpus {
  Vocabulary vocab;
  std::vector<ClassSequence> sequences;
  std::map<std::string, std::size_t> planted;  // seq_id -> motif start
};

/// Vectors are uniform in [-1,1] x [0,1] (further dimensions uniform in
/// [-1,1]); motif vectors are redrawn until every pair has cosine at most the
/// configured bound.
inline SynthCorpus generate(const SynthConfig& cfg) {
  cfg.validate();
  constexpr std::size_t kMaxAttempts = 100000;
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> sym(-1.0, 1.0), pos(0.0, 1.0);

  auto draw_vector = [&] {
    std::vector<double> v(cfg.dim);
    do {
      for (std::size_t d = 0; d < cfg.dim; ++d) v[d] = d == 1 ? pos(rng) : sym(rng);
    } while (norm(std::span<const double>(v)) == 0.0);
    return v;
  };

  SynthCorpus out;
  out.vocab.dim = cfg.dim;
  for (std::size_t c = 0; c < cfg.vocab_size; ++c)
    out.vocab.classes.push_back({static_cast<ClassId>(c), -1, draw_vector(), 0, {}});

  std::size_t attempts = 0;
  for (;;) {
    bool ok = true;
    for (std::size_t a = 0; a < cfg.motif_classes.size() && ok; ++a)
      for (std::size_t b = a + 1; b < cfg.motif_classes.size() && ok; ++b)
        ok = cosine(out.vocab.vec(cfg.motif_classes[a]), out.vocab.vec(cfg.motif_classes[b])) <=
             cfg.max_pairwise_motif_cos;
    if (ok) break;
    if (++attempts >= kMaxAttempts)
      throw DomainError("synth: could not place motif vectors within the cosine bound after " +
                        std::to_string(kMaxAttempts) + " attempts");
    for (auto c : cfg.motif_classes) out.vocab.classes[static_cast<std::size_t>(c)].vector = draw_vector();
  }

  const std::size_t w = cfg.motif_classes.size();
  std::uniform_int_distribution<std::size_t> len_dist(cfg.min_len, cfg.max_len);
  std::uniform_int_distribution<ClassId> cls(0, static_cast<ClassId>(cfg.vocab_size) - 1);
  const std::size_t width = std::to_string(cfg.n_sequences - 1).size();
  for (std::size_t s = 0; s < cfg.n_sequences; ++s) {
    std::string id = std::to_string(s);
    id = "s" + std::string(width - id.size(), '0') + id;
    ClassSequence seq;
    std::size_t start = 0;
    for (std::size_t tries = 0;; ++tries) {
      if (tries >= kMaxAttempts) throw DomainError("synth: could not avoid duplicate motif copies");
      std::size_t len = len_dist(rng);
      seq.classes.resize(len);
      for (auto& c : seq.classes) c = cls(rng);
      start = std::uniform_int_distribution<std::size_t>(0, len - w)(rng);
      std::copy(cfg.motif_classes.begin(), cfg.motif_classes.end(), seq.classes.begin() + static_cast<std::ptrdiff_t>(start));
      auto hit = std::search(seq.classes.begin(), seq.classes.end(), cfg.motif_classes.begin(), cfg.motif_classes.end());
      auto second = std::search(hit + 1, seq.classes.end(), cfg.motif_classes.begin(), cfg.motif_classes.end());
      if (second == seq.classes.end()) break;
    }
    seq.seq_id = id;
    seq.origin.assign(seq.classes.size(), -1);
    out.planted[id] = start;
    out.sequences.push_back(std::move(seq));
  }
  return out;
}

struct Recovery {
  std::size_t exact_hits = 0;
  bool pattern_match = false;
};

inline Recovery evaluate_recovery(const MotifResult& result, const std::map<std::string, std::size_t>& planted,
                                  std::span<const ClassId> motif_classes) {
  if (result.sequences.size() != planted.size())
    throw ValidationError("evaluate_recovery: result covers " + std::to_string(result.sequences.size()) +
                          " sequences, planted set has " + std::to_string(planted.size()));
  Recovery r;
  for (std::size_t m = 0; m < result.sequences.size(); ++m) {
    auto it = planted.find(result.sequences[m].seq_id);
    if (it == planted.end())
      throw ValidationError("evaluate_recovery: sequence " + result.sequences[m].seq_id + " has no planted motif");
    if (result.state.starts[m] == it->second) ++r.exact_hits;
  }
  r.pattern_match = std::equal(result.global_pattern.begin(), result.global_pattern.end(), motif_classes.begin(),
                               motif_classes.end());
  return r;
}

inline nlohmann::json synth_sequences_to_json(const SynthCorpus& c) {
  auto j = sequences_to_json(c.sequences);
  for (auto& s : j["sequences"]) s["planted"] = c.planted.at(s["seq_id"].get<std::string>());
  return j;
}

inline std::map<std::string, std::size_t> planted_from_json(const nlohmann::json& j) {
  std::map<std::string, std::size_t> out;
  for (const auto& s : j.at("sequences"))
    if (s.contains("planted")) out[s.at("seq_id").get<std::string>()] = s["planted"].get<std::size_t>();
  return out;
}

}  // namespace vecmotif
