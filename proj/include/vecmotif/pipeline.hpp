#pragma once

// File-to-file pipeline stages. Each stage reads its inputs, validates them,
// runs one module and writes one output; identical inputs and seeds give
// byte-identical outputs.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vecmotif/communities.hpp"
#include "vecmotif/error.hpp"
#include "vecmotif/ingest.hpp"
#include "vecmotif/json_io.hpp"
#include "vecmotif/knn.hpp"
#include "vecmotif/motif.hpp"
#include "vecmotif/reduce.hpp"
#include "vecmotif/report.hpp"
#include "vecmotif/synth.hpp"

namespace vecmotif::pipeline {

struct KnnParams {
  std::string embeddings;
  std::string out;
  std::size_t k = 10;
};

inline void run_knn(const KnnParams& p) {
  auto table = read_embeddings(p.embeddings);
  auto lists = knn_exact(table, p.k);
  write_text_file(p.out, neighbors_to_jsonl(lists));
}

struct CommunitiesParams {
  std::string neighbors;
  std::string out;
  std::uint64_t seed = 0;
};

inline void run_communities(const CommunitiesParams& p) {
  std::ifstream in(p.neighbors);
  if (!in) throw IoError("cannot open " + p.neighbors);
  auto lists = neighbors_from_jsonl(in);
  for (std::size_t i = 0; i < lists.size(); ++i)
    if (lists[i].query != static_cast<PhraseId>(i))
      throw FormatError("neighbors: line " + std::to_string(i + 1) + " is not query " + std::to_string(i));
  auto graph = build_graph(lists);
  if (graph.num_nodes != lists.size()) throw FormatError("neighbors: lists do not cover every referenced phrase");
  auto part = detect_communities(graph, p.seed);
  auto j = partition_to_json(part);
  j["params"] = {{"seed", p.seed},
                 {"k", lists.empty() ? 0 : lists.front().neighbors.size()},
                 {"communities", part.num_communities()}};
  write_json_file(p.out, j);
}

struct ReduceParams {
  std::string partition;
  std::string embeddings;
  std::string out;
  std::optional<std::string> sidecar;
  std::size_t min_community_size = 5;
  std::size_t dim = 5;
  std::uint64_t seed = 0;
  std::size_t iters = 2000;
  std::size_t examples = 5;
};

inline void run_reduce(const ReduceParams& p) {
  auto pj = read_json_file(p.partition);
  auto part = partition_from_json(pj);
  auto table = read_embeddings(p.embeddings);
  auto keep = filter_communities(part, p.min_community_size);
  auto cents = centroids(part, keep, table);
  auto vocab = reduce_centroids(cents, p.dim, p.seed, p.iters);
  if (p.sidecar) {
    auto side = sidecar_from_json(read_json_file(*p.sidecar));
    attach_examples(vocab, part, table, cents, side, p.examples);
  }
  auto j = vocabulary_to_json(vocab);
  j["params"] = {{"min_community_size", p.min_community_size},
                 {"dim", p.dim},
                 {"seed", p.seed},
                 {"iters", p.iters},
                 {"communities_total", part.num_communities()},
                 {"communities_retained", keep.size()},
                 {"partition", pj.value("params", nlohmann::json::object())}};
  write_json_file(p.out, j);
}

struct IngestParams {
  std::string corpus;
  std::string partition;
  std::string vocab;
  std::string out;
  std::optional<std::string> embeddings;
  std::optional<std::string> write_sidecar;
  std::size_t min_len = 10;
};

inline void run_ingest(const IngestParams& p) {
  auto corpus = parse_corpus(p.corpus);
  auto part = partition_from_json(read_json_file(p.partition));
  auto vj = read_json_file(p.vocab);
  auto vocab = vocabulary_from_json(vj);

  std::size_t phrases = 0;
  for (const auto& c : corpus) phrases += c.turns.size();
  if (part.membership.size() != phrases)
    throw ValidationError("partition covers " + std::to_string(part.membership.size()) + " phrases, corpus has " +
                          std::to_string(phrases));
  if (p.embeddings) {
    auto table = read_embeddings(*p.embeddings);
    if (table.rows() != phrases)
      throw ValidationError("embedding table has " + std::to_string(table.rows()) + " rows, corpus has " +
                            std::to_string(phrases) + " phrases");
  }

  std::map<CommunityId, ClassId> class_of;
  for (const auto& c : vocab.classes)
    if (c.community_id >= 0) class_of[c.community_id] = c.class_id;
  std::vector<ClassId> assignment(phrases, kUnmapped);
  for (std::size_t i = 0; i < phrases; ++i) {
    auto it = class_of.find(part.membership[i]);
    if (it != class_of.end()) assignment[i] = it->second;
  }
  auto seqs = build_class_sequences(corpus, assignment, p.min_len);
  auto j = sequences_to_json(seqs);
  std::size_t used = 0;
  {
    std::vector<bool> seen(vocab.size(), false);
    for (const auto& s : seqs)
      for (auto c : s.classes) seen[static_cast<std::size_t>(c)] = true;
    used = static_cast<std::size_t>(std::count(seen.begin(), seen.end(), true));
  }
  j["params"] = {{"min_len", p.min_len},
                 {"conversations", corpus.size()},
                 {"sequences", seqs.size()},
                 {"classes_used", used},
                 {"vocab", vj.value("params", nlohmann::json::object())}};
  write_json_file(p.out, j);
  if (p.write_sidecar) write_json_file(*p.write_sidecar, sidecar_to_json(corpus_sidecar(corpus)));
}

struct MineParams {
  std::string sequences;
  std::string vocab;
  std::string out;
  std::optional<std::string> sidecar;
  std::size_t width = 3;
  std::vector<std::uint64_t> seeds{0};
  GibbsConfig gibbs;
};

inline MotifResult mine(const std::vector<ClassSequence>& seqs, const Vocabulary& vocab, const MineParams& p) {
  if (p.seeds.empty()) throw ArgumentError("mine: at least one seed is required");
  std::optional<MotifResult> best;
  for (auto seed : p.seeds) {
    auto cfg = p.gibbs;
    cfg.seed = seed;
    auto r = run_gibbs(seqs, vocab, p.width, cfg);
    if (!best || r.global_score > best->global_score) best = std::move(r);
  }
  return std::move(*best);
}

inline nlohmann::json mine_params_json(const MineParams& p) {
  return {{"width", p.width},
          {"seeds", p.seeds},
          {"tau", p.gibbs.tau},
          {"beta", p.gibbs.beta ? nlohmann::json(*p.gibbs.beta) : nlohmann::json("sqrt(N)")},
          {"max_iters", p.gibbs.max_iters},
          {"patience", p.gibbs.patience},
          {"restarts", p.gibbs.restarts},
          {"theta", p.gibbs.significance.theta},
          {"samples", p.gibbs.significance.samples}};
}

inline void run_mine(const MineParams& p) {
  auto sj = read_json_file(p.sequences);
  auto seqs = sequences_from_json(sj);
  auto vocab = vocabulary_from_json(read_json_file(p.vocab));
  std::optional<std::vector<PhraseInfo>> side;
  if (p.sidecar) side = sidecar_from_json(read_json_file(*p.sidecar));
  auto r = mine(seqs, vocab, p);
  auto j = motif_result_to_json(r, side ? &*side : nullptr);
  j["params"] = mine_params_json(p);
  j["params"]["input"] = sj.value("params", nlohmann::json::object());
  write_json_file(p.out, j);
}

struct SynthParams {
  SynthConfig config;
  std::string out_vocab;
  std::string out_sequences;
};

inline void run_synth(const SynthParams& p) {
  auto corpus = generate(p.config);
  const auto& c = p.config;
  nlohmann::json params = {{"seed", c.seed},
                           {"n_sequences", c.n_sequences},
                           {"vocab_size", c.vocab_size},
                           {"dim", c.dim},
                           {"motif_classes", c.motif_classes},
                           {"min_len", c.min_len},
                           {"max_len", c.max_len},
                           {"max_pairwise_motif_cos", c.max_pairwise_motif_cos}};
  auto vj = vocabulary_to_json(corpus.vocab);
  vj["params"] = {{"synth", params}};
  auto sj = synth_sequences_to_json(corpus);
  sj["params"] = {{"synth", params}};
  write_json_file(p.out_vocab, vj);
  write_json_file(p.out_sequences, sj);
}

struct ReportParams {
  std::string result;
  std::string out_md;
  std::optional<std::string> out_json;
  std::optional<std::string> sidecar;
  std::optional<std::string> sequences;
};

// Fills motif phrases from a sidecar when the result was mined without one.
inline void attach_phrases(nlohmann::json& result, const std::vector<ClassSequence>& seqs,
                           const std::vector<PhraseInfo>& side) {
  std::map<std::string, const ClassSequence*> by_id;
  for (const auto& s : seqs) by_id[s.seq_id] = &s;
  for (auto& m : result.at("motifs")) {
    auto it = by_id.find(m.at("seq_id").get<std::string>());
    if (it == by_id.end()) throw ValidationError("report: sequence " + m["seq_id"].get<std::string>() + " not found");
    auto start = m.at("start").get<std::size_t>();
    auto width = result.at("width").get<std::size_t>();
    auto phrases = nlohmann::json::array();
    for (std::size_t i = start; i < start + width && i < it->second->origin.size(); ++i) {
      auto pid = it->second->origin[i];
      if (pid >= 0 && static_cast<std::size_t>(pid) < side.size()) phrases.push_back(side[static_cast<std::size_t>(pid)].text);
    }
    m["phrases"] = phrases;
  }
}

inline void run_report(const ReportParams& p) {
  auto r = read_json_file(p.result);
  if (p.sidecar) {
    if (!p.sequences) throw ArgumentError("report: --sidecar needs --sequences to map motifs back to phrases");
    attach_phrases(r, sequences_from_json(read_json_file(*p.sequences)), sidecar_from_json(read_json_file(*p.sidecar)));
  }
  auto sorted = sort_motifs_by_alignment(r);
  write_text_file(p.out_md, render_markdown(sorted));
  if (p.out_json) write_json_file(*p.out_json, sorted);
}

}  // namespace vecmotif::pipeline
