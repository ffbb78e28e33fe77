#pragma once

// Small on-disk corpus with clustered embeddings, and helpers for driving the
// CLI from tests.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include <sys/wait.h>
#include <unistd.h>

#include "vecmotif/ingest.hpp"
#include "vecmotif/json_io.hpp"

namespace fixture {

namespace fs = std::filesystem;

// Every turn text belongs to one of `topics` clusters; each conversation
// contains the topic run 0, 1, 2 once among random topics.
inline void write_corpus(const fs::path& dir, std::uint64_t seed, std::size_t conversations = 12,
                         std::size_t turns = 16, std::size_t topics = 8, std::size_t dim = 16) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::vector<std::vector<double>> centre(topics, std::vector<double>(dim));
  for (auto& c : centre)
    for (auto& x : c) x = g(rng);

  std::vector<vecmotif::Conversation> convs;
  std::vector<float> rows;
  for (std::size_t c = 0; c < conversations; ++c) {
    std::vector<std::size_t> topic(turns);
    for (auto& t : topic) t = 3 + rng() % (topics - 3);
    std::size_t at = rng() % (turns - 2);
    for (std::size_t i = 0; i < 3; ++i) topic[at + i] = i;
    vecmotif::Conversation conv{"c" + std::to_string(c), {}};
    for (std::size_t t = 0; t < turns; ++t) {
      conv.turns.push_back({t % 2 ? "agent" : "user", "topic " + std::to_string(topic[t]) + " turn " + std::to_string(t),
                            static_cast<vecmotif::PhraseId>(c * turns + t)});
      for (std::size_t d = 0; d < dim; ++d) rows.push_back(static_cast<float>(centre[topic[t]][d] + 0.05 * g(rng)));
    }
    convs.push_back(std::move(conv));
  }
  std::ofstream corpus(dir / "corpus.jsonl");
  for (const auto& c : convs) {
    nlohmann::json j{{"conv_id", c.conv_id}, {"turns", nlohmann::json::array()}};
    for (const auto& t : c.turns) j["turns"].push_back({{"speaker", t.speaker}, {"text", t.text}});
    corpus << j.dump() << "\n";
  }
  // what the embedding exporter produces: EMB1 rows plus the phrase sidecar
  auto emb = (dir / "emb.bin").string();
  vecmotif::write_embeddings(emb, vecmotif::EmbeddingTable(dim, std::move(rows)));
  vecmotif::write_json_file(vecmotif::sidecar_path(emb), vecmotif::sidecar_to_json(vecmotif::corpus_sidecar(convs)));
}

inline std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("vecmotif_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// Runs the CLI with stderr captured to dir/stderr.txt; returns the exit code.
inline int cli(const fs::path& dir, const std::string& args) {
  std::string cmd = std::string("\"") + VECMOTIF_CLI + "\" " + args + " 2> \"" + (dir / "stderr.txt").string() + "\"";
  int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

inline std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

// The full phrase pipeline: knn, communities, reduce, ingest, mine, report.
inline int run_all(const fs::path& d, std::uint64_t seed) {
  int rc = 0;
  rc |= cli(d, "knn --embeddings " + q(d / "emb.bin") + " --out " + q(d / "nbrs.jsonl") + " --k 10");
  rc |= cli(d, "communities --neighbors " + q(d / "nbrs.jsonl") + " --out " + q(d / "part.json") + " --seed " +
                   std::to_string(seed));
  rc |= cli(d, "reduce --partition " + q(d / "part.json") + " --embeddings " + q(d / "emb.bin") + " --out " +
                   q(d / "vocab.json") + " --sidecar " + q(d / "emb.idx.json") + " --seed " + std::to_string(seed));
  rc |= cli(d, "ingest --corpus " + q(d / "corpus.jsonl") + " --partition " + q(d / "part.json") + " --vocab " +
                   q(d / "vocab.json") + " --out " + q(d / "seqs.json") + " --embeddings " +
                   q(d / "emb.bin"));
  rc |= cli(d, "mine --sequences " + q(d / "seqs.json") + " --vocab " + q(d / "vocab.json") + " --out " +
                   q(d / "motif.json") + " --sidecar " + q(d / "emb.idx.json") + " --seeds " +
                   std::to_string(seed) + " --restarts 5 --samples 2000");
  rc |= cli(d, "report --result " + q(d / "motif.json") + " --out " + q(d / "report.md") + " --out-json " +
                   q(d / "report.json"));
  return rc;
}

}  // namespace fixture
