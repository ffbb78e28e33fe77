#pragma once

// Corpus and embedding-file I/O, plus conversion of conversations into
// class sequences once phrases have been assigned to classes.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vecmotif/error.hpp"

namespace vecmotif {

using PhraseId = std::int64_t;
using ClassId = std::int64_t;

inline constexpr ClassId kUnmapped = -1;

struct Turn {
  std::string speaker;
  std::string text;
  PhraseId phrase_id = 0;
};

struct Conversation {
  std::string conv_id;
  std::vector<Turn> turns;
};

// Row i holds the embedding of phrase i.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  EmbeddingTable(std::size_t dim, std::vector<float> data) : dim_(dim), data_(std::move(data)) {
    if (dim_ == 0) throw FormatError("embedding dim must be positive");
    if (data_.size() % dim_ != 0) throw FormatError("embedding payload is not a multiple of dim");
    for (std::size_t r = 0; r < rows(); ++r) {
      double sq = 0.0;
      for (float v : row(r)) {
        if (!std::isfinite(v)) throw FormatError("non-finite component in row " + std::to_string(r));
        sq += static_cast<double>(v) * v;
      }
      if (sq == 0.0) throw FormatError("zero-norm vector in row " + std::to_string(r));
    }
  }

  std::size_t dim() const noexcept { return dim_; }
  std::size_t rows() const noexcept { return dim_ == 0 ? 0 : data_.size() / dim_; }
  std::span<const float> row(std::size_t r) const { return {data_.data() + r * dim_, dim_}; }
  const std::vector<float>& data() const noexcept { return data_; }

 private:
  std::size_t dim_ = 0;
  std::vector<float> data_;
};

struct PhraseInfo {
  PhraseId phrase_id = 0;
  std::string conv_id;
  std::int64_t turn = 0;
  std::string speaker;
  std::string text;
};

struct ClassSequence {
  std::string seq_id;
  std::vector<ClassId> classes;
  std::vector<PhraseId> origin;
};

// ---------------------------------------------------------------------------
// Corpus

inline std::vector<Conversation> parse_corpus_stream(std::istream& in) {
  std::vector<Conversation> out;
  std::set<std::string> seen;
  PhraseId next_id = 0;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto fail = [&](const std::string& why) {
      return FormatError("corpus line " + std::to_string(lineno) + ": " + why);
    };
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw fail(e.what());
    }
    if (!j.is_object()) throw fail("expected a JSON object");
    if (!j.contains("conv_id") || !j["conv_id"].is_string()) throw fail("missing string field \"conv_id\"");
    if (!j.contains("turns") || !j["turns"].is_array()) throw fail("missing array field \"turns\"");
    if (j["turns"].empty()) throw fail("\"turns\" is empty");

    Conversation conv;
    conv.conv_id = j["conv_id"].get<std::string>();
    for (const auto& t : j["turns"]) {
      if (!t.is_object() || !t.contains("speaker") || !t["speaker"].is_string() || !t.contains("text") ||
          !t["text"].is_string())
        throw fail("turn needs string fields \"speaker\" and \"text\"");
      conv.turns.push_back({t["speaker"].get<std::string>(), t["text"].get<std::string>(), next_id++});
    }
    if (!seen.insert(conv.conv_id).second)
      throw ValidationError("corpus line " + std::to_string(lineno) + ": duplicate conv_id \"" + conv.conv_id + "\"");
    out.push_back(std::move(conv));
  }
  return out;
}

inline std::vector<Conversation> parse_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open corpus " + path);
  return parse_corpus_stream(in);
}

inline std::vector<PhraseInfo> corpus_sidecar(const std::vector<Conversation>& corpus) {
  std::vector<PhraseInfo> out;
  for (const auto& c : corpus)
    for (std::size_t t = 0; t < c.turns.size(); ++t)
      out.push_back({c.turns[t].phrase_id, c.conv_id, static_cast<std::int64_t>(t), c.turns[t].speaker,
                     c.turns[t].text});
  return out;
}

// ---------------------------------------------------------------------------
// EMB1 binary format: "EMB1", u32 rows, u32 dim, row-major f32, all little-endian.

namespace detail {

inline void put_u32(std::string& buf, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline std::uint32_t get_u32(const unsigned char* p) {
  return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) | (std::uint32_t(p[2]) << 16) | (std::uint32_t(p[3]) << 24);
}

}  // namespace detail

inline std::string encode_embeddings(const EmbeddingTable& table) {
  std::string buf = "EMB1";
  detail::put_u32(buf, static_cast<std::uint32_t>(table.rows()));
  detail::put_u32(buf, static_cast<std::uint32_t>(table.dim()));
  buf.reserve(buf.size() + table.data().size() * 4);
  for (float v : table.data()) detail::put_u32(buf, std::bit_cast<std::uint32_t>(v));
  return buf;
}

inline EmbeddingTable decode_embeddings(std::string_view bytes) {
  if (bytes.size() < 12 || bytes.substr(0, 4) != "EMB1") throw FormatError("EMB1 magic mismatch");
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  std::uint64_t rows = detail::get_u32(p + 4);
  std::uint64_t dim = detail::get_u32(p + 8);
  if (dim == 0) throw FormatError("EMB1 dim must be positive");
  std::uint64_t want = 12 + rows * dim * 4;
  if (bytes.size() < want)
    throw FormatError("EMB1 payload truncated: header declares " + std::to_string(rows) + " rows of dim " +
                      std::to_string(dim));
  if (bytes.size() > want) throw FormatError("EMB1 has trailing bytes after payload");
  std::vector<float> data(rows * dim);
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = std::bit_cast<float>(detail::get_u32(p + 12 + 4 * i));
  return EmbeddingTable(dim, std::move(data));
}

inline void write_embeddings(const std::string& path, const EmbeddingTable& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  auto buf = encode_embeddings(table);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError("write failed for " + path);
}

inline EmbeddingTable read_embeddings(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_embeddings(bytes);
}

inline std::string sidecar_path(const std::string& emb_path) {
  auto dot = emb_path.rfind('.');
  auto slash = emb_path.find_last_of('/');
  std::string stem = (dot != std::string::npos && (slash == std::string::npos || dot > slash)) ? emb_path.substr(0, dot)
                                                                                                : emb_path;
  return stem + ".idx.json";
}

inline nlohmann::json sidecar_to_json(const std::vector<PhraseInfo>& rows) {
  auto arr = nlohmann::json::array();
  for (const auto& r : rows)
    arr.push_back({{"phrase_id", r.phrase_id}, {"conv_id", r.conv_id}, {"turn", r.turn}, {"speaker", r.speaker},
                   {"text", r.text}});
  return arr;
}

inline std::vector<PhraseInfo> sidecar_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw FormatError("sidecar must be a JSON array");
  std::vector<PhraseInfo> out;
  out.reserve(j.size());
  try {
    for (const auto& e : j)
      out.push_back({e.at("phrase_id").get<PhraseId>(), e.at("conv_id").get<std::string>(),
                     e.at("turn").get<std::int64_t>(), e.at("speaker").get<std::string>(),
                     e.at("text").get<std::string>()});
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("sidecar: ") + e.what());
  }
  for (std::size_t i = 0; i < out.size(); ++i)
    if (out[i].phrase_id != static_cast<PhraseId>(i))
      throw FormatError("sidecar entry " + std::to_string(i) + " has phrase_id " + std::to_string(out[i].phrase_id));
  return out;
}

// ---------------------------------------------------------------------------
// Class sequences

// Unmapped phrases are dropped; a run of mapped phrases continues across
// gaps of one or two unmapped phrases and is split at three or more. The
// longest run (earliest on ties) is kept if it has at least min_len elements.
inline std::vector<ClassSequence> build_class_sequences(const std::vector<Conversation>& corpus,
                                                        std::span<const ClassId> assignment, std::size_t min_len) {
  constexpr std::size_t kMaxBridgedGap = 2;
  std::vector<ClassSequence> out;
  for (const auto& conv : corpus) {
    ClassSequence best, cur;
    std::size_t gap = 0;
    auto close_run = [&] {
      if (cur.classes.size() > best.classes.size()) best = cur;
      cur = {};
    };
    for (const auto& turn : conv.turns) {
      if (turn.phrase_id < 0 || static_cast<std::size_t>(turn.phrase_id) >= assignment.size())
        throw ArgumentError("assignment does not cover phrase " + std::to_string(turn.phrase_id));
      ClassId c = assignment[static_cast<std::size_t>(turn.phrase_id)];
      if (c == kUnmapped) {
        if (++gap > kMaxBridgedGap && !cur.classes.empty()) close_run();
        continue;
      }
      gap = 0;
      cur.classes.push_back(c);
      cur.origin.push_back(turn.phrase_id);
    }
    close_run();
    if (!best.classes.empty() && best.classes.size() >= min_len) {
      best.seq_id = conv.conv_id;
      out.push_back(std::move(best));
    }
  }
  return out;
}

inline nlohmann::json sequences_to_json(const std::vector<ClassSequence>& seqs) {
  auto arr = nlohmann::json::array();
  for (const auto& s : seqs) arr.push_back({{"seq_id", s.seq_id}, {"classes", s.classes}, {"origin", s.origin}});
  return {{"sequences", arr}};
}

inline std::vector<ClassSequence> sequences_from_json(const nlohmann::json& j) {
  std::vector<ClassSequence> out;
  try {
    for (const auto& e : j.at("sequences")) {
      ClassSequence s;
      s.seq_id = e.at("seq_id").get<std::string>();
      s.classes = e.at("classes").get<std::vector<ClassId>>();
      s.origin = e.contains("origin") ? e["origin"].get<std::vector<PhraseId>>() : std::vector<PhraseId>{};
      if (s.origin.empty()) s.origin.assign(s.classes.size(), -1);
      if (s.origin.size() != s.classes.size())
        throw FormatError("sequence " + s.seq_id + ": classes and origin differ in length");
      out.push_back(std::move(s));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("sequences: ") + e.what());
  }
  return out;
}

}  // namespace vecmotif
