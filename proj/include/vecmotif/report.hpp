#pragma once

// Human-readable motif tables: one row per sequence motif, one column per
// motif position, rows ordered by local alignment score.

#include <algorithm>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vecmotif/error.hpp"

namespace vecmotif {

namespace detail {

inline std::string md_cell(std::string s) {
  std::string out;
  for (char c : s) {
    if (c == '|')
      out += "\\|";
    else if (c == '\n' || c == '\r')
      out += ' ';
    else
      out += c;
  }
  return out;
}

inline std::string fmt_double(double v) {
  std::ostringstream os;
  os.precision(8);
  os << std::fixed << v;
  return os.str();
}

}  // namespace detail

/// Returns a copy of a serialised motif result with motifs sorted by
/// descending local score (stable).
inline nlohmann::json sort_motifs_by_alignment(nlohmann::json result) {
  try {
    auto& motifs = result.at("motifs");
    std::vector<nlohmann::json> rows(motifs.begin(), motifs.end());
    std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
      return a.at("local_score").template get<double>() > b.at("local_score").template get<double>();
    });
    motifs = rows;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("motif result: ") + e.what());
  }
  return result;
}

inline std::string render_markdown(const nlohmann::json& raw) {
  nlohmann::json r = sort_motifs_by_alignment(raw);
  std::ostringstream md;
  const auto width = r.at("width").get<std::size_t>();
  md << "# Motif report\n\n";
  if (r.contains("params")) md << "Parameters: `" << r["params"].dump() << "`\n\n";
  md << "Global pattern: [";
  const auto& pattern = r.at("global_pattern");
  for (std::size_t i = 0; i < pattern.size(); ++i) md << (i ? ", " : "") << pattern[i].get<long long>();
  md << "]\n\n";
  md << "Global score: " << detail::fmt_double(r.at("global_score").get<double>()) << "\n\n";
  md << "Score vector: [";
  const auto& sv = r.at("score_vector");
  for (std::size_t i = 0; i < sv.size(); ++i) md << (i ? ", " : "") << detail::fmt_double(sv[i].get<double>());
  md << "]\n\n";
  md << "z: " << detail::fmt_double(r.at("z").get<double>()) << "\n\n";

  bool has_text = std::all_of(r["motifs"].begin(), r["motifs"].end(), [&](const auto& m) {
    return m.contains("phrases") && m["phrases"].size() == width;
  });
  if (!has_text && !r["motifs"].empty())
    md << "_No phrase sidecar available: cells show class ids._\n\n";

  md << "| sequence | local score |";
  for (std::size_t i = 0; i < width; ++i) md << " " << i + 1 << " |";
  md << "\n|---|---|";
  for (std::size_t i = 0; i < width; ++i) md << "---|";
  md << "\n";
  for (const auto& m : r["motifs"]) {
    md << "| " << detail::md_cell(m.at("seq_id").get<std::string>()) << " | "
       << detail::fmt_double(m.at("local_score").get<double>()) << " |";
    for (std::size_t i = 0; i < width; ++i) {
      std::string cell = has_text ? m["phrases"][i].get<std::string>() : std::to_string(m.at("classes")[i].get<long long>());
      md << " " << detail::md_cell(cell) << " |";
    }
    md << "\n";
  }
  return md.str();
}

}  // namespace vecmotif
