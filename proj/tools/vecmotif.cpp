// vecmotif: command-line driver for the motif-mining pipeline.
//
//   knn -> communities -> reduce -> ingest -> mine -> report
//   synth -> mine -> report

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "vecmotif/error.hpp"
#include "vecmotif/json_io.hpp"
#include "vecmotif/pipeline.hpp"

namespace {

void print_error(const std::string& kind, const std::string& message) {
  std::cerr << nlohmann::json{{"error", {{"kind", kind}, {"message", message}}}}.dump() << "\n";
}

// Values from a JSON config file become option defaults, so flags on the
// command line still win and required options may come from the file.
void apply_config(CLI::App* sub, const nlohmann::json& cfg) {
  if (!cfg.is_object()) throw vecmotif::FormatError("config file must hold a JSON object");
  for (CLI::Option* opt : sub->get_options()) {
    if (opt->get_lnames().empty()) continue;
    const std::string& name = opt->get_lnames().front();
    if (name == "config" || name == "help" || !cfg.contains(name)) continue;
    auto as_text = [](const nlohmann::json& x) { return x.is_string() ? x.get<std::string>() : x.dump(); };
    const auto& v = cfg[name];
    std::string text;
    if (v.is_array()) {
      for (const auto& e : v) text += (text.empty() ? "" : ",") + as_text(e);
    } else {
      text = as_text(v);
    }
    opt->run_callback_for_default()->default_val(text)->required(false);
  }
}

// The config path and subcommand are needed before the real parse.
std::pair<std::string, std::string> prescan(int argc, char** argv) {
  std::string sub, config;
  for (int i = 1; i < argc; ++i) {
    std::string a = argv[i];
    if (sub.empty() && !a.empty() && a[0] != '-') sub = a;
    if (a == "--config" && i + 1 < argc) config = argv[i + 1];
    if (a.rfind("--config=", 0) == 0) config = a.substr(9);
  }
  return {sub, config};
}

}  // namespace

int main(int argc, char** argv) {
  using namespace vecmotif;
  CLI::App app{"Motif mining over sequences of embedded phrases"};
  app.require_subcommand(1);
  std::string config_path;

  auto with_config = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON file with option values; flags override it")
        ->check(CLI::ExistingFile);
  };

  pipeline::KnnParams knn;
  auto* knn_cmd = app.add_subcommand("knn", "exact angular k-nearest neighbours of an EMB1 table");
  knn_cmd->add_option("--embeddings", knn.embeddings, "EMB1 file")->required();
  knn_cmd->add_option("--out", knn.out, "neighbour lists (JSON lines)")->required();
  knn_cmd->add_option("--k", knn.k, "neighbours per phrase")->capture_default_str()->check(CLI::PositiveNumber);
  with_config(knn_cmd);

  pipeline::CommunitiesParams com;
  auto* com_cmd = app.add_subcommand("communities", "map-equation communities of the KNN graph");
  com_cmd->add_option("--neighbors", com.neighbors, "neighbour lists from `knn`")->required();
  com_cmd->add_option("--out", com.out, "partition JSON")->required();
  com_cmd->add_option("--seed", com.seed)->capture_default_str();
  with_config(com_cmd);

  pipeline::ReduceParams red;
  std::string red_sidecar;
  auto* red_cmd = app.add_subcommand("reduce", "filter communities and embed their centroids");
  red_cmd->add_option("--partition", red.partition)->required();
  red_cmd->add_option("--embeddings", red.embeddings)->required();
  red_cmd->add_option("--out", red.out, "vocabulary JSON")->required();
  red_cmd->add_option("--sidecar", red_sidecar, "phrase sidecar for class examples");
  red_cmd->add_option("--min-community-size", red.min_community_size)
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  red_cmd->add_option("--dim", red.dim)->capture_default_str()->check(CLI::Range(2, 1 << 16));
  red_cmd->add_option("--seed", red.seed)->capture_default_str();
  red_cmd->add_option("--iters", red.iters)->capture_default_str();
  red_cmd->add_option("--examples", red.examples, "example phrases per class")->capture_default_str();
  with_config(red_cmd);

  pipeline::IngestParams ing;
  std::string ing_emb, ing_side;
  auto* ing_cmd = app.add_subcommand("ingest", "turn a corpus into class sequences");
  ing_cmd->add_option("--corpus", ing.corpus, "JSON-lines corpus")->required();
  ing_cmd->add_option("--partition", ing.partition)->required();
  ing_cmd->add_option("--vocab", ing.vocab)->required();
  ing_cmd->add_option("--out", ing.out, "sequences JSON")->required();
  ing_cmd->add_option("--embeddings", ing_emb, "EMB1 file to cross-check row count");
  ing_cmd->add_option("--write-sidecar", ing_side, "also write the corpus phrase sidecar here");
  ing_cmd->add_option("--min-len", ing.min_len)->capture_default_str()->check(CLI::PositiveNumber);
  with_config(ing_cmd);

  pipeline::MineParams mine;
  std::string mine_side;
  double beta = 0.0;
  auto* mine_cmd = app.add_subcommand("mine", "Gibbs motif search over class sequences");
  mine_cmd->add_option("--sequences", mine.sequences)->required();
  mine_cmd->add_option("--vocab", mine.vocab)->required();
  mine_cmd->add_option("--out", mine.out, "motif result JSON")->required();
  mine_cmd->add_option("--sidecar", mine_side, "phrase sidecar for motif texts");
  mine_cmd->add_option("--width", mine.width, "motif width W")->capture_default_str()->check(CLI::PositiveNumber);
  mine_cmd->add_option("--seeds,--seed", mine.seeds, "one chain per seed; best global score wins")
      ->capture_default_str()
      ->delimiter(',');
  mine_cmd->add_option("--tau", mine.gibbs.tau, "similarity cut-off")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  auto* beta_opt = mine_cmd->add_option("--beta", beta, "total pseudocount mass (default sqrt(N))")
                       ->check(CLI::PositiveNumber);
  mine_cmd->add_option("--max-iters", mine.gibbs.max_iters)->capture_default_str();
  mine_cmd->add_option("--patience", mine.gibbs.patience)->capture_default_str();
  mine_cmd->add_option("--restarts", mine.gibbs.restarts)->capture_default_str()->check(CLI::PositiveNumber);
  mine_cmd->add_option("--theta", mine.gibbs.significance.theta, "alignment threshold for significance")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  mine_cmd->add_option("--samples", mine.gibbs.significance.samples, "background Monte Carlo draws")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  with_config(mine_cmd);

  pipeline::SynthParams syn;
  auto* syn_cmd = app.add_subcommand("synth", "planted-motif synthetic corpus");
  syn_cmd->add_option("--out-vocab", syn.out_vocab)->required();
  syn_cmd->add_option("--out-sequences", syn.out_sequences)->required();
  syn_cmd->add_option("--seed", syn.config.seed)->capture_default_str();
  syn_cmd->add_option("--n-sequences", syn.config.n_sequences)->capture_default_str();
  syn_cmd->add_option("--vocab-size", syn.config.vocab_size)->capture_default_str();
  syn_cmd->add_option("--dim", syn.config.dim)->capture_default_str();
  syn_cmd->add_option("--motif", syn.config.motif_classes, "planted class ids")->delimiter(',');
  syn_cmd->add_option("--min-len", syn.config.min_len)->capture_default_str();
  syn_cmd->add_option("--max-len", syn.config.max_len)->capture_default_str();
  syn_cmd->add_option("--max-motif-cos", syn.config.max_pairwise_motif_cos)->capture_default_str();
  with_config(syn_cmd);

  pipeline::ReportParams rep;
  std::string rep_json, rep_side, rep_seqs;
  auto* rep_cmd = app.add_subcommand("report", "Markdown table and sorted JSON for a motif result");
  rep_cmd->add_option("--result", rep.result)->required();
  rep_cmd->add_option("--out", rep.out_md, "Markdown output")->required();
  rep_cmd->add_option("--out-json", rep_json, "sorted MotifResult JSON");
  rep_cmd->add_option("--sidecar", rep_side);
  rep_cmd->add_option("--sequences", rep_seqs);
  with_config(rep_cmd);

  try {
    auto [sub_name, cfg_path] = prescan(argc, argv);
    if (!cfg_path.empty() && !sub_name.empty()) {
      CLI::App* target = nullptr;
      try {
        target = app.get_subcommand(sub_name);
      } catch (const CLI::OptionNotFound&) {
      }
      if (target) apply_config(target, vecmotif::read_json_file(cfg_path));
    }
    app.parse(argc, argv);
    CLI::App* sub = app.get_subcommands().front();

    if (sub == knn_cmd) {
      pipeline::run_knn(knn);
    } else if (sub == com_cmd) {
      pipeline::run_communities(com);
    } else if (sub == red_cmd) {
      if (!red_sidecar.empty()) red.sidecar = red_sidecar;
      pipeline::run_reduce(red);
    } else if (sub == ing_cmd) {
      if (!ing_emb.empty()) ing.embeddings = ing_emb;
      if (!ing_side.empty()) ing.write_sidecar = ing_side;
      pipeline::run_ingest(ing);
    } else if (sub == mine_cmd) {
      if (!mine_side.empty()) mine.sidecar = mine_side;
      if (beta_opt->count() > 0 || beta > 0.0) mine.gibbs.beta = beta;
      if (!(mine.gibbs.tau > 0.0 && mine.gibbs.tau < 1.0)) throw ArgumentError("--tau must lie in (0, 1)");
      pipeline::run_mine(mine);
    } else if (sub == syn_cmd) {
      pipeline::run_synth(syn);
    } else if (sub == rep_cmd) {
      if (!rep_json.empty()) rep.out_json = rep_json;
      if (!rep_side.empty()) rep.sidecar = rep_side;
      if (!rep_seqs.empty()) rep.sequences = rep_seqs;
      pipeline::run_report(rep);
    }
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error("argument", e.what());
    return 2;
  } catch (const vecmotif::Error& e) {
    print_error(e.kind_name(), e.what());
    return e.exit_code();
  } catch (const nlohmann::json::exception& e) {
    print_error("format", e.what());
    return 1;
  } catch (const std::exception& e) {
    print_error("io", e.what());
    return 1;
  }
  return 0;
}
