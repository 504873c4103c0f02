// querysieve: command-line driver for the query-disentangling pipeline.
//
//   querysieve <stage> [options]      stage in {simulate, ingest, train, matrix,
//                                     cluster, classify, evaluate, render, pipeline}
//
// Options may also come from a `key = value` file given with --config;
// flags on the command line override it. Exit codes: 0 success, 1 usage,
// 2 input format, 3 internal invariant violation.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "querysieve/querysieve.hpp"

namespace {

using querysieve::PipelineConfig;
using querysieve::Stage;

struct Options {
  std::string out_dir = "out";
  std::uint64_t seed = 1;
  std::string topics, proxy_log, tmn_log, corpus, corpus_mode = "lines";
  std::string dataset, model, index, matrix, clustering, classification, report, map;
  std::int64_t window = querysieve::kDefaultCollationWindow;
  int cooc_window = querysieve::kDefaultCooccurrenceWindow;
  int min_count = querysieve::kDefaultMinCount;
  std::string measure = "disco";
  std::optional<std::size_t> k_min, k_max;
  std::string slice;
  std::size_t pixel_scale = 4;
  unsigned threads = 0;
  querysieve::SimulatorConfig sim;
  std::vector<std::string> sessions;
  bool quiet = false;
};

void add_options(CLI::App& app, Options& o) {
  app.add_option("--out-dir,--out_dir", o.out_dir, "Directory for stage outputs")->capture_default_str();
  app.add_option("--seed", o.seed, "Global seed; every stage seed derives from it")->capture_default_str();

  app.add_option("--topics", o.topics, "Topic pool file (<topic>\\t<query> lines)")->group("Inputs");
  app.add_option("--proxy-log,--proxy_log", o.proxy_log, "Proxy query log (<ts>\\t<U|T|?>\\t<query>)")->group("Inputs");
  app.add_option("--tmn-log,--tmn_log", o.tmn_log, "TrackMeNot activity log (<ts>\\t<query>)")->group("Inputs");
  app.add_option("--corpus", o.corpus, "Training corpus (file or directory)")->group("Inputs");
  app.add_option("--corpus-mode,--corpus_mode", o.corpus_mode, "lines: one document per line; dir: one per file")
      ->check(CLI::IsMember({"lines", "dir"}))
      ->capture_default_str()
      ->group("Inputs");

  const char* artifacts = "Artifacts (default: inside --out-dir)";
  app.add_option("--dataset", o.dataset, "Labeled query log")->group(artifacts);
  app.add_option("--model", o.model, "Co-occurrence model file")->group(artifacts);
  app.add_option("--index", o.index, "Document index file")->group(artifacts);
  app.add_option("--matrix", o.matrix, "Dissimilarity matrix file")->group(artifacts);
  app.add_option("--clustering", o.clustering, "Clustering file")->group(artifacts);
  app.add_option("--classification", o.classification, "Classification file")->group(artifacts);
  app.add_option("--report", o.report, "Report file (a .kv twin is written alongside)")->group(artifacts);
  app.add_option("--map", o.map, "Cluster map pixmap (P6)")->group(artifacts);

  app.add_option("--window", o.window, "Collation window in seconds")->capture_default_str();
  app.add_option("--cooc-window,--cooc_window", o.cooc_window, "Co-occurrence half-window in tokens")
      ->capture_default_str();
  app.add_option("--min-count,--min_count", o.min_count, "Minimum corpus frequency for a token")
      ->capture_default_str();
  app.add_option("--measure", o.measure, "Semantic measure")
      ->check(CLI::IsMember({"disco", "ngd"}))
      ->capture_default_str();
  app.add_option("--k-min,--k_min", o.k_min, "Smallest k tried (default 2)");
  app.add_option("--k-max,--k_max", o.k_max, "Largest k tried (default min(n-1, 25))");
  app.add_option("--slice", o.slice, "Record range start:end (end exclusive)");
  app.add_option("--pixel-scale,--pixel_scale", o.pixel_scale, "Pixels per matrix cell")->capture_default_str();
  app.add_option("--threads", o.threads, "Worker threads for k selection (0 = hardware)")->capture_default_str();

  const char* sim = "Simulator";
  app.add_option("--rate", o.sim.rate_per_hour, "Background noise queries per hour")->capture_default_str()->group(sim);
  app.add_option("--duration", o.sim.duration, "Simulated seconds")->capture_default_str()->group(sim);
  app.add_option("--list-min,--list_min", o.sim.list_min)->capture_default_str()->group(sim);
  app.add_option("--list-max,--list_max", o.sim.list_max)->capture_default_str()->group(sim);
  app.add_flag("--allow-out-of-band,--allow_out_of_band", o.sim.allow_out_of_band,
               "Permit list bounds outside [100, 200]")->group(sim);
  app.add_option("--bursts", o.sim.burst_enabled, "Enable query bursts (true/false)")->capture_default_str()->group(sim);
  app.add_option("--burst-min,--burst_min", o.sim.burst_min)->capture_default_str()->group(sim);
  app.add_option("--burst-max,--burst_max", o.sim.burst_max)->capture_default_str()->group(sim);
  app.add_option("--permute-fraction,--permute_fraction", o.sim.permute_fraction)->capture_default_str()->group(sim);
  app.add_option("--replace-prob,--replace_prob", o.sim.replace_prob_per_tick,
                 "Per-hour replacement probability of each list entry")->capture_default_str()->group(sim);
  app.add_option("--click-prob,--click_prob", o.sim.click_prob)->capture_default_str()->group(sim);
  app.add_option("--epoch", o.sim.epoch, "Timestamp of simulated time 0")->capture_default_str()->group(sim);
  app.add_option("--session", o.sessions, "User session start,topic,count,mean_gap (repeatable)")->group(sim);

  app.add_flag("-q,--quiet", o.quiet, "Suppress warnings and the output listing");
}

PipelineConfig to_config(const Options& o) {
  PipelineConfig c;
  c.out_dir = o.out_dir;
  c.seed = o.seed;
  c.topics = o.topics;
  c.proxy_log = o.proxy_log;
  c.tmn_log = o.tmn_log;
  c.corpus = o.corpus;
  c.corpus_mode = o.corpus_mode == "dir" ? querysieve::CorpusMode::Directory : querysieve::CorpusMode::Lines;
  c.dataset = o.dataset;
  c.model = o.model;
  c.index = o.index;
  c.matrix = o.matrix;
  c.clustering = o.clustering;
  c.classification = o.classification;
  c.report = o.report;
  c.map = o.map;
  c.window = o.window;
  c.cooc_window = o.cooc_window;
  c.min_count = o.min_count;
  c.measure = o.measure == "ngd" ? querysieve::Measure::Ngd : querysieve::Measure::DiscoLike;
  c.k_min = o.k_min;
  c.k_max = o.k_max;
  if (!o.slice.empty()) c.slice = querysieve::parse_slice(o.slice);
  c.pixel_scale = o.pixel_scale;
  c.threads = o.threads;
  c.sim = o.sim;
  for (const std::string& s : o.sessions) c.sim.user_sessions.push_back(querysieve::parse_session(s));
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Separate genuine search queries from TrackMeNot-style noise by semantic clustering"};
  app.set_config("--config", "", "Read options from a key = value file");
  app.require_subcommand(1, 1);
  Options opts;
  add_options(app, opts);

  const std::pair<Stage, const char*> stages[] = {
      {Stage::Simulate, "Generate a labeled synthetic dataset from a topic pool"},
      {Stage::Ingest, "Collate a proxy log with a TMN log into a labeled dataset"},
      {Stage::Train, "Build the co-occurrence model and document index from a corpus"},
      {Stage::Matrix, "Compute the dissimilarity matrix of the dataset's queries"},
      {Stage::Cluster, "PAM clustering with k chosen by maximum average silhouette"},
      {Stage::Classify, "Label the largest cluster(s) as user queries"},
      {Stage::Evaluate, "Score the classification against the dataset labels"},
      {Stage::Render, "Draw the size-ordered cluster map as a P6 pixmap"},
      {Stage::Pipeline, "Run simulate/ingest, [train], matrix, cluster, classify, evaluate, render"},
  };
  std::vector<std::pair<CLI::App*, Stage>> commands;
  for (const auto& [stage, help] : stages) {
    CLI::App* sub = app.add_subcommand(std::string(querysieve::stage_name(stage)), help);
    sub->fallthrough();
    commands.emplace_back(sub, stage);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  Stage stage = Stage::Pipeline;
  for (const auto& [sub, s] : commands)
    if (sub->parsed()) stage = s;

  const std::string tag = "querysieve: ";
  try {
    const PipelineConfig config = to_config(opts);
    const querysieve::StageResult result = querysieve::run_stage(stage, config);
    if (!opts.quiet) {
      for (const std::string& w : result.warnings) std::cerr << tag << "warning: " << w << '\n';
      for (const auto& p : result.outputs) std::cout << p.string() << '\n';
    }
    return 0;
  } catch (const querysieve::UsageError& e) {
    std::cerr << tag << e.what() << '\n';
    return 1;
  } catch (const querysieve::InputError& e) {
    std::cerr << tag << e.what() << '\n';
    return 2;
  } catch (const querysieve::InvariantError& e) {
    std::cerr << tag << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << tag << "stage '" << querysieve::stage_name(stage) << "': " << e.what() << '\n';
    return 3;
  }
}
