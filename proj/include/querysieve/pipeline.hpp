#pragma once

// File-based pipeline stages. Every stage reads only the artifacts it
// declares, writes its documented output format, and leaves a resolved
// configuration snapshot (`<stage>.resolved.conf`) in the output directory.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "querysieve/classify.hpp"
#include "querysieve/clustering.hpp"
#include "querysieve/corpus.hpp"
#include "querysieve/error.hpp"
#include "querysieve/ingest.hpp"
#include "querysieve/random.hpp"
#include "querysieve/render.hpp"
#include "querysieve/similarity.hpp"
#include "querysieve/simulator.hpp"

namespace querysieve {

namespace fs = std::filesystem;

/// A required input file that does not exist.
class MissingInputError : public InputError {
 public:
  using InputError::InputError;
};

enum class Stage { Simulate, Ingest, Train, Matrix, Cluster, Classify, Evaluate, Render, Pipeline };

inline constexpr std::string_view stage_name(Stage s) {
  switch (s) {
    case Stage::Simulate: return "simulate";
    case Stage::Ingest: return "ingest";
    case Stage::Train: return "train";
    case Stage::Matrix: return "matrix";
    case Stage::Cluster: return "cluster";
    case Stage::Classify: return "classify";
    case Stage::Evaluate: return "evaluate";
    case Stage::Render: return "render";
    case Stage::Pipeline: return "pipeline";
  }
  return "?";
}

struct RecordSlice {
  std::size_t begin = 0;
  std::size_t end = 0;
};

/// Parses "start:end" (end exclusive; either side may be empty).
inline RecordSlice parse_slice(std::string_view text) {
  const std::size_t colon = text.find(':');
  if (colon == std::string_view::npos) throw UsageError("slice must look like start:end");
  const std::string_view a = trim(text.substr(0, colon));
  const std::string_view b = trim(text.substr(colon + 1));
  RecordSlice s{0, static_cast<std::size_t>(-1)};
  if (!a.empty()) {
    const auto v = parse_int<std::size_t>(a);
    if (!v) throw UsageError("malformed slice start '" + std::string(a) + "'");
    s.begin = *v;
  }
  if (!b.empty()) {
    const auto v = parse_int<std::size_t>(b);
    if (!v) throw UsageError("malformed slice end '" + std::string(b) + "'");
    s.end = *v;
  }
  if (s.begin > s.end) throw UsageError("slice start exceeds end");
  return s;
}

inline UserSession parse_session(std::string_view text) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = text.find(',', start);
    parts.emplace_back(trim(text.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  const auto bad = [&] {
    return UsageError("session must look like start,topic,count,mean_gap: '" + std::string(text) + "'");
  };
  if (parts.size() != 4) throw bad();
  const auto st = parse_double(parts[0]);
  const auto topic = parse_int<std::size_t>(parts[1]);
  const auto count = parse_int<std::size_t>(parts[2]);
  const auto gap = parse_double(parts[3]);
  if (!st || !topic || !count || !gap) throw bad();
  return {*st, *topic, *count, *gap};
}

struct PipelineConfig {
  fs::path out_dir = "out";
  std::uint64_t seed = 1;

  // Inputs.
  fs::path topics;
  fs::path proxy_log;
  fs::path tmn_log;
  fs::path corpus;
  CorpusMode corpus_mode = CorpusMode::Lines;

  // Artifacts; empty means "<out_dir>/<default name>".
  fs::path dataset;
  fs::path model;
  fs::path index;
  fs::path matrix;
  fs::path clustering;
  fs::path classification;
  fs::path report;
  fs::path map;

  std::int64_t window = kDefaultCollationWindow;
  int cooc_window = kDefaultCooccurrenceWindow;
  int min_count = kDefaultMinCount;
  Measure measure = Measure::DiscoLike;
  std::optional<std::size_t> k_min;
  std::optional<std::size_t> k_max;
  std::optional<RecordSlice> slice;
  std::size_t pixel_scale = 4;
  unsigned threads = 0;
  SimulatorConfig sim;   // sim.seed is derived from `seed`

  fs::path path_or(const fs::path& p, std::string_view fallback) const {
    return p.empty() ? out_dir / fallback : p;
  }
  fs::path dataset_path() const { return path_or(dataset, "dataset.log"); }
  fs::path metadata_path() const {
    fs::path p = dataset_path();
    return p.replace_extension(".meta");
  }
  fs::path collation_path() const { return out_dir / "collation.txt"; }
  fs::path model_path() const { return path_or(model, "model.cooc"); }
  fs::path index_path() const { return path_or(index, "index.idx"); }
  fs::path matrix_path() const { return path_or(matrix, "matrix.txt"); }
  fs::path clustering_path() const { return path_or(clustering, "clustering.txt"); }
  fs::path classification_path() const { return path_or(classification, "classification.txt"); }
  fs::path report_path() const { return path_or(report, "report.txt"); }
  fs::path report_kv_path() const {
    fs::path p = report_path();
    return p.replace_extension(".kv");
  }
  fs::path map_path() const { return path_or(map, "map.ppm"); }

  /// `key = value` lines accepted back by the command-line `--config` option.
  std::string to_config_text() const {
    std::ostringstream os;
    const auto quoted = [](const fs::path& p) { return "\"" + p.string() + "\""; };
    os << "out_dir = " << quoted(out_dir) << '\n' << "seed = " << seed << '\n';
    const std::pair<const char*, const fs::path*> paths[] = {
        {"topics", &topics},   {"proxy_log", &proxy_log}, {"tmn_log", &tmn_log},
        {"corpus", &corpus},   {"dataset", &dataset},     {"model", &model},
        {"index", &index},     {"matrix", &matrix},       {"clustering", &clustering},
        {"classification", &classification},              {"report", &report},
        {"map", &map}};
    for (const auto& [key, p] : paths)
      if (!p->empty()) os << key << " = " << quoted(*p) << '\n';
    os << "corpus_mode = \"" << (corpus_mode == CorpusMode::Lines ? "lines" : "dir") << "\"\n"
       << "window = " << window << '\n'
       << "cooc_window = " << cooc_window << '\n'
       << "min_count = " << min_count << '\n'
       << "measure = \"" << measure_name(measure) << "\"\n";
    if (k_min) os << "k_min = " << *k_min << '\n';
    if (k_max) os << "k_max = " << *k_max << '\n';
    if (slice) {
      os << "slice = \"" << slice->begin << ':';
      if (slice->end != static_cast<std::size_t>(-1)) os << slice->end;
      os << "\"\n";
    }
    os << "pixel_scale = " << pixel_scale << '\n'
       << "rate = " << format_double(sim.rate_per_hour) << '\n'
       << "duration = " << format_double(sim.duration) << '\n'
       << "list_min = " << sim.list_min << '\n'
       << "list_max = " << sim.list_max << '\n'
       << "allow_out_of_band = " << (sim.allow_out_of_band ? "true" : "false") << '\n'
       << "bursts = " << (sim.burst_enabled ? "true" : "false") << '\n'
       << "burst_min = " << sim.burst_min << '\n'
       << "burst_max = " << sim.burst_max << '\n'
       << "permute_fraction = " << format_double(sim.permute_fraction) << '\n'
       << "replace_prob = " << format_double(sim.replace_prob_per_tick) << '\n'
       << "click_prob = " << format_double(sim.click_prob) << '\n'
       << "epoch = " << sim.epoch << '\n';
    if (!sim.user_sessions.empty()) {
      os << "session = [";
      for (std::size_t i = 0; i < sim.user_sessions.size(); ++i) {
        const UserSession& s = sim.user_sessions[i];
        os << (i ? ", " : "") << '"' << format_double(s.start) << ',' << s.topic << ','
           << s.query_count << ',' << format_double(s.mean_gap) << '"';
      }
      os << "]\n";
    }
    return os.str();
  }
};

struct StageResult {
  std::vector<fs::path> outputs;
  std::vector<std::string> warnings;
};

// ---------------------------------------------------------------------------
// File helpers

inline std::vector<std::string> read_input_lines(const fs::path& path, std::string_view what) {
  if (path.empty()) throw UsageError("no " + std::string(what) + " path configured");
  if (!fs::exists(path))
    throw MissingInputError("missing input: " + std::string(what) + " '" + path.string() + "'");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + std::string(what) + " '" + path.string() + "'");
  return read_lines(in);
}

inline void write_output(const fs::path& path, std::string_view content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw InputError("cannot write '" + path.string() + "'");
}

namespace detail {

inline LabeledDataset load_stage_dataset(const PipelineConfig& c, bool require_resolved) {
  const fs::path p = c.dataset_path();
  LabeledDataset ds = load_dataset(read_input_lines(p, "dataset"), p.string(), require_resolved);
  ds.name = p.filename().string();
  if (c.slice) ds = ds.slice(c.slice->begin, c.slice->end);
  if (ds.size() == 0) throw InputError("dataset '" + p.string() + "' selects no records");
  return ds;
}

inline std::string slice_text(const std::optional<RecordSlice>& s) {
  if (!s) return "all";
  std::string out = std::to_string(s->begin) + ":";
  if (s->end != static_cast<std::size_t>(-1)) out += std::to_string(s->end);
  return out;
}

inline StageResult run_simulate(const PipelineConfig& c) {
  const TopicPool pool = parse_topic_pool(read_input_lines(c.topics, "topic pool"), c.topics.string());
  SimulatorConfig sc = c.sim;
  sc.seed = derive_seed(c.seed, "simulate");
  const Simulation sim = simulate(pool, sc);
  write_output(c.dataset_path(), format_query_log(sim.dataset.records));
  std::ostringstream meta;
  meta << "global_seed=" << c.seed << '\n';
  write_simulation_metadata(meta, sc, sim);
  write_output(c.metadata_path(), meta.str());
  return {{c.dataset_path(), c.metadata_path()}, {}};
}

inline StageResult run_ingest(const PipelineConfig& c) {
  const auto proxy = parse_query_log(read_input_lines(c.proxy_log, "proxy log"), c.proxy_log.string());
  const auto tmn = parse_tmn_log(read_input_lines(c.tmn_log, "TMN log"), c.tmn_log.string());
  const CollationResult r = collate(proxy, tmn, c.window, c.proxy_log.filename().string());
  write_output(c.dataset_path(), format_query_log(r.dataset.records));
  std::ostringstream summary;
  summary << "records=" << r.dataset.size() << '\n'
          << "matched_tmn=" << r.summary.matched << '\n'
          << "defaulted_user=" << r.summary.defaulted_user << '\n'
          << "prelabeled=" << r.summary.prelabeled << '\n'
          << "unmatched_tmn=" << r.summary.unmatched.size() << '\n';
  StageResult result{{c.dataset_path(), c.collation_path()}, r.summary.warnings()};
  for (const std::string& w : result.warnings) summary << "warning: " << w << '\n';
  write_output(c.collation_path(), summary.str());
  return result;
}

inline StageResult run_train(const PipelineConfig& c) {
  if (c.corpus.empty()) throw UsageError("no corpus path configured");
  if (!fs::exists(c.corpus))
    throw MissingInputError("missing input: corpus '" + c.corpus.string() + "'");
  const std::vector<std::string> docs = load_corpus(c.corpus, c.corpus_mode);
  const CooccurrenceModel model = build_cooccurrence_model(docs, c.cooc_window, c.min_count);
  const DocumentIndex index = build_document_index(docs);
  std::ostringstream m, x;
  write_model(m, model);
  write_index(x, index);
  write_output(c.model_path(), m.str());
  write_output(c.index_path(), x.str());
  return {{c.model_path(), c.index_path()}, {}};
}

inline StageResult run_matrix(const PipelineConfig& c) {
  const LabeledDataset ds = load_stage_dataset(c, false);
  std::vector<Query> queries;
  queries.reserve(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    try {
      queries.push_back(Query::parse(ds.records[i].query));
    } catch (const InputError& e) {
      throw InputError(c.dataset_path().string() + ": record " + std::to_string(i) + ": " + e.what());
    }
  }
  MatrixBuild build;
  std::vector<std::pair<std::string, std::string>> meta{{"measure", std::string(measure_name(c.measure))}};
  if (c.measure == Measure::DiscoLike) {
    const CooccurrenceModel model = read_model(read_input_lines(c.model_path(), "model"), c.model_path().string());
    build = build_matrix(queries, model);
    meta.emplace_back("symmetrization", "mean of both directed max-then-mean scores");
    meta.emplace_back("dissimilarity", "1 - similarity");
    meta.emplace_back("model_window", std::to_string(model.window()));
    meta.emplace_back("model_min_count", std::to_string(model.min_count()));
  } else {
    const DocumentIndex index = read_index(read_input_lines(c.index_path(), "index"), c.index_path().string());
    build = build_matrix(queries, index);
    meta.emplace_back("dissimilarity", "normalized hit-count distance, natural log, clamped to [0,1]");
    meta.emplace_back("index_documents", std::to_string(index.doc_count()));
    meta.emplace_back("clamped_values", std::to_string(build.clamped));
  }
  meta.emplace_back("slice", slice_text(c.slice));
  if (const std::string err = build.matrix.check_invariants(); !err.empty())
    throw InvariantError("matrix invariant violated: " + err);
  std::ostringstream os;
  write_matrix(os, build.matrix, meta);
  write_output(c.matrix_path(), os.str());
  StageResult r{{c.matrix_path()}, {}};
  if (build.clamped > 0)
    r.warnings.push_back(std::to_string(build.clamped) +
                         " hit-count distances fell outside [0,1] and were clamped");
  return r;
}

inline StageResult run_cluster(const PipelineConfig& c) {
  DissimilarityMatrix m = read_matrix(read_input_lines(c.matrix_path(), "matrix"), c.matrix_path().string()).matrix;
  if (c.slice) m = m.slice(c.slice->begin, c.slice->end);
  if (m.size() < 3)
    throw InputError("clustering needs at least 3 elements, matrix has " + std::to_string(m.size()));
  const KRange def = default_k_range(m.size());
  const std::size_t k_min = c.k_min.value_or(def.min);
  const std::size_t k_max = c.k_max.value_or(std::max(def.max, k_min));
  const Clustering cl = select_k(m, k_min, k_max, c.threads);
  std::ostringstream os;
  write_clustering(os, cl);
  write_output(c.clustering_path(), os.str());
  return {{c.clustering_path()}, {}};
}

inline StageResult run_classify(const PipelineConfig& c) {
  const Clustering cl = read_clustering(read_input_lines(c.clustering_path(), "clustering"),
                                        c.clustering_path().string());
  std::ostringstream os;
  write_classification(os, classify_largest(cl));
  write_output(c.classification_path(), os.str());
  return {{c.classification_path()}, {}};
}

inline StageResult run_evaluate(const PipelineConfig& c) {
  const ClassificationResult r = read_classification(
      read_input_lines(c.classification_path(), "classification"), c.classification_path().string());
  const LabeledDataset ds = load_stage_dataset(c, true);
  const EvalReport report = evaluate(r, ds);
  std::ostringstream text, kv;
  write_report_text(text, report, ds.name);
  write_report_kv(kv, report);
  write_output(c.report_path(), text.str());
  write_output(c.report_kv_path(), kv.str());
  StageResult out{{c.report_path(), c.report_kv_path()}, {}};
  if (report.precision_degenerate) out.warnings.push_back("precision is degenerate (nothing predicted U)");
  if (report.recall_degenerate) out.warnings.push_back("recall is degenerate (no true user queries)");
  return out;
}

inline StageResult run_render(const PipelineConfig& c) {
  const DissimilarityMatrix m =
      read_matrix(read_input_lines(c.matrix_path(), "matrix"), c.matrix_path().string()).matrix;
  const Clustering cl = read_clustering(read_input_lines(c.clustering_path(), "clustering"),
                                        c.clustering_path().string());
  const LabeledDataset ds = load_stage_dataset(c, false);
  ClusterMapSpec spec;
  spec.pixel_scale = c.pixel_scale;
  write_output(c.map_path(), render_map(m, cl, ds, spec));
  return {{c.map_path()}, {}};
}

template <typename Fn>
StageResult with_stage(Stage stage, Fn&& fn) {
  const std::string prefix = "stage '" + std::string(stage_name(stage)) + "': ";
  try {
    return fn();
  } catch (const MissingInputError& e) {
    throw MissingInputError(prefix + e.what());
  } catch (const InputError& e) {
    throw InputError(prefix + e.what());
  } catch (const UsageError& e) {
    throw UsageError(prefix + e.what());
  } catch (const InvariantError& e) {
    throw InvariantError(prefix + e.what());
  } catch (const fs::filesystem_error& e) {
    throw InputError(prefix + e.what());
  }
}

inline void write_snapshot(const PipelineConfig& c, Stage stage) {
  write_output(c.out_dir / (std::string(stage_name(stage)) + ".resolved.conf"), c.to_config_text());
}

}  // namespace detail

inline StageResult run_stage(Stage stage, const PipelineConfig& config);

namespace detail {

inline StageResult run_pipeline(const PipelineConfig& config) {
  // Downstream stages see the already-sliced matrix.
  PipelineConfig c = config;
  StageResult all;
  const auto step = [&](Stage s, const PipelineConfig& cfg) {
    StageResult r = run_stage(s, cfg);
    all.outputs.insert(all.outputs.end(), r.outputs.begin(), r.outputs.end());
    all.warnings.insert(all.warnings.end(), r.warnings.begin(), r.warnings.end());
  };
  step(c.proxy_log.empty() ? Stage::Simulate : Stage::Ingest, c);
  if (!c.corpus.empty()) step(Stage::Train, c);
  step(Stage::Matrix, c);
  PipelineConfig downstream = c;
  downstream.slice.reset();
  step(Stage::Cluster, downstream);
  step(Stage::Classify, downstream);
  step(Stage::Evaluate, c);
  step(Stage::Render, c);
  write_snapshot(config, Stage::Pipeline);
  return all;
}

}  // namespace detail

inline StageResult run_stage(Stage stage, const PipelineConfig& config) {
  if (stage == Stage::Pipeline) return detail::run_pipeline(config);
  StageResult r = detail::with_stage(stage, [&]() -> StageResult {
    switch (stage) {
      case Stage::Simulate: return detail::run_simulate(config);
      case Stage::Ingest: return detail::run_ingest(config);
      case Stage::Train: return detail::run_train(config);
      case Stage::Matrix: return detail::run_matrix(config);
      case Stage::Cluster: return detail::run_cluster(config);
      case Stage::Classify: return detail::run_classify(config);
      case Stage::Evaluate: return detail::run_evaluate(config);
      case Stage::Render: return detail::run_render(config);
      case Stage::Pipeline: break;
    }
    throw InvariantError("unhandled stage");
  });
  detail::write_snapshot(config, stage);
  return r;
}

}  // namespace querysieve
