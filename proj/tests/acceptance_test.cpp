// Acceptance suite: one PASS/FAIL line per criterion. Tolerances and
// runtime limits are fixed here. Exit status is nonzero if any line fails.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "querysieve/querysieve.hpp"
#include "render_fixture.hpp"

namespace qs = querysieve;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

int failures = 0;

void criterion(int id, const std::string& name, double limit_seconds, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (secs > limit_seconds) {
    o.pass = false;
    o.detail += (o.detail.empty() ? "" : "; ") + std::string("over time limit");
  }
  char timing[64];
  std::snprintf(timing, sizeof(timing), "%.2fs / limit %.0fs", secs, limit_seconds);
  std::cout << (o.pass ? "PASS" : "FAIL") << "  " << id << ". " << name << "  [" << timing << "]"
            << (o.detail.empty() ? "" : "  " + o.detail) << std::endl;
  if (!o.pass) ++failures;
}

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

qs::DissimilarityMatrix random_matrix(qs::Rng& rng, std::size_t n) {
  qs::DissimilarityMatrix d(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) d.set_symmetric(i, j, rng.uniform());
  return d;
}

double cost_of(const qs::DissimilarityMatrix& d, const std::vector<std::size_t>& medoids) {
  double total = 0.0;
  for (std::size_t j = 0; j < d.size(); ++j) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t m : medoids) best = std::min(best, d(j, m));
    total += best;
  }
  return total;
}

double brute_force_optimum(const qs::DissimilarityMatrix& d, std::size_t k) {
  double best = std::numeric_limits<double>::infinity();
  for (unsigned mask = 0; mask < (1u << d.size()); ++mask) {
    if (static_cast<std::size_t>(__builtin_popcount(mask)) != k) continue;
    std::vector<std::size_t> m;
    for (std::size_t i = 0; i < d.size(); ++i)
      if (mask & (1u << i)) m.push_back(i);
    best = std::min(best, cost_of(d, m));
  }
  return best;
}

// ---------------------------------------------------------------------------

Outcome evaluation_arithmetic() {
  const auto a = qs::report_from_counts(5, 0, 34 - 5, 0);
  const auto b = qs::report_from_counts(13, 2, 0, 0);
  const bool ok = std::abs(a.precision - 1.0) <= 0.001 && std::abs(a.recall - 0.147) <= 0.001 &&
                  std::abs(b.precision - 0.867) <= 0.001;
  return {ok, "P=" + fmt(a.precision, 3) + " R=" + fmt(a.recall, 3) + "; P=" + fmt(b.precision, 3)};
}

Outcome pam_optimality() {
  qs::Rng rng(20110301);
  int optimal = 0;
  const int trials = 100;
  std::string misses;
  for (int t = 0; t < trials; ++t) {
    const auto n = static_cast<std::size_t>(rng.between(2, 8));
    const auto k = static_cast<std::size_t>(rng.between(1, std::min<std::int64_t>(3, static_cast<std::int64_t>(n))));
    const auto d = random_matrix(rng, n);
    const double got = qs::pam(d, k).total_cost;
    const double best = brute_force_optimum(d, k);
    if (std::abs(got - best) <= 1e-12) {
      ++optimal;
    } else {
      misses += "; trial " + std::to_string(t) + " (n=" + std::to_string(n) + ", k=" + std::to_string(k) +
                "): pam " + fmt(got, 6) + " vs optimum " + fmt(best, 6);
    }
  }
  return {optimal == trials, std::to_string(optimal) + "/" + std::to_string(trials) + " optimal" + misses};
}

Outcome silhouette_formula() {
  qs::Rng rng(7);
  double worst = 0.0;
  bool in_range = true;
  bool singleton_ok = true;
  for (int t = 0; t < 50; ++t) {
    const auto n = static_cast<std::size_t>(rng.between(3, 15));
    const auto k = static_cast<std::size_t>(rng.between(2, std::min<std::int64_t>(5, static_cast<std::int64_t>(n))));
    const auto d = random_matrix(rng, n);
    std::vector<std::size_t> a(n);
    for (std::size_t i = 0; i < n; ++i) a[i] = i < k ? i : static_cast<std::size_t>(rng.below(k));
    const auto s = qs::silhouette(d, a);
    std::vector<std::size_t> size(k, 0);
    for (auto c : a) ++size[c];
    for (std::size_t i = 0; i < n; ++i) {
      double own = 0.0;
      std::vector<double> other(k, 0.0);
      for (std::size_t j = 0; j < n; ++j)
        if (j != i) (a[j] == a[i] ? own : other[a[j]]) += d(i, j);
      double expected = 0.0;
      if (size[a[i]] > 1) {
        const double ai = own / static_cast<double>(size[a[i]] - 1);
        double bi = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < k; ++c)
          if (c != a[i]) bi = std::min(bi, other[c] / static_cast<double>(size[c]));
        expected = std::max(ai, bi) == 0.0 ? 0.0 : (bi - ai) / std::max(ai, bi);
      } else if (s[i] != 0.0) {
        singleton_ok = false;
      }
      worst = std::max(worst, std::abs(s[i] - expected));
      in_range = in_range && s[i] >= -1.0 && s[i] <= 1.0;
    }
  }
  return {worst <= 1e-12 && in_range && singleton_ok, "max |diff| = " + std::to_string(worst)};
}

Outcome ngd_checks() {
  bool ok = true;
  std::string detail;
  qs::Rng rng(16);
  for (int c = 0; c < 50; ++c) {
    const auto docs_n = static_cast<std::size_t>(rng.between(2, 50));
    std::vector<std::string> docs;
    for (std::size_t d = 0; d < docs_n; ++d) {
      std::string doc;
      const auto len = rng.between(1, 8);
      for (int w = 0; w < len; ++w) doc += "t" + std::to_string(rng.below(10)) + " ";
      docs.push_back(doc);
    }
    const auto index = qs::build_document_index(docs);
    for (int q = 0; q < 20; ++q) {
      std::vector<std::string> terms;
      const auto len = rng.between(1, 3);
      for (int w = 0; w < len; ++w) terms.push_back("t" + std::to_string(rng.below(12)));
      std::size_t scan = 0;
      for (const auto& doc : docs) {
        const auto toks = qs::tokenize(doc);
        bool all = true;
        for (const auto& t : terms) all = all && std::find(toks.begin(), toks.end(), t) != toks.end();
        scan += all ? 1 : 0;
      }
      if (qs::hit_count(index, terms) != scan) ok = false;
      const auto query = qs::Query::parse(terms.front());
      if (qs::hit_count(index, std::vector<std::string>{terms.front()}) > 0 && qs::ngd(index, query, query) != 0.0)
        ok = false;
    }
  }
  if (!ok) detail = "hit_count or ngd(q,q) mismatch; ";
  const double fixture = qs::ngd_from_counts(16, 8, 4, 2);
  ok = ok && fixture == 1.0;
  return {ok, detail + "fixture=" + qs::format_double(fixture)};
}

struct BoundedBackend {
  std::map<std::pair<std::string, std::string>, double>* table;
  qs::Rng* rng;
  double operator()(const std::string& a, const std::string& b) const {
    if (a == b) return 1.0;
    const auto key = a < b ? std::make_pair(a, b) : std::make_pair(b, a);
    auto it = table->find(key);
    if (it == table->end()) it = table->emplace(key, rng->uniform()).first;
    return it->second;
  }
};

Outcome phrase_aggregation() {
  qs::Rng rng(51);
  std::map<std::pair<std::string, std::string>, double> table;
  const BoundedBackend backend{&table, &rng};
  double worst = 0.0;
  bool in_range = true;
  bool invariants = true;
  const auto make = [&] {
    std::string s;
    const auto n = rng.between(1, 5);
    for (int i = 0; i < n; ++i) s += "w" + std::to_string(rng.below(15)) + " ";
    return qs::Query::parse(s);
  };
  for (int t = 0; t < 200; ++t) {
    const auto a = make();
    const auto b = make();
    const double got = qs::phrase_sim_directed(backend, a, b);
    double sum = 0.0;
    for (const auto& x : a.tokens) {
      double best = -1.0;
      for (const auto& y : b.tokens) best = std::max(best, backend(x, y));
      sum += best;
    }
    worst = std::max(worst, std::abs(got - sum / static_cast<double>(a.tokens.size())));
    const double sym = qs::phrase_sim(backend, a, b);
    in_range = in_range && got >= 0.0 && got <= 1.0 && sym >= 0.0 && sym <= 1.0;
    if (t % 10 == 0) {
      std::vector<qs::Query> qsv;
      const auto n = rng.between(1, 12);
      for (int i = 0; i < n; ++i) qsv.push_back(make());
      invariants = invariants && qs::build_matrix(qsv, backend).matrix.check_invariants().empty();
    }
  }
  return {worst <= 1e-12 && in_range && invariants, "max |diff| = " + std::to_string(worst)};
}

// Small vs. large observation windows on simulated streams.
struct TrendConfig {
  double duration;
  const char* name;
};

qs::SimulatorConfig trend_sim(std::uint64_t seed, double duration, std::size_t topics) {
  qs::SimulatorConfig c;
  c.seed = seed;
  c.duration = duration;
  c.burst_min = 1;
  c.burst_max = 3;
  const auto t1 = static_cast<std::size_t>((seed * 7) % topics);
  const auto t2 = static_cast<std::size_t>((seed * 7 + 13) % topics);
  c.user_sessions = {{300.0, t1, 10, 240.0}, {3600.0, t2, 10, 240.0}};
  return c;
}

double precision_of(const qs::TopicPool& pool, const qs::CooccurrenceModel& model, const qs::SimulatorConfig& c,
                    std::size_t& records) {
  const auto sim = qs::simulate(pool, c);
  records += sim.dataset.size();
  std::vector<qs::Query> queries;
  for (const auto& r : sim.dataset.records) queries.push_back(qs::Query::parse(r.query));
  const auto m = qs::build_matrix(queries, model).matrix;
  const auto range = qs::default_k_range(m.size());
  const auto cl = qs::select_k(m, range.min, range.max, 0);
  return qs::evaluate(qs::classify_largest(cl), sim.dataset).precision;
}

Outcome window_trend(const qs::TopicPool& pool, const qs::CooccurrenceModel& model) {
  const int seeds = 20;
  double small = 0.0, large = 0.0;
  std::size_t small_n = 0, large_n = 0;
  for (int s = 1; s <= seeds; ++s) {
    small += precision_of(pool, model, trend_sim(static_cast<std::uint64_t>(s), 2 * 3600.0, pool.topics.size()), small_n);
    large += precision_of(pool, model, trend_sim(static_cast<std::uint64_t>(s), 54 * 3600.0, pool.topics.size()), large_n);
  }
  small /= seeds;
  large /= seeds;
  return {small >= 0.8 && large < small,
          "small: mean P=" + fmt(small, 3) + " (avg " + std::to_string(small_n / seeds) + " records), large: mean P=" +
              fmt(large, 3) + " (avg " + std::to_string(large_n / seeds) + " records)"};
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(QUERYSIEVE_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "querysieve_acceptance_determinism";
  fs::remove_all(root);
  const std::string common = std::string(" --topics ") + QUERYSIEVE_DATA_DIR + "/topics.tsv --corpus " +
                             QUERYSIEVE_DATA_DIR + "/topical_corpus.txt --seed 7 --duration 7200"
                             " --burst-min 1 --burst-max 3 --session 300,3,10,240 --session 3600,9,10,240";
  for (const char* run : {"a", "b"})
    if (const int code = run_cli("pipeline --out-dir " + (root / run).string() + common); code != 0)
      return {false, std::string("pipeline run ") + run + " exited " + std::to_string(code)};
  std::string detail;
  bool ok = true;
  for (const char* f : {"matrix.txt", "clustering.txt", "report.txt", "report.kv", "map.ppm"}) {
    const auto a = slurp(root / "a" / f);
    if (a.empty() || a != slurp(root / "b" / f)) {
      ok = false;
      detail += std::string(f) + " differs; ";
    }
  }
  fs::remove_all(root);
  return {ok, ok ? "matrix, clustering, report, map byte-identical" : detail};
}

Outcome simulator_statistics(const qs::TopicPool& pool) {
  qs::SimulatorConfig c;
  c.seed = 1000;
  c.duration = 1000 * 3600.0;
  const auto sim = qs::simulate(pool, c);
  const auto& recs = sim.dataset.records;
  if (recs.size() < 2) return {false, "too few records"};
  const double mean_gap = static_cast<double>(recs.back().timestamp - recs.front().timestamp) /
                          static_cast<double>(recs.size() - 1);
  const double expected = 3600.0 / c.rate_per_hour;
  bool bounds = true;
  for (const auto& l : sim.list_versions) bounds = bounds && l.size() >= 100 && l.size() <= 200;
  for (std::uint64_t s = 1; s <= 200; ++s) {
    qs::SimulatorConfig short_run;
    short_run.seed = s;
    short_run.duration = 3 * 3600.0;
    for (const auto& l : qs::simulate(pool, short_run).list_versions)
      bounds = bounds && l.size() >= 100 && l.size() <= 200;
  }
  const double rel = std::abs(mean_gap - expected) / expected;
  return {rel <= 0.05 && bounds, "mean gap " + fmt(mean_gap, 2) + "s vs " + fmt(expected, 0) + "s (" +
                                     fmt(100 * rel, 2) + "%), " + std::to_string(sim.list_versions.size()) +
                                     " list versions in [100,200]: " + (bounds ? "yes" : "no")};
}

Outcome render_golden() {
  const auto ppm = qs::render_map(fixture::map5_matrix(), fixture::map5_clustering(), fixture::map5_truth());
  const auto golden = slurp(std::string(QUERYSIEVE_TEST_DATA_DIR) + "/golden_5x5.ppm");
  bool monotone = true;
  qs::Rng rng(9);
  for (int t = 0; t < 20; ++t) {
    const auto n = static_cast<std::size_t>(rng.between(2, 10));
    const auto d = random_matrix(rng, n);
    qs::Clustering c;
    c.k = 1;
    c.assignment.assign(n, 0);
    c.silhouettes.assign(n, 0.0);
    qs::LabeledDataset truth{"r", {}};
    for (std::size_t i = 0; i < n; ++i) truth.records.push_back({0, "q", qs::Label::User});
    const auto img = qs::render_map(d, c, truth);
    const std::size_t header = img.size() - n * n * 3;
    std::vector<std::pair<double, unsigned char>> cells;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j) cells.emplace_back(d(i, j), static_cast<unsigned char>(img[header + (i * n + j) * 3]));
    std::sort(cells.begin(), cells.end());
    for (std::size_t k = 1; k < cells.size(); ++k) monotone = monotone && cells[k].second <= cells[k - 1].second;
  }
  const bool exact = !golden.empty() && ppm == golden;
  return {exact && monotone, std::string("golden ") + (exact ? "byte-exact" : "MISMATCH") +
                                 ", monotone " + (monotone ? "yes" : "no")};
}

Outcome scale(const qs::TopicPool& pool, const qs::CooccurrenceModel& model) {
  // 600 queries drawn from the pool, cycling through it.
  std::vector<qs::Query> queries;
  qs::Rng rng(600);
  std::vector<std::string> all;
  for (const auto& t : pool.topics) all.insert(all.end(), t.begin(), t.end());
  for (int i = 0; i < 600; ++i) queries.push_back(qs::Query::parse(all[rng.below(all.size())]));
  const auto t0 = std::chrono::steady_clock::now();
  const auto m = qs::build_matrix(queries, model).matrix;
  const double build = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const auto range = qs::default_k_range(m.size());
  const auto best = qs::select_k(m, range.min, range.max, 0);
  return {m.size() == 600 && best.k >= 2,
          "matrix " + fmt(build, 2) + "s, k range [" + std::to_string(range.min) + "," +
              std::to_string(range.max) + "] chose k=" + std::to_string(best.k)};
}

}  // namespace

int main() {
  std::cout << "querysieve acceptance suite" << std::endl;
  const std::string data = QUERYSIEVE_DATA_DIR;
  std::ifstream topics_in(data + "/topics.tsv");
  const qs::TopicPool pool = qs::parse_topic_pool(qs::read_lines(topics_in), "topics.tsv");

  const auto t0 = std::chrono::steady_clock::now();
  const qs::CooccurrenceModel model = qs::build_cooccurrence_model(qs::load_corpus(data + "/topical_corpus.txt", qs::CorpusMode::Lines));
  std::cout << "trained co-occurrence model on the bundled corpus in "
            << fmt(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(), 2) << "s ("
            << model.vocabulary_size() << " tokens)" << std::endl;

  criterion(1, "evaluation arithmetic", 1, evaluation_arithmetic);
  criterion(2, "PAM equals brute-force optimum", 10, pam_optimality);
  criterion(3, "silhouette matches direct formula", 5, silhouette_formula);
  criterion(4, "hit-count distance checks", 5, ngd_checks);
  criterion(5, "phrase aggregation and matrix invariants", 5, phrase_aggregation);
  criterion(6, "small-window precision and large-window trend", 300, [&] { return window_trend(pool, model); });
  criterion(7, "pipeline determinism", 120, determinism);
  criterion(8, "simulator statistics", 30, [&] { return simulator_statistics(pool); });
  criterion(9, "render golden and monotonicity", 5, render_golden);
  criterion(10, "n=600 matrix and k selection", 60, [&] { return scale(pool, model); });

  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
