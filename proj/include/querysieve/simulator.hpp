#pragma once

// Synthetic TrackMeNot-style noise interleaved with topical user sessions.
//
// The noise stream draws uniformly from an evolving "dynamic list" of
// queries at Poisson arrival times. Every `tick_seconds` the list evolves:
// each entry is independently replaced, with probability replace_prob, by
// another query of the same topic. Each user query may trigger a burst of
// extra noise queries within the following 60 seconds; some bursts are
// token-order permutations and token subsets of a single longer list query.
//
// Independent random streams (list, arrivals, per-session user draws,
// bursts, click-through) are derived from the one configured seed, so the
// arrival stream does not move when user sessions move.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "querysieve/error.hpp"
#include "querysieve/ingest.hpp"
#include "querysieve/random.hpp"
#include "querysieve/text.hpp"

namespace querysieve {

struct TopicPool {
  std::vector<std::string> names;
  std::vector<std::vector<std::string>> topics;

  std::size_t total_queries() const {
    std::size_t n = 0;
    for (const auto& t : topics) n += t.size();
    return n;
  }

  void validate() const {
    if (topics.empty()) throw UsageError("topic pool is empty");
    if (names.size() != topics.size()) throw UsageError("topic pool: names/topics mismatch");
    for (std::size_t i = 0; i < topics.size(); ++i) {
      if (topics[i].empty()) throw UsageError("topic '" + names[i] + "' has no queries");
      for (const std::string& q : topics[i])
        if (tokenize(q).empty())
          throw UsageError("topic '" + names[i] + "': query '" + q + "' has no tokens");
    }
  }
};

/// Topic pool file: one `<topic>\t<query>` per line; topics are numbered in
/// order of first appearance. Duplicate queries within a topic are dropped.
inline TopicPool parse_topic_pool(const std::vector<std::string>& lines,
                                  const std::string& source = {}) {
  TopicPool pool;
  std::map<std::string, std::size_t, std::less<>> index;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (is_blank_or_comment(lines[i])) continue;
    const std::string_view line = lines[i];
    const std::size_t tab = line.find('\t');
    if (tab == std::string_view::npos)
      throw ParseError(source, i + 1, "expected <topic>\\t<query>");
    const std::string topic(trim(line.substr(0, tab)));
    const std::string query(trim(line.substr(tab + 1)));
    if (topic.empty()) throw ParseError(source, i + 1, "empty topic name");
    if (tokenize(query).empty()) throw ParseError(source, i + 1, "query has no tokens");
    auto [it, inserted] = index.try_emplace(topic, pool.topics.size());
    if (inserted) {
      pool.names.push_back(topic);
      pool.topics.emplace_back();
    }
    auto& queries = pool.topics[it->second];
    if (std::find(queries.begin(), queries.end(), query) == queries.end())
      queries.push_back(query);
  }
  if (pool.topics.empty()) throw ParseError(source, lines.size(), "topic pool is empty");
  return pool;
}

struct ListEntry {
  std::size_t topic = 0;
  std::size_t query = 0;

  friend bool operator==(const ListEntry&, const ListEntry&) = default;
};

using DynamicList = std::vector<ListEntry>;

inline const std::string& query_text(const TopicPool& pool, ListEntry e) {
  return pool.topics.at(e.topic).at(e.query);
}

/// `size` distinct pool queries sampled without replacement, in random order.
/// Several entries may come from the same topic.
inline DynamicList build_seed_list(const TopicPool& pool, std::size_t size, Rng& rng) {
  if (size == 0) throw UsageError("dynamic query list must not be empty");
  DynamicList all;
  for (std::size_t t = 0; t < pool.topics.size(); ++t)
    for (std::size_t q = 0; q < pool.topics[t].size(); ++q) all.push_back({t, q});
  if (size > all.size())
    throw UsageError("topic pool exhausted: " + std::to_string(size) + " list entries requested, " +
                     std::to_string(all.size()) + " queries available");
  // Partial Fisher-Yates: the first `size` slots become a uniform sample.
  for (std::size_t i = 0; i < size; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(all.size() - i));
    std::swap(all[i], all[j]);
  }
  all.resize(size);
  return all;
}

/// Each entry is replaced with probability `replace_prob` by a different
/// query of the same topic; single-query topics keep their entry.
inline DynamicList evolve_list(DynamicList list, const TopicPool& pool, Rng& rng,
                               double replace_prob) {
  if (replace_prob <= 0.0) return list;
  for (ListEntry& e : list) {
    if (!rng.bernoulli(replace_prob)) continue;
    const std::size_t n = pool.topics.at(e.topic).size();
    if (n < 2) continue;
    std::size_t pick = static_cast<std::size_t>(rng.below(n - 1));
    if (pick >= e.query) ++pick;
    e.query = pick;
  }
  return list;
}

struct UserSession {
  double start = 0.0;        // seconds from the simulation origin
  std::size_t topic = 0;
  std::size_t query_count = 0;
  double mean_gap = 60.0;    // seconds
};

struct SimulatorConfig {
  std::uint64_t seed = 1;
  double rate_per_hour = 10.0;
  std::size_t list_min = 100;
  std::size_t list_max = 200;
  bool allow_out_of_band = false;   // permits list bounds outside [100, 200]
  bool burst_enabled = true;
  std::size_t burst_min = 3;
  std::size_t burst_max = 8;
  double burst_window = 60.0;       // seconds after the triggering user query
  double permute_fraction = 0.3;
  double replace_prob_per_tick = 0.02;
  double tick_seconds = 3600.0;
  double click_prob = 0.5;
  double duration = 3600.0;         // seconds
  std::int64_t epoch = 1300000000;  // timestamp of simulation time 0
  std::vector<UserSession> user_sessions;

  void validate(const TopicPool& pool) const {
    pool.validate();
    if (!(rate_per_hour > 0.0) || !std::isfinite(rate_per_hour))
      throw UsageError("rate_per_hour must be positive");
    if (!(duration > 0.0) || !std::isfinite(duration)) throw UsageError("duration must be positive");
    if (list_min < 1 || list_min > list_max)
      throw UsageError("list bounds must satisfy 1 <= list_min <= list_max");
    if (!allow_out_of_band && (list_min < 100 || list_max > 200))
      throw UsageError("list bounds must lie within [100, 200] unless allow_out_of_band is set");
    if (list_max > pool.total_queries())
      throw UsageError("topic pool exhausted: list_max = " + std::to_string(list_max) + " but pool has " +
                       std::to_string(pool.total_queries()) + " queries");
    if (burst_min > burst_max) throw UsageError("burst_min must not exceed burst_max");
    if (!(burst_window > 0.0)) throw UsageError("burst_window must be positive");
    const auto unit = [](double p) { return p >= 0.0 && p <= 1.0; };
    if (!unit(permute_fraction)) throw UsageError("permute_fraction must lie in [0, 1]");
    if (!unit(replace_prob_per_tick)) throw UsageError("replace_prob_per_tick must lie in [0, 1]");
    if (!unit(click_prob)) throw UsageError("click_prob must lie in [0, 1]");
    if (!(tick_seconds > 0.0)) throw UsageError("tick_seconds must be positive");
    if (epoch < 0) throw UsageError("epoch must be >= 0");
    for (std::size_t i = 0; i < user_sessions.size(); ++i) {
      const UserSession& s = user_sessions[i];
      const std::string where = "user session " + std::to_string(i);
      if (s.topic >= pool.topics.size()) throw UsageError(where + ": topic id out of range");
      if (!(s.start >= 0.0) || !std::isfinite(s.start)) throw UsageError(where + ": start must be >= 0");
      if (!(s.mean_gap > 0.0)) throw UsageError(where + ": mean gap must be positive");
    }
  }
};

enum class Origin : std::uint8_t { User, Arrival, BurstDraw, BurstVariant };

struct Simulation {
  LabeledDataset dataset;
  std::vector<Origin> origin;                 // per record
  std::vector<std::size_t> list_version;      // per record: dynamic-list version at emission
  std::vector<std::size_t> session;           // per record: session index (User records)
  std::vector<bool> click_through;            // per record
  std::vector<DynamicList> list_versions;     // version v is in force on [v*tick, (v+1)*tick)
};

namespace detail {

/// Token-order permutation (subset size == all tokens) or a token subset of
/// at least two tokens, in random order.
inline std::string burst_variant(const std::vector<std::string>& tokens, Rng& rng) {
  std::vector<std::size_t> order(tokens.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);
  const auto keep = static_cast<std::size_t>(
      rng.between(2, static_cast<std::int64_t>(tokens.size())));
  std::string out;
  for (std::size_t i = 0; i < keep; ++i) {
    if (i) out += ' ';
    out += tokens[order[i]];
  }
  return out;
}

}  // namespace detail

inline Simulation simulate(const TopicPool& pool, const SimulatorConfig& config) {
  config.validate(pool);

  Rng list_rng(derive_seed(config.seed, "list"));
  Rng arrival_rng(derive_seed(config.seed, "arrivals"));
  Rng burst_rng(derive_seed(config.seed, "bursts"));
  Rng click_rng(derive_seed(config.seed, "clicks"));

  Simulation sim;
  const auto seed_size = static_cast<std::size_t>(list_rng.between(
      static_cast<std::int64_t>(config.list_min), static_cast<std::int64_t>(config.list_max)));
  sim.list_versions.push_back(build_seed_list(pool, seed_size, list_rng));
  const auto version_at = [&](double t) -> std::size_t {
    const auto v = static_cast<std::size_t>(std::floor(t / config.tick_seconds));
    while (sim.list_versions.size() <= v)
      sim.list_versions.push_back(
          evolve_list(sim.list_versions.back(), pool, list_rng, config.replace_prob_per_tick));
    return v;
  };

  struct Event {
    double time;
    std::size_t seq;
    std::string query;
    Label label;
    Origin origin;
    std::size_t version;
    std::size_t session;
  };
  std::vector<Event> events;
  const std::size_t no_session = static_cast<std::size_t>(-1);

  // Background arrivals.
  const double mean_gap = 3600.0 / config.rate_per_hour;
  for (double t = arrival_rng.exponential(mean_gap); t < config.duration;
       t += arrival_rng.exponential(mean_gap)) {
    const std::size_t v = version_at(t);
    const DynamicList& list = sim.list_versions[v];
    const ListEntry e = list[static_cast<std::size_t>(arrival_rng.below(list.size()))];
    events.push_back({t, events.size(), query_text(pool, e), Label::TMN, Origin::Arrival, v, no_session});
  }

  // User sessions.
  std::vector<std::size_t> user_events;
  for (std::size_t s = 0; s < config.user_sessions.size(); ++s) {
    const UserSession& session = config.user_sessions[s];
    Rng user_rng(derive_seed(config.seed, "session", s));
    const auto& queries = pool.topics[session.topic];
    std::vector<std::size_t> order;
    double t = session.start;
    for (std::size_t q = 0; q < session.query_count; ++q) {
      if (q % queries.size() == 0) {
        order.resize(queries.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        user_rng.shuffle(order);
      }
      if (q > 0) t += user_rng.exponential(session.mean_gap);
      user_events.push_back(events.size());
      events.push_back({t, events.size(), queries[order[q % queries.size()]], Label::User,
                        Origin::User, version_at(t), s});
    }
  }

  // Bursts, triggered by user queries in time order.
  if (config.burst_enabled) {
    std::stable_sort(user_events.begin(), user_events.end(), [&](std::size_t a, std::size_t b) {
      return events[a].time < events[b].time;
    });
    for (std::size_t ue : user_events) {
      const double trigger = events[ue].time;
      const auto size = static_cast<std::size_t>(burst_rng.between(
          static_cast<std::int64_t>(config.burst_min), static_cast<std::int64_t>(config.burst_max)));
      if (size == 0) continue;
      const DynamicList& base_list = sim.list_versions[version_at(trigger)];
      std::vector<std::size_t> long_entries;
      for (std::size_t i = 0; i < base_list.size(); ++i)
        if (tokenize(query_text(pool, base_list[i])).size() >= 3) long_entries.push_back(i);

      const bool permute = burst_rng.bernoulli(config.permute_fraction) && !long_entries.empty();
      std::vector<std::string> tokens;
      if (permute) {
        const ListEntry base =
            base_list[long_entries[static_cast<std::size_t>(burst_rng.below(long_entries.size()))]];
        tokens = tokenize(query_text(pool, base));
      }
      for (std::size_t b = 0; b < size; ++b) {
        const double t = trigger + config.burst_window * (1.0 - burst_rng.uniform());
        const std::size_t v = version_at(t);
        if (permute) {
          events.push_back({t, events.size(), detail::burst_variant(tokens, burst_rng), Label::TMN,
                            Origin::BurstVariant, v, no_session});
        } else {
          const DynamicList& list = sim.list_versions[v];
          const ListEntry e = list[static_cast<std::size_t>(burst_rng.below(list.size()))];
          events.push_back({t, events.size(), query_text(pool, e), Label::TMN, Origin::BurstDraw, v,
                            no_session});
        }
      }
    }
  }

  std::sort(events.begin(), events.end(), [](const Event& a, const Event& b) {
    return a.time != b.time ? a.time < b.time : a.seq < b.seq;
  });
  sim.dataset.name = "simulated-seed-" + std::to_string(config.seed);
  for (const Event& e : events) {
    sim.dataset.records.push_back(
        {config.epoch + static_cast<std::int64_t>(std::floor(e.time)), e.query, e.label});
    sim.origin.push_back(e.origin);
    sim.list_version.push_back(e.version);
    sim.session.push_back(e.session);
    sim.click_through.push_back(e.label == Label::TMN && click_rng.bernoulli(config.click_prob));
  }
  return sim;
}

/// Side metadata for a simulated dataset: configuration, seed, and the
/// per-record click-through flags.
inline void write_simulation_metadata(std::ostream& out, const SimulatorConfig& c,
                                      const Simulation& sim) {
  out << "# simulated dataset metadata\n"
      << "seed=" << c.seed << '\n'
      << "rate_per_hour=" << format_double(c.rate_per_hour) << '\n'
      << "list_min=" << c.list_min << '\n'
      << "list_max=" << c.list_max << '\n'
      << "allow_out_of_band=" << (c.allow_out_of_band ? 1 : 0) << '\n'
      << "burst_enabled=" << (c.burst_enabled ? 1 : 0) << '\n'
      << "burst_min=" << c.burst_min << '\n'
      << "burst_max=" << c.burst_max << '\n'
      << "burst_window=" << format_double(c.burst_window) << '\n'
      << "permute_fraction=" << format_double(c.permute_fraction) << '\n'
      << "replace_prob_per_tick=" << format_double(c.replace_prob_per_tick) << '\n'
      << "tick_seconds=" << format_double(c.tick_seconds) << '\n'
      << "click_prob=" << format_double(c.click_prob) << '\n'
      << "duration=" << format_double(c.duration) << '\n'
      << "epoch=" << c.epoch << '\n';
  for (const UserSession& s : c.user_sessions)
    out << "session=" << format_double(s.start) << ',' << s.topic << ',' << s.query_count << ','
        << format_double(s.mean_gap) << '\n';
  out << "records=" << sim.dataset.size() << '\n'
      << "seed_list_size=" << (sim.list_versions.empty() ? 0 : sim.list_versions.front().size())
      << '\n'
      << "click_through=";
  for (bool b : sim.click_through) out << (b ? '1' : '0');
  out << '\n';
}

}  // namespace querysieve
