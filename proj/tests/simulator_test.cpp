#include <gtest/gtest.h>

#include <algorithm>
#include <set>
#include <sstream>

#include "querysieve/simulator.hpp"

namespace qs = querysieve;
using qs::Label;

namespace {

// 12 topics x 20 queries; every third query has four tokens.
qs::TopicPool make_pool() {
  qs::TopicPool pool;
  for (int t = 0; t < 12; ++t) {
    pool.names.push_back("topic" + std::to_string(t));
    pool.topics.emplace_back();
    for (int q = 0; q < 20; ++q) {
      std::string s = "w" + std::to_string(t) + "a" + std::to_string(q) + " w" + std::to_string(t) + "b";
      if (q % 3 == 0) s += " w" + std::to_string(t) + "c w" + std::to_string(t) + "d" + std::to_string(q);
      pool.topics.back().push_back(s);
    }
  }
  return pool;
}

const qs::TopicPool kPool = make_pool();

qs::SimulatorConfig quiet_config(std::uint64_t seed) {
  qs::SimulatorConfig c;
  c.seed = seed;
  c.burst_enabled = false;
  return c;
}

std::vector<std::string> sorted_tokens(const std::string& s) {
  auto t = qs::tokenize(s);
  std::sort(t.begin(), t.end());
  return t;
}

}  // namespace

TEST(TopicPool, ParsesTabSeparatedLines) {
  const auto pool = qs::parse_topic_pool({"# pool", "a\tred sox", "b\tsnow storm", "a\tfenway park", "a\tred sox"});
  EXPECT_EQ(pool.names, (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(pool.topics[0].size(), 2u);
  EXPECT_THROW(qs::parse_topic_pool({"no tab here"}), qs::ParseError);
  EXPECT_THROW(qs::parse_topic_pool({"a\t?!"}), qs::ParseError);
  EXPECT_THROW(qs::parse_topic_pool({"# only comments"}), qs::ParseError);
}

TEST(SeedList, WholePoolWhenSizeMatches) {
  const qs::TopicPool pool{{"x", "y"}, {{"a b", "c d"}, {"e f"}}};
  qs::Rng rng(3);
  auto list = qs::build_seed_list(pool, 3, rng);
  ASSERT_EQ(list.size(), 3u);
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (auto e : list) seen.insert({e.topic, e.query});
  EXPECT_EQ(seen.size(), 3u);
  EXPECT_THROW(qs::build_seed_list(pool, 0, rng), qs::UsageError);
  EXPECT_THROW(qs::build_seed_list(pool, 4, rng), qs::UsageError);
}

TEST(SeedList, DeterministicForFixedSeed) {
  qs::Rng a(11), b(11);
  EXPECT_EQ(qs::build_seed_list(kPool, 150, a), qs::build_seed_list(kPool, 150, b));
}

TEST(EvolveList, Examples) {
  qs::Rng rng(1);
  const auto list = qs::build_seed_list(kPool, 120, rng);
  EXPECT_EQ(qs::evolve_list(list, kPool, rng, 0.0), list);

  const qs::TopicPool singles{{"a", "b"}, {{"x y"}, {"z w"}}};
  const qs::DynamicList two{{0, 0}, {1, 0}};
  EXPECT_EQ(qs::evolve_list(two, singles, rng, 1.0), two);

  qs::Rng r1(8), r2(8);
  const auto e1 = qs::evolve_list(list, kPool, r1, 0.5);
  EXPECT_EQ(e1, qs::evolve_list(list, kPool, r2, 0.5));
  EXPECT_NE(e1, list);
  for (std::size_t i = 0; i < list.size(); ++i) EXPECT_EQ(e1[i].topic, list[i].topic);
}

TEST(Simulate, NoSessionsCountMatchesRate) {
  double total = 0.0;
  const int seeds = 1000;
  for (int s = 0; s < seeds; ++s) {
    const auto sim = qs::simulate(kPool, quiet_config(static_cast<std::uint64_t>(s)));
    for (const auto& r : sim.dataset.records) ASSERT_EQ(r.label, Label::TMN);
    total += static_cast<double>(sim.dataset.size());
  }
  EXPECT_NEAR(total / seeds, 10.0, 0.5);
}

TEST(Simulate, ArrivalsDoNotDependOnSessionsWithoutBursts) {
  auto a = quiet_config(21);
  a.user_sessions = {{100.0, 0, 6, 60.0}};
  auto b = a;
  b.user_sessions = {{2000.0, 3, 4, 30.0}};
  const auto sa = qs::simulate(kPool, a);
  const auto sb = qs::simulate(kPool, b);
  std::vector<qs::QueryRecord> ta, tb;
  for (const auto& r : sa.dataset.records)
    if (r.label == Label::TMN) ta.push_back(r);
  for (const auto& r : sb.dataset.records)
    if (r.label == Label::TMN) tb.push_back(r);
  EXPECT_EQ(ta, tb);
  EXPECT_FALSE(ta.empty());
}

TEST(Simulate, SessionWithBurstsCountsFromConfig) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    qs::SimulatorConfig c;
    c.seed = seed;
    c.user_sessions = {{600.0, 2, 5, 90.0}};
    const auto sim = qs::simulate(kPool, c);
    std::size_t users = 0, tmn_after = 0;
    const std::int64_t start = c.epoch + 600;
    for (std::size_t i = 0; i < sim.dataset.size(); ++i) {
      const auto& r = sim.dataset.records[i];
      if (r.label == Label::User) {
        ++users;
        const auto& topic = kPool.topics[2];
        EXPECT_NE(std::find(topic.begin(), topic.end(), r.query), topic.end());
      } else if (r.timestamp >= start) {
        ++tmn_after;
      }
    }
    EXPECT_EQ(users, 5u);
    EXPECT_GE(tmn_after, 5 * c.burst_min);
  }
}

TEST(Simulate, DeterministicAndSorted) {
  qs::SimulatorConfig c;
  c.seed = 77;
  c.duration = 7200.0;
  c.user_sessions = {{10.0, 1, 10, 120.0}, {3000.0, 4, 10, 60.0}};
  const auto a = qs::simulate(kPool, c);
  const auto b = qs::simulate(kPool, c);
  EXPECT_EQ(a.dataset.records, b.dataset.records);
  EXPECT_EQ(a.click_through, b.click_through);
  std::ostringstream ma, mb;
  qs::write_simulation_metadata(ma, c, a);
  qs::write_simulation_metadata(mb, c, b);
  EXPECT_EQ(ma.str(), mb.str());
  EXPECT_TRUE(std::is_sorted(a.dataset.records.begin(), a.dataset.records.end(),
                             [](const auto& x, const auto& y) { return x.timestamp < y.timestamp; }));
  c.seed = 78;
  EXPECT_NE(qs::simulate(kPool, c).dataset.records, a.dataset.records);
}

TEST(Simulate, TmnQueriesComeFromTheListInForce) {
  qs::SimulatorConfig c;
  c.seed = 5;
  c.duration = 20 * 3600.0;
  c.replace_prob_per_tick = 0.3;
  c.permute_fraction = 0.5;
  for (int s = 0; s < 8; ++s) c.user_sessions.push_back({s * 9000.0, static_cast<std::size_t>(s), 6, 60.0});
  const auto sim = qs::simulate(kPool, c);
  std::size_t variants = 0;
  for (std::size_t i = 0; i < sim.dataset.size(); ++i) {
    const auto& r = sim.dataset.records[i];
    if (r.label == Label::User) {
      EXPECT_EQ(sim.origin[i], qs::Origin::User);
      EXPECT_FALSE(sim.click_through[i]);
      const auto& topic = kPool.topics[c.user_sessions[sim.session[i]].topic];
      EXPECT_NE(std::find(topic.begin(), topic.end(), r.query), topic.end());
      continue;
    }
    const auto& list = sim.list_versions.at(sim.list_version[i]);
    if (sim.origin[i] == qs::Origin::BurstVariant) {
      ++variants;
      // Some list entry with >= 3 tokens contains every token of the variant.
      const auto vt = sorted_tokens(r.query);
      bool found = false;
      for (auto e : list) {
        const auto lt = sorted_tokens(qs::query_text(kPool, e));
        if (lt.size() >= 3 && std::includes(lt.begin(), lt.end(), vt.begin(), vt.end())) found = true;
      }
      EXPECT_TRUE(found) << r.query;
      EXPECT_GE(vt.size(), 2u);
    } else {
      bool found = false;
      for (auto e : list) found = found || qs::query_text(kPool, e) == r.query;
      EXPECT_TRUE(found) << r.query;
    }
  }
  EXPECT_GT(variants, 0u);
  for (const auto& l : sim.list_versions) {
    EXPECT_GE(l.size(), c.list_min);
    EXPECT_LE(l.size(), c.list_max);
  }
  EXPECT_GE(sim.list_versions.size(), 20u);
}

TEST(Simulate, BurstsLandWithinTheWindowAfterTheirTrigger) {
  qs::SimulatorConfig c;
  c.seed = 9;
  c.rate_per_hour = 0.01;
  c.user_sessions = {{100.0, 0, 1, 60.0}};
  const auto sim = qs::simulate(kPool, c);
  std::int64_t trigger = -1;
  for (std::size_t i = 0; i < sim.dataset.size(); ++i)
    if (sim.origin[i] == qs::Origin::User) trigger = sim.dataset.records[i].timestamp;
  ASSERT_GE(trigger, 0);
  std::size_t burst = 0;
  for (std::size_t i = 0; i < sim.dataset.size(); ++i) {
    if (sim.origin[i] != qs::Origin::BurstDraw && sim.origin[i] != qs::Origin::BurstVariant) continue;
    ++burst;
    EXPECT_GE(sim.dataset.records[i].timestamp, trigger);
    EXPECT_LE(sim.dataset.records[i].timestamp, trigger + 60);
  }
  EXPECT_GE(burst, c.burst_min);
  EXPECT_LE(burst, c.burst_max);
}

TEST(SimulatorConfig, Validation) {
  qs::SimulatorConfig c;
  EXPECT_NO_THROW(c.validate(kPool));
  auto bad = c;
  bad.list_min = 50;
  EXPECT_THROW(bad.validate(kPool), qs::UsageError);
  bad.allow_out_of_band = true;
  EXPECT_NO_THROW(bad.validate(kPool));
  bad = c;
  bad.rate_per_hour = 0.0;
  EXPECT_THROW(bad.validate(kPool), qs::UsageError);
  bad = c;
  bad.burst_min = 9;
  EXPECT_THROW(bad.validate(kPool), qs::UsageError);
  bad = c;
  bad.user_sessions = {{0.0, 99, 1, 60.0}};
  EXPECT_THROW(bad.validate(kPool), qs::UsageError);
  const qs::TopicPool tiny{{"a"}, {{"x y", "z w"}}};
  EXPECT_THROW(c.validate(tiny), qs::UsageError);
}
