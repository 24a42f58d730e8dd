#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cmath>
#include <map>

#include "lifegraph/common.hpp"
#include "lifegraph/ingest.hpp"
#include "lifegraph/synth.hpp"

using namespace lifegraph;

TEST_CASE("default suite counts: 12 users, 360 day buckets") {
  auto result = generate_synthetic(default_archetypes(), 4, 30, 99);
  CHECK(result.users.size() == 12);

  std::map<std::string, std::vector<LifelogEvent>> per_user;
  for (auto& ev : result.events) per_user[ev.user_id].push_back(ev);
  size_t buckets = 0;
  for (auto& [user, events] : per_user) buckets += partition_by_day(events).size();
  CHECK(buckets == 360);
}

TEST_CASE("identical seeds give identical streams") {
  auto a = generate_synthetic(default_archetypes(), 2, 5, 7);
  auto b = generate_synthetic(default_archetypes(), 2, 5, 7);
  REQUIRE(a.events.size() == b.events.size());
  for (size_t i = 0; i < a.events.size(); ++i) {
    CHECK(a.events[i].user_id == b.events[i].user_id);
    CHECK(a.events[i].start == b.events[i].start);
    CHECK(a.events[i].sensor == b.events[i].sensor);
    CHECK(a.events[i].entity_key == b.events[i].entity_key);
    CHECK(a.events[i].end == b.events[i].end);
  }
  auto c = generate_synthetic(default_archetypes(), 2, 5, 8);
  bool any_diff = a.events.size() != c.events.size();
  for (size_t i = 0; !any_diff && i < a.events.size(); ++i) {
    any_diff = a.events[i].start != c.events[i].start;
  }
  CHECK(any_diff);
}

TEST_CASE("a morning-only archetype never fires outside its slots") {
  ArchetypeSpec morning = default_archetypes()[0];  // slots 24..47
  auto result = generate_synthetic({morning}, 3, 20, 5);
  CHECK(!result.events.empty());
  for (const auto& ev : result.events) {
    int slot = static_cast<int>(seconds_into_day(ev.start) / 60 / 15);
    CHECK(slot >= 24);
    CHECK(slot < 48);
  }
}

TEST_CASE("generated events always pass parse-level validation") {
  auto result = generate_synthetic(default_archetypes(), 4, 10, 31);
  for (const auto& ev : result.events) {
    CHECK(!ev.entity_key.empty());
    CHECK(!ev.user_id.empty());
    if (ev.end) CHECK(*ev.end >= ev.start);
    CHECK(static_cast<int>(ev.sensor) >= 0);
    CHECK(static_cast<int>(ev.sensor) < kSensorCount);
  }
}

TEST_CASE("user metadata carries gender and ground-truth archetype") {
  auto result = generate_synthetic(default_archetypes(), 2, 3, 11);
  REQUIRE(result.users.size() == 6);
  int with_archetype = 0;
  for (const auto& u : result.users) {
    CHECK(u.day_count == 3);
    if (!u.archetype.empty()) ++with_archetype;
  }
  CHECK(with_archetype == 6);
}

TEST_CASE("archetypes are separable by a nearest-centroid oracle on histograms") {
  auto result = generate_synthetic(default_archetypes(), 4, 30, 12345);

  // Per-day sensor-count histograms with ground-truth archetype labels.
  std::map<std::string, std::string> archetype_of;
  for (const auto& u : result.users) archetype_of[u.user_id] = u.archetype;
  std::map<std::string, std::vector<LifelogEvent>> per_user;
  for (auto& ev : result.events) per_user[ev.user_id].push_back(ev);

  std::vector<std::array<double, kSensorCount>> histograms;
  std::vector<std::string> labels;
  for (auto& [user, events] : per_user) {
    for (auto& bucket : partition_by_day(events)) {
      std::array<double, kSensorCount> h{};
      for (auto& ev : bucket.events) h[static_cast<int>(ev.sensor)] += 1.0;
      double total = 0.0;
      for (double v : h) total += v;
      for (double& v : h) v /= total;
      histograms.push_back(h);
      labels.push_back(archetype_of[user]);
    }
  }

  // Centroids from the first half of each class; score on everything.
  std::map<std::string, std::array<double, kSensorCount>> centroids;
  std::map<std::string, int> counts;
  for (size_t i = 0; i < histograms.size(); ++i) {
    auto& c = centroids[labels[i]];
    for (int s = 0; s < kSensorCount; ++s) c[s] += histograms[i][s];
    ++counts[labels[i]];
  }
  for (auto& [name, c] : centroids) {
    for (double& v : c) v /= counts[name];
  }
  int correct = 0;
  for (size_t i = 0; i < histograms.size(); ++i) {
    double best = 1e300;
    std::string best_name;
    for (auto& [name, c] : centroids) {
      double d2 = 0.0;
      for (int s = 0; s < kSensorCount; ++s) {
        double d = histograms[i][s] - c[s];
        d2 += d * d;
      }
      if (d2 < best) {
        best = d2;
        best_name = name;
      }
    }
    if (best_name == labels[i]) ++correct;
  }
  double accuracy = static_cast<double>(correct) / histograms.size();
  CHECK(accuracy >= 0.90);
}

TEST_CASE("degenerate archetype specs are refused") {
  ArchetypeSpec bad = default_archetypes()[0];
  bad.sensor_mix[0] += 0.5;  // no longer sums to 1
  CHECK_THROWS_AS(generate_synthetic({bad}, 1, 1, 1), UsageError);
  bad = default_archetypes()[0];
  bad.active_slots.clear();
  CHECK_THROWS_AS(generate_synthetic({bad}, 1, 1, 1), UsageError);
  CHECK_THROWS_AS(generate_synthetic({}, 1, 1, 1), UsageError);
  CHECK_THROWS_AS(generate_synthetic(default_archetypes(), 0, 1, 1), UsageError);
  CHECK_THROWS_AS(generate_synthetic(default_archetypes(), 1, 0, 1), UsageError);
}
