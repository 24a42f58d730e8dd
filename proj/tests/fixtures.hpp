// Shared test fixtures: a miniature graph schema small enough for exhaustive
// finite-difference checks, plus quick synthetic graphs.
#pragma once

#include "lifegraph/graph.hpp"
#include "lifegraph/manifold.hpp"
#include "lifegraph/model.hpp"
#include "lifegraph/synth.hpp"

namespace lifegraph::testfix {

// Four 6-hour slots instead of 96 quarter-hour ones: 11 fixed nodes and room
// for 2 sources.
inline GraphSchema tiny_schema() {
  GraphSchema schema;
  schema.slot_minutes = 360;
  schema.slots_per_day = 4;
  schema.n_max = 13;
  schema.entity_hash_buckets = 1;
  schema.k = 3 + kSensorCount + 1 + 1 + 1;  // 13
  return schema;
}

inline CcmSpec tiny_ccm() {
  CcmSpec ccm;
  ccm.d = 2;
  return ccm;
}

inline TrainConfig tiny_train() {
  TrainConfig cfg;
  cfg.h1 = 4;
  cfg.h2 = 4;
  cfg.h_d = 3;
  cfg.batch_size = 4;
  cfg.epochs = 1;
  cfg.seed = 21;
  return cfg;
}

inline LifelogEvent event_at(const std::string& user, int64_t date, SensorKind sensor,
                             const std::string& entity, int start_min, int end_min = -1) {
  LifelogEvent ev;
  ev.user_id = user;
  ev.sensor = sensor;
  ev.entity_key = entity;
  ev.start = date * 86400 + static_cast<int64_t>(start_min) * 60;
  if (end_min >= 0) ev.end = date * 86400 + static_cast<int64_t>(end_min) * 60;
  return ev;
}

inline SemanticGraph tiny_graph(uint64_t variant = 0) {
  int64_t date = civil_to_day(2013, 11, 5) + static_cast<int64_t>(variant);
  DayBucket bucket{"t" + std::to_string(variant), date, {}};
  bucket.events.push_back(event_at(bucket.user_id, date, SensorKind::Call, "a", 30, 90));
  bucket.events.push_back(event_at(bucket.user_id, date, SensorKind::SMS, "b", 400));
  bucket.events.push_back(
      event_at(bucket.user_id, date, SensorKind::Call, "a", 700 + static_cast<int>(variant % 600)));
  return build_day_graph(bucket, tiny_schema());
}

// Small full-size graphs from the default synthetic generator.
inline std::vector<SemanticGraph> synthetic_graphs(int users_per_archetype, int days,
                                                   uint64_t seed, const GraphSchema& schema) {
  auto data = generate_synthetic(default_archetypes(), users_per_archetype, days, seed);
  std::map<std::string, std::vector<LifelogEvent>> per_user;
  for (auto& ev : data.events) per_user[ev.user_id].push_back(std::move(ev));
  std::vector<SemanticGraph> graphs;
  for (auto& [user, events] : per_user) {
    for (auto& bucket : partition_by_day(std::move(events))) {
      graphs.push_back(build_day_graph(bucket, schema));
    }
  }
  return graphs;
}

}  // namespace lifegraph::testfix
