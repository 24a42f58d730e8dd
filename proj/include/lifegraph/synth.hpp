// Deterministic synthetic lifelog generator. Archetypes are behavioral
// profiles with known ground truth; each generated user draws entities from
// a private pool so user identity stays learnable downstream.
#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "lifegraph/ingest.hpp"

namespace lifegraph {

struct ArchetypeSpec {
  std::string name;
  std::array<double, kSensorCount> sensor_mix{};  // probability weights, sum 1
  // slot -> intensity; events are placed in these slots proportionally.
  std::vector<std::pair<int, double>> active_slots;
  int entity_pool_size = 12;  // entities per (user, sensor)
  double events_per_day_mean = 28.0;
  double events_per_day_spread = 6.0;
  Gender gender = Gender::M;

  void validate() const;
};

// The default three-archetype suite; trains in minutes on CPU.
std::vector<ArchetypeSpec> default_archetypes();

struct SynthResult {
  std::vector<UserMeta> users;
  std::vector<LifelogEvent> events;  // sorted by (user_id, start, sensor, entity)
};

// Generate `days` days of events for users_per_archetype users of each
// archetype, fully deterministic given the seed. The first day is
// 2013-11-04 to mirror the real dataset's era.
SynthResult generate_synthetic(const std::vector<ArchetypeSpec>& archetypes,
                               int users_per_archetype, int days, uint64_t seed);

}  // namespace lifegraph
