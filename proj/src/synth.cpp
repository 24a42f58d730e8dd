#include "lifegraph/synth.hpp"

#include <algorithm>
#include <cmath>

#include "lifegraph/common.hpp"
#include "lifegraph/rng.hpp"

namespace lifegraph {

void ArchetypeSpec::validate() const {
  double sum = 0.0;
  for (double w : sensor_mix) {
    if (w < 0.0) throw UsageError("ArchetypeSpec " + name + ": negative sensor weight");
    sum += w;
  }
  if (std::fabs(sum - 1.0) > 1e-9) {
    throw UsageError("ArchetypeSpec " + name + ": sensor_mix must sum to 1");
  }
  if (active_slots.empty()) throw UsageError("ArchetypeSpec " + name + ": no active slots");
  for (auto& [slot, intensity] : active_slots) {
    if (slot < 0 || slot > 95 || intensity < 0.0) {
      throw UsageError("ArchetypeSpec " + name + ": bad active slot");
    }
  }
  if (entity_pool_size < 1) throw UsageError("ArchetypeSpec " + name + ": empty entity pool");
}

namespace {

std::vector<std::pair<int, double>> slot_range(int lo, int hi, double intensity) {
  std::vector<std::pair<int, double>> out;
  for (int s = lo; s <= hi; ++s) out.emplace_back(s, intensity);
  return out;
}

int weighted_pick(const std::vector<double>& cumulative, double total, Rng& rng) {
  double r = rng.uniform() * total;
  auto it = std::upper_bound(cumulative.begin(), cumulative.end(), r);
  int idx = static_cast<int>(it - cumulative.begin());
  if (idx >= static_cast<int>(cumulative.size())) idx = static_cast<int>(cumulative.size()) - 1;
  return idx;
}

}  // namespace

std::vector<ArchetypeSpec> default_archetypes() {
  std::vector<ArchetypeSpec> out;

  ArchetypeSpec morning;
  morning.name = "morning_caller";
  morning.sensor_mix = {0.10, 0.10, 0.25, 0.45, 0.04, 0.05, 0.01};
  morning.active_slots = slot_range(24, 47, 1.0);  // 06:00-12:00
  morning.entity_pool_size = 12;
  morning.events_per_day_mean = 28.0;
  morning.events_per_day_spread = 6.0;
  morning.gender = Gender::M;
  out.push_back(std::move(morning));

  ArchetypeSpec night;
  night.name = "night_app_user";
  night.sensor_mix = {0.15, 0.05, 0.10, 0.05, 0.55, 0.05, 0.05};
  night.active_slots = slot_range(76, 95, 1.0);  // 19:00-24:00
  night.entity_pool_size = 15;
  night.events_per_day_mean = 32.0;
  night.events_per_day_spread = 8.0;
  night.gender = Gender::F;
  out.push_back(std::move(night));

  ArchetypeSpec commuter;
  commuter.name = "commuter";
  commuter.sensor_mix = {0.25, 0.30, 0.03, 0.10, 0.10, 0.20, 0.02};
  commuter.active_slots = slot_range(28, 35, 1.0);  // 07:00-09:00
  {
    auto evening = slot_range(68, 75, 1.0);  // 17:00-19:00
    commuter.active_slots.insert(commuter.active_slots.end(), evening.begin(), evening.end());
  }
  commuter.entity_pool_size = 10;
  commuter.events_per_day_mean = 25.0;
  commuter.events_per_day_spread = 5.0;
  commuter.gender = Gender::M;
  out.push_back(std::move(commuter));

  return out;
}

SynthResult generate_synthetic(const std::vector<ArchetypeSpec>& archetypes,
                               int users_per_archetype, int days, uint64_t seed) {
  if (archetypes.empty()) throw UsageError("generate_synthetic: need at least one archetype");
  if (days < 1) throw UsageError("generate_synthetic: days must be >= 1");
  if (users_per_archetype < 1) throw UsageError("generate_synthetic: users_per_archetype >= 1");
  for (const auto& a : archetypes) a.validate();

  const int64_t first_day = civil_to_day(2013, 11, 4);
  Rng master(seed);

  SynthResult result;
  for (size_t ai = 0; ai < archetypes.size(); ++ai) {
    const ArchetypeSpec& arch = archetypes[ai];

    // Sensor and slot pickers.
    std::vector<double> sensor_cum;
    double sensor_total = 0.0;
    for (double w : arch.sensor_mix) {
      sensor_total += w;
      sensor_cum.push_back(sensor_total);
    }
    std::vector<double> slot_cum;
    double slot_total = 0.0;
    for (auto& [slot, intensity] : arch.active_slots) {
      slot_total += intensity;
      slot_cum.push_back(slot_total);
    }
    if (slot_total <= 0.0) throw UsageError("ArchetypeSpec " + arch.name + ": zero intensity");

    for (int ui = 0; ui < users_per_archetype; ++ui) {
      std::string user_id = arch.name + "_u" + std::to_string(ui);
      Rng rng = master.fork(fnv1a64(user_id));

      UserMeta meta;
      meta.user_id = user_id;
      meta.gender = arch.gender;
      meta.day_count = days;
      meta.archetype = arch.name;
      result.users.push_back(meta);

      for (int d = 0; d < days; ++d) {
        int64_t date = first_day + d;
        double raw = arch.events_per_day_mean + arch.events_per_day_spread * rng.gaussian();
        int count = std::max(1, static_cast<int>(std::lround(raw)));
        for (int e = 0; e < count; ++e) {
          LifelogEvent ev;
          ev.user_id = user_id;
          ev.sensor = static_cast<SensorKind>(weighted_pick(sensor_cum, sensor_total, rng));
          int slot = arch.active_slots[weighted_pick(slot_cum, slot_total, rng)].first;
          int64_t within = static_cast<int64_t>(rng.uniform_index(15 * 60));
          ev.start = date * kSecondsPerDay + static_cast<int64_t>(slot) * 15 * 60 + within;
          int entity = static_cast<int>(rng.uniform_index(arch.entity_pool_size));
          ev.entity_key = user_id + ":" + sensor_name(ev.sensor) + ":" + std::to_string(entity);
          // Calls and app sessions get a duration; other sensors are
          // instantaneous observations. Durations are clamped to the day
          // boundary so a user-day always maps to exactly one bucket.
          int64_t day_end = (date + 1) * kSecondsPerDay;
          if (ev.sensor == SensorKind::Call) {
            ev.end = std::min(day_end, ev.start + 30 + static_cast<int64_t>(rng.uniform_index(600)));
          } else if (ev.sensor == SensorKind::ApplicationUsage) {
            ev.end = std::min(day_end, ev.start + 60 + static_cast<int64_t>(rng.uniform_index(3600)));
          }
          result.events.push_back(std::move(ev));
        }
      }
    }
  }

  std::stable_sort(result.events.begin(), result.events.end(),
                   [](const LifelogEvent& a, const LifelogEvent& b) {
                     if (a.user_id != b.user_id) return a.user_id < b.user_id;
                     if (a.start != b.start) return a.start < b.start;
                     if (a.sensor != b.sensor) return a.sensor < b.sensor;
                     return a.entity_key < b.entity_key;
                   });
  std::sort(result.users.begin(), result.users.end(),
            [](const UserMeta& a, const UserMeta& b) { return a.user_id < b.user_id; });
  return result;
}

}  // namespace lifegraph
