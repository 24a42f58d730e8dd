#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "lifegraph/common.hpp"
#include "lifegraph/graph.hpp"
#include "lifegraph/rng.hpp"

using namespace lifegraph;

namespace {

const int64_t kDay = civil_to_day(2013, 11, 5);

LifelogEvent event_at(SensorKind sensor, const std::string& entity, int start_min,
                      int end_min = -1) {
  LifelogEvent ev;
  ev.user_id = "u";
  ev.sensor = sensor;
  ev.entity_key = entity;
  ev.start = kDay * 86400 + static_cast<int64_t>(start_min) * 60;
  if (end_min >= 0) ev.end = kDay * 86400 + static_cast<int64_t>(end_min) * 60;
  return ev;
}

DayBucket bucket_of(std::vector<LifelogEvent> events) { return DayBucket{"u", kDay, std::move(events)}; }

// Independent oracle: count pair increments straight from the event list
// into a map, with its own slot arithmetic.
std::map<std::pair<int, int>, int> brute_force_adjacency(const SemanticGraph& g,
                                                         const DayBucket& bucket) {
  std::map<std::pair<int, int>, int> counts;
  for (int s = 0; s + 1 < 96; ++s) counts[{s, s + 1}] = 1;

  std::map<std::pair<int, std::string>, int> source_node;
  for (int i = 0; i < g.n(); ++i) {
    if (g.nodes[i].kind == NodeKind::Source) {
      source_node[{static_cast<int>(g.nodes[i].sensor), g.nodes[i].entity}] = i;
    }
  }
  for (const auto& ev : bucket.events) {
    auto it = source_node.find({static_cast<int>(ev.sensor), ev.entity_key});
    if (it == source_node.end()) continue;  // dropped by the source cap
    int src = it->second;
    counts[{96 + static_cast<int>(ev.sensor), src}] += 1;
    int64_t start_min = (ev.start - kDay * 86400) / 60;
    counts[{static_cast<int>(std::min<int64_t>(start_min / 15, 95)), src}] += 1;
    if (ev.end) {
      int64_t end_min = (*ev.end - kDay * 86400) / 60;
      counts[{src, static_cast<int>(std::min<int64_t>(end_min / 15, 95))}] += 1;
    }
  }
  return counts;
}

void check_against_oracle(const SemanticGraph& g, const DayBucket& bucket) {
  auto oracle = brute_force_adjacency(g, bucket);
  for (int i = 0; i < g.n(); ++i) {
    for (int j = 0; j < g.n(); ++j) {
      auto it = oracle.find({i, j});
      int expected = it == oracle.end() ? 0 : it->second;
      REQUIRE(g.A(i, j) == expected);
    }
  }
}

DayBucket random_bucket(Rng& rng, int max_events) {
  std::vector<LifelogEvent> events;
  int count = static_cast<int>(rng.uniform_index(max_events + 1));
  for (int e = 0; e < count; ++e) {
    auto sensor = static_cast<SensorKind>(rng.uniform_index(kSensorCount));
    std::string entity = "e" + std::to_string(rng.uniform_index(12));
    int start = static_cast<int>(rng.uniform_index(1440));
    if (rng.uniform() < 0.5) {
      int end = start + static_cast<int>(rng.uniform_index(1440 - start + 1));
      events.push_back(event_at(sensor, entity, start, end));
    } else {
      events.push_back(event_at(sensor, entity, start));
    }
  }
  return bucket_of(std::move(events));
}

}  // namespace

TEST_CASE("empty day: 103 nodes, only the will-be chain") {
  GraphSchema schema;
  auto g = build_day_graph(bucket_of({}), schema);
  CHECK(g.n() == 103);
  int edges = 0;
  int64_t weight = 0;
  for (int i = 0; i < g.n(); ++i) {
    for (int j = 0; j < g.n(); ++j) {
      if (g.A(i, j) > 0) {
        ++edges;
        weight += g.A(i, j);
      }
    }
  }
  CHECK(edges == 95);
  CHECK(weight == 95);
  for (int s = 0; s + 1 < 96; ++s) CHECK(g.A(s, s + 1) == 1);
}

TEST_CASE("calling the same number twice gives a weight-2 contain edge") {
  GraphSchema schema;
  auto g = build_day_graph(
      bucket_of({event_at(SensorKind::Call, "+98", 9 * 60), event_at(SensorKind::Call, "+98", 600)}),
      schema);
  REQUIRE(g.n() == 104);
  int call_node = 96 + static_cast<int>(SensorKind::Call);
  CHECK(g.A(call_node, 103) == 2);
  // Two start edges land on the two slots.
  CHECK(g.A((9 * 60) / 15, 103) == 1);
  CHECK(g.A(600 / 15, 103) == 1);
}

TEST_CASE("adjacency matches the brute-force oracle on random buckets") {
  GraphSchema schema;
  Rng rng(4242);
  for (int trial = 0; trial < 100; ++trial) {
    DayBucket bucket = random_bucket(rng, 50);
    auto g = build_day_graph(bucket, schema);
    check_against_oracle(g, bucket);
  }
}

TEST_CASE("every nonzero entry is one of the four legal semantics") {
  GraphSchema schema;
  Rng rng(777);
  for (int trial = 0; trial < 25; ++trial) {
    DayBucket bucket = random_bucket(rng, 50);
    auto g = build_day_graph(bucket, schema);
    for (int i = 0; i < g.n(); ++i) {
      for (int j = 0; j < g.n(); ++j) {
        if (g.A(i, j) > 0) {
          REQUIRE(classify_edge(g.nodes[i].kind, g.nodes[j].kind).has_value());
        }
      }
    }
  }
}

TEST_CASE("edge-weight conservation against kept events") {
  GraphSchema schema;
  Rng rng(31337);
  for (int trial = 0; trial < 25; ++trial) {
    DayBucket bucket = random_bucket(rng, 50);
    auto g = build_day_graph(bucket, schema);
    int64_t kept = static_cast<int64_t>(bucket.events.size()) - g.dropped_events;
    int64_t with_end = 0;
    for (auto& ev : bucket.events) {
      if (ev.end) ++with_end;  // no drops expected below the cap
    }
    int64_t contain = 0, start = 0, end = 0;
    for (int i = 0; i < g.n(); ++i) {
      for (int j = 0; j < g.n(); ++j) {
        if (g.A(i, j) == 0) continue;
        switch (*classify_edge(g.nodes[i].kind, g.nodes[j].kind)) {
          case EdgeSemantic::Contain: contain += g.A(i, j); break;
          case EdgeSemantic::Start: start += g.A(i, j); break;
          case EdgeSemantic::End: end += g.A(i, j); break;
          case EdgeSemantic::WillBe: break;
        }
      }
    }
    CHECK(contain == kept);
    CHECK(start == kept);
    CHECK(end == with_end);
  }
}

TEST_CASE("same bucket builds bit-identical graphs; permutation changes nothing") {
  GraphSchema schema;
  Rng rng(99);
  DayBucket bucket = random_bucket(rng, 40);
  auto g1 = build_day_graph(bucket, schema);
  auto g2 = build_day_graph(bucket, schema);
  CHECK(g1.A == g2.A);
  CHECK(g1.X == g2.X);

  DayBucket shuffled = bucket;
  for (size_t i = shuffled.events.size(); i > 1; --i) {
    std::swap(shuffled.events[i - 1], shuffled.events[rng.uniform_index(i)]);
  }
  auto g3 = build_day_graph(shuffled, schema);
  CHECK(g1.A == g3.A);
  CHECK(g1.X == g3.X);
}

TEST_CASE("source cap keeps the busiest sources and counts the drops") {
  GraphSchema schema;
  schema.n_max = 106;  // room for exactly 3 sources
  std::vector<LifelogEvent> events;
  for (int e = 0; e < 5; ++e) events.push_back(event_at(SensorKind::Call, "busy", 60 + e));
  for (int e = 0; e < 4; ++e) events.push_back(event_at(SensorKind::SMS, "mid", 200 + e));
  for (int e = 0; e < 3; ++e) events.push_back(event_at(SensorKind::WiFi, "low", 300 + e));
  events.push_back(event_at(SensorKind::BluetoothProximity, "rare", 400));
  auto g = build_day_graph(bucket_of(events), schema);
  CHECK(g.n() == 106);
  CHECK(g.dropped_sources == 1);
  CHECK(g.dropped_events == 1);
  for (int i = 103; i < g.n(); ++i) CHECK(g.nodes[i].entity != "rare");
}

TEST_CASE("node features have the documented layout") {
  GraphSchema schema;
  auto g = build_day_graph(
      bucket_of({event_at(SensorKind::Call, "+98", 9 * 60), event_at(SensorKind::Call, "+98", 600)}),
      schema);
  REQUIRE(g.X.cols() == 28);

  // Time node, slot 0: kind one-hot (1,0,0), no sensor block, slot fraction 0.
  CHECK(g.X(0, 0) == 1.0);
  CHECK(g.X(0, 1) == 0.0);
  CHECK(g.X(0, 2) == 0.0);
  for (int c = 3; c < 10; ++c) CHECK(g.X(0, c) == 0.0);
  CHECK(g.X(0, 10) == 0.0);
  // Slot 95 has fraction exactly 1.
  CHECK(g.X(95, 10) == 1.0);

  // Sensor node: kind one-hot (0,1,0) and its own sensor bit.
  int call_node = 96 + static_cast<int>(SensorKind::Call);
  CHECK(g.X(call_node, 1) == 1.0);
  CHECK(g.X(call_node, 3 + static_cast<int>(SensorKind::Call)) == 1.0);

  // Source node for a twice-called number: degree log(1+4), owning sensor
  // one-hot, exactly one hash bucket bit.
  CHECK(g.X(103, 2) == 1.0);
  CHECK(g.X(103, 3 + static_cast<int>(SensorKind::Call)) == 1.0);
  CHECK(g.X(103, 27) == doctest::Approx(std::log(5.0)).epsilon(1e-12));
  int bucket_bits = 0;
  for (int c = 11; c < 27; ++c) bucket_bits += g.X(103, c) != 0.0 ? 1 : 0;
  CHECK(bucket_bits == 1);
  // Mean start-slot fraction of slots 36 and 40.
  CHECK(g.X(103, 10) == doctest::Approx((36.0 + 40.0) / 2.0 / 95.0));

  // No non-finite entries anywhere.
  for (size_t i = 0; i < g.X.size(); ++i) CHECK(std::isfinite(g.X.data()[i]));
}

TEST_CASE("normalize_adjacency: single node gets a self loop") {
  IntMatrix a(1, 1);
  auto norm = normalize_adjacency(a, {1});
  REQUIRE(norm.rows() == 1);
  CHECK(norm(0, 0) == 1.0);
}

TEST_CASE("normalize_adjacency: two nodes, one edge") {
  IntMatrix a(2, 2);
  a(0, 1) = 3;  // weights collapse to 1 for propagation
  auto norm = normalize_adjacency(a, {1, 1});
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) CHECK(norm(i, j) == doctest::Approx(0.5).epsilon(1e-12));
  }
}

TEST_CASE("normalize_adjacency masks padded slots to zero and stays symmetric") {
  GraphSchema schema;
  Rng rng(5);
  auto g = build_day_graph(bucket_of({event_at(SensorKind::SMS, "x", 100, 200)}), schema);
  auto norm = normalize_adjacency(g.A, g.mask());
  REQUIRE(norm.rows() == schema.n_max);
  for (int i = 0; i < norm.rows(); ++i) {
    for (int j = 0; j < norm.cols(); ++j) {
      CHECK(norm(i, j) == norm(j, i));
      if (i >= g.n() || j >= g.n()) CHECK(norm(i, j) == 0.0);
    }
  }
  // Isolated real rows still carry their self loop.
  for (int i = 0; i < g.n(); ++i) CHECK(norm(i, i) > 0.0);
}

TEST_CASE("dot export counts and pen widths") {
  GraphSchema schema;
  ExportHeader header{"cafebabe", 1};
  auto empty = build_day_graph(bucket_of({}), schema);
  std::string dot = export_dot(empty, header);
  // Node statements carry "[color=", edge statements carry "->".
  size_t nodes = 0, edges = 0, pos = 0;
  while ((pos = dot.find("[color=", pos)) != std::string::npos) {
    ++nodes;
    ++pos;
  }
  pos = 0;
  while ((pos = dot.find(" -> ", pos)) != std::string::npos) {
    ++edges;
    ++pos;
  }
  CHECK(nodes == 103);
  CHECK(edges == 95);
  CHECK(dot.find("color=black") != std::string::npos);
  CHECK(dot.find("color=cyan") != std::string::npos);
  CHECK(dot.rfind("// lifegraph config=cafebabe seed=1", 0) == 0);

  auto g = build_day_graph(
      bucket_of({event_at(SensorKind::Call, "+98", 100), event_at(SensorKind::Call, "+98", 101)}),
      schema);
  std::string dot2 = export_dot(g, header);
  CHECK(dot2.find("penwidth=2") != std::string::npos);
  CHECK(dot2.find("color=red") != std::string::npos);
  CHECK(export_graph(g, "dot", header) == dot2);
  CHECK_THROWS_AS(export_graph(g, "svg", header), UsageError);
}

TEST_CASE("nodelink round-trips to an identical adjacency") {
  GraphSchema schema;
  Rng rng(2718);
  for (int trial = 0; trial < 10; ++trial) {
    DayBucket bucket = random_bucket(rng, 30);
    auto g = build_day_graph(bucket, schema);
    auto back = import_nodelink(export_nodelink(g, {"h", 7}));
    CHECK(back.user_id == g.user_id);
    CHECK(back.date == g.date);
    CHECK(back.n_max == g.n_max);
    REQUIRE(back.n() == g.n());
    CHECK(back.A == g.A);
    for (int i = 0; i < g.n(); ++i) {
      CHECK(back.nodes[i].kind == g.nodes[i].kind);
      CHECK(back.nodes[i].entity == g.nodes[i].entity);
    }
    // Recomputed features match, so the sidecar is redundant but consistent.
    CHECK(node_features(back, schema) == g.X);
  }
}

TEST_CASE("an end time at exactly midnight maps to the last slot") {
  GraphSchema schema;
  auto g = build_day_graph(bucket_of({event_at(SensorKind::Call, "+98", 1430, 1440)}), schema);
  CHECK(g.A(103, 95) == 1);
}

TEST_CASE("schema validation catches inconsistent shapes") {
  GraphSchema schema;
  schema.slot_minutes = 10;
  CHECK_THROWS_AS(schema.validate(), UsageError);
  schema = GraphSchema{};
  schema.n_max = 100;  // less than 103 fixed nodes
  CHECK_THROWS_AS(schema.validate(), UsageError);
  schema = GraphSchema{};
  schema.k = 17;
  CHECK_THROWS_AS(schema.validate(), UsageError);
}
