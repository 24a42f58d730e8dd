#include "lifegraph/graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include <json.hpp>

#include "lifegraph/common.hpp"
#include "lifegraph/rng.hpp"

namespace lifegraph {

void GraphSchema::validate() const {
  if (slots_per_day * slot_minutes != 1440) {
    throw UsageError("GraphSchema: slots_per_day * slot_minutes must be 1440");
  }
  if (source_cap() < 1) throw UsageError("GraphSchema: n_max leaves no room for source nodes");
  if (k != 3 + kSensorCount + 1 + entity_hash_buckets + 1) {
    throw UsageError("GraphSchema: k must equal 3 + 7 + 1 + entity_hash_buckets + 1");
  }
}

const char* edge_semantic_name(EdgeSemantic s) {
  switch (s) {
    case EdgeSemantic::Contain: return "contain";
    case EdgeSemantic::Start: return "start";
    case EdgeSemantic::End: return "end";
    case EdgeSemantic::WillBe: return "will_be";
  }
  return "?";
}

std::optional<EdgeSemantic> classify_edge(NodeKind from, NodeKind to) {
  if (from == NodeKind::Sensor && to == NodeKind::Source) return EdgeSemantic::Contain;
  if (from == NodeKind::Time && to == NodeKind::Source) return EdgeSemantic::Start;
  if (from == NodeKind::Source && to == NodeKind::Time) return EdgeSemantic::End;
  if (from == NodeKind::Time && to == NodeKind::Time) return EdgeSemantic::WillBe;
  return std::nullopt;
}

std::vector<uint8_t> SemanticGraph::mask() const {
  std::vector<uint8_t> m(n_max, 0);
  for (int i = 0; i < n(); ++i) m[i] = 1;
  return m;
}

int slot_of(int64_t ts, int64_t date, const GraphSchema& schema) {
  int64_t minutes = (ts - date * kSecondsPerDay) / 60;
  int slot = static_cast<int>(minutes / schema.slot_minutes);
  if (slot < 0) slot = 0;
  if (slot >= schema.slots_per_day) slot = schema.slots_per_day - 1;
  return slot;
}

SemanticGraph build_day_graph(const DayBucket& bucket, const GraphSchema& schema) {
  schema.validate();

  // Canonical event order makes source numbering (and hence X and A)
  // independent of input permutation.
  std::vector<LifelogEvent> events = bucket.events;
  std::stable_sort(events.begin(), events.end(),
                   [](const LifelogEvent& a, const LifelogEvent& b) {
                     if (a.start != b.start) return a.start < b.start;
                     if (a.sensor != b.sensor) return a.sensor < b.sensor;
                     if (a.entity_key != b.entity_key) return a.entity_key < b.entity_key;
                     return a.end.value_or(a.start) < b.end.value_or(b.start);
                   });

  // Apply the source cap: keep the highest-count sources, break ties toward
  // earlier first occurrence.
  using SourceId = std::pair<int, std::string>;  // (sensor, entity)
  std::map<SourceId, int64_t> counts;
  std::vector<SourceId> first_seen;
  for (const auto& ev : events) {
    SourceId id{static_cast<int>(ev.sensor), ev.entity_key};
    auto it = counts.find(id);
    if (it == counts.end()) {
      counts.emplace(id, 1);
      first_seen.push_back(id);
    } else {
      ++it->second;
    }
  }
  std::map<SourceId, bool> kept;
  int dropped_sources = 0;
  if (static_cast<int>(counts.size()) > schema.source_cap()) {
    std::vector<std::pair<int64_t, int>> order;  // (-count, first-seen rank)
    for (size_t r = 0; r < first_seen.size(); ++r) {
      order.emplace_back(-counts[first_seen[r]], static_cast<int>(r));
    }
    std::sort(order.begin(), order.end());
    for (auto& id : first_seen) kept[id] = false;
    for (int i = 0; i < schema.source_cap(); ++i) kept[first_seen[order[i].second]] = true;
    dropped_sources = static_cast<int>(counts.size()) - schema.source_cap();
  } else {
    for (auto& id : first_seen) kept[id] = true;
  }

  SemanticGraph g;
  g.user_id = bucket.user_id;
  g.date = bucket.date;
  g.n_max = schema.n_max;
  g.dropped_sources = dropped_sources;

  for (int s = 0; s < schema.slots_per_day; ++s) {
    Node node;
    node.kind = NodeKind::Time;
    node.slot = s;
    g.nodes.push_back(node);
  }
  for (int s = 0; s < kSensorCount; ++s) {
    Node node;
    node.kind = NodeKind::Sensor;
    node.sensor = static_cast<SensorKind>(s);
    g.nodes.push_back(node);
  }
  std::map<SourceId, int> source_index;  // node index per kept source
  for (const auto& id : first_seen) {
    if (!kept[id]) continue;
    Node node;
    node.kind = NodeKind::Source;
    node.sensor = static_cast<SensorKind>(id.first);
    node.entity = id.second;
    source_index.emplace(id, g.n());
    g.nodes.push_back(node);
  }

  int n = g.n();
  g.A = IntMatrix(n, n);
  for (int s = 0; s + 1 < schema.slots_per_day; ++s) g.A(s, s + 1) = 1;

  for (const auto& ev : events) {
    SourceId id{static_cast<int>(ev.sensor), ev.entity_key};
    auto it = source_index.find(id);
    if (it == source_index.end()) {
      ++g.dropped_events;
      continue;
    }
    int src = it->second;
    int sensor_node = schema.slots_per_day + static_cast<int>(ev.sensor);
    g.A(sensor_node, src) += 1;                                      // contain
    g.A(slot_of(ev.start, bucket.date, schema), src) += 1;           // start
    if (ev.end) g.A(src, slot_of(*ev.end, bucket.date, schema)) += 1;  // end
  }

  g.X = node_features(g, schema);
  return g;
}

Matrix node_features(const SemanticGraph& graph, const GraphSchema& schema) {
  int n = graph.n();
  Matrix x(n, schema.k);
  const int kind_off = 0;
  const int sensor_off = 3;
  const int slot_off = sensor_off + kSensorCount;
  const int hash_off = slot_off + 1;
  const int degree_off = hash_off + schema.entity_hash_buckets;

  // Mean start-slot fraction per source, weighted by event count: every
  // start edge increments A[time][source] once, so the weighted mean over
  // incoming start edges is exactly the event-weighted mean.
  std::vector<double> slot_sum(n, 0.0), slot_weight(n, 0.0);
  for (int t = 0; t < schema.slots_per_day; ++t) {
    for (int j = 0; j < n; ++j) {
      if (graph.nodes[j].kind != NodeKind::Source) continue;
      int w = graph.A(t, j);
      if (w > 0) {
        slot_sum[j] += static_cast<double>(w) * t;
        slot_weight[j] += w;
      }
    }
  }

  double max_slot = static_cast<double>(schema.slots_per_day - 1);
  for (int i = 0; i < n; ++i) {
    const Node& node = graph.nodes[i];
    x(i, kind_off + static_cast<int>(node.kind)) = 1.0;
    switch (node.kind) {
      case NodeKind::Time:
        x(i, slot_off) = static_cast<double>(node.slot) / max_slot;
        break;
      case NodeKind::Sensor:
        x(i, sensor_off + static_cast<int>(node.sensor)) = 1.0;
        break;
      case NodeKind::Source: {
        x(i, sensor_off + static_cast<int>(node.sensor)) = 1.0;
        if (slot_weight[i] > 0.0) x(i, slot_off) = slot_sum[i] / slot_weight[i] / max_slot;
        int bucket = static_cast<int>(fnv1a64(node.entity) %
                                      static_cast<uint64_t>(schema.entity_hash_buckets));
        x(i, hash_off + bucket) = 1.0;
        break;
      }
    }
    int64_t degree = 0;
    for (int j = 0; j < n; ++j) degree += graph.A(i, j) + graph.A(j, i);
    x(i, degree_off) = std::log1p(static_cast<double>(degree));
  }
  return x;
}

IntMatrix symmetrized_binary(const IntMatrix& a) {
  int n = a.rows();
  IntMatrix s(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      s(i, j) = (a(i, j) + a(j, i)) > 0 ? 1 : 0;
    }
  }
  return s;
}

Matrix normalize_adjacency(const IntMatrix& a, const std::vector<uint8_t>& mask) {
  if (a.rows() != a.cols()) throw DimensionError("normalize_adjacency: A must be square");
  int n = a.rows();
  int n_max = static_cast<int>(mask.size());
  int real = 0;
  for (uint8_t m : mask) real += m;
  if (real != n) {
    throw DimensionError("normalize_adjacency: mask has " + std::to_string(real) +
                         " real slots for a " + std::to_string(n) + "-node graph");
  }
  for (int i = 0; i < real; ++i) {
    if (!mask[i]) throw DimensionError("normalize_adjacency: mask set bits must be a prefix");
  }

  IntMatrix s = symmetrized_binary(a);
  // Degree of S + I.
  std::vector<double> inv_sqrt_deg(n);
  for (int i = 0; i < n; ++i) {
    int64_t deg = 1;
    for (int j = 0; j < n; ++j) deg += s(i, j);
    inv_sqrt_deg[i] = 1.0 / std::sqrt(static_cast<double>(deg));
  }
  Matrix out(n_max, n_max);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      int v = s(i, j) + (i == j ? 1 : 0);
      if (v != 0) out(i, j) = inv_sqrt_deg[i] * static_cast<double>(v) * inv_sqrt_deg[j];
    }
  }
  return out;
}

namespace {

std::string node_label(const Node& node) {
  switch (node.kind) {
    case NodeKind::Time: {
      char buf[16];
      std::snprintf(buf, sizeof buf, "%02d:%02d", node.slot / 4, (node.slot % 4) * 15);
      return buf;
    }
    case NodeKind::Sensor:
      return sensor_name(node.sensor);
    case NodeKind::Source:
      return node.entity;
  }
  return "?";
}

const char* node_kind_name(NodeKind k) {
  switch (k) {
    case NodeKind::Time: return "time";
    case NodeKind::Sensor: return "sensor";
    case NodeKind::Source: return "source";
  }
  return "?";
}

std::string escape_dot(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out;
}

}  // namespace

std::string export_dot(const SemanticGraph& graph, const ExportHeader& header) {
  std::string out;
  out += "// lifegraph config=" + header.config_hash + " seed=" + std::to_string(header.seed) + "\n";
  out += "digraph day {\n";
  out += "  // user=" + graph.user_id + " date=" + format_date(graph.date) + "\n";
  for (int i = 0; i < graph.n(); ++i) {
    const Node& node = graph.nodes[i];
    const char* color = node.kind == NodeKind::Time    ? "black"
                        : node.kind == NodeKind::Source ? "red"
                                                          : "cyan";
    char buf[64];
    std::snprintf(buf, sizeof buf, "  n%d [color=%s label=\"", i, color);
    out += buf;
    out += escape_dot(node_label(node)) + "\"];\n";
  }
  for (int i = 0; i < graph.n(); ++i) {
    for (int j = 0; j < graph.n(); ++j) {
      int w = graph.A(i, j);
      if (w == 0) continue;
      auto sem = classify_edge(graph.nodes[i].kind, graph.nodes[j].kind);
      char buf[128];
      std::snprintf(buf, sizeof buf, "  n%d -> n%d [penwidth=%d comment=\"%s\"];\n", i, j, w,
                    sem ? edge_semantic_name(*sem) : "?");
      out += buf;
    }
  }
  out += "}\n";
  return out;
}

std::string export_nodelink(const SemanticGraph& graph, const ExportHeader& header) {
  nlohmann::json doc;
  doc["header"] = {{"config", header.config_hash}, {"seed", header.seed}};
  doc["user_id"] = graph.user_id;
  doc["date"] = format_date(graph.date);
  doc["n_max"] = graph.n_max;
  doc["dropped_sources"] = graph.dropped_sources;
  doc["dropped_events"] = graph.dropped_events;
  nlohmann::json nodes = nlohmann::json::array();
  for (int i = 0; i < graph.n(); ++i) {
    const Node& node = graph.nodes[i];
    nlohmann::json jn;
    jn["id"] = i;
    jn["kind"] = node_kind_name(node.kind);
    jn["label"] = node_label(node);
    if (node.kind == NodeKind::Time) jn["slot"] = node.slot;
    if (node.kind != NodeKind::Time) jn["sensor"] = sensor_name(node.sensor);
    nodes.push_back(std::move(jn));
  }
  doc["nodes"] = std::move(nodes);
  nlohmann::json edges = nlohmann::json::array();
  for (int i = 0; i < graph.n(); ++i) {
    for (int j = 0; j < graph.n(); ++j) {
      int w = graph.A(i, j);
      if (w == 0) continue;
      auto sem = classify_edge(graph.nodes[i].kind, graph.nodes[j].kind);
      edges.push_back({{"from", i},
                       {"to", j},
                       {"semantic", sem ? edge_semantic_name(*sem) : "?"},
                       {"weight", w}});
    }
  }
  doc["edges"] = std::move(edges);
  return doc.dump(2) + "\n";
}

std::string export_graph(const SemanticGraph& graph, const std::string& format,
                         const ExportHeader& header) {
  if (format == "dot") return export_dot(graph, header);
  if (format == "nodelink") return export_nodelink(graph, header);
  throw UsageError("unknown graph export format: " + format);
}

SemanticGraph import_nodelink(const std::string& text) {
  nlohmann::json doc = nlohmann::json::parse(text, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) throw DataError("nodelink: not a JSON object");
  SemanticGraph g;
  try {
    g.user_id = doc.at("user_id").get<std::string>();
    auto date = parse_date(doc.at("date").get<std::string>());
    if (!date) throw DataError("nodelink: bad date");
    g.date = *date;
    g.n_max = doc.at("n_max").get<int>();
    g.dropped_sources = doc.value("dropped_sources", 0);
    g.dropped_events = doc.value("dropped_events", 0);
    for (const auto& jn : doc.at("nodes")) {
      Node node;
      std::string kind = jn.at("kind").get<std::string>();
      if (kind == "time") {
        node.kind = NodeKind::Time;
        node.slot = jn.at("slot").get<int>();
      } else if (kind == "sensor" || kind == "source") {
        node.kind = kind == "sensor" ? NodeKind::Sensor : NodeKind::Source;
        auto sk = sensor_from_name(jn.at("sensor").get<std::string>());
        if (!sk) throw DataError("nodelink: unknown sensor " + jn.at("sensor").dump());
        node.sensor = *sk;
        if (node.kind == NodeKind::Source) node.entity = jn.at("label").get<std::string>();
      } else {
        throw DataError("nodelink: unknown node kind " + kind);
      }
      if (static_cast<int>(g.nodes.size()) != jn.at("id").get<int>()) {
        throw DataError("nodelink: node ids must be dense and ordered");
      }
      g.nodes.push_back(std::move(node));
    }
    int n = g.n();
    g.A = IntMatrix(n, n);
    for (const auto& je : doc.at("edges")) {
      int from = je.at("from").get<int>();
      int to = je.at("to").get<int>();
      int w = je.at("weight").get<int>();
      if (from < 0 || from >= n || to < 0 || to >= n || w < 0) {
        throw DataError("nodelink: edge out of range");
      }
      g.A(from, to) = w;
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("nodelink: ") + e.what());
  }
  return g;
}

}  // namespace lifegraph
