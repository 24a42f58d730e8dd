// Daily semantic graphs: 96 time nodes (15-minute slots), 7 sensor nodes,
// and one source node per logged entity, connected by four edge semantics:
//
//   sensor --contain--> source
//   time   --start---> source
//   source --end-----> time
//   time   --will be-> time  (consecutive slots)
//
// Edge weights count how many times the endpoints were joined.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lifegraph/ingest.hpp"
#include "lifegraph/mat.hpp"

namespace lifegraph {

struct GraphSchema {
  int slot_minutes = 15;
  int slots_per_day = 96;
  int n_max = 256;
  int k = 28;
  int entity_hash_buckets = 16;

  int fixed_nodes() const { return slots_per_day + kSensorCount; }  // 103
  int source_cap() const { return n_max - fixed_nodes(); }
  void validate() const;
};

enum class NodeKind : int { Time = 0, Sensor = 1, Source = 2 };

struct Node {
  NodeKind kind;
  int slot = -1;                        // Time nodes
  SensorKind sensor = SensorKind::WiFi; // Sensor nodes and owning sensor of Source nodes
  std::string entity;                   // Source nodes
};

enum class EdgeSemantic : int { Contain = 0, Start = 1, End = 2, WillBe = 3 };

const char* edge_semantic_name(EdgeSemantic s);

// Legal (from,to) node-kind pairs, exactly the four semantics above.
// Returns nullopt for an illegal pair.
std::optional<EdgeSemantic> classify_edge(NodeKind from, NodeKind to);

struct SemanticGraph {
  std::string user_id;
  int64_t date = 0;  // epoch day
  std::vector<Node> nodes;  // canonical order: 96 time, 7 sensor, sources by first occurrence
  IntMatrix A;              // n x n directed weighted adjacency
  Matrix X;                 // n x k node features
  int n_max = 0;
  int dropped_sources = 0;  // sources discarded by the source cap
  int64_t dropped_events = 0;

  int n() const { return static_cast<int>(nodes.size()); }
  // Real-slot mask of length n_max: first n() entries set.
  std::vector<uint8_t> mask() const;
};

// Map a timestamp to its 15-minute slot within the bucket's day. An end
// time landing exactly on the next midnight maps to the last slot.
int slot_of(int64_t ts, int64_t date, const GraphSchema& schema);

// Build the day graph for one bucket: nodes, counted adjacency and node
// features. When distinct sources exceed the cap, the most active ones are
// kept and events touching dropped sources are discarded (and counted).
SemanticGraph build_day_graph(const DayBucket& bucket, const GraphSchema& schema);

// The 28-dimensional node feature matrix:
//   3  node-kind one-hot
//   7  sensor one-hot (zero for time nodes; a source carries its sensor's)
//   1  slot fraction (time: slot/95; source: mean start-slot fraction; else 0)
//   16 entity hash bucket one-hot (source only)
//   1  log(1 + weighted in+out degree)
Matrix node_features(const SemanticGraph& graph, const GraphSchema& schema);

// GCN propagation matrix D^{-1/2} (S + I) D^{-1/2} over real slots, where
// S = binarize(A + A^T). Rows and columns of padded slots are all zero.
// mask must have its set bits as a prefix.
Matrix normalize_adjacency(const IntMatrix& a, const std::vector<uint8_t>& mask);

// Undirected binary reconstruction target S = binarize(A + A^T), n x n.
IntMatrix symmetrized_binary(const IntMatrix& a);

struct ExportHeader {
  std::string config_hash;
  uint64_t seed = 0;
};

// Graphviz dot text: nodes colored by kind (time black, source red, sensor
// cyan), edge pen width proportional to weight.
std::string export_dot(const SemanticGraph& graph, const ExportHeader& header);

// Node-link JSON document: nodes[{id,kind,label,...}], edges[{from,to,semantic,weight}].
std::string export_nodelink(const SemanticGraph& graph, const ExportHeader& header);

std::string export_graph(const SemanticGraph& graph, const std::string& format,
                         const ExportHeader& header);

// Rebuild a graph from its node-link document (features not included; call
// node_features to recompute or load the sidecar).
SemanticGraph import_nodelink(const std::string& text);

}  // namespace lifegraph
