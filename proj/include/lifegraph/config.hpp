// Shared pipeline configuration. One JSON document holds every knob; each
// CLI flag mirrors a config key and wins on conflict. The config hash is
// computed over the semantic fields only (never over filesystem paths), so
// identical runs in different directories produce identical artifacts.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "lifegraph/graph.hpp"
#include "lifegraph/manifold.hpp"
#include "lifegraph/model.hpp"
#include "lifegraph/synth.hpp"

namespace lifegraph {

struct IngestConfig {
  std::string root;
  std::string user_dir_pattern = R"(^(\d+)_([MF])$)";
  std::string timestamp_format = "%m-%d-%Y %H:%M:%S";
};

struct SynthConfig {
  std::vector<ArchetypeSpec> archetypes;  // empty = default suite
  int users_per_archetype = 4;
  int days = 30;
};

struct BuildConfig {
  int min_days_per_user = 1;
};

struct AnalysisConfig {
  double perplexity = 30.0;
  int tsne_iterations = 1000;
  int cluster_k = 5;
  int classifier_runs = 5;
  int classifier_epochs = 200;
  double classifier_lr = 1e-3;
  int classifier_hidden = 16;
  bool per_user_aggregate = false;  // t-SNE on per-user mean embeddings
  bool project_to_manifold = false;
  bool emit_svg = false;
};

struct PipelineConfig {
  uint64_t seed = 1;
  std::string out_dir = "out";
  IngestConfig ingest;
  SynthConfig synth;
  BuildConfig build;
  GraphSchema schema;
  CcmSpec ccm;
  TrainConfig train;
  AnalysisConfig analysis;

  // 16-hex-digit FNV hash of the semantic configuration (paths excluded).
  std::string hash() const;
};

void to_json(nlohmann::json& j, const GraphSchema& v);
void from_json(const nlohmann::json& j, GraphSchema& v);
void to_json(nlohmann::json& j, const CcmSpec& v);
void from_json(const nlohmann::json& j, CcmSpec& v);
void to_json(nlohmann::json& j, const TrainConfig& v);
void from_json(const nlohmann::json& j, TrainConfig& v);
void to_json(nlohmann::json& j, const ArchetypeSpec& v);
void from_json(const nlohmann::json& j, ArchetypeSpec& v);
void to_json(nlohmann::json& j, const PipelineConfig& v);
void from_json(const nlohmann::json& j, PipelineConfig& v);

PipelineConfig load_config_file(const std::string& path);

}  // namespace lifegraph
