// Subcommand implementations. The CLI is a thin argv wrapper around these;
// every stage reads its predecessor's files and writes its own, so runs are
// restartable and the whole pipeline is testable in-process.
#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "lifegraph/config.hpp"

namespace lifegraph {

struct StageFiles {
  static constexpr const char* kEvents = "events.tsv";
  static constexpr const char* kUsers = "users.tsv";
  static constexpr const char* kRejects = "rejects.log";
  static constexpr const char* kGraphsDir = "graphs";
  static constexpr const char* kGraphManifest = "graphs/manifest.tsv";
  static constexpr const char* kFeaturesManifest = "graphs/features.json";
  static constexpr const char* kFeaturesBin = "graphs/features.bin";
};

void run_ingest(const PipelineConfig& cfg);
void run_synth(const PipelineConfig& cfg);
void run_build(const PipelineConfig& cfg);
void run_train(const PipelineConfig& cfg, const std::string& checkpoint_name);
void run_embed(const PipelineConfig& cfg, const std::string& checkpoint_name,
               const std::string& embeddings_name);

struct AnalyzeInputs {
  std::string embeddings_name = "embeddings.tsv";
  std::string baseline_embeddings_name;  // optional second (AE) column
};
void run_analyze(const PipelineConfig& cfg, const AnalyzeInputs& inputs);

void run_viz(const PipelineConfig& cfg, const std::string& user_id, const std::string& date,
             const std::string& format);

// Loaded graph set, ordered by (user_id, date).
std::vector<SemanticGraph> load_graphs(const PipelineConfig& cfg);

}  // namespace lifegraph
