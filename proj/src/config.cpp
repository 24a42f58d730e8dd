#include "lifegraph/config.hpp"

#include <cstdio>

#include "lifegraph/common.hpp"
#include "lifegraph/io.hpp"
#include "lifegraph/rng.hpp"

namespace lifegraph {

namespace {

template <typename T>
void get_if_present(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

void to_json(nlohmann::json& j, const GraphSchema& v) {
  j = {{"slot_minutes", v.slot_minutes},
       {"slots_per_day", v.slots_per_day},
       {"n_max", v.n_max},
       {"k", v.k},
       {"entity_hash_buckets", v.entity_hash_buckets}};
}

void from_json(const nlohmann::json& j, GraphSchema& v) {
  get_if_present(j, "slot_minutes", v.slot_minutes);
  get_if_present(j, "slots_per_day", v.slots_per_day);
  get_if_present(j, "n_max", v.n_max);
  get_if_present(j, "k", v.k);
  get_if_present(j, "entity_hash_buckets", v.entity_hash_buckets);
}

void to_json(nlohmann::json& j, const CcmSpec& v) {
  j = {{"kappa", v.kappa},
       {"d", v.d},
       {"zeta", v.zeta},
       {"printed_membership", v.printed_membership}};
}

void from_json(const nlohmann::json& j, CcmSpec& v) {
  get_if_present(j, "kappa", v.kappa);
  get_if_present(j, "d", v.d);
  get_if_present(j, "zeta", v.zeta);
  get_if_present(j, "printed_membership", v.printed_membership);
}

void to_json(nlohmann::json& j, const TrainConfig& v) {
  j = {{"h1", v.h1},
       {"h2", v.h2},
       {"h_d", v.h_d},
       {"lr_recon", v.lr_recon},
       {"lr_disc", v.lr_disc},
       {"lr_enc", v.lr_enc},
       {"batch_size", v.batch_size},
       {"epochs", v.epochs},
       {"seed", v.seed},
       {"baseline_mode", v.baseline_mode},
       {"recon_x_weight", v.recon_x_weight},
       {"recon_a_weight", v.recon_a_weight}};
}

void from_json(const nlohmann::json& j, TrainConfig& v) {
  get_if_present(j, "h1", v.h1);
  get_if_present(j, "h2", v.h2);
  get_if_present(j, "h_d", v.h_d);
  get_if_present(j, "lr_recon", v.lr_recon);
  get_if_present(j, "lr_disc", v.lr_disc);
  get_if_present(j, "lr_enc", v.lr_enc);
  get_if_present(j, "batch_size", v.batch_size);
  get_if_present(j, "epochs", v.epochs);
  get_if_present(j, "seed", v.seed);
  get_if_present(j, "baseline_mode", v.baseline_mode);
  get_if_present(j, "recon_x_weight", v.recon_x_weight);
  get_if_present(j, "recon_a_weight", v.recon_a_weight);
}

void to_json(nlohmann::json& j, const ArchetypeSpec& v) {
  nlohmann::json slots = nlohmann::json::array();
  for (auto& [slot, intensity] : v.active_slots) slots.push_back({slot, intensity});
  j = {{"name", v.name},
       {"sensor_mix", v.sensor_mix},
       {"active_slots", slots},
       {"entity_pool_size", v.entity_pool_size},
       {"events_per_day_mean", v.events_per_day_mean},
       {"events_per_day_spread", v.events_per_day_spread},
       {"gender", std::string(1, static_cast<char>(v.gender))}};
}

void from_json(const nlohmann::json& j, ArchetypeSpec& v) {
  v.name = j.at("name").get<std::string>();
  v.sensor_mix = j.at("sensor_mix").get<std::array<double, kSensorCount>>();
  v.active_slots.clear();
  for (const auto& s : j.at("active_slots")) {
    v.active_slots.emplace_back(s.at(0).get<int>(), s.at(1).get<double>());
  }
  get_if_present(j, "entity_pool_size", v.entity_pool_size);
  get_if_present(j, "events_per_day_mean", v.events_per_day_mean);
  get_if_present(j, "events_per_day_spread", v.events_per_day_spread);
  std::string g = j.value("gender", "M");
  v.gender = g == "F" ? Gender::F : Gender::M;
}

namespace {

void to_json_ingest(nlohmann::json& j, const IngestConfig& v) {
  j = {{"root", v.root},
       {"user_dir_pattern", v.user_dir_pattern},
       {"timestamp_format", v.timestamp_format}};
}

void from_json_ingest(const nlohmann::json& j, IngestConfig& v) {
  get_if_present(j, "root", v.root);
  get_if_present(j, "user_dir_pattern", v.user_dir_pattern);
  get_if_present(j, "timestamp_format", v.timestamp_format);
}

void to_json_synth(nlohmann::json& j, const SynthConfig& v) {
  j = {{"archetypes", v.archetypes},
       {"users_per_archetype", v.users_per_archetype},
       {"days", v.days}};
}

void from_json_synth(const nlohmann::json& j, SynthConfig& v) {
  if (j.contains("archetypes")) {
    v.archetypes = j.at("archetypes").get<std::vector<ArchetypeSpec>>();
  }
  get_if_present(j, "users_per_archetype", v.users_per_archetype);
  get_if_present(j, "days", v.days);
}

void to_json_analysis(nlohmann::json& j, const AnalysisConfig& v) {
  j = {{"perplexity", v.perplexity},
       {"tsne_iterations", v.tsne_iterations},
       {"cluster_k", v.cluster_k},
       {"classifier_runs", v.classifier_runs},
       {"classifier_epochs", v.classifier_epochs},
       {"classifier_lr", v.classifier_lr},
       {"classifier_hidden", v.classifier_hidden},
       {"per_user_aggregate", v.per_user_aggregate},
       {"project_to_manifold", v.project_to_manifold},
       {"emit_svg", v.emit_svg}};
}

void from_json_analysis(const nlohmann::json& j, AnalysisConfig& v) {
  get_if_present(j, "perplexity", v.perplexity);
  get_if_present(j, "tsne_iterations", v.tsne_iterations);
  get_if_present(j, "cluster_k", v.cluster_k);
  get_if_present(j, "classifier_runs", v.classifier_runs);
  get_if_present(j, "classifier_epochs", v.classifier_epochs);
  get_if_present(j, "classifier_lr", v.classifier_lr);
  get_if_present(j, "classifier_hidden", v.classifier_hidden);
  get_if_present(j, "per_user_aggregate", v.per_user_aggregate);
  get_if_present(j, "project_to_manifold", v.project_to_manifold);
  get_if_present(j, "emit_svg", v.emit_svg);
}

}  // namespace

void to_json(nlohmann::json& j, const PipelineConfig& v) {
  j["seed"] = v.seed;
  j["out_dir"] = v.out_dir;
  to_json_ingest(j["ingest"], v.ingest);
  to_json_synth(j["synth"], v.synth);
  j["build"] = {{"min_days_per_user", v.build.min_days_per_user}};
  j["schema"] = v.schema;
  j["ccm"] = v.ccm;
  j["train"] = v.train;
  to_json_analysis(j["analysis"], v.analysis);
}

void from_json(const nlohmann::json& j, PipelineConfig& v) {
  get_if_present(j, "seed", v.seed);
  get_if_present(j, "out_dir", v.out_dir);
  if (j.contains("ingest")) from_json_ingest(j.at("ingest"), v.ingest);
  if (j.contains("synth")) from_json_synth(j.at("synth"), v.synth);
  if (j.contains("build")) get_if_present(j.at("build"), "min_days_per_user", v.build.min_days_per_user);
  if (j.contains("schema")) v.schema = j.at("schema").get<GraphSchema>();
  if (j.contains("ccm")) v.ccm = j.at("ccm").get<CcmSpec>();
  if (j.contains("train")) v.train = j.at("train").get<TrainConfig>();
  if (j.contains("analysis")) from_json_analysis(j.at("analysis"), v.analysis);
}

std::string PipelineConfig::hash() const {
  nlohmann::json j = *this;
  // Filesystem locations must not influence artifact bytes.
  j.erase("out_dir");
  j["ingest"].erase("root");
  std::string canon = j.dump();
  uint64_t h = fnv1a64(canon);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

PipelineConfig load_config_file(const std::string& path) {
  nlohmann::json j = nlohmann::json::parse(read_text_file(path), nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw UsageError("config file " + path + " is not a JSON object");
  }
  PipelineConfig cfg;
  try {
    from_json(j, cfg);
  } catch (const nlohmann::json::exception& e) {
    throw UsageError("config file " + path + ": " + e.what());
  }
  return cfg;
}

}  // namespace lifegraph
