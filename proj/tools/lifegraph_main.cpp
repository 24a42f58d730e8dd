// lifegraph: lifelog -> daily semantic graphs -> manifold-constrained graph
// embeddings -> latent-space analysis.
//
// Subcommands run in pipeline order; each one reads its predecessor's files
// from --out and writes its own:
//
//   ingest | synth -> build -> train -> embed -> analyze
//   viz (any time after build)
#include <cstdio>
#include <exception>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "lifegraph/common.hpp"
#include "lifegraph/pipeline.hpp"

using namespace lifegraph;

namespace {

struct CommonFlags {
  std::string config_file;
  std::optional<uint64_t> seed;
  std::optional<std::string> out_dir;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_file, "JSON configuration file");
  cmd->add_option("--seed", flags.seed, "master seed (flags win over the config file)");
  cmd->add_option("--out", flags.out_dir, "output directory");
}

PipelineConfig resolve(const CommonFlags& flags) {
  PipelineConfig cfg;
  if (!flags.config_file.empty()) cfg = load_config_file(flags.config_file);
  if (flags.seed) cfg.seed = *flags.seed;
  if (flags.out_dir) cfg.out_dir = *flags.out_dir;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lifelog graph embedding pipeline"};
  app.require_subcommand(1);

  CommonFlags common;

  auto* ingest = app.add_subcommand("ingest", "normalize a raw lifelog dataset");
  add_common(ingest, common);
  std::string root, pattern, ts_format;
  ingest->add_option("--root", root, "dataset root directory");
  ingest->add_option("--user-dir-pattern", pattern, "regex with (user id)(gender) groups");
  ingest->add_option("--timestamp-format", ts_format, "strftime-style timestamp pattern");

  auto* synth = app.add_subcommand("synth", "generate a synthetic labeled dataset");
  add_common(synth, common);
  std::optional<int> users_per_archetype, days;
  synth->add_option("--users-per-archetype", users_per_archetype);
  synth->add_option("--days", days);

  auto* build = app.add_subcommand("build", "build daily semantic graphs from events");
  add_common(build, common);
  std::optional<int> min_days, n_max;
  build->add_option("--min-days", min_days, "drop users with fewer event days");
  build->add_option("--n-max", n_max, "graph node capacity");

  auto* train = app.add_subcommand("train", "train the graph autoencoder");
  add_common(train, common);
  std::string checkpoint = "checkpoint";
  bool baseline = false;
  std::optional<int> epochs, batch_size;
  train->add_option("--checkpoint", checkpoint, "checkpoint name (files <name>.json/.bin)");
  train->add_flag("--baseline", baseline, "plain autoencoder: skip the adversarial phases");
  train->add_option("--epochs", epochs);
  train->add_option("--batch-size", batch_size);

  auto* embed = app.add_subcommand("embed", "embed every graph with a trained encoder");
  add_common(embed, common);
  std::string embed_checkpoint = "checkpoint", embeddings_name = "embeddings.tsv";
  embed->add_option("--checkpoint", embed_checkpoint);
  embed->add_option("--embeddings", embeddings_name, "output file name");

  auto* analyze = app.add_subcommand("analyze", "classification, t-SNE, clusters");
  add_common(analyze, common);
  AnalyzeInputs inputs;
  std::optional<double> perplexity;
  std::optional<int> cluster_k, runs;
  bool svg = false, per_user = false;
  analyze->add_option("--embeddings", inputs.embeddings_name);
  analyze->add_option("--baseline-embeddings", inputs.baseline_embeddings_name,
                      "second embedding file for the AE comparison column");
  analyze->add_option("--perplexity", perplexity);
  analyze->add_option("--cluster-k", cluster_k);
  analyze->add_option("--runs", runs, "classifier runs per task");
  analyze->add_flag("--svg", svg, "emit projection.svg");
  analyze->add_flag("--per-user", per_user, "project per-user mean embeddings");

  auto* viz = app.add_subcommand("viz", "export one day graph as dot or nodelink");
  add_common(viz, common);
  std::string viz_user, viz_date, viz_format = "dot";
  viz->add_option("--user", viz_user)->required();
  viz->add_option("--date", viz_date, "YYYY-MM-DD")->required();
  viz->add_option("--format", viz_format, "dot or nodelink");

  CLI11_PARSE(app, argc, argv);

  try {
    PipelineConfig cfg = resolve(common);
    if (ingest->parsed()) {
      if (!root.empty()) cfg.ingest.root = root;
      if (!pattern.empty()) cfg.ingest.user_dir_pattern = pattern;
      if (!ts_format.empty()) cfg.ingest.timestamp_format = ts_format;
      run_ingest(cfg);
    } else if (synth->parsed()) {
      if (users_per_archetype) cfg.synth.users_per_archetype = *users_per_archetype;
      if (days) cfg.synth.days = *days;
      run_synth(cfg);
    } else if (build->parsed()) {
      if (min_days) cfg.build.min_days_per_user = *min_days;
      if (n_max) cfg.schema.n_max = *n_max;
      run_build(cfg);
    } else if (train->parsed()) {
      cfg.train.baseline_mode = baseline || cfg.train.baseline_mode;
      if (epochs) cfg.train.epochs = *epochs;
      if (batch_size) cfg.train.batch_size = *batch_size;
      run_train(cfg, checkpoint);
    } else if (embed->parsed()) {
      run_embed(cfg, embed_checkpoint, embeddings_name);
    } else if (analyze->parsed()) {
      if (perplexity) cfg.analysis.perplexity = *perplexity;
      if (cluster_k) cfg.analysis.cluster_k = *cluster_k;
      if (runs) cfg.analysis.classifier_runs = *runs;
      cfg.analysis.emit_svg = svg || cfg.analysis.emit_svg;
      cfg.analysis.per_user_aggregate = per_user || cfg.analysis.per_user_aggregate;
      run_analyze(cfg, inputs);
    } else if (viz->parsed()) {
      run_viz(cfg, viz_user, viz_date, viz_format);
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return e.exit_code();
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: internal: %s\n", e.what());
    return kExitInternal;
  }
  return kExitOk;
}
