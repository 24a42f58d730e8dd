#include "lifegraph/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

#include "lifegraph/analysis.hpp"
#include "lifegraph/common.hpp"
#include "lifegraph/io.hpp"
#include "lifegraph/model.hpp"
#include "lifegraph/pipeline.hpp"
#include "lifegraph/synth.hpp"

namespace lifegraph {

namespace fs = std::filesystem;

namespace {

ExportHeader header_of(const PipelineConfig& cfg) { return {cfg.hash(), cfg.seed}; }

fs::path out_path(const PipelineConfig& cfg, const std::string& name) {
  return fs::path(cfg.out_dir) / name;
}

void need_file(const PipelineConfig& cfg, const std::string& name, const char* producer) {
  if (!fs::exists(out_path(cfg, name))) {
    throw PipelineOrderError("missing " + out_path(cfg, name).string() + "; run '" + producer +
                             "' first");
  }
}

std::string graph_file_name(const std::string& user_id, int64_t date) {
  return user_id + "_" + format_date(date) + ".json";
}

}  // namespace

void run_ingest(const PipelineConfig& cfg) {
  if (cfg.ingest.root.empty()) throw UsageError("ingest: no dataset root configured");
  fs::create_directories(cfg.out_dir);
  ScanOptions opts;
  opts.user_dir_pattern = cfg.ingest.user_dir_pattern;
  opts.timestamp_format = cfg.ingest.timestamp_format;
  std::vector<LifelogEvent> events;
  std::vector<RejectRecord> rejects;
  ScanStats stats;
  auto users = scan_dataset(
      cfg.ingest.root, opts, [&](LifelogEvent&& ev) { events.push_back(std::move(ev)); },
      [&](const RejectRecord& r) { rejects.push_back(r); }, &stats);
  ExportHeader header = header_of(cfg);
  write_events(out_path(cfg, StageFiles::kEvents), events, header);
  write_users(out_path(cfg, StageFiles::kUsers), users, header);
  write_reject_log(out_path(cfg, StageFiles::kRejects), rejects, header);
  std::fprintf(stderr, "ingest: %lld events, %lld rejects, %zu users\n",
               static_cast<long long>(stats.accepted), static_cast<long long>(stats.rejected),
               users.size());
}

void run_synth(const PipelineConfig& cfg) {
  fs::create_directories(cfg.out_dir);
  auto archetypes = cfg.synth.archetypes.empty() ? default_archetypes() : cfg.synth.archetypes;
  SynthResult result = generate_synthetic(archetypes, cfg.synth.users_per_archetype,
                                          cfg.synth.days, cfg.seed);
  ExportHeader header = header_of(cfg);
  write_events(out_path(cfg, StageFiles::kEvents), result.events, header);
  write_users(out_path(cfg, StageFiles::kUsers), result.users, header);
  write_reject_log(out_path(cfg, StageFiles::kRejects), {}, header);
  std::fprintf(stderr, "synth: %zu events for %zu users\n", result.events.size(),
               result.users.size());
}

void run_build(const PipelineConfig& cfg) {
  need_file(cfg, StageFiles::kEvents, "ingest or synth");
  need_file(cfg, StageFiles::kUsers, "ingest or synth");
  cfg.schema.validate();
  auto events = read_events(out_path(cfg, StageFiles::kEvents));
  auto buckets = partition_by_day(std::move(events));

  // Apply the usable-user filter.
  std::map<std::string, int> days_per_user;
  for (const auto& b : buckets) ++days_per_user[b.user_id];
  std::vector<const DayBucket*> kept;
  for (const auto& b : buckets) {
    if (days_per_user[b.user_id] >= cfg.build.min_days_per_user) kept.push_back(&b);
  }
  if (kept.empty()) throw DataError("build: no user-days after min_days_per_user filter");

  fs::create_directories(out_path(cfg, StageFiles::kGraphsDir));
  ExportHeader header = header_of(cfg);

  std::vector<SemanticGraph> graphs(kept.size());
  // Days are independent; output order stays (user, date) because the bucket
  // list is already sorted.
#pragma omp parallel for schedule(dynamic)
  for (long long i = 0; i < static_cast<long long>(kept.size()); ++i) {
    graphs[i] = build_day_graph(*kept[i], cfg.schema);
  }

  std::string manifest = header_line(header);
  manifest += "user_id\tdate\tn\tdropped_sources\tdropped_events\tfile\n";
  BlockWriter features("f64");
  for (const auto& g : graphs) {
    std::string file = graph_file_name(g.user_id, g.date);
    write_text_file(out_path(cfg, StageFiles::kGraphsDir) / file, export_nodelink(g, header));
    features.add(g.user_id + "|" + format_date(g.date),
                 std::span<const double>(g.X.data(), g.X.size()), {g.n(), g.X.cols()});
    manifest += g.user_id + "\t" + format_date(g.date) + "\t" + std::to_string(g.n()) + "\t" +
                std::to_string(g.dropped_sources) + "\t" + std::to_string(g.dropped_events) +
                "\t" + file + "\n";
  }
  nlohmann::json fman;
  fman["header"] = {{"config", header.config_hash}, {"seed", header.seed}};
  fman["dtype"] = "f64";
  fman["blocks"] = features.manifest();
  write_text_file(out_path(cfg, StageFiles::kFeaturesManifest), fman.dump(2) + "\n");
  write_text_file(out_path(cfg, StageFiles::kFeaturesBin), features.bytes());
  write_text_file(out_path(cfg, StageFiles::kGraphManifest), manifest);
  std::fprintf(stderr, "build: %zu graphs\n", graphs.size());
}

std::vector<SemanticGraph> load_graphs(const PipelineConfig& cfg) {
  need_file(cfg, StageFiles::kGraphManifest, "build");
  need_file(cfg, StageFiles::kFeaturesManifest, "build");
  nlohmann::json fman = nlohmann::json::parse(
      read_text_file(out_path(cfg, StageFiles::kFeaturesManifest)), nullptr, false);
  if (fman.is_discarded()) throw DataError("features manifest is not valid JSON");
  BlockReader features(fman.at("blocks"), read_text_file(out_path(cfg, StageFiles::kFeaturesBin)));

  std::vector<SemanticGraph> graphs;
  auto manifest = read_text_file(out_path(cfg, StageFiles::kGraphManifest));
  std::istringstream in(manifest);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("user_id\t", 0) == 0) continue;
    std::vector<std::string> cols;
    size_t pos = 0;
    while (true) {
      size_t tab = line.find('\t', pos);
      if (tab == std::string::npos) {
        cols.push_back(line.substr(pos));
        break;
      }
      cols.push_back(line.substr(pos, tab - pos));
      pos = tab + 1;
    }
    if (cols.size() != 6) throw DataError("graphs manifest: bad row: " + line);
    SemanticGraph g =
        import_nodelink(read_text_file(out_path(cfg, StageFiles::kGraphsDir) / cols[5]));
    if (g.n_max != cfg.schema.n_max) {
      throw CompatibilityError("graph " + cols[5] + " was built with n_max " +
                               std::to_string(g.n_max) + ", config says " +
                               std::to_string(cfg.schema.n_max));
    }
    auto x = features.read(g.user_id + "|" + format_date(g.date), {g.n(), cfg.schema.k});
    g.X = Matrix(g.n(), cfg.schema.k);
    std::copy(x.begin(), x.end(), g.X.data());
    graphs.push_back(std::move(g));
  }
  if (graphs.empty()) throw DataError("graphs manifest lists no graphs");
  std::sort(graphs.begin(), graphs.end(), [](const SemanticGraph& a, const SemanticGraph& b) {
    if (a.user_id != b.user_id) return a.user_id < b.user_id;
    return a.date < b.date;
  });
  return graphs;
}

void run_train(const PipelineConfig& cfg, const std::string& checkpoint_name) {
  auto graphs = load_graphs(cfg);
  std::vector<const SemanticGraph*> ptrs;
  ptrs.reserve(graphs.size());
  for (const auto& g : graphs) ptrs.push_back(&g);

  TrainConfig tc = cfg.train;
  if (tc.seed == 0) tc.seed = cfg.seed;
  Trainer trainer(cfg.schema, cfg.ccm, tc);

  ExportHeader header = header_of(cfg);
  std::string log = header_line(header);
  log += "epoch\tl_ae\tl_dis\tl_enc\tmean_manifold_deviation\n";
  auto fmt = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return std::string(buf);
  };
  trainer.run(ptrs, [&](const EpochLog& e) {
    log += std::to_string(e.epoch) + "\t" + fmt(e.losses.recon) + "\t" + fmt(e.losses.disc) +
           "\t" + fmt(e.losses.enc) + "\t" + fmt(e.mean_deviation) + "\n";
    if (e.epoch % 25 == 0) {
      std::fprintf(stderr, "train: epoch %d l_ae=%.5f dev=%.5f\n", e.epoch, e.losses.recon,
                   e.mean_deviation);
    }
  });

  CheckpointMeta meta{header.config_hash, cfg.seed, cfg.schema, cfg.ccm, tc};
  save_checkpoint(out_path(cfg, checkpoint_name).string(), trainer.params(), meta);
  write_text_file(out_path(cfg, checkpoint_name + ".train_log.tsv"), log);
}

void run_embed(const PipelineConfig& cfg, const std::string& checkpoint_name,
               const std::string& embeddings_name) {
  need_file(cfg, checkpoint_name + ".json", "train");
  need_file(cfg, StageFiles::kUsers, "ingest or synth");
  auto graphs = load_graphs(cfg);
  CheckpointMeta meta;
  ModelParams params = load_checkpoint(out_path(cfg, checkpoint_name).string(), meta);
  nlohmann::json want = cfg.schema, got = meta.schema;
  if (want != got) {
    throw CompatibilityError("checkpoint schema differs from configuration: " + got.dump() +
                             " vs " + want.dump());
  }
  if (meta.ccm.d != cfg.ccm.d || meta.ccm.kappa != cfg.ccm.kappa) {
    throw CompatibilityError("checkpoint manifold spec differs from configuration");
  }

  std::map<std::string, UserMeta> users;
  for (auto& u : read_users(out_path(cfg, StageFiles::kUsers))) users[u.user_id] = u;

  std::vector<const SemanticGraph*> ptrs;
  for (const auto& g : graphs) ptrs.push_back(&g);
  auto points = embed_dataset(ptrs, params, cfg.schema);

  std::vector<EmbeddingRow> rows;
  rows.reserve(points.size());
  for (const auto& p : points) {
    EmbeddingRow r;
    r.user_id = p.user_id;
    r.date = p.date;
    auto it = users.find(p.user_id);
    r.sex = it != users.end() ? it->second.gender : Gender::M;
    r.z = p.z;
    rows.push_back(std::move(r));
  }
  write_embeddings(out_path(cfg, embeddings_name), rows, header_of(cfg));
  std::fprintf(stderr, "embed: %zu latent points\n", rows.size());
}

namespace {

std::vector<LabeledEmbedding> load_labeled(const PipelineConfig& cfg, const std::string& name) {
  need_file(cfg, name, "embed");
  auto rows = read_embeddings(out_path(cfg, name));
  if (rows.empty()) throw DataError("embeddings file " + name + " is empty");
  std::map<std::string, UserMeta> users;
  if (fs::exists(out_path(cfg, StageFiles::kUsers))) {
    for (auto& u : read_users(out_path(cfg, StageFiles::kUsers))) users[u.user_id] = u;
  }
  std::vector<std::string> ids;
  std::vector<int64_t> dates;
  std::vector<std::vector<double>> zs;
  for (auto& r : rows) {
    ids.push_back(r.user_id);
    dates.push_back(r.date);
    zs.push_back(r.z);
  }
  auto labeled = label_embeddings(ids, dates, zs, users);
  // The embeddings file's own sex column wins over the users table.
  for (size_t i = 0; i < rows.size(); ++i) labeled[i].sex_label = rows[i].sex;
  return labeled;
}

std::string format_pm(double mean, double std) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f%% ± %.2f%%", mean, std);
  return buf;
}

Matrix embedding_matrix(const std::vector<LabeledEmbedding>& es, bool project, const CcmSpec& ccm) {
  Matrix m(static_cast<int>(es.size()), static_cast<int>(es.front().z.size()));
  for (size_t i = 0; i < es.size(); ++i) {
    std::vector<double> z = project ? project_to_manifold(es[i].z, ccm) : es[i].z;
    for (size_t c = 0; c < z.size(); ++c) m(static_cast<int>(i), static_cast<int>(c)) = z[c];
  }
  return m;
}

std::string svg_scatter(const Matrix& pts, const std::vector<LabeledEmbedding>& labels,
                        const ExportHeader& header) {
  double min_x = 1e300, max_x = -1e300, min_y = 1e300, max_y = -1e300;
  for (int i = 0; i < pts.rows(); ++i) {
    min_x = std::min(min_x, pts(i, 0));
    max_x = std::max(max_x, pts(i, 0));
    min_y = std::min(min_y, pts(i, 1));
    max_y = std::max(max_y, pts(i, 1));
  }
  double span_x = std::max(max_x - min_x, 1e-12);
  double span_y = std::max(max_y - min_y, 1e-12);
  const int size = 640, pad = 20;
  std::string svg = "<!-- lifegraph config=" + header.config_hash + " seed=" +
                    std::to_string(header.seed) + " -->\n";
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(size) +
         "\" height=\"" + std::to_string(size) + "\">\n";
  for (int i = 0; i < pts.rows(); ++i) {
    double x = pad + (pts(i, 0) - min_x) / span_x * (size - 2 * pad);
    double y = pad + (pts(i, 1) - min_y) / span_y * (size - 2 * pad);
    const char* color = labels[i].sex_label == Gender::M ? "#1f77b4" : "#d62728";
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"3\" fill=\"%s\" opacity=\"0.7\"/>\n", x, y,
                  color);
    svg += buf;
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace

void run_analyze(const PipelineConfig& cfg, const AnalyzeInputs& inputs) {
  auto main_embeddings = load_labeled(cfg, inputs.embeddings_name);
  std::vector<LabeledEmbedding> baseline;
  bool have_baseline = !inputs.baseline_embeddings_name.empty();
  if (have_baseline) baseline = load_labeled(cfg, inputs.baseline_embeddings_name);

  ExportHeader header = header_of(cfg);
  ClassifierConfig ccfg;
  ccfg.hidden = cfg.analysis.classifier_hidden;
  ccfg.epochs = cfg.analysis.classifier_epochs;
  ccfg.lr = cfg.analysis.classifier_lr;

  // Classification table (Table-3 layout: task rows, method columns).
  std::vector<ClassifyTask> tasks;
  {
    std::set<char> sexes;
    std::set<std::string> users_present;
    bool archetypes_ok = true;
    for (const auto& e : main_embeddings) {
      sexes.insert(static_cast<char>(e.sex_label));
      users_present.insert(e.user_id);
      archetypes_ok = archetypes_ok && !e.archetype.empty();
    }
    if (sexes.size() >= 2) tasks.push_back(ClassifyTask::Sex);
    if (users_present.size() >= 2) tasks.push_back(ClassifyTask::Index);
    if (archetypes_ok) {
      std::set<std::string> archetypes;
      for (const auto& e : main_embeddings) archetypes.insert(e.archetype);
      if (archetypes.size() >= 2) tasks.push_back(ClassifyTask::Archetype);
    }
  }
  if (tasks.empty()) throw DataError("analyze: no classification task has at least 2 classes");

  std::string table = header_line(header);
  table += "Label";
  if (have_baseline) table += "\tAE";
  table += "\tCCM-AAE\tMajority\n";
  for (ClassifyTask task : tasks) {
    AccuracyReport main_report = fit_frozen_classifier(main_embeddings, task,
                                                       cfg.analysis.classifier_runs, cfg.seed, ccfg);
    std::string row = std::string(task_name(task)) + " (" +
                      std::to_string(main_report.n_classes) + " class)";
    if (have_baseline) {
      AccuracyReport base_report =
          fit_frozen_classifier(baseline, task, cfg.analysis.classifier_runs, cfg.seed, ccfg);
      row += "\t" + format_pm(base_report.mean_accuracy, base_report.std_accuracy);
    }
    row += "\t" + format_pm(main_report.mean_accuracy, main_report.std_accuracy);
    char buf[32];
    std::snprintf(buf, sizeof buf, "\t%.2f%%", main_report.majority_baseline);
    row += buf;
    table += row + "\n";
  }
  write_text_file(out_path(cfg, "accuracy_report.txt"), table);

  // t-SNE projection (per-day by default, per-user mean with the aggregate
  // flag).
  std::vector<LabeledEmbedding> proj_input = main_embeddings;
  if (cfg.analysis.per_user_aggregate) {
    std::map<std::string, std::pair<std::vector<double>, int>> sums;
    std::map<std::string, LabeledEmbedding> sample;
    for (const auto& e : main_embeddings) {
      auto& [sum, count] = sums[e.user_id];
      if (sum.empty()) sum.assign(e.z.size(), 0.0);
      for (size_t c = 0; c < e.z.size(); ++c) sum[c] += e.z[c];
      ++count;
      sample.emplace(e.user_id, e);
    }
    proj_input.clear();
    for (auto& [uid, sc] : sums) {
      LabeledEmbedding e = sample.at(uid);
      for (size_t c = 0; c < sc.first.size(); ++c) sc.first[c] /= sc.second;
      e.z = sc.first;
      proj_input.push_back(std::move(e));
    }
  }
  Matrix latent = embedding_matrix(proj_input, cfg.analysis.project_to_manifold, cfg.ccm);
  TsneOptions topts;
  topts.perplexity = cfg.analysis.perplexity;
  topts.iterations = cfg.analysis.tsne_iterations;
  TsneResult tsne = tsne_project(latent, topts, splitmix64(cfg.seed ^ 0x757e));

  std::string proj = header_line(header);
  proj += "user_id\tdate\tsex\tx\ty\n";
  for (size_t i = 0; i < proj_input.size(); ++i) {
    proj += proj_input[i].user_id + "\t" + format_date(proj_input[i].date) + "\t";
    proj += static_cast<char>(proj_input[i].sex_label);
    proj += "\t" + format_double(tsne.points(static_cast<int>(i), 0)) + "\t" +
            format_double(tsne.points(static_cast<int>(i), 1)) + "\n";
  }
  write_text_file(out_path(cfg, "projection.tsv"), proj);
  if (cfg.analysis.emit_svg) {
    write_text_file(out_path(cfg, "projection.svg"), svg_scatter(tsne.points, proj_input, header));
  }

  // Cluster structure on the 2-D projection, mirroring the visual taxonomy.
  ClusterReport clusters =
      cluster_report(tsne.points, cfg.analysis.cluster_k, proj_input, splitmix64(cfg.seed ^ 0xc1u));
  std::string creport = header_line(header);
  {
    char buf[96];
    std::snprintf(buf, sizeof buf, "# k=%d silhouette=%.4f inertia=%.4f\n",
                  cfg.analysis.cluster_k, clusters.silhouette, clusters.inertia);
    creport += buf;
  }
  creport += "cluster\tsize\tmale_share\ttop_user\ttop_user_share\ttop_archetype\tcategory\n";
  for (size_t c = 0; c < clusters.clusters.size(); ++c) {
    const ClusterInfo& info = clusters.clusters[c];
    char buf[64];
    std::snprintf(buf, sizeof buf, "%zu\t%d\t%.3f\t", c, info.size, info.male_share);
    creport += buf;
    creport += (info.top_user.empty() ? "-" : info.top_user);
    std::snprintf(buf, sizeof buf, "\t%.3f\t", info.top_user_share);
    creport += buf;
    creport += (info.top_archetype.empty() ? "-" : info.top_archetype) + "\t" + info.category +
               "\n";
  }
  write_text_file(out_path(cfg, "cluster_report.txt"), creport);
  std::fprintf(stderr, "analyze: %zu tasks, silhouette %.3f\n", tasks.size(),
               clusters.silhouette);
}

void run_viz(const PipelineConfig& cfg, const std::string& user_id, const std::string& date,
             const std::string& format) {
  if (format != "dot" && format != "nodelink") {
    throw UsageError("viz: unknown format '" + format + "' (expected dot or nodelink)");
  }
  auto day = parse_date(date);
  if (!day) throw UsageError("viz: bad date '" + date + "' (expected YYYY-MM-DD)");
  need_file(cfg, StageFiles::kGraphManifest, "build");

  SemanticGraph graph;
  fs::path file = out_path(cfg, StageFiles::kGraphsDir) / graph_file_name(user_id, *day);
  if (fs::exists(file)) {
    graph = import_nodelink(read_text_file(file));
  } else {
    // No events that day: still a valid graph (time chain plus sensors).
    DayBucket empty{user_id, *day, {}};
    graph = build_day_graph(empty, cfg.schema);
  }
  fs::create_directories(out_path(cfg, "viz"));
  std::string ext = format == "dot" ? ".dot" : ".json";
  fs::path out = out_path(cfg, "viz") / (user_id + "_" + date + ext);
  write_text_file(out, export_graph(graph, format, header_of(cfg)));
  std::fprintf(stderr, "viz: wrote %s\n", out.string().c_str());
}

}  // namespace lifegraph
