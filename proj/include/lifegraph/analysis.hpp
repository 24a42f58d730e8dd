// Latent-space analysis: frozen-encoder classification, exact t-SNE
// projection, and seeded k-means clustering with composition reporting.
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "lifegraph/ingest.hpp"
#include "lifegraph/mat.hpp"
#include "lifegraph/rng.hpp"

namespace lifegraph {

struct LabeledEmbedding {
  std::vector<double> z;
  Gender sex_label = Gender::M;
  int user_index = 0;
  std::string user_id;
  int64_t date = 0;
  std::string archetype;  // empty when unknown
};

enum class ClassifyTask { Sex, Index, Archetype };

const char* task_name(ClassifyTask t);

struct AccuracyReport {
  ClassifyTask task = ClassifyTask::Sex;
  double mean_accuracy = 0.0;  // percent
  double std_accuracy = 0.0;   // percent, sample std over runs
  int n_runs = 0;
  int n_classes = 0;
  double majority_baseline = 0.0;  // percent
};

struct ClassifierConfig {
  int hidden = 16;  // two hidden layers of this width
  int epochs = 200;
  double lr = 1e-3;
};

// Train a small dense classifier on precomputed embeddings (the encoder is
// frozen by construction: only z vectors are passed in). Each run makes a
// fresh stratified 80/20 split and reports test accuracy.
AccuracyReport fit_frozen_classifier(const std::vector<LabeledEmbedding>& embeddings,
                                     ClassifyTask task, int runs, uint64_t seed,
                                     const ClassifierConfig& cfg = {});

struct TsneOptions {
  double perplexity = 30.0;
  int iterations = 1000;
  double learning_rate = 200.0;
  double early_exaggeration = 12.0;
  double initial_momentum = 0.5;
  double final_momentum = 0.8;
};

struct TsneResult {
  Matrix points;                 // N x 2
  std::vector<double> kl_trace;  // KL(P||Q) against the true P, per iteration
  double used_perplexity = 0.0;
  int exaggeration_end = 0;  // first iteration index past early exaggeration
};

// Exact (quadratic) t-SNE. Per-point bandwidths are found by binary search
// until the row perplexity matches the target within 1e-4; early
// exaggeration covers the first quarter of the iterations, and the momentum
// switches from 0.5 to 0.8 at the same point.
TsneResult tsne_project(const Matrix& points, const TsneOptions& opts, uint64_t seed);

// Gaussian row affinities and the bandwidths the search settled on.
// Exposed for property tests.
void tsne_row_affinities(const Matrix& sq_dists, double perplexity, Matrix& p_out,
                         std::vector<double>& beta_out);

struct ClusterReportOptions {
  int restarts = 50;
  int max_iterations = 100;
  double gender_specific_share = 0.80;  // one sex share at or above this
  double user_specific_share = 0.60;    // one user share at or above this
};

struct ClusterInfo {
  int size = 0;
  double male_share = 0.0;
  std::string top_user;
  double top_user_share = 0.0;
  std::string top_archetype;
  std::string category;  // "gender-specific" | "user-specific" | "common"
};

struct ClusterReport {
  std::vector<int> assignments;
  double silhouette = 0.0;
  double inertia = 0.0;
  std::vector<double> inertia_trace;  // best restart's Lloyd iterations
  std::vector<ClusterInfo> clusters;
};

// Seeded k-means (k-means++ init, best of `restarts` by inertia) plus the
// per-cluster label composition that operationalizes the common /
// gender-specific / user-specific taxonomy.
ClusterReport cluster_report(const Matrix& points, int k,
                             const std::vector<LabeledEmbedding>& labels, uint64_t seed,
                             const ClusterReportOptions& opts = {});

double silhouette_score(const Matrix& points, const std::vector<int>& assignments, int k);

// Assign user_index values (sorted distinct user ids) and archetypes from a
// users table.
std::vector<LabeledEmbedding> label_embeddings(
    const std::vector<std::string>& user_ids, const std::vector<int64_t>& dates,
    const std::vector<std::vector<double>>& zs,
    const std::map<std::string, UserMeta>& users_by_id);

}  // namespace lifegraph
