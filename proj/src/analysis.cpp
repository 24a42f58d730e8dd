#include "lifegraph/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "lifegraph/common.hpp"
#include "lifegraph/kernels.hpp"

namespace lifegraph {

const char* task_name(ClassifyTask t) {
  switch (t) {
    case ClassifyTask::Sex: return "sex";
    case ClassifyTask::Index: return "index";
    case ClassifyTask::Archetype: return "archetype";
  }
  return "?";
}

namespace {

int label_of(const LabeledEmbedding& e, ClassifyTask task,
             const std::map<std::string, int>& archetype_ids) {
  switch (task) {
    case ClassifyTask::Sex: return e.sex_label == Gender::M ? 0 : 1;
    case ClassifyTask::Index: return e.user_index;
    case ClassifyTask::Archetype: return archetype_ids.at(e.archetype);
  }
  return 0;
}

// Tiny dense softmax classifier: in -> hidden -> hidden -> classes, ReLU,
// full-batch Adam on cross-entropy.
struct Mlp {
  Matrix w1, w2, w3;
  std::vector<double> b1, b2, b3;

  Mlp(int in, int hidden, int classes, Rng& rng) {
    auto glorot = [&](Matrix& m) {
      double limit = std::sqrt(6.0 / (m.rows() + m.cols()));
      for (size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-limit, limit);
    };
    w1 = Matrix(in, hidden);
    w2 = Matrix(hidden, hidden);
    w3 = Matrix(hidden, classes);
    glorot(w1);
    glorot(w2);
    glorot(w3);
    b1.assign(hidden, 0.0);
    b2.assign(hidden, 0.0);
    b3.assign(classes, 0.0);
  }

  std::vector<Matrix*> mats() { return {&w1, &w2, &w3}; }
  std::vector<std::vector<double>*> vecs() { return {&b1, &b2, &b3}; }
};

struct MlpAdam {
  double lr = 1e-3;
  int64_t t = 0;
  std::vector<std::vector<double>> m, v;

  void step(Mlp& net, Mlp& grads) {
    std::vector<double*> ps, gs;
    std::vector<size_t> ns;
    auto nm = net.mats();
    auto gm = grads.mats();
    for (size_t i = 0; i < nm.size(); ++i) {
      ps.push_back(nm[i]->data());
      gs.push_back(gm[i]->data());
      ns.push_back(nm[i]->size());
    }
    auto nv = net.vecs();
    auto gv = grads.vecs();
    for (size_t i = 0; i < nv.size(); ++i) {
      ps.push_back(nv[i]->data());
      gs.push_back(gv[i]->data());
      ns.push_back(nv[i]->size());
    }
    if (m.empty()) {
      m.resize(ps.size());
      v.resize(ps.size());
      for (size_t i = 0; i < ps.size(); ++i) {
        m[i].assign(ns[i], 0.0);
        v[i].assign(ns[i], 0.0);
      }
    }
    ++t;
    double bc1 = 1.0 - std::pow(0.9, static_cast<double>(t));
    double bc2 = 1.0 - std::pow(0.999, static_cast<double>(t));
    for (size_t b = 0; b < ps.size(); ++b) {
      for (size_t i = 0; i < ns[b]; ++i) {
        m[b][i] = 0.9 * m[b][i] + 0.1 * gs[b][i];
        v[b][i] = 0.999 * v[b][i] + 0.001 * gs[b][i] * gs[b][i];
        ps[b][i] -= lr * (m[b][i] / bc1) / (std::sqrt(v[b][i] / bc2) + 1e-8);
      }
    }
  }
};

// Forward one sample; returns class probabilities and hidden traces.
struct MlpTrace {
  std::vector<double> a1, r1, a2, r2, logits, probs;
};

MlpTrace mlp_forward(const Mlp& net, const std::vector<double>& x) {
  MlpTrace tr;
  int h = static_cast<int>(net.b1.size());
  int c = static_cast<int>(net.b3.size());
  int in = net.w1.rows();
  tr.a1 = net.b1;
  for (int i = 0; i < in; ++i) {
    for (int j = 0; j < h; ++j) tr.a1[j] += x[i] * net.w1(i, j);
  }
  tr.r1 = tr.a1;
  for (auto& v : tr.r1) v = std::max(v, 0.0);
  tr.a2 = net.b2;
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < h; ++j) tr.a2[j] += tr.r1[i] * net.w2(i, j);
  }
  tr.r2 = tr.a2;
  for (auto& v : tr.r2) v = std::max(v, 0.0);
  tr.logits = net.b3;
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < c; ++j) tr.logits[j] += tr.r2[i] * net.w3(i, j);
  }
  double mx = *std::max_element(tr.logits.begin(), tr.logits.end());
  double sum = 0.0;
  tr.probs.resize(c);
  for (int j = 0; j < c; ++j) {
    tr.probs[j] = std::exp(tr.logits[j] - mx);
    sum += tr.probs[j];
  }
  for (auto& p : tr.probs) p /= sum;
  return tr;
}

void mlp_backward(const Mlp& net, const std::vector<double>& x, const MlpTrace& tr, int label,
                  double weight, Mlp& grads) {
  int h = static_cast<int>(net.b1.size());
  int c = static_cast<int>(net.b3.size());
  int in = net.w1.rows();
  std::vector<double> dlogits(tr.probs);
  dlogits[label] -= 1.0;
  for (auto& d : dlogits) d *= weight;
  std::vector<double> dr2(h, 0.0);
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < c; ++j) {
      grads.w3(i, j) += tr.r2[i] * dlogits[j];
      dr2[i] += net.w3(i, j) * dlogits[j];
    }
  }
  for (int j = 0; j < c; ++j) grads.b3[j] += dlogits[j];
  std::vector<double> da2(h);
  for (int i = 0; i < h; ++i) da2[i] = tr.a2[i] > 0.0 ? dr2[i] : 0.0;
  std::vector<double> dr1(h, 0.0);
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < h; ++j) {
      grads.w2(i, j) += tr.r1[i] * da2[j];
      dr1[i] += net.w2(i, j) * da2[j];
    }
  }
  for (int j = 0; j < h; ++j) grads.b2[j] += da2[j];
  std::vector<double> da1(h);
  for (int i = 0; i < h; ++i) da1[i] = tr.a1[i] > 0.0 ? dr1[i] : 0.0;
  for (int i = 0; i < in; ++i) {
    for (int j = 0; j < h; ++j) grads.w1(i, j) += x[i] * da1[j];
  }
  for (int j = 0; j < h; ++j) grads.b1[j] += da1[j];
}

}  // namespace

AccuracyReport fit_frozen_classifier(const std::vector<LabeledEmbedding>& embeddings,
                                     ClassifyTask task, int runs, uint64_t seed,
                                     const ClassifierConfig& cfg) {
  if (runs < 1) throw UsageError("fit_frozen_classifier: runs must be >= 1");
  if (embeddings.empty()) throw UsageError("fit_frozen_classifier: no embeddings");

  std::map<std::string, int> archetype_ids;
  if (task == ClassifyTask::Archetype) {
    for (const auto& e : embeddings) {
      if (e.archetype.empty()) {
        throw UsageError("fit_frozen_classifier: archetype labels unavailable");
      }
      archetype_ids.emplace(e.archetype, 0);
    }
    int next = 0;
    for (auto& [name, id] : archetype_ids) id = next++;
  }

  std::vector<int> labels(embeddings.size());
  int n_classes = 0;
  for (size_t i = 0; i < embeddings.size(); ++i) {
    labels[i] = label_of(embeddings[i], task, archetype_ids);
    n_classes = std::max(n_classes, labels[i] + 1);
  }
  std::map<int, std::vector<size_t>> by_class;
  for (size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
  if (by_class.size() < 2) {
    throw UsageError("fit_frozen_classifier: need at least 2 classes, got " +
                     std::to_string(by_class.size()));
  }
  size_t majority = 0;
  for (auto& [cls, idx] : by_class) majority = std::max(majority, idx.size());
  double majority_baseline =
      100.0 * static_cast<double>(majority) / static_cast<double>(embeddings.size());

  int dim = static_cast<int>(embeddings.front().z.size());
  Rng master(seed);
  std::vector<double> accuracies;
  for (int run = 0; run < runs; ++run) {
    Rng rng = master.fork(static_cast<uint64_t>(run) + 1);
    // Stratified 80/20 split by graph.
    std::vector<size_t> train_idx, test_idx;
    for (auto& [cls, idx] : by_class) {
      std::vector<size_t> shuffled = idx;
      for (size_t i = shuffled.size(); i > 1; --i) {
        std::swap(shuffled[i - 1], shuffled[rng.uniform_index(i)]);
      }
      size_t n_train = static_cast<size_t>(std::lround(0.8 * static_cast<double>(shuffled.size())));
      n_train = std::min(std::max<size_t>(n_train, 1), shuffled.size() - 1);
      for (size_t i = 0; i < shuffled.size(); ++i) {
        (i < n_train ? train_idx : test_idx).push_back(shuffled[i]);
      }
    }
    std::sort(train_idx.begin(), train_idx.end());
    std::sort(test_idx.begin(), test_idx.end());

    Mlp net(dim, cfg.hidden, n_classes, rng);
    MlpAdam adam;
    adam.lr = cfg.lr;
    double inv = 1.0 / static_cast<double>(train_idx.size());
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
      Mlp grads = net;
      for (auto* m : grads.mats()) m->fill(0.0);
      for (auto* v : grads.vecs()) std::fill(v->begin(), v->end(), 0.0);
      for (size_t i : train_idx) {
        MlpTrace tr = mlp_forward(net, embeddings[i].z);
        mlp_backward(net, embeddings[i].z, tr, labels[i], inv, grads);
      }
      adam.step(net, grads);
    }
    int correct = 0;
    for (size_t i : test_idx) {
      MlpTrace tr = mlp_forward(net, embeddings[i].z);
      int pred = static_cast<int>(std::max_element(tr.probs.begin(), tr.probs.end()) -
                                  tr.probs.begin());
      if (pred == labels[i]) ++correct;
    }
    accuracies.push_back(100.0 * static_cast<double>(correct) /
                         static_cast<double>(test_idx.size()));
  }

  AccuracyReport report;
  report.task = task;
  report.n_runs = runs;
  report.n_classes = static_cast<int>(by_class.size());
  report.majority_baseline = majority_baseline;
  double mean = std::accumulate(accuracies.begin(), accuracies.end(), 0.0) /
                static_cast<double>(accuracies.size());
  report.mean_accuracy = mean;
  if (runs >= 2) {
    double ss = 0.0;
    for (double a : accuracies) ss += (a - mean) * (a - mean);
    report.std_accuracy = std::sqrt(ss / static_cast<double>(runs - 1));
  }
  return report;
}

// --- t-SNE ---------------------------------------------------------------------

void tsne_row_affinities(const Matrix& sq_dists, double perplexity, Matrix& p_out,
                         std::vector<double>& beta_out) {
  int n = sq_dists.rows();
  p_out = Matrix(n, n);
  beta_out.assign(n, 1.0);
  const double target = perplexity;
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    double beta = 1.0;
    double beta_lo = 0.0;
    double beta_hi = std::numeric_limits<double>::infinity();
    std::vector<double> row(n, 0.0);
    auto eval_row = [&](double b) {
      double sum = 0.0;
      for (int j = 0; j < n; ++j) {
        row[j] = j == i ? 0.0 : std::exp(-b * sq_dists(i, j));
        sum += row[j];
      }
      return sum;
    };
    for (int iter = 0; iter < 200; ++iter) {
      double sum = eval_row(beta);
      // Shannon entropy of the row distribution, in nats.
      double h = 0.0;
      for (int j = 0; j < n; ++j) {
        if (row[j] > 0.0) {
          double p = row[j] / sum;
          h -= p * std::log(p);
        }
      }
      double perp = std::exp(h);
      if (std::fabs(perp - target) < 1e-4) break;
      // Larger beta narrows the kernel and lowers the row perplexity.
      if (perp > target) {
        beta_lo = beta;
        beta = std::isinf(beta_hi) ? beta * 2.0 : 0.5 * (beta + beta_hi);
      } else {
        beta_hi = beta;
        beta = 0.5 * (beta + beta_lo);
      }
    }
    double sum = eval_row(beta);
    for (int j = 0; j < n; ++j) p_out(i, j) = sum > 0.0 ? row[j] / sum : 0.0;
    beta_out[i] = beta;
  }
}

TsneResult tsne_project(const Matrix& points, const TsneOptions& opts, uint64_t seed) {
  int n = points.rows();
  if (n < 5) throw UsageError("tsne_project: need at least 5 points");
  TsneResult result;
  double perplexity = opts.perplexity;
  double max_perp = (static_cast<double>(n) - 1.0) / 3.0;
  if (perplexity >= max_perp) {
    perplexity = max_perp - 1e-3;
    std::fprintf(stderr, "warning: perplexity shrunk to %.3f for %d points\n", perplexity, n);
  }
  if (perplexity < 1.0) perplexity = 1.0;
  result.used_perplexity = perplexity;

  Matrix d2;
  pairwise_sq_dists(points, d2);
  Matrix p_cond;
  std::vector<double> betas;
  tsne_row_affinities(d2, perplexity, p_cond, betas);

  // Symmetrize: p_ij = (p_{j|i} + p_{i|j}) / 2N, floored away from zero.
  Matrix p(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      p(i, j) = std::max((p_cond(i, j) + p_cond(j, i)) / (2.0 * n), 1e-300);
    }
  }

  Rng rng(seed);
  Matrix y(n, 2);
  for (size_t i = 0; i < y.size(); ++i) y.data()[i] = 1e-4 * rng.gaussian();
  Matrix vel(n, 2);
  Matrix gains(n, 2, 1.0);

  int exag_end = std::max(1, opts.iterations / 4);
  result.exaggeration_end = exag_end;

  Matrix w(n, n);
  Matrix grad(n, 2);
  // Per-row partials summed serially keep the result independent of the
  // thread count.
  std::vector<double> row_sum(n), row_kl(n);
  for (int iter = 0; iter < opts.iterations; ++iter) {
    double exaggeration = iter < exag_end ? opts.early_exaggeration : 1.0;
    double momentum = iter < exag_end ? opts.initial_momentum : opts.final_momentum;

    // Student-t kernel and normalizer.
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
      double acc = 0.0;
      for (int j = 0; j < n; ++j) {
        if (i == j) {
          w(i, j) = 0.0;
          continue;
        }
        double dx = y(i, 0) - y(j, 0);
        double dy = y(i, 1) - y(j, 1);
        w(i, j) = 1.0 / (1.0 + dx * dx + dy * dy);
        acc += w(i, j);
      }
      row_sum[i] = acc;
    }
    double wsum = 0.0;
    for (int i = 0; i < n; ++i) wsum += row_sum[i];

#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
      double gx = 0.0, gy = 0.0, kl = 0.0;
      for (int j = 0; j < n; ++j) {
        if (i == j) continue;
        double q = std::max(w(i, j) / wsum, 1e-300);
        double mult = (exaggeration * p(i, j) - q) * w(i, j);
        gx += mult * (y(i, 0) - y(j, 0));
        gy += mult * (y(i, 1) - y(j, 1));
        kl += p(i, j) * std::log(p(i, j) / q);
      }
      grad(i, 0) = 4.0 * gx;
      grad(i, 1) = 4.0 * gy;
      row_kl[i] = kl;
    }
    double kl = 0.0;
    for (int i = 0; i < n; ++i) kl += row_kl[i];
    result.kl_trace.push_back(kl);

    for (int i = 0; i < n; ++i) {
      for (int c = 0; c < 2; ++c) {
        bool same_sign = (grad(i, c) > 0.0) == (vel(i, c) > 0.0);
        gains(i, c) = same_sign ? std::max(gains(i, c) * 0.8, 0.01) : gains(i, c) + 0.2;
        vel(i, c) = momentum * vel(i, c) - opts.learning_rate * gains(i, c) * grad(i, c);
        y(i, c) += vel(i, c);
      }
    }
    // Recenter.
    double mx = 0.0, my = 0.0;
    for (int i = 0; i < n; ++i) {
      mx += y(i, 0);
      my += y(i, 1);
    }
    mx /= n;
    my /= n;
    for (int i = 0; i < n; ++i) {
      y(i, 0) -= mx;
      y(i, 1) -= my;
    }
  }
  result.points = std::move(y);
  return result;
}

// --- k-means and cluster report ---------------------------------------------------

namespace {

struct KmeansRun {
  std::vector<int> assignments;
  Matrix centroids;
  double inertia = std::numeric_limits<double>::infinity();
  std::vector<double> inertia_trace;
};

KmeansRun kmeans_once(const Matrix& pts, int k, Rng& rng, int max_iterations) {
  int n = pts.rows();
  int dim = pts.cols();
  KmeansRun run;
  run.centroids = Matrix(k, dim);

  // k-means++ seeding.
  std::vector<double> min_d2(n, std::numeric_limits<double>::infinity());
  int first = static_cast<int>(rng.uniform_index(n));
  for (int c = 0; c < dim; ++c) run.centroids(0, c) = pts(first, c);
  for (int centroid = 1; centroid < k; ++centroid) {
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      double d2 = 0.0;
      for (int c = 0; c < dim; ++c) {
        double d = pts(i, c) - run.centroids(centroid - 1, c);
        d2 += d * d;
      }
      min_d2[i] = std::min(min_d2[i], d2);
      total += min_d2[i];
    }
    int chosen = 0;
    if (total > 0.0) {
      double r = rng.uniform() * total;
      double acc = 0.0;
      chosen = n - 1;
      for (int i = 0; i < n; ++i) {
        acc += min_d2[i];
        if (acc >= r) {
          chosen = i;
          break;
        }
      }
    } else {
      chosen = static_cast<int>(rng.uniform_index(n));
    }
    for (int c = 0; c < dim; ++c) run.centroids(centroid, c) = pts(chosen, c);
  }

  run.assignments.assign(n, -1);
  std::vector<double> point_d2(n);
  std::vector<uint8_t> point_changed(n);
  for (int iter = 0; iter < max_iterations; ++iter) {
    // Assignment step.
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      int best_c = 0;
      for (int centroid = 0; centroid < k; ++centroid) {
        double d2 = 0.0;
        for (int c = 0; c < dim; ++c) {
          double d = pts(i, c) - run.centroids(centroid, c);
          d2 += d * d;
        }
        if (d2 < best) {
          best = d2;
          best_c = centroid;
        }
      }
      point_changed[i] = run.assignments[i] != best_c;
      run.assignments[i] = best_c;
      point_d2[i] = best;
    }
    bool changed = false;
    double inertia = 0.0;
    for (int i = 0; i < n; ++i) {
      changed = changed || point_changed[i];
      inertia += point_d2[i];
    }
    run.inertia_trace.push_back(inertia);
    run.inertia = inertia;
    if (!changed && run.inertia_trace.size() > 1) break;

    // Update step; an empty cluster is reseeded to the point farthest from
    // its centroid assignment.
    Matrix sums(k, dim);
    std::vector<int> counts(k, 0);
    for (int i = 0; i < n; ++i) {
      ++counts[run.assignments[i]];
      for (int c = 0; c < dim; ++c) sums(run.assignments[i], c) += pts(i, c);
    }
    for (int centroid = 0; centroid < k; ++centroid) {
      if (counts[centroid] == 0) {
        double worst = -1.0;
        int worst_i = 0;
        for (int i = 0; i < n; ++i) {
          double d2 = 0.0;
          for (int c = 0; c < dim; ++c) {
            double d = pts(i, c) - run.centroids(run.assignments[i], c);
            d2 += d * d;
          }
          if (d2 > worst) {
            worst = d2;
            worst_i = i;
          }
        }
        for (int c = 0; c < dim; ++c) run.centroids(centroid, c) = pts(worst_i, c);
      } else {
        for (int c = 0; c < dim; ++c) {
          run.centroids(centroid, c) = sums(centroid, c) / counts[centroid];
        }
      }
    }
  }
  return run;
}

}  // namespace

double silhouette_score(const Matrix& points, const std::vector<int>& assignments, int k) {
  int n = points.rows();
  Matrix d2;
  pairwise_sq_dists(points, d2);
  std::vector<int> counts(k, 0);
  for (int a : assignments) ++counts[a];
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    if (counts[assignments[i]] <= 1) continue;  // singleton scores 0
    std::vector<double> mean_d(k, 0.0);
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      mean_d[assignments[j]] += std::sqrt(d2(i, j));
    }
    double a = mean_d[assignments[i]] / (counts[assignments[i]] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (int c = 0; c < k; ++c) {
      if (c == assignments[i] || counts[c] == 0) continue;
      b = std::min(b, mean_d[c] / counts[c]);
    }
    if (std::isinf(b)) continue;
    total += (b - a) / std::max(a, b);
  }
  return total / n;
}

ClusterReport cluster_report(const Matrix& points, int k,
                             const std::vector<LabeledEmbedding>& labels, uint64_t seed,
                             const ClusterReportOptions& opts) {
  int n = points.rows();
  if (k < 2) throw UsageError("cluster_report: k must be >= 2");
  if (n <= k) throw UsageError("cluster_report: need more points than clusters");
  if (static_cast<int>(labels.size()) != n) {
    throw UsageError("cluster_report: labels size mismatch");
  }

  Rng master(seed);
  KmeansRun best;
  for (int restart = 0; restart < opts.restarts; ++restart) {
    Rng rng = master.fork(static_cast<uint64_t>(restart) + 1);
    KmeansRun run = kmeans_once(points, k, rng, opts.max_iterations);
    if (run.inertia < best.inertia) best = std::move(run);
  }

  ClusterReport report;
  report.assignments = best.assignments;
  report.inertia = best.inertia;
  report.inertia_trace = best.inertia_trace;
  report.silhouette = silhouette_score(points, best.assignments, k);

  for (int centroid = 0; centroid < k; ++centroid) {
    ClusterInfo info;
    std::map<std::string, int> user_counts;
    std::map<std::string, int> archetype_counts;
    int males = 0;
    for (int i = 0; i < n; ++i) {
      if (best.assignments[i] != centroid) continue;
      ++info.size;
      if (labels[i].sex_label == Gender::M) ++males;
      ++user_counts[labels[i].user_id];
      if (!labels[i].archetype.empty()) ++archetype_counts[labels[i].archetype];
    }
    if (info.size > 0) {
      info.male_share = static_cast<double>(males) / info.size;
      int top = 0;
      for (auto& [user, count] : user_counts) {
        if (count > top) {
          top = count;
          info.top_user = user;
        }
      }
      info.top_user_share = static_cast<double>(top) / info.size;
      int top_a = 0;
      for (auto& [arch, count] : archetype_counts) {
        if (count > top_a) {
          top_a = count;
          info.top_archetype = arch;
        }
      }
      double sex_share = std::max(info.male_share, 1.0 - info.male_share);
      if (info.top_user_share >= opts.user_specific_share) {
        info.category = "user-specific";
      } else if (sex_share >= opts.gender_specific_share) {
        info.category = "gender-specific";
      } else {
        info.category = "common";
      }
    } else {
      info.category = "common";
    }
    report.clusters.push_back(std::move(info));
  }
  return report;
}

std::vector<LabeledEmbedding> label_embeddings(
    const std::vector<std::string>& user_ids, const std::vector<int64_t>& dates,
    const std::vector<std::vector<double>>& zs,
    const std::map<std::string, UserMeta>& users_by_id) {
  std::map<std::string, int> index_of;
  for (const auto& uid : user_ids) index_of.emplace(uid, 0);
  int next = 0;
  for (auto& [uid, idx] : index_of) idx = next++;

  std::vector<LabeledEmbedding> out;
  out.reserve(user_ids.size());
  for (size_t i = 0; i < user_ids.size(); ++i) {
    LabeledEmbedding e;
    e.user_id = user_ids[i];
    e.date = dates[i];
    e.z = zs[i];
    e.user_index = index_of[user_ids[i]];
    auto it = users_by_id.find(user_ids[i]);
    if (it != users_by_id.end()) {
      e.sex_label = it->second.gender;
      e.archetype = it->second.archetype;
    }
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace lifegraph
