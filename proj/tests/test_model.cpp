#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <cmath>
#include <filesystem>

#include "fixtures.hpp"
#include "lifegraph/common.hpp"
#include "lifegraph/model.hpp"

using namespace lifegraph;
using namespace lifegraph::testfix;

TEST_CASE("gcn layer: identity propagation and weights pass through") {
  Matrix h(2, 2);
  h(0, 0) = 3.0;
  h(1, 1) = -2.0;
  Matrix eye(2, 2);
  eye(0, 0) = eye(1, 1) = 1.0;
  auto out = gcn_layer_forward(h, eye, eye, Activation::Identity);
  CHECK(out == h);
  // ReLU clips the negative entry.
  out = gcn_layer_forward(h, eye, eye, Activation::ReLU);
  CHECK(out(0, 0) == 3.0);
  CHECK(out(1, 1) == 0.0);
}

TEST_CASE("gcn layer: hand-evaluated two-node propagation") {
  Matrix a_hat(2, 2, 0.5);
  Matrix h(2, 2);
  h(0, 0) = 2.0;
  h(1, 1) = 2.0;
  Matrix eye(2, 2);
  eye(0, 0) = eye(1, 1) = 1.0;
  auto out = gcn_layer_forward(h, a_hat, eye, Activation::Identity);
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) CHECK(out(i, j) == doctest::Approx(1.0).epsilon(1e-15));
  }
}

TEST_CASE("gcn layer: zero input stays zero (no biases)") {
  Matrix h(3, 4);
  Matrix a_hat(3, 3);
  a_hat(0, 0) = a_hat(1, 1) = a_hat(2, 2) = 1.0;
  Matrix w(4, 5, 0.37);
  auto out = gcn_layer_forward(h, a_hat, w, Activation::ReLU);
  for (size_t i = 0; i < out.size(); ++i) CHECK(out.data()[i] == 0.0);
}

TEST_CASE("gcn layer: sparse path equals dense path") {
  auto g = tiny_graph();
  Matrix dense = normalize_adjacency(g.A, std::vector<uint8_t>(g.n(), 1));
  SparseMatrix sparse = SparseMatrix::from_dense(dense);
  Rng rng(3);
  Matrix w(tiny_schema().k, 5);
  for (size_t i = 0; i < w.size(); ++i) w.data()[i] = rng.uniform(-1, 1);
  auto a = gcn_layer_forward(g.X, dense, w, Activation::ReLU);
  auto b = gcn_layer_forward(g.X, sparse, w, Activation::ReLU);
  CHECK(a == b);
}

TEST_CASE("gcn layer rejects mismatched shapes") {
  Matrix h(3, 4), a_hat(2, 2), w(4, 5);
  CHECK_THROWS_AS(gcn_layer_forward(h, a_hat, w, Activation::ReLU), DimensionError);
}

TEST_CASE("encoder maps all-zero features to the zero vector") {
  auto schema = tiny_schema();
  auto ccm = tiny_ccm();
  auto cfg = tiny_train();
  Rng rng(8);
  auto params = init_params(schema, ccm, cfg, rng);
  auto g = tiny_graph();
  g.X.fill(0.0);
  auto z = encode(g, params, schema);
  REQUIRE(z.size() == 3);
  for (double v : z) CHECK(v == 0.0);
}

TEST_CASE("encoder is deterministic and ignores padded slots") {
  auto schema = tiny_schema();
  auto ccm = tiny_ccm();
  auto cfg = tiny_train();
  Rng rng(8);
  auto params = init_params(schema, ccm, cfg, rng);
  auto g = tiny_graph();
  auto z1 = encode(g, params, schema);
  auto z2 = encode(g, params, schema);
  CHECK(z1 == z2);

  // Padding oracle: run the network over n_max-padded matrices with garbage
  // in the padded feature rows; the masked propagation must erase it.
  Matrix a_pad = normalize_adjacency(g.A, g.mask());
  Matrix x_pad(schema.n_max, schema.k);
  for (int i = 0; i < g.n(); ++i) {
    for (int c = 0; c < schema.k; ++c) x_pad(i, c) = g.X(i, c);
  }
  for (int i = g.n(); i < schema.n_max; ++i) {
    for (int c = 0; c < schema.k; ++c) x_pad(i, c) = 1e6 + i * c;
  }
  Matrix h1 = gcn_layer_forward(x_pad, a_pad, params.w1, Activation::ReLU);
  Matrix h2 = gcn_layer_forward(h1, a_pad, params.w2, Activation::Identity);
  std::vector<double> pool(cfg.h2, 0.0);
  for (int i = 0; i < g.n(); ++i) {
    for (int j = 0; j < cfg.h2; ++j) pool[j] += h2(i, j);
  }
  for (auto& v : pool) v /= g.n();
  std::vector<double> z_pad(ccm.ambient_dim(), 0.0);
  for (int t = 0; t < cfg.h2; ++t) {
    for (int j = 0; j < ccm.ambient_dim(); ++j) z_pad[j] += pool[t] * params.we(t, j);
  }
  CHECK(z_pad == z1);
}

TEST_CASE("decoder shapes, determinism and bounded-input stability") {
  auto schema = tiny_schema();
  auto ccm = tiny_ccm();
  auto cfg = tiny_train();
  Rng rng(9);
  auto params = init_params(schema, ccm, cfg, rng);
  std::vector<double> z{0.1, -0.4, 0.9};
  auto r1 = decode(z, params, schema);
  auto r2 = decode(z, params, schema);
  CHECK(r1.x_hat == r2.x_hat);
  CHECK(r1.a_logits == r2.a_logits);
  CHECK(r1.x_hat.rows() == schema.n_max);
  CHECK(r1.x_hat.cols() == schema.k);
  CHECK(r1.a_logits.rows() == schema.n_max);
  CHECK(r1.a_logits.cols() == schema.n_max);
  // Symmetrized logits.
  for (int i = 0; i < schema.n_max; ++i) {
    for (int j = 0; j < schema.n_max; ++j) CHECK(r1.a_logits(i, j) == r1.a_logits(j, i));
  }
  // Magnitude sweep: linear-relu-linear stays finite far beyond training range.
  for (double scale : {1.0, 10.0, 100.0, 1000.0}) {
    std::vector<double> big{scale, -scale, scale};
    auto r = decode(big, params, schema);
    for (size_t i = 0; i < r.x_hat.size(); ++i) CHECK(std::isfinite(r.x_hat.data()[i]));
    for (size_t i = 0; i < r.a_logits.size(); ++i) CHECK(std::isfinite(r.a_logits.data()[i]));
  }
  CHECK_THROWS_AS(decode({1.0, 2.0}, params, schema), DimensionError);
}

TEST_CASE("discriminator scores stay strictly inside (0,1) and start near 1/2") {
  // Initialization sweep at the default discriminator width, scoring the
  // inputs it actually sees: prior samples and init-scale encodings.
  auto schema = tiny_schema();
  CcmSpec ccm;          // d = 5
  TrainConfig cfg;      // h_d = 16
  for (uint64_t seed = 1; seed <= 40; ++seed) {
    Rng rng(seed);
    auto params = init_params(schema, ccm, cfg, rng);
    Rng zr(seed * 31);
    for (const auto& z : sample_prior(ccm, 5, zr)) {
      double s = discriminate(z, params);
      CHECK(s > 0.0);
      CHECK(s < 1.0);
      CHECK(std::fabs(s - 0.5) < 0.2);
    }
    std::vector<double> near_zero(ccm.ambient_dim(), 0.01);
    CHECK(std::fabs(discriminate(near_zero, params) - 0.5) < 0.2);
  }
}

TEST_CASE("reconstruction loss: zero logits cost exactly ln 2 per pair") {
  auto schema = tiny_schema();
  auto cfg = tiny_train();
  auto g = tiny_graph();
  Reconstruction recon;
  recon.x_hat = Matrix(schema.n_max, schema.k);
  for (int i = 0; i < g.n(); ++i) {
    for (int c = 0; c < schema.k; ++c) recon.x_hat(i, c) = g.X(i, c);
  }
  recon.a_logits = Matrix(schema.n_max, schema.n_max);
  double loss = reconstruction_loss(g, recon, cfg);
  CHECK(loss == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("reconstruction loss approaches zero at the optimum") {
  auto schema = tiny_schema();
  auto cfg = tiny_train();
  DayBucket empty{"u", civil_to_day(2013, 11, 5), {}};
  auto g = build_day_graph(empty, schema);
  Reconstruction recon;
  recon.x_hat = Matrix(schema.n_max, schema.k);
  for (int i = 0; i < g.n(); ++i) {
    for (int c = 0; c < schema.k; ++c) recon.x_hat(i, c) = g.X(i, c);
  }
  // Saturate logits toward the true structure.
  IntMatrix s = symmetrized_binary(g.A);
  recon.a_logits = Matrix(schema.n_max, schema.n_max);
  for (int i = 0; i < g.n(); ++i) {
    for (int j = 0; j < g.n(); ++j) recon.a_logits(i, j) = s(i, j) ? 40.0 : -40.0;
  }
  CHECK(reconstruction_loss(g, recon, cfg) < 1e-12);
}

TEST_CASE("reconstruction loss ignores padded-slot contents") {
  auto schema = tiny_schema();
  auto cfg = tiny_train();
  auto g = tiny_graph();
  Reconstruction a;
  a.x_hat = Matrix(schema.n_max, schema.k, 0.25);
  a.a_logits = Matrix(schema.n_max, schema.n_max, -0.5);
  Reconstruction b = a;
  for (int i = g.n(); i < schema.n_max; ++i) {
    for (int c = 0; c < schema.k; ++c) b.x_hat(i, c) = 1e9;
    for (int j = 0; j < schema.n_max; ++j) b.a_logits(i, j) = -3e5;
  }
  CHECK(reconstruction_loss(g, a, cfg) == reconstruction_loss(g, b, cfg));
}

TEST_CASE("discriminator loss evaluates Eq-style targets") {
  auto schema = tiny_schema();
  auto ccm = tiny_ccm();
  auto cfg = tiny_train();
  // Zeroed discriminator weights give exactly 1/2 on both inputs.
  auto params = make_params(schema, ccm, cfg);
  Rng prior_rng(4);
  auto z_prior = sample_prior(ccm, 1, prior_rng)[0];
  std::vector<double> z_enc{0.2, 0.3, -0.1};
  CHECK(discriminate(z_prior, params) == 0.5);
  CHECK(discriminator_loss(z_prior, z_enc, params, ccm) ==
        doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-12));
  CHECK(encoder_adversarial_loss(z_enc, params) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-12));

  // Saturated cases: a huge bias drives the score to the clamp.
  params.c3[0] = 1000.0;
  CHECK(discriminator_loss(z_prior, z_enc, params, ccm) >=
        doctest::Approx(-std::log(1.0 - 1e-7)).epsilon(1e-3));
  CHECK(encoder_adversarial_loss(z_enc, params) == doctest::Approx(0.0).epsilon(1e-6));
  params.c3[0] = -1000.0;
  // -log(eps) is the worst positive term.
  CHECK(discriminator_loss(z_prior, z_enc, params, ccm) >= -std::log(1e-7) - 1e-6);
  // Losses stay finite at the clamp.
  CHECK(std::isfinite(discriminator_loss(z_prior, z_enc, params, ccm)));
  CHECK(std::isfinite(encoder_adversarial_loss(z_enc, params)));
}

TEST_CASE("membership weight is exactly 1 for exact prior samples") {
  auto ccm = tiny_ccm();
  Rng rng(6);
  for (const auto& z : sample_prior(ccm, 50, rng)) {
    CHECK(membership(z, ccm) == 1.0);
  }
}

TEST_CASE("baseline smoke train: reconstruction loss decreases") {
  auto schema = tiny_schema();
  auto ccm = tiny_ccm();
  auto cfg = tiny_train();
  cfg.baseline_mode = true;
  cfg.batch_size = 10;
  Trainer trainer(schema, ccm, cfg);
  std::vector<SemanticGraph> graphs;
  for (uint64_t v = 0; v < 10; ++v) graphs.push_back(tiny_graph(v));
  std::vector<const SemanticGraph*> batch;
  for (auto& g : graphs) batch.push_back(&g);

  std::vector<double> losses;
  for (int step = 0; step < 50; ++step) {
    PhaseLosses pl = trainer.train_step(batch);
    losses.push_back(pl.recon);
    // Baseline mode never runs the adversarial phases.
    CHECK(std::isnan(pl.disc));
    CHECK(std::isnan(pl.enc));
  }
  // Full-batch descent on this instance decreases strictly at every step.
  CHECK(losses.back() < losses.front());
  for (size_t i = 1; i < losses.size(); ++i) CHECK(losses[i] < losses[i - 1]);
}

TEST_CASE("equal seeds give bit-identical parameters after training") {
  auto schema = tiny_schema();
  auto ccm = tiny_ccm();
  auto cfg = tiny_train();
  cfg.epochs = 3;
  std::vector<SemanticGraph> graphs;
  for (uint64_t v = 0; v < 6; ++v) graphs.push_back(tiny_graph(v));
  std::vector<const SemanticGraph*> ptrs;
  for (auto& g : graphs) ptrs.push_back(&g);

  Trainer t1(schema, ccm, cfg), t2(schema, ccm, cfg);
  auto log1 = t1.run(ptrs);
  auto log2 = t2.run(ptrs);
  REQUIRE(log1.size() == log2.size());
  for (size_t i = 0; i < log1.size(); ++i) {
    CHECK(log1[i].losses.recon == log2[i].losses.recon);
    CHECK(log1[i].mean_deviation == log2[i].mean_deviation);
  }
  auto b1 = t1.params().blocks(ParamGroup::All);
  auto b2 = t2.params().blocks(ParamGroup::All);
  for (size_t b = 0; b < b1.size(); ++b) {
    for (size_t i = 0; i < b1[b].size; ++i) REQUIRE(b1[b].data[i] == b2[b].data[i]);
  }
}

#ifdef _OPENMP
TEST_CASE("training is invariant to the OpenMP thread count") {
  auto schema = tiny_schema();
  auto ccm = tiny_ccm();
  auto cfg = tiny_train();
  std::vector<SemanticGraph> graphs;
  for (uint64_t v = 0; v < 5; ++v) graphs.push_back(tiny_graph(v));
  std::vector<const SemanticGraph*> ptrs;
  for (auto& g : graphs) ptrs.push_back(&g);

  int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  Trainer t1(schema, ccm, cfg);
  for (int i = 0; i < 5; ++i) t1.train_step(ptrs);
  omp_set_num_threads(2);
  Trainer t2(schema, ccm, cfg);
  for (int i = 0; i < 5; ++i) t2.train_step(ptrs);
  omp_set_num_threads(saved);

  auto b1 = t1.params().blocks(ParamGroup::All);
  auto b2 = t2.params().blocks(ParamGroup::All);
  for (size_t b = 0; b < b1.size(); ++b) {
    for (size_t i = 0; i < b1[b].size; ++i) REQUIRE(b1[b].data[i] == b2[b].data[i]);
  }
}
#endif

TEST_CASE("adversarial direction by direct optimization on a frozen instance") {
  auto schema = tiny_schema();
  auto ccm = tiny_ccm();
  auto cfg = tiny_train();
  Rng rng(14);
  auto params = init_params(schema, ccm, cfg, rng);
  auto g = tiny_graph();
  Rng prior_rng(55);
  auto z_prior = sample_prior(ccm, 1, prior_rng)[0];

  auto gd = [&](ParamGroup group, ModelParams& grads, double lr) {
    auto pb = params.blocks(group);
    auto gb = grads.blocks(group);
    for (size_t b = 0; b < pb.size(); ++b) {
      for (size_t i = 0; i < pb[b].size; ++i) pb[b].data[i] -= lr * gb[b].data[i];
    }
  };

  // argmin over lambda of the discriminator loss drives Dis(z_prior) -> 1
  // and Dis(z_enc) -> 0 with everything else frozen.
  for (int iter = 0; iter < 4000; ++iter) {
    ModelParams grads = analytic_grads(LossKind::Discriminator, params, g, schema, ccm, cfg,
                                       z_prior);
    gd(ParamGroup::Lambda, grads, 0.05);
  }
  auto z_enc = encode(g, params, schema);
  CHECK(discriminate(z_prior, params) > 0.9);
  CHECK(discriminate(z_enc, params) < 0.1);

  // argmin over phi of the encoder adversarial loss drives Dis(z_enc) -> 1
  // against the now-frozen discriminator.
  for (int iter = 0; iter < 4000; ++iter) {
    ModelParams grads =
        analytic_grads(LossKind::EncoderAdversarial, params, g, schema, ccm, cfg, z_prior);
    gd(ParamGroup::Phi, grads, 0.05);
  }
  CHECK(discriminate(encode(g, params, schema), params) > 0.9);
}

TEST_CASE("full training pulls encoder outputs toward the manifold") {
  auto schema = tiny_schema();
  auto ccm = tiny_ccm();
  auto cfg = tiny_train();
  cfg.epochs = 120;
  cfg.batch_size = 6;
  std::vector<SemanticGraph> graphs;
  for (uint64_t v = 0; v < 12; ++v) graphs.push_back(tiny_graph(v));
  std::vector<const SemanticGraph*> ptrs;
  for (auto& g : graphs) ptrs.push_back(&g);
  Trainer trainer(schema, ccm, cfg);
  auto log = trainer.run(ptrs);
  REQUIRE(log.size() == static_cast<size_t>(cfg.epochs) + 1);
  CHECK(log.back().mean_deviation < 0.5 * log.front().mean_deviation);
}

TEST_CASE("train_step aborts on non-finite state with diagnostics") {
  auto schema = tiny_schema();
  auto ccm = tiny_ccm();
  auto cfg = tiny_train();
  Trainer trainer(schema, ccm, cfg);
  trainer.params().w1(0, 0) = std::numeric_limits<double>::quiet_NaN();
  auto g = tiny_graph();
  std::vector<const SemanticGraph*> batch{&g};
  CHECK_THROWS_AS(trainer.train_step(batch), DataError);
  try {
    trainer.train_step(batch);
  } catch (const DataError& e) {
    std::string msg = e.what();
    CHECK(msg.find("phase") != std::string::npos);
    CHECK(msg.find("batch") != std::string::npos);
  }
}

TEST_CASE("embed_dataset is ordered, complete, and checkpoint-stable") {
  namespace fs = std::filesystem;
  auto schema = tiny_schema();
  auto ccm = tiny_ccm();
  auto cfg = tiny_train();
  Trainer trainer(schema, ccm, cfg);
  std::vector<SemanticGraph> graphs;
  for (uint64_t v = 0; v < 6; ++v) graphs.push_back(tiny_graph(v));
  // Same content twice: identical graphs embed identically.
  graphs.push_back(tiny_graph(0));
  std::vector<const SemanticGraph*> ptrs;
  for (auto& g : graphs) ptrs.push_back(&g);

  auto points = embed_dataset(ptrs, trainer.params(), schema);
  REQUIRE(points.size() == ptrs.size());
  for (size_t i = 1; i < points.size(); ++i) {
    bool ordered = points[i - 1].user_id < points[i].user_id ||
                   (points[i - 1].user_id == points[i].user_id &&
                    points[i - 1].date <= points[i].date);
    CHECK(ordered);
  }
  CHECK(points[0].z == points[1].z);  // the duplicated t0 graph

  // Round-trip through a checkpoint: bit-identical embeddings.
  fs::path dir = fs::temp_directory_path() / "lifegraph_ckpt_test";
  fs::create_directories(dir);
  CheckpointMeta meta{"deadbeef", 21, schema, ccm, cfg};
  save_checkpoint((dir / "ck").string(), trainer.params(), meta);
  CheckpointMeta loaded_meta;
  ModelParams loaded = load_checkpoint((dir / "ck").string(), loaded_meta);
  CHECK(loaded_meta.config_hash == "deadbeef");
  CHECK(loaded_meta.schema.n_max == schema.n_max);
  auto points2 = embed_dataset(ptrs, loaded, schema);
  REQUIRE(points2.size() == points.size());
  for (size_t i = 0; i < points.size(); ++i) REQUIRE(points2[i].z == points[i].z);

  // f32 checkpoints load close but not exact.
  save_checkpoint((dir / "ck32").string(), trainer.params(), meta, "f32");
  ModelParams loaded32 = load_checkpoint((dir / "ck32").string(), loaded_meta);
  auto points3 = embed_dataset(ptrs, loaded32, schema);
  for (size_t i = 0; i < points.size(); ++i) {
    for (size_t c = 0; c < points[i].z.size(); ++c) {
      CHECK(points3[i].z[c] == doctest::Approx(points[i].z[c]).epsilon(1e-4));
    }
  }
  fs::remove_all(dir);
}

TEST_CASE("train_step rejects an empty batch") {
  Trainer trainer(tiny_schema(), tiny_ccm(), tiny_train());
  CHECK_THROWS_AS(trainer.train_step({}), UsageError);
}
