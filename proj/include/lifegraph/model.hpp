// The graph-convolutional adversarial autoencoder. A two-layer GCN encoder
// pools node embeddings into a latent vector z in R^{d+1}; a dense decoder
// reconstructs node features and edge logits; a small discriminator is
// trained against exact manifold prior samples so that adversarial pressure
// pushes encoder outputs onto the constant-curvature manifold. All gradients
// are hand-derived reverse-mode and validated by finite differences.
#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "lifegraph/graph.hpp"
#include "lifegraph/manifold.hpp"
#include "lifegraph/mat.hpp"

namespace lifegraph {

struct TrainConfig {
  int h1 = 32;   // first GCN layer width
  int h2 = 32;   // second GCN layer width / decoder hidden width
  int h_d = 16;  // discriminator hidden width
  double lr_recon = 1e-3;
  double lr_disc = 1e-3;
  double lr_enc = 5e-4;
  int batch_size = 16;
  int epochs = 300;
  uint64_t seed = 0;
  bool baseline_mode = false;  // plain AE: skip the adversarial phases
  double recon_x_weight = 1.0;
  double recon_a_weight = 1.0;

  void validate() const;
};

// One named view into a parameter (or gradient) block.
struct BlockRef {
  std::string name;
  double* data;
  size_t size;
  std::vector<int> shape;
};

enum class ParamGroup { Phi, Theta, Lambda, PhiTheta, All };

struct ModelParams {
  // encoder (phi)
  Matrix w1;  // k x h1
  Matrix w2;  // h1 x h2
  Matrix we;  // h2 x (d+1), no bias
  // decoder (theta)
  Matrix wd;               // (d+1) x h2
  std::vector<double> bd;  // h2
  Matrix wx;               // h2 x (n_max * k)
  std::vector<double> bx;  // n_max * k
  Matrix wa;               // h2 x (n_max * n_max)
  std::vector<double> ba;  // n_max * n_max
  // discriminator (lambda)
  Matrix v1;               // (d+1) x h_d
  std::vector<double> c1;  // h_d
  Matrix v2;               // h_d x h_d
  std::vector<double> c2;  // h_d
  std::vector<double> v3;  // h_d
  std::vector<double> c3;  // 1

  std::vector<BlockRef> blocks(ParamGroup group);
  void zero();
  bool all_finite() const;
};

ModelParams make_params(const GraphSchema& schema, const CcmSpec& ccm, const TrainConfig& cfg);
ModelParams init_params(const GraphSchema& schema, const CcmSpec& ccm, const TrainConfig& cfg,
                        Rng& rng);

struct Reconstruction {
  Matrix x_hat;     // n_max x k
  Matrix a_logits;  // n_max x n_max, symmetrized
};

enum class Activation { ReLU, Identity };

// One GCN propagation: activation(A_hat * H * W).
Matrix gcn_layer_forward(const Matrix& h, const Matrix& a_hat, const Matrix& w, Activation act);
Matrix gcn_layer_forward(const Matrix& h, const SparseMatrix& a_hat, const Matrix& w,
                         Activation act);

// Encoder: z = meanpool(GCN2(GCN1(X, A_hat), A_hat)) * We. The output is
// unconstrained; only the adversarial phase pulls it toward the manifold.
std::vector<double> encode(const SemanticGraph& graph, const ModelParams& params,
                           const GraphSchema& schema);

// Decoder: dense stack producing node features and symmetrized edge logits.
Reconstruction decode(const std::vector<double>& z, const ModelParams& params,
                      const GraphSchema& schema);

// Discriminator score in (0,1); 1 means "prior/manifold sample".
double discriminate(const std::vector<double>& z, const ModelParams& params);

// Masked reconstruction loss: MSE over real node rows plus binary
// cross-entropy against binarize(A + A^T) over real node pairs.
double reconstruction_loss(const SemanticGraph& graph, const Reconstruction& recon,
                           const TrainConfig& cfg);

// Eq-style adversarial losses; scores are clamped to [eps, 1-eps].
constexpr double kScoreClamp = 1e-7;
double discriminator_loss(const std::vector<double>& z_prior, const std::vector<double>& z_enc,
                          const ModelParams& params, const CcmSpec& ccm);
double encoder_adversarial_loss(const std::vector<double>& z_enc, const ModelParams& params);

struct PhaseLosses {
  double recon = 0.0;
  double disc = 0.0;
  double enc = 0.0;
};

struct EpochLog {
  int epoch = 0;
  PhaseLosses losses;
  double mean_deviation = 0.0;
};

class Trainer {
 public:
  Trainer(GraphSchema schema, CcmSpec ccm, TrainConfig cfg);

  // One three-phase step over a batch: (1) reconstruction updates phi+theta,
  // (2) discriminator updates lambda against fresh prior samples, (3) the
  // encoder chases the discriminator. Baseline mode runs phase 1 only.
  PhaseLosses train_step(const std::vector<const SemanticGraph*>& batch);

  // Full training loop: seeded shuffle into batches each epoch. The log gets
  // one entry per epoch plus an initial epoch-0 evaluation entry.
  std::vector<EpochLog> run(const std::vector<const SemanticGraph*>& graphs,
                            const std::function<void(const EpochLog&)>& on_epoch = nullptr);

  PhaseLosses evaluate(const std::vector<const SemanticGraph*>& graphs);
  double mean_encoder_deviation(const std::vector<const SemanticGraph*>& graphs);

  ModelParams& params() { return params_; }
  const ModelParams& params() const { return params_; }
  const GraphSchema& schema() const { return schema_; }
  const CcmSpec& ccm() const { return ccm_; }
  const TrainConfig& config() const { return cfg_; }

 private:
  GraphSchema schema_;
  CcmSpec ccm_;
  TrainConfig cfg_;
  ModelParams params_;
  Rng rng_;
  struct AdamState {
    double lr;
    int64_t t = 0;
    std::vector<std::vector<double>> m, v;
  };
  AdamState adam_recon_, adam_disc_, adam_enc_;
  int64_t step_count_ = 0;
  int64_t epoch_counter_ = 0;

  void adam_step(AdamState& st, ParamGroup group, const ModelParams& grads);
};

// One latent point per graph, ordered by (user_id, date).
std::vector<LatentPoint> embed_dataset(const std::vector<const SemanticGraph*>& graphs,
                                       const ModelParams& params, const GraphSchema& schema);

// --- gradient checking -----------------------------------------------------

enum class LossKind { Reconstruction, Discriminator, EncoderAdversarial };

const char* loss_kind_name(LossKind k);

// Analytic gradients of one loss for one graph, via the training backward
// pass. For the discriminator loss, z_prior must be supplied.
ModelParams analytic_grads(LossKind kind, const ModelParams& params, const SemanticGraph& graph,
                           const GraphSchema& schema, const CcmSpec& ccm, const TrainConfig& cfg,
                           const std::vector<double>& z_prior);

struct GradCheckOptions {
  double fd_step = 1e-5;
  double tolerance = 1e-4;
};

struct BlockCheck {
  LossKind loss;
  std::string block;
  double max_rel_err = 0.0;
};

struct GradCheckReport {
  std::vector<BlockCheck> checks;
  double worst = 0.0;
  std::string worst_block;
  bool passed = false;
};

// Compare analytic gradients against central differences for every
// parameter entry of every block each loss trains (Eq. 5: phi+theta,
// Eq. 6: lambda, Eq. 7: phi). Throws CheckFailed naming the first block
// whose relative error reaches the tolerance.
GradCheckReport grad_check(const ModelParams& params, const SemanticGraph& graph,
                           const GraphSchema& schema, const CcmSpec& ccm, const TrainConfig& cfg,
                           const GradCheckOptions& opts = {});

// Lower-level: max relative FD error of `grads` for one block under `loss`.
// Exposed so tests can corrupt a gradient and watch the check trip.
double fd_block_error(const std::function<double(const ModelParams&)>& loss, ModelParams& params,
                      const BlockRef& block, const BlockRef& grad_block,
                      const GradCheckOptions& opts);

// --- checkpointing ----------------------------------------------------------

struct CheckpointMeta {
  std::string config_hash;
  uint64_t seed = 0;
  GraphSchema schema;
  CcmSpec ccm;
  TrainConfig cfg;
};

void save_checkpoint(const std::string& prefix, const ModelParams& params,
                     const CheckpointMeta& meta, const std::string& dtype = "f64");
ModelParams load_checkpoint(const std::string& prefix, CheckpointMeta& meta);

}  // namespace lifegraph
