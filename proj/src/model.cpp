#include "lifegraph/model.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "lifegraph/config.hpp"
#include "lifegraph/io.hpp"
#include "lifegraph/kernels.hpp"

namespace lifegraph {

void TrainConfig::validate() const {
  if (h1 < 1 || h2 < 1 || h_d < 1) throw UsageError("TrainConfig: hidden sizes must be positive");
  if (lr_recon <= 0 || lr_disc <= 0 || lr_enc <= 0) {
    throw UsageError("TrainConfig: learning rates must be positive");
  }
  if (batch_size < 1) throw UsageError("TrainConfig: batch_size must be positive");
  if (epochs < 1) throw UsageError("TrainConfig: epochs must be >= 1");
  if (recon_x_weight < 0 || recon_a_weight < 0) {
    throw UsageError("TrainConfig: loss weights must be nonnegative");
  }
}

namespace {

BlockRef mat_block(const char* name, Matrix& m) {
  return {name, m.data(), m.size(), {m.rows(), m.cols()}};
}

BlockRef vec_block(const char* name, std::vector<double>& v) {
  return {name, v.data(), v.size(), {static_cast<int>(v.size())}};
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Numerically stable -s*log(sigmoid(l)) - (1-s)*log(1-sigmoid(l)).
inline double bce_with_logit(double l, double s) {
  return std::max(l, 0.0) - l * s + std::log1p(std::exp(-std::fabs(l)));
}

}  // namespace

std::vector<BlockRef> ModelParams::blocks(ParamGroup group) {
  std::vector<BlockRef> out;
  auto phi = [&] {
    out.push_back(mat_block("encoder.w1", w1));
    out.push_back(mat_block("encoder.w2", w2));
    out.push_back(mat_block("encoder.we", we));
  };
  auto theta = [&] {
    out.push_back(mat_block("decoder.wd", wd));
    out.push_back(vec_block("decoder.bd", bd));
    out.push_back(mat_block("decoder.wx", wx));
    out.push_back(vec_block("decoder.bx", bx));
    out.push_back(mat_block("decoder.wa", wa));
    out.push_back(vec_block("decoder.ba", ba));
  };
  auto lambda = [&] {
    out.push_back(mat_block("discriminator.v1", v1));
    out.push_back(vec_block("discriminator.c1", c1));
    out.push_back(mat_block("discriminator.v2", v2));
    out.push_back(vec_block("discriminator.c2", c2));
    out.push_back(vec_block("discriminator.v3", v3));
    out.push_back(vec_block("discriminator.c3", c3));
  };
  switch (group) {
    case ParamGroup::Phi: phi(); break;
    case ParamGroup::Theta: theta(); break;
    case ParamGroup::Lambda: lambda(); break;
    case ParamGroup::PhiTheta: phi(); theta(); break;
    case ParamGroup::All: phi(); theta(); lambda(); break;
  }
  return out;
}

void ModelParams::zero() {
  for (auto& b : blocks(ParamGroup::All)) std::fill(b.data, b.data + b.size, 0.0);
}

bool ModelParams::all_finite() const {
  auto bs = const_cast<ModelParams*>(this)->blocks(ParamGroup::All);
  for (auto& b : bs) {
    for (size_t i = 0; i < b.size; ++i) {
      if (!std::isfinite(b.data[i])) return false;
    }
  }
  return true;
}

ModelParams make_params(const GraphSchema& schema, const CcmSpec& ccm, const TrainConfig& cfg) {
  int latent = ccm.ambient_dim();
  ModelParams p;
  p.w1 = Matrix(schema.k, cfg.h1);
  p.w2 = Matrix(cfg.h1, cfg.h2);
  p.we = Matrix(cfg.h2, latent);
  p.wd = Matrix(latent, cfg.h2);
  p.bd.assign(cfg.h2, 0.0);
  // Output heads are stored output-major so the per-output inner loops over
  // the hidden units run over contiguous memory.
  p.wx = Matrix(schema.n_max * schema.k, cfg.h2);
  p.bx.assign(static_cast<size_t>(schema.n_max) * schema.k, 0.0);
  p.wa = Matrix(schema.n_max * schema.n_max, cfg.h2);
  p.ba.assign(static_cast<size_t>(schema.n_max) * schema.n_max, 0.0);
  p.v1 = Matrix(latent, cfg.h_d);
  p.c1.assign(cfg.h_d, 0.0);
  p.v2 = Matrix(cfg.h_d, cfg.h_d);
  p.c2.assign(cfg.h_d, 0.0);
  p.v3.assign(cfg.h_d, 0.0);
  p.c3.assign(1, 0.0);
  return p;
}

ModelParams init_params(const GraphSchema& schema, const CcmSpec& ccm, const TrainConfig& cfg,
                        Rng& rng) {
  ModelParams p = make_params(schema, ccm, cfg);
  // Glorot-style uniform init on weight matrices. The encoder is entirely
  // bias-free, so an all-zero input maps to z = 0; the other biases get a
  // small uniform offset, which keeps every ReLU pre-activation generically
  // away from its kink (finite-difference checks would otherwise see
  // one-sided derivatives at exactly zero).
  auto glorot = [&](Matrix& m) {
    double limit = std::sqrt(6.0 / (m.rows() + m.cols()));
    for (size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-limit, limit);
  };
  auto small = [&](std::vector<double>& v) {
    for (auto& b : v) b = rng.uniform(-0.05, 0.05);
  };
  glorot(p.w1);
  glorot(p.w2);
  glorot(p.we);
  glorot(p.wd);
  small(p.bd);
  glorot(p.wx);
  small(p.bx);
  glorot(p.wa);
  small(p.ba);
  glorot(p.v1);
  small(p.c1);
  glorot(p.v2);
  small(p.c2);
  {
    double limit = std::sqrt(6.0 / (cfg.h_d + 1));
    for (auto& v : p.v3) v = rng.uniform(-limit, limit);
  }
  small(p.c3);
  return p;
}

// --- prepared per-graph tensors ----------------------------------------------

namespace {

struct Prepared {
  int n = 0;
  SparseMatrix a_hat;          // n x n propagation matrix
  Matrix x;                    // n x k features
  std::vector<uint8_t> s_bin;  // n*n undirected binary target
};

Prepared prepare(const SemanticGraph& graph, const GraphSchema& schema) {
  Prepared p;
  p.n = graph.n();
  if (p.n > schema.n_max) {
    throw CompatibilityError("graph " + graph.user_id + "/" + format_date(graph.date) + " has " +
                             std::to_string(p.n) + " nodes > n_max " +
                             std::to_string(schema.n_max));
  }
  if (graph.X.rows() == p.n && graph.X.cols() == schema.k) {
    p.x = graph.X;
  } else {
    p.x = node_features(graph, schema);
  }
  std::vector<uint8_t> mask(p.n, 1);
  p.a_hat = SparseMatrix::from_dense(normalize_adjacency(graph.A, mask));
  IntMatrix s = symmetrized_binary(graph.A);
  p.s_bin.resize(static_cast<size_t>(p.n) * p.n);
  for (int i = 0; i < p.n; ++i) {
    for (int j = 0; j < p.n; ++j) p.s_bin[static_cast<size_t>(i) * p.n + j] = s(i, j) ? 1 : 0;
  }
  return p;
}

struct EncTrace {
  Matrix u1;  // pre-activation of layer 1
  Matrix a1;  // relu(u1)
  std::vector<double> pool;
  std::vector<double> z;
};

EncTrace encoder_forward(const Prepared& p, const ModelParams& mp) {
  EncTrace tr;
  Matrix xw;
  matmul(p.x, mp.w1, xw);
  spmm(p.a_hat, xw, tr.u1);
  tr.a1 = tr.u1;
  for (size_t i = 0; i < tr.a1.size(); ++i) {
    if (tr.a1.data()[i] < 0.0) tr.a1.data()[i] = 0.0;
  }
  Matrix aw;
  matmul(tr.a1, mp.w2, aw);
  Matrix u2;
  spmm(p.a_hat, aw, u2);
  int h2 = u2.cols();
  tr.pool.assign(h2, 0.0);
  for (int i = 0; i < p.n; ++i) {
    const double* row = u2.row(i);
    for (int j = 0; j < h2; ++j) tr.pool[j] += row[j];
  }
  for (int j = 0; j < h2; ++j) tr.pool[j] /= static_cast<double>(p.n);
  int latent = mp.we.cols();
  tr.z.assign(latent, 0.0);
  for (int t = 0; t < h2; ++t) {
    double pv = tr.pool[t];
    for (int j = 0; j < latent; ++j) tr.z[j] += pv * mp.we(t, j);
  }
  return tr;
}

void encoder_backward(const Prepared& p, const ModelParams& mp, const EncTrace& tr,
                      const std::vector<double>& dz, ModelParams& grads) {
  int h2 = mp.we.rows();
  int latent = mp.we.cols();
  // head: z = pool * we
  std::vector<double> dpool(h2, 0.0);
  for (int t = 0; t < h2; ++t) {
    for (int j = 0; j < latent; ++j) {
      grads.we(t, j) += tr.pool[t] * dz[j];
      dpool[t] += mp.we(t, j) * dz[j];
    }
  }
  // mean pool over n rows
  Matrix du2(p.n, h2);
  for (int i = 0; i < p.n; ++i) {
    double* row = du2.row(i);
    for (int j = 0; j < h2; ++j) row[j] = dpool[j] / static_cast<double>(p.n);
  }
  // layer 2 (identity activation): u2 = A_hat * (a1 * w2)
  Matrix daw;
  spmm(p.a_hat, du2, daw);  // A_hat is symmetric
  Matrix dw2;
  matmul_tn(tr.a1, daw, dw2);
  for (size_t i = 0; i < dw2.size(); ++i) grads.w2.data()[i] += dw2.data()[i];
  Matrix da1;
  matmul_nt(daw, mp.w2, da1);
  // relu
  for (size_t i = 0; i < da1.size(); ++i) {
    if (tr.u1.data()[i] <= 0.0) da1.data()[i] = 0.0;
  }
  // layer 1: u1 = A_hat * (x * w1)
  Matrix dxw;
  spmm(p.a_hat, da1, dxw);
  Matrix dw1;
  matmul_tn(p.x, dxw, dw1);
  for (size_t i = 0; i < dw1.size(); ++i) grads.w1.data()[i] += dw1.data()[i];
}

struct DecTrace {
  std::vector<double> gpre, g;  // h2
  Matrix xh;   // rows x k
  Matrix sym;  // rows x rows symmetrized logits
};

// Decoder forward over the first `rows` node slots. Training uses
// rows = n (padded slots contribute nothing to the loss); the public decode
// uses rows = n_max.
DecTrace decoder_forward(const std::vector<double>& z, const ModelParams& mp,
                         const GraphSchema& schema, int rows) {
  DecTrace tr;
  int h2 = static_cast<int>(mp.bd.size());
  int latent = mp.wd.rows();
  if (static_cast<int>(z.size()) != latent) {
    throw DimensionError("decode: z has length " + std::to_string(z.size()) + ", expected " +
                         std::to_string(latent));
  }
  tr.gpre = mp.bd;
  for (int i = 0; i < latent; ++i) {
    double zv = z[i];
    for (int t = 0; t < h2; ++t) tr.gpre[t] += zv * mp.wd(i, t);
  }
  tr.g = tr.gpre;
  for (auto& v : tr.g) v = std::max(v, 0.0);

  int k = schema.k;
  int n_max = schema.n_max;
  tr.xh = Matrix(rows, k);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < rows; ++i) {
    for (int c = 0; c < k; ++c) {
      int out = i * k + c;
      const double* wrow = mp.wx.row(out);
      double acc = mp.bx[out];
      for (int t = 0; t < h2; ++t) acc += tr.g[t] * wrow[t];
      tr.xh(i, c) = acc;
    }
  }
  Matrix raw(rows, rows);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < rows; ++j) {
      int out = i * n_max + j;
      const double* wrow = mp.wa.row(out);
      double acc = mp.ba[out];
      for (int t = 0; t < h2; ++t) acc += tr.g[t] * wrow[t];
      raw(i, j) = acc;
    }
  }
  tr.sym = Matrix(rows, rows);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < rows; ++j) tr.sym(i, j) = 0.5 * (raw(i, j) + raw(j, i));
  }
  return tr;
}

// Backward through the decoder given upstream gradients on xh and sym.
// Accumulates theta gradients and returns d(loss)/dz.
void decoder_backward(const std::vector<double>& z, const ModelParams& mp,
                      const GraphSchema& schema, const DecTrace& tr, const Matrix& dxh,
                      const Matrix& dsym, ModelParams& grads, std::vector<double>& dz) {
  int rows = dxh.rows();
  int h2 = static_cast<int>(mp.bd.size());
  int latent = mp.wd.rows();
  int k = schema.k;
  int n_max = schema.n_max;

  // Through the symmetrization sym = (raw + raw^T)/2.
  Matrix draw(rows, rows);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < rows; ++j) draw(i, j) = 0.5 * (dsym(i, j) + dsym(j, i));
  }

  // Feature head. Parallel node rows touch disjoint wx/bx rows.
#pragma omp parallel for schedule(static)
  for (int i = 0; i < rows; ++i) {
    for (int c = 0; c < k; ++c) {
      int out = i * k + c;
      double d = dxh(i, c);
      if (d == 0.0) continue;
      grads.bx[out] += d;
      double* grow = grads.wx.row(out);
      for (int t = 0; t < h2; ++t) grow[t] += tr.g[t] * d;
    }
  }
  // Edge head.
#pragma omp parallel for schedule(static)
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < rows; ++j) {
      int out = i * n_max + j;
      double d = draw(i, j);
      if (d == 0.0) continue;
      grads.ba[out] += d;
      double* grow = grads.wa.row(out);
      for (int t = 0; t < h2; ++t) grow[t] += tr.g[t] * d;
    }
  }
  // dg over both heads; each entry is one thread's fixed-order reduction, so
  // the result does not depend on the thread count.
  std::vector<double> dg(h2, 0.0);
#pragma omp parallel for schedule(static)
  for (int t = 0; t < h2; ++t) {
    double acc = 0.0;
    for (int i = 0; i < rows; ++i) {
      for (int c = 0; c < k; ++c) {
        double d = dxh(i, c);
        if (d != 0.0) acc += mp.wx(i * k + c, t) * d;
      }
    }
    for (int i = 0; i < rows; ++i) {
      for (int j = 0; j < rows; ++j) {
        double d = draw(i, j);
        if (d != 0.0) acc += mp.wa(i * n_max + j, t) * d;
      }
    }
    dg[t] = acc;
  }

  dz.assign(latent, 0.0);
  for (int t = 0; t < h2; ++t) {
    double d = dg[t];
    if (tr.gpre[t] <= 0.0) continue;  // relu gate
    grads.bd[t] += d;
    for (int i = 0; i < latent; ++i) {
      grads.wd(i, t) += z[i] * d;
      dz[i] += mp.wd(i, t) * d;
    }
  }
}

struct DiscTrace {
  std::vector<double> q1, r1, q2, r2;
  double logit = 0.0;
  double score = 0.5;
};

DiscTrace disc_forward(const std::vector<double>& z, const ModelParams& mp) {
  int latent = mp.v1.rows();
  int hd = mp.v1.cols();
  if (static_cast<int>(z.size()) != latent) {
    throw DimensionError("discriminate: z has length " + std::to_string(z.size()) +
                         ", expected " + std::to_string(latent));
  }
  DiscTrace tr;
  tr.q1 = mp.c1;
  for (int i = 0; i < latent; ++i) {
    for (int t = 0; t < hd; ++t) tr.q1[t] += z[i] * mp.v1(i, t);
  }
  tr.r1 = tr.q1;
  for (auto& v : tr.r1) v = std::max(v, 0.0);
  tr.q2 = mp.c2;
  for (int i = 0; i < hd; ++i) {
    for (int t = 0; t < hd; ++t) tr.q2[t] += tr.r1[i] * mp.v2(i, t);
  }
  tr.r2 = tr.q2;
  for (auto& v : tr.r2) v = std::max(v, 0.0);
  tr.logit = mp.c3[0];
  for (int t = 0; t < hd; ++t) tr.logit += tr.r2[t] * mp.v3[t];
  tr.score = sigmoid(tr.logit);
  return tr;
}

// Backward from d(loss)/dlogit. Accumulates lambda gradients when grads is
// non-null and input gradients when dz is non-null.
void disc_backward(const std::vector<double>& z, const ModelParams& mp, const DiscTrace& tr,
                   double dlogit, ModelParams* grads, std::vector<double>* dz) {
  int latent = mp.v1.rows();
  int hd = mp.v1.cols();
  std::vector<double> dr2(hd);
  for (int t = 0; t < hd; ++t) dr2[t] = dlogit * mp.v3[t];
  if (grads) {
    grads->c3[0] += dlogit;
    for (int t = 0; t < hd; ++t) grads->v3[t] += dlogit * tr.r2[t];
  }
  std::vector<double> dq2(hd);
  for (int t = 0; t < hd; ++t) dq2[t] = tr.q2[t] > 0.0 ? dr2[t] : 0.0;
  std::vector<double> dr1(hd, 0.0);
  for (int i = 0; i < hd; ++i) {
    for (int t = 0; t < hd; ++t) {
      if (grads) grads->v2(i, t) += tr.r1[i] * dq2[t];
      dr1[i] += mp.v2(i, t) * dq2[t];
    }
  }
  if (grads) {
    for (int t = 0; t < hd; ++t) grads->c2[t] += dq2[t];
  }
  std::vector<double> dq1(hd);
  for (int t = 0; t < hd; ++t) dq1[t] = tr.q1[t] > 0.0 ? dr1[t] : 0.0;
  if (grads) {
    for (int t = 0; t < hd; ++t) grads->c1[t] += dq1[t];
    for (int i = 0; i < latent; ++i) {
      for (int t = 0; t < hd; ++t) grads->v1(i, t) += z[i] * dq1[t];
    }
  }
  if (dz) {
    dz->assign(latent, 0.0);
    for (int i = 0; i < latent; ++i) {
      for (int t = 0; t < hd; ++t) (*dz)[i] += mp.v1(i, t) * dq1[t];
    }
  }
}

struct ReconTerms {
  double mse = 0.0;
  double bce = 0.0;
  double total(const TrainConfig& cfg) const {
    return cfg.recon_x_weight * mse + cfg.recon_a_weight * bce;
  }
};

ReconTerms recon_terms(const Prepared& p, const Matrix& xh, const Matrix& sym) {
  ReconTerms t;
  int n = p.n;
  int k = p.x.cols();
  for (int i = 0; i < n; ++i) {
    for (int c = 0; c < k; ++c) {
      double d = xh(i, c) - p.x(i, c);
      t.mse += d * d;
    }
  }
  t.mse /= static_cast<double>(n) * k;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      t.bce += bce_with_logit(sym(i, j), p.s_bin[static_cast<size_t>(i) * n + j]);
    }
  }
  t.bce /= static_cast<double>(n) * n;
  return t;
}

// Upstream gradients of the masked reconstruction loss, scaled by `weight`
// (1/batch for batch means).
void recon_seed_grads(const Prepared& p, const DecTrace& tr, const TrainConfig& cfg,
                      double weight, Matrix& dxh, Matrix& dsym) {
  int n = p.n;
  int k = p.x.cols();
  dxh = Matrix(n, k);
  double cx = weight * cfg.recon_x_weight * 2.0 / (static_cast<double>(n) * k);
  for (int i = 0; i < n; ++i) {
    for (int c = 0; c < k; ++c) dxh(i, c) = cx * (tr.xh(i, c) - p.x(i, c));
  }
  dsym = Matrix(n, n);
  double ca = weight * cfg.recon_a_weight / (static_cast<double>(n) * n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      dsym(i, j) = ca * (sigmoid(tr.sym(i, j)) - p.s_bin[static_cast<size_t>(i) * n + j]);
    }
  }
}

double clamp_score(double s) {
  return std::min(std::max(s, kScoreClamp), 1.0 - kScoreClamp);
}

}  // namespace

// --- public forward ops -------------------------------------------------------

Matrix gcn_layer_forward(const Matrix& h, const Matrix& a_hat, const Matrix& w, Activation act) {
  if (a_hat.rows() != a_hat.cols() || a_hat.cols() != h.rows()) {
    throw DimensionError("gcn_layer_forward: A_hat " + std::to_string(a_hat.rows()) + "x" +
                         std::to_string(a_hat.cols()) + " vs H rows " + std::to_string(h.rows()));
  }
  Matrix hw;
  matmul(h, w, hw);
  Matrix out;
  matmul(a_hat, hw, out);
  if (act == Activation::ReLU) {
    for (size_t i = 0; i < out.size(); ++i) out.data()[i] = std::max(out.data()[i], 0.0);
  }
  return out;
}

Matrix gcn_layer_forward(const Matrix& h, const SparseMatrix& a_hat, const Matrix& w,
                         Activation act) {
  if (a_hat.rows != a_hat.cols || a_hat.cols != h.rows()) {
    throw DimensionError("gcn_layer_forward: sparse A_hat shape mismatch");
  }
  Matrix hw;
  matmul(h, w, hw);
  Matrix out;
  spmm(a_hat, hw, out);
  if (act == Activation::ReLU) {
    for (size_t i = 0; i < out.size(); ++i) out.data()[i] = std::max(out.data()[i], 0.0);
  }
  return out;
}

std::vector<double> encode(const SemanticGraph& graph, const ModelParams& params,
                           const GraphSchema& schema) {
  Prepared p = prepare(graph, schema);
  return encoder_forward(p, params).z;
}

Reconstruction decode(const std::vector<double>& z, const ModelParams& params,
                      const GraphSchema& schema) {
  DecTrace tr = decoder_forward(z, params, schema, schema.n_max);
  Reconstruction r;
  r.x_hat = std::move(tr.xh);
  r.a_logits = std::move(tr.sym);
  return r;
}

double discriminate(const std::vector<double>& z, const ModelParams& params) {
  return disc_forward(z, params).score;
}

double reconstruction_loss(const SemanticGraph& graph, const Reconstruction& recon,
                           const TrainConfig& cfg) {
  int n = graph.n();
  if (graph.X.rows() != n) {
    throw DimensionError("reconstruction_loss: graph features not computed");
  }
  if (recon.x_hat.rows() < n || recon.x_hat.cols() != graph.X.cols() ||
      recon.a_logits.rows() < n || recon.a_logits.cols() < n) {
    throw DimensionError("reconstruction_loss: reconstruction smaller than graph");
  }
  // Only real node rows and pairs count; padded slots cannot influence the
  // value.
  int k = graph.X.cols();
  double mse = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int c = 0; c < k; ++c) {
      double d = recon.x_hat(i, c) - graph.X(i, c);
      mse += d * d;
    }
  }
  mse /= static_cast<double>(n) * k;
  IntMatrix s = symmetrized_binary(graph.A);
  double bce = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) bce += bce_with_logit(recon.a_logits(i, j), s(i, j));
  }
  bce /= static_cast<double>(n) * n;
  return cfg.recon_x_weight * mse + cfg.recon_a_weight * bce;
}

double discriminator_loss(const std::vector<double>& z_prior, const std::vector<double>& z_enc,
                          const ModelParams& params, const CcmSpec& ccm) {
  double sp = clamp_score(disc_forward(z_prior, params).score);
  double se = clamp_score(disc_forward(z_enc, params).score);
  double mu = membership(z_prior, ccm);
  return -mu * std::log(sp) - std::log(1.0 - se);
}

double encoder_adversarial_loss(const std::vector<double>& z_enc, const ModelParams& params) {
  double se = clamp_score(disc_forward(z_enc, params).score);
  return -std::log(se);
}

// --- trainer -------------------------------------------------------------------


Trainer::Trainer(GraphSchema schema, CcmSpec ccm, TrainConfig cfg)
    : schema_(std::move(schema)), ccm_(std::move(ccm)), cfg_(std::move(cfg)), rng_(cfg_.seed) {
  schema_.validate();
  ccm_.validate();
  cfg_.validate();
  Rng init_rng = rng_.fork(0x1217);
  params_ = init_params(schema_, ccm_, cfg_, init_rng);
  adam_recon_.lr = cfg_.lr_recon;
  adam_disc_.lr = cfg_.lr_disc;
  adam_enc_.lr = cfg_.lr_enc;
}

void Trainer::adam_step(AdamState& st, ParamGroup group, const ModelParams& grads) {
  auto pb = params_.blocks(group);
  auto gb = const_cast<ModelParams&>(grads).blocks(group);
  if (st.m.empty()) {
    st.m.resize(pb.size());
    st.v.resize(pb.size());
    for (size_t b = 0; b < pb.size(); ++b) {
      st.m[b].assign(pb[b].size, 0.0);
      st.v[b].assign(pb[b].size, 0.0);
    }
  }
  ++st.t;
  const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  double bc1 = 1.0 - std::pow(b1, static_cast<double>(st.t));
  double bc2 = 1.0 - std::pow(b2, static_cast<double>(st.t));
  for (size_t b = 0; b < pb.size(); ++b) {
    double* p = pb[b].data;
    const double* g = gb[b].data;
    double* m = st.m[b].data();
    double* v = st.v[b].data();
    size_t n = pb[b].size;
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < static_cast<long long>(n); ++i) {
      m[i] = b1 * m[i] + (1.0 - b1) * g[i];
      v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
      double mhat = m[i] / bc1;
      double vhat = v[i] / bc2;
      p[i] -= st.lr * mhat / (std::sqrt(vhat) + eps);
    }
  }
}

PhaseLosses Trainer::train_step(const std::vector<const SemanticGraph*>& batch) {
  if (batch.empty()) throw UsageError("train_step: empty batch");
  std::vector<Prepared> prepared;
  prepared.reserve(batch.size());
  for (const auto* g : batch) prepared.push_back(prepare(*g, schema_));

  PhaseLosses losses;
  double inv_b = 1.0 / static_cast<double>(batch.size());
  ModelParams grads = make_params(schema_, ccm_, cfg_);

  auto check_finite = [&](double loss, const char* phase, size_t index) {
    if (!std::isfinite(loss)) {
      throw DataError("non-finite loss: epoch " + std::to_string(epoch_counter_) + ", phase " +
                      phase + ", batch index " + std::to_string(index));
    }
  };

  // Phase 1: reconstruction updates encoder and decoder together.
  std::vector<double> dz;
  for (size_t b = 0; b < batch.size(); ++b) {
    const Prepared& p = prepared[b];
    EncTrace enc = encoder_forward(p, params_);
    DecTrace dec = decoder_forward(enc.z, params_, schema_, p.n);
    double loss = recon_terms(p, dec.xh, dec.sym).total(cfg_);
    check_finite(loss, "reconstruction", b);
    losses.recon += loss * inv_b;
    Matrix dxh, dsym;
    recon_seed_grads(p, dec, cfg_, inv_b, dxh, dsym);
    decoder_backward(enc.z, params_, schema_, dec, dxh, dsym, grads, dz);
    encoder_backward(p, params_, enc, dz, grads);
  }
  adam_step(adam_recon_, ParamGroup::PhiTheta, grads);

  if (cfg_.baseline_mode) {
    losses.disc = std::numeric_limits<double>::quiet_NaN();
    losses.enc = std::numeric_limits<double>::quiet_NaN();
    ++step_count_;
    return losses;
  }

  // Phase 2: discriminator learns to tell prior samples from encodings.
  grads.zero();
  auto priors = sample_prior(ccm_, static_cast<int>(batch.size()), rng_);
  for (size_t b = 0; b < batch.size(); ++b) {
    const Prepared& p = prepared[b];
    std::vector<double> z_enc = encoder_forward(p, params_).z;
    DiscTrace tp = disc_forward(priors[b], params_);
    DiscTrace te = disc_forward(z_enc, params_);
    double sp = clamp_score(tp.score);
    double se = clamp_score(te.score);
    double mu = membership(priors[b], ccm_);
    double loss = -mu * std::log(sp) - std::log(1.0 - se);
    check_finite(loss, "discriminator", b);
    losses.disc += loss * inv_b;
    // The clamp guards the log evaluation only; gradients follow the exact
    // losses so adversarial pressure never switches off at saturation.
    disc_backward(priors[b], params_, tp, -mu * (1.0 - tp.score) * inv_b, &grads, nullptr);
    disc_backward(z_enc, params_, te, te.score * inv_b, &grads, nullptr);
  }
  adam_step(adam_disc_, ParamGroup::Lambda, grads);

  // Phase 3: encoder chases the (now frozen) discriminator.
  grads.zero();
  for (size_t b = 0; b < batch.size(); ++b) {
    const Prepared& p = prepared[b];
    EncTrace enc = encoder_forward(p, params_);
    DiscTrace te = disc_forward(enc.z, params_);
    double se = clamp_score(te.score);
    double loss = -std::log(se);
    check_finite(loss, "encoder-adversarial", b);
    losses.enc += loss * inv_b;
    disc_backward(enc.z, params_, te, (te.score - 1.0) * inv_b, nullptr, &dz);
    encoder_backward(p, params_, enc, dz, grads);
  }
  adam_step(adam_enc_, ParamGroup::Phi, grads);

  ++step_count_;
  return losses;
}

PhaseLosses Trainer::evaluate(const std::vector<const SemanticGraph*>& graphs) {
  if (graphs.empty()) throw UsageError("evaluate: no graphs");
  PhaseLosses losses;
  Rng eval_rng = rng_.fork(0xE7A1);
  auto priors = sample_prior(ccm_, static_cast<int>(graphs.size()), eval_rng);
  double inv = 1.0 / static_cast<double>(graphs.size());
  for (size_t i = 0; i < graphs.size(); ++i) {
    Prepared p = prepare(*graphs[i], schema_);
    EncTrace enc = encoder_forward(p, params_);
    DecTrace dec = decoder_forward(enc.z, params_, schema_, p.n);
    losses.recon += recon_terms(p, dec.xh, dec.sym).total(cfg_) * inv;
    if (!cfg_.baseline_mode) {
      losses.disc += discriminator_loss(priors[i], enc.z, params_, ccm_) * inv;
      losses.enc += encoder_adversarial_loss(enc.z, params_) * inv;
    }
  }
  if (cfg_.baseline_mode) {
    losses.disc = std::numeric_limits<double>::quiet_NaN();
    losses.enc = std::numeric_limits<double>::quiet_NaN();
  }
  return losses;
}

double Trainer::mean_encoder_deviation(const std::vector<const SemanticGraph*>& graphs) {
  std::vector<std::vector<double>> zs;
  zs.reserve(graphs.size());
  for (const auto* g : graphs) zs.push_back(encode(*g, params_, schema_));
  return manifold_deviation(zs, ccm_).mean;
}

std::vector<EpochLog> Trainer::run(const std::vector<const SemanticGraph*>& graphs,
                                   const std::function<void(const EpochLog&)>& on_epoch) {
  if (graphs.empty()) throw UsageError("train: no graphs");
  std::vector<EpochLog> log;
  auto emit = [&](EpochLog e) {
    if (on_epoch) on_epoch(e);
    log.push_back(std::move(e));
  };

  epoch_counter_ = 0;
  EpochLog first;
  first.epoch = 0;
  first.losses = evaluate(graphs);
  first.mean_deviation = mean_encoder_deviation(graphs);
  emit(first);

  std::vector<size_t> order(graphs.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 1; epoch <= cfg_.epochs; ++epoch) {
    epoch_counter_ = epoch;
    // Fisher-Yates with the trainer stream keeps the whole loop a pure
    // function of (data, config, seed).
    for (size_t i = order.size(); i > 1; --i) {
      size_t j = rng_.uniform_index(i);
      std::swap(order[i - 1], order[j]);
    }
    EpochLog e;
    e.epoch = epoch;
    int batches = 0;
    for (size_t start = 0; start < order.size(); start += cfg_.batch_size) {
      std::vector<const SemanticGraph*> batch;
      for (size_t i = start; i < std::min(order.size(), start + cfg_.batch_size); ++i) {
        batch.push_back(graphs[order[i]]);
      }
      PhaseLosses pl = train_step(batch);
      e.losses.recon += pl.recon;
      e.losses.disc += pl.disc;
      e.losses.enc += pl.enc;
      ++batches;
    }
    e.losses.recon /= batches;
    e.losses.disc /= batches;
    e.losses.enc /= batches;
    e.mean_deviation = mean_encoder_deviation(graphs);
    emit(e);
  }
  return log;
}

std::vector<LatentPoint> embed_dataset(const std::vector<const SemanticGraph*>& graphs,
                                       const ModelParams& params, const GraphSchema& schema) {
  std::vector<const SemanticGraph*> sorted = graphs;
  std::sort(sorted.begin(), sorted.end(), [](const SemanticGraph* a, const SemanticGraph* b) {
    if (a->user_id != b->user_id) return a->user_id < b->user_id;
    return a->date < b->date;
  });
  std::vector<LatentPoint> out;
  out.reserve(sorted.size());
  for (const auto* g : sorted) {
    LatentPoint pt;
    pt.z = encode(*g, params, schema);
    pt.user_id = g->user_id;
    pt.date = g->date;
    out.push_back(std::move(pt));
  }
  return out;
}

// --- gradient checking ----------------------------------------------------------

const char* loss_kind_name(LossKind k) {
  switch (k) {
    case LossKind::Reconstruction: return "reconstruction";
    case LossKind::Discriminator: return "discriminator";
    case LossKind::EncoderAdversarial: return "encoder-adversarial";
  }
  return "?";
}

ModelParams analytic_grads(LossKind kind, const ModelParams& params, const SemanticGraph& graph,
                           const GraphSchema& schema, const CcmSpec& ccm, const TrainConfig& cfg,
                           const std::vector<double>& z_prior) {
  Prepared p = prepare(graph, schema);
  ModelParams grads = make_params(schema, ccm, cfg);
  std::vector<double> dz;
  switch (kind) {
    case LossKind::Reconstruction: {
      EncTrace enc = encoder_forward(p, params);
      DecTrace dec = decoder_forward(enc.z, params, schema, p.n);
      Matrix dxh, dsym;
      recon_seed_grads(p, dec, cfg, 1.0, dxh, dsym);
      decoder_backward(enc.z, params, schema, dec, dxh, dsym, grads, dz);
      encoder_backward(p, params, enc, dz, grads);
      break;
    }
    case LossKind::Discriminator: {
      std::vector<double> z_enc = encoder_forward(p, params).z;
      DiscTrace tp = disc_forward(z_prior, params);
      DiscTrace te = disc_forward(z_enc, params);
      double mu = membership(z_prior, ccm);
      disc_backward(z_prior, params, tp, -mu * (1.0 - tp.score), &grads, nullptr);
      disc_backward(z_enc, params, te, te.score, &grads, nullptr);
      break;
    }
    case LossKind::EncoderAdversarial: {
      EncTrace enc = encoder_forward(p, params);
      DiscTrace te = disc_forward(enc.z, params);
      disc_backward(enc.z, params, te, te.score - 1.0, nullptr, &dz);
      encoder_backward(p, params, enc, dz, grads);
      break;
    }
  }
  return grads;
}

double fd_block_error(const std::function<double(const ModelParams&)>& loss, ModelParams& params,
                      const BlockRef& block, const BlockRef& grad_block,
                      const GradCheckOptions& opts) {
  double worst = 0.0;
  for (size_t i = 0; i < block.size; ++i) {
    double saved = block.data[i];
    block.data[i] = saved + opts.fd_step;
    double up = loss(params);
    block.data[i] = saved - opts.fd_step;
    double down = loss(params);
    block.data[i] = saved;
    double fd = (up - down) / (2.0 * opts.fd_step);
    double analytic = grad_block.data[i];
    double denom = std::max({std::fabs(analytic), std::fabs(fd), 1e-8});
    double err = std::fabs(analytic - fd) / denom;
    if (err > worst) worst = err;
  }
  return worst;
}

GradCheckReport grad_check(const ModelParams& params, const SemanticGraph& graph,
                           const GraphSchema& schema, const CcmSpec& ccm, const TrainConfig& cfg,
                           const GradCheckOptions& opts) {
  ModelParams work = params;
  Prepared p = prepare(graph, schema);
  Rng prior_rng(cfg.seed ^ 0x9e37);
  std::vector<double> z_prior = sample_prior(ccm, 1, prior_rng)[0];

  GradCheckReport report;
  struct Case {
    LossKind kind;
    ParamGroup group;
  };
  const Case cases[] = {
      {LossKind::Reconstruction, ParamGroup::PhiTheta},
      {LossKind::Discriminator, ParamGroup::Lambda},
      {LossKind::EncoderAdversarial, ParamGroup::Phi},
  };
  for (const Case& c : cases) {
    ModelParams grads = analytic_grads(c.kind, work, graph, schema, ccm, cfg, z_prior);
    auto loss_fn = [&](const ModelParams& mp) -> double {
      switch (c.kind) {
        case LossKind::Reconstruction: {
          Prepared pp = prepare(graph, schema);
          EncTrace enc = encoder_forward(pp, mp);
          DecTrace dec = decoder_forward(enc.z, mp, schema, pp.n);
          return recon_terms(pp, dec.xh, dec.sym).total(cfg);
        }
        case LossKind::Discriminator: {
          Prepared pp = prepare(graph, schema);
          std::vector<double> z_enc = encoder_forward(pp, mp).z;
          return discriminator_loss(z_prior, z_enc, mp, ccm);
        }
        case LossKind::EncoderAdversarial: {
          Prepared pp = prepare(graph, schema);
          std::vector<double> z_enc = encoder_forward(pp, mp).z;
          return encoder_adversarial_loss(z_enc, mp);
        }
      }
      return 0.0;
    };
    auto pblocks = work.blocks(c.group);
    auto gblocks = grads.blocks(c.group);
    for (size_t b = 0; b < pblocks.size(); ++b) {
      BlockCheck check;
      check.loss = c.kind;
      check.block = pblocks[b].name;
      check.max_rel_err = fd_block_error(loss_fn, work, pblocks[b], gblocks[b], opts);
      if (check.max_rel_err > report.worst) {
        report.worst = check.max_rel_err;
        report.worst_block = std::string(loss_kind_name(c.kind)) + "/" + check.block;
      }
      report.checks.push_back(std::move(check));
    }
  }
  report.passed = report.worst < opts.tolerance;
  if (!report.passed) {
    throw CheckFailed("gradient mismatch in " + report.worst_block + ": relative error " +
                      format_double(report.worst));
  }
  return report;
}

// --- checkpointing ----------------------------------------------------------------

void save_checkpoint(const std::string& prefix, const ModelParams& params,
                     const CheckpointMeta& meta, const std::string& dtype) {
  BlockWriter writer(dtype);
  auto bs = const_cast<ModelParams&>(params).blocks(ParamGroup::All);
  for (const auto& b : bs) {
    writer.add(b.name, std::span<const double>(b.data, b.size), b.shape);
  }
  nlohmann::json manifest;
  manifest["version"] = "ccm-aae-checkpoint-1";
  manifest["config"] = meta.config_hash;
  manifest["seed"] = meta.seed;
  manifest["dtype"] = dtype;
  manifest["graph_schema"] = meta.schema;
  manifest["ccm_spec"] = meta.ccm;
  manifest["train_config"] = meta.cfg;
  manifest["data_file"] = std::filesystem::path(prefix + ".bin").filename().string();
  manifest["blocks"] = writer.manifest();
  write_text_file(prefix + ".json", manifest.dump(2) + "\n");
  write_text_file(prefix + ".bin", writer.bytes());
}

ModelParams load_checkpoint(const std::string& prefix, CheckpointMeta& meta) {
  nlohmann::json manifest = nlohmann::json::parse(read_text_file(prefix + ".json"), nullptr, false);
  if (manifest.is_discarded()) throw DataError("checkpoint manifest is not valid JSON");
  try {
    if (manifest.at("version").get<std::string>() != "ccm-aae-checkpoint-1") {
      throw CompatibilityError("unknown checkpoint version");
    }
    meta.config_hash = manifest.at("config").get<std::string>();
    meta.seed = manifest.at("seed").get<uint64_t>();
    meta.schema = manifest.at("graph_schema").get<GraphSchema>();
    meta.ccm = manifest.at("ccm_spec").get<CcmSpec>();
    meta.cfg = manifest.at("train_config").get<TrainConfig>();
    BlockReader reader(manifest.at("blocks"), read_text_file(prefix + ".bin"));
    ModelParams params = make_params(meta.schema, meta.ccm, meta.cfg);
    for (auto& b : params.blocks(ParamGroup::All)) {
      auto data = reader.read(b.name, b.shape);
      std::copy(data.begin(), data.end(), b.data);
    }
    return params;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("bad checkpoint manifest: ") + e.what());
  }
}

}  // namespace lifegraph
