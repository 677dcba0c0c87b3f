#include "model.hpp"

#include <cmath>

#include "rng.hpp"

namespace recidx {

namespace {

void gaussian_init(DetRng& rng, Matrix& m, double scale) {
  for (double& x : m.values) x = scale * rng.gaussian();
}

}  // namespace

void ModelDims::validate() const {
  if (input_dim < 1 || hidden_dim < 1 || channels < 1 || feat_h < 1 || feat_w < 1 ||
      embed_dim < 1) {
    fail(Err::ConfigError, "ModelDims: dims must be >= 1");
  }
  if (num_classes < 2) fail(Err::ConfigError, "ModelDims: num_classes must be >= 2");
  if (reduction < 1 || channels % reduction != 0) {
    fail(Err::ConfigError, "ModelDims: reduction must divide channels");
  }
}

ModelState init_model(const ModelDims& dims, std::uint64_t seed) {
  dims.validate();
  DetRng rng(derive_seed(seed, 42, 0));

  ModelState m;
  m.dims = dims;

  m.encoder.w_hidden = Matrix(dims.hidden_dim, dims.input_dim);
  m.encoder.b_hidden.assign(static_cast<std::size_t>(dims.hidden_dim), 0.0);
  m.encoder.w_feat = Matrix(dims.feat_total(), dims.hidden_dim);
  m.encoder.b_feat.assign(static_cast<std::size_t>(dims.feat_total()), 0.0);
  m.encoder.w_embed = Matrix(dims.embed_dim, dims.hidden_dim);
  m.encoder.b_embed.assign(static_cast<std::size_t>(dims.embed_dim), 0.0);
  gaussian_init(rng, m.encoder.w_hidden, 1.0 / std::sqrt(dims.input_dim));
  gaussian_init(rng, m.encoder.w_feat, 1.0 / std::sqrt(dims.hidden_dim));
  gaussian_init(rng, m.encoder.w_embed, 1.0 / std::sqrt(dims.hidden_dim));

  m.prototypes.num_classes = dims.num_classes;
  m.prototypes.dim = dims.embed_dim;
  m.prototypes.prototypes.resize(static_cast<std::size_t>(dims.num_classes));
  for (Vec& w : m.prototypes.prototypes) {
    w.assign(static_cast<std::size_t>(dims.embed_dim), 0.0);
    for (;;) {
      for (double& x : w) x = rng.gaussian();
      if (norm(w) > 1e-6) break;
    }
    w = l2_normalize(w);
  }

  m.attention = make_attention_params(dims.channels, dims.reduction, dims.feat_h, dims.feat_w,
                                      dims.embed_dim);
  const int hidden_c = dims.channels / dims.reduction;
  for (double& x : m.attention.w0) x = rng.gaussian();  // scalar input: fan-in 1
  for (double& x : m.attention.w1) x = rng.gaussian() / std::sqrt(hidden_c);
  for (double& x : m.attention.spatial_kernel) x = rng.gaussian() / 3.0;
  gaussian_init(rng, m.attention.head_w, 1.0 / std::sqrt(dims.feat_total()));

  m.reg_w.assign(static_cast<std::size_t>(dims.feat_total()), 0.0);
  for (double& x : m.reg_w) x = rng.gaussian() / std::sqrt(dims.feat_total());
  m.reg_b = 0.0;

  m.ui.center.assign(static_cast<std::size_t>(dims.embed_dim), 0.0);
  m.ui.center[0] = 1.0;  // placeholder until the first fit
  m.ui_valid = false;
  return m;
}

EncoderCache encoder_forward(const EncoderParams& p, const Vec& x) {
  EncoderCache c;
  c.input = x;
  c.hidden_pre = matvec(p.w_hidden, x);
  axpy(c.hidden_pre, 1.0, p.b_hidden);
  c.hidden = c.hidden_pre;
  for (double& v : c.hidden) v = std::tanh(v);
  c.feat_flat = matvec(p.w_feat, c.hidden);
  axpy(c.feat_flat, 1.0, p.b_feat);
  c.embed = matvec(p.w_embed, c.hidden);
  axpy(c.embed, 1.0, p.b_embed);
  return c;
}

EncoderGrads make_encoder_grads(const EncoderParams& p) {
  EncoderGrads g;
  g.w_hidden = Matrix(p.w_hidden.rows, p.w_hidden.cols);
  g.b_hidden.assign(p.b_hidden.size(), 0.0);
  g.w_feat = Matrix(p.w_feat.rows, p.w_feat.cols);
  g.b_feat.assign(p.b_feat.size(), 0.0);
  g.w_embed = Matrix(p.w_embed.rows, p.w_embed.cols);
  g.b_embed.assign(p.b_embed.size(), 0.0);
  return g;
}

void encoder_backward(const EncoderParams& p, const EncoderCache& cache,
                      const Vec& grad_feat_flat, const Vec& grad_embed, EncoderGrads& grads) {
  Vec grad_hidden(cache.hidden.size(), 0.0);
  if (!grad_feat_flat.empty()) {
    add_outer(grads.w_feat, grad_feat_flat, cache.hidden, 1.0);
    axpy(grads.b_feat, 1.0, grad_feat_flat);
    axpy(grad_hidden, 1.0, matvec_t(p.w_feat, grad_feat_flat));
  }
  if (!grad_embed.empty()) {
    add_outer(grads.w_embed, grad_embed, cache.hidden, 1.0);
    axpy(grads.b_embed, 1.0, grad_embed);
    axpy(grad_hidden, 1.0, matvec_t(p.w_embed, grad_embed));
  }
  for (std::size_t i = 0; i < grad_hidden.size(); ++i) {
    grad_hidden[i] *= 1.0 - cache.hidden[i] * cache.hidden[i];  // tanh'
  }
  add_outer(grads.w_hidden, grad_hidden, cache.input, 1.0);
  axpy(grads.b_hidden, 1.0, grad_hidden);
}

void append_ptrs(std::vector<double*>& out, Vec& v) {
  for (double& x : v) out.push_back(&x);
}

void append_ptrs(std::vector<double*>& out, Matrix& m) {
  for (double& x : m.values) out.push_back(&x);
}

std::vector<double*> encoder_ptrs(EncoderParams& p) {
  std::vector<double*> out;
  append_ptrs(out, p.w_hidden);
  append_ptrs(out, p.b_hidden);
  append_ptrs(out, p.w_feat);
  append_ptrs(out, p.b_feat);
  append_ptrs(out, p.w_embed);
  append_ptrs(out, p.b_embed);
  return out;
}

std::vector<double*> encoder_ptrs(EncoderGrads& g) {
  std::vector<double*> out;
  append_ptrs(out, g.w_hidden);
  append_ptrs(out, g.b_hidden);
  append_ptrs(out, g.w_feat);
  append_ptrs(out, g.b_feat);
  append_ptrs(out, g.w_embed);
  append_ptrs(out, g.b_embed);
  return out;
}

std::vector<double*> attention_ptrs(AttentionParams& p) {
  std::vector<double*> out;
  append_ptrs(out, p.w0);
  append_ptrs(out, p.w1);
  append_ptrs(out, p.spatial_kernel);
  append_ptrs(out, p.head_w);
  append_ptrs(out, p.head_b);
  return out;
}

std::vector<double*> attention_ptrs(AttentionGrads& g) {
  std::vector<double*> out;
  append_ptrs(out, g.w0);
  append_ptrs(out, g.w1);
  append_ptrs(out, g.spatial_kernel);
  append_ptrs(out, g.head_w);
  append_ptrs(out, g.head_b);
  return out;
}

FeatureMap reshape_to_map(const Vec& flat, int channels, int height, int width) {
  if (static_cast<int>(flat.size()) != channels * height * width) {
    fail(Err::ShapeMismatch, "reshape_to_map: " + std::to_string(flat.size()) +
                                 " values for " + std::to_string(channels * height * width));
  }
  FeatureMap f(channels, height, width);
  f.values = flat;
  return f;
}

}  // namespace recidx
