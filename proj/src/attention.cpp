#include "attention.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace recidx {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

int kernel_index(int input_map, int ky, int kx) { return (input_map * 3 + ky) * 3 + kx; }

void require_shape(const FeatureMap& f, const AttentionParams& p, const char* where) {
  if (f.channels != p.channels || f.height != p.height || f.width != p.width) {
    fail(Err::ShapeMismatch, std::string(where) + ": feature map " +
                                 std::to_string(f.channels) + "x" + std::to_string(f.height) +
                                 "x" + std::to_string(f.width) + " vs params " +
                                 std::to_string(p.channels) + "x" + std::to_string(p.height) +
                                 "x" + std::to_string(p.width));
  }
}

}  // namespace

void AttentionParams::validate() const {
  if (channels < 1 || height < 1 || width < 1 || embed_dim < 1) {
    fail(Err::ConfigError, "AttentionParams: dims must be >= 1");
  }
  if (reduction < 1 || channels % reduction != 0) {
    fail(Err::ConfigError, "AttentionParams: reduction " + std::to_string(reduction) +
                               " must divide channels " + std::to_string(channels));
  }
  const int hidden = channels / reduction;
  if (static_cast<int>(w0.size()) != hidden || static_cast<int>(w1.size()) != hidden) {
    fail(Err::ShapeMismatch, "AttentionParams: channel MLP shapes inconsistent");
  }
  if (static_cast<int>(spatial_kernel.size()) != 2 * 3 * 3) {
    fail(Err::ShapeMismatch, "AttentionParams: spatial kernel must have 2*3*3 weights");
  }
  if (head_w.rows != embed_dim || head_w.cols != channels * height * width ||
      static_cast<int>(head_b.size()) != embed_dim) {
    fail(Err::ShapeMismatch, "AttentionParams: head shapes inconsistent");
  }
}

AttentionParams make_attention_params(int channels, int reduction, int height, int width,
                                      int embed_dim) {
  AttentionParams p;
  p.channels = channels;
  p.reduction = reduction;
  p.height = height;
  p.width = width;
  p.embed_dim = embed_dim;
  const int hidden = reduction >= 1 ? channels / reduction : 0;
  p.w0.assign(static_cast<std::size_t>(hidden), 0.0);
  p.w1.assign(static_cast<std::size_t>(hidden), 0.0);
  p.spatial_kernel.assign(2 * 3 * 3, 0.0);
  p.head_w = Matrix(embed_dim, channels * height * width);
  p.head_b.assign(static_cast<std::size_t>(embed_dim), 0.0);
  p.validate();
  return p;
}

FeatureMap channel_forward(const FeatureMap& f, const AttentionParams& p, ChannelCache& cache) {
  require_shape(f, p, "channel_attention");
  const int c = p.channels;
  const int plane = f.plane();

  cache.input = f;
  cache.avg_desc.assign(static_cast<std::size_t>(c), 0.0);
  cache.max_desc.assign(static_cast<std::size_t>(c), 0.0);
  cache.max_pos.assign(static_cast<std::size_t>(c), 0);
  for (int ch = 0; ch < c; ++ch) {
    const double* plane_ptr = f.values.data() + static_cast<std::size_t>(ch) * plane;
    double sum = 0.0;
    double best = plane_ptr[0];
    int best_at = 0;
    for (int i = 0; i < plane; ++i) {
      sum += plane_ptr[i];
      if (plane_ptr[i] > best) {
        best = plane_ptr[i];
        best_at = i;
      }
    }
    cache.avg_desc[ch] = sum / plane;
    cache.max_desc[ch] = best;
    cache.max_pos[ch] = best_at;
  }

  const int hidden = static_cast<int>(p.w0.size());
  cache.pre_avg.assign(static_cast<std::size_t>(c) * hidden, 0.0);
  cache.pre_max.assign(static_cast<std::size_t>(c) * hidden, 0.0);
  cache.gate.assign(static_cast<std::size_t>(c), 0.0);
  FeatureMap out(f.channels, f.height, f.width);
  for (int ch = 0; ch < c; ++ch) {
    double logit = 0.0;
    for (int k = 0; k < hidden; ++k) {
      const double pa = p.w0[k] * cache.avg_desc[ch];
      const double pm = p.w0[k] * cache.max_desc[ch];
      cache.pre_avg[static_cast<std::size_t>(ch) * hidden + k] = pa;
      cache.pre_max[static_cast<std::size_t>(ch) * hidden + k] = pm;
      logit += p.w1[k] * (std::max(0.0, pa) + std::max(0.0, pm));
    }
    const double g = sigmoid(logit);
    cache.gate[ch] = g;
    const double* in_ptr = f.values.data() + static_cast<std::size_t>(ch) * plane;
    double* out_ptr = out.values.data() + static_cast<std::size_t>(ch) * plane;
    for (int i = 0; i < plane; ++i) out_ptr[i] = in_ptr[i] * g;
  }
  return out;
}

FeatureMap spatial_forward(const FeatureMap& f, const AttentionParams& p, SpatialCache& cache) {
  require_shape(f, p, "spatial_attention");
  const int c = p.channels;
  const int h = p.height;
  const int w = p.width;
  const int plane = f.plane();

  cache.input = f;
  cache.pooled_mean.assign(static_cast<std::size_t>(plane), 0.0);
  cache.pooled_max.assign(static_cast<std::size_t>(plane), 0.0);
  cache.max_chan.assign(static_cast<std::size_t>(plane), 0);
  for (int i = 0; i < plane; ++i) {
    double sum = 0.0;
    double best = f.values[i];
    int best_ch = 0;
    for (int ch = 0; ch < c; ++ch) {
      const double x = f.values[static_cast<std::size_t>(ch) * plane + i];
      sum += x;
      if (x > best) {
        best = x;
        best_ch = ch;
      }
    }
    cache.pooled_mean[i] = sum / c;
    cache.pooled_max[i] = best;
    cache.max_chan[i] = best_ch;
  }

  cache.gate.assign(static_cast<std::size_t>(plane), 0.0);
  FeatureMap out(c, h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double logit = 0.0;
      for (int ky = 0; ky < 3; ++ky) {
        for (int kx = 0; kx < 3; ++kx) {
          // replicate padding keeps constant maps gating uniformly
          const int sy = std::clamp(y + ky - 1, 0, h - 1);
          const int sx = std::clamp(x + kx - 1, 0, w - 1);
          const int at = sy * w + sx;
          logit += p.spatial_kernel[kernel_index(0, ky, kx)] * cache.pooled_mean[at];
          logit += p.spatial_kernel[kernel_index(1, ky, kx)] * cache.pooled_max[at];
        }
      }
      const double g = sigmoid(logit);
      cache.gate[y * w + x] = g;
      for (int ch = 0; ch < c; ++ch) out.at(ch, y, x) = f.at(ch, y, x) * g;
    }
  }
  return out;
}

FeatureMap channel_backward(const AttentionParams& p, const ChannelCache& cache,
                            const FeatureMap& grad_output, AttentionGrads& grads) {
  const int c = p.channels;
  const int plane = cache.input.plane();
  FeatureMap grad_in(cache.input.channels, cache.input.height, cache.input.width);

  Vec grad_gate(static_cast<std::size_t>(c), 0.0);
  for (int ch = 0; ch < c; ++ch) {
    const double g = cache.gate[ch];
    const double* go = grad_output.values.data() + static_cast<std::size_t>(ch) * plane;
    const double* in = cache.input.values.data() + static_cast<std::size_t>(ch) * plane;
    double* gi = grad_in.values.data() + static_cast<std::size_t>(ch) * plane;
    double acc = 0.0;
    for (int i = 0; i < plane; ++i) {
      gi[i] += go[i] * g;
      acc += go[i] * in[i];
    }
    grad_gate[ch] = acc;
  }

  const int hidden = static_cast<int>(p.w0.size());
  Vec grad_avg_desc(static_cast<std::size_t>(c), 0.0);
  Vec grad_max_desc(static_cast<std::size_t>(c), 0.0);
  for (int ch = 0; ch < c; ++ch) {
    const double g = cache.gate[ch];
    const double grad_logit = grad_gate[ch] * g * (1.0 - g);
    for (int k = 0; k < hidden; ++k) {
      const double pa = cache.pre_avg[static_cast<std::size_t>(ch) * hidden + k];
      const double pm = cache.pre_max[static_cast<std::size_t>(ch) * hidden + k];
      grads.w1[k] += grad_logit * (std::max(0.0, pa) + std::max(0.0, pm));
      if (pa > 0.0) {
        grads.w0[k] += grad_logit * p.w1[k] * cache.avg_desc[ch];
        grad_avg_desc[ch] += grad_logit * p.w1[k] * p.w0[k];
      }
      if (pm > 0.0) {
        grads.w0[k] += grad_logit * p.w1[k] * cache.max_desc[ch];
        grad_max_desc[ch] += grad_logit * p.w1[k] * p.w0[k];
      }
    }
  }

  for (int ch = 0; ch < c; ++ch) {
    double* gi = grad_in.values.data() + static_cast<std::size_t>(ch) * plane;
    const double per_cell = grad_avg_desc[ch] / plane;
    for (int i = 0; i < plane; ++i) gi[i] += per_cell;
    gi[cache.max_pos[ch]] += grad_max_desc[ch];
  }
  return grad_in;
}

FeatureMap spatial_backward(const AttentionParams& p, const SpatialCache& cache,
                            const FeatureMap& grad_output, AttentionGrads& grads) {
  const int c = p.channels;
  const int h = p.height;
  const int w = p.width;
  const int plane = h * w;
  FeatureMap grad_in(c, h, w);

  Vec grad_gate(static_cast<std::size_t>(plane), 0.0);
  for (int i = 0; i < plane; ++i) {
    const double g = cache.gate[i];
    double acc = 0.0;
    for (int ch = 0; ch < c; ++ch) {
      const std::size_t at = static_cast<std::size_t>(ch) * plane + i;
      grad_in.values[at] += grad_output.values[at] * g;
      acc += grad_output.values[at] * cache.input.values[at];
    }
    grad_gate[i] = acc * g * (1.0 - g);  // through the sigmoid
  }

  Vec grad_pooled_mean(static_cast<std::size_t>(plane), 0.0);
  Vec grad_pooled_max(static_cast<std::size_t>(plane), 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double gl = grad_gate[y * w + x];
      for (int ky = 0; ky < 3; ++ky) {
        for (int kx = 0; kx < 3; ++kx) {
          const int sy = std::clamp(y + ky - 1, 0, h - 1);
          const int sx = std::clamp(x + kx - 1, 0, w - 1);
          const int at = sy * w + sx;
          grads.spatial_kernel[kernel_index(0, ky, kx)] += gl * cache.pooled_mean[at];
          grads.spatial_kernel[kernel_index(1, ky, kx)] += gl * cache.pooled_max[at];
          grad_pooled_mean[at] += gl * p.spatial_kernel[kernel_index(0, ky, kx)];
          grad_pooled_max[at] += gl * p.spatial_kernel[kernel_index(1, ky, kx)];
        }
      }
    }
  }

  for (int i = 0; i < plane; ++i) {
    const double per_channel = grad_pooled_mean[i] / c;
    for (int ch = 0; ch < c; ++ch) {
      grad_in.values[static_cast<std::size_t>(ch) * plane + i] += per_channel;
    }
    grad_in.values[static_cast<std::size_t>(cache.max_chan[i]) * plane + i] +=
        grad_pooled_max[i];
  }
  return grad_in;
}

FeatureMap channel_attention(const FeatureMap& f, const AttentionParams& p) {
  ChannelCache cache;
  return channel_forward(f, p, cache);
}

FeatureMap spatial_attention(const FeatureMap& f, const AttentionParams& p) {
  SpatialCache cache;
  return spatial_forward(f, p, cache);
}

AttentionCache attention_forward(const FeatureMap& f, const AttentionParams& p) {
  AttentionCache cache;
  const FeatureMap after_channel = channel_forward(f, p, cache.channel);
  const FeatureMap after_spatial = spatial_forward(after_channel, p, cache.spatial);
  cache.flat = after_spatial.values;
  cache.v_attn = matvec(p.head_w, cache.flat);
  axpy(cache.v_attn, 1.0, p.head_b);
  return cache;
}

Vec attended_embedding(const FeatureMap& f, const AttentionParams& p) {
  return attention_forward(f, p).v_attn;
}

AttentionGrads make_attention_grads(const AttentionParams& p) {
  AttentionGrads g;
  g.w0.assign(p.w0.size(), 0.0);
  g.w1.assign(p.w1.size(), 0.0);
  g.spatial_kernel.assign(p.spatial_kernel.size(), 0.0);
  g.head_w = Matrix(p.head_w.rows, p.head_w.cols);
  g.head_b.assign(p.head_b.size(), 0.0);
  return g;
}

FeatureMap attention_backward(const AttentionParams& p, const AttentionCache& cache,
                              const Vec& grad_v_attn, AttentionGrads& grads) {
  if (grad_v_attn.size() != static_cast<std::size_t>(p.embed_dim)) {
    fail(Err::DimensionMismatch, "attention_backward: grad dim " +
                                     std::to_string(grad_v_attn.size()));
  }
  add_outer(grads.head_w, grad_v_attn, cache.flat, 1.0);
  axpy(grads.head_b, 1.0, grad_v_attn);

  FeatureMap grad_after_spatial(p.channels, p.height, p.width);
  grad_after_spatial.values = matvec_t(p.head_w, grad_v_attn);

  const FeatureMap grad_after_channel =
      spatial_backward(p, cache.spatial, grad_after_spatial, grads);
  return channel_backward(p, cache.channel, grad_after_channel, grads);
}

}  // namespace recidx
