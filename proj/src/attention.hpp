#pragma once

#include <vector>

#include "tensor.hpp"

namespace recidx {

struct FeatureMap {
  int channels = 0;
  int height = 0;
  int width = 0;
  Vec values;  // channel-major: [ch][y][x]

  FeatureMap() = default;
  FeatureMap(int c, int h, int w)
      : channels(c), height(h), width(w), values(static_cast<std::size_t>(c) * h * w, 0.0) {}

  double& at(int ch, int y, int x) {
    return values[(static_cast<std::size_t>(ch) * height + y) * width + x];
  }
  double at(int ch, int y, int x) const {
    return values[(static_cast<std::size_t>(ch) * height + y) * width + x];
  }
  int plane() const { return height * width; }
  int total() const { return channels * height * width; }
};

// Channel gate: sigmoid(w1.relu(w0*avg_c) + w1.relu(w0*max_c)) with the same
// scalar two-layer map applied to every channel's pooled descriptors, no
// biases; identical channels therefore receive identical gates. Spatial gate:
// sigmoid(3x3 replicate-padded conv over the channelwise mean/max maps), so a
// spatially constant map gates uniformly. Head: linear map from the flattened
// attended map to the embedding.
struct AttentionParams {
  int channels = 0;
  int reduction = 0;
  int height = 0;
  int width = 0;
  int embed_dim = 0;

  Vec w0;              // hidden = channels/reduction, scalar-in layer
  Vec w1;              // hidden, scalar-out layer
  Vec spatial_kernel;  // 2*3*3, [input_map][ky][kx]
  Matrix head_w;       // embed_dim x (channels*height*width)
  Vec head_b;          // embed_dim

  void validate() const;
};

AttentionParams make_attention_params(int channels, int reduction, int height, int width,
                                      int embed_dim);

struct ChannelCache {
  FeatureMap input;
  Vec avg_desc;              // per channel
  Vec max_desc;              // per channel
  std::vector<int> max_pos;  // flat y*w+x of the max per channel
  Vec pre_avg;               // pre-relu, avg branch, [channel][hidden]
  Vec pre_max;               // pre-relu, max branch, [channel][hidden]
  Vec gate;                  // per channel, in (0,1)
};

struct SpatialCache {
  FeatureMap input;
  Vec pooled_mean;            // per location
  Vec pooled_max;             // per location
  std::vector<int> max_chan;  // argmax channel per location
  Vec gate;                   // per location, in (0,1)
};

struct AttentionCache {
  ChannelCache channel;
  SpatialCache spatial;
  Vec flat;  // flattened spatial output fed to the head
  Vec v_attn;
};

struct AttentionGrads {
  Vec w0;
  Vec w1;
  Vec spatial_kernel;
  Matrix head_w;
  Vec head_b;
};

FeatureMap channel_forward(const FeatureMap& f, const AttentionParams& p, ChannelCache& cache);
FeatureMap spatial_forward(const FeatureMap& f, const AttentionParams& p, SpatialCache& cache);

// grad_output arrives w.r.t. the stage output; each returns grad w.r.t. the
// stage input and accumulates parameter gradients.
FeatureMap channel_backward(const AttentionParams& p, const ChannelCache& cache,
                            const FeatureMap& grad_output, AttentionGrads& grads);
FeatureMap spatial_backward(const AttentionParams& p, const SpatialCache& cache,
                            const FeatureMap& grad_output, AttentionGrads& grads);

FeatureMap channel_attention(const FeatureMap& f, const AttentionParams& p);
FeatureMap spatial_attention(const FeatureMap& f, const AttentionParams& p);
Vec attended_embedding(const FeatureMap& f, const AttentionParams& p);

AttentionCache attention_forward(const FeatureMap& f, const AttentionParams& p);
AttentionGrads make_attention_grads(const AttentionParams& p);

// Accumulates parameter gradients into `grads`, returns the gradient w.r.t.
// the module input.
FeatureMap attention_backward(const AttentionParams& p, const AttentionCache& cache,
                              const Vec& grad_v_attn, AttentionGrads& grads);

}  // namespace recidx
