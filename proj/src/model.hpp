#pragma once

#include <cstdint>
#include <vector>

#include "attention.hpp"
#include "losses.hpp"
#include "recognizability.hpp"
#include "tensor.hpp"

namespace recidx {

// input -> tanh hidden -> { linear feature-map head, linear embedding head }
struct EncoderParams {
  Matrix w_hidden;
  Vec b_hidden;
  Matrix w_feat;
  Vec b_feat;
  Matrix w_embed;
  Vec b_embed;
};

struct EncoderCache {
  Vec input;
  Vec hidden_pre;
  Vec hidden;
  Vec feat_flat;
  Vec embed;
};

struct EncoderGrads {
  Matrix w_hidden;
  Vec b_hidden;
  Matrix w_feat;
  Vec b_feat;
  Matrix w_embed;
  Vec b_embed;
};

struct ModelDims {
  int input_dim = 16;
  int hidden_dim = 64;
  int channels = 16;
  int feat_h = 4;
  int feat_w = 4;
  int embed_dim = 32;
  int reduction = 4;
  int num_classes = 8;

  int feat_total() const { return channels * feat_h * feat_w; }
  void validate() const;
};

struct ModelState {
  ModelDims dims;
  EncoderParams encoder;
  PrototypeSet prototypes;
  AttentionParams attention;
  Vec reg_w;  // regression head over the flattened (dropped-out) feature map
  double reg_b = 0.0;
  UIClusterModel ui;
  bool ui_valid = false;  // inference never needs the UI model
  LossConfig loss;        // carried into the checkpoint
  std::uint64_t seed = 0;
  long step = 0;
};

ModelState init_model(const ModelDims& dims, std::uint64_t seed);

EncoderCache encoder_forward(const EncoderParams& p, const Vec& x);
EncoderGrads make_encoder_grads(const EncoderParams& p);
void encoder_backward(const EncoderParams& p, const EncoderCache& cache,
                      const Vec& grad_feat_flat, const Vec& grad_embed, EncoderGrads& grads);

// Flat views over a parameter struct and its same-shaped gradient struct; the
// optimizer walks these pairs.
void append_ptrs(std::vector<double*>& out, Vec& v);
void append_ptrs(std::vector<double*>& out, Matrix& m);
std::vector<double*> encoder_ptrs(EncoderParams& p);
std::vector<double*> encoder_ptrs(EncoderGrads& g);
std::vector<double*> attention_ptrs(AttentionParams& p);
std::vector<double*> attention_ptrs(AttentionGrads& g);

FeatureMap reshape_to_map(const Vec& flat, int channels, int height, int width);

}  // namespace recidx
