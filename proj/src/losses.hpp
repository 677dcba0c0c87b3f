#pragma once

#include <map>
#include <string>
#include <vector>

#include "recognizability.hpp"
#include "tensor.hpp"

namespace recidx {

struct LossConfig {
  double epsilon = kDefaultEpsilon;
  double beta_smooth = 0.75;  // smooth-L1 threshold
  double tau = 3.0;           // diversion confidence interval
  double weight_l1 = 5.0;
  double weight_id = 2.0;
  double weight_mse = 1.0;
  double arc_scale = 64.0;
  double arc_margin = 0.45;

  void validate() const;
};

struct LossBundle {
  double l_cls = 0.0;
  double l_l1 = 0.0;
  double l_id = 0.0;
  double l_mse = 0.0;
  double l_total = 0.0;
  std::map<std::string, Vec> gradients;
};

struct ArcfaceResult {
  double loss = 0.0;
  Vec grad_v;                        // w.r.t. the embedding input
  std::vector<Vec> grad_prototypes;  // one per class
  bool easy_margin_fallback = false; // theta + m past pi, handled not thrown
};

// Target logit s*cos(theta + m), others s*cos(theta_j), cross-entropy over C logits.
ArcfaceResult arcface_loss(const Vec& v_hat, const PrototypeSet& prototypes, int target,
                           double scale, double margin);

struct ScalarLoss {
  double loss = 0.0;
  double dloss_dxi_hat = 0.0;
};

ScalarLoss smooth_l1(double xi, double xi_hat, double beta_smooth);

// max(0, tau - (xi_hat - mu)/sigma); subgradient 0 at the hinge boundary.
ScalarLoss index_diversion_loss(double xi_hat, const UIClusterModel& ui, double tau);

// v - <v, center> * center; the component of v along the UI direction removed.
Vec ui_projection(const Vec& v, const Vec& ui_center);

struct MseResult {
  double loss = 0.0;
  Vec grad_v_attn;
};

// Per-element mean of (v_prime - v_attn)^2; v_prime is a constant target.
MseResult projection_mse(const Vec& v_prime, const Vec& v_attn);

double total_loss(double l_cls, double l_l1, double l_id, double l_mse, const LossConfig& cfg);

}  // namespace recidx
