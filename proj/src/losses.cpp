#include "losses.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "log.hpp"

namespace recidx {

void LossConfig::validate() const {
  if (!(epsilon > 0.0)) fail(Err::ConfigError, "LossConfig: epsilon must be > 0");
  if (!(beta_smooth > 0.0)) fail(Err::ConfigError, "LossConfig: beta_smooth must be > 0");
  if (!(tau > 0.0)) fail(Err::ConfigError, "LossConfig: tau must be > 0");
  if (weight_l1 < 0.0 || weight_id < 0.0 || weight_mse < 0.0) {
    fail(Err::ConfigError, "LossConfig: loss weights must be >= 0");
  }
  if (!(arc_scale > 0.0)) fail(Err::ConfigError, "LossConfig: arc_scale must be > 0");
  if (arc_margin < 0.0 || arc_margin >= std::numbers::pi / 2.0) {
    fail(Err::ConfigError, "LossConfig: arc_margin must lie in [0, pi/2)");
  }
}

ArcfaceResult arcface_loss(const Vec& v_hat, const PrototypeSet& prototypes, int target,
                           double scale, double margin) {
  const int C = prototypes.num_classes;
  if (target < 0 || target >= C) {
    fail(Err::IndexOutOfRange, "arcface_loss: target " + std::to_string(target));
  }
  if (static_cast<int>(v_hat.size()) != prototypes.dim) {
    fail(Err::DimensionMismatch, "arcface_loss: dim " + std::to_string(v_hat.size()) +
                                     " vs " + std::to_string(prototypes.dim));
  }

  const double cos_m = std::cos(margin);
  const double sin_m = std::sin(margin);

  std::vector<double> cosines(C);
  for (int j = 0; j < C; ++j) {
    cosines[j] = std::clamp(dot(v_hat, prototypes.prototypes[j]), -1.0, 1.0);
  }

  ArcfaceResult res;
  std::vector<double> logits(C);
  std::vector<double> dlogit_dcos(C, scale);
  const double c_t = cosines[target];
  // theta + m <= pi  <=>  cos(theta) >= -cos(m); cos(theta+m) expanded to avoid
  // an arccos/cos roundtrip.
  if (c_t >= -cos_m) {
    const double sin_t = std::sqrt(std::max(0.0, 1.0 - c_t * c_t));
    logits[target] = scale * (c_t * cos_m - sin_t * sin_m);
    dlogit_dcos[target] = scale * (cos_m + c_t * sin_m / std::max(sin_t, 1e-12));
  } else {
    res.easy_margin_fallback = true;
    log_debug("arcface easy-margin fallback at cos(theta)=" + std::to_string(c_t));
    logits[target] = scale * (c_t - margin * sin_m);
  }
  for (int j = 0; j < C; ++j) {
    if (j != target) logits[j] = scale * cosines[j];
  }

  const double max_logit = *std::max_element(logits.begin(), logits.end());
  double denom = 0.0;
  for (double z : logits) denom += std::exp(z - max_logit);
  res.loss = max_logit + std::log(denom) - logits[target];

  res.grad_v.assign(v_hat.size(), 0.0);
  res.grad_prototypes.assign(static_cast<std::size_t>(C), Vec(v_hat.size(), 0.0));
  for (int j = 0; j < C; ++j) {
    const double p = std::exp(logits[j] - max_logit) / denom;
    const double dl_dcos = (p - (j == target ? 1.0 : 0.0)) * dlogit_dcos[j];
    axpy(res.grad_v, dl_dcos, prototypes.prototypes[j]);
    axpy(res.grad_prototypes[static_cast<std::size_t>(j)], dl_dcos, v_hat);
  }
  return res;
}

ScalarLoss smooth_l1(double xi, double xi_hat, double beta_smooth) {
  if (!(beta_smooth > 0.0)) fail(Err::ConfigError, "smooth_l1: beta must be > 0");
  const double e = xi - xi_hat;
  ScalarLoss out;
  if (std::fabs(e) < beta_smooth) {
    out.loss = 0.5 * e * e / beta_smooth;
    out.dloss_dxi_hat = -e / beta_smooth;
  } else {
    out.loss = std::fabs(e) - 0.5 * beta_smooth;
    out.dloss_dxi_hat = e > 0.0 ? -1.0 : 1.0;
  }
  return out;
}

ScalarLoss index_diversion_loss(double xi_hat, const UIClusterModel& ui, double tau) {
  if (!(ui.sigma_ui > 0.0)) fail(Err::ConfigError, "index_diversion_loss: sigma_ui must be > 0");
  if (!(tau > 0.0)) fail(Err::ConfigError, "index_diversion_loss: tau must be > 0");
  const double div = (xi_hat - ui.mu_ui) / ui.sigma_ui;
  ScalarLoss out;
  if (div < tau) {
    out.loss = tau - div;
    out.dloss_dxi_hat = -1.0 / ui.sigma_ui;
  }
  return out;
}

Vec ui_projection(const Vec& v, const Vec& ui_center) {
  if (v.size() != ui_center.size()) {
    fail(Err::DimensionMismatch, "ui_projection: " + std::to_string(v.size()) + " vs " +
                                     std::to_string(ui_center.size()));
  }
  if (std::fabs(norm(ui_center) - 1.0) > 1e-9) {
    fail(Err::DegenerateVector, "ui_projection: center is not unit norm");
  }
  Vec out(v);
  axpy(out, -dot(v, ui_center), ui_center);
  return out;
}

MseResult projection_mse(const Vec& v_prime, const Vec& v_attn) {
  if (v_prime.size() != v_attn.size()) {
    fail(Err::DimensionMismatch, "projection_mse: " + std::to_string(v_prime.size()) + " vs " +
                                     std::to_string(v_attn.size()));
  }
  const double d = static_cast<double>(v_prime.size());
  MseResult out;
  out.grad_v_attn.assign(v_attn.size(), 0.0);
  for (std::size_t i = 0; i < v_prime.size(); ++i) {
    const double diff = v_prime[i] - v_attn[i];
    out.loss += diff * diff / d;
    out.grad_v_attn[i] = 2.0 * (v_attn[i] - v_prime[i]) / d;
  }
  return out;
}

double total_loss(double l_cls, double l_l1, double l_id, double l_mse, const LossConfig& cfg) {
  return l_cls + cfg.weight_l1 * l_l1 + cfg.weight_id * l_id + cfg.weight_mse * l_mse;
}

}  // namespace recidx
