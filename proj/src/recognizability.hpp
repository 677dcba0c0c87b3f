#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "tensor.hpp"

namespace recidx {

constexpr int kUnlabeled = -1;
constexpr double kDefaultEpsilon = 1e-7;
constexpr int kDefaultUISampleCount = 5000;

// One unit-norm prototype per class (the margin-softmax weights).
struct PrototypeSet {
  int num_classes = 0;
  int dim = 0;
  std::vector<Vec> prototypes;

  // Throws on C < 2, mixed dims, or any prototype off the unit sphere by > 1e-9.
  void validate() const;
  void renormalize();
};

struct ProximityTriple {
  double d_pos = 0.0;  // 1 - cos(v_hat, w_target)
  double d_neg = 0.0;  // 1 - max over j != target of cos(v_hat, w_j)
  double d_ui = 0.0;   // 1 - cos(v_hat, ui center)
};

enum class UIMode { StandardNormal, Empirical };

struct UIClusterModel {
  Vec center;            // unit vector
  double mu_ui = 0.0;
  double sigma_ui = 1.0;
  UIMode mode = UIMode::StandardNormal;
  int sample_count = kDefaultUISampleCount;
};

struct RecognizabilityRecord {
  std::string instance_id;
  ProximityTriple triple;
  double xi = 0.0;
  double xi_hat = 0.0;
  int label = kUnlabeled;
  bool has_triple = false;  // triple/xi only apply to labeled instances
};

ProximityTriple proximity_triple(const Vec& v, const PrototypeSet& prototypes, int target,
                                 const UIClusterModel& ui);

double recognizability_index(const ProximityTriple& t, double epsilon = kDefaultEpsilon);

// center = normalize(mean of normalized embeddings). StandardNormal fixes
// (mu, sigma) = (0, 1); Empirical estimates them from K RI samples drawn with
// the given seed (without replacement while K fits, with replacement beyond).
UIClusterModel fit_ui_cluster(const std::vector<Vec>& ui_embeddings, UIMode mode,
                              int sample_count, const std::function<double(const Vec&)>& ri_source,
                              std::uint64_t seed);

// Adjusted Fisher-Pearson sample skewness; needs >= 3 values and nonzero spread.
double skewness(const std::vector<double>& values);

// Reporting-only rescale to [0, 1]; never used in training.
std::vector<double> minmax_normalize(const std::vector<double>& values);

const char* ui_mode_name(UIMode mode);
UIMode ui_mode_from_name(const std::string& name);

}  // namespace recidx
