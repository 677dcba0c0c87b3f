#include "recognizability.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rng.hpp"

namespace recidx {

void PrototypeSet::validate() const {
  if (num_classes < 2) {
    fail(Err::ConfigError, "PrototypeSet: need at least 2 classes, got " +
                               std::to_string(num_classes));
  }
  if (static_cast<int>(prototypes.size()) != num_classes) {
    fail(Err::ShapeMismatch, "PrototypeSet: prototype count " +
                                 std::to_string(prototypes.size()) + " != C " +
                                 std::to_string(num_classes));
  }
  for (int j = 0; j < num_classes; ++j) {
    if (static_cast<int>(prototypes[j].size()) != dim) {
      fail(Err::DimensionMismatch, "PrototypeSet: prototype " + std::to_string(j) +
                                       " has dim " + std::to_string(prototypes[j].size()) +
                                       ", expected " + std::to_string(dim));
    }
    const double n = norm(prototypes[j]);
    if (std::fabs(n - 1.0) > 1e-9) {
      fail(Err::DegenerateVector, "PrototypeSet: prototype " + std::to_string(j) +
                                      " has norm " + std::to_string(n));
    }
  }
}

void PrototypeSet::renormalize() {
  // in place: optimizer state keeps pointers into the prototype storage
  for (auto& w : prototypes) {
    const double n = norm(w);
    if (!(n > 1e-12)) fail(Err::DegenerateVector, "PrototypeSet: prototype collapsed");
    for (double& x : w) x /= n;
  }
}

ProximityTriple proximity_triple(const Vec& v, const PrototypeSet& prototypes, int target,
                                 const UIClusterModel& ui) {
  if (target < 0 || target >= prototypes.num_classes) {
    fail(Err::IndexOutOfRange, "proximity_triple: target " + std::to_string(target) +
                                   " outside [0, " + std::to_string(prototypes.num_classes) +
                                   ")");
  }
  if (static_cast<int>(v.size()) != prototypes.dim) {
    fail(Err::DimensionMismatch, "proximity_triple: v dim " + std::to_string(v.size()) +
                                     " vs prototype dim " + std::to_string(prototypes.dim));
  }
  const Vec v_hat = l2_normalize(v);

  ProximityTriple t;
  t.d_pos = 1.0 - cosine(v_hat, prototypes.prototypes[target]);
  double best_neg = -1.0;
  for (int j = 0; j < prototypes.num_classes; ++j) {
    if (j == target) continue;
    best_neg = std::max(best_neg, cosine(v_hat, prototypes.prototypes[j]));
  }
  t.d_neg = 1.0 - best_neg;
  t.d_ui = 1.0 - cosine(v_hat, ui.center);
  return t;
}

double recognizability_index(const ProximityTriple& t, double epsilon) {
  if (!(epsilon > 0.0)) {
    fail(Err::InvalidEpsilon, "recognizability_index: epsilon " + std::to_string(epsilon));
  }
  return t.d_ui * t.d_neg / (t.d_pos + epsilon);
}

UIClusterModel fit_ui_cluster(const std::vector<Vec>& ui_embeddings, UIMode mode,
                              int sample_count, const std::function<double(const Vec&)>& ri_source,
                              std::uint64_t seed) {
  if (ui_embeddings.empty()) fail(Err::EmptyUISet, "fit_ui_cluster: no UI embeddings");

  const std::size_t d = ui_embeddings.front().size();
  Vec mean(d, 0.0);
  for (const Vec& u : ui_embeddings) {
    if (u.size() != d) fail(Err::DimensionMismatch, "fit_ui_cluster: mixed dims in UI set");
    axpy(mean, 1.0, l2_normalize(u));
  }
  for (double& x : mean) x /= static_cast<double>(ui_embeddings.size());
  if (norm(mean) <= 1e-12) {
    fail(Err::DegenerateCenter, "fit_ui_cluster: normalized embeddings cancel out");
  }

  UIClusterModel model;
  model.center = l2_normalize(mean);
  model.mode = mode;
  model.sample_count = sample_count;
  if (mode == UIMode::StandardNormal) {
    model.mu_ui = 0.0;
    model.sigma_ui = 1.0;
    return model;
  }

  if (!ri_source) fail(Err::ConfigError, "fit_ui_cluster: Empirical mode needs an RI source");
  if (sample_count < 2) {
    fail(Err::InsufficientData, "fit_ui_cluster: Empirical mode needs K >= 2, got " +
                                    std::to_string(sample_count));
  }
  const std::size_t n = ui_embeddings.size();
  DetRng rng(seed);
  std::vector<std::size_t> picks;
  picks.reserve(static_cast<std::size_t>(sample_count));
  if (static_cast<std::size_t>(sample_count) <= n) {
    // uniform subset without replacement: partial Fisher-Yates
    std::vector<std::size_t> indices(n);
    std::iota(indices.begin(), indices.end(), std::size_t{0});
    for (int k = 0; k < sample_count; ++k) {
      const std::size_t pick = k + rng.uniform_below(n - static_cast<std::size_t>(k));
      std::swap(indices[static_cast<std::size_t>(k)], indices[pick]);
      picks.push_back(indices[static_cast<std::size_t>(k)]);
    }
  } else {
    for (int k = 0; k < sample_count; ++k) picks.push_back(rng.uniform_below(n));
  }

  std::vector<double> samples;
  samples.reserve(picks.size());
  for (std::size_t idx : picks) samples.push_back(ri_source(ui_embeddings[idx]));

  const double k = static_cast<double>(sample_count);
  const double mu = std::accumulate(samples.begin(), samples.end(), 0.0) / k;
  double ss = 0.0;
  for (double s : samples) ss += (s - mu) * (s - mu);
  const double sigma = std::sqrt(ss / (k - 1.0));
  if (sigma <= 1e-12) {
    fail(Err::InsufficientVariance, "fit_ui_cluster: sigma " + std::to_string(sigma));
  }
  model.mu_ui = mu;
  model.sigma_ui = sigma;
  return model;
}

double skewness(const std::vector<double>& values) {
  const double n = static_cast<double>(values.size());
  if (values.size() < 3) {
    fail(Err::InsufficientData, "skewness: need >= 3 values, got " +
                                    std::to_string(values.size()));
  }
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : values) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  if (sd <= 1e-12) fail(Err::ZeroVariance, "skewness: zero sample variance");
  double cubed = 0.0;
  for (double x : values) {
    const double z = (x - mean) / sd;
    cubed += z * z * z;
  }
  return n / ((n - 1.0) * (n - 2.0)) * cubed;
}

std::vector<double> minmax_normalize(const std::vector<double>& values) {
  if (values.empty()) return {};
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it;
  const double span = *hi_it - lo;
  std::vector<double> out(values.size(), 0.0);
  if (span <= 0.0) return out;
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = (values[i] - lo) / span;
  return out;
}

const char* ui_mode_name(UIMode mode) {
  return mode == UIMode::StandardNormal ? "standard_normal" : "empirical";
}

UIMode ui_mode_from_name(const std::string& name) {
  if (name == "standard_normal") return UIMode::StandardNormal;
  if (name == "empirical") return UIMode::Empirical;
  fail(Err::ConfigError, "unknown UI mode '" + name + "'");
}

}  // namespace recidx
