#include "synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "recognizability.hpp"
#include "rng.hpp"

namespace recidx {

namespace {

constexpr double kMaxMeanCosine = 0.5;  // >= 60 degrees between cluster directions
constexpr int kMaxPlacementTries = 20000;

Vec random_unit(DetRng& rng, int dim) {
  Vec v(static_cast<std::size_t>(dim));
  for (;;) {
    for (double& x : v) x = rng.gaussian();
    if (norm(v) > 1e-6) return l2_normalize(v);
  }
}

// Gaussian perturbation in the tangent plane at `base`, then back to the sphere.
Vec jitter_on_sphere(DetRng& rng, const Vec& base, double scale) {
  Vec g(base.size());
  for (double& x : g) x = scale * rng.gaussian();
  axpy(g, -dot(g, base), base);
  Vec out(base);
  axpy(out, 1.0, g);
  return l2_normalize(out);
}

std::string format_id(const char* prefix, int cls, char kind, int index) {
  char buf[32];
  if (cls >= 0) {
    std::snprintf(buf, sizeof(buf), "%s%03d_%c%03d", prefix, cls, kind, index);
  } else {
    std::snprintf(buf, sizeof(buf), "%s%04d", prefix, index);
  }
  return buf;
}

}  // namespace

void SynthConfig::validate() const {
  if (num_classes < 2) fail(Err::ConfigError, "SynthConfig: num_classes must be >= 2");
  if (dim < 2) fail(Err::ConfigError, "SynthConfig: dim must be >= 2");
  if (instances_per_class < 1) {
    fail(Err::ConfigError, "SynthConfig: instances_per_class must be >= 1");
  }
  if (hard_fraction < 0.0 || hard_fraction > 1.0) {
    fail(Err::ConfigError, "SynthConfig: hard_fraction must lie in [0, 1]");
  }
  for (int id : hard_class_ids) {
    if (id < 0 || id >= num_classes) {
      fail(Err::ConfigError, "SynthConfig: hard class id " + std::to_string(id) +
                                 " outside [0, " + std::to_string(num_classes) + ")");
    }
  }
  if (ui_count < 1) fail(Err::ConfigError, "SynthConfig: ui_count must be >= 1");
  if (!(concentration_easy > 0.0) || !(concentration_hard > 0.0)) {
    fail(Err::ConfigError, "SynthConfig: concentrations must be > 0");
  }
  if (ui_pull < 0.0 || ui_pull > 1.0) {
    fail(Err::ConfigError, "SynthConfig: ui_pull must lie in [0, 1]");
  }
  if (!(train_fraction > 0.0) || !(gallery_fraction > 0.0) ||
      !(train_fraction + gallery_fraction < 1.0)) {
    fail(Err::ConfigError, "SynthConfig: split fractions must be positive and sum below 1");
  }
}

SynthDataset generate(const SynthConfig& cfg) {
  cfg.validate();
  DetRng rng(cfg.seed);

  SynthDataset ds;
  ds.cfg = cfg;
  ds.ui_direction = random_unit(rng, cfg.dim);

  // Cluster directions kept apart from each other and from the UI direction.
  std::vector<Vec> means;
  means.reserve(static_cast<std::size_t>(cfg.num_classes));
  for (int c = 0; c < cfg.num_classes; ++c) {
    bool placed = false;
    for (int attempt = 0; attempt < kMaxPlacementTries; ++attempt) {
      Vec candidate = random_unit(rng, cfg.dim);
      bool ok = cosine(candidate, ds.ui_direction) <= kMaxMeanCosine;
      for (const Vec& m : means) {
        if (!ok) break;
        ok = cosine(candidate, m) <= kMaxMeanCosine;
      }
      if (ok) {
        means.push_back(std::move(candidate));
        placed = true;
        break;
      }
    }
    if (!placed) {
      fail(Err::InfeasibleSeparation, "generate: could not place " +
                                          std::to_string(cfg.num_classes) +
                                          " separated cluster directions in dim " +
                                          std::to_string(cfg.dim));
    }
  }

  const int n = cfg.instances_per_class;
  const int n_train = static_cast<int>(std::lround(cfg.train_fraction * n));
  const int n_gallery = static_cast<int>(std::lround(cfg.gallery_fraction * n));
  ds.instances.reserve(static_cast<std::size_t>(cfg.num_classes) * n);
  for (int c = 0; c < cfg.num_classes; ++c) {
    const bool hard_class = std::find(cfg.hard_class_ids.begin(), cfg.hard_class_ids.end(),
                                      c) != cfg.hard_class_ids.end();
    for (int i = 0; i < n; ++i) {
      const bool hard = hard_class && rng.uniform01() < cfg.hard_fraction;
      const double scale = hard ? cfg.concentration_hard : cfg.concentration_easy;
      Vec v = jitter_on_sphere(rng, means[static_cast<std::size_t>(c)], scale);
      if (hard) {
        for (std::size_t k = 0; k < v.size(); ++k) {
          v[k] = (1.0 - cfg.ui_pull) * v[k] + cfg.ui_pull * ds.ui_direction[k];
        }
        v = l2_normalize(v);
      }
      Instance inst;
      inst.id = format_id("c", c, hard ? 'h' : 'e', i);
      inst.label = c;
      inst.is_hard = hard;
      inst.split = i < n_train           ? Split::Train
                   : i < n_train + n_gallery ? Split::Gallery
                                             : Split::Probe;
      inst.input = std::move(v);
      ds.instances.push_back(std::move(inst));
    }
  }

  ds.ui.reserve(static_cast<std::size_t>(cfg.ui_count));
  for (int k = 0; k < cfg.ui_count; ++k) {
    Instance inst;
    inst.id = format_id("ui_", -1, ' ', k);
    inst.label = kUnlabeled;
    inst.is_hard = false;
    inst.split = Split::Train;
    inst.input = jitter_on_sphere(rng, ds.ui_direction, cfg.concentration_easy);
    ds.ui.push_back(std::move(inst));
  }
  return ds;
}

std::vector<const Instance*> split_view(const SynthDataset& ds, Split split) {
  std::vector<const Instance*> out;
  for (const Instance& inst : ds.instances) {
    if (inst.split == split) out.push_back(&inst);
  }
  return out;
}

const char* split_name(Split split) {
  switch (split) {
    case Split::Train: return "train";
    case Split::Gallery: return "gallery";
    default: return "probe";
  }
}

}  // namespace recidx
