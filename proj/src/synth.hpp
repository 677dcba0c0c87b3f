#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tensor.hpp"

namespace recidx {

enum class Split { Train, Gallery, Probe };

struct SynthConfig {
  int num_classes = 8;
  int dim = 16;  // raw input dim (pre-encoder)
  int instances_per_class = 50;
  double hard_fraction = 1.0;               // hard share inside a hard class
  std::vector<int> hard_class_ids = {1, 4, 6};
  int ui_count = 64;
  double concentration_easy = 0.08;  // tangent-space noise scale
  double concentration_hard = 0.30;
  double ui_pull = 0.6;  // interpolation of hard instances toward the UI direction
  double train_fraction = 0.6;
  double gallery_fraction = 0.2;  // probe takes the remainder
  std::uint64_t seed = 1;

  void validate() const;
};

struct Instance {
  std::string id;
  int label = 0;  // kUnlabeled for UI inputs
  bool is_hard = false;
  Split split = Split::Train;
  Vec input;
};

struct SynthDataset {
  SynthConfig cfg;
  std::vector<Instance> instances;  // labeled, class-major order
  std::vector<Instance> ui;         // unlabeled cloud
  Vec ui_direction;                 // generating direction, kept for diagnostics
};

SynthDataset generate(const SynthConfig& cfg);

std::vector<const Instance*> split_view(const SynthDataset& ds, Split split);

const char* split_name(Split split);

}  // namespace recidx
