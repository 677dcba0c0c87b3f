#include <algorithm>
#include <cmath>
#include <set>

#include "doctest.h"
#include "model.hpp"
#include "recognizability.hpp"
#include "synth.hpp"

using namespace recidx;

namespace {

SynthConfig small_config() {
  SynthConfig cfg;
  cfg.num_classes = 4;
  cfg.dim = 12;
  cfg.instances_per_class = 10;
  cfg.hard_class_ids = {1, 3};
  cfg.ui_count = 12;
  cfg.seed = 7;
  return cfg;
}

double mean_cos_to(const std::vector<Instance>& instances, const Vec& dir, bool hard) {
  double sum = 0.0;
  int n = 0;
  for (const Instance& inst : instances) {
    if (inst.is_hard != hard) continue;
    sum += cosine(inst.input, dir);
    ++n;
  }
  REQUIRE(n > 0);
  return sum / n;
}

}  // namespace

TEST_CASE("generation is deterministic and bookkeeping holds") {
  const SynthConfig cfg = small_config();
  const SynthDataset a = generate(cfg);
  const SynthDataset b = generate(cfg);
  REQUIRE(a.instances.size() == b.instances.size());
  for (std::size_t i = 0; i < a.instances.size(); ++i) {
    CHECK(a.instances[i].id == b.instances[i].id);
    CHECK(a.instances[i].input == b.instances[i].input);  // bit-exact
  }
  CHECK(a.instances.size() == 40);
  CHECK(a.ui.size() == 12);
  for (const Instance& u : a.ui) CHECK(u.label == kUnlabeled);

  SynthConfig other = cfg;
  other.seed = 8;
  const SynthDataset c = generate(other);
  CHECK(c.instances[0].input != a.instances[0].input);
}

TEST_CASE("default config matches the toy setup") {
  const SynthConfig cfg;
  CHECK(cfg.num_classes == 8);
  CHECK(cfg.hard_class_ids == std::vector<int>{1, 4, 6});
  const SynthDataset ds = generate(cfg);
  CHECK(ds.instances.size() == 400);
  std::set<int> hard_labels;
  for (const Instance& inst : ds.instances) {
    if (inst.is_hard) hard_labels.insert(inst.label);
  }
  CHECK(hard_labels == std::set<int>{1, 4, 6});
}

TEST_CASE("splits partition the instances") {
  const SynthDataset ds = generate(small_config());
  const auto train = split_view(ds, Split::Train);
  const auto gallery = split_view(ds, Split::Gallery);
  const auto probe = split_view(ds, Split::Probe);
  CHECK(train.size() + gallery.size() + probe.size() == ds.instances.size());
  std::set<std::string> ids;
  for (const auto* i : train) ids.insert(i->id);
  for (const auto* i : gallery) ids.insert(i->id);
  for (const auto* i : probe) ids.insert(i->id);
  CHECK(ids.size() == ds.instances.size());
  // every class appears in every split at the default fractions
  for (Split s : {Split::Train, Split::Gallery, Split::Probe}) {
    std::set<int> labels;
    for (const auto* i : split_view(ds, s)) labels.insert(i->label);
    CHECK(static_cast<int>(labels.size()) == ds.cfg.num_classes);
  }
}

TEST_CASE("hard instances lean toward the UI direction") {
  const SynthDataset ds = generate(small_config());
  const double hard_cos = mean_cos_to(ds.instances, ds.ui_direction, true);
  const double easy_cos = mean_cos_to(ds.instances, ds.ui_direction, false);
  CHECK(hard_cos > easy_cos);
}

TEST_CASE("an untrained encoder already separates easy from hard by d_ui") {
  const SynthConfig cfg;  // default toy world
  const SynthDataset ds = generate(cfg);
  ModelDims dims;
  dims.num_classes = cfg.num_classes;
  const ModelState model = init_model(dims, 3);

  std::vector<Vec> ui_embs;
  for (const Instance& u : ds.ui) {
    ui_embs.push_back(encoder_forward(model.encoder, u.input).embed);
  }
  const UIClusterModel ui = fit_ui_cluster(ui_embs, UIMode::StandardNormal, 10, nullptr, 1);

  double hard_dui = 0.0, easy_dui = 0.0;
  int hard_n = 0, easy_n = 0;
  for (const Instance& inst : ds.instances) {
    const Vec v = encoder_forward(model.encoder, inst.input).embed;
    const double d_ui = 1.0 - cosine(v, ui.center);
    if (inst.is_hard) {
      hard_dui += d_ui;
      ++hard_n;
    } else {
      easy_dui += d_ui;
      ++easy_n;
    }
  }
  CHECK(easy_dui / easy_n > hard_dui / hard_n);
}

TEST_CASE("infeasible separation is detected") {
  SynthConfig cfg = small_config();
  cfg.num_classes = 8;
  cfg.dim = 2;  // 9 directions at >= 60 degrees cannot fit on a circle
  CHECK_THROWS_AS(generate(cfg), Error);
}

TEST_CASE("config validation") {
  SynthConfig cfg = small_config();
  cfg.hard_class_ids = {5};
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = small_config();
  cfg.ui_pull = 1.5;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = small_config();
  cfg.train_fraction = 0.9;
  cfg.gallery_fraction = 0.2;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = small_config();
  cfg.num_classes = 1;
  CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("ids carry the difficulty mark") {
  const SynthDataset ds = generate(small_config());
  for (const Instance& inst : ds.instances) {
    CHECK(inst.id.front() == 'c');
    CHECK((inst.id.find("_h") != std::string::npos) == inst.is_hard);
  }
  for (const Instance& u : ds.ui) CHECK(u.id.rfind("ui_", 0) == 0);
}
