#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "recognizability.hpp"
#include "rng.hpp"

using namespace recidx;

namespace {

PrototypeSet axes_prototypes(int c, int dim) {
  PrototypeSet ps;
  ps.num_classes = c;
  ps.dim = dim;
  for (int j = 0; j < c; ++j) {
    Vec w(dim, 0.0);
    w[j] = 1.0;
    ps.prototypes.push_back(w);
  }
  return ps;
}

UIClusterModel axis_ui(int dim, int axis) {
  UIClusterModel ui;
  ui.center.assign(dim, 0.0);
  ui.center[axis] = 1.0;
  return ui;
}

}  // namespace

TEST_CASE("proximity_triple hand cases") {
  // perfect instance: on its prototype, orthogonal to negatives and UI center
  const PrototypeSet ps = axes_prototypes(2, 3);
  const UIClusterModel ui = axis_ui(3, 2);
  const ProximityTriple perfect = proximity_triple({1.0, 0.0, 0.0}, ps, 0, ui);
  CHECK(perfect.d_pos == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(perfect.d_neg == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(perfect.d_ui == doctest::Approx(1.0).epsilon(1e-14));

  const ProximityTriple at_ui = proximity_triple({0.0, 0.0, 1.0}, ps, 0, ui);
  CHECK(at_ui.d_ui == doctest::Approx(0.0).epsilon(1e-14));

  // frozen: d_pos = 1 - sqrt(2)/2
  const double r = std::sqrt(2.0) / 2.0;
  PrototypeSet two;
  two.num_classes = 2;
  two.dim = 2;
  two.prototypes = {{r, r}, {1.0, 0.0}};
  const ProximityTriple t = proximity_triple({1.0, 0.0}, two, 0, axis_ui(2, 1));
  CHECK(t.d_pos == doctest::Approx(0.2928932188134524).epsilon(1e-12));
  CHECK(t.d_neg == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(t.d_ui == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("proximity_triple scans all negatives and validates input") {
  PrototypeSet ps = axes_prototypes(4, 4);
  const UIClusterModel ui = axis_ui(4, 3);
  // closest negative is class 2, not class 1
  const Vec v = l2_normalize({1.0, 0.1, 0.9, 0.0});
  const ProximityTriple t = proximity_triple(v, ps, 0, ui);
  CHECK(t.d_neg == doctest::Approx(1.0 - cosine(v, ps.prototypes[2])).epsilon(1e-14));

  CHECK_THROWS_AS(proximity_triple(v, ps, -1, ui), Error);
  CHECK_THROWS_AS(proximity_triple(v, ps, 4, ui), Error);
  CHECK_THROWS_AS(proximity_triple({1.0, 0.0}, ps, 0, ui), Error);
  CHECK_THROWS_AS(proximity_triple({0.0, 0.0, 0.0, 0.0}, ps, 0, ui), Error);
}

TEST_CASE("proximity_triple scale invariance") {
  const PrototypeSet ps = axes_prototypes(3, 5);
  const UIClusterModel ui = axis_ui(5, 4);
  DetRng rng(5);
  for (int i = 0; i < 25; ++i) {
    Vec v(5);
    for (double& x : v) x = rng.gaussian();
    if (norm(v) < 1e-3) continue;
    const ProximityTriple a = proximity_triple(v, ps, 1, ui);
    for (double c : {0.5, 3.0, 1e3}) {
      Vec vs = v;
      for (double& x : vs) x *= c;
      const ProximityTriple b = proximity_triple(vs, ps, 1, ui);
      CHECK(std::abs(a.d_pos - b.d_pos) <= 1e-12);
      CHECK(std::abs(a.d_neg - b.d_neg) <= 1e-12);
      CHECK(std::abs(a.d_ui - b.d_ui) <= 1e-12);
    }
  }
}

TEST_CASE("recognizability_index frozen examples") {
  CHECK(recognizability_index({0.0, 1.0, 1.0}, 1e-7) == 1.0e7);
  CHECK(recognizability_index({0.3, 0.8, 0.0}, 1e-7) == 0.0);
  // frozen: 1.2 * 0.5 / (0.29289 + 1e-7)
  CHECK(std::abs(recognizability_index({0.29289, 0.5, 1.2}, 1e-7) - 2.0485499509884426) <=
        1e-12);
  CHECK(recognizability_index({0.0, 1.0, 1.0}, 1e-3) * 1e-3 == 1.0);

  CHECK_THROWS_AS(recognizability_index({0.1, 0.1, 0.1}, 0.0), Error);
  CHECK_THROWS_AS(recognizability_index({0.1, 0.1, 0.1}, -1.0), Error);
}

TEST_CASE("recognizability_index monotonicity") {
  DetRng rng(23);
  for (int i = 0; i < 200; ++i) {
    ProximityTriple t;
    t.d_pos = rng.uniform01() * 2.0;
    t.d_neg = 0.01 + rng.uniform01() * 1.99;
    t.d_ui = 0.01 + rng.uniform01() * 1.99;
    const double base = recognizability_index(t, 1e-7);
    ProximityTriple up = t;
    up.d_pos += 0.05;
    CHECK(recognizability_index(up, 1e-7) < base);
    up = t;
    up.d_neg += 0.05;
    CHECK(recognizability_index(up, 1e-7) > base);
    up = t;
    up.d_ui += 0.05;
    CHECK(recognizability_index(up, 1e-7) > base);
  }
}

TEST_CASE("fit_ui_cluster standard normal") {
  const UIClusterModel ui = fit_ui_cluster({{3.0, 4.0}}, UIMode::StandardNormal, 10, nullptr, 1);
  CHECK(ui.center[0] == doctest::Approx(0.6).epsilon(1e-14));
  CHECK(ui.center[1] == doctest::Approx(0.8).epsilon(1e-14));
  CHECK(ui.mu_ui == 0.0);
  CHECK(ui.sigma_ui == 1.0);
  CHECK(ui.mode == UIMode::StandardNormal);

  CHECK_THROWS_AS(fit_ui_cluster({}, UIMode::StandardNormal, 10, nullptr, 1), Error);
  CHECK_THROWS_AS(
      fit_ui_cluster({{1.0, 0.0}, {-1.0, 0.0}}, UIMode::StandardNormal, 10, nullptr, 1), Error);
}

TEST_CASE("fit_ui_cluster center is permutation invariant and length-blind") {
  const std::vector<Vec> embs{{1.0, 0.2, 0.0}, {0.9, -0.1, 0.3}, {2.0, 0.4, 0.1}};
  std::vector<Vec> scaled = embs;  // normalization makes magnitudes irrelevant
  for (Vec& v : scaled)
    for (double& x : v) x *= 7.0;
  std::vector<Vec> reversed(embs.rbegin(), embs.rend());
  const Vec a = fit_ui_cluster(embs, UIMode::StandardNormal, 10, nullptr, 1).center;
  const Vec b = fit_ui_cluster(reversed, UIMode::StandardNormal, 10, nullptr, 1).center;
  const Vec c = fit_ui_cluster(scaled, UIMode::StandardNormal, 10, nullptr, 1).center;
  for (int i = 0; i < 3; ++i) {
    CHECK(std::abs(a[i] - b[i]) <= 1e-12);
    CHECK(std::abs(a[i] - c[i]) <= 1e-12);
  }
}

TEST_CASE("fit_ui_cluster empirical") {
  const std::vector<Vec> embs{{1.0, 0.0}, {0.9, 0.1}, {0.8, 0.2}, {0.7, 0.3}};
  auto table_source = [&](const Vec& e) {
    return 1.0 + static_cast<double>(&e - embs.data());  // 1,2,3,4 by position
  };
  // K = n draws every element exactly once, so (mu, sigma) are order-free:
  // frozen hand oracle over {1,2,3,4}.
  const UIClusterModel ui = fit_ui_cluster(embs, UIMode::Empirical, 4, table_source, 9);
  CHECK(ui.mu_ui == doctest::Approx(2.5).epsilon(1e-14));
  CHECK(ui.sigma_ui == doctest::Approx(1.2909944487358056).epsilon(1e-12));
  CHECK(ui.sample_count == 4);

  auto constant = [](const Vec&) { return 0.7; };
  CHECK_THROWS_AS(fit_ui_cluster(embs, UIMode::Empirical, 4, constant, 9), Error);
  CHECK_THROWS_AS(fit_ui_cluster(embs, UIMode::Empirical, 4, nullptr, 9), Error);
  CHECK_THROWS_AS(fit_ui_cluster(embs, UIMode::Empirical, 1, table_source, 9), Error);

  // oversampling draws with replacement, deterministically for a fixed seed
  const UIClusterModel over = fit_ui_cluster(embs, UIMode::Empirical, 9, table_source, 9);
  const UIClusterModel over2 = fit_ui_cluster(embs, UIMode::Empirical, 9, table_source, 9);
  CHECK(over.mu_ui == over2.mu_ui);
  CHECK(over.sigma_ui == over2.sigma_ui);
  CHECK(over.mu_ui >= 1.0);
  CHECK(over.mu_ui <= 4.0);
}

TEST_CASE("defaults honored") {
  CHECK(kDefaultUISampleCount == 5000);
  CHECK(kDefaultEpsilon == 1e-7);
  CHECK(kUnlabeled == -1);
}

TEST_CASE("skewness") {
  CHECK(skewness({-1.0, 0.0, 1.0}) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(skewness({0.0, 0.0, 0.0, 10.0}) > 0.0);
  CHECK(skewness({0.0, 10.0, 10.0, 10.0}) < 0.0);
  // frozen adjusted Fisher-Pearson value for {1,2,3,10}
  CHECK(skewness({1.0, 2.0, 3.0, 10.0}) ==
        doctest::Approx(1.7636326148038877).epsilon(1e-12));
  CHECK(skewness({0.0, 0.0, 0.0, 10.0}) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(skewness({0.0, 10.0, 10.0, 10.0}) == doctest::Approx(-2.0).epsilon(1e-12));

  CHECK_THROWS_AS(skewness({1.0, 2.0}), Error);
  CHECK_THROWS_AS(skewness({3.0, 3.0, 3.0}), Error);
}

TEST_CASE("minmax_normalize is reporting-only rescale") {
  const std::vector<double> out = minmax_normalize({2.0, 4.0, 3.0});
  CHECK(out[0] == 0.0);
  CHECK(out[1] == 1.0);
  CHECK(out[2] == doctest::Approx(0.5).epsilon(1e-14));
  const std::vector<double> flat = minmax_normalize({5.0, 5.0});
  CHECK(flat[0] == 0.0);
  CHECK(flat[1] == 0.0);
}

TEST_CASE("prototype validation and renormalize") {
  PrototypeSet ps = axes_prototypes(3, 3);
  ps.validate();
  ps.prototypes[1] = {0.0, 2.0, 0.0};
  CHECK_THROWS_AS(ps.validate(), Error);
  ps.renormalize();
  ps.validate();

  PrototypeSet one = axes_prototypes(1, 2);
  CHECK_THROWS_AS(one.validate(), Error);
}

TEST_CASE("ui mode names") {
  CHECK(ui_mode_from_name("standard_normal") == UIMode::StandardNormal);
  CHECK(ui_mode_from_name("empirical") == UIMode::Empirical);
  CHECK(ui_mode_name(UIMode::Empirical) == std::string("empirical"));
  CHECK_THROWS_AS(ui_mode_from_name("gauss"), Error);
}
