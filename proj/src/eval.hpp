#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "tensor.hpp"

namespace recidx {

struct EvalItem {
  std::string id;
  int label = -1;  // -1 or a label absent from the gallery marks an unmated probe
  Vec embedding;
  double quality = 0.0;
};

struct MatchSet {
  std::vector<EvalItem> gallery;
  std::vector<EvalItem> probes;
};

struct ScorePair {
  double score = 0.0;
  bool is_mated = false;
};

struct ErcPair {
  double score = 0.0;
  bool is_mated = false;
  double quality_probe = 0.0;
  double quality_gallery = 0.0;
};

inline const std::vector<double>& default_far_grid() {
  static const std::vector<double> grid{0.3, 0.1, 0.01, 0.001};
  return grid;
}
inline const std::vector<double>& default_fpir_grid() {
  static const std::vector<double> grid{0.3, 0.2, 0.1};
  return grid;
}
inline const std::vector<double>& default_reject_grid() {
  static const std::vector<double> grid{0.0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3};
  return grid;
}
constexpr int kDefaultRank = 20;
constexpr double kDefaultFmrTarget = 1e-4;

// Acceptance rule everywhere: score >= threshold. The threshold for a rate
// target is the smallest observed score keeping the empirical rate over
// `rate_scores` at or below the target; +inf when nothing qualifies.
double threshold_for_rate(std::vector<double> candidate_scores,
                          std::vector<double> rate_scores, double target);

// Fraction of probes whose best-cosine gallery item (ties to the lowest
// index) carries the probe label. Every probe must be mated.
double rank1_ir(const MatchSet& ms);

std::vector<std::pair<double, double>> verification_sweep(const std::vector<ScorePair>& pairs,
                                                          const std::vector<double>& far_grid);

// Threshold per FPIR target over unmated top-1 scores; TPIR counts mated
// probes accepted at that threshold with the true label inside the top-`rank`
// gallery items.
std::vector<std::pair<double, double>> open_set_identification(
    const MatchSet& ms, int rank, const std::vector<double>& fpir_grid);

// Threshold fixed once at the FMR target; each grid point drops pairs whose
// quality (min of the two sides) falls strictly below the grid quantile, then
// recomputes FNMR on the survivors.
std::vector<std::pair<double, double>> erc(const std::vector<ErcPair>& pairs,
                                           double fmr_target,
                                           const std::vector<double>& reject_grid);

// All probe-gallery cross pairs; caps > 0 subsample that side with the seed.
std::vector<ErcPair> make_verification_pairs(const MatchSet& ms, long max_mated,
                                             long max_nonmated, std::uint64_t seed);

struct RiStats {
  double mean = 0.0;
  double skew = 0.0;
  bool skew_valid = false;
  double lo = 0.0;
  double hi = 0.0;
  std::vector<int> counts;  // histogram over min-max normalized values
};

RiStats ri_stats_of(const std::vector<double>& values, int bins);

struct EvalReport {
  bool has_rank1 = false;
  double rank1 = 0.0;
  std::vector<std::pair<double, double>> tpr_at_far;
  std::vector<std::pair<double, double>> tpir_at_fpir;
  int rank = kDefaultRank;
  std::vector<std::pair<double, double>> erc_points;
  RiStats ri;
  int n_gallery = 0;
  int n_probes = 0;
  int n_unmated_probes = 0;
  long n_mated_pairs = 0;
  long n_nonmated_pairs = 0;
};

void write_erc_csv(const std::string& path, const std::vector<std::pair<double, double>>& points);

}  // namespace recidx
