#include "eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <unordered_set>

#include "csv_io.hpp"
#include "recognizability.hpp"
#include "rng.hpp"

namespace recidx {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_match_set(const MatchSet& ms, const char* where) {
  if (ms.gallery.empty() || ms.probes.empty()) {
    fail(Err::InsufficientData, std::string(where) + ": empty gallery or probe set");
  }
  const std::size_t dim = ms.gallery.front().embedding.size();
  for (const EvalItem& g : ms.gallery) {
    if (g.embedding.size() != dim) fail(Err::DimensionMismatch, "gallery dims differ");
  }
  for (const EvalItem& p : ms.probes) {
    if (p.embedding.size() != dim) {
      fail(Err::DimensionMismatch, "probe dim differs from gallery");
    }
  }
}

std::unordered_set<int> gallery_labels(const MatchSet& ms) {
  std::unordered_set<int> labels;
  for (const EvalItem& g : ms.gallery) labels.insert(g.label);
  return labels;
}

bool is_unmated(const EvalItem& probe, const std::unordered_set<int>& labels) {
  return probe.label < 0 || labels.find(probe.label) == labels.end();
}

std::vector<double> scores_against_gallery(const MatchSet& ms, const EvalItem& probe) {
  std::vector<double> scores;
  scores.reserve(ms.gallery.size());
  for (const EvalItem& g : ms.gallery) scores.push_back(cosine(probe.embedding, g.embedding));
  return scores;
}

void check_grid(const std::vector<double>& grid, double lo, double hi, const char* what) {
  if (grid.empty()) fail(Err::ConfigError, std::string(what) + " grid is empty");
  for (double v : grid) {
    if (!(v > lo) || !(v < hi)) {
      fail(Err::ConfigError, std::string(what) + " target " + std::to_string(v) +
                                 " outside (" + std::to_string(lo) + ", " +
                                 std::to_string(hi) + ")");
    }
  }
}

}  // namespace

double threshold_for_rate(std::vector<double> candidate_scores,
                          std::vector<double> rate_scores, double target) {
  if (rate_scores.empty()) fail(Err::InsufficientData, "threshold_for_rate: no rate scores");
  std::sort(candidate_scores.begin(), candidate_scores.end());
  std::sort(rate_scores.begin(), rate_scores.end());
  const double n = static_cast<double>(rate_scores.size());
  for (double candidate : candidate_scores) {
    // count of rate scores >= candidate
    const auto at = std::lower_bound(rate_scores.begin(), rate_scores.end(), candidate);
    const double rate = static_cast<double>(rate_scores.end() - at) / n;
    if (rate <= target) return candidate;
  }
  return kInf;
}

double rank1_ir(const MatchSet& ms) {
  check_match_set(ms, "rank1_ir");
  const std::unordered_set<int> labels = gallery_labels(ms);
  for (const EvalItem& p : ms.probes) {
    if (is_unmated(p, labels)) {
      fail(Err::UnmatedProbePresent, "rank1_ir: probe '" + p.id + "' has no gallery mate");
    }
  }
  std::size_t hits = 0;
  for (const EvalItem& p : ms.probes) {
    const std::vector<double> scores = scores_against_gallery(ms, p);
    std::size_t best = 0;
    for (std::size_t j = 1; j < scores.size(); ++j) {
      if (scores[j] > scores[best]) best = j;  // ties keep the lowest index
    }
    if (ms.gallery[best].label == p.label) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(ms.probes.size());
}

std::vector<std::pair<double, double>> verification_sweep(const std::vector<ScorePair>& pairs,
                                                          const std::vector<double>& far_grid) {
  check_grid(far_grid, 0.0, 1.0, "FAR");
  std::vector<double> mated, nonmated, all;
  for (const ScorePair& p : pairs) {
    (p.is_mated ? mated : nonmated).push_back(p.score);
    all.push_back(p.score);
  }
  if (mated.empty() || nonmated.empty()) {
    fail(Err::InsufficientPairs, "verification_sweep: need mated and non-mated pairs");
  }
  std::sort(mated.begin(), mated.end());
  std::vector<std::pair<double, double>> out;
  for (double far : far_grid) {
    const double theta = threshold_for_rate(all, nonmated, far);
    const auto at = std::lower_bound(mated.begin(), mated.end(), theta);
    const double tpr =
        static_cast<double>(mated.end() - at) / static_cast<double>(mated.size());
    out.emplace_back(far, tpr);
  }
  return out;
}

std::vector<std::pair<double, double>> open_set_identification(
    const MatchSet& ms, int rank, const std::vector<double>& fpir_grid) {
  check_match_set(ms, "open_set_identification");
  check_grid(fpir_grid, 0.0, 1.0, "FPIR");
  if (rank < 1) fail(Err::ConfigError, "open_set_identification: rank must be >= 1");
  const std::unordered_set<int> labels = gallery_labels(ms);

  std::vector<double> unmated_top;
  struct MatedProbe {
    double top_score;
    bool in_rank;
  };
  std::vector<MatedProbe> mated;
  std::vector<double> all_top;

  std::vector<std::size_t> order(ms.gallery.size());
  for (const EvalItem& p : ms.probes) {
    const std::vector<double> scores = scores_against_gallery(ms, p);
    for (std::size_t j = 0; j < order.size(); ++j) order[j] = j;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return scores[a] > scores[b];  // equal scores keep the lower index first
    });
    const double top = scores[order.front()];
    all_top.push_back(top);
    if (is_unmated(p, labels)) {
      unmated_top.push_back(top);
    } else {
      bool in_rank = false;
      const std::size_t depth = std::min<std::size_t>(order.size(), static_cast<std::size_t>(rank));
      for (std::size_t j = 0; j < depth && !in_rank; ++j) {
        in_rank = ms.gallery[order[j]].label == p.label;
      }
      mated.push_back({top, in_rank});
    }
  }
  if (unmated_top.empty()) {
    fail(Err::NoUnmatedProbes, "open_set_identification: all probes are mated");
  }
  if (mated.empty()) {
    fail(Err::InsufficientData, "open_set_identification: no mated probes");
  }

  std::vector<std::pair<double, double>> out;
  for (double fpir : fpir_grid) {
    const double theta = threshold_for_rate(all_top, unmated_top, fpir);
    std::size_t hits = 0;
    for (const MatedProbe& m : mated) {
      if (m.top_score >= theta && m.in_rank) ++hits;
    }
    out.emplace_back(fpir, static_cast<double>(hits) / static_cast<double>(mated.size()));
  }
  return out;
}

std::vector<std::pair<double, double>> erc(const std::vector<ErcPair>& pairs,
                                           double fmr_target,
                                           const std::vector<double>& reject_grid) {
  if (!(fmr_target > 0.0) || !(fmr_target < 1.0)) {
    fail(Err::ConfigError, "erc: fmr_target must lie in (0, 1)");
  }
  if (reject_grid.empty()) fail(Err::ConfigError, "erc: empty reject grid");
  for (std::size_t i = 0; i < reject_grid.size(); ++i) {
    if (reject_grid[i] < 0.0 || reject_grid[i] >= 1.0) {
      fail(Err::ConfigError, "erc: reject fraction " + std::to_string(reject_grid[i]) +
                                 " outside [0, 1)");
    }
    if (i > 0 && reject_grid[i] <= reject_grid[i - 1]) {
      fail(Err::ConfigError, "erc: reject grid must be strictly increasing");
    }
  }

  std::vector<double> mated_scores, nonmated_scores, all_scores;
  for (const ErcPair& p : pairs) {
    (p.is_mated ? mated_scores : nonmated_scores).push_back(p.score);
    all_scores.push_back(p.score);
  }
  if (mated_scores.empty() || nonmated_scores.empty()) {
    fail(Err::InsufficientPairs, "erc: need mated and non-mated pairs");
  }
  const double theta = threshold_for_rate(all_scores, nonmated_scores, fmr_target);

  std::vector<double> qualities;
  qualities.reserve(pairs.size());
  for (const ErcPair& p : pairs) {
    qualities.push_back(std::min(p.quality_probe, p.quality_gallery));
  }
  std::vector<double> sorted_q(qualities);
  std::sort(sorted_q.begin(), sorted_q.end());

  std::vector<std::pair<double, double>> out;
  for (double r : reject_grid) {
    const std::size_t cut_index =
        static_cast<std::size_t>(std::floor(r * static_cast<double>(pairs.size())));
    if (cut_index >= pairs.size()) {
      fail(Err::EmptyAfterRejection, "erc: reject fraction " + std::to_string(r) +
                                         " leaves no pairs");
    }
    const double cutoff = sorted_q[cut_index];
    std::size_t mated_kept = 0, false_nonmatch = 0;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      if (qualities[i] < cutoff || !pairs[i].is_mated) continue;  // strict drop rule
      ++mated_kept;
      if (pairs[i].score < theta) ++false_nonmatch;
    }
    if (mated_kept == 0) {
      fail(Err::EmptyAfterRejection, "erc: no mated pairs survive rejection at " +
                                         std::to_string(r));
    }
    out.emplace_back(r, static_cast<double>(false_nonmatch) / static_cast<double>(mated_kept));
  }
  return out;
}

std::vector<ErcPair> make_verification_pairs(const MatchSet& ms, long max_mated,
                                             long max_nonmated, std::uint64_t seed) {
  check_match_set(ms, "make_verification_pairs");
  std::vector<ErcPair> mated, nonmated;
  for (const EvalItem& p : ms.probes) {
    for (const EvalItem& g : ms.gallery) {
      ErcPair pair;
      pair.score = cosine(p.embedding, g.embedding);
      pair.is_mated = p.label >= 0 && p.label == g.label;
      pair.quality_probe = p.quality;
      pair.quality_gallery = g.quality;
      (pair.is_mated ? mated : nonmated).push_back(pair);
    }
  }
  DetRng rng(derive_seed(seed, 7, 0));
  const auto subsample = [&rng](std::vector<ErcPair>& pool, long cap) {
    if (cap <= 0 || static_cast<std::size_t>(cap) >= pool.size()) return;
    for (long k = 0; k < cap; ++k) {
      const std::size_t pick =
          static_cast<std::size_t>(k) +
          rng.uniform_below(pool.size() - static_cast<std::size_t>(k));
      std::swap(pool[static_cast<std::size_t>(k)], pool[pick]);
    }
    pool.resize(static_cast<std::size_t>(cap));
  };
  subsample(mated, max_mated);
  subsample(nonmated, max_nonmated);

  std::vector<ErcPair> out;
  out.reserve(mated.size() + nonmated.size());
  out.insert(out.end(), mated.begin(), mated.end());
  out.insert(out.end(), nonmated.begin(), nonmated.end());
  return out;
}

RiStats ri_stats_of(const std::vector<double>& values, int bins) {
  if (values.empty() || bins < 1) {
    fail(Err::InsufficientData, "ri_stats_of: need values and bins >= 1");
  }
  RiStats stats;
  double sum = 0.0;
  for (double v : values) sum += v;
  stats.mean = sum / static_cast<double>(values.size());
  stats.skew_valid = false;
  if (values.size() >= 3) {
    try {
      stats.skew = skewness(values);
      stats.skew_valid = true;
    } catch (const Error&) {
      // zero variance: histogram and mean still informative
    }
  }
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  stats.lo = *lo_it;
  stats.hi = *hi_it;
  stats.counts.assign(static_cast<std::size_t>(bins), 0);
  const std::vector<double> normalized = minmax_normalize(values);
  for (double z : normalized) {
    int bin = static_cast<int>(z * bins);
    if (bin >= bins) bin = bins - 1;
    ++stats.counts[static_cast<std::size_t>(bin)];
  }
  return stats;
}

void write_erc_csv(const std::string& path,
                   const std::vector<std::pair<double, double>>& points) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Err::IoError, "cannot open '" + path + "' for writing");
  out << "reject_fraction,fnmr\n";
  for (const auto& [r, fnmr] : points) {
    out << fmt_g17(r) << ',' << fmt_g17(fnmr) << "\n";
  }
  out.flush();
  if (!out) fail(Err::IoError, "write failed for '" + path + "'");
}

}  // namespace recidx
