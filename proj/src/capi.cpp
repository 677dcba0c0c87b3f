#include "recidx.h"

#include <cstdlib>
#include <cstring>
#include <exception>
#include <new>
#include <string>
#include <utility>
#include <vector>

#include "csv_io.hpp"
#include "error.hpp"
#include "eval.hpp"
#include "log.hpp"
#include "model.hpp"
#include "recognizability.hpp"
#include "serde.hpp"
#include "synth.hpp"
#include "trainer.hpp"

struct recidx_dataset {
  recidx::SynthDataset ds;
};
struct recidx_model {
  recidx::ModelState state;
};
struct recidx_report {
  recidx::EvalReport report;
};

namespace {

using namespace recidx;

thread_local std::string t_last_error;

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

recidx_status status_of(ErrClass cls) {
  switch (cls) {
    case ErrClass::Usage:
      return RECIDX_E_USAGE;
    case ErrClass::Data:
      return RECIDX_E_DATA;
    case ErrClass::Numeric:
      return RECIDX_E_NUMERIC;
  }
  return RECIDX_E_INTERNAL;
}

template <typename F>
recidx_status guard(F&& fn) {
  t_last_error.clear();
  try {
    fn();
    return RECIDX_OK;
  } catch (const Error& e) {
    t_last_error = e.what();
    return status_of(e.cls());
  } catch (const std::exception& e) {
    t_last_error = e.what();
    return RECIDX_E_INTERNAL;
  } catch (...) {
    t_last_error = "unidentified failure";
    return RECIDX_E_INTERNAL;
  }
}

recidx_status usage_error(const char* msg) {
  t_last_error = msg;
  return RECIDX_E_USAGE;
}

// Configs arrive as a single-section document ({"synth": ...} / {"train": ...})
// so a config file names what it configures.
const Json& single_section(const Json& doc, const char* key, const char* what) {
  check_json_keys(doc, {key}, what);
  if (!doc.contains(key)) {
    fail(Err::ConfigError, std::string(what) + ": missing '" + key + "' section");
  }
  return doc.at(key);
}

std::vector<CsvRecord> instances_to_rows(const std::vector<const Instance*>& view) {
  std::vector<CsvRecord> rows;
  rows.reserve(view.size());
  for (const Instance* inst : view) rows.push_back({inst->id, inst->label, inst->input});
  return rows;
}

struct EvalOptions {
  bool want_rank1 = true;
  bool want_verification = true;
  bool want_openset = false;
  bool openset_auto = true;  // include openset iff unmated probes exist
  bool want_erc = true;
  std::vector<double> far_grid = default_far_grid();
  std::vector<double> fpir_grid = default_fpir_grid();
  std::vector<double> reject_grid = default_reject_grid();
  double fmr = kDefaultFmrTarget;
  int rank = kDefaultRank;
  long max_mated = 0;  // <= 0 keeps every pair
  long max_nonmated = 0;
  std::uint64_t seed = 7;
};

EvalOptions parse_eval_options(const char* options_json) {
  EvalOptions opts;
  if (!options_json) return opts;
  const Json doc = parse_json_text(options_json, "eval options");
  check_json_keys(doc,
                  {"metrics", "far_grid", "fpir_grid", "reject_grid", "fmr", "rank",
                   "max_mated_pairs", "max_nonmated_pairs", "seed"},
                  "eval options");
  if (doc.contains("metrics")) {
    opts.want_rank1 = opts.want_verification = opts.want_openset = opts.want_erc = false;
    opts.openset_auto = false;
    for (const Json& m : doc.at("metrics")) {
      const std::string name = m.get<std::string>();
      if (name == "rank1") {
        opts.want_rank1 = true;
      } else if (name == "verification") {
        opts.want_verification = true;
      } else if (name == "openset") {
        opts.want_openset = true;
      } else if (name == "erc") {
        opts.want_erc = true;
      } else {
        fail(Err::ConfigError, "eval options: unknown metric '" + name + "'");
      }
    }
  }
  if (doc.contains("far_grid")) opts.far_grid = doc.at("far_grid").get<std::vector<double>>();
  if (doc.contains("fpir_grid")) {
    opts.fpir_grid = doc.at("fpir_grid").get<std::vector<double>>();
  }
  if (doc.contains("reject_grid")) {
    opts.reject_grid = doc.at("reject_grid").get<std::vector<double>>();
  }
  if (doc.contains("fmr")) opts.fmr = doc.at("fmr").get<double>();
  if (doc.contains("rank")) opts.rank = doc.at("rank").get<int>();
  if (doc.contains("max_mated_pairs")) opts.max_mated = doc.at("max_mated_pairs").get<long>();
  if (doc.contains("max_nonmated_pairs")) {
    opts.max_nonmated = doc.at("max_nonmated_pairs").get<long>();
  }
  if (doc.contains("seed")) opts.seed = doc.at("seed").get<std::uint64_t>();
  return opts;
}

std::vector<EvalItem> to_eval_items(const ModelState& model,
                                    const std::vector<CsvRecord>& rows, bool force_unmated,
                                    const char* side) {
  std::vector<EvalItem> items;
  items.reserve(rows.size());
  for (const ScoredEmbedding& s : embed_and_score(model, rows)) {
    EvalItem item;
    item.id = s.id;
    item.label = force_unmated ? kUnlabeled : s.label;
    item.embedding = s.v_hat;
    item.quality = s.xi_hat;
    if (!force_unmated && std::strcmp(side, "gallery") == 0 && item.label < 0) {
      fail(Err::CsvError, std::string(side) + ": row '" + s.id + "' is unlabeled");
    }
    items.push_back(std::move(item));
  }
  return items;
}

EvalReport run_eval(const ModelState& model, const std::vector<CsvRecord>& gallery_rows,
                    const std::vector<CsvRecord>& probe_rows,
                    const std::vector<CsvRecord>& distractor_rows, const EvalOptions& opts) {
  MatchSet ms;
  ms.gallery = to_eval_items(model, gallery_rows, false, "gallery");
  ms.probes = to_eval_items(model, probe_rows, false, "probe");
  const std::vector<EvalItem> distractors =
      to_eval_items(model, distractor_rows, true, "distractors");
  ms.probes.insert(ms.probes.end(), distractors.begin(), distractors.end());

  std::vector<int> gallery_labels;
  gallery_labels.reserve(ms.gallery.size());
  for (const EvalItem& g : ms.gallery) gallery_labels.push_back(g.label);
  auto is_unmated = [&](const EvalItem& p) {
    if (p.label < 0) return true;
    for (int l : gallery_labels) {
      if (l == p.label) return false;
    }
    return true;
  };

  EvalReport report;
  report.rank = opts.rank;
  report.n_gallery = static_cast<int>(ms.gallery.size());
  report.n_probes = static_cast<int>(ms.probes.size());
  for (const EvalItem& p : ms.probes) {
    if (is_unmated(p)) ++report.n_unmated_probes;
  }

  std::vector<double> qualities;
  qualities.reserve(ms.probes.size());
  for (const EvalItem& p : ms.probes) qualities.push_back(p.quality);
  report.ri = ri_stats_of(qualities, 10);

  if (opts.want_rank1) {
    // Closed-set metric: scored over the mated subset so distractor searches
    // cannot make it undefined.
    MatchSet closed;
    closed.gallery = ms.gallery;
    for (const EvalItem& p : ms.probes) {
      if (!is_unmated(p)) closed.probes.push_back(p);
    }
    report.rank1 = rank1_ir(closed);
    report.has_rank1 = true;
  }

  if (opts.want_verification || opts.want_erc) {
    const std::vector<ErcPair> pairs =
        make_verification_pairs(ms, opts.max_mated, opts.max_nonmated, opts.seed);
    for (const ErcPair& p : pairs) {
      if (p.is_mated) {
        ++report.n_mated_pairs;
      } else {
        ++report.n_nonmated_pairs;
      }
    }
    if (opts.want_verification) {
      std::vector<ScorePair> score_pairs;
      score_pairs.reserve(pairs.size());
      for (const ErcPair& p : pairs) score_pairs.push_back({p.score, p.is_mated});
      report.tpr_at_far = verification_sweep(score_pairs, opts.far_grid);
    }
    if (opts.want_erc) {
      report.erc_points = erc(pairs, opts.fmr, opts.reject_grid);
    }
  }

  if (opts.want_openset || (opts.openset_auto && report.n_unmated_probes > 0)) {
    report.tpir_at_fpir = open_set_identification(ms, opts.rank, opts.fpir_grid);
  } else if (opts.openset_auto) {
    log_info("openset skipped: no unmated probes");
  }
  return report;
}

}  // namespace

extern "C" {

const char* recidx_version(void) { return "0.1.0"; }

const char* recidx_last_error(void) { return t_last_error.c_str(); }

void recidx_string_free(char* s) { std::free(s); }

recidx_status recidx_recognizability_index(double d_pos, double d_neg, double d_ui,
                                           double epsilon, double* out_xi) {
  if (!out_xi) return usage_error("recidx_recognizability_index: out_xi is NULL");
  return guard([&] {
    ProximityTriple triple;
    triple.d_pos = d_pos;
    triple.d_neg = d_neg;
    triple.d_ui = d_ui;
    *out_xi = recognizability_index(triple, epsilon);
  });
}

recidx_status recidx_dataset_generate(const char* config_json, recidx_dataset** out_dataset) {
  if (!config_json || !out_dataset) {
    return usage_error("recidx_dataset_generate: NULL argument");
  }
  *out_dataset = nullptr;
  return guard([&] {
    const Json doc = parse_json_text(config_json, "synth config");
    const SynthConfig cfg = synth_config_from_json(single_section(doc, "synth", "synth config"));
    *out_dataset = new recidx_dataset{generate(cfg)};
  });
}

recidx_status recidx_dataset_write_split(const recidx_dataset* dataset, const char* split,
                                         const char* path) {
  if (!dataset || !split || !path) {
    return usage_error("recidx_dataset_write_split: NULL argument");
  }
  return guard([&] {
    const std::string name = split;
    std::vector<CsvRecord> rows;
    if (name == "ui") {
      for (const Instance& inst : dataset->ds.ui) {
        rows.push_back({inst.id, inst.label, inst.input});
      }
    } else if (name == "train" || name == "gallery" || name == "probe") {
      const Split s = name == "train"    ? Split::Train
                      : name == "gallery" ? Split::Gallery
                                          : Split::Probe;
      rows = instances_to_rows(split_view(dataset->ds, s));
    } else {
      fail(Err::ConfigError, "unknown split '" + name + "'");
    }
    write_embedding_csv(path, rows);
  });
}

recidx_status recidx_dataset_summary(const recidx_dataset* dataset, char** out_json) {
  if (!dataset || !out_json) return usage_error("recidx_dataset_summary: NULL argument");
  *out_json = nullptr;
  return guard([&] {
    const SynthDataset& ds = dataset->ds;
    int hard = 0;
    for (const Instance& inst : ds.instances) hard += inst.is_hard ? 1 : 0;
    Json doc;
    doc["num_classes"] = ds.cfg.num_classes;
    doc["dim"] = ds.cfg.dim;
    doc["instances"] = ds.instances.size();
    doc["hard_instances"] = hard;
    doc["hard_fraction"] =
        ds.instances.empty() ? 0.0 : static_cast<double>(hard) / ds.instances.size();
    doc["splits"] = Json{{"train", split_view(ds, Split::Train).size()},
                         {"gallery", split_view(ds, Split::Gallery).size()},
                         {"probe", split_view(ds, Split::Probe).size()}};
    doc["ui"] = ds.ui.size();
    *out_json = dup_string(doc.dump(2));
  });
}

void recidx_dataset_free(recidx_dataset* dataset) { delete dataset; }

recidx_status recidx_train(const char* config_json, recidx_model** out_model,
                           char** out_history_csv) {
  if (!config_json || !out_model) return usage_error("recidx_train: NULL argument");
  *out_model = nullptr;
  if (out_history_csv) *out_history_csv = nullptr;
  return guard([&] {
    const Json doc = parse_json_text(config_json, "train config");
    const TrainConfig cfg = train_config_from_json(single_section(doc, "train", "train config"));
    TrainResult result = train(cfg);
    if (out_history_csv) *out_history_csv = dup_string(history_csv_string(result.history));
    *out_model = new recidx_model{std::move(result.model)};
  });
}

recidx_status recidx_model_save(const recidx_model* model, const char* path) {
  if (!model || !path) return usage_error("recidx_model_save: NULL argument");
  return guard([&] { save_checkpoint(path, model->state); });
}

recidx_status recidx_model_load(const char* path, recidx_model** out_model) {
  if (!path || !out_model) return usage_error("recidx_model_load: NULL argument");
  *out_model = nullptr;
  return guard([&] { *out_model = new recidx_model{load_checkpoint(path)}; });
}

void recidx_model_free(recidx_model* model) { delete model; }

recidx_status recidx_score_csv(const recidx_model* model, const char* input_csv,
                               const char* output_csv) {
  if (!model || !input_csv || !output_csv) {
    return usage_error("recidx_score_csv: NULL argument");
  }
  return guard([&] {
    const std::vector<CsvRecord> rows = read_embedding_csv(input_csv);
    write_score_csv(output_csv, score(model->state, rows));
  });
}

recidx_status recidx_eval(const recidx_model* model, const char* gallery_csv,
                          const char* probe_csv, const char* distractors_csv,
                          const char* options_json, recidx_report** out_report) {
  if (!model || !gallery_csv || !probe_csv || !out_report) {
    return usage_error("recidx_eval: NULL argument");
  }
  *out_report = nullptr;
  return guard([&] {
    const EvalOptions opts = parse_eval_options(options_json);
    const std::vector<CsvRecord> gallery_rows = read_embedding_csv(gallery_csv);
    const std::vector<CsvRecord> probe_rows = read_embedding_csv(probe_csv);
    std::vector<CsvRecord> distractor_rows;
    if (distractors_csv) distractor_rows = read_embedding_csv(distractors_csv);
    *out_report = new recidx_report{
        run_eval(model->state, gallery_rows, probe_rows, distractor_rows, opts)};
  });
}

recidx_status recidx_report_json(const recidx_report* report, char** out_json) {
  if (!report || !out_json) return usage_error("recidx_report_json: NULL argument");
  *out_json = nullptr;
  return guard([&] { *out_json = dup_string(eval_report_to_json(report->report).dump(2)); });
}

recidx_status recidx_report_erc_csv(const recidx_report* report, const char* path) {
  if (!report || !path) return usage_error("recidx_report_erc_csv: NULL argument");
  return guard([&] {
    if (report->report.erc_points.empty()) {
      fail(Err::ConfigError, "report holds no ERC points");
    }
    write_erc_csv(path, report->report.erc_points);
  });
}

void recidx_report_free(recidx_report* report) { delete report; }

}  // extern "C"
