#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "recidx.h"

namespace {

using Json = nlohmann::json;

constexpr int kUsage = 2;

int report_api_error(recidx_status st) {
  std::fprintf(stderr, "error: %s\n", recidx_last_error());
  return static_cast<int>(st);
}

bool read_text_file(const std::string& path, std::string* out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  std::ostringstream buf;
  buf << in.rdbuf();
  *out = buf.str();
  return true;
}

bool write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) return false;
  out << text;
  out.flush();
  return static_cast<bool>(out);
}

// Loads a {"<section>": {...}} config, applies the seed override, and enforces
// that a seed is present one way or the other.
int load_config(const std::string& path, const char* section, bool seed_given,
                std::uint64_t seed, Json* out) {
  std::string text;
  if (!read_text_file(path, &text)) {
    std::fprintf(stderr, "error: cannot read config '%s'\n", path.c_str());
    return kUsage;
  }
  Json doc = Json::parse(text, nullptr, false);
  if (doc.is_discarded()) {
    std::fprintf(stderr, "error: '%s' is not valid JSON\n", path.c_str());
    return kUsage;
  }
  if (!doc.is_object() || !doc.contains(section) || !doc.at(section).is_object()) {
    std::fprintf(stderr, "error: '%s' must hold a '%s' object\n", path.c_str(), section);
    return kUsage;
  }
  if (seed_given) doc[section]["seed"] = seed;
  if (!doc[section].contains("seed")) {
    std::fprintf(stderr, "error: seed required (config '%s' key or --seed)\n", section);
    return kUsage;
  }
  *out = std::move(doc);
  return 0;
}

int ensure_dir(const std::string& path) {
  std::error_code ec;
  std::filesystem::create_directories(path, ec);
  if (ec) {
    std::fprintf(stderr, "error: cannot create directory '%s': %s\n", path.c_str(),
                 ec.message().c_str());
    return 3;
  }
  return 0;
}

int cmd_synth(const std::string& config_path, const std::string& out_dir, bool seed_given,
              std::uint64_t seed) {
  Json doc;
  if (int rc = load_config(config_path, "synth", seed_given, seed, &doc)) return rc;
  if (int rc = ensure_dir(out_dir)) return rc;

  recidx_dataset* ds = nullptr;
  if (recidx_status st = recidx_dataset_generate(doc.dump().c_str(), &ds)) {
    return report_api_error(st);
  }
  for (const char* split : {"train", "gallery", "probe", "ui"}) {
    const std::string path = out_dir + "/" + split + ".csv";
    if (recidx_status st = recidx_dataset_write_split(ds, split, path.c_str())) {
      recidx_dataset_free(ds);
      return report_api_error(st);
    }
  }
  char* summary = nullptr;
  if (recidx_status st = recidx_dataset_summary(ds, &summary)) {
    recidx_dataset_free(ds);
    return report_api_error(st);
  }
  std::printf("%s\n", summary);
  recidx_string_free(summary);
  recidx_dataset_free(ds);
  return 0;
}

int cmd_train(const std::string& config_path, const std::string& out_dir, bool seed_given,
              std::uint64_t seed, bool baseline) {
  Json doc;
  if (int rc = load_config(config_path, "train", seed_given, seed, &doc)) return rc;
  if (baseline) {
    doc["train"]["loss"]["weight_l1"] = 0.0;
    doc["train"]["loss"]["weight_id"] = 0.0;
    doc["train"]["loss"]["weight_mse"] = 0.0;
  }
  if (int rc = ensure_dir(out_dir)) return rc;

  recidx_model* model = nullptr;
  char* history = nullptr;
  if (recidx_status st = recidx_train(doc.dump().c_str(), &model, &history)) {
    return report_api_error(st);
  }
  int rc = 0;
  if (!write_text_file(out_dir + "/history.csv", history)) {
    std::fprintf(stderr, "error: cannot write '%s/history.csv'\n", out_dir.c_str());
    rc = 3;
  }
  recidx_string_free(history);
  if (rc == 0) {
    const std::string ckpt = out_dir + "/checkpoint.json";
    if (recidx_status st = recidx_model_save(model, ckpt.c_str())) {
      rc = report_api_error(st);
    }
  }
  recidx_model_free(model);
  return rc;
}

int cmd_score(const std::string& ckpt, const std::string& in_csv, const std::string& out_csv) {
  recidx_model* model = nullptr;
  if (recidx_status st = recidx_model_load(ckpt.c_str(), &model)) {
    return report_api_error(st);
  }
  int rc = 0;
  if (recidx_status st = recidx_score_csv(model, in_csv.c_str(), out_csv.c_str())) {
    rc = report_api_error(st);
  }
  recidx_model_free(model);
  return rc;
}

struct EvalFlags {
  std::string checkpoint, gallery, probe, distractors, out_dir;
  std::vector<std::string> metrics;
  std::vector<double> far_grid, fpir_grid, reject_grid;
  double fmr = 0.0;
  int rank = 0;
  long max_pos = 0, max_neg = 0;
  std::uint64_t seed = 0;
};

int cmd_eval(const EvalFlags& f, const CLI::App* sub) {
  Json opts = Json::object();
  if (sub->count("--metrics")) opts["metrics"] = f.metrics;
  if (sub->count("--far-grid")) opts["far_grid"] = f.far_grid;
  if (sub->count("--fpir-grid")) opts["fpir_grid"] = f.fpir_grid;
  if (sub->count("--reject-grid")) opts["reject_grid"] = f.reject_grid;
  if (sub->count("--fmr")) opts["fmr"] = f.fmr;
  if (sub->count("--rank")) opts["rank"] = f.rank;
  if (sub->count("--max-pos-pairs")) opts["max_mated_pairs"] = f.max_pos;
  if (sub->count("--max-neg-pairs")) opts["max_nonmated_pairs"] = f.max_neg;
  if (sub->count("--seed")) opts["seed"] = f.seed;
  if (int rc = ensure_dir(f.out_dir)) return rc;

  recidx_model* model = nullptr;
  if (recidx_status st = recidx_model_load(f.checkpoint.c_str(), &model)) {
    return report_api_error(st);
  }
  recidx_report* report = nullptr;
  const std::string opts_text = opts.dump();
  recidx_status st =
      recidx_eval(model, f.gallery.c_str(), f.probe.c_str(),
                  f.distractors.empty() ? nullptr : f.distractors.c_str(),
                  opts_text.c_str(), &report);
  recidx_model_free(model);
  if (st) return report_api_error(st);

  int rc = 0;
  char* json = nullptr;
  if (recidx_status jst = recidx_report_json(report, &json)) {
    rc = report_api_error(jst);
  } else {
    if (!write_text_file(f.out_dir + "/report.json", std::string(json) + "\n")) {
      std::fprintf(stderr, "error: cannot write '%s/report.json'\n", f.out_dir.c_str());
      rc = 3;
    }
    recidx_string_free(json);
  }
  const bool erc_selected =
      !sub->count("--metrics") ||
      std::find(f.metrics.begin(), f.metrics.end(), "erc") != f.metrics.end();
  if (rc == 0 && erc_selected) {
    const std::string erc_path = f.out_dir + "/erc.csv";
    if (recidx_status est = recidx_report_erc_csv(report, erc_path.c_str())) {
      rc = report_api_error(est);
    }
  }
  recidx_report_free(report);
  return rc;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"recognizability index toolkit"};
  app.require_subcommand(1);

  std::string config_path, out_path;
  std::uint64_t seed = 0;
  bool baseline = false;

  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  synth->add_option("--config", config_path, "synth config JSON")->required();
  synth->add_option("--out", out_path, "output directory")->required();
  CLI::Option* synth_seed = synth->add_option("--seed", seed, "seed override");

  CLI::App* train = app.add_subcommand("train", "train a model");
  train->add_option("--config", config_path, "train config JSON")->required();
  train->add_option("--out", out_path, "output directory")->required();
  CLI::Option* train_seed = train->add_option("--seed", seed, "seed override");
  train->add_flag("--baseline", baseline, "zero the l1/id/mse loss weights");

  std::string in_csv, out_csv, ckpt;
  CLI::App* score = app.add_subcommand("score", "predict recognizability for a CSV");
  score->add_option("--checkpoint", ckpt, "checkpoint JSON")->required();
  score->add_option("--in", in_csv, "input embedding CSV")->required();
  score->add_option("--out", out_csv, "output score CSV")->required();

  EvalFlags ef;
  CLI::App* eval = app.add_subcommand("eval", "run the evaluation protocol");
  eval->add_option("--checkpoint", ef.checkpoint, "checkpoint JSON")->required();
  eval->add_option("--gallery", ef.gallery, "gallery CSV")->required();
  eval->add_option("--probe", ef.probe, "probe CSV")->required();
  eval->add_option("--distractors", ef.distractors, "extra unmated probe CSV");
  eval->add_option("--out", ef.out_dir, "output directory")->required();
  eval->add_option("--metrics", ef.metrics,
                   "subset of rank1,verification,openset,erc")
      ->delimiter(',');
  eval->add_option("--far-grid", ef.far_grid, "verification FAR targets")->delimiter(',');
  eval->add_option("--fpir-grid", ef.fpir_grid, "open-set FPIR targets")->delimiter(',');
  eval->add_option("--reject-grid", ef.reject_grid, "ERC reject fractions")->delimiter(',');
  eval->add_option("--fmr", ef.fmr, "ERC FMR target");
  eval->add_option("--rank", ef.rank, "open-set rank");
  eval->add_option("--max-pos-pairs", ef.max_pos, "cap on mated pairs");
  eval->add_option("--max-neg-pairs", ef.max_neg, "cap on non-mated pairs");
  eval->add_option("--seed", ef.seed, "pair subsampling seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kUsage;
  }

  try {
    if (app.got_subcommand(synth)) {
      return cmd_synth(config_path, out_path, synth_seed->count() > 0, seed);
    }
    if (app.got_subcommand(train)) {
      return cmd_train(config_path, out_path, train_seed->count() > 0, seed, baseline);
    }
    if (app.got_subcommand(score)) {
      return cmd_score(ckpt, in_csv, out_csv);
    }
    return cmd_eval(ef, eval);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsage;
  }
}
