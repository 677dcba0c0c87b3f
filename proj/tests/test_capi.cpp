#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "recidx.h"

#include "csv_io.hpp"
#include "error.hpp"
#include "eval.hpp"
#include "recognizability.hpp"
#include "serde.hpp"
#include "trainer.hpp"

namespace fs = std::filesystem;
using recidx::Json;

namespace {

std::string take(char* s) {
  REQUIRE(s != nullptr);
  std::string out(s);
  recidx_string_free(s);
  return out;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

const char* kSynthConfig = R"({"synth": {
  "num_classes": 3, "dim": 10, "instances_per_class": 12,
  "hard_class_ids": [1], "ui_count": 16, "seed": 9
}})";

std::string train_config(const std::string& data_dir) {
  Json doc;
  doc["train"]["data_dir"] = data_dir;
  doc["train"]["epochs"] = 3;
  doc["train"]["batch_size"] = 8;
  doc["train"]["hidden_dim"] = 16;
  doc["train"]["channels"] = 4;
  doc["train"]["feat_h"] = 2;
  doc["train"]["feat_w"] = 2;
  doc["train"]["embed_dim"] = 8;
  doc["train"]["reduction"] = 2;
  doc["train"]["seed"] = 21;
  return doc.dump();
}

// One shared end-to-end workspace: dataset on disk, a trained checkpoint, and
// the file names every test below reuses.
struct Flow {
  std::string dir = "capitest";
  std::string train_csv, gallery_csv, probe_csv, ui_csv, ckpt;
  recidx_model* model = nullptr;
  std::string history;

  Flow() {
    fs::create_directories(dir);
    train_csv = dir + "/train.csv";
    gallery_csv = dir + "/gallery.csv";
    probe_csv = dir + "/probe.csv";
    ui_csv = dir + "/ui.csv";
    ckpt = dir + "/checkpoint.json";

    recidx_dataset* ds = nullptr;
    REQUIRE(recidx_dataset_generate(kSynthConfig, &ds) == RECIDX_OK);
    REQUIRE(recidx_dataset_write_split(ds, "train", train_csv.c_str()) == RECIDX_OK);
    REQUIRE(recidx_dataset_write_split(ds, "gallery", gallery_csv.c_str()) == RECIDX_OK);
    REQUIRE(recidx_dataset_write_split(ds, "probe", probe_csv.c_str()) == RECIDX_OK);
    REQUIRE(recidx_dataset_write_split(ds, "ui", ui_csv.c_str()) == RECIDX_OK);
    recidx_dataset_free(ds);

    char* hist = nullptr;
    REQUIRE(recidx_train(train_config(dir).c_str(), &model, &hist) == RECIDX_OK);
    history = take(hist);
    REQUIRE(recidx_model_save(model, ckpt.c_str()) == RECIDX_OK);
  }
  ~Flow() {
    recidx_model_free(model);
    fs::remove_all(dir);
  }
};

Flow& flow() {
  static Flow f;
  return f;
}

}  // namespace

TEST_CASE("version and error strings behave") {
  const char* v = recidx_version();
  REQUIRE(v != nullptr);
  CHECK(std::strlen(v) > 0);
  double xi = 0.0;
  CHECK(recidx_recognizability_index(0.1, 0.2, 0.3, 1e-7, nullptr) == RECIDX_E_USAGE);
  const char* msg = recidx_last_error();
  REQUIRE(msg != nullptr);
  CHECK(std::strlen(msg) > 0);
  CHECK(recidx_recognizability_index(0.1, 0.2, 0.3, 1e-7, &xi) == RECIDX_OK);
}

TEST_CASE("the C entry point computes the same index as the library") {
  double xi = 0.0;
  REQUIRE(recidx_recognizability_index(0.29289, 0.5, 1.2, 1e-7, &xi) == RECIDX_OK);
  CHECK(xi == recidx::recognizability_index({0.29289, 0.5, 1.2}, 1e-7));
  CHECK(xi == doctest::Approx(2.0485499509884426).epsilon(1e-12));
  CHECK(recidx_recognizability_index(0.1, 0.2, 0.3, 0.0, &xi) == RECIDX_E_NUMERIC);
  CHECK(recidx_recognizability_index(0.1, 0.2, 0.3, -1.0, &xi) == RECIDX_E_NUMERIC);
}

TEST_CASE("null handles and malformed JSON are usage errors") {
  recidx_dataset* ds = nullptr;
  recidx_model* model = nullptr;
  CHECK(recidx_dataset_generate(nullptr, &ds) == RECIDX_E_USAGE);
  CHECK(recidx_dataset_generate("{\"synth\": {", &ds) == RECIDX_E_USAGE);
  CHECK(recidx_dataset_generate("{\"wrong\": {}}", &ds) == RECIDX_E_USAGE);
  CHECK(recidx_dataset_generate("{\"synth\": {\"bogus_key\": 1}}", &ds) == RECIDX_E_USAGE);
  CHECK(recidx_train(nullptr, &model, nullptr) == RECIDX_E_USAGE);
  CHECK(recidx_train("{\"train\": {}}", nullptr, nullptr) == RECIDX_E_USAGE);
  CHECK(recidx_dataset_summary(nullptr, nullptr) == RECIDX_E_USAGE);
  CHECK(recidx_model_load(nullptr, &model) == RECIDX_E_USAGE);
  CHECK(recidx_report_json(nullptr, nullptr) == RECIDX_E_USAGE);
  // bad config values classify as usage too
  const std::string bad = R"({"train": {"data_dir": "nowhere", "batch_size": 1, "seed": 1}})";
  CHECK(recidx_train(bad.c_str(), &model, nullptr) == RECIDX_E_USAGE);
}

TEST_CASE("dataset summary reports split and hardness counts") {
  recidx_dataset* ds = nullptr;
  REQUIRE(recidx_dataset_generate(kSynthConfig, &ds) == RECIDX_OK);
  char* summary = nullptr;
  REQUIRE(recidx_dataset_summary(ds, &summary) == RECIDX_OK);
  const Json doc = Json::parse(take(summary));
  CHECK(doc.at("num_classes") == 3);
  CHECK(doc.at("dim") == 10);
  CHECK(doc.at("instances") == 36);
  CHECK(doc.at("ui") == 16);
  const int total = doc.at("splits").at("train").get<int>() +
                    doc.at("splits").at("gallery").get<int>() +
                    doc.at("splits").at("probe").get<int>();
  CHECK(total == 36);
  CHECK(doc.at("hard_instances").get<int>() > 0);
  CHECK(recidx_dataset_write_split(ds, "nope", "x.csv") == RECIDX_E_USAGE);
  recidx_dataset_free(ds);
}

TEST_CASE("training through the C API yields a usable, reloadable model") {
  Flow& f = flow();
  CHECK(f.history.rfind("epoch,l_cls,l_l1,l_id,l_mse,l_total,mean_ri_hard,mean_ri_easy\n", 0) ==
        0);

  const std::string scores1 = f.dir + "/s1.csv";
  const std::string scores2 = f.dir + "/s2.csv";
  REQUIRE(recidx_score_csv(f.model, f.probe_csv.c_str(), scores1.c_str()) == RECIDX_OK);

  recidx_model* reloaded = nullptr;
  REQUIRE(recidx_model_load(f.ckpt.c_str(), &reloaded) == RECIDX_OK);
  REQUIRE(recidx_score_csv(reloaded, f.probe_csv.c_str(), scores2.c_str()) == RECIDX_OK);
  recidx_model_free(reloaded);

  const std::string a = slurp(scores1);
  CHECK(a == slurp(scores2));  // save/load round-trips the model bit-for-bit
  CHECK(a.rfind("id,label,xi_hat\n", 0) == 0);
}

TEST_CASE("evaluation through the C API matches direct library calls") {
  Flow& f = flow();
  const char* options = R"({"fmr": 0.01, "seed": 3, "rank": 2})";
  recidx_report* report = nullptr;
  REQUIRE(recidx_eval(f.model, f.gallery_csv.c_str(), f.probe_csv.c_str(), nullptr, options,
                      &report) == RECIDX_OK);
  const Json doc = Json::parse(take([&] {
    char* j = nullptr;
    REQUIRE(recidx_report_json(report, &j) == RECIDX_OK);
    return j;
  }()));
  const std::string erc_csv = f.dir + "/erc.csv";
  REQUIRE(recidx_report_erc_csv(report, erc_csv.c_str()) == RECIDX_OK);
  recidx_report_free(report);

  // replicate with the in-process pipeline
  const recidx::ModelState model = recidx::load_checkpoint(f.ckpt);
  recidx::MatchSet ms;
  for (const auto& s :
       recidx::embed_and_score(model, recidx::read_embedding_csv(f.gallery_csv))) {
    ms.gallery.push_back({s.id, s.label, s.v_hat, s.xi_hat});
  }
  for (const auto& s : recidx::embed_and_score(model, recidx::read_embedding_csv(f.probe_csv))) {
    ms.probes.push_back({s.id, s.label, s.v_hat, s.xi_hat});
  }
  CHECK(doc.at("format") == "recidx-eval-report-v1");
  CHECK(doc.at("rank1_ir").get<double>() == recidx::rank1_ir(ms));
  const auto pairs = recidx::make_verification_pairs(ms, 0, 0, 3);
  std::vector<recidx::ScorePair> sp;
  for (const auto& p : pairs) sp.push_back({p.score, p.is_mated});
  const auto sweep = recidx::verification_sweep(sp, recidx::default_far_grid());
  const Json& tpr = doc.at("tpr_at_far");
  REQUIRE(tpr.size() == sweep.size());
  for (std::size_t i = 0; i < sweep.size(); ++i) {
    CHECK(tpr[i].at("far").get<double>() == sweep[i].first);
    CHECK(tpr[i].at("tpr").get<double>() == sweep[i].second);
  }
  const auto erc_pts = recidx::erc(pairs, 0.01, recidx::default_reject_grid());
  const Json& erc_doc = doc.at("erc");
  REQUIRE(erc_doc.size() == erc_pts.size());
  for (std::size_t i = 0; i < erc_pts.size(); ++i) {
    CHECK(erc_doc[i].at("reject_fraction").get<double>() == erc_pts[i].first);
    CHECK(erc_doc[i].at("fnmr").get<double>() == erc_pts[i].second);
  }
  recidx::write_erc_csv(f.dir + "/erc_lib.csv", erc_pts);
  CHECK(slurp(erc_csv) == slurp(f.dir + "/erc_lib.csv"));

  // no unmated probes and no explicit request: openset is skipped
  CHECK(doc.at("tpir_at_fpir").is_null());
  CHECK(doc.at("counts").at("gallery").get<int>() == static_cast<int>(ms.gallery.size()));
  CHECK(doc.at("counts").at("probes").get<int>() == static_cast<int>(ms.probes.size()));
  CHECK(doc.at("counts").at("unmated_probes").get<int>() == 0);
  CHECK(doc.at("ri_stats").at("histogram").at("counts").size() == 10);
}

TEST_CASE("distractors turn on the open-set protocol") {
  Flow& f = flow();
  recidx_report* report = nullptr;
  REQUIRE(recidx_eval(f.model, f.gallery_csv.c_str(), f.probe_csv.c_str(), f.ui_csv.c_str(),
                      nullptr, &report) == RECIDX_OK);
  char* j = nullptr;
  REQUIRE(recidx_report_json(report, &j) == RECIDX_OK);
  const Json doc = Json::parse(take(j));
  recidx_report_free(report);
  CHECK(doc.at("counts").at("unmated_probes").get<int>() == 16);
  REQUIRE(doc.at("tpir_at_fpir").is_array());
  CHECK(doc.at("tpir_at_fpir").size() == 3);
  CHECK(doc.at("rank").get<int>() == 20);
  // rank1 stays defined: it is computed over the mated probes only
  CHECK(doc.at("rank1_ir").is_number());
}

TEST_CASE("metric selection trims the report") {
  Flow& f = flow();
  recidx_report* report = nullptr;
  const char* options = R"({"metrics": ["rank1"]})";
  REQUIRE(recidx_eval(f.model, f.gallery_csv.c_str(), f.probe_csv.c_str(), nullptr, options,
                      &report) == RECIDX_OK);
  char* j = nullptr;
  REQUIRE(recidx_report_json(report, &j) == RECIDX_OK);
  const Json doc = Json::parse(take(j));
  CHECK(doc.at("rank1_ir").is_number());
  CHECK(doc.at("tpr_at_far").is_null());
  CHECK(doc.at("erc").is_null());
  CHECK(recidx_report_erc_csv(report, (f.dir + "/none.csv").c_str()) == RECIDX_E_USAGE);
  recidx_report_free(report);

  recidx_report* bad = nullptr;
  CHECK(recidx_eval(f.model, f.gallery_csv.c_str(), f.probe_csv.c_str(), nullptr,
                    R"({"metrics": ["nope"]})", &bad) == RECIDX_E_USAGE);
  CHECK(recidx_eval(f.model, f.gallery_csv.c_str(), f.probe_csv.c_str(), nullptr,
                    R"({"metrics": ["openset"]})", &bad) == RECIDX_E_DATA);
}

TEST_CASE("file-level failures map to the data status") {
  Flow& f = flow();
  recidx_model* model = nullptr;
  CHECK(recidx_model_load((f.dir + "/missing.json").c_str(), &model) == RECIDX_E_DATA);
  const std::string garbled = f.dir + "/garbled.json";
  std::ofstream(garbled, std::ios::binary) << "{\"format\": \"??\"}";
  CHECK(recidx_model_load(garbled.c_str(), &model) == RECIDX_E_DATA);

  // wrong-dimension inputs are data errors as well
  const std::string narrow = f.dir + "/narrow.csv";
  recidx::write_embedding_csv(narrow, {{"n0", 0, recidx::Vec(4, 0.1)}});
  CHECK(recidx_score_csv(f.model, narrow.c_str(), (f.dir + "/out.csv").c_str()) ==
        RECIDX_E_DATA);
  recidx_report* report = nullptr;
  CHECK(recidx_eval(f.model, (f.dir + "/missing.csv").c_str(), f.probe_csv.c_str(), nullptr,
                    nullptr, &report) == RECIDX_E_DATA);
}

namespace {

// Interprets the subset of JSON Schema the published schema uses: type,
// const, properties/required/additionalProperties, items, minimum/maximum.
void schema_check(const Json& schema, const Json& value, const std::string& path,
                  std::vector<std::string>& errors) {
  if (schema.contains("const") && value != schema.at("const")) {
    errors.push_back(path + ": const mismatch");
    return;
  }
  if (schema.contains("type")) {
    const auto matches = [&value](const std::string& t) {
      if (t == "null") return value.is_null();
      if (t == "object") return value.is_object();
      if (t == "array") return value.is_array();
      if (t == "string") return value.is_string();
      if (t == "boolean") return value.is_boolean();
      if (t == "integer") return value.is_number_integer();
      if (t == "number") return value.is_number();
      return false;
    };
    const Json& t = schema.at("type");
    bool ok = false;
    if (t.is_string()) {
      ok = matches(t.get<std::string>());
    } else {
      for (const Json& alt : t) ok = ok || matches(alt.get<std::string>());
    }
    if (!ok) {
      errors.push_back(path + ": type mismatch");
      return;
    }
  }
  if (value.is_number() && schema.contains("minimum") &&
      value.get<double>() < schema.at("minimum").get<double>()) {
    errors.push_back(path + ": below minimum");
  }
  if (value.is_number() && schema.contains("maximum") &&
      value.get<double>() > schema.at("maximum").get<double>()) {
    errors.push_back(path + ": above maximum");
  }
  if (value.is_object()) {
    if (schema.contains("required")) {
      for (const Json& key : schema.at("required")) {
        if (!value.contains(key.get<std::string>())) {
          errors.push_back(path + ": missing " + key.get<std::string>());
        }
      }
    }
    const Json props = schema.value("properties", Json::object());
    for (const auto& [key, sub] : value.items()) {
      if (props.contains(key)) {
        schema_check(props.at(key), sub, path + "." + key, errors);
      } else if (schema.value("additionalProperties", Json(true)) == Json(false)) {
        errors.push_back(path + ": unexpected " + key);
      }
    }
  }
  if (value.is_array() && schema.contains("items")) {
    for (std::size_t i = 0; i < value.size(); ++i) {
      schema_check(schema.at("items"), value[i], path + "[" + std::to_string(i) + "]", errors);
    }
  }
}

}  // namespace

TEST_CASE("report JSON conforms to the published schema") {
  Flow& f = flow();
  const Json schema = Json::parse(slurp(RECIDX_SCHEMA_PATH));

  recidx_report* report = nullptr;
  REQUIRE(recidx_eval(f.model, f.gallery_csv.c_str(), f.probe_csv.c_str(), f.ui_csv.c_str(),
                      nullptr, &report) == RECIDX_OK);
  char* j = nullptr;
  REQUIRE(recidx_report_json(report, &j) == RECIDX_OK);
  const Json full = Json::parse(take(j));
  recidx_report_free(report);

  std::vector<std::string> errors;
  schema_check(schema, full, "report", errors);
  for (const std::string& e : errors) FAIL_CHECK(e);
  CHECK(errors.empty());

  // a trimmed report (null sections) must satisfy the same schema
  REQUIRE(recidx_eval(f.model, f.gallery_csv.c_str(), f.probe_csv.c_str(), nullptr,
                      R"({"metrics": ["rank1"]})", &report) == RECIDX_OK);
  REQUIRE(recidx_report_json(report, &j) == RECIDX_OK);
  const Json trimmed = Json::parse(take(j));
  recidx_report_free(report);
  errors.clear();
  schema_check(schema, trimmed, "trimmed", errors);
  for (const std::string& e : errors) FAIL_CHECK(e);
  CHECK(errors.empty());
}
