#include "serde.hpp"

#include <fstream>
#include <initializer_list>
#include <string>

namespace recidx {

void check_json_keys(const Json& obj, std::initializer_list<const char*> allowed,
                     const char* where) {
  if (!obj.is_object()) {
    fail(Err::ConfigError, std::string(where) + ": expected a JSON object");
  }
  for (const auto& [key, value] : obj.items()) {
    bool known = false;
    for (const char* a : allowed) {
      if (key == a) {
        known = true;
        break;
      }
    }
    if (!known) {
      fail(Err::ConfigError, std::string(where) + ": unknown key '" + key + "'");
    }
  }
}

namespace {

template <typename T>
T jget(const Json& obj, const char* key, const T& dflt, const char* where) {
  if (!obj.contains(key)) return dflt;
  try {
    return obj.at(key).get<T>();
  } catch (const Json::exception&) {
    fail(Err::ConfigError, std::string(where) + ": key '" + key + "' has the wrong type");
  }
}

template <typename T>
T jrequire(const Json& obj, const char* key, const char* where, Err err = Err::ConfigError) {
  if (!obj.contains(key)) {
    fail(err, std::string(where) + ": missing key '" + key + "'");
  }
  try {
    return obj.at(key).get<T>();
  } catch (const Json::exception&) {
    fail(err, std::string(where) + ": key '" + key + "' has the wrong type");
  }
}

ModelState load_checkpoint_body(const Json& doc);

Json matrix_to_json(const Matrix& m) { return Json(m.values); }

Matrix matrix_from_json(const Json& doc, int rows, int cols, const char* what) {
  Matrix m(rows, cols);
  Vec values;
  try {
    values = doc.get<Vec>();
  } catch (const Json::exception&) {
    fail(Err::IoError, std::string("checkpoint: ") + what + " is not a float array");
  }
  if (values.size() != m.values.size()) {
    fail(Err::IoError, std::string("checkpoint: ") + what + " has " +
                           std::to_string(values.size()) + " values, expected " +
                           std::to_string(m.values.size()));
  }
  m.values = std::move(values);
  return m;
}

Vec vec_from_json(const Json& doc, std::size_t size, const char* what) {
  Vec values;
  try {
    values = doc.get<Vec>();
  } catch (const Json::exception&) {
    fail(Err::IoError, std::string("checkpoint: ") + what + " is not a float array");
  }
  if (values.size() != size) {
    fail(Err::IoError, std::string("checkpoint: ") + what + " has " +
                           std::to_string(values.size()) + " values, expected " +
                           std::to_string(size));
  }
  return values;
}

}  // namespace

Json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Err::IoError, "cannot open '" + path + "' for reading");
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    fail(Err::ConfigError, "'" + path + "': " + e.what());
  }
}

Json parse_json_text(const std::string& text, const char* what) {
  try {
    return Json::parse(text);
  } catch (const Json::exception& e) {
    fail(Err::ConfigError, std::string(what) + ": " + e.what());
  }
}

void write_json_file(const std::string& path, const Json& doc) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Err::IoError, "cannot open '" + path + "' for writing");
  out << doc.dump(2) << "\n";
  out.flush();
  if (!out) fail(Err::IoError, "write failed for '" + path + "'");
}

Json ui_to_json(const UIClusterModel& ui, int dim) {
  Json doc;
  doc["dim"] = dim;
  doc["center"] = ui.center;
  doc["mu_ui"] = ui.mu_ui;
  doc["sigma_ui"] = ui.sigma_ui;
  doc["mode"] = ui_mode_name(ui.mode);
  doc["K"] = ui.sample_count;
  return doc;
}

UIClusterModel ui_from_json(const Json& doc) {
  check_json_keys(doc, {"dim", "center", "mu_ui", "sigma_ui", "mode", "K"}, "ui model");
  UIClusterModel ui;
  const int dim = jrequire<int>(doc, "dim", "ui model", Err::IoError);
  ui.center = vec_from_json(doc.at("center"), static_cast<std::size_t>(dim), "ui center");
  ui.mu_ui = jrequire<double>(doc, "mu_ui", "ui model", Err::IoError);
  ui.sigma_ui = jrequire<double>(doc, "sigma_ui", "ui model", Err::IoError);
  ui.mode = ui_mode_from_name(jrequire<std::string>(doc, "mode", "ui model", Err::IoError));
  ui.sample_count = jrequire<int>(doc, "K", "ui model", Err::IoError);
  return ui;
}

Json loss_config_to_json(const LossConfig& cfg) {
  Json doc;
  doc["epsilon"] = cfg.epsilon;
  doc["beta_smooth"] = cfg.beta_smooth;
  doc["tau"] = cfg.tau;
  doc["weight_l1"] = cfg.weight_l1;
  doc["weight_id"] = cfg.weight_id;
  doc["weight_mse"] = cfg.weight_mse;
  doc["arc_scale"] = cfg.arc_scale;
  doc["arc_margin"] = cfg.arc_margin;
  return doc;
}

LossConfig loss_config_from_json(const Json& doc) {
  check_json_keys(doc,
             {"epsilon", "beta_smooth", "tau", "weight_l1", "weight_id", "weight_mse",
              "arc_scale", "arc_margin"},
             "loss config");
  LossConfig cfg;
  cfg.epsilon = jget(doc, "epsilon", cfg.epsilon, "loss config");
  cfg.beta_smooth = jget(doc, "beta_smooth", cfg.beta_smooth, "loss config");
  cfg.tau = jget(doc, "tau", cfg.tau, "loss config");
  cfg.weight_l1 = jget(doc, "weight_l1", cfg.weight_l1, "loss config");
  cfg.weight_id = jget(doc, "weight_id", cfg.weight_id, "loss config");
  cfg.weight_mse = jget(doc, "weight_mse", cfg.weight_mse, "loss config");
  cfg.arc_scale = jget(doc, "arc_scale", cfg.arc_scale, "loss config");
  cfg.arc_margin = jget(doc, "arc_margin", cfg.arc_margin, "loss config");
  cfg.validate();
  return cfg;
}

Json synth_config_to_json(const SynthConfig& cfg) {
  Json doc;
  doc["num_classes"] = cfg.num_classes;
  doc["dim"] = cfg.dim;
  doc["instances_per_class"] = cfg.instances_per_class;
  doc["hard_fraction"] = cfg.hard_fraction;
  doc["hard_class_ids"] = cfg.hard_class_ids;
  doc["ui_count"] = cfg.ui_count;
  doc["concentration_easy"] = cfg.concentration_easy;
  doc["concentration_hard"] = cfg.concentration_hard;
  doc["ui_pull"] = cfg.ui_pull;
  doc["train_fraction"] = cfg.train_fraction;
  doc["gallery_fraction"] = cfg.gallery_fraction;
  doc["seed"] = cfg.seed;
  return doc;
}

SynthConfig synth_config_from_json(const Json& doc) {
  check_json_keys(doc,
             {"num_classes", "dim", "instances_per_class", "hard_fraction", "hard_class_ids",
              "ui_count", "concentration_easy", "concentration_hard", "ui_pull",
              "train_fraction", "gallery_fraction", "seed"},
             "synth config");
  SynthConfig cfg;
  cfg.num_classes = jget(doc, "num_classes", cfg.num_classes, "synth config");
  cfg.dim = jget(doc, "dim", cfg.dim, "synth config");
  cfg.instances_per_class =
      jget(doc, "instances_per_class", cfg.instances_per_class, "synth config");
  cfg.hard_fraction = jget(doc, "hard_fraction", cfg.hard_fraction, "synth config");
  cfg.hard_class_ids = jget(doc, "hard_class_ids", cfg.hard_class_ids, "synth config");
  cfg.ui_count = jget(doc, "ui_count", cfg.ui_count, "synth config");
  cfg.concentration_easy =
      jget(doc, "concentration_easy", cfg.concentration_easy, "synth config");
  cfg.concentration_hard =
      jget(doc, "concentration_hard", cfg.concentration_hard, "synth config");
  cfg.ui_pull = jget(doc, "ui_pull", cfg.ui_pull, "synth config");
  cfg.train_fraction = jget(doc, "train_fraction", cfg.train_fraction, "synth config");
  cfg.gallery_fraction = jget(doc, "gallery_fraction", cfg.gallery_fraction, "synth config");
  cfg.seed = jget(doc, "seed", cfg.seed, "synth config");
  cfg.validate();
  return cfg;
}

TrainConfig train_config_from_json(const Json& doc) {
  check_json_keys(doc,
             {"loss", "synth", "data_dir", "epochs", "batch_size", "lr_encoder",
              "lr_prototypes", "lr_attention", "lr_regression", "dropout",
              "ui_refresh_interval", "ui_mode", "ui_sample_count", "hidden_dim", "channels",
              "feat_h", "feat_w", "embed_dim", "reduction", "seed"},
             "train config");
  TrainConfig cfg;
  if (doc.contains("loss")) cfg.loss = loss_config_from_json(doc.at("loss"));
  if (doc.contains("synth") && doc.contains("data_dir")) {
    fail(Err::ConfigError, "train config: give either 'synth' or 'data_dir', not both");
  }
  if (doc.contains("synth")) cfg.synth = synth_config_from_json(doc.at("synth"));
  cfg.data_dir = jget<std::string>(doc, "data_dir", cfg.data_dir, "train config");
  cfg.epochs = jget(doc, "epochs", cfg.epochs, "train config");
  cfg.batch_size = jget(doc, "batch_size", cfg.batch_size, "train config");
  cfg.lr_encoder = jget(doc, "lr_encoder", cfg.lr_encoder, "train config");
  cfg.lr_prototypes = jget(doc, "lr_prototypes", cfg.lr_prototypes, "train config");
  cfg.lr_attention = jget(doc, "lr_attention", cfg.lr_attention, "train config");
  cfg.lr_regression = jget(doc, "lr_regression", cfg.lr_regression, "train config");
  cfg.dropout = jget(doc, "dropout", cfg.dropout, "train config");
  cfg.ui_refresh_interval =
      jget(doc, "ui_refresh_interval", cfg.ui_refresh_interval, "train config");
  if (doc.contains("ui_mode")) {
    cfg.ui_mode = ui_mode_from_name(jrequire<std::string>(doc, "ui_mode", "train config"));
  }
  cfg.ui_sample_count = jget(doc, "ui_sample_count", cfg.ui_sample_count, "train config");
  cfg.hidden_dim = jget(doc, "hidden_dim", cfg.hidden_dim, "train config");
  cfg.channels = jget(doc, "channels", cfg.channels, "train config");
  cfg.feat_h = jget(doc, "feat_h", cfg.feat_h, "train config");
  cfg.feat_w = jget(doc, "feat_w", cfg.feat_w, "train config");
  cfg.embed_dim = jget(doc, "embed_dim", cfg.embed_dim, "train config");
  cfg.reduction = jget(doc, "reduction", cfg.reduction, "train config");
  cfg.seed = jget(doc, "seed", cfg.seed, "train config");
  cfg.validate();
  return cfg;
}

void save_checkpoint(const std::string& path, const ModelState& model) {
  Json doc;
  doc["format"] = "recidx-checkpoint-v1";
  Json dims;
  dims["input_dim"] = model.dims.input_dim;
  dims["hidden_dim"] = model.dims.hidden_dim;
  dims["channels"] = model.dims.channels;
  dims["feat_h"] = model.dims.feat_h;
  dims["feat_w"] = model.dims.feat_w;
  dims["embed_dim"] = model.dims.embed_dim;
  dims["reduction"] = model.dims.reduction;
  dims["num_classes"] = model.dims.num_classes;
  doc["dims"] = dims;

  Json enc;
  enc["w_hidden"] = matrix_to_json(model.encoder.w_hidden);
  enc["b_hidden"] = model.encoder.b_hidden;
  enc["w_feat"] = matrix_to_json(model.encoder.w_feat);
  enc["b_feat"] = model.encoder.b_feat;
  enc["w_embed"] = matrix_to_json(model.encoder.w_embed);
  enc["b_embed"] = model.encoder.b_embed;
  doc["encoder"] = enc;

  doc["prototypes"] = model.prototypes.prototypes;

  Json attn;
  attn["w0"] = model.attention.w0;
  attn["w1"] = model.attention.w1;
  attn["spatial_kernel"] = model.attention.spatial_kernel;
  attn["head_w"] = matrix_to_json(model.attention.head_w);
  attn["head_b"] = model.attention.head_b;
  doc["attention"] = attn;

  Json reg;
  reg["w"] = model.reg_w;
  reg["b"] = model.reg_b;
  doc["regression"] = reg;

  doc["ui"] = model.ui_valid ? ui_to_json(model.ui, model.dims.embed_dim) : Json(nullptr);
  doc["loss_config"] = loss_config_to_json(model.loss);
  doc["seed"] = model.seed;
  doc["step"] = model.step;
  write_json_file(path, doc);
}

ModelState load_checkpoint(const std::string& path) {
  const Json doc = read_json_file(path);
  if (!doc.is_object() || jget<std::string>(doc, "format", "", "checkpoint") !=
                              "recidx-checkpoint-v1") {
    fail(Err::IoError, "'" + path + "' is not a recidx checkpoint");
  }
  try {
    return load_checkpoint_body(doc);
  } catch (const Json::exception& e) {
    fail(Err::IoError, "'" + path + "': malformed checkpoint: " + e.what());
  }
}

namespace {

ModelState load_checkpoint_body(const Json& doc) {
  if (!doc.contains("dims") || !doc.at("dims").is_object()) {
    fail(Err::IoError, "checkpoint: missing dims");
  }
  const Json& dims_doc = doc.at("dims");
  ModelDims dims;
  dims.input_dim = jrequire<int>(dims_doc, "input_dim", "checkpoint dims", Err::IoError);
  dims.hidden_dim = jrequire<int>(dims_doc, "hidden_dim", "checkpoint dims", Err::IoError);
  dims.channels = jrequire<int>(dims_doc, "channels", "checkpoint dims", Err::IoError);
  dims.feat_h = jrequire<int>(dims_doc, "feat_h", "checkpoint dims", Err::IoError);
  dims.feat_w = jrequire<int>(dims_doc, "feat_w", "checkpoint dims", Err::IoError);
  dims.embed_dim = jrequire<int>(dims_doc, "embed_dim", "checkpoint dims", Err::IoError);
  dims.reduction = jrequire<int>(dims_doc, "reduction", "checkpoint dims", Err::IoError);
  dims.num_classes = jrequire<int>(dims_doc, "num_classes", "checkpoint dims", Err::IoError);
  dims.validate();

  ModelState model;
  model.dims = dims;
  const Json& enc = doc.at("encoder");
  model.encoder.w_hidden =
      matrix_from_json(enc.at("w_hidden"), dims.hidden_dim, dims.input_dim, "w_hidden");
  model.encoder.b_hidden = vec_from_json(enc.at("b_hidden"),
                                         static_cast<std::size_t>(dims.hidden_dim), "b_hidden");
  model.encoder.w_feat =
      matrix_from_json(enc.at("w_feat"), dims.feat_total(), dims.hidden_dim, "w_feat");
  model.encoder.b_feat =
      vec_from_json(enc.at("b_feat"), static_cast<std::size_t>(dims.feat_total()), "b_feat");
  model.encoder.w_embed =
      matrix_from_json(enc.at("w_embed"), dims.embed_dim, dims.hidden_dim, "w_embed");
  model.encoder.b_embed =
      vec_from_json(enc.at("b_embed"), static_cast<std::size_t>(dims.embed_dim), "b_embed");

  if (!doc.contains("prototypes") || !doc.at("prototypes").is_array() ||
      doc.at("prototypes").size() != static_cast<std::size_t>(dims.num_classes)) {
    fail(Err::IoError, "checkpoint: prototypes must hold one vector per class");
  }
  model.prototypes.num_classes = dims.num_classes;
  model.prototypes.dim = dims.embed_dim;
  for (const Json& w : doc.at("prototypes")) {
    model.prototypes.prototypes.push_back(
        vec_from_json(w, static_cast<std::size_t>(dims.embed_dim), "prototype"));
  }
  model.prototypes.validate();

  const Json& attn = doc.at("attention");
  const int hidden_c = dims.channels / dims.reduction;
  model.attention = make_attention_params(dims.channels, dims.reduction, dims.feat_h,
                                          dims.feat_w, dims.embed_dim);
  model.attention.w0 = vec_from_json(attn.at("w0"), static_cast<std::size_t>(hidden_c), "w0");
  model.attention.w1 = vec_from_json(attn.at("w1"), static_cast<std::size_t>(hidden_c), "w1");
  model.attention.spatial_kernel =
      vec_from_json(attn.at("spatial_kernel"), 2 * 3 * 3, "spatial_kernel");
  model.attention.head_w =
      matrix_from_json(attn.at("head_w"), dims.embed_dim, dims.feat_total(), "head_w");
  model.attention.head_b =
      vec_from_json(attn.at("head_b"), static_cast<std::size_t>(dims.embed_dim), "head_b");
  model.attention.validate();

  const Json& reg = doc.at("regression");
  model.reg_w = vec_from_json(reg.at("w"), static_cast<std::size_t>(dims.feat_total()),
                              "regression w");
  model.reg_b = jrequire<double>(reg, "b", "checkpoint regression", Err::IoError);

  if (doc.contains("ui") && !doc.at("ui").is_null()) {
    model.ui = ui_from_json(doc.at("ui"));
    if (static_cast<int>(model.ui.center.size()) != dims.embed_dim) {
      fail(Err::IoError, "checkpoint: ui center dim mismatch");
    }
    model.ui_valid = true;
  } else {
    model.ui.center.assign(static_cast<std::size_t>(dims.embed_dim), 0.0);
    model.ui.center[0] = 1.0;
    model.ui_valid = false;
  }
  model.loss = loss_config_from_json(doc.at("loss_config"));
  model.seed = jget<std::uint64_t>(doc, "seed", 0, "checkpoint");
  model.step = jget<long>(doc, "step", 0, "checkpoint");
  return model;
}

}  // namespace

Json eval_report_to_json(const EvalReport& report) {
  Json doc;
  doc["format"] = "recidx-eval-report-v1";
  doc["rank1_ir"] = report.has_rank1 ? Json(report.rank1) : Json(nullptr);

  if (report.tpr_at_far.empty()) {
    doc["tpr_at_far"] = nullptr;
  } else {
    Json arr = Json::array();
    for (const auto& [far, tpr] : report.tpr_at_far) {
      arr.push_back(Json{{"far", far}, {"tpr", tpr}});
    }
    doc["tpr_at_far"] = arr;
  }

  if (report.tpir_at_fpir.empty()) {
    doc["tpir_at_fpir"] = nullptr;
  } else {
    Json arr = Json::array();
    for (const auto& [fpir, tpir] : report.tpir_at_fpir) {
      arr.push_back(Json{{"fpir", fpir}, {"tpir", tpir}});
    }
    doc["tpir_at_fpir"] = arr;
  }
  doc["rank"] = report.rank;

  if (report.erc_points.empty()) {
    doc["erc"] = nullptr;
  } else {
    Json arr = Json::array();
    for (const auto& [r, fnmr] : report.erc_points) {
      arr.push_back(Json{{"reject_fraction", r}, {"fnmr", fnmr}});
    }
    doc["erc"] = arr;
  }

  Json ri;
  ri["mean"] = report.ri.mean;
  ri["skewness"] = report.ri.skew_valid ? Json(report.ri.skew) : Json(nullptr);
  ri["histogram"] =
      Json{{"lo", report.ri.lo}, {"hi", report.ri.hi}, {"counts", report.ri.counts}};
  doc["ri_stats"] = ri;

  Json counts;
  counts["gallery"] = report.n_gallery;
  counts["probes"] = report.n_probes;
  counts["unmated_probes"] = report.n_unmated_probes;
  counts["mated_pairs"] = report.n_mated_pairs;
  counts["nonmated_pairs"] = report.n_nonmated_pairs;
  doc["counts"] = counts;
  return doc;
}

}  // namespace recidx
