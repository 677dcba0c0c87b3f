#include "trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "log.hpp"
#include "rng.hpp"

namespace recidx {

namespace {

constexpr std::uint64_t kStreamShuffle = 1;
constexpr std::uint64_t kStreamUiFit = 2;
constexpr std::uint64_t kStreamDropout = 3;

struct AdamState {
  Vec m;
  Vec v;
  long t = 0;
};

void adam_step(const std::vector<double*>& params, const std::vector<double*>& grads,
               AdamState& state, double lr) {
  constexpr double b1 = 0.9;
  constexpr double b2 = 0.999;
  constexpr double eps = 1e-8;
  if (state.m.empty()) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
  }
  ++state.t;
  const double bias1 = 1.0 - std::pow(b1, static_cast<double>(state.t));
  const double bias2 = 1.0 - std::pow(b2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = *grads[i];
    state.m[i] = b1 * state.m[i] + (1.0 - b1) * g;
    state.v[i] = b2 * state.v[i] + (1.0 - b2) * g * g;
    *params[i] -= lr * (state.m[i] / bias1) / (std::sqrt(state.v[i] / bias2) + eps);
  }
}

struct Workspace {
  EncoderGrads enc;
  std::vector<Vec> protos;
  AttentionGrads attn;
  Vec reg_w;
  double reg_b = 0.0;
};

Workspace make_workspace(const ModelState& m) {
  Workspace ws;
  ws.enc = make_encoder_grads(m.encoder);
  ws.protos.assign(m.prototypes.prototypes.size(),
                   Vec(static_cast<std::size_t>(m.prototypes.dim), 0.0));
  ws.attn = make_attention_grads(m.attention);
  ws.reg_w.assign(m.reg_w.size(), 0.0);
  return ws;
}

void zero_grads(const std::vector<double*>& ptrs) {
  for (double* p : ptrs) *p = 0.0;
}

struct InstanceLosses {
  double l_cls = 0.0;
  double l_l1 = 0.0;
  double l_id = 0.0;
  double l_mse = 0.0;
  bool easy_margin = false;
};

// Forward pass through all four terms; when `ws` is set, also backward with
// every per-instance gradient scaled by `scale` (1/B). `mask` is the inverted
// dropout mask over the regression input (null = inference, all-ones).
InstanceLosses process_instance(const ModelState& model, const TrainInstance& inst,
                                const LossConfig& lc, const Vec* mask, double scale,
                                Workspace* ws) {
  const EncoderCache cache = encoder_forward(model.encoder, inst.input);
  const Vec v_hat = l2_normalize(cache.embed);

  const ArcfaceResult arc =
      arcface_loss(v_hat, model.prototypes, inst.label, lc.arc_scale, lc.arc_margin);

  // regression target: constant w.r.t. every parameter group
  const ProximityTriple triple =
      proximity_triple(cache.embed, model.prototypes, inst.label, model.ui);
  const double xi = recognizability_index(triple, lc.epsilon);

  Vec masked = cache.feat_flat;
  if (mask != nullptr) {
    for (std::size_t i = 0; i < masked.size(); ++i) masked[i] *= (*mask)[i];
  }
  const double xi_hat = dot(model.reg_w, masked) + model.reg_b;

  const ScalarLoss l1 = smooth_l1(xi, xi_hat, lc.beta_smooth);
  const ScalarLoss id = index_diversion_loss(xi_hat, model.ui, lc.tau);

  const AttentionCache attn_cache = attention_forward(
      reshape_to_map(cache.feat_flat, model.dims.channels, model.dims.feat_h,
                     model.dims.feat_w),
      model.attention);
  const Vec v_prime = ui_projection(cache.embed, model.ui.center);  // constant target
  const MseResult mse = projection_mse(v_prime, attn_cache.v_attn);

  InstanceLosses out;
  out.l_cls = arc.loss;
  out.l_l1 = l1.loss;
  out.l_id = id.loss;
  out.l_mse = mse.loss;
  out.easy_margin = arc.easy_margin_fallback;
  if (ws == nullptr) return out;

  // regression head and its dropout path
  const double dxi_hat = scale * (lc.weight_l1 * l1.dloss_dxi_hat + lc.weight_id * id.dloss_dxi_hat);
  Vec grad_feat(cache.feat_flat.size(), 0.0);
  ws->reg_b += dxi_hat;
  for (std::size_t i = 0; i < masked.size(); ++i) {
    ws->reg_w[i] += dxi_hat * masked[i];
    grad_feat[i] = dxi_hat * model.reg_w[i] * (mask != nullptr ? (*mask)[i] : 1.0);
  }

  // attention branch
  Vec grad_v_attn = mse.grad_v_attn;
  for (double& g : grad_v_attn) g *= scale * lc.weight_mse;
  const FeatureMap grad_attn_in =
      attention_backward(model.attention, attn_cache, grad_v_attn, ws->attn);
  axpy(grad_feat, 1.0, grad_attn_in.values);

  // classification branch, through the embedding normalization
  Vec grad_v_hat = arc.grad_v;
  for (double& g : grad_v_hat) g *= scale;
  const Vec grad_embed = l2_normalize_vjp(cache.embed, grad_v_hat);
  for (std::size_t j = 0; j < ws->protos.size(); ++j) {
    axpy(ws->protos[j], scale, arc.grad_prototypes[j]);
  }

  encoder_backward(model.encoder, cache, grad_feat, grad_embed, ws->enc);
  return out;
}

double xi_hat_of(const ModelState& m, const Vec& input) {
  const EncoderCache cache = encoder_forward(m.encoder, input);
  return dot(m.reg_w, cache.feat_flat) + m.reg_b;
}

}  // namespace

void TrainConfig::validate() const {
  loss.validate();
  if (batch_size < 2) fail(Err::ConfigError, "TrainConfig: batch_size must be >= 2");
  if (epochs < 1) fail(Err::ConfigError, "TrainConfig: epochs must be >= 1");
  if (!(lr_encoder > 0.0) || !(lr_prototypes > 0.0) || !(lr_attention > 0.0) ||
      !(lr_regression > 0.0)) {
    fail(Err::ConfigError, "TrainConfig: learning rates must be > 0");
  }
  if (dropout < 0.0 || dropout >= 1.0) {
    fail(Err::ConfigError, "TrainConfig: dropout must lie in [0, 1)");
  }
  if (ui_refresh_interval < 1) {
    fail(Err::ConfigError, "TrainConfig: ui_refresh_interval must be >= 1");
  }
  if (ui_mode == UIMode::Empirical && ui_sample_count < 2) {
    fail(Err::ConfigError, "TrainConfig: empirical UI fit needs ui_sample_count >= 2");
  }
}

TrainData load_train_data(const TrainConfig& cfg) {
  TrainData data;
  if (!cfg.data_dir.empty()) {
    const std::vector<CsvRecord> rows = read_embedding_csv(cfg.data_dir + "/train.csv");
    const std::vector<CsvRecord> ui_rows = read_embedding_csv(cfg.data_dir + "/ui.csv");
    if (rows.empty()) fail(Err::InsufficientData, "train.csv has no rows");
    if (ui_rows.empty()) fail(Err::EmptyUISet, "ui.csv has no rows");
    data.input_dim = static_cast<int>(rows.front().x.size());
    int max_label = -1;
    for (const CsvRecord& r : rows) {
      if (r.label < 0) {
        fail(Err::CsvError, "train.csv: instance '" + r.id + "' is unlabeled");
      }
      max_label = std::max(max_label, r.label);
      data.train.push_back({r.id, r.label, id_marks_hard(r.id), r.x});
    }
    data.num_classes = max_label + 1;
    for (const CsvRecord& r : ui_rows) {
      if (static_cast<int>(r.x.size()) != data.input_dim) {
        fail(Err::DimensionMismatch, "ui.csv dim differs from train.csv");
      }
      data.ui_inputs.push_back(r.x);
    }
  } else {
    const SynthDataset ds = generate(cfg.synth);
    data.input_dim = cfg.synth.dim;
    data.num_classes = cfg.synth.num_classes;
    for (const Instance* inst : split_view(ds, Split::Train)) {
      data.train.push_back({inst->id, inst->label, inst->is_hard, inst->input});
    }
    for (const Instance& inst : ds.ui) data.ui_inputs.push_back(inst.input);
  }
  if (data.num_classes < 2) {
    fail(Err::InsufficientData, "training data must cover at least 2 classes");
  }
  return data;
}

ModelState init_from_config(const TrainConfig& cfg, const TrainData& data) {
  ModelDims dims;
  dims.input_dim = data.input_dim;
  dims.hidden_dim = cfg.hidden_dim;
  dims.channels = cfg.channels;
  dims.feat_h = cfg.feat_h;
  dims.feat_w = cfg.feat_w;
  dims.embed_dim = cfg.embed_dim;
  dims.reduction = cfg.reduction;
  dims.num_classes = data.num_classes;
  ModelState model = init_model(dims, cfg.seed);
  model.loss = cfg.loss;
  model.seed = cfg.seed;
  return model;
}

void refresh_ui_model(ModelState& model, const std::vector<Vec>& ui_inputs,
                      const TrainConfig& cfg, int epoch) {
  std::vector<Vec> embeddings;
  std::vector<double> xi_hats;
  embeddings.reserve(ui_inputs.size());
  xi_hats.reserve(ui_inputs.size());
  for (const Vec& u : ui_inputs) {
    const EncoderCache cache = encoder_forward(model.encoder, u);
    embeddings.push_back(cache.embed);
    xi_hats.push_back(dot(model.reg_w, cache.feat_flat) + model.reg_b);
  }
  // fit_ui_cluster hands ri_source elements of the sequence it was given, so
  // the index recovers the paired regression output
  const auto ri_source = [&](const Vec& e) {
    return xi_hats[static_cast<std::size_t>(&e - embeddings.data())];
  };
  model.ui = fit_ui_cluster(embeddings, cfg.ui_mode, cfg.ui_sample_count, ri_source,
                            derive_seed(cfg.seed, kStreamUiFit, static_cast<std::uint64_t>(epoch)));
  model.ui_valid = true;
}

double batch_total_loss(const ModelState& model, const std::vector<TrainInstance>& batch,
                        const LossConfig& loss_cfg) {
  if (batch.empty()) fail(Err::InsufficientData, "batch_total_loss: empty batch");
  double cls = 0.0, l1 = 0.0, id = 0.0, mse = 0.0;
  for (const TrainInstance& inst : batch) {
    const InstanceLosses l = process_instance(model, inst, loss_cfg, nullptr, 0.0, nullptr);
    cls += l.l_cls;
    l1 += l.l_l1;
    id += l.l_id;
    mse += l.l_mse;
  }
  const double n = static_cast<double>(batch.size());
  return total_loss(cls / n, l1 / n, id / n, mse / n, loss_cfg);
}

TrainResult train(const TrainConfig& cfg) {
  cfg.validate();
  const TrainData data = load_train_data(cfg);
  TrainResult result;
  result.model = init_from_config(cfg, data);
  ModelState& model = result.model;

  std::vector<double*> enc_p = encoder_ptrs(model.encoder);
  std::vector<double*> attn_p = attention_ptrs(model.attention);
  std::vector<double*> proto_p;
  for (Vec& w : model.prototypes.prototypes) append_ptrs(proto_p, w);
  std::vector<double*> reg_p;
  append_ptrs(reg_p, model.reg_w);
  reg_p.push_back(&model.reg_b);

  Workspace ws = make_workspace(model);
  std::vector<double*> enc_g = encoder_ptrs(ws.enc);
  std::vector<double*> attn_g = attention_ptrs(ws.attn);
  std::vector<double*> proto_g;
  for (Vec& w : ws.protos) append_ptrs(proto_g, w);
  std::vector<double*> reg_g;
  append_ptrs(reg_g, ws.reg_w);
  reg_g.push_back(&ws.reg_b);

  std::vector<double*> all_grads;
  for (auto* group : {&enc_g, &attn_g, &proto_g, &reg_g}) {
    all_grads.insert(all_grads.end(), group->begin(), group->end());
  }

  AdamState adam_enc, adam_attn, adam_proto, adam_reg;
  const std::size_t n = data.train.size();
  const std::size_t feat_total = static_cast<std::size_t>(model.dims.feat_total());
  const double keep = 1.0 - cfg.dropout;
  int last_refresh = 0;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (epoch % cfg.ui_refresh_interval == 0) {
      refresh_ui_model(model, data.ui_inputs, cfg, epoch);
      last_refresh = epoch;
      log_debug("epoch " + std::to_string(epoch) + ": UI model refreshed");
    }

    std::iota(order.begin(), order.end(), std::size_t{0});
    DetRng shuffle_rng(derive_seed(cfg.seed, kStreamShuffle, static_cast<std::uint64_t>(epoch)));
    shuffle_rng.shuffle(order);
    DetRng dropout_rng(derive_seed(cfg.seed, kStreamDropout, static_cast<std::uint64_t>(epoch)));

    double ep_cls = 0.0, ep_l1 = 0.0, ep_id = 0.0, ep_mse = 0.0;
    Vec mask(feat_total, 1.0);

    for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t stop = std::min(n, start + static_cast<std::size_t>(cfg.batch_size));
      const double scale = 1.0 / static_cast<double>(stop - start);
      zero_grads(all_grads);

      double b_cls = 0.0, b_l1 = 0.0, b_id = 0.0, b_mse = 0.0;
      for (std::size_t k = start; k < stop; ++k) {
        const TrainInstance& inst = data.train[order[k]];
        for (std::size_t i = 0; i < feat_total; ++i) {
          mask[i] = dropout_rng.uniform01() < cfg.dropout ? 0.0 : 1.0 / keep;
        }
        const InstanceLosses l =
            process_instance(model, inst, cfg.loss, cfg.dropout > 0.0 ? &mask : nullptr,
                             scale, &ws);
        if (l.easy_margin) ++result.history.easy_margin_events;
        b_cls += l.l_cls;
        b_l1 += l.l_l1;
        b_id += l.l_id;
        b_mse += l.l_mse;
      }
      const double count = static_cast<double>(stop - start);
      const double batch_total =
          total_loss(b_cls / count, b_l1 / count, b_id / count, b_mse / count, cfg.loss);
      if (!std::isfinite(batch_total)) {
        fail(Err::DivergenceDetected, "train: non-finite loss at step " +
                                          std::to_string(model.step) + " (epoch " +
                                          std::to_string(epoch) + ")");
      }
      ep_cls += b_cls;
      ep_l1 += b_l1;
      ep_id += b_id;
      ep_mse += b_mse;

      double sq = 0.0;
      for (const double* g : all_grads) sq += (*g) * (*g);
      if (sq > 100.0) {  // global-norm clip at 10
        const double shrink = 10.0 / std::sqrt(sq);
        for (double* g : all_grads) *g *= shrink;
      }

      adam_step(enc_p, enc_g, adam_enc, cfg.lr_encoder);
      adam_step(attn_p, attn_g, adam_attn, cfg.lr_attention);
      adam_step(proto_p, proto_g, adam_proto, cfg.lr_prototypes);
      adam_step(reg_p, reg_g, adam_reg, cfg.lr_regression);
      model.prototypes.renormalize();
      ++model.step;
    }

    EpochRecord rec;
    rec.epoch = epoch;
    const double dn = static_cast<double>(n);
    rec.l_cls = ep_cls / dn;
    rec.l_l1 = ep_l1 / dn;
    rec.l_id = ep_id / dn;
    rec.l_mse = ep_mse / dn;
    rec.l_total = total_loss(rec.l_cls, rec.l_l1, rec.l_id, rec.l_mse, cfg.loss);
    rec.ui_snapshot_epoch = last_refresh;

    double hard_sum = 0.0, easy_sum = 0.0;
    std::size_t hard_n = 0, easy_n = 0, below = 0;
    for (const TrainInstance& inst : data.train) {
      const double xh = xi_hat_of(model, inst.input);
      if (inst.is_hard) {
        hard_sum += xh;
        ++hard_n;
      } else {
        easy_sum += xh;
        ++easy_n;
      }
      if ((xh - model.ui.mu_ui) / model.ui.sigma_ui < cfg.loss.tau) ++below;
    }
    rec.mean_ri_hard =
        hard_n > 0 ? hard_sum / hard_n : std::numeric_limits<double>::quiet_NaN();
    rec.mean_ri_easy =
        easy_n > 0 ? easy_sum / easy_n : std::numeric_limits<double>::quiet_NaN();
    rec.diversion_below_tau = static_cast<double>(below) / dn;
    result.history.epochs.push_back(rec);
    log_info("epoch " + std::to_string(epoch) + " l_total " + fmt_g17(rec.l_total));
  }
  return result;
}

std::vector<RecognizabilityRecord> score(const ModelState& model,
                                         const std::vector<CsvRecord>& inputs) {
  std::vector<RecognizabilityRecord> out;
  out.reserve(inputs.size());
  for (const CsvRecord& row : inputs) {
    if (static_cast<int>(row.x.size()) != model.dims.input_dim) {
      fail(Err::DimensionMismatch, "score: input '" + row.id + "' has dim " +
                                       std::to_string(row.x.size()) + ", model expects " +
                                       std::to_string(model.dims.input_dim));
    }
    const EncoderCache cache = encoder_forward(model.encoder, row.x);
    RecognizabilityRecord rec;
    rec.instance_id = row.id;
    rec.label = row.label;
    rec.xi_hat = dot(model.reg_w, cache.feat_flat) + model.reg_b;
    if (row.label >= 0 && row.label < model.prototypes.num_classes && model.ui_valid) {
      rec.triple = proximity_triple(cache.embed, model.prototypes, row.label, model.ui);
      rec.xi = recognizability_index(rec.triple, model.loss.epsilon);
      rec.has_triple = true;
    }
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<ScoredEmbedding> embed_and_score(const ModelState& model,
                                             const std::vector<CsvRecord>& inputs) {
  std::vector<ScoredEmbedding> out;
  out.reserve(inputs.size());
  for (const CsvRecord& row : inputs) {
    if (static_cast<int>(row.x.size()) != model.dims.input_dim) {
      fail(Err::DimensionMismatch, "embed: input '" + row.id + "' has dim " +
                                       std::to_string(row.x.size()) + ", model expects " +
                                       std::to_string(model.dims.input_dim));
    }
    const EncoderCache cache = encoder_forward(model.encoder, row.x);
    ScoredEmbedding item;
    item.id = row.id;
    item.label = row.label;
    item.v_hat = l2_normalize(cache.embed);
    item.xi_hat = dot(model.reg_w, cache.feat_flat) + model.reg_b;
    out.push_back(std::move(item));
  }
  return out;
}

std::string history_csv_string(const TrainHistory& history) {
  std::string out = "epoch,l_cls,l_l1,l_id,l_mse,l_total,mean_ri_hard,mean_ri_easy\n";
  for (const EpochRecord& r : history.epochs) {
    out += std::to_string(r.epoch);
    for (double v : {r.l_cls, r.l_l1, r.l_id, r.l_mse, r.l_total, r.mean_ri_hard,
                     r.mean_ri_easy}) {
      out += ',';
      out += fmt_g17(v);
    }
    out += '\n';
  }
  return out;
}

void write_history_csv(const std::string& path, const TrainHistory& history) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Err::IoError, "cannot open '" + path + "' for writing");
  out << history_csv_string(history);
  out.flush();
  if (!out) fail(Err::IoError, "write failed for '" + path + "'");
}

void write_score_csv(const std::string& path,
                     const std::vector<RecognizabilityRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Err::IoError, "cannot open '" + path + "' for writing");
  out << "id,label,xi_hat\n";
  for (const RecognizabilityRecord& r : records) {
    out << r.instance_id << ',' << r.label << ',' << fmt_g17(r.xi_hat) << "\n";
  }
  out.flush();
  if (!out) fail(Err::IoError, "write failed for '" + path + "'");
}

}  // namespace recidx
