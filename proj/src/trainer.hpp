#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "csv_io.hpp"
#include "losses.hpp"
#include "model.hpp"
#include "synth.hpp"

namespace recidx {

struct TrainConfig {
  LossConfig loss;
  SynthConfig synth;
  std::string data_dir;  // when set, train/ui CSVs are read instead of generating

  int epochs = 30;
  int batch_size = 16;
  double lr_encoder = 0.005;
  double lr_prototypes = 0.01;
  double lr_attention = 0.02;
  double lr_regression = 0.01;
  double dropout = 0.9;  // drop probability on the regression-head input
  int ui_refresh_interval = 1;
  UIMode ui_mode = UIMode::StandardNormal;
  int ui_sample_count = kDefaultUISampleCount;

  int hidden_dim = 64;
  int channels = 16;
  int feat_h = 4;
  int feat_w = 4;
  int embed_dim = 32;
  int reduction = 4;

  std::uint64_t seed = 1;

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;
  double l_cls = 0.0;
  double l_l1 = 0.0;
  double l_id = 0.0;
  double l_mse = 0.0;
  double l_total = 0.0;
  double mean_ri_hard = 0.0;  // NaN when no hard instance exists
  double mean_ri_easy = 0.0;
  int ui_snapshot_epoch = 0;            // epoch whose refresh produced the active UI model
  double diversion_below_tau = 0.0;     // monitored fraction with div < tau
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  long easy_margin_events = 0;
};

struct TrainInstance {
  std::string id;
  int label = 0;
  bool is_hard = false;
  Vec input;
};

struct TrainData {
  std::vector<TrainInstance> train;
  std::vector<Vec> ui_inputs;
  int input_dim = 0;
  int num_classes = 0;
};

struct TrainResult {
  ModelState model;
  TrainHistory history;
};

TrainData load_train_data(const TrainConfig& cfg);
ModelState init_from_config(const TrainConfig& cfg, const TrainData& data);
void refresh_ui_model(ModelState& model, const std::vector<Vec>& ui_inputs,
                      const TrainConfig& cfg, int epoch);

// Mean of the four-term objective over the batch, dropout off; diagnostic surface.
double batch_total_loss(const ModelState& model, const std::vector<TrainInstance>& batch,
                        const LossConfig& loss_cfg);

TrainResult train(const TrainConfig& cfg);

std::vector<RecognizabilityRecord> score(const ModelState& model,
                                         const std::vector<CsvRecord>& inputs);

// Evaluation-side view of a model: unit embedding plus predicted quality per row.
struct ScoredEmbedding {
  std::string id;
  int label = kUnlabeled;
  Vec v_hat;
  double xi_hat = 0.0;
};

std::vector<ScoredEmbedding> embed_and_score(const ModelState& model,
                                             const std::vector<CsvRecord>& inputs);

std::string history_csv_string(const TrainHistory& history);
void write_history_csv(const std::string& path, const TrainHistory& history);
void write_score_csv(const std::string& path, const std::vector<RecognizabilityRecord>& records);

}  // namespace recidx
