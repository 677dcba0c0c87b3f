#pragma once

#include <initializer_list>
#include <string>

#include "json.hpp"

#include "eval.hpp"
#include "losses.hpp"
#include "model.hpp"
#include "synth.hpp"
#include "trainer.hpp"

namespace recidx {

using Json = nlohmann::json;

Json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const Json& doc);

Json parse_json_text(const std::string& text, const char* what);
void check_json_keys(const Json& obj, std::initializer_list<const char*> allowed,
                     const char* where);

// every *_from_json rejects unknown keys with a named diagnostic
Json ui_to_json(const UIClusterModel& ui, int dim);
UIClusterModel ui_from_json(const Json& doc);

Json loss_config_to_json(const LossConfig& cfg);
LossConfig loss_config_from_json(const Json& doc);

Json synth_config_to_json(const SynthConfig& cfg);
SynthConfig synth_config_from_json(const Json& doc);

TrainConfig train_config_from_json(const Json& doc);

void save_checkpoint(const std::string& path, const ModelState& model);
ModelState load_checkpoint(const std::string& path);

Json eval_report_to_json(const EvalReport& report);

}  // namespace recidx
