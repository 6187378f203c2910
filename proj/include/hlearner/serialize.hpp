#pragma once

// Structured-text (JSON) forms of training configs and trained models.
//
// Model document:
//   {"format": "hlearner-model", "version": 1, "kind": "HLearner" | "SLearner" | "XSLearner",
//    "train_config": {...},
//    HLearner:  "embedding": {"treatment": net, "outcome": net}, "hypernet": net,
//               "target_shape": shape
//    baselines: "p", "K", "M", "nets": [net, ...]}
// where shape = {"layer_sizes": [...], "activation": "elu" | "identity"} and
// net = {"shape": shape, "params": [...canonical layout...]}.
// Doubles are written in shortest round-trip form, so reloading reproduces
// predictions bit for bit.

#include <filesystem>
#include <string>
#include <string_view>

#include <json.hpp>

#include "hlearner/learners.hpp"

namespace hl {

nlohmann::json train_config_to_json(const TrainConfig& cfg);
/// Overlays the keys present in `j` onto `base`. Unknown keys are errors.
TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig base = {});

struct SavedModel {
  Model model;
  TrainConfig config;
};

std::string model_to_json(const Model& model, const TrainConfig& cfg);
SavedModel model_from_json(std::string_view text);
void save_model(const Model& model, const TrainConfig& cfg, const std::filesystem::path& path);
SavedModel load_model(const std::filesystem::path& path);

}  // namespace hl
