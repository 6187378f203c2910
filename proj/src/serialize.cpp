#include "hlearner/serialize.hpp"

#include <stdexcept>

#include "hlearner/text.hpp"

namespace hl {
namespace {

using nlohmann::json;

json shape_to_json(const NetShape& s) {
  return {{"layer_sizes", s.layer_sizes()}, {"activation", to_string(s.activation())}};
}

NetShape shape_from_json(const json& j) {
  return NetShape(j.at("layer_sizes").get<std::vector<Index>>(),
                  activation_from_string(j.at("activation").get<std::string>()));
}

json vector_to_json(const Eigen::VectorXd& v) {
  return json(std::vector<double>(v.data(), v.data() + v.size()));
}

Eigen::VectorXd vector_from_json(const json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Index>(values.size()));
}

json net_to_json(const NetShape& s, const Eigen::VectorXd& params) {
  return {{"shape", shape_to_json(s)}, {"params", vector_to_json(params)}};
}

std::vector<Index> widths(const json& j, const char* key) {
  auto w = j.get<std::vector<Index>>();
  if (w.empty()) throw std::invalid_argument(std::string(key) + " must list at least one width");
  return w;
}

}  // namespace

json train_config_to_json(const TrainConfig& cfg) {
  return {{"learning_rate", cfg.learning_rate},
          {"embedding_size", cfg.embedding_size},
          {"hypernet_hidden", cfg.hypernet_hidden},
          {"target_hidden", cfg.target_hidden},
          {"baseline_hidden", cfg.baseline_hidden},
          {"batch_size", cfg.batch_size},
          {"max_epochs", cfg.max_epochs},
          {"validation_fraction", cfg.validation_fraction},
          {"patience", cfg.patience},
          {"hypernet_output_scale", cfg.hypernet_output_scale},
          {"seed", cfg.seed}};
}

TrainConfig train_config_from_json(const json& j, TrainConfig cfg) {
  if (!j.is_object()) throw std::invalid_argument("train config must be an object");
  for (const auto& [key, value] : j.items()) {
    if (key == "learning_rate") cfg.learning_rate = value.get<double>();
    else if (key == "embedding_size") cfg.embedding_size = value.get<Index>();
    else if (key == "hypernet_hidden") cfg.hypernet_hidden = widths(value, "hypernet_hidden");
    else if (key == "target_hidden") cfg.target_hidden = widths(value, "target_hidden");
    else if (key == "baseline_hidden") cfg.baseline_hidden = widths(value, "baseline_hidden");
    else if (key == "batch_size") cfg.batch_size = value.get<Index>();
    else if (key == "max_epochs") cfg.max_epochs = value.get<Index>();
    else if (key == "validation_fraction") cfg.validation_fraction = value.get<double>();
    else if (key == "patience") cfg.patience = value.get<Index>();
    else if (key == "hypernet_output_scale") cfg.hypernet_output_scale = value.get<double>();
    else if (key == "seed") cfg.seed = value.get<std::uint64_t>();
    else throw std::invalid_argument("unknown train config key '" + key + "'");
  }
  cfg.validate();
  return cfg;
}

std::string model_to_json(const Model& model, const TrainConfig& cfg) {
  json j;
  j["format"] = "hlearner-model";
  j["version"] = 1;
  j["kind"] = to_string(kind_of(model));
  j["train_config"] = train_config_to_json(cfg);
  if (const auto* h = std::get_if<HLearnerModel>(&model)) {
    const auto& e = h->embedder();
    j["embedding"] = {{"treatment", net_to_json(e.treatment_shape, e.treatment_params)},
                      {"outcome", net_to_json(e.outcome_shape, e.outcome_params)}};
    j["hypernet"] = net_to_json(h->hypernet_shape(), h->hypernet_params());
    j["target_shape"] = shape_to_json(h->target_shape());
  } else {
    const auto& b = std::get<BaselineModel>(model);
    j["p"] = b.p;
    j["K"] = b.K;
    j["M"] = b.M;
    j["nets"] = json::array();
    for (std::size_t i = 0; i < b.shapes.size(); ++i)
      j["nets"].push_back(net_to_json(b.shapes[i], b.params[i]));
  }
  return j.dump();
}

SavedModel model_from_json(std::string_view text) {
  const json j = json::parse(text);
  if (j.value("format", "") != "hlearner-model")
    throw std::invalid_argument("not a model document");
  const LearnerKind kind = learner_from_string(j.at("kind").get<std::string>());
  const TrainConfig cfg = train_config_from_json(j.at("train_config"));
  if (kind == LearnerKind::HLearner) {
    const json& e = j.at("embedding");
    EmbedderParams emb{shape_from_json(e.at("treatment").at("shape")),
                       shape_from_json(e.at("outcome").at("shape")),
                       vector_from_json(e.at("treatment").at("params")),
                       vector_from_json(e.at("outcome").at("params"))};
    HLearnerModel model(std::move(emb), shape_from_json(j.at("hypernet").at("shape")),
                        vector_from_json(j.at("hypernet").at("params")),
                        shape_from_json(j.at("target_shape")));
    return {std::move(model), cfg};
  }
  BaselineModel b;
  b.kind = kind;
  b.p = j.at("p").get<Index>();
  b.K = j.at("K").get<Index>();
  b.M = j.at("M").get<Index>();
  for (const auto& net : j.at("nets")) {
    b.shapes.push_back(shape_from_json(net.at("shape")));
    b.params.push_back(vector_from_json(net.at("params")));
  }
  b.validate();
  return {std::move(b), cfg};
}

void save_model(const Model& model, const TrainConfig& cfg, const std::filesystem::path& path) {
  write_text_file(path, model_to_json(model, cfg) + "\n");
}

SavedModel load_model(const std::filesystem::path& path) {
  return model_from_json(read_text_file(path));
}

}  // namespace hl
