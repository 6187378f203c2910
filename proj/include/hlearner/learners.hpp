#pragma once

// H-Learner and the S-Learner / xS-Learner baselines.
//
// H-Learner: a treatment-outcome pair (t, m) is embedded as
//   e = [A_t t + a_t ; A_y onehot_M(m) + a_y]        (treatment half first)
// the hypernetwork maps e to a flat parameter vector theta in the canonical
// layout of the target network, and the target network maps covariates x to
// the potential outcome y_m(t). Only the embedding maps and the hypernetwork
// are trainable; theta is recomputed on demand and never stored.

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "hlearner/data_gen.hpp"
#include "hlearner/nn.hpp"

namespace hl {

enum class LearnerKind { HLearner, SLearner, XSLearner };

std::string to_string(LearnerKind kind);
LearnerKind learner_from_string(std::string_view name);

struct TrainConfig {
  double learning_rate = 0.005;
  Index embedding_size = 32;
  std::vector<Index> hypernet_hidden{100, 100};
  std::vector<Index> target_hidden{32};
  std::vector<Index> baseline_hidden{100, 100};
  Index batch_size = 128;
  Index max_epochs = 300;
  double validation_fraction = 0.3;
  Index patience = 10;
  /// Multiplier on the hypernetwork's output-layer initial weights.
  double hypernet_output_scale = 0.1;
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument on a non-positive or out-of-range field.
  void validate() const;

  bool operator==(const TrainConfig&) const = default;
};

struct EmbedderParams {
  NetShape treatment_shape;  ///< [K, d_t], linear
  NetShape outcome_shape;    ///< [M, d_y], linear
  Eigen::VectorXd treatment_params;
  Eigen::VectorXd outcome_params;

  Index d_t() const { return treatment_shape.output_width(); }
  Index d_y() const { return outcome_shape.output_width(); }
  Index width() const { return d_t() + d_y(); }
};

/// Zero-initialized affine maps K -> d_t and M -> d_y.
EmbedderParams make_embedder(Index K, Index M, Index d_t, Index d_y);

class HLearnerModel {
 public:
  /// Validates that the hypernetwork input is the embedding width and its
  /// output is exactly param_count(target_shape).
  HLearnerModel(EmbedderParams embedder, NetShape hypernet_shape, Eigen::VectorXd hypernet_params,
                NetShape target_shape);

  /// Freshly initialized model for data with p covariates, K treatment
  /// components and M outcomes.
  static HLearnerModel create(Index p, Index K, Index M, const TrainConfig& cfg);

  const EmbedderParams& embedder() const { return embedder_; }
  const NetShape& hypernet_shape() const { return hypernet_shape_; }
  const Eigen::VectorXd& hypernet_params() const { return hypernet_params_; }
  const NetShape& target_shape() const { return target_shape_; }

  Index p() const { return target_shape_.input_width(); }
  Index K() const { return embedder_.treatment_shape.input_width(); }
  Index M() const { return embedder_.outcome_shape.input_width(); }

  /// psi (treatment map, outcome map) followed by phi.
  Eigen::VectorXd trainable_parameters() const;
  void set_trainable_parameters(const Eigen::VectorXd& flat);
  Index trainable_count() const;

 private:
  EmbedderParams embedder_;
  NetShape hypernet_shape_;
  Eigen::VectorXd hypernet_params_;
  NetShape target_shape_;
};

Eigen::VectorXd embed(const EmbedderParams& embedder, const TreatmentVector& t, Index m, Index M);
Eigen::VectorXd generate_target_params(const HLearnerModel& model, const Eigen::VectorXd& embedding);
double predict(const HLearnerModel& model, const Eigen::VectorXd& x, const TreatmentVector& t, Index m);

struct HLearnerGradients {
  double loss = 0.0;
  Eigen::VectorXd treatment_map;
  Eigen::VectorXd outcome_map;
  Eigen::VectorXd hypernet;

  /// Same layout as HLearnerModel::trainable_parameters.
  Eigen::VectorXd flat() const;
};

/// Factual squared error averaged over the batch and all M outcomes, with
/// gradients for psi and phi. Columns of X, T and Y are records.
HLearnerGradients hlearner_loss_and_grads(const HLearnerModel& model, const Eigen::MatrixXd& X,
                                          const Eigen::MatrixXd& T, const Eigen::MatrixXd& Y);
double hlearner_loss(const HLearnerModel& model, const Eigen::MatrixXd& X, const Eigen::MatrixXd& T,
                     const Eigen::MatrixXd& Y);

/// S-Learner: one net on concat(x, t) with M outputs.
/// xS-Learner: M nets on concat(x, t) with one output each, in outcome order.
struct BaselineModel {
  LearnerKind kind = LearnerKind::SLearner;
  Index p = 0;
  Index K = 0;
  Index M = 0;
  std::vector<NetShape> shapes;
  std::vector<Eigen::VectorXd> params;

  static BaselineModel create(LearnerKind kind, Index p, Index K, Index M, const TrainConfig& cfg);
  /// Throws if shapes and parameters do not fit (p, K, M).
  void validate() const;
};

struct BaselineGradients {
  double loss = 0.0;
  Eigen::VectorXd grads;
};

/// Squared error averaged over batch columns and output rows.
BaselineGradients net_loss_and_grads(const NetShape& shape, const Eigen::VectorXd& params,
                                     const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets);

/// Stacks covariates over treatments, column per record.
Eigen::MatrixXd stack_inputs(const Eigen::MatrixXd& X, const Eigen::MatrixXd& T);

using Model = std::variant<HLearnerModel, BaselineModel>;

LearnerKind kind_of(const Model& model);
Index outcome_count(const Model& model);

/// M predicted potential outcomes at (x, t).
Eigen::VectorXd predict_all(const Model& model, const Eigen::VectorXd& x, const TreatmentVector& t);
/// M x n predictions for every column of X under one treatment vector.
Eigen::MatrixXd predict_batch(const Model& model, const Eigen::MatrixXd& X, const TreatmentVector& t);

struct EpochRecord {
  Index epoch = 0;
  double train_loss = 0.0;
  double validation_loss = 0.0;
};

struct FitLog {
  std::string name;
  std::vector<EpochRecord> epochs;
  Index best_epoch = 0;
};

struct TrainingLog {
  std::vector<FitLog> fits;
  double hypernet_output_scale = 1.0;

  /// CSV with header `fit,epoch,train_loss,validation_loss,best`.
  std::string to_csv() const;
};

struct TrainResult {
  Model model;
  TrainingLog log;
};

/// Minibatch Adam with a seeded train/validation split, keeping the
/// parameters with the lowest validation loss and stopping after `patience`
/// epochs without improvement. Throws std::runtime_error naming the epoch if
/// a loss becomes non-finite.
TrainResult train(LearnerKind kind, const Dataset& data, const TrainConfig& cfg);

/// The deterministic (train, validation) split `train` uses.
std::pair<std::vector<Index>, std::vector<Index>> split_indices(Index n, double validation_fraction,
                                                                std::uint64_t seed);

}  // namespace hl
