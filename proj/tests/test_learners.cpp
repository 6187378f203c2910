#include <cmath>
#include <filesystem>

#include <gtest/gtest.h>

#include "hlearner/learners.hpp"
#include "hlearner/rng.hpp"
#include "hlearner/serialize.hpp"

namespace {

using hl::Activation;
using hl::HLearnerModel;
using hl::Index;
using hl::LearnerKind;
using hl::NetShape;
using hl::TrainConfig;
using Eigen::MatrixXd;
using Eigen::VectorXd;

TrainConfig small_config() {
  TrainConfig cfg;
  cfg.embedding_size = 8;
  cfg.hypernet_hidden = {10};
  cfg.target_hidden = {4};
  cfg.baseline_hidden = {6, 5};
  cfg.batch_size = 8;
  return cfg;
}

// Independent loss: mean over records and outcomes of squared error, built
// only on the single-record predict.
double reference_loss(const HLearnerModel& model, const MatrixXd& X, const MatrixXd& T, const MatrixXd& Y) {
  double total = 0.0;
  for (Index i = 0; i < X.cols(); ++i)
    for (Index m = 0; m < Y.rows(); ++m) {
      const double r = hl::predict(model, X.col(i), T.col(i), m) - Y(m, i);
      total += r * r;
    }
  return total / static_cast<double>(X.cols() * Y.rows());
}

struct Batch {
  MatrixXd X, T, Y;
};

Batch random_batch(Index p, Index K, Index M, Index n, std::uint64_t seed) {
  hl::CounterStream rng(seed, 77);
  Batch b{MatrixXd(p, n), MatrixXd(K, n), MatrixXd(M, n)};
  for (Index i = 0; i < b.X.size(); ++i) b.X.data()[i] = rng.normal();
  for (Index i = 0; i < b.T.size(); ++i) b.T.data()[i] = static_cast<double>(rng.below(2));
  for (Index i = 0; i < b.Y.size(); ++i) b.Y.data()[i] = rng.normal();
  return b;
}

// Tiny hand-built model: p = 1, K = 1, M = 2, linear hypernet [2, 2], target [1, 1].
HLearnerModel tiny_model() {
  auto emb = hl::make_embedder(1, 2, 1, 1);
  emb.treatment_params << 2.0, 0.5;
  emb.outcome_params << 1.0, -1.0, 0.0;
  VectorXd phi(6);
  phi << 1.0, 0.5, -1.0, 2.0, 0.1, 0.2;
  return HLearnerModel(emb, NetShape({2, 2}, Activation::Identity), phi, NetShape({1, 1}));
}

TEST(LearnerKind, StringRoundTrip) {
  for (auto k : {LearnerKind::HLearner, LearnerKind::SLearner, LearnerKind::XSLearner})
    EXPECT_EQ(hl::learner_from_string(hl::to_string(k)), k);
  EXPECT_THROW(hl::learner_from_string("TLearner"), std::invalid_argument);
}

TEST(TrainConfig, ValidateRejectsBadFields) {
  TrainConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.learning_rate = 0.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = TrainConfig{};
  cfg.validation_fraction = 1.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = TrainConfig{};
  cfg.target_hidden = {4, 0};
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(Embed, ZeroMapsGiveZeroEmbedding) {
  const auto emb = hl::make_embedder(3, 2, 4, 4);
  VectorXd t(3);
  t << 1, 0, 1;
  EXPECT_TRUE(hl::embed(emb, t, 1, 2).isZero(0.0));
  EXPECT_EQ(hl::embed(emb, t, 1, 2).size(), 8);
}

TEST(Embed, TreatmentHalfThenOutcomeHalf) {
  auto emb = hl::make_embedder(1, 2, 1, 1);
  emb.treatment_params << 1.0, 0.0;
  emb.outcome_params << 3.0, 7.0, 0.0;
  const VectorXd e = hl::embed(emb, VectorXd::Constant(1, 0.5), 1, 2);
  ASSERT_EQ(e.size(), 2);
  EXPECT_DOUBLE_EQ(e[0], 0.5);
  EXPECT_DOUBLE_EQ(e[1], 7.0);
  EXPECT_THROW(hl::embed(emb, VectorXd::Constant(1, 0.5), 2, 2), std::invalid_argument);
}

TEST(Hypernet, OutputLengthMatchesTarget) {
  TrainConfig cfg;
  const auto model = HLearnerModel::create(10, 5, 2, cfg);
  EXPECT_EQ(model.target_shape().layer_sizes(), (std::vector<Index>{10, 32, 1}));
  const VectorXd theta = hl::generate_target_params(model, VectorXd::Zero(32));
  EXPECT_EQ(theta.size(), 385);
}

TEST(Hypernet, ZeroWeightsGiveZeroTheta) {
  auto model = HLearnerModel::create(10, 5, 2, TrainConfig{});
  VectorXd flat = model.trainable_parameters();
  flat.setZero();
  model.set_trainable_parameters(flat);
  EXPECT_TRUE(hl::generate_target_params(model, VectorXd::Ones(32)).isZero(0.0));
}

TEST(Hypernet, DifferentEmbeddingsGiveDifferentTheta) {
  const auto model = HLearnerModel::create(4, 2, 2, small_config());
  const VectorXd a = hl::generate_target_params(model, VectorXd::Zero(8));
  const VectorXd b = hl::generate_target_params(model, VectorXd::Ones(8));
  EXPECT_NE(a, b);
}

TEST(Hypernet, WidthMatchesTargetForRandomConfigs) {
  hl::CounterStream rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    TrainConfig cfg;
    cfg.embedding_size = 2 + static_cast<Index>(rng.below(15));
    cfg.hypernet_hidden = {1 + static_cast<Index>(rng.below(12))};
    cfg.target_hidden.clear();
    const Index depth = static_cast<Index>(rng.below(3));
    for (Index i = 0; i < depth; ++i) cfg.target_hidden.push_back(1 + static_cast<Index>(rng.below(9)));
    const Index p = 1 + static_cast<Index>(rng.below(10));
    const auto model = HLearnerModel::create(p, 1 + static_cast<Index>(rng.below(5)),
                                             1 + static_cast<Index>(rng.below(4)), cfg);
    EXPECT_EQ(model.hypernet_shape().output_width(), hl::param_count(model.target_shape()));
    EXPECT_EQ(model.target_shape().input_width(), p);
  }
}

TEST(HLearnerModel, RejectsInconsistentShapes) {
  auto emb = hl::make_embedder(1, 2, 1, 1);
  EXPECT_THROW(HLearnerModel(emb, NetShape({3, 2}), VectorXd::Zero(8), NetShape({1, 1})),
               std::invalid_argument);
  EXPECT_THROW(HLearnerModel(emb, NetShape({2, 3}), VectorXd::Zero(9), NetShape({1, 1})),
               std::invalid_argument);
  EXPECT_THROW(HLearnerModel(emb, NetShape({2, 4}), VectorXd::Zero(12), NetShape({1, 2})),
               std::invalid_argument);
}

TEST(Predict, TinyHandModel) {
  // e = [2.5, 1], theta = [3.1, -0.3], y = 3.1 * 3 - 0.3.
  const auto model = tiny_model();
  EXPECT_NEAR(hl::predict(model, VectorXd::Constant(1, 3.0), VectorXd::Ones(1), 0), 9.0, 1e-12);
}

TEST(Predict, RejectsWrongLengths) {
  const auto model = tiny_model();
  EXPECT_THROW(hl::predict(model, VectorXd::Ones(2), VectorXd::Ones(1), 0), std::invalid_argument);
  EXPECT_THROW(hl::predict(model, VectorXd::Ones(1), VectorXd::Ones(2), 0), std::invalid_argument);
}

TEST(HLearnerLoss, GradientsMatchFiniteDifferences) {
  const auto cfg = small_config();
  auto model = HLearnerModel::create(4, 2, 2, cfg);
  // Push the embedding off its symmetric start so every coordinate matters.
  VectorXd flat = model.trainable_parameters();
  hl::CounterStream rng(5);
  for (Index i = 0; i < flat.size(); ++i) flat[i] += 0.1 * rng.normal();
  model.set_trainable_parameters(flat);

  const auto b = random_batch(4, 2, 2, 8, 1);
  const auto g = hl::hlearner_loss_and_grads(model, b.X, b.T, b.Y);
  EXPECT_NEAR(g.loss, reference_loss(model, b.X, b.T, b.Y), 1e-12);
  const VectorXd analytic = g.flat();
  ASSERT_EQ(analytic.size(), flat.size());

  const double h = 1e-6;
  double worst = 0.0;
  for (Index i = 0; i < flat.size(); ++i) {
    VectorXd q = flat;
    q[i] += h;
    model.set_trainable_parameters(q);
    const double up = reference_loss(model, b.X, b.T, b.Y);
    q[i] -= 2 * h;
    model.set_trainable_parameters(q);
    const double down = reference_loss(model, b.X, b.T, b.Y);
    const double numeric = (up - down) / (2 * h);
    worst = std::max(worst, std::abs(analytic[i] - numeric) /
                                std::max(1e-7, std::abs(analytic[i]) + std::abs(numeric)));
  }
  EXPECT_LT(worst, 1e-4);
}

TEST(HLearnerLoss, ZeroAtExactFit) {
  const auto model = tiny_model();
  MatrixXd X(1, 3), T(1, 3), Y(2, 3);
  X << 3, -1, 0.5;
  T << 1, 0, 1;
  for (Index i = 0; i < 3; ++i)
    for (Index m = 0; m < 2; ++m) Y(m, i) = hl::predict(model, X.col(i), T.col(i), m);
  const auto g = hl::hlearner_loss_and_grads(model, X, T, Y);
  EXPECT_EQ(g.loss, 0.0);
  EXPECT_TRUE(g.flat().isZero(0.0));
}

TEST(HLearnerLoss, ShiftedTargetsMatchScalarReference) {
  // Adding c to every target raises the mean squared error by exactly c^2 at an exact fit.
  const auto model = tiny_model();
  MatrixXd X(1, 2), T(1, 2), Y(2, 2);
  X << 3, -1;
  T << 1, 0;
  for (Index i = 0; i < 2; ++i)
    for (Index m = 0; m < 2; ++m) Y(m, i) = hl::predict(model, X.col(i), T.col(i), m) + 2.0;
  EXPECT_NEAR(hl::hlearner_loss(model, X, T, Y), 4.0, 1e-12);
}

TEST(BaselineLoss, GradientsMatchFiniteDifferences) {
  for (auto kind : {LearnerKind::SLearner, LearnerKind::XSLearner}) {
    const auto model = hl::BaselineModel::create(kind, 4, 2, 2, small_config());
    const auto b = random_batch(4, 2, 2, 8, 2);
    const MatrixXd inputs = hl::stack_inputs(b.X, b.T);
    for (std::size_t n = 0; n < model.shapes.size(); ++n) {
      const MatrixXd targets = kind == LearnerKind::SLearner ? b.Y : MatrixXd(b.Y.row(static_cast<Index>(n)));
      const auto g = hl::net_loss_and_grads(model.shapes[n], model.params[n], inputs, targets);
      auto loss = [&](const VectorXd& q) {
        return (hl::evaluate(model.shapes[n], q, inputs) - targets).squaredNorm() /
               static_cast<double>(targets.size());
      };
      EXPECT_NEAR(g.loss, loss(model.params[n]), 1e-12);
      double worst = 0.0;
      for (Index i = 0; i < g.grads.size(); ++i) {
        VectorXd q = model.params[n];
        q[i] += 1e-6;
        const double up = loss(q);
        q[i] -= 2e-6;
        const double numeric = (up - loss(q)) / 2e-6;
        worst = std::max(worst, std::abs(g.grads[i] - numeric) /
                                    std::max(1e-7, std::abs(g.grads[i]) + std::abs(numeric)));
      }
      EXPECT_LT(worst, 1e-4) << hl::to_string(kind) << " net " << n;
    }
  }
}

TEST(Baseline, ShapesFollowConfig) {
  const auto cfg = small_config();
  const auto s = hl::BaselineModel::create(LearnerKind::SLearner, 4, 2, 3, cfg);
  ASSERT_EQ(s.shapes.size(), 1u);
  EXPECT_EQ(s.shapes[0].layer_sizes(), (std::vector<Index>{6, 6, 5, 3}));
  const auto xs = hl::BaselineModel::create(LearnerKind::XSLearner, 4, 2, 3, cfg);
  ASSERT_EQ(xs.shapes.size(), 3u);
  for (const auto& sh : xs.shapes) EXPECT_EQ(sh.layer_sizes(), (std::vector<Index>{6, 6, 5, 1}));
  EXPECT_NE(xs.params[0], xs.params[1]);
}

TEST(PredictAll, ZeroParametersGiveZero) {
  auto h = HLearnerModel::create(3, 2, 2, small_config());
  h.set_trainable_parameters(VectorXd::Zero(h.trainable_count()));
  auto s = hl::BaselineModel::create(LearnerKind::SLearner, 3, 2, 2, small_config());
  for (auto& p : s.params) p.setZero();
  const VectorXd x = VectorXd::Ones(3), t = VectorXd::Ones(2);
  EXPECT_TRUE(hl::predict_all(hl::Model(h), x, t).isZero(0.0));
  EXPECT_TRUE(hl::predict_all(hl::Model(s), x, t).isZero(0.0));
}

TEST(PredictAll, AgreesWithPredict) {
  const auto h = HLearnerModel::create(3, 2, 3, small_config());
  const hl::Model model(h);
  VectorXd x(3), t(2);
  x << 0.2, -1.0, 0.7;
  t << 1, 0;
  const VectorXd all = hl::predict_all(model, x, t);
  ASSERT_EQ(all.size(), 3);
  for (Index m = 0; m < 3; ++m) EXPECT_EQ(all[m], hl::predict(h, x, t, m));
}

TEST(PredictBatch, AgreesWithPerRecord) {
  const auto b = random_batch(3, 2, 2, 20, 3);
  VectorXd t(2);
  t << 0, 1;
  const auto cfg = small_config();
  for (const hl::Model& model :
       {hl::Model(HLearnerModel::create(3, 2, 2, cfg)),
        hl::Model(hl::BaselineModel::create(LearnerKind::SLearner, 3, 2, 2, cfg)),
        hl::Model(hl::BaselineModel::create(LearnerKind::XSLearner, 3, 2, 2, cfg))}) {
    const MatrixXd batch = hl::predict_batch(model, b.X, t);
    ASSERT_EQ(batch.rows(), 2);
    ASSERT_EQ(batch.cols(), 20);
    for (Index i = 0; i < 20; ++i)
      EXPECT_LT((batch.col(i) - hl::predict_all(model, b.X.col(i), t)).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(SplitIndices, PartitionIsDeterministic) {
  const auto [tr, va] = hl::split_indices(100, 0.3, 4);
  EXPECT_EQ(tr.size(), 70u);
  EXPECT_EQ(va.size(), 30u);
  std::vector<Index> all(tr);
  all.insert(all.end(), va.begin(), va.end());
  std::sort(all.begin(), all.end());
  for (Index i = 0; i < 100; ++i) EXPECT_EQ(all[static_cast<std::size_t>(i)], i);
  EXPECT_EQ(hl::split_indices(100, 0.3, 4), std::make_pair(tr, va));
  EXPECT_NE(hl::split_indices(100, 0.3, 5).second, va);
}

class Training : public ::testing::Test {
 protected:
  static hl::Dataset realizable(Index n, Index K, std::uint64_t seed) {
    hl::Dgp d = hl::sample_dgp(5, hl::TreatmentSpec::all_binary(K), 1, 1.0, 0.0, seed);
    for (auto& v : d.modifier_weights) v.setZero();
    for (auto& i : d.interactions) i.setZero();
    return hl::generate_dataset(d, n, seed);
  }
};

TEST_F(Training, FitsRealizableSurface) {
  const auto data = realizable(4000, 2, 1);
  TrainConfig cfg;
  const auto result = hl::train(LearnerKind::HLearner, data, cfg);
  const auto [tr, va] = hl::split_indices(data.N(), cfg.validation_fraction, cfg.seed);
  double sse = 0.0;
  for (Index i : va) {
    const double r = hl::predict_all(result.model, data.X.col(i), data.T.col(i))[0] - data.Y(0, i);
    sse += r * r;
  }
  const double rmse = std::sqrt(sse / static_cast<double>(va.size()));
  const double sd = std::sqrt((data.Y.array() - data.Y.mean()).square().mean());
  EXPECT_LE(rmse, 0.05 * sd);
}

TEST_F(Training, DeterministicAndBestNoWorseThanStart) {
  const auto data = realizable(300, 2, 2);
  TrainConfig cfg = small_config();
  cfg.max_epochs = 15;
  for (auto kind : {LearnerKind::HLearner, LearnerKind::SLearner, LearnerKind::XSLearner}) {
    const auto a = hl::train(kind, data, cfg);
    const auto b = hl::train(kind, data, cfg);
    EXPECT_EQ(a.log.to_csv(), b.log.to_csv()) << hl::to_string(kind);
    for (const auto& fit : a.log.fits) {
      ASSERT_FALSE(fit.epochs.empty());
      EXPECT_EQ(fit.epochs.front().epoch, 0);
      const auto& best = fit.epochs[static_cast<std::size_t>(fit.best_epoch)];
      EXPECT_LE(best.validation_loss, fit.epochs.front().validation_loss);
      EXPECT_LE(best.train_loss, fit.epochs.front().train_loss) << fit.name;
    }
    EXPECT_EQ(a.log.fits.size(), 1u);  // M = 1
  }
}

TEST_F(Training, TreatmentChangesPrediction) {
  const auto data = realizable(500, 1, 3);
  TrainConfig cfg = small_config();
  cfg.max_epochs = 30;
  const auto r = hl::train(LearnerKind::HLearner, data, cfg);
  const VectorXd x = data.X.col(0);
  EXPECT_NE(hl::predict_all(r.model, x, VectorXd::Zero(1))[0], hl::predict_all(r.model, x, VectorXd::Ones(1))[0]);
}

TEST(Serialize, ModelRoundTripIsBitExact) {
  const auto cfg = small_config();
  const auto b = random_batch(3, 2, 2, 100, 9);
  for (const hl::Model& model :
       {hl::Model(HLearnerModel::create(3, 2, 2, cfg)),
        hl::Model(hl::BaselineModel::create(LearnerKind::SLearner, 3, 2, 2, cfg)),
        hl::Model(hl::BaselineModel::create(LearnerKind::XSLearner, 3, 2, 2, cfg))}) {
    const auto saved = hl::model_from_json(hl::model_to_json(model, cfg));
    EXPECT_EQ(saved.config, cfg);
    EXPECT_EQ(hl::kind_of(saved.model), hl::kind_of(model));
    for (Index i = 0; i < b.X.cols(); ++i)
      EXPECT_EQ(hl::predict_all(saved.model, b.X.col(i), b.T.col(i)),
                hl::predict_all(model, b.X.col(i), b.T.col(i)));
  }
}

TEST(Serialize, FileRoundTrip) {
  const auto cfg = small_config();
  const hl::Model model(HLearnerModel::create(2, 1, 1, cfg));
  const auto path = std::filesystem::temp_directory_path() / "hlearner_test_model.json";
  hl::save_model(model, cfg, path);
  const auto loaded = hl::load_model(path);
  std::filesystem::remove(path);
  const VectorXd x = VectorXd::Constant(2, 0.3);
  EXPECT_EQ(hl::predict_all(loaded.model, x, VectorXd::Ones(1)), hl::predict_all(model, x, VectorXd::Ones(1)));
}

TEST(Serialize, TrainConfigRejectsUnknownKeys) {
  const auto j = nlohmann::json::parse(R"({"learning_rate": 0.01, "epochs": 3})");
  EXPECT_THROW(hl::train_config_from_json(j), std::exception);
  const auto ok = hl::train_config_from_json(nlohmann::json::parse(R"({"learning_rate": 0.01})"));
  EXPECT_EQ(ok.learning_rate, 0.01);
  EXPECT_EQ(ok.batch_size, 128);
  EXPECT_EQ(hl::train_config_from_json(hl::train_config_to_json(small_config())), small_config());
}

}  // namespace
