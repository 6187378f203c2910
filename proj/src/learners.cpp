#include "hlearner/learners.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

#include "hlearner/rng.hpp"
#include "hlearner/text.hpp"

namespace hl {
namespace {

// Seed streams; each consumer of cfg.seed gets its own.
enum Stream : std::uint64_t {
  kSplit = 0x5b17,
  kEpochShuffle = 0x5aff,
  kTreatmentInit = 0x7e01,
  kOutcomeInit = 0x7e02,
  kHypernetInit = 0x7e03,
  kBaselineInit = 0xba5e,
};

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

std::vector<Index> with_ends(Index in, const std::vector<Index>& hidden, Index out) {
  std::vector<Index> sizes{in};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(out);
  return sizes;
}

Eigen::MatrixXd columns(const Eigen::MatrixXd& A, const std::vector<Index>& idx) {
  return A(Eigen::all, idx);
}

/// Records sharing a treatment vector share every generated theta.
struct TreatmentGroups {
  Eigen::MatrixXd unique;  // K x U, first-appearance order
  std::vector<std::vector<Index>> members;
};

TreatmentGroups group_by_treatment(const Eigen::MatrixXd& T) {
  std::map<std::vector<double>, std::size_t> seen;
  std::vector<Index> first;
  TreatmentGroups g;
  for (Index i = 0; i < T.cols(); ++i) {
    std::vector<double> key(T.col(i).data(), T.col(i).data() + T.rows());
    auto [it, inserted] = seen.emplace(std::move(key), g.members.size());
    if (inserted) {
      g.members.emplace_back();
      first.push_back(i);
    }
    g.members[it->second].push_back(i);
  }
  g.unique = columns(T, first);
  return g;
}

void check_batch(const HLearnerModel& model, const Eigen::MatrixXd& X, const Eigen::MatrixXd& T,
                 const Eigen::MatrixXd& Y) {
  require(X.cols() > 0, "batch is empty");
  require(X.rows() == model.p() && T.rows() == model.K() && Y.rows() == model.M(),
          "batch dimensions do not match the model");
  require(T.cols() == X.cols() && Y.cols() == X.cols(), "batch matrices disagree on record count");
}

/// Embedding columns for every (unique treatment u, outcome m), column u*M + m.
Eigen::MatrixXd pair_embeddings(const Eigen::MatrixXd& treatment_half,
                                const Eigen::MatrixXd& outcome_half) {
  const Index U = treatment_half.cols();
  const Index M = outcome_half.cols();
  Eigen::MatrixXd E(treatment_half.rows() + outcome_half.rows(), U * M);
  for (Index u = 0; u < U; ++u)
    for (Index m = 0; m < M; ++m) {
      E.col(u * M + m).head(treatment_half.rows()) = treatment_half.col(u);
      E.col(u * M + m).tail(outcome_half.rows()) = outcome_half.col(m);
    }
  return E;
}

HLearnerGradients hlearner_objective(const HLearnerModel& model, const Eigen::MatrixXd& X,
                                     const Eigen::MatrixXd& T, const Eigen::MatrixXd& Y,
                                     bool want_grads) {
  check_batch(model, X, T, Y);
  const auto& emb = model.embedder();
  const Index M = model.M();
  const Index B = X.cols();
  const TreatmentGroups groups = group_by_treatment(T);
  const Index U = static_cast<Index>(groups.members.size());
  const Eigen::MatrixXd onehots = Eigen::MatrixXd::Identity(M, M);

  auto t_fwd = forward(emb.treatment_shape, emb.treatment_params, groups.unique);
  auto y_fwd = forward(emb.outcome_shape, emb.outcome_params, onehots);
  const Eigen::MatrixXd E = pair_embeddings(t_fwd.output, y_fwd.output);
  auto h_fwd = forward(model.hypernet_shape(), model.hypernet_params(), E);
  const Eigen::MatrixXd& theta = h_fwd.output;

  HLearnerGradients out;
  Eigen::MatrixXd dtheta;
  if (want_grads) dtheta = Eigen::MatrixXd::Zero(theta.rows(), theta.cols());
  const double scale = 2.0 / static_cast<double>(B * M);
  double sse = 0.0;
  for (Index u = 0; u < U; ++u) {
    const auto& rows = groups.members[static_cast<std::size_t>(u)];
    const Eigen::MatrixXd Xg = columns(X, rows);
    for (Index m = 0; m < M; ++m) {
      const Index c = u * M + m;
      const Eigen::VectorXd theta_c = theta.col(c);
      if (want_grads) {
        auto f = forward(model.target_shape(), theta_c, Xg);
        const Eigen::RowVectorXd r = f.output.row(0) - Y(m, rows);
        sse += r.squaredNorm();
        const Eigen::MatrixXd upstream = scale * r;
        dtheta.col(c) = backward(model.target_shape(), theta_c, f.cache, upstream).params;
      } else {
        const Eigen::RowVectorXd r = evaluate(model.target_shape(), theta_c, Xg).row(0) - Y(m, rows);
        sse += r.squaredNorm();
      }
    }
  }
  out.loss = sse / static_cast<double>(B * M);
  if (!std::isfinite(out.loss))
    throw std::runtime_error("non-finite H-Learner loss over a batch of " + std::to_string(B) +
                             " records");
  if (!want_grads) return out;

  auto h_bwd = backward(model.hypernet_shape(), model.hypernet_params(), h_fwd.cache, dtheta);
  out.hypernet = std::move(h_bwd.params);
  const Index d_t = emb.d_t();
  const Index d_y = emb.d_y();
  Eigen::MatrixXd dt = Eigen::MatrixXd::Zero(d_t, U);
  Eigen::MatrixXd dy = Eigen::MatrixXd::Zero(d_y, M);
  for (Index u = 0; u < U; ++u)
    for (Index m = 0; m < M; ++m) {
      dt.col(u) += h_bwd.input.col(u * M + m).head(d_t);
      dy.col(m) += h_bwd.input.col(u * M + m).tail(d_y);
    }
  out.treatment_map = backward(emb.treatment_shape, emb.treatment_params, t_fwd.cache, dt).params;
  out.outcome_map = backward(emb.outcome_shape, emb.outcome_params, y_fwd.cache, dy).params;
  return out;
}

double net_loss(const NetShape& shape, const Eigen::VectorXd& params, const Eigen::MatrixXd& inputs,
                const Eigen::MatrixXd& targets) {
  const double loss =
      (evaluate(shape, params, inputs) - targets).squaredNorm() / static_cast<double>(targets.size());
  if (!std::isfinite(loss)) throw std::runtime_error("non-finite network loss");
  return loss;
}

struct Objective {
  std::function<std::pair<double, Eigen::VectorXd>(const Eigen::VectorXd&, const std::vector<Index>&)>
      loss_and_grads;
  std::function<double(const Eigen::VectorXd&, const std::vector<Index>&)> loss;
};

FitLog fit(Eigen::VectorXd& params, const Objective& objective, const std::vector<Index>& train_rows,
           const std::vector<Index>& validation_rows, const TrainConfig& cfg, std::uint64_t stream,
           std::string name) {
  FitLog log;
  log.name = std::move(name);

  auto losses = [&](Index epoch) {
    EpochRecord rec{epoch, 0.0, 0.0};
    try {
      rec.train_loss = objective.loss(params, train_rows);
      rec.validation_loss = objective.loss(params, validation_rows);
    } catch (const std::runtime_error& e) {
      throw std::runtime_error(log.name + ": training diverged at epoch " + std::to_string(epoch) +
                               " (" + e.what() + ")");
    }
    return rec;
  };

  log.epochs.push_back(losses(0));
  Eigen::VectorXd best = params;
  double best_loss = log.epochs.back().validation_loss;
  Index stale = 0;

  AdamState<double> adam(params.size());
  std::vector<Index> order = train_rows;
  const Index n = static_cast<Index>(order.size());
  for (Index epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    CounterStream rng(cfg.seed, hash_key(stream, {kEpochShuffle, static_cast<std::uint64_t>(epoch)}));
    shuffle(order, rng);
    for (Index start = 0, batch = 0; start < n; start += cfg.batch_size, ++batch) {
      const std::vector<Index> rows(order.begin() + start,
                                    order.begin() + std::min(n, start + cfg.batch_size));
      std::pair<double, Eigen::VectorXd> lg;
      try {
        lg = objective.loss_and_grads(params, rows);
      } catch (const std::runtime_error& e) {
        throw std::runtime_error(log.name + ": training diverged at epoch " + std::to_string(epoch) +
                                 " (" + e.what() + ")");
      }
      adam_step(adam, params, lg.second, cfg.learning_rate,
                log.name + " epoch " + std::to_string(epoch) + " batch " + std::to_string(batch));
    }
    log.epochs.push_back(losses(epoch));
    if (log.epochs.back().validation_loss < best_loss) {
      best_loss = log.epochs.back().validation_loss;
      best = params;
      log.best_epoch = epoch;
      stale = 0;
    } else if (++stale >= cfg.patience) {
      break;
    }
  }
  params = std::move(best);
  return log;
}

}  // namespace

std::string to_string(LearnerKind kind) {
  switch (kind) {
    case LearnerKind::HLearner: return "HLearner";
    case LearnerKind::SLearner: return "SLearner";
    case LearnerKind::XSLearner: return "XSLearner";
  }
  return "?";
}

LearnerKind learner_from_string(std::string_view name) {
  if (name == "HLearner") return LearnerKind::HLearner;
  if (name == "SLearner") return LearnerKind::SLearner;
  if (name == "XSLearner") return LearnerKind::XSLearner;
  throw std::invalid_argument("unknown learner '" + std::string(name) +
                              "' (expected HLearner, SLearner or XSLearner)");
}

void TrainConfig::validate() const {
  require(std::isfinite(learning_rate) && learning_rate > 0.0, "learning_rate must be positive");
  require(embedding_size >= 2, "embedding_size must be at least 2");
  for (const auto* widths : {&hypernet_hidden, &target_hidden, &baseline_hidden})
    for (Index w : *widths) require(w >= 1, "hidden widths must be positive");
  require(batch_size >= 1, "batch_size must be positive");
  require(max_epochs >= 1, "max_epochs must be positive");
  require(validation_fraction > 0.0 && validation_fraction < 1.0,
          "validation_fraction must lie in (0, 1)");
  require(patience >= 1, "patience must be positive");
  require(std::isfinite(hypernet_output_scale) && hypernet_output_scale > 0.0,
          "hypernet_output_scale must be positive");
}

EmbedderParams make_embedder(Index K, Index M, Index d_t, Index d_y) {
  NetShape ts({K, d_t}, Activation::Identity);
  NetShape os({M, d_y}, Activation::Identity);
  return {ts, os, Eigen::VectorXd::Zero(param_count(ts)), Eigen::VectorXd::Zero(param_count(os))};
}

HLearnerModel::HLearnerModel(EmbedderParams embedder, NetShape hypernet_shape,
                             Eigen::VectorXd hypernet_params, NetShape target_shape)
    : embedder_(std::move(embedder)),
      hypernet_shape_(std::move(hypernet_shape)),
      hypernet_params_(std::move(hypernet_params)),
      target_shape_(std::move(target_shape)) {
  require(embedder_.treatment_params.size() == param_count(embedder_.treatment_shape) &&
              embedder_.outcome_params.size() == param_count(embedder_.outcome_shape),
          "embedding parameters do not match their shapes");
  require(embedder_.treatment_shape.depth() == 1 && embedder_.outcome_shape.depth() == 1,
          "embedding maps must be single affine layers");
  require(hypernet_shape_.input_width() == embedder_.width(),
          "hypernetwork input width " + std::to_string(hypernet_shape_.input_width()) +
              " differs from embedding width " + std::to_string(embedder_.width()));
  require(hypernet_shape_.output_width() == param_count(target_shape_),
          "hypernetwork output width " + std::to_string(hypernet_shape_.output_width()) +
              " differs from target parameter count " + std::to_string(param_count(target_shape_)));
  require(target_shape_.output_width() == 1, "target network must have a single output");
  require(hypernet_params_.size() == param_count(hypernet_shape_),
          "hypernetwork parameters do not match its shape");
}

HLearnerModel HLearnerModel::create(Index p, Index K, Index M, const TrainConfig& cfg) {
  cfg.validate();
  const Index d_t = cfg.embedding_size / 2;
  const Index d_y = cfg.embedding_size - d_t;
  EmbedderParams emb = make_embedder(K, M, d_t, d_y);
  emb.treatment_params = init_params(emb.treatment_shape, hash_key(cfg.seed, {kTreatmentInit}));
  emb.outcome_params = init_params(emb.outcome_shape, hash_key(cfg.seed, {kOutcomeInit}));

  NetShape target(with_ends(p, cfg.target_hidden, 1));
  NetShape hyper(with_ends(cfg.embedding_size, cfg.hypernet_hidden, param_count(target)));
  Eigen::VectorXd phi = init_params(hyper, hash_key(cfg.seed, {kHypernetInit}));
  const LayerSlice head = layer_slice(hyper, hyper.depth() - 1);
  phi.segment(head.weight_offset, head.n_in * head.n_out) *= cfg.hypernet_output_scale;
  return HLearnerModel(std::move(emb), std::move(hyper), std::move(phi), std::move(target));
}

Index HLearnerModel::trainable_count() const {
  return embedder_.treatment_params.size() + embedder_.outcome_params.size() +
         hypernet_params_.size();
}

Eigen::VectorXd HLearnerModel::trainable_parameters() const {
  Eigen::VectorXd flat(trainable_count());
  flat << embedder_.treatment_params, embedder_.outcome_params, hypernet_params_;
  return flat;
}

void HLearnerModel::set_trainable_parameters(const Eigen::VectorXd& flat) {
  require(flat.size() == trainable_count(), "trainable parameter vector has wrong length");
  const Index a = embedder_.treatment_params.size();
  const Index b = embedder_.outcome_params.size();
  embedder_.treatment_params = flat.head(a);
  embedder_.outcome_params = flat.segment(a, b);
  hypernet_params_ = flat.tail(hypernet_params_.size());
}

Eigen::VectorXd HLearnerGradients::flat() const {
  Eigen::VectorXd v(treatment_map.size() + outcome_map.size() + hypernet.size());
  v << treatment_map, outcome_map, hypernet;
  return v;
}

Eigen::VectorXd embed(const EmbedderParams& embedder, const TreatmentVector& t, Index m, Index M) {
  require(M == embedder.outcome_shape.input_width(), "outcome count does not match the embedder");
  require(m >= 0 && m < M, "outcome index " + std::to_string(m) + " out of range");
  require(t.size() == embedder.treatment_shape.input_width(),
          "treatment vector length does not match the embedder");
  Eigen::VectorXd e(embedder.width());
  e.head(embedder.d_t()) = evaluate(embedder.treatment_shape, embedder.treatment_params, t);
  e.tail(embedder.d_y()) = evaluate(embedder.outcome_shape, embedder.outcome_params,
                                    Eigen::VectorXd::Unit(M, m));
  return e;
}

Eigen::VectorXd generate_target_params(const HLearnerModel& model, const Eigen::VectorXd& embedding) {
  return evaluate(model.hypernet_shape(), model.hypernet_params(), embedding);
}

double predict(const HLearnerModel& model, const Eigen::VectorXd& x, const TreatmentVector& t, Index m) {
  require(x.size() == model.p(), "covariate vector length does not match the model");
  const Eigen::VectorXd theta = generate_target_params(model, embed(model.embedder(), t, m, model.M()));
  return evaluate(model.target_shape(), theta, x)(0, 0);
}

HLearnerGradients hlearner_loss_and_grads(const HLearnerModel& model, const Eigen::MatrixXd& X,
                                          const Eigen::MatrixXd& T, const Eigen::MatrixXd& Y) {
  return hlearner_objective(model, X, T, Y, true);
}

double hlearner_loss(const HLearnerModel& model, const Eigen::MatrixXd& X, const Eigen::MatrixXd& T,
                     const Eigen::MatrixXd& Y) {
  return hlearner_objective(model, X, T, Y, false).loss;
}

BaselineModel BaselineModel::create(LearnerKind kind, Index p, Index K, Index M,
                                    const TrainConfig& cfg) {
  require(kind != LearnerKind::HLearner, "BaselineModel holds S- or xS-Learners only");
  cfg.validate();
  BaselineModel model;
  model.kind = kind;
  model.p = p;
  model.K = K;
  model.M = M;
  const Index nets = kind == LearnerKind::SLearner ? 1 : M;
  const Index outputs = kind == LearnerKind::SLearner ? M : 1;
  for (Index i = 0; i < nets; ++i) {
    NetShape shape(with_ends(p + K, cfg.baseline_hidden, outputs));
    model.params.push_back(init_params(shape, hash_key(cfg.seed, {kBaselineInit, static_cast<std::uint64_t>(i)})));
    model.shapes.push_back(std::move(shape));
  }
  return model;
}

void BaselineModel::validate() const {
  require(kind != LearnerKind::HLearner, "BaselineModel holds S- or xS-Learners only");
  const std::size_t nets = kind == LearnerKind::SLearner ? 1 : static_cast<std::size_t>(M);
  const Index outputs = kind == LearnerKind::SLearner ? M : 1;
  require(shapes.size() == nets && params.size() == nets, "baseline has the wrong number of nets");
  for (std::size_t i = 0; i < nets; ++i) {
    require(shapes[i].input_width() == p + K && shapes[i].output_width() == outputs,
            "baseline net shape does not match (p, K, M)");
    require(params[i].size() == param_count(shapes[i]), "baseline parameters do not match shape");
  }
}

BaselineGradients net_loss_and_grads(const NetShape& shape, const Eigen::VectorXd& params,
                                     const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets) {
  require(inputs.cols() > 0, "batch is empty");
  require(targets.rows() == shape.output_width() && targets.cols() == inputs.cols(),
          "targets do not match network output");
  auto f = forward(shape, params, inputs);
  const Eigen::MatrixXd r = f.output - targets;
  BaselineGradients out;
  out.loss = r.squaredNorm() / static_cast<double>(r.size());
  if (!std::isfinite(out.loss)) throw std::runtime_error("non-finite network loss");
  out.grads = backward(shape, params, f.cache, (2.0 / static_cast<double>(r.size())) * r).params;
  return out;
}

Eigen::MatrixXd stack_inputs(const Eigen::MatrixXd& X, const Eigen::MatrixXd& T) {
  require(X.cols() == T.cols(), "covariates and treatments disagree on record count");
  Eigen::MatrixXd Z(X.rows() + T.rows(), X.cols());
  Z << X, T;
  return Z;
}

LearnerKind kind_of(const Model& model) {
  if (std::holds_alternative<HLearnerModel>(model)) return LearnerKind::HLearner;
  return std::get<BaselineModel>(model).kind;
}

Index outcome_count(const Model& model) {
  if (const auto* h = std::get_if<HLearnerModel>(&model)) return h->M();
  return std::get<BaselineModel>(model).M;
}

Eigen::MatrixXd predict_batch(const Model& model, const Eigen::MatrixXd& X, const TreatmentVector& t) {
  if (const auto* h = std::get_if<HLearnerModel>(&model)) {
    require(X.rows() == h->p(), "covariate dimension does not match the model");
    require(t.size() == h->K(), "treatment vector length does not match the model");
    const Index M = h->M();
    const auto& emb = h->embedder();
    Eigen::MatrixXd E(emb.width(), M);
    E.topRows(emb.d_t()) =
        evaluate(emb.treatment_shape, emb.treatment_params, t).replicate(1, M);
    E.bottomRows(emb.d_y()) =
        evaluate(emb.outcome_shape, emb.outcome_params, Eigen::MatrixXd::Identity(M, M));
    const Eigen::MatrixXd theta = evaluate(h->hypernet_shape(), h->hypernet_params(), E);
    Eigen::MatrixXd out(M, X.cols());
    for (Index m = 0; m < M; ++m) out.row(m) = evaluate(h->target_shape(), theta.col(m), X);
    return out;
  }
  const auto& b = std::get<BaselineModel>(model);
  require(X.rows() == b.p, "covariate dimension does not match the model");
  require(t.size() == b.K, "treatment vector length does not match the model");
  const Eigen::MatrixXd Z = stack_inputs(X, t.replicate(1, X.cols()));
  if (b.kind == LearnerKind::SLearner) return evaluate(b.shapes[0], b.params[0], Z);
  Eigen::MatrixXd out(b.M, X.cols());
  for (Index m = 0; m < b.M; ++m)
    out.row(m) = evaluate(b.shapes[static_cast<std::size_t>(m)], b.params[static_cast<std::size_t>(m)], Z);
  return out;
}

Eigen::VectorXd predict_all(const Model& model, const Eigen::VectorXd& x, const TreatmentVector& t) {
  if (const auto* h = std::get_if<HLearnerModel>(&model)) {
    Eigen::VectorXd out(h->M());
    for (Index m = 0; m < h->M(); ++m) out[m] = predict(*h, x, t, m);
    return out;
  }
  return predict_batch(model, x, t).col(0);
}

std::string TrainingLog::to_csv() const {
  std::ostringstream ss;
  ss << "fit,epoch,train_loss,validation_loss,best\n";
  for (const auto& f : fits)
    for (const auto& e : f.epochs)
      ss << f.name << ',' << e.epoch << ',' << format_double(e.train_loss) << ','
         << format_double(e.validation_loss) << ',' << (e.epoch == f.best_epoch ? 1 : 0) << '\n';
  return ss.str();
}

std::pair<std::vector<Index>, std::vector<Index>> split_indices(Index n, double validation_fraction,
                                                                std::uint64_t seed) {
  require(n >= 1, "cannot split an empty dataset");
  std::vector<Index> order(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  CounterStream rng(seed, kSplit);
  shuffle(order, rng);
  Index n_val = 0;
  if (n >= 2)
    n_val = std::clamp<Index>(std::llround(static_cast<double>(n) * validation_fraction), 1, n - 1);
  std::vector<Index> validation(order.begin(), order.begin() + n_val);
  std::vector<Index> training(order.begin() + n_val, order.end());
  std::sort(validation.begin(), validation.end());
  std::sort(training.begin(), training.end());
  return {std::move(training), std::move(validation)};
}

TrainResult train(LearnerKind kind, const Dataset& data, const TrainConfig& cfg) {
  cfg.validate();
  require(data.N() >= 1, "cannot train on an empty dataset");
  require(data.T.cols() == data.N() && data.Y.cols() == data.N(),
          "dataset matrices disagree on record count");
  auto [train_rows, validation_rows] = split_indices(data.N(), cfg.validation_fraction, cfg.seed);
  if (validation_rows.empty()) validation_rows = train_rows;

  TrainingLog log;
  if (kind == LearnerKind::HLearner) {
    HLearnerModel model = HLearnerModel::create(data.p(), data.K(), data.M(), cfg);
    log.hypernet_output_scale = cfg.hypernet_output_scale;
    HLearnerModel scratch = model;
    Objective objective{
        [&](const Eigen::VectorXd& params, const std::vector<Index>& rows) {
          scratch.set_trainable_parameters(params);
          auto g = hlearner_loss_and_grads(scratch, columns(data.X, rows), columns(data.T, rows),
                                           columns(data.Y, rows));
          return std::make_pair(g.loss, g.flat());
        },
        [&](const Eigen::VectorXd& params, const std::vector<Index>& rows) {
          scratch.set_trainable_parameters(params);
          return hlearner_loss(scratch, columns(data.X, rows), columns(data.T, rows),
                               columns(data.Y, rows));
        }};
    Eigen::VectorXd params = model.trainable_parameters();
    log.fits.push_back(fit(params, objective, train_rows, validation_rows, cfg, 0, "hlearner"));
    model.set_trainable_parameters(params);
    return {std::move(model), std::move(log)};
  }

  BaselineModel model = BaselineModel::create(kind, data.p(), data.K(), data.M(), cfg);
  const Eigen::MatrixXd Z = stack_inputs(data.X, data.T);
  for (std::size_t i = 0; i < model.shapes.size(); ++i) {
    const NetShape& shape = model.shapes[i];
    const Eigen::MatrixXd targets =
        kind == LearnerKind::SLearner ? data.Y : Eigen::MatrixXd(data.Y.row(static_cast<Index>(i)));
    Objective objective{
        [&](const Eigen::VectorXd& params, const std::vector<Index>& rows) {
          auto g = net_loss_and_grads(shape, params, columns(Z, rows), columns(targets, rows));
          return std::make_pair(g.loss, std::move(g.grads));
        },
        [&](const Eigen::VectorXd& params, const std::vector<Index>& rows) {
          return net_loss(shape, params, columns(Z, rows), columns(targets, rows));
        }};
    const std::string name = kind == LearnerKind::SLearner ? "slearner" : "xslearner_y" + std::to_string(i);
    log.fits.push_back(fit(model.params[i], objective, train_rows, validation_rows, cfg, i + 1, name));
  }
  return {std::move(model), std::move(log)};
}

}  // namespace hl
