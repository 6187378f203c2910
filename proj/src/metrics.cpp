#include "hlearner/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace hl {
namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

bool same_treatment(const TreatmentVector& a, const TreatmentVector& b) {
  return a.size() == b.size() && (a.array() == b.array()).all();
}

}  // namespace

double pairwise_sum(std::span<const double> values) {
  if (values.size() <= 8) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

OutcomePredictor model_predictor(const Model& model) {
  return [&model](const Eigen::MatrixXd& X, const TreatmentVector& t) {
    return predict_batch(model, X, t);
  };
}

OutcomePredictor oracle_predictor(const Dgp& dgp) {
  return [&dgp](const Eigen::MatrixXd& X, const TreatmentVector& t) {
    Eigen::MatrixXd out(dgp.M, X.cols());
    for (Index i = 0; i < X.cols(); ++i) out.col(i) = mean_outcomes(dgp, X.col(i), t);
    return out;
  };
}

EvalReport pehe_composite(const OutcomePredictor& predictor, const Dgp& dgp,
                          const Eigen::MatrixXd& X_test,
                          const std::vector<TreatmentVector>& eval_treatments,
                          const TreatmentVector& t_ref, ContrastMode mode) {
  require(X_test.cols() > 0, "PEHE needs at least one test unit");
  require(X_test.rows() == dgp.p, "test covariates have the wrong dimension");
  require(eval_treatments.size() >= 2, "PEHE needs at least two evaluation treatments");
  std::size_t ref = eval_treatments.size();
  for (std::size_t a = 0; a < eval_treatments.size(); ++a)
    if (same_treatment(eval_treatments[a], t_ref)) {
      ref = a;
      break;
    }
  require(ref < eval_treatments.size(), "reference treatment is not among the evaluation treatments");

  const Index n = X_test.cols();
  const Index M = dgp.M;
  const std::size_t T = eval_treatments.size();
  auto oracle = oracle_predictor(dgp);
  std::vector<Eigen::MatrixXd> estimated, truth;
  for (const auto& t : eval_treatments) {
    estimated.push_back(predictor(X_test, t));
    require(estimated.back().rows() == M && estimated.back().cols() == n,
            "predictor returned the wrong shape");
    truth.push_back(oracle(X_test, t));
  }

  std::vector<std::pair<std::size_t, std::size_t>> contrasts;
  for (std::size_t a = 0; a < T; ++a) {
    if (mode == ContrastMode::Reference) {
      if (a != ref) contrasts.emplace_back(a, ref);
    } else {
      for (std::size_t b = 0; b < T; ++b)
        if (b != a) contrasts.emplace_back(a, b);
    }
  }

  // Cells in (i, m, contrast) order for the composite; per-outcome cells in
  // (i, contrast) order.
  std::vector<double> all;
  std::vector<std::vector<double>> per(static_cast<std::size_t>(M));
  all.reserve(static_cast<std::size_t>(n * M) * contrasts.size());
  for (Index i = 0; i < n; ++i)
    for (Index m = 0; m < M; ++m)
      for (const auto& [a, b] : contrasts) {
        const double est = estimated[a](m, i) - estimated[b](m, i);
        const double tru = truth[a](m, i) - truth[b](m, i);
        const double cell = (est - tru) * (est - tru);
        all.push_back(cell);
        per[static_cast<std::size_t>(m)].push_back(cell);
      }

  EvalReport report;
  report.pehe_composite = pairwise_sum(all) / static_cast<double>(all.size());
  report.pehe_per_outcome.resize(M);
  for (Index m = 0; m < M; ++m) {
    const auto& cells = per[static_cast<std::size_t>(m)];
    report.pehe_per_outcome[m] = pairwise_sum(cells) / static_cast<double>(cells.size());
  }
  report.n_test = n;
  report.n_eval_treatments = static_cast<Index>(T);
  report.reference_treatment = t_ref;
  return report;
}

double factual_rmse(const OutcomePredictor& predictor, const Dataset& data) {
  require(data.N() > 0, "dataset is empty");
  std::vector<double> sq;
  sq.reserve(static_cast<std::size_t>(data.N() * data.M()));
  for (Index i = 0; i < data.N(); ++i) {
    const Eigen::MatrixXd yhat = predictor(data.X.col(i), data.T.col(i));
    require(yhat.rows() == data.M() && yhat.cols() == 1, "predictor returned the wrong shape");
    for (Index m = 0; m < data.M(); ++m) {
      const double r = yhat(m, 0) - data.Y(m, i);
      sq.push_back(r * r);
    }
  }
  return std::sqrt(pairwise_sum(sq) / static_cast<double>(sq.size()));
}

}  // namespace hl
