#pragma once

// Composite PEHE: mean squared error of estimated treatment contrasts over
// every test unit, outcome and evaluation treatment, measured against the
// noiseless outcome surface of the generating process.

#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "hlearner/data_gen.hpp"
#include "hlearner/learners.hpp"

namespace hl {

/// M x n potential outcomes for every column of X under treatment t.
using OutcomePredictor =
    std::function<Eigen::MatrixXd(const Eigen::MatrixXd& X, const TreatmentVector& t)>;

OutcomePredictor model_predictor(const Model& model);
/// Returns mean_outcome exactly; PEHE of the oracle is zero.
OutcomePredictor oracle_predictor(const Dgp& dgp);

enum class ContrastMode {
  Reference,  ///< every t against t_ref
  AllPairs,   ///< every ordered pair (t, t') with t != t'
};

struct EvalReport {
  double pehe_composite = 0.0;
  Eigen::VectorXd pehe_per_outcome;
  double factual_rmse = 0.0;
  Index n_test = 0;
  Index n_eval_treatments = 0;
  TreatmentVector reference_treatment;
};

/// Throws std::invalid_argument if t_ref is not one of eval_treatments, X_test
/// is empty, or fewer than two evaluation treatments are given.
/// factual_rmse is left at zero.
EvalReport pehe_composite(const OutcomePredictor& predictor, const Dgp& dgp,
                          const Eigen::MatrixXd& X_test,
                          const std::vector<TreatmentVector>& eval_treatments,
                          const TreatmentVector& t_ref, ContrastMode mode = ContrastMode::Reference);

/// sqrt of the mean over records and outcomes of (prediction - factual y)^2.
double factual_rmse(const OutcomePredictor& predictor, const Dataset& data);

/// Pairwise (cascade) summation in index order.
double pairwise_sum(std::span<const double> values);

}  // namespace hl
