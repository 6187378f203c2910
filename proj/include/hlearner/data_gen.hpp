#pragma once

// Synthetic composite-treatment / composite-outcome data with confounded
// assignment, and the noiseless outcome surface that serves as the
// counterfactual oracle.
//
// Generative process for one record:
//   x ~ N(0, I_p)
//   s_k = w_k . x / sqrt(p)
//   binary k:     t_k ~ Bernoulli(clip(sigmoid(gamma * s_k)))
//   continuous k: t_k = sigmoid(gamma * s_k + 0.5 * eps), eps ~ N(0, 1)
//   y_m = mu_m(x, t) + sigma_y * eta, eta ~ N(0, 1)
// with
//   mu_m(x, t) = alpha_m . x / sqrt(p)
//              + sum_k c_mk * (1 + v_mk . x / sqrt(p)) * t_k
//              + sum_{k<k'} d_mkk' * t_k * t_k'
//
// Treatment depends on x only (unconfoundedness), binary propensities are
// clipped away from 0 and 1 (positivity), and y is the potential outcome at
// the received treatment plus noise (consistency).

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace hl {

using Index = Eigen::Index;

enum class TreatmentKind { Binary, Continuous };

class TreatmentSpec {
 public:
  explicit TreatmentSpec(std::vector<TreatmentKind> kinds);

  static TreatmentSpec all_binary(Index k);
  /// First component continuous, the rest binary.
  static TreatmentSpec mixed(Index k);
  /// One letter per component: 'B' binary, 'C' continuous.
  static TreatmentSpec parse(std::string_view code);

  std::string code() const;
  Index size() const { return static_cast<Index>(kinds_.size()); }
  TreatmentKind kind(Index k) const { return kinds_[static_cast<std::size_t>(k)]; }
  const std::vector<TreatmentKind>& kinds() const { return kinds_; }

  bool operator==(const TreatmentSpec&) const = default;

 private:
  std::vector<TreatmentKind> kinds_;
};

/// K treatment values; binary entries in {0, 1}, continuous entries in [0, 1].
using TreatmentVector = Eigen::VectorXd;

/// Throws std::invalid_argument if `t` does not conform to `spec`.
void validate_treatment(const TreatmentSpec& spec, const TreatmentVector& t);

/// Binary propensities are clipped to [kMinPropensity, 1 - kMinPropensity].
inline constexpr double kMinPropensity = 1e-6;

struct Dgp {
  Index p = 0;
  TreatmentSpec spec{{TreatmentKind::Binary}};
  Index M = 0;
  double gamma = 1.0;
  double sigma_y = 0.1;
  std::uint64_t seed = 0;

  Eigen::MatrixXd propensity_weights;             ///< K x p, row k is w_k
  Eigen::MatrixXd baseline_weights;               ///< M x p, row m is alpha_m
  Eigen::MatrixXd main_effects;                   ///< M x K, c_mk
  std::vector<Eigen::MatrixXd> modifier_weights;  ///< M entries of K x p, row k is v_mk
  std::vector<Eigen::MatrixXd> interactions;      ///< M entries of K x K, strictly upper

  Index K() const { return spec.size(); }
  /// Stable hex digest of the arguments and every coefficient.
  std::string fingerprint() const;
};

/// Exact equality of arguments and every coefficient.
bool operator==(const Dgp& a, const Dgp& b);

Dgp sample_dgp(Index p, const TreatmentSpec& spec, Index M, double gamma, double sigma_y,
               std::uint64_t seed);

/// Noiseless potential outcome mu_m(x, t).
double mean_outcome(const Dgp& dgp, const Eigen::VectorXd& x, const TreatmentVector& t, Index m);
/// All M potential outcomes at (x, t).
Eigen::VectorXd mean_outcomes(const Dgp& dgp, const Eigen::VectorXd& x, const TreatmentVector& t);

/// Assignment scores s_k for one covariate vector.
Eigen::VectorXd treatment_scores(const Dgp& dgp, const Eigen::VectorXd& x);
/// Clipped Bernoulli probability for a binary component with score `score`.
double binary_propensity(double gamma, double score);
/// The treatment record `record` of a dataset drawn with `seed` receives.
TreatmentVector assign_treatment(const Dgp& dgp, const Eigen::VectorXd& x, std::uint64_t seed,
                                 Index record);

/// p x n matrix of independent standard normals, one column per unit.
Eigen::MatrixXd sample_covariates(Index p, Index n, std::uint64_t seed);

/// N factual records stored column-wise: column i of X, T and Y is record i.
struct Dataset {
  TreatmentSpec spec{{TreatmentKind::Binary}};
  Eigen::MatrixXd X;      ///< p x N
  Eigen::MatrixXd T;      ///< K x N
  Eigen::MatrixXd Y;      ///< M x N
  Eigen::MatrixXd noise;  ///< M x N noise added to mu; empty for datasets read from disk
  std::string dgp_fingerprint;

  Index N() const { return X.cols(); }
  Index p() const { return X.rows(); }
  Index K() const { return T.rows(); }
  Index M() const { return Y.rows(); }
};

Dataset generate_dataset(const Dgp& dgp, Index n, std::uint64_t seed);

/// Every binary component over {0, 1} and every continuous one over the
/// grid {0, 1/(g-1), ..., 1}, lexicographic with component 0 most
/// significant. The all-zeros vector comes first.
std::vector<TreatmentVector> enumerate_eval_treatments(const TreatmentSpec& spec, Index grid_size);

// Files.

/// Header `x0..x{p-1},t0..t{K-1},y0..y{M-1}`, one record per line, %.17g.
void write_dataset_csv(const Dataset& data, std::ostream& out);
void write_dataset_csv(const Dataset& data, const std::filesystem::path& path);
/// Treatment kinds are inferred: a column holding only 0 and 1 is binary.
Dataset read_dataset_csv(std::istream& in);
Dataset read_dataset_csv(const std::filesystem::path& path);

std::string dgp_to_json(const Dgp& dgp);
Dgp dgp_from_json(std::string_view text);
void write_dgp(const Dgp& dgp, const std::filesystem::path& path);
Dgp read_dgp(const std::filesystem::path& path);

}  // namespace hl
