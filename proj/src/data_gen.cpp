#include "hlearner/data_gen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "hlearner/rng.hpp"

namespace hl {
namespace {

// Keys for the counter-based stream. Each coefficient or draw is keyed by its
// role and indices, so growing K or M never changes earlier values.
enum Role : std::uint64_t {
  kPropensityWeight = 1,
  kBaselineWeight = 2,
  kMainEffect = 3,
  kModifierWeight = 4,
  kInteraction = 5,
  kCovariate = 16,
  kTreatmentDraw = 17,
  kContinuousNoise = 18,
  kOutcomeNoise = 19,
};

constexpr double kInteractionScale = 0.5;

using U = std::uint64_t;

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

bool same(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::equal(a.data(), a.data() + a.size(), b.data());
}

}  // namespace

TreatmentSpec::TreatmentSpec(std::vector<TreatmentKind> kinds) : kinds_(std::move(kinds)) {
  require(!kinds_.empty(), "a treatment spec needs at least one component");
}

TreatmentSpec TreatmentSpec::all_binary(Index k) {
  require(k >= 1, "K must be at least 1");
  return TreatmentSpec(std::vector<TreatmentKind>(static_cast<std::size_t>(k), TreatmentKind::Binary));
}

TreatmentSpec TreatmentSpec::mixed(Index k) {
  require(k >= 1, "K must be at least 1");
  std::vector<TreatmentKind> kinds(static_cast<std::size_t>(k), TreatmentKind::Binary);
  kinds.front() = TreatmentKind::Continuous;
  return TreatmentSpec(std::move(kinds));
}

TreatmentSpec TreatmentSpec::parse(std::string_view code) {
  std::vector<TreatmentKind> kinds;
  for (char c : code) {
    if (c == 'B' || c == 'b')
      kinds.push_back(TreatmentKind::Binary);
    else if (c == 'C' || c == 'c')
      kinds.push_back(TreatmentKind::Continuous);
    else
      throw std::invalid_argument("treatment code '" + std::string(code) +
                                  "' may contain only B and C");
  }
  return TreatmentSpec(std::move(kinds));
}

std::string TreatmentSpec::code() const {
  std::string s;
  for (auto k : kinds_) s += k == TreatmentKind::Binary ? 'B' : 'C';
  return s;
}

void validate_treatment(const TreatmentSpec& spec, const TreatmentVector& t) {
  require(t.size() == spec.size(), "treatment vector has " + std::to_string(t.size()) +
                                       " components, spec has " + std::to_string(spec.size()));
  for (Index k = 0; k < t.size(); ++k) {
    if (spec.kind(k) == TreatmentKind::Binary)
      require(t[k] == 0.0 || t[k] == 1.0, "binary treatment component " + std::to_string(k) +
                                              " is not 0 or 1");
    else
      require(t[k] >= 0.0 && t[k] <= 1.0, "continuous treatment component " + std::to_string(k) +
                                              " is outside [0, 1]");
  }
}

bool operator==(const Dgp& a, const Dgp& b) {
  if (a.p != b.p || !(a.spec == b.spec) || a.M != b.M || a.gamma != b.gamma ||
      a.sigma_y != b.sigma_y || a.seed != b.seed)
    return false;
  if (!same(a.propensity_weights, b.propensity_weights) ||
      !same(a.baseline_weights, b.baseline_weights) || !same(a.main_effects, b.main_effects))
    return false;
  if (a.modifier_weights.size() != b.modifier_weights.size() ||
      a.interactions.size() != b.interactions.size())
    return false;
  for (std::size_t m = 0; m < a.modifier_weights.size(); ++m)
    if (!same(a.modifier_weights[m], b.modifier_weights[m])) return false;
  for (std::size_t m = 0; m < a.interactions.size(); ++m)
    if (!same(a.interactions[m], b.interactions[m])) return false;
  return true;
}

std::string Dgp::fingerprint() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix_bytes = [&h](const void* data, std::size_t n) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= bytes[i];
      h *= 0x100000001b3ULL;
    }
  };
  auto mix_matrix = [&](const Eigen::MatrixXd& m) {
    const Index dims[2] = {m.rows(), m.cols()};
    mix_bytes(dims, sizeof dims);
    mix_bytes(m.data(), sizeof(double) * static_cast<std::size_t>(m.size()));
  };
  const std::string kinds = spec.code();
  mix_bytes(kinds.data(), kinds.size());
  const Index dims[2] = {p, M};
  mix_bytes(dims, sizeof dims);
  mix_bytes(&gamma, sizeof gamma);
  mix_bytes(&sigma_y, sizeof sigma_y);
  mix_bytes(&seed, sizeof seed);
  mix_matrix(propensity_weights);
  mix_matrix(baseline_weights);
  mix_matrix(main_effects);
  for (const auto& v : modifier_weights) mix_matrix(v);
  for (const auto& d : interactions) mix_matrix(d);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Dgp sample_dgp(Index p, const TreatmentSpec& spec, Index M, double gamma, double sigma_y,
               std::uint64_t seed) {
  require(p >= 1, "p must be at least 1");
  require(M >= 1, "M must be at least 1");
  require(std::isfinite(gamma) && gamma >= 0.0, "gamma must be finite and non-negative");
  require(std::isfinite(sigma_y) && sigma_y >= 0.0, "sigma_y must be finite and non-negative");

  const Index K = spec.size();
  Dgp dgp;
  dgp.p = p;
  dgp.spec = spec;
  dgp.M = M;
  dgp.gamma = gamma;
  dgp.sigma_y = sigma_y;
  dgp.seed = seed;

  dgp.propensity_weights.resize(K, p);
  for (Index k = 0; k < K; ++k)
    for (Index j = 0; j < p; ++j)
      dgp.propensity_weights(k, j) = keyed_normal(seed, {kPropensityWeight, U(k), U(j)});

  dgp.baseline_weights.resize(M, p);
  dgp.main_effects.resize(M, K);
  for (Index m = 0; m < M; ++m) {
    for (Index j = 0; j < p; ++j)
      dgp.baseline_weights(m, j) = keyed_normal(seed, {kBaselineWeight, U(m), U(j)});
    for (Index k = 0; k < K; ++k)
      dgp.main_effects(m, k) = keyed_normal(seed, {kMainEffect, U(m), U(k)});

    Eigen::MatrixXd v(K, p);
    for (Index k = 0; k < K; ++k)
      for (Index j = 0; j < p; ++j) v(k, j) = keyed_normal(seed, {kModifierWeight, U(m), U(k), U(j)});
    dgp.modifier_weights.push_back(std::move(v));

    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(K, K);
    for (Index k = 0; k < K; ++k)
      for (Index k2 = k + 1; k2 < K; ++k2)
        d(k, k2) = kInteractionScale * keyed_normal(seed, {kInteraction, U(m), U(k), U(k2)});
    dgp.interactions.push_back(std::move(d));
  }
  return dgp;
}

double mean_outcome(const Dgp& dgp, const Eigen::VectorXd& x, const TreatmentVector& t, Index m) {
  require(m >= 0 && m < dgp.M, "outcome index " + std::to_string(m) + " out of range");
  require(x.size() == dgp.p, "covariate vector has wrong length");
  require(t.size() == dgp.K(), "treatment vector has wrong length");

  const double scale = 1.0 / std::sqrt(static_cast<double>(dgp.p));
  double mu = dgp.baseline_weights.row(m).dot(x) * scale;
  const Index K = dgp.K();
  const auto& v = dgp.modifier_weights[static_cast<std::size_t>(m)];
  for (Index k = 0; k < K; ++k)
    mu += dgp.main_effects(m, k) * (1.0 + v.row(k).dot(x) * scale) * t[k];
  const auto& d = dgp.interactions[static_cast<std::size_t>(m)];
  for (Index k = 0; k < K; ++k)
    for (Index k2 = k + 1; k2 < K; ++k2) mu += d(k, k2) * t[k] * t[k2];
  return mu;
}

Eigen::VectorXd mean_outcomes(const Dgp& dgp, const Eigen::VectorXd& x, const TreatmentVector& t) {
  Eigen::VectorXd mu(dgp.M);
  for (Index m = 0; m < dgp.M; ++m) mu[m] = mean_outcome(dgp, x, t, m);
  return mu;
}

Eigen::VectorXd treatment_scores(const Dgp& dgp, const Eigen::VectorXd& x) {
  require(x.size() == dgp.p, "covariate vector has wrong length");
  return dgp.propensity_weights * x / std::sqrt(static_cast<double>(dgp.p));
}

double binary_propensity(double gamma, double score) {
  return std::clamp(sigmoid(gamma * score), kMinPropensity, 1.0 - kMinPropensity);
}

TreatmentVector assign_treatment(const Dgp& dgp, const Eigen::VectorXd& x, std::uint64_t seed,
                                 Index record) {
  const Eigen::VectorXd s = treatment_scores(dgp, x);
  TreatmentVector t(dgp.K());
  for (Index k = 0; k < dgp.K(); ++k) {
    if (dgp.spec.kind(k) == TreatmentKind::Binary) {
      const double u = keyed_uniform(seed, {kTreatmentDraw, U(record), U(k)});
      t[k] = u < binary_propensity(dgp.gamma, s[k]) ? 1.0 : 0.0;
    } else {
      const double eps = keyed_normal(seed, {kContinuousNoise, U(record), U(k)});
      t[k] = sigmoid(dgp.gamma * s[k] + 0.5 * eps);
    }
  }
  return t;
}

Eigen::MatrixXd sample_covariates(Index p, Index n, std::uint64_t seed) {
  Eigen::MatrixXd X(p, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < p; ++j) X(j, i) = keyed_normal(seed, {kCovariate, U(i), U(j)});
  return X;
}

Dataset generate_dataset(const Dgp& dgp, Index n, std::uint64_t seed) {
  require(n >= 1, "dataset size must be at least 1");
  Dataset data;
  data.spec = dgp.spec;
  data.dgp_fingerprint = dgp.fingerprint();
  data.X = sample_covariates(dgp.p, n, seed);
  data.T.resize(dgp.K(), n);
  data.Y.resize(dgp.M, n);
  data.noise.resize(dgp.M, n);
  for (Index i = 0; i < n; ++i) {
    const Eigen::VectorXd x = data.X.col(i);
    const TreatmentVector t = assign_treatment(dgp, x, seed, i);
    data.T.col(i) = t;
    for (Index m = 0; m < dgp.M; ++m) {
      const double eta = dgp.sigma_y * keyed_normal(seed, {kOutcomeNoise, U(i), U(m)});
      data.noise(m, i) = eta;
      data.Y(m, i) = mean_outcome(dgp, x, t, m) + eta;
    }
  }
  return data;
}

std::vector<TreatmentVector> enumerate_eval_treatments(const TreatmentSpec& spec, Index grid_size) {
  require(grid_size >= 2, "grid size must be at least 2");
  const Index K = spec.size();
  std::vector<std::vector<double>> levels(static_cast<std::size_t>(K));
  for (Index k = 0; k < K; ++k) {
    auto& lv = levels[static_cast<std::size_t>(k)];
    if (spec.kind(k) == TreatmentKind::Binary) {
      lv = {0.0, 1.0};
    } else {
      for (Index g = 0; g < grid_size; ++g)
        lv.push_back(static_cast<double>(g) / static_cast<double>(grid_size - 1));
    }
  }

  std::vector<TreatmentVector> out;
  std::vector<std::size_t> digit(static_cast<std::size_t>(K), 0);
  while (true) {
    TreatmentVector t(K);
    for (Index k = 0; k < K; ++k) t[k] = levels[static_cast<std::size_t>(k)][digit[static_cast<std::size_t>(k)]];
    out.push_back(std::move(t));
    // Odometer increment, last component fastest.
    Index k = K - 1;
    for (; k >= 0; --k) {
      auto& d = digit[static_cast<std::size_t>(k)];
      if (++d < levels[static_cast<std::size_t>(k)].size()) break;
      d = 0;
    }
    if (k < 0) break;
  }
  return out;
}

}  // namespace hl
