#include <cmath>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "hlearner/data_gen.hpp"

namespace {

using hl::Dgp;
using hl::Index;
using hl::TreatmentSpec;
using Eigen::MatrixXd;
using Eigen::VectorXd;

Dgp zero_dgp(Index p, Index K, Index M) {
  Dgp d = hl::sample_dgp(p, TreatmentSpec::all_binary(K), M, 1.0, 0.0, 0);
  d.baseline_weights.setZero();
  d.main_effects.setZero();
  for (auto& v : d.modifier_weights) v.setZero();
  for (auto& i : d.interactions) i.setZero();
  return d;
}

double correlation(const VectorXd& a, const VectorXd& b) {
  const VectorXd ac = a.array() - a.mean();
  const VectorXd bc = b.array() - b.mean();
  return ac.dot(bc) / std::sqrt(ac.squaredNorm() * bc.squaredNorm());
}

TEST(TreatmentSpec, ParseAndCode) {
  EXPECT_EQ(TreatmentSpec::parse("CBBBB"), TreatmentSpec::mixed(5));
  EXPECT_EQ(TreatmentSpec::parse("BBB"), TreatmentSpec::all_binary(3));
  EXPECT_EQ(TreatmentSpec::mixed(3).code(), "CBB");
  EXPECT_THROW(TreatmentSpec::parse("BX"), std::invalid_argument);
  EXPECT_THROW(TreatmentSpec::parse(""), std::invalid_argument);
}

TEST(ValidateTreatment, RejectsNonConforming) {
  const auto spec = TreatmentSpec::parse("CB");
  VectorXd t(2);
  t << 0.3, 1.0;
  EXPECT_NO_THROW(hl::validate_treatment(spec, t));
  t << 0.3, 0.5;
  EXPECT_THROW(hl::validate_treatment(spec, t), std::invalid_argument);
  t << 1.3, 0.0;
  EXPECT_THROW(hl::validate_treatment(spec, t), std::invalid_argument);
  EXPECT_THROW(hl::validate_treatment(spec, VectorXd::Zero(3)), std::invalid_argument);
}

TEST(SampleDgp, DeterministicInSeed) {
  const auto spec = TreatmentSpec::all_binary(3);
  const Dgp a = hl::sample_dgp(4, spec, 2, 1.0, 0.1, 0);
  const Dgp b = hl::sample_dgp(4, spec, 2, 1.0, 0.1, 0);
  const Dgp c = hl::sample_dgp(4, spec, 2, 1.0, 0.1, 1);
  EXPECT_TRUE(a == b);
  EXPECT_EQ(a.fingerprint(), b.fingerprint());
  EXPECT_FALSE(a == c);
  EXPECT_NE(a.fingerprint(), c.fingerprint());
  EXPECT_EQ(a.propensity_weights.rows(), 3);
  EXPECT_EQ(a.propensity_weights.cols(), 4);
  EXPECT_EQ(a.main_effects.rows(), 2);
  EXPECT_EQ(a.main_effects.cols(), 3);
  ASSERT_EQ(a.interactions.size(), 2u);
  for (const auto& d : a.interactions)
    for (Index i = 0; i < 3; ++i)
      for (Index j = 0; j <= i; ++j) EXPECT_EQ(d(i, j), 0.0);
}

TEST(SampleDgp, SingleTreatmentHasNoInteractions) {
  const Dgp d = hl::sample_dgp(3, TreatmentSpec::all_binary(1), 2, 1.0, 0.1, 5);
  for (const auto& i : d.interactions) EXPECT_TRUE(i.isZero(0.0));
  VectorXd x = VectorXd::Random(3);
  VectorXd t = VectorXd::Ones(1);
  const double expected = d.baseline_weights.row(0).dot(x) / std::sqrt(3.0) +
                          d.main_effects(0, 0) * (1 + d.modifier_weights[0].row(0).dot(x) / std::sqrt(3.0));
  EXPECT_NEAR(hl::mean_outcome(d, x, t, 0), expected, 1e-14);
}

TEST(MeanOutcome, ZeroCoefficientsGiveZero) {
  const Dgp d = zero_dgp(3, 2, 2);
  VectorXd x(3);
  x << 1, -2, 0.5;
  VectorXd t(2);
  t << 1, 1;
  EXPECT_EQ(hl::mean_outcome(d, x, t, 0), 0.0);
  EXPECT_EQ(hl::mean_outcome(d, x, t, 1), 0.0);
}

TEST(MeanOutcome, BaselineOnly) {
  Dgp d = zero_dgp(4, 2, 1);
  d.baseline_weights << 1, 2, 3, 4;
  VectorXd x(4);
  x << 1, 1, 1, 1;
  VectorXd t(2);
  t << 1, 0;
  EXPECT_DOUBLE_EQ(hl::mean_outcome(d, x, t, 0), 10.0 / 2.0);
}

TEST(MeanOutcome, MainEffectsAndInteraction) {
  // alpha = 1, c = [1, 2], v = 0, d_01 = 3, x = 1, t = [1, 1]: 1 + 1 + 2 + 3.
  Dgp d = zero_dgp(1, 2, 1);
  d.baseline_weights << 1;
  d.main_effects << 1, 2;
  d.interactions[0](0, 1) = 3;
  EXPECT_DOUBLE_EQ(hl::mean_outcome(d, VectorXd::Ones(1), VectorXd::Ones(2), 0), 7.0);
  EXPECT_EQ(hl::mean_outcomes(d, VectorXd::Ones(1), VectorXd::Ones(2))(0), 7.0);
}

TEST(Propensity, ClippedAwayFromZeroAndOne) {
  EXPECT_DOUBLE_EQ(hl::binary_propensity(0.0, 3.0), 0.5);
  EXPECT_GE(hl::binary_propensity(50.0, -1.0), hl::kMinPropensity);
  EXPECT_LE(hl::binary_propensity(50.0, 1.0), 1.0 - hl::kMinPropensity);
  EXPECT_GT(hl::binary_propensity(1.0, 1.0), 0.5);
}

TEST(GenerateDataset, NoConfoundingGivesFairCoins) {
  const Dgp d = hl::sample_dgp(5, TreatmentSpec::all_binary(3), 1, 0.0, 0.1, 2);
  const Index n = 10000;
  const auto data = hl::generate_dataset(d, n, 9);
  const double band = 3.0 * std::sqrt(0.25 / static_cast<double>(n));
  for (Index k = 0; k < 3; ++k) EXPECT_NEAR(data.T.row(k).mean(), 0.5, band) << "component " << k;
}

TEST(GenerateDataset, NoiselessIsConsistent) {
  const Dgp d = hl::sample_dgp(4, TreatmentSpec::mixed(3), 2, 1.0, 0.0, 3);
  const auto data = hl::generate_dataset(d, 200, 1);
  for (Index i = 0; i < data.N(); ++i)
    for (Index m = 0; m < 2; ++m)
      EXPECT_EQ(data.Y(m, i), hl::mean_outcome(d, data.X.col(i), data.T.col(i), m));
}

TEST(GenerateDataset, NoiseIsRecorded) {
  const Dgp d = hl::sample_dgp(4, TreatmentSpec::all_binary(2), 2, 1.0, 0.5, 3);
  const auto data = hl::generate_dataset(d, 50, 1);
  for (Index i = 0; i < data.N(); ++i)
    for (Index m = 0; m < 2; ++m)
      EXPECT_NEAR(data.Y(m, i), hl::mean_outcome(d, data.X.col(i), data.T.col(i), m) + data.noise(m, i),
                  1e-12);
}

TEST(GenerateDataset, ConfoundingStrengthensWithGamma) {
  const auto spec = TreatmentSpec::all_binary(2);
  const Dgp weak = hl::sample_dgp(5, spec, 1, 0.5, 0.1, 4);
  const Dgp strong = hl::sample_dgp(5, spec, 1, 5.0, 0.1, 4);
  auto corr = [](const Dgp& d) {
    const auto data = hl::generate_dataset(d, 5000, 6);
    VectorXd s(data.N());
    for (Index i = 0; i < data.N(); ++i) s[i] = hl::treatment_scores(d, data.X.col(i))[0];
    return correlation(s, data.T.row(0).transpose());
  };
  EXPECT_GT(corr(strong), corr(weak));
}

TEST(GenerateDataset, TreatmentsConformAndAreRegenerable) {
  const Dgp d = hl::sample_dgp(3, TreatmentSpec::mixed(4), 2, 50.0, 0.1, 8);
  const auto data = hl::generate_dataset(d, 300, 12);
  for (Index i = 0; i < data.N(); ++i) {
    EXPECT_NO_THROW(hl::validate_treatment(d.spec, data.T.col(i)));
    EXPECT_EQ(VectorXd(data.T.col(i)), hl::assign_treatment(d, data.X.col(i), 12, i));
  }
  for (Index i = 0; i < data.N(); ++i) {
    const VectorXd s = hl::treatment_scores(d, data.X.col(i));
    for (Index k = 1; k < 4; ++k) {
      const double e = hl::binary_propensity(d.gamma, s[k]);
      EXPECT_GE(e, hl::kMinPropensity);
      EXPECT_LE(e, 1 - hl::kMinPropensity);
    }
  }
}

TEST(GenerateDataset, DeterministicInSeeds) {
  const Dgp d = hl::sample_dgp(3, TreatmentSpec::all_binary(2), 2, 1.0, 0.1, 0);
  const auto a = hl::generate_dataset(d, 100, 4);
  const auto b = hl::generate_dataset(d, 100, 4);
  const auto c = hl::generate_dataset(d, 100, 5);
  EXPECT_EQ(a.X, b.X);
  EXPECT_EQ(a.T, b.T);
  EXPECT_EQ(a.Y, b.Y);
  EXPECT_NE(a.X, c.X);
  EXPECT_EQ(a.dgp_fingerprint, d.fingerprint());
}

TEST(EnumerateEvalTreatments, BinaryPair) {
  const auto ts = hl::enumerate_eval_treatments(TreatmentSpec::all_binary(2), 5);
  ASSERT_EQ(ts.size(), 4u);
  const std::vector<std::vector<double>> expected{{0, 0}, {0, 1}, {1, 0}, {1, 1}};
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(ts[i][0], expected[i][0]);
    EXPECT_EQ(ts[i][1], expected[i][1]);
  }
}

TEST(EnumerateEvalTreatments, ContinuousGrid) {
  const auto ts = hl::enumerate_eval_treatments(TreatmentSpec::parse("C"), 5);
  ASSERT_EQ(ts.size(), 5u);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_DOUBLE_EQ(ts[i][0], 0.25 * static_cast<double>(i));
}

TEST(EnumerateEvalTreatments, MixedFiveComponents) {
  const auto ts = hl::enumerate_eval_treatments(TreatmentSpec::mixed(5), 5);
  ASSERT_EQ(ts.size(), 80u);
  EXPECT_TRUE(ts.front().isZero(0.0));
  std::set<std::vector<double>> unique;
  for (const auto& t : ts) unique.insert(std::vector<double>(t.data(), t.data() + t.size()));
  EXPECT_EQ(unique.size(), 80u);
  EXPECT_THROW(hl::enumerate_eval_treatments(TreatmentSpec::mixed(2), 1), std::invalid_argument);
}

TEST(Files, DatasetCsvRoundTripIsExact) {
  const Dgp d = hl::sample_dgp(3, TreatmentSpec::mixed(3), 2, 1.0, 0.1, 0);
  const auto data = hl::generate_dataset(d, 40, 2);
  std::stringstream ss;
  hl::write_dataset_csv(data, ss);
  const auto back = hl::read_dataset_csv(ss);
  EXPECT_EQ(back.X, data.X);
  EXPECT_EQ(back.T, data.T);
  EXPECT_EQ(back.Y, data.Y);
  EXPECT_EQ(back.spec, data.spec);
}

TEST(Files, DatasetCsvRejectsBadHeader) {
  std::stringstream ss("x0,y0,t0\n1,2,1\n");
  EXPECT_THROW(hl::read_dataset_csv(ss), std::exception);
}

TEST(Files, DgpJsonRoundTripIsExact) {
  const Dgp d = hl::sample_dgp(6, TreatmentSpec::mixed(4), 3, 2.5, 0.3, 17);
  const Dgp back = hl::dgp_from_json(hl::dgp_to_json(d));
  EXPECT_TRUE(back == d);
  EXPECT_EQ(back.fingerprint(), d.fingerprint());
}

TEST(Files, DgpJsonRejectsTampering) {
  const Dgp d = hl::sample_dgp(2, TreatmentSpec::all_binary(2), 1, 1.0, 0.1, 1);
  std::string text = hl::dgp_to_json(d);
  const auto pos = text.find("\"gamma\"");
  ASSERT_NE(pos, std::string::npos);
  text.replace(text.find("1", pos + 7), 1, "2");
  EXPECT_THROW(hl::dgp_from_json(text), std::exception);
}

}  // namespace
