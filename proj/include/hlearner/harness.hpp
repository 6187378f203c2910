#pragma once

// Seeded comparative sweeps: one axis (N, K or M) varies, every other setting
// is fixed, and each (axis value, repetition, learner) is an independent run.
//
// Seed derivation for repetition r:
//   run seed   = seed_base + r   (dataset draw and TrainConfig::seed)
//   dgp seed   = dgp.seed + r    (or dgp.seed when fresh_per_repetition is false)
//   test seed  = hash_key(run seed, {kTestCovariateStream})

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hlearner/learners.hpp"
#include "hlearner/metrics.hpp"

namespace hl {

inline constexpr std::uint64_t kTestCovariateStream = 0x7e57;
/// Environment variable holding the default output directory.
inline constexpr const char* kOutputDirEnv = "HLEARNER_OUTPUT_DIR";

enum class SweepAxis { N, K, M };
enum class TreatmentTemplate { Binary, Mixed };

std::string to_string(SweepAxis axis);
SweepAxis sweep_axis_from_string(std::string_view name);

TreatmentSpec make_treatment_spec(TreatmentTemplate tmpl, Index K);

struct ExperimentConfig {
  std::string name = "experiment";

  Index p = 10;
  TreatmentTemplate treatments = TreatmentTemplate::Binary;
  double gamma = 1.0;
  double sigma_y = 0.1;
  std::uint64_t dgp_seed = 0;
  bool fresh_dgp_per_repetition = true;

  // Values of the axes that do not vary.
  Index N = 1000;
  Index K = 5;
  Index M = 2;

  SweepAxis axis = SweepAxis::N;
  std::vector<Index> values{500, 1000, 2000, 4000, 8000};

  std::vector<LearnerKind> learners{LearnerKind::HLearner, LearnerKind::SLearner,
                                    LearnerKind::XSLearner};
  Index repetitions = 10;
  std::uint64_t seed_base = 0;
  TrainConfig train;

  Index n_test = 1000;
  Index grid = 5;
  ContrastMode contrast = ContrastMode::Reference;

  std::string output_dir;
  Index jobs = 1;

  void validate() const;
};

/// Documented schema; unknown keys at any level are errors.
ExperimentConfig experiment_config_from_json(const nlohmann::json& j);
nlohmann::json experiment_config_to_json(const ExperimentConfig& cfg);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

struct ResultRow {
  Index axis_value = 0;
  LearnerKind learner = LearnerKind::HLearner;
  std::uint64_t seed = 0;
  std::uint64_t dgp_seed = 0;
  bool ok = true;
  double pehe_composite = 0.0;
  std::vector<double> pehe_per_outcome;
  double factual_rmse = 0.0;
  double train_seconds = 0.0;
  std::string error;

  bool operator==(const ResultRow&) const = default;
};

struct AggregateRow {
  Index axis_value = 0;
  LearnerKind learner = LearnerKind::HLearner;
  double mean_pehe = 0.0;
  double stderr_pehe = 0.0;
  Index n_seeds = 0;

  bool operator==(const AggregateRow&) const = default;
};

struct ResultTable {
  SweepAxis axis = SweepAxis::N;
  std::vector<ResultRow> rows;
  std::vector<AggregateRow> aggregates;

  Index failures() const;
  bool operator==(const ResultTable&) const = default;
};

struct MeanStderr {
  double mean = 0.0;
  double standard_error = 0.0;
};

/// Mean and sample-sd / sqrt(n); stderr is 0 for a single value. Throws on empty input.
MeanStderr mean_and_stderr(const std::vector<double>& values);

/// Groups successful rows by (axis_value, learner), in sorted order.
std::vector<AggregateRow> aggregate(const std::vector<ResultRow>& rows);

/// Orders rows by (axis_value, learner, seed).
void sort_rows(std::vector<ResultRow>& rows);

struct RunProgress {
  std::size_t done = 0;
  std::size_t total = 0;
  const ResultRow* row = nullptr;
};

/// One train-and-evaluate run; failures become rows with ok = false.
ResultRow run_single(const ExperimentConfig& cfg, Index axis_value, Index repetition,
                     LearnerKind learner);

ResultTable run_experiment(const ExperimentConfig& cfg,
                           const std::function<void(const RunProgress&)>& progress = {});

// Files. `stem` names three CSVs: <stem>_raw.csv, <stem>_aggregate.csv and
// <stem>_timing.csv. Wall-clock times live only in the timing file so the raw
// and aggregate files are byte-stable across runs.
//
// raw:       axis,axis_value,learner,seed,dgp_seed,status,pehe_composite,
//            pehe_per_outcome,factual_rmse,error
//            (pehe_per_outcome is ';'-separated, one entry per outcome)
// aggregate: axis,axis_value,learner,mean_pehe,stderr_pehe,n_seeds
// timing:    axis_value,learner,seed,train_seconds
struct CsvPaths {
  std::filesystem::path raw;
  std::filesystem::path aggregate;
  std::filesystem::path timing;
};

CsvPaths csv_paths(const std::filesystem::path& dir, const std::string& stem);
std::string raw_csv(const ResultTable& table);
std::string aggregate_csv(const ResultTable& table);
std::string timing_csv(const ResultTable& table);
CsvPaths emit_csv(const ResultTable& table, const std::filesystem::path& dir, const std::string& stem);
ResultTable read_results(const std::filesystem::path& dir, const std::string& stem);
ResultTable parse_results(const std::string& raw, const std::string& aggregate,
                          const std::string& timing);
std::vector<AggregateRow> parse_aggregate_csv(const std::string& text, SweepAxis* axis = nullptr);

/// Line chart of mean PEHE against the axis value, one polyline per learner,
/// shaded +-1 standard error band, one circle marker per point.
std::string render_plot(const std::vector<AggregateRow>& aggregates, SweepAxis axis,
                        const std::string& title);
void emit_plot(const std::vector<AggregateRow>& aggregates, SweepAxis axis, const std::string& title,
               const std::filesystem::path& path);

}  // namespace hl
