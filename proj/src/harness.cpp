#include "hlearner/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <mutex>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <tuple>

#include "hlearner/rng.hpp"
#include "hlearner/serialize.hpp"
#include "hlearner/text.hpp"

namespace hl {
namespace {

using nlohmann::json;

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  require(j.is_object(), where + " must be an object");
  for (const auto& [key, value] : j.items())
    require(allowed.count(key) == 1, "unknown key '" + key + "' in " + where);
}

std::string sanitize(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  return s;
}

std::string template_name(TreatmentTemplate t) {
  return t == TreatmentTemplate::Binary ? "binary" : "mixed";
}

TreatmentTemplate template_from_string(const std::string& s) {
  if (s == "binary") return TreatmentTemplate::Binary;
  if (s == "mixed") return TreatmentTemplate::Mixed;
  throw std::invalid_argument("treatments must be 'binary' or 'mixed', got '" + s + "'");
}

std::string contrast_name(ContrastMode c) {
  return c == ContrastMode::Reference ? "reference" : "all_pairs";
}

ContrastMode contrast_from_string(const std::string& s) {
  if (s == "reference") return ContrastMode::Reference;
  if (s == "all_pairs") return ContrastMode::AllPairs;
  throw std::invalid_argument("contrast must be 'reference' or 'all_pairs', got '" + s + "'");
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) out.push_back(line);
  return out;
}

void expect_header(const std::vector<std::string>& lines, const std::string& header,
                   const std::string& what) {
  require(!lines.empty() && lines.front() == header, what + " CSV header must be '" + header + "'");
}

const char* kRawHeader =
    "axis,axis_value,learner,seed,dgp_seed,status,pehe_composite,pehe_per_outcome,factual_rmse,error";
const char* kAggregateHeader = "axis,axis_value,learner,mean_pehe,stderr_pehe,n_seeds";
const char* kTimingHeader = "axis_value,learner,seed,train_seconds";

auto row_key(const ResultRow& r) { return std::make_tuple(r.axis_value, r.learner, r.seed); }

}  // namespace

std::string to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::N: return "N";
    case SweepAxis::K: return "K";
    case SweepAxis::M: return "M";
  }
  return "?";
}

SweepAxis sweep_axis_from_string(std::string_view name) {
  if (name == "N") return SweepAxis::N;
  if (name == "K") return SweepAxis::K;
  if (name == "M") return SweepAxis::M;
  throw std::invalid_argument("sweep axis must be N, K or M, got '" + std::string(name) + "'");
}

TreatmentSpec make_treatment_spec(TreatmentTemplate tmpl, Index K) {
  return tmpl == TreatmentTemplate::Binary ? TreatmentSpec::all_binary(K) : TreatmentSpec::mixed(K);
}

void ExperimentConfig::validate() const {
  require(p >= 1, "p must be positive");
  require(std::isfinite(gamma) && gamma >= 0.0, "gamma must be non-negative");
  require(std::isfinite(sigma_y) && sigma_y >= 0.0, "sigma_y must be non-negative");
  require(N >= 1 && K >= 1 && M >= 1, "fixed N, K and M must be positive");
  require(!values.empty(), "sweep needs at least one axis value");
  for (Index v : values) require(v >= 1, "sweep values must be positive");
  require(!learners.empty(), "at least one learner is required");
  require(repetitions >= 1, "repetitions must be at least 1");
  require(n_test >= 1, "n_test must be positive");
  require(grid >= 2, "grid must be at least 2");
  require(jobs >= 1, "jobs must be positive");
  train.validate();
}

ExperimentConfig experiment_config_from_json(const json& j) {
  check_keys(j, {"name", "dgp", "fixed", "sweep", "learners", "repetitions", "seed_base", "train",
                 "eval", "output_dir", "jobs"},
             "experiment config");
  ExperimentConfig cfg;
  cfg.name = j.value("name", cfg.name);
  if (j.contains("dgp")) {
    const json& d = j["dgp"];
    check_keys(d, {"p", "treatments", "gamma", "sigma_y", "seed", "fresh_per_repetition"}, "dgp");
    cfg.p = d.value("p", cfg.p);
    if (d.contains("treatments")) cfg.treatments = template_from_string(d["treatments"].get<std::string>());
    cfg.gamma = d.value("gamma", cfg.gamma);
    cfg.sigma_y = d.value("sigma_y", cfg.sigma_y);
    cfg.dgp_seed = d.value("seed", cfg.dgp_seed);
    cfg.fresh_dgp_per_repetition = d.value("fresh_per_repetition", cfg.fresh_dgp_per_repetition);
  }
  if (j.contains("fixed")) {
    const json& f = j["fixed"];
    check_keys(f, {"N", "K", "M"}, "fixed");
    cfg.N = f.value("N", cfg.N);
    cfg.K = f.value("K", cfg.K);
    cfg.M = f.value("M", cfg.M);
  }
  if (j.contains("sweep")) {
    const json& s = j["sweep"];
    check_keys(s, {"axis", "values"}, "sweep");
    if (s.contains("axis")) cfg.axis = sweep_axis_from_string(s["axis"].get<std::string>());
    if (s.contains("values")) cfg.values = s["values"].get<std::vector<Index>>();
  }
  if (j.contains("learners")) {
    cfg.learners.clear();
    for (const auto& l : j["learners"]) cfg.learners.push_back(learner_from_string(l.get<std::string>()));
  }
  cfg.repetitions = j.value("repetitions", cfg.repetitions);
  cfg.seed_base = j.value("seed_base", cfg.seed_base);
  if (j.contains("train")) cfg.train = train_config_from_json(j["train"], cfg.train);
  if (j.contains("eval")) {
    const json& e = j["eval"];
    check_keys(e, {"n_test", "grid", "contrast"}, "eval");
    cfg.n_test = e.value("n_test", cfg.n_test);
    cfg.grid = e.value("grid", cfg.grid);
    if (e.contains("contrast")) cfg.contrast = contrast_from_string(e["contrast"].get<std::string>());
  }
  cfg.output_dir = j.value("output_dir", cfg.output_dir);
  cfg.jobs = j.value("jobs", cfg.jobs);
  cfg.validate();
  return cfg;
}

json experiment_config_to_json(const ExperimentConfig& cfg) {
  json learners = json::array();
  for (auto l : cfg.learners) learners.push_back(to_string(l));
  return {{"name", cfg.name},
          {"dgp",
           {{"p", cfg.p},
            {"treatments", template_name(cfg.treatments)},
            {"gamma", cfg.gamma},
            {"sigma_y", cfg.sigma_y},
            {"seed", cfg.dgp_seed},
            {"fresh_per_repetition", cfg.fresh_dgp_per_repetition}}},
          {"fixed", {{"N", cfg.N}, {"K", cfg.K}, {"M", cfg.M}}},
          {"sweep", {{"axis", to_string(cfg.axis)}, {"values", cfg.values}}},
          {"learners", learners},
          {"repetitions", cfg.repetitions},
          {"seed_base", cfg.seed_base},
          {"train", train_config_to_json(cfg.train)},
          {"eval", {{"n_test", cfg.n_test}, {"grid", cfg.grid}, {"contrast", contrast_name(cfg.contrast)}}},
          {"output_dir", cfg.output_dir},
          {"jobs", cfg.jobs}};
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  return experiment_config_from_json(json::parse(read_text_file(path)));
}

Index ResultTable::failures() const {
  return static_cast<Index>(std::count_if(rows.begin(), rows.end(), [](const auto& r) { return !r.ok; }));
}

MeanStderr mean_and_stderr(const std::vector<double>& values) {
  require(!values.empty(), "cannot aggregate an empty group");
  const double n = static_cast<double>(values.size());
  MeanStderr out;
  out.mean = pairwise_sum(values) / n;
  if (values.size() > 1) {
    std::vector<double> sq;
    for (double v : values) sq.push_back((v - out.mean) * (v - out.mean));
    out.standard_error = std::sqrt(pairwise_sum(sq) / (n - 1.0)) / std::sqrt(n);
  }
  return out;
}

void sort_rows(std::vector<ResultRow>& rows) {
  std::stable_sort(rows.begin(), rows.end(),
                   [](const ResultRow& a, const ResultRow& b) { return row_key(a) < row_key(b); });
}

std::vector<AggregateRow> aggregate(const std::vector<ResultRow>& rows) {
  std::vector<ResultRow> sorted = rows;
  sort_rows(sorted);
  std::vector<AggregateRow> out;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    std::vector<double> values;
    while (j < sorted.size() && sorted[j].axis_value == sorted[i].axis_value &&
           sorted[j].learner == sorted[i].learner) {
      if (sorted[j].ok) values.push_back(sorted[j].pehe_composite);
      ++j;
    }
    if (!values.empty()) {
      const MeanStderr s = mean_and_stderr(values);
      out.push_back({sorted[i].axis_value, sorted[i].learner, s.mean, s.standard_error,
                     static_cast<Index>(values.size())});
    }
    i = j;
  }
  return out;
}

ResultRow run_single(const ExperimentConfig& cfg, Index axis_value, Index repetition,
                     LearnerKind learner) {
  ResultRow row;
  row.axis_value = axis_value;
  row.learner = learner;
  row.seed = cfg.seed_base + static_cast<std::uint64_t>(repetition);
  row.dgp_seed = cfg.dgp_seed + (cfg.fresh_dgp_per_repetition ? static_cast<std::uint64_t>(repetition) : 0);
  try {
    Index N = cfg.N, K = cfg.K, M = cfg.M;
    (cfg.axis == SweepAxis::N ? N : cfg.axis == SweepAxis::K ? K : M) = axis_value;
    const TreatmentSpec spec = make_treatment_spec(cfg.treatments, K);
    const Dgp dgp = sample_dgp(cfg.p, spec, M, cfg.gamma, cfg.sigma_y, row.dgp_seed);
    const Dataset data = generate_dataset(dgp, N, row.seed);
    const Eigen::MatrixXd X_test =
        sample_covariates(cfg.p, cfg.n_test, hash_key(row.seed, {kTestCovariateStream}));

    TrainConfig tc = cfg.train;
    tc.seed = row.seed;
    const auto start = std::chrono::steady_clock::now();
    const TrainResult trained = train(learner, data, tc);
    row.train_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    const auto eval_treatments = enumerate_eval_treatments(spec, cfg.grid);
    const OutcomePredictor predictor = model_predictor(trained.model);
    const EvalReport report =
        pehe_composite(predictor, dgp, X_test, eval_treatments, eval_treatments.front(), cfg.contrast);
    row.pehe_composite = report.pehe_composite;
    row.pehe_per_outcome.assign(report.pehe_per_outcome.data(),
                                report.pehe_per_outcome.data() + report.pehe_per_outcome.size());
    row.factual_rmse = factual_rmse(predictor, data);
  } catch (const std::exception& e) {
    row.ok = false;
    row.pehe_composite = 0.0;
    row.pehe_per_outcome.clear();
    row.factual_rmse = 0.0;
    row.error = sanitize(e.what());
  }
  return row;
}

ResultTable run_experiment(const ExperimentConfig& cfg,
                           const std::function<void(const RunProgress&)>& progress) {
  cfg.validate();
  struct Job {
    Index axis_value;
    Index repetition;
    LearnerKind learner;
  };
  std::vector<Job> jobs;
  for (Index v : cfg.values)
    for (Index r = 0; r < cfg.repetitions; ++r)
      for (LearnerKind l : cfg.learners) jobs.push_back({v, r, l});

  std::vector<ResultRow> rows(jobs.size());
  std::atomic<std::size_t> next{0};
  std::size_t done = 0;
  std::mutex mu;
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      rows[i] = run_single(cfg, jobs[i].axis_value, jobs[i].repetition, jobs[i].learner);
      std::lock_guard lock(mu);
      ++done;
      if (progress) progress({done, jobs.size(), &rows[i]});
    }
  };
  const std::size_t threads = std::min<std::size_t>(static_cast<std::size_t>(cfg.jobs), jobs.size());
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  ResultTable table;
  table.axis = cfg.axis;
  table.rows = std::move(rows);
  sort_rows(table.rows);
  table.aggregates = aggregate(table.rows);
  return table;
}

CsvPaths csv_paths(const std::filesystem::path& dir, const std::string& stem) {
  return {dir / (stem + "_raw.csv"), dir / (stem + "_aggregate.csv"), dir / (stem + "_timing.csv")};
}

std::string raw_csv(const ResultTable& table) {
  std::vector<ResultRow> rows = table.rows;
  sort_rows(rows);
  std::ostringstream ss;
  ss << kRawHeader << '\n';
  for (const auto& r : rows) {
    std::vector<std::string> per;
    for (double v : r.pehe_per_outcome) per.push_back(format_double(v));
    ss << to_string(table.axis) << ',' << r.axis_value << ',' << to_string(r.learner) << ',' << r.seed
       << ',' << r.dgp_seed << ',' << (r.ok ? "ok" : "failed") << ','
       << (r.ok ? format_double(r.pehe_composite) : "") << ',' << join(per, ';') << ','
       << (r.ok ? format_double(r.factual_rmse) : "") << ',' << sanitize(r.error) << '\n';
  }
  return ss.str();
}

std::string aggregate_csv(const ResultTable& table) {
  std::ostringstream ss;
  ss << kAggregateHeader << '\n';
  for (const auto& a : table.aggregates)
    ss << to_string(table.axis) << ',' << a.axis_value << ',' << to_string(a.learner) << ','
       << format_double(a.mean_pehe) << ',' << format_double(a.stderr_pehe) << ',' << a.n_seeds
       << '\n';
  return ss.str();
}

std::string timing_csv(const ResultTable& table) {
  std::vector<ResultRow> rows = table.rows;
  sort_rows(rows);
  std::ostringstream ss;
  ss << kTimingHeader << '\n';
  for (const auto& r : rows)
    ss << r.axis_value << ',' << to_string(r.learner) << ',' << r.seed << ','
       << format_double(r.train_seconds) << '\n';
  return ss.str();
}

CsvPaths emit_csv(const ResultTable& table, const std::filesystem::path& dir, const std::string& stem) {
  const CsvPaths paths = csv_paths(dir, stem);
  write_text_file(paths.raw, raw_csv(table));
  write_text_file(paths.aggregate, aggregate_csv(table));
  write_text_file(paths.timing, timing_csv(table));
  return paths;
}

std::vector<AggregateRow> parse_aggregate_csv(const std::string& text, SweepAxis* axis) {
  const auto lines = lines_of(text);
  expect_header(lines, kAggregateHeader, "aggregate");
  std::vector<AggregateRow> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto f = split(lines[i], ',');
    require(f.size() == 6, "aggregate CSV line " + std::to_string(i + 1) + " needs 6 fields");
    if (axis) *axis = sweep_axis_from_string(f[0]);
    out.push_back({static_cast<Index>(parse_integer(f[1])), learner_from_string(f[2]),
                   parse_double(f[3]), parse_double(f[4]), static_cast<Index>(parse_integer(f[5]))});
  }
  return out;
}

ResultTable parse_results(const std::string& raw, const std::string& aggregate_text,
                          const std::string& timing) {
  ResultTable table;
  const auto lines = lines_of(raw);
  expect_header(lines, kRawHeader, "raw");
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto f = split(lines[i], ',');
    require(f.size() == 10, "raw CSV line " + std::to_string(i + 1) + " needs 10 fields");
    table.axis = sweep_axis_from_string(f[0]);
    ResultRow r;
    r.axis_value = static_cast<Index>(parse_integer(f[1]));
    r.learner = learner_from_string(f[2]);
    r.seed = std::stoull(f[3]);
    r.dgp_seed = std::stoull(f[4]);
    require(f[5] == "ok" || f[5] == "failed", "raw CSV status must be ok or failed");
    r.ok = f[5] == "ok";
    if (r.ok) {
      r.pehe_composite = parse_double(f[6]);
      for (const auto& v : split(f[7], ';')) r.pehe_per_outcome.push_back(parse_double(v));
      r.factual_rmse = parse_double(f[8]);
    }
    r.error = f[9];
    table.rows.push_back(std::move(r));
  }

  const auto tlines = lines_of(timing);
  expect_header(tlines, kTimingHeader, "timing");
  require(tlines.size() == lines.size(), "timing CSV and raw CSV have different row counts");
  for (std::size_t i = 1; i < tlines.size(); ++i) {
    const auto f = split(tlines[i], ',');
    require(f.size() == 4, "timing CSV line " + std::to_string(i + 1) + " needs 4 fields");
    ResultRow& r = table.rows[i - 1];
    require(parse_integer(f[0]) == r.axis_value && learner_from_string(f[1]) == r.learner &&
                std::stoull(f[2]) == r.seed,
            "timing CSV row " + std::to_string(i + 1) + " does not match the raw CSV");
    r.train_seconds = parse_double(f[3]);
  }
  table.aggregates = parse_aggregate_csv(aggregate_text);
  return table;
}

ResultTable read_results(const std::filesystem::path& dir, const std::string& stem) {
  const CsvPaths paths = csv_paths(dir, stem);
  return parse_results(read_text_file(paths.raw), read_text_file(paths.aggregate),
                       read_text_file(paths.timing));
}

}  // namespace hl
