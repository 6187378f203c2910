// Command-line front end: generate, train, evaluate, sweep, plot.
//
// Exit codes: 0 success, 1 usage or config error, 2 run failures occurred.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "hlearner/data_gen.hpp"
#include "hlearner/harness.hpp"
#include "hlearner/learners.hpp"
#include "hlearner/metrics.hpp"
#include "hlearner/serialize.hpp"
#include "hlearner/text.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path output_dir() {
  if (const char* env = std::getenv(hl::kOutputDirEnv); env && *env) return env;
  return ".";
}

fs::path resolve(const std::string& given, const char* default_name) {
  return given.empty() ? output_dir() / default_name : fs::path(given);
}

json report_to_json(const hl::EvalReport& r) {
  return {{"pehe_composite", r.pehe_composite},
          {"pehe_per_outcome", std::vector<double>(r.pehe_per_outcome.data(),
                                                   r.pehe_per_outcome.data() + r.pehe_per_outcome.size())},
          {"rmse_pehe_composite", std::sqrt(r.pehe_composite)},
          {"factual_rmse", r.factual_rmse},
          {"n_test", r.n_test},
          {"n_eval_treatments", r.n_eval_treatments},
          {"reference_treatment", std::vector<double>(r.reference_treatment.data(),
                                                      r.reference_treatment.data() +
                                                          r.reference_treatment.size())}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"H-Learner: hypernetwork treatment-effect estimation for composite treatments and outcomes"};
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "Sample a data-generating process and a factual dataset");
  hl::Index p = 10, outcomes = 2, n = 1000;
  std::string treatments = "BBBBB";
  double gamma = 1.0, sigma_y = 0.1;
  std::uint64_t dgp_seed = 0, data_seed = 0;
  std::string data_out, dgp_out;
  gen->add_option("--p", p, "Covariate dimension")->check(CLI::PositiveNumber);
  gen->add_option("--treatments", treatments, "Treatment kinds, one letter per component (B or C)");
  gen->add_option("--outcomes,-M", outcomes, "Number of outcomes")->check(CLI::PositiveNumber);
  gen->add_option("--gamma", gamma, "Confounding strength")->check(CLI::NonNegativeNumber);
  gen->add_option("--sigma-y", sigma_y, "Outcome noise scale")->check(CLI::NonNegativeNumber);
  gen->add_option("--dgp-seed", dgp_seed, "Seed for the generating process coefficients");
  gen->add_option("--n,-N", n, "Number of records")->check(CLI::PositiveNumber);
  gen->add_option("--seed", data_seed, "Seed for the records");
  gen->add_option("--out", data_out, "Dataset CSV path (default <outdir>/data.csv)");
  gen->add_option("--dgp-out", dgp_out, "Sidecar path (default <outdir>/dgp.json)");

  // train
  auto* tr = app.add_subcommand("train", "Train a learner on a dataset file");
  std::string train_data, learner_name = "HLearner", train_config, model_out, log_out;
  std::optional<std::uint64_t> train_seed;
  tr->add_option("--data", train_data, "Dataset CSV")->required();
  tr->add_option("--learner", learner_name, "HLearner, SLearner or XSLearner");
  tr->add_option("--config", train_config, "Train config JSON (keys override defaults)");
  tr->add_option("--seed", train_seed, "Training seed (overrides the config)");
  tr->add_option("--out", model_out, "Model path (default <outdir>/model.json)");
  tr->add_option("--log", log_out, "Training log CSV (default <outdir>/train_log.csv)");

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "Composite PEHE of a model against its generating process");
  std::string eval_model, eval_dgp, eval_data, eval_out, contrast = "reference";
  hl::Index n_test = 1000, grid = 5;
  std::uint64_t test_seed = 0;
  ev->add_option("--model", eval_model, "Model file")->required();
  ev->add_option("--dgp", eval_dgp, "Sidecar of the generating process")->required();
  ev->add_option("--data", eval_data, "Optional factual dataset for factual RMSE");
  ev->add_option("--n-test", n_test, "Number of test units")->check(CLI::PositiveNumber);
  ev->add_option("--grid", grid, "Grid points per continuous treatment")->check(CLI::Range(2, 1000));
  ev->add_option("--seed", test_seed, "Seed for test covariates");
  ev->add_option("--contrast", contrast, "reference or all_pairs");
  ev->add_option("--out", eval_out, "Also write the report JSON here");

  // sweep
  auto* sw = app.add_subcommand("sweep", "Run an experiment config: CSV tables and a chart");
  std::string sweep_config, sweep_dir;
  bool quiet = false;
  sw->add_option("--config", sweep_config, "Experiment config JSON")->required();
  sw->add_option("--output-dir", sweep_dir, "Overrides output_dir from the config");
  sw->add_flag("--quiet", quiet, "No per-run progress");

  // plot
  auto* pl = app.add_subcommand("plot", "Chart an aggregate CSV");
  std::string plot_csv, plot_out, plot_title = "Composite PEHE";
  pl->add_option("--csv", plot_csv, "Aggregate CSV from sweep")->required();
  pl->add_option("--out", plot_out, "SVG path (default <csv stem>.svg)");
  pl->add_option("--title", plot_title, "Chart title");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*gen) {
      const hl::Dgp dgp = hl::sample_dgp(p, hl::TreatmentSpec::parse(treatments), outcomes, gamma,
                                         sigma_y, dgp_seed);
      const hl::Dataset data = hl::generate_dataset(dgp, n, data_seed);
      const fs::path dpath = resolve(data_out, "data.csv");
      const fs::path gpath = resolve(dgp_out, "dgp.json");
      hl::write_dataset_csv(data, dpath);
      hl::write_dgp(dgp, gpath);
      std::cout << "wrote " << dpath.string() << " (" << data.N() << " records) and " << gpath.string()
                << " (fingerprint " << dgp.fingerprint() << ")\n";
      return 0;
    }

    if (*tr) {
      const hl::Dataset data = hl::read_dataset_csv(fs::path(train_data));
      hl::TrainConfig cfg;
      if (!train_config.empty())
        cfg = hl::train_config_from_json(json::parse(hl::read_text_file(train_config)));
      if (train_seed) cfg.seed = *train_seed;
      const auto kind = hl::learner_from_string(learner_name);
      const hl::TrainResult result = hl::train(kind, data, cfg);
      const fs::path mpath = resolve(model_out, "model.json");
      const fs::path lpath = resolve(log_out, "train_log.csv");
      hl::save_model(result.model, cfg, mpath);
      hl::write_text_file(lpath, result.log.to_csv());
      for (const auto& f : result.log.fits) {
        const auto& best = f.epochs[static_cast<std::size_t>(f.best_epoch)];
        std::cout << f.name << ": best epoch " << f.best_epoch << " of " << f.epochs.size() - 1
                  << ", validation loss " << best.validation_loss << "\n";
      }
      std::cout << "wrote " << mpath.string() << " and " << lpath.string() << "\n";
      return 0;
    }

    if (*ev) {
      const hl::SavedModel saved = hl::load_model(eval_model);
      const hl::Dgp dgp = hl::read_dgp(eval_dgp);
      const auto predictor = hl::model_predictor(saved.model);
      const auto eval_t = hl::enumerate_eval_treatments(dgp.spec, grid);
      const Eigen::MatrixXd X_test =
          hl::sample_covariates(dgp.p, n_test, hl::hash_key(test_seed, {hl::kTestCovariateStream}));
      const auto mode = contrast == "all_pairs" ? hl::ContrastMode::AllPairs
                        : contrast == "reference"
                            ? hl::ContrastMode::Reference
                            : throw std::invalid_argument("--contrast must be reference or all_pairs");
      hl::EvalReport report = hl::pehe_composite(predictor, dgp, X_test, eval_t, eval_t.front(), mode);
      if (!eval_data.empty())
        report.factual_rmse = hl::factual_rmse(predictor, hl::read_dataset_csv(fs::path(eval_data)));
      const std::string text = report_to_json(report).dump(2);
      std::cout << text << "\n";
      if (!eval_out.empty()) hl::write_text_file(eval_out, text + "\n");
      return 0;
    }

    if (*sw) {
      hl::ExperimentConfig cfg = hl::load_experiment_config(sweep_config);
      fs::path dir = !sweep_dir.empty()          ? fs::path(sweep_dir)
                     : !cfg.output_dir.empty()   ? fs::path(cfg.output_dir)
                                                 : output_dir();
      const hl::ResultTable table = hl::run_experiment(cfg, [&](const hl::RunProgress& pr) {
        if (quiet) return;
        const auto& r = *pr.row;
        std::cerr << "[" << pr.done << "/" << pr.total << "] " << hl::to_string(cfg.axis) << "="
                  << r.axis_value << " " << hl::to_string(r.learner) << " seed " << r.seed << ": "
                  << (r.ok ? "PEHE " + hl::format_double(r.pehe_composite) : "FAILED " + r.error)
                  << "\n";
      });
      const auto paths = hl::emit_csv(table, dir, cfg.name);
      std::cout << "wrote " << paths.raw.string() << ", " << paths.aggregate.string() << ", "
                << paths.timing.string() << "\n";
      if (!table.aggregates.empty()) {
        const fs::path svg = dir / (cfg.name + ".svg");
        hl::emit_plot(table.aggregates, table.axis, cfg.name, svg);
        std::cout << "wrote " << svg.string() << "\n";
      }
      if (table.failures() > 0) {
        std::cerr << table.failures() << " run(s) failed; see the error column of the raw CSV\n";
        return 2;
      }
      return 0;
    }

    if (*pl) {
      hl::SweepAxis axis = hl::SweepAxis::N;
      const auto rows = hl::parse_aggregate_csv(hl::read_text_file(plot_csv), &axis);
      fs::path out = plot_out.empty() ? fs::path(plot_csv).replace_extension(".svg") : fs::path(plot_out);
      hl::emit_plot(rows, axis, plot_title, out);
      std::cout << "wrote " << out.string() << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
