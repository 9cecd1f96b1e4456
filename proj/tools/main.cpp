// Command-line driver: cohort generation, two-stage training, personalized
// inference, the alpha-sweep experiment, and first-stage evaluation.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "painvas/pipeline.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace painvas;

namespace {

struct CommonOpts {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> first_stage;
};

void add_common(CLI::App* cmd, CommonOpts& opts, bool config_required) {
  auto* c = cmd->add_option("--config", opts.config_path, "experiment config JSON (or run manifest)");
  if (config_required) c->required();
  cmd->add_option("--seed", opts.seed, "override the base seed");
  cmd->add_option("--out", opts.out, "override the output directory");
  cmd->add_option("--first-stage", opts.first_stage, "bilstm|ffn|gt-pspi|raw");
}

ExperimentConfig resolve_config(const CommonOpts& opts) {
  ExperimentConfig cfg =
      opts.config_path.empty() ? ExperimentConfig{} : load_experiment_config(opts.config_path);
  if (opts.seed) cfg.seed = *opts.seed;
  if (opts.out) cfg.out_dir = *opts.out;
  if (opts.first_stage) cfg.first_stage = first_stage_from_name(*opts.first_stage);
  return cfg;
}

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("cli: cannot write '" + path.string() + "'");
  out << text;
}

void write_run_manifest(const ExperimentConfig& cfg) {
  json manifest;
  manifest["config"] = json::parse(experiment_config_to_json(cfg));
  manifest["artifact_dir"] = "artifacts";
  write_text(fs::path(cfg.out_dir) / "run_manifest.json", manifest.dump(2));
}

int cmd_generate(const CommonOpts& opts) {
  ExperimentConfig cfg = resolve_config(opts);
  if (!cfg.manifest_path.empty())
    throw Error("cli: generate needs a synthetic cohort config, not a manifest source");
  const std::uint64_t seed = opts.seed ? *opts.seed : cfg.synthetic_seed;
  const Cohort cohort = generate_synthetic_cohort(cfg.synthetic, seed);
  save_cohort(cohort, cfg.out_dir);
  std::cout << "wrote " << cohort.persons.size() << " persons ("
            << cohort.total_sequences() << " sequences) under " << cfg.out_dir << "\n";
  return 0;
}

int cmd_train(const CommonOpts& opts) {
  const ExperimentConfig cfg = resolve_config(opts);
  const Cohort cohort = load_experiment_cohort(cfg);
  auto [train, test] = split_subject_independent(cohort, cfg.n_train, cfg.split_seed);
  const TrainedArtifacts artifacts = run_learning(cfg, train);
  save_artifacts(artifacts, (fs::path(cfg.out_dir) / "artifacts").string());
  write_run_manifest(cfg);
  std::cout << "trained " << first_stage_name(cfg.first_stage) << " pipeline on "
            << train.persons.size() << " persons; artifacts under " << cfg.out_dir << "/artifacts\n";
  return 0;
}

int cmd_infer(const CommonOpts& opts, int alpha) {
  const ExperimentConfig cfg = resolve_config(opts);
  const Cohort cohort = load_experiment_cohort(cfg);
  auto [train, test] = split_subject_independent(cohort, cfg.n_train, cfg.split_seed);
  const TrainedArtifacts artifacts =
      load_artifacts(cfg, (fs::path(cfg.out_dir) / "artifacts").string());

  json out = json::array();
  for (std::size_t pi = 0; pi < test.persons.size(); ++pi) {
    const auto& person = test.persons[pi];
    const std::uint64_t person_seed =
        derive_seed(cfg.seed, static_cast<std::uint64_t>(alpha), static_cast<std::uint64_t>(pi));
    const InferenceResult r = run_inference(artifacts, person, alpha, person_seed);
    json pj;
    pj["person_id"] = person.person_id;
    pj["ifes"] = r.ifes.p;
    pj["held_out"] = r.held_out;
    pj["sequences"] = json::array();
    for (const auto& pred : r.predictions) {
      pj["sequences"].push_back({{"index", pred.sequence_index},
                                 {"vas_pred", pred.vas_pred},
                                 {"vas_true", pred.vas_true},
                                 {"pspi_scaled", pred.pspi_scaled}});
    }
    out.push_back(std::move(pj));
  }
  const std::string text = out.dump(2);
  write_text(fs::path(cfg.out_dir) / ("inference_alpha" + std::to_string(alpha) + ".json"), text);
  std::cout << text << "\n";
  return 0;
}

int cmd_experiment(const CommonOpts& opts) {
  const ExperimentConfig cfg = resolve_config(opts);
  run_alpha_experiment(cfg);
  std::cout << "experiment report written to " << cfg.out_dir << "/report.json\n";
  return 0;
}

int cmd_eval_pspi(const CommonOpts& opts) {
  const ExperimentConfig cfg = resolve_config(opts);
  const Cohort cohort = load_experiment_cohort(cfg);
  auto [train, test] = split_subject_independent(cohort, cfg.n_train, cfg.split_seed);
  const TrainedArtifacts artifacts =
      load_artifacts(cfg, (fs::path(cfg.out_dir) / "artifacts").string());
  const EvalReport report = evaluate_pspi_stage(artifacts, test);
  const std::string text = eval_report_to_json(report);
  write_text(fs::path(cfg.out_dir) / "pspi_eval.json", text);
  write_text(fs::path(cfg.out_dir) / "pspi_confusion.csv", confusion_to_csv(report.confusion));
  std::cout << text << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Personalized pain-intensity estimation from facial landmarks"};
  app.require_subcommand(1);

  CommonOpts gen_opts, train_opts, infer_opts, exp_opts, eval_opts;
  int infer_alpha = 0;

  auto* gen = app.add_subcommand("generate", "write a synthetic cohort to disk");
  add_common(gen, gen_opts, false);

  auto* train = app.add_subcommand("train", "run the two-stage learning procedure");
  add_common(train, train_opts, true);

  auto* infer = app.add_subcommand("infer", "personalized inference on the test split");
  add_common(infer, infer_opts, true);
  infer->add_option("--alpha", infer_alpha, "sequences per test person used for I-FES");

  auto* exp = app.add_subcommand("experiment", "alpha sweep with seeded repetitions");
  add_common(exp, exp_opts, true);

  auto* eval = app.add_subcommand("eval-pspi", "first-stage PSPI evaluation on the test split");
  add_common(eval, eval_opts, true);

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_generate(gen_opts);
    if (train->parsed()) return cmd_train(train_opts);
    if (infer->parsed()) return cmd_infer(infer_opts, infer_alpha);
    if (exp->parsed()) return cmd_experiment(exp_opts);
    if (eval->parsed()) return cmd_eval_pspi(eval_opts);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
