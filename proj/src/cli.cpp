#include "dualview/cli.hpp"

#include <iostream>

#include "CLI11.hpp"
#include "dualview/pipeline.hpp"

namespace dualview::cli {

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitStrictFailure = 1;
constexpr int kExitInputError = 2;

struct GlobalOptions {
  std::string config;
  std::uint64_t seed = 0;
  bool strict = false;
  std::string mock_llm;
};

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Dual-view instruction synthesis, mixing, toy training and paired-instruction evaluation"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions g;
  auto* seed_opt = app.add_option("--seed", g.seed, "Global seed");
  app.add_option("--config", g.config, "TOML experiment manifest")->check(CLI::ExistingFile);
  auto* strict_opt = app.add_flag("--strict", g.strict, "Drop records failing validation; exit 1 if any fail");
  // Bare --mock-llm uses [paths] mock_llm from the config.
  auto* mock_opt = app.add_option("--mock-llm", g.mock_llm, "Serve completions from a scripted fixture directory")
                       ->expected(0, 1);

  // synth
  auto* synth_cmd = app.add_subcommand("synth", "Synthesize polarity-reversed instructions");
  std::string synth_in, synth_out, synth_skipped;
  LlmClientConfig llm_flags;
  synth_cmd->add_option("--input", synth_in, "Seed triplets (JSONL)")->required()->check(CLI::ExistingFile);
  synth_cmd->add_option("--out", synth_out, "DualViewRecord output (JSONL)")->required();
  synth_cmd->add_option("--skipped", synth_skipped, "Write skip reasons (JSONL)");
  auto* base_url_opt = synth_cmd->add_option("--base-url", llm_flags.base_url, "Chat-completions endpoint base URL");
  auto* model_opt = synth_cmd->add_option("--model", llm_flags.model_name, "Model name");
  auto* temp_opt = synth_cmd->add_option("--temperature", llm_flags.temperature);
  auto* max_tok_opt = synth_cmd->add_option("--max-tokens", llm_flags.max_tokens);
  auto* inflight_opt = synth_cmd->add_option("--max-in-flight", llm_flags.max_in_flight);
  std::string cache_flag;
  auto* cache_opt = synth_cmd->add_option("--cache-dir", cache_flag);

  // validate
  auto* validate_cmd = app.add_subcommand("validate", "Check synthesized instructions");
  std::string val_in, val_out, val_kept;
  double threshold = validate::ValidationOptions{}.distinctness_threshold;
  validate_cmd->add_option("--input", val_in, "DualViewRecord JSONL")->required()->check(CLI::ExistingFile);
  validate_cmd->add_option("--out", val_out, "ValidationReport JSONL")->required();
  validate_cmd->add_option("--kept", val_kept, "Records retained after validation (JSONL)");
  auto* threshold_opt = validate_cmd->add_option("--distinctness-threshold", threshold);

  // mix
  auto* mix_cmd = app.add_subcommand("mix", "Build a size-matched training mix");
  std::string mix_kind, mix_instruct, mix_noninstruct, mix_dv, mix_out;
  std::size_t mix_size = 0;
  mixer::NegativeSampling sampling;
  mix_cmd->add_option("--kind", mix_kind)->required()->check(CLI::IsMember({"ins-orig", "ins-dv", "all-orig", "all-dv"}));
  mix_cmd->add_option("--size", mix_size)->required();
  mix_cmd->add_option("--instruct", mix_instruct, "Instruct pool (JSONL)")->required()->check(CLI::ExistingFile);
  mix_cmd->add_option("--noninstruct", mix_noninstruct, "Non-instruct pool (JSONL)")->check(CLI::ExistingFile);
  mix_cmd->add_option("--dual-view", mix_dv, "DualViewRecord pool (JSONL)")->check(CLI::ExistingFile);
  mix_cmd->add_option("--out", mix_out, "TrainingExample output (JSONL)")->required();
  mix_cmd->add_option("--negatives", sampling.k, "Negatives per query");
  mix_cmd->add_option("--instr-neg-min", sampling.instr_neg_min);
  mix_cmd->add_option("--instr-neg-max", sampling.instr_neg_max);

  // train
  auto* train_cmd = app.add_subcommand("train", "Train the toy encoder with InfoNCE");
  std::string train_in, train_params, train_traj;
  pipeline::EncoderSettings enc;
  toytrain::TrainConfig tcfg;
  train_cmd->add_option("--examples", train_in, "TrainingExample JSONL")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--out-params", train_params, "Flat binary params output")->required();
  train_cmd->add_option("--out-trajectory", train_traj, "Loss trajectory JSON output")->required();
  auto* lr_opt = train_cmd->add_option("--lr", tcfg.learning_rate);
  auto* epochs_opt = train_cmd->add_option("--epochs", tcfg.epochs);
  auto* bs_opt = train_cmd->add_option("--batch-size", tcfg.batch_size);
  auto* init_opt = train_cmd->add_option("--init-scale", tcfg.init_scale);
  auto* dim_opt = train_cmd->add_option("--dim", enc.dim);
  auto* buckets_opt = train_cmd->add_option("--num-buckets", enc.num_buckets);
  auto* tau_opt = train_cmd->add_option("--tau", enc.tau);
  auto* maxtok_opt = train_cmd->add_option("--max-tokens", enc.max_tokens);

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Score runs: paired p-MRR and retrieval metrics");
  pipeline::EvalSpec espec;
  std::vector<std::string> paired_specs, subset_specs;
  std::string eval_out;
  bool exp_gain = false;
  eval_cmd->add_option("--label", espec.label, "Row label, e.g. the training mix")->required();
  eval_cmd->add_option("--paired", paired_specs, "name=manifest.jsonl (repeatable)");
  eval_cmd->add_option("--subset", subset_specs, "name=metric@k:run:qrels (repeatable)");
  eval_cmd->add_option("--cutoff", espec.cutoff, "Rank assigned past this depth is cutoff+1");
  eval_cmd->add_flag("--exp-gain", exp_gain, "Exponential DCG gain");
  eval_cmd->add_option("--out", eval_out, "Eval result JSON")->required();

  // report
  auto* report_cmd = app.add_subcommand("report", "Tabulate eval results");
  std::vector<std::string> report_in;
  std::string report_json, report_table;
  report_cmd->add_option("evals", report_in, "Eval result JSON files")->required()->check(CLI::ExistingFile);
  report_cmd->add_option("--out-json", report_json);
  report_cmd->add_option("--out-table", report_table);

  // pipeline
  auto* pipeline_cmd = app.add_subcommand("pipeline", "Run synth, validate, mix, train, eval and report");
  std::string pipeline_out;
  pipeline_cmd->add_option("--out", pipeline_out, "Output directory (overrides the config)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return kExitInputError;
  }

  try {
    pipeline::PipelineConfig cfg;
    if (!g.config.empty()) cfg = pipeline::load_config(g.config);
    if (seed_opt->count() > 0) cfg.seed = g.seed;
    cfg.train.seed = cfg.seed;
    if (strict_opt->count() > 0) cfg.strict = g.strict;
    if (mock_opt->count() == 0) {
      cfg.mock_llm_dir.reset();
    } else if (!g.mock_llm.empty()) {
      cfg.mock_llm_dir = fs::path(g.mock_llm);
    } else if (!cfg.mock_llm_dir) {
      throw std::invalid_argument("--mock-llm needs a directory when the config has no [paths] mock_llm");
    }
    if (cfg.mock_llm_dir && !fs::is_directory(*cfg.mock_llm_dir))
      throw IoError("mock LLM directory not found: " + cfg.mock_llm_dir->string());

    if (synth_cmd->parsed()) {
      LlmClientConfig llm = cfg.llm;
      if (base_url_opt->count()) llm.base_url = llm_flags.base_url;
      if (model_opt->count()) llm.model_name = llm_flags.model_name;
      if (temp_opt->count()) llm.temperature = llm_flags.temperature;
      if (max_tok_opt->count()) llm.max_tokens = llm_flags.max_tokens;
      if (inflight_opt->count()) llm.max_in_flight = llm_flags.max_in_flight;
      if (cache_opt->count()) llm.cache_dir = cache_flag;
      std::unique_ptr<MockLlmServer> mock;
      if (cfg.mock_llm_dir) {
        mock = MockLlmServer::from_fixture_dir(*cfg.mock_llm_dir);
        llm.base_url = mock->base_url();
        llm.api_key_env.clear();
      }
      std::optional<fs::path> skipped;
      if (!synth_skipped.empty()) skipped = synth_skipped;
      auto stats = pipeline::run_synth(synth_in, synth_out, skipped, llm, cfg.seed);
      std::cout << "synthesized " << stats.emitted << " of " << stats.eligible << " eligible records ("
                << stats.skipped << " skipped)\n";
      return kExitOk;
    }

    if (validate_cmd->parsed()) {
      validate::ValidationOptions opts = cfg.validation;
      if (threshold_opt->count()) opts.distinctness_threshold = threshold;
      std::optional<fs::path> kept;
      if (!val_kept.empty()) kept = val_kept;
      auto outcome = pipeline::run_validate(val_in, val_out, kept, cfg.strict, opts);
      std::cout << outcome.summary_line << '\n';
      return (cfg.strict && outcome.summary.passed < outcome.summary.total) ? kExitStrictFailure : kExitOk;
    }

    if (mix_cmd->parsed()) {
      pipeline::MixInputs inputs{mix_instruct, std::nullopt, std::nullopt};
      if (!mix_noninstruct.empty()) inputs.noninstruct_pool = mix_noninstruct;
      if (!mix_dv.empty()) inputs.dual_view = mix_dv;
      auto n = pipeline::run_mix(mixer::parse_mix_kind(mix_kind), mix_size, cfg.seed, inputs, sampling, mix_out);
      auto c = mixer::composition(mixer::parse_mix_kind(mix_kind), mix_size);
      std::cout << "wrote " << n << " examples: " << c.instruct << " instruct + " << c.noninstruct
                << " non-instruct + " << 2 * c.dual_view_pairs << " dual-view\n";
      return kExitOk;
    }

    if (train_cmd->parsed()) {
      pipeline::EncoderSettings e = cfg.encoder;
      toytrain::TrainConfig t = cfg.train;
      if (lr_opt->count()) t.learning_rate = tcfg.learning_rate;
      if (epochs_opt->count()) t.epochs = tcfg.epochs;
      if (bs_opt->count()) t.batch_size = tcfg.batch_size;
      if (init_opt->count()) t.init_scale = tcfg.init_scale;
      if (dim_opt->count()) e.dim = enc.dim;
      if (buckets_opt->count()) e.num_buckets = enc.num_buckets;
      if (tau_opt->count()) e.tau = enc.tau;
      if (maxtok_opt->count()) e.max_tokens = enc.max_tokens;
      auto result = pipeline::run_train(train_in, e, t, {train_params, train_traj});
      std::cout << "final mean loss " << result.loss_trajectory.back() << '\n';
      return kExitOk;
    }

    if (eval_cmd->parsed()) {
      for (const auto& p : paired_specs) espec.paired.push_back(pipeline::parse_paired_spec(p));
      for (const auto& s : subset_specs) espec.subsets.push_back(pipeline::parse_subset_spec(s));
      if (espec.paired.empty() && espec.subsets.empty())
        throw std::invalid_argument("eval needs at least one --paired or --subset");
      if (exp_gain) espec.gain = metrics::Gain::Exponential;
      auto result = pipeline::run_eval(espec, eval_out);
      std::cout << metrics::render_table(metrics::build_report({result}));
      return kExitOk;
    }

    if (report_cmd->parsed()) {
      std::vector<fs::path> files(report_in.begin(), report_in.end());
      std::optional<fs::path> json_out, table_out;
      if (!report_json.empty()) json_out = report_json;
      if (!report_table.empty()) table_out = report_table;
      std::cout << metrics::render_table(pipeline::run_report(files, json_out, table_out));
      return kExitOk;
    }

    if (pipeline_cmd->parsed()) {
      if (!pipeline_out.empty()) cfg.output_dir = pipeline_out;
      if (cfg.instruct_pool.empty() || cfg.noninstruct_pool.empty())
        throw std::invalid_argument("pipeline needs --config with [paths] instruct_pool and noninstruct_pool");
      auto result = pipeline::run_pipeline(cfg);
      std::cout << metrics::render_table(result.report);
      if (cfg.strict && result.validation.passed < result.validation.total) return kExitStrictFailure;
      return kExitOk;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInputError;
  }
  return kExitInputError;
}

int run_cli(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

}  // namespace dualview::cli
