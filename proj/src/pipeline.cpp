#include "dualview/pipeline.hpp"

#include <sstream>

#include "dualview/corpus.hpp"
#include "dualview/synth.hpp"
#include "json.hpp"
#include "toml.hpp"

namespace dualview::pipeline {

using nlohmann::json;

namespace {

fs::path resolve(const fs::path& base, const std::string& value) {
  fs::path p(value);
  return p.is_absolute() ? p : (base / p).lexically_normal();
}

template <typename T>
void read_opt(const toml::table& tbl, std::string_view section, std::string_view key, T& out) {
  const toml::node* node = tbl.at_path(std::string(section) + "." + std::string(key)).node();
  if (node == nullptr) return;
  if constexpr (std::is_same_v<T, std::string>) {
    if (auto v = node->value<std::string>()) {
      out = *v;
      return;
    }
  } else if constexpr (std::is_same_v<T, bool>) {
    if (auto v = node->value<bool>()) {
      out = *v;
      return;
    }
  } else if constexpr (std::is_floating_point_v<T>) {
    if (auto v = node->value<double>()) {
      out = static_cast<T>(*v);
      return;
    }
  } else {
    if (auto v = node->value<std::int64_t>(); v && *v >= 0) {
      out = static_cast<T>(*v);
      return;
    }
  }
  throw SchemaError("config: bad value for " + std::string(section) + "." + std::string(key));
}

std::string dump_line(const json& j) { return j.dump() + "\n"; }

}  // namespace

PipelineConfig load_config(const fs::path& path) {
  toml::table tbl;
  try {
    tbl = toml::parse_file(path.string());
  } catch (const toml::parse_error& e) {
    std::ostringstream os;
    os << path.string() << ": " << e.description() << " (line " << e.source().begin.line << ")";
    throw SchemaError(os.str());
  }
  const fs::path base = path.parent_path();
  PipelineConfig c;

  if (auto seed = tbl["seed"].value<std::int64_t>()) c.seed = static_cast<std::uint64_t>(*seed);

  std::string s;
  if (s.clear(), read_opt(tbl, "paths", "instruct_pool", s), !s.empty()) c.instruct_pool = resolve(base, s);
  if (s.clear(), read_opt(tbl, "paths", "noninstruct_pool", s), !s.empty()) c.noninstruct_pool = resolve(base, s);
  if (s.clear(), read_opt(tbl, "paths", "output_dir", s), !s.empty()) c.output_dir = resolve(base, s);
  if (s.clear(), read_opt(tbl, "paths", "mock_llm", s), !s.empty()) c.mock_llm_dir = resolve(base, s);

  read_opt(tbl, "llm", "base_url", c.llm.base_url);
  read_opt(tbl, "llm", "model_name", c.llm.model_name);
  read_opt(tbl, "llm", "api_key_env", c.llm.api_key_env);
  read_opt(tbl, "llm", "temperature", c.llm.temperature);
  read_opt(tbl, "llm", "max_tokens", c.llm.max_tokens);
  read_opt(tbl, "llm", "request_timeout", c.llm.request_timeout);
  read_opt(tbl, "llm", "max_retries", c.llm.max_retries);
  read_opt(tbl, "llm", "max_in_flight", c.llm.max_in_flight);
  read_opt(tbl, "llm", "backoff_initial", c.llm.backoff_initial);
  if (s.clear(), read_opt(tbl, "llm", "cache_dir", s), !s.empty()) c.llm.cache_dir = resolve(base, s);

  read_opt(tbl, "validate", "strict", c.strict);
  read_opt(tbl, "validate", "distinctness_threshold", c.validation.distinctness_threshold);

  read_opt(tbl, "mix", "ins_size", c.ins_size);
  read_opt(tbl, "mix", "all_size", c.all_size);
  read_opt(tbl, "mix", "negatives", c.sampling.k);
  read_opt(tbl, "mix", "instr_neg_min", c.sampling.instr_neg_min);
  read_opt(tbl, "mix", "instr_neg_max", c.sampling.instr_neg_max);

  read_opt(tbl, "train", "learning_rate", c.train.learning_rate);
  read_opt(tbl, "train", "epochs", c.train.epochs);
  read_opt(tbl, "train", "batch_size", c.train.batch_size);
  read_opt(tbl, "train", "init_scale", c.train.init_scale);
  read_opt(tbl, "train", "num_buckets", c.encoder.num_buckets);
  read_opt(tbl, "train", "dim", c.encoder.dim);
  read_opt(tbl, "train", "tau", c.encoder.tau);
  read_opt(tbl, "train", "max_tokens", c.encoder.max_tokens);

  read_opt(tbl, "eval", "cutoff", c.cutoff);
  c.train.seed = c.seed;
  return c;
}

SynthStats run_synth(const fs::path& input, const fs::path& out, const std::optional<fs::path>& skipped_out,
                     const LlmClientConfig& llm, std::uint64_t seed) {
  auto triplets = load_triplets(input);
  SynthStats stats;
  stats.total = triplets.size();

  std::vector<InstructTriplet> eligible;
  std::ostringstream skipped;
  for (auto& t : triplets) {
    if (t.is_instruct && !t.instruction_negatives.empty()) {
      eligible.push_back(std::move(t));
    } else {
      skipped << dump_line({{"source_id", t.record_id}, {"reason", "ineligible: no instruction negative"}});
      ++stats.skipped;
    }
  }
  stats.eligible = eligible.size();

  LlmClient client(llm);
  auto results = synth::synthesize_all(eligible, client, seed);
  std::vector<DualViewRecord> records;
  for (auto& r : results) {
    if (auto* rec = std::get_if<DualViewRecord>(&r)) {
      records.push_back(std::move(*rec));
    } else {
      const auto& s = std::get<synth::Skipped>(r);
      skipped << dump_line({{"source_id", s.source_id}, {"reason", s.reason}});
      ++stats.skipped;
    }
  }
  stats.emitted = write_records(out, records);
  if (skipped_out) write_text_file(*skipped_out, skipped.str());
  log_info("synth: " + std::to_string(stats.emitted) + " dual-view records from " + std::to_string(stats.eligible) +
           " eligible seeds (" + std::to_string(client.network_calls()) + " requests, " +
           std::to_string(client.cache_hits()) + " cache hits)");
  return stats;
}

ValidateOutcome run_validate(const fs::path& input, const fs::path& reports_out, const std::optional<fs::path>& kept_out,
                             bool strict, const validate::ValidationOptions& opts) {
  auto records = load_records(input);
  auto run = validate::validate_all(records, strict, opts);
  std::ostringstream os;
  for (const auto& r : run.reports) os << dump_line(validate::to_json(r));
  write_text_file(reports_out, os.str());
  if (kept_out) write_records(*kept_out, run.kept);

  std::ostringstream line;
  line.setf(std::ios::fixed);
  line.precision(4);
  line << "validated " << run.summary.total << " records: " << run.summary.passed << " passed, pass rate "
       << run.summary.pass_rate() << (strict ? " (strict: " + std::to_string(run.kept.size()) + " kept)" : "");
  return {run.summary, line.str()};
}

std::size_t run_mix(mixer::MixKind kind, std::size_t size, std::uint64_t seed, const MixInputs& inputs,
                    const mixer::NegativeSampling& sampling, const fs::path& out) {
  auto instruct = load_triplets(inputs.instruct_pool);
  std::vector<InstructTriplet> noninstruct;
  if (inputs.noninstruct_pool) noninstruct = load_triplets(*inputs.noninstruct_pool);
  std::vector<DualViewRecord> dv;
  if (inputs.dual_view) dv = load_records(*inputs.dual_view);

  auto mix = mixer::build_mix(kind, instruct, noninstruct, dv, size, seed);
  auto examples = mixer::to_examples(mix, sampling, seed);
  mixer::write_examples(out, examples);

  auto c = mixer::composition(kind, size);
  log_info("mix " + std::string(mixer::to_string(kind)) + ": " + std::to_string(examples.size()) + " examples (" +
           std::to_string(c.instruct) + " instruct, " + std::to_string(c.noninstruct) + " non-instruct, " +
           std::to_string(2 * c.dual_view_pairs) + " dual-view)");
  return examples.size();
}

toytrain::TrainResult run_train(const fs::path& examples, const EncoderSettings& encoder,
                                const toytrain::TrainConfig& train, const TrainOutputs& outputs) {
  auto dataset = mixer::load_examples(examples);
  auto init = toytrain::init_params(encoder.num_buckets, encoder.dim, encoder.tau, encoder.max_tokens,
                                    train.init_scale, train.seed);
  auto result = toytrain::train(dataset, init, train);
  toytrain::save_params(outputs.params, result.params);
  json traj{{"num_buckets", encoder.num_buckets},
            {"dim", encoder.dim},
            {"tau", encoder.tau},
            {"max_tokens", encoder.max_tokens},
            {"learning_rate", train.learning_rate},
            {"epochs", train.epochs},
            {"batch_size", train.batch_size},
            {"seed", train.seed},
            {"examples", dataset.size()},
            {"loss", result.loss_trajectory}};
  write_text_file(outputs.trajectory, traj.dump(2) + "\n");
  log_info("train: " + std::to_string(dataset.size()) + " examples, final mean loss " +
           std::to_string(result.loss_trajectory.back()));
  return result;
}

toytrain::EncoderParams load_trained(const TrainOutputs& outputs) {
  auto lines = read_lines(outputs.trajectory);
  std::string text;
  for (const auto& l : lines) text += l + "\n";
  json traj;
  try {
    traj = json::parse(text);
    return toytrain::load_params(outputs.params, traj.at("tau").get<double>(), traj.at("max_tokens").get<std::size_t>());
  } catch (const json::exception& e) {
    throw SchemaError(outputs.trajectory.string() + ": " + e.what());
  }
}

SubsetSpec parse_subset_spec(const std::string& text) {
  std::size_t eq = text.find('=');
  if (eq == std::string::npos || eq == 0) throw std::invalid_argument("subset spec '" + text + "' lacks name=");
  std::string rest = text.substr(eq + 1);
  std::size_t c1 = rest.find(':');
  std::size_t c2 = c1 == std::string::npos ? std::string::npos : rest.find(':', c1 + 1);
  if (c2 == std::string::npos) throw std::invalid_argument("subset spec '" + text + "' must be name=metric:run:qrels");
  return SubsetSpec{text.substr(0, eq), metrics::parse_subset_metric(rest.substr(0, c1)),
                    rest.substr(c1 + 1, c2 - c1 - 1), rest.substr(c2 + 1)};
}

std::pair<std::string, fs::path> parse_paired_spec(const std::string& text) {
  std::size_t eq = text.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 == text.size())
    throw std::invalid_argument("paired spec '" + text + "' must be name=manifest");
  return {text.substr(0, eq), text.substr(eq + 1)};
}

metrics::EvalResult run_eval(const EvalSpec& spec, const fs::path& out) {
  metrics::EvalResult result;
  result.label = spec.label;
  for (const auto& [name, manifest] : spec.paired)
    result.p_mrr[name] = metrics::p_mrr(metrics::load_paired_manifest(manifest), spec.cutoff);
  for (const auto& s : spec.subsets) {
    auto run = metrics::read_run(s.run);
    auto qrels = metrics::read_qrels(s.qrels);
    metrics::SubsetResult r;
    r.metric = s.metric;
    r.value = metrics::mean_metric(run, qrels, s.metric, spec.gain);
    for (const auto& [qid, ranking] : run.queries) r.queries += qrels.judgments.count(qid);
    result.subsets[s.name] = r;
  }
  write_text_file(out, metrics::to_json(result).dump(2) + "\n");
  return result;
}

metrics::MetricReport run_report(const std::vector<fs::path>& eval_files, const std::optional<fs::path>& json_out,
                                 const std::optional<fs::path>& table_out) {
  std::vector<metrics::EvalResult> results;
  for (const auto& f : eval_files) {
    auto lines = read_lines(f);
    std::string text;
    for (const auto& l : lines) text += l + "\n";
    try {
      results.push_back(metrics::eval_result_from_json(json::parse(text)));
    } catch (const json::parse_error& e) {
      throw SchemaError(f.string() + ": " + e.what());
    }
  }
  auto report = metrics::build_report(results);
  if (json_out) write_text_file(*json_out, metrics::to_json(report).dump(2) + "\n");
  if (table_out) write_text_file(*table_out, metrics::render_table(report));
  return report;
}

EvalSpec write_dual_view_eval_inputs(const std::vector<DualViewRecord>& records, const toytrain::EncoderParams& params,
                                     const std::string& label, const fs::path& dir, std::size_t cutoff) {
  metrics::RunFile og_run, new_run;
  metrics::Qrels og_qrels, new_qrels;
  std::ostringstream manifest;
  for (const auto& r : records) {
    const auto& og = r.original_view;
    std::vector<Document> candidates{og.positive};
    candidates.insert(candidates.end(), og.instruction_negatives.begin(), og.instruction_negatives.end());
    candidates.insert(candidates.end(), og.hard_negatives.begin(), og.hard_negatives.end());

    auto to_ranking = [](const std::vector<std::pair<std::string, double>>& ranked) {
      metrics::Ranking out;
      for (const auto& [doc, score] : ranked) out.push_back({doc, score});
      return out;
    };
    og_run.queries[r.source_id] =
        to_ranking(toytrain::rank_documents(mixer::concat_query(og.query, og.instruction), candidates, params));
    new_run.queries[r.source_id] = to_ranking(toytrain::rank_documents(
        mixer::concat_query(og.query, r.reversed_view.instruction), candidates, params));
    og_qrels.judgments[r.source_id][og.positive.doc_id] = 1;
    new_qrels.judgments[r.source_id][r.swapped_negative_id] = 1;
    manifest << dump_line(
        {{"qid", r.source_id}, {"run_og", "og.run"}, {"run_new", "new.run"}, {"target_doc_id", r.swapped_negative_id}});
  }
  metrics::write_run(dir / "og.run", og_run, label);
  metrics::write_run(dir / "new.run", new_run, label);
  metrics::write_qrels(dir / "og.qrels", og_qrels);
  metrics::write_qrels(dir / "new.qrels", new_qrels);
  write_text_file(dir / "paired.jsonl", manifest.str());

  EvalSpec spec;
  spec.label = label;
  spec.cutoff = cutoff;
  spec.paired.emplace_back("followir", dir / "paired.jsonl");
  spec.subsets.push_back({"followir/original-map", {metrics::MetricKind::Map, 1000}, dir / "og.run", dir / "og.qrels"});
  spec.subsets.push_back({"followir/changed-map", {metrics::MetricKind::Map, 1000}, dir / "new.run", dir / "new.qrels"});
  spec.subsets.push_back({"followir/original-ndcg", {metrics::MetricKind::Ndcg, 5}, dir / "og.run", dir / "og.qrels"});
  return spec;
}

PipelineResult run_pipeline(const PipelineConfig& config) {
  const fs::path out = config.output_dir;
  fs::create_directories(out);

  LlmClientConfig llm = config.llm;
  if (llm.cache_dir.empty()) llm.cache_dir = out / "cache";
  std::unique_ptr<MockLlmServer> mock;
  if (config.mock_llm_dir) {
    mock = MockLlmServer::from_fixture_dir(*config.mock_llm_dir);
    llm.base_url = mock->base_url();
    llm.api_key_env.clear();
    log_info("using scripted mock LLM at " + llm.base_url);
  }

  run_synth(config.instruct_pool, out / "synth" / "dual_view.jsonl", out / "synth" / "skipped.jsonl", llm, config.seed);

  auto validated = run_validate(out / "synth" / "dual_view.jsonl", out / "validate" / "reports.jsonl",
                                out / "validate" / "dual_view.jsonl", config.strict, config.validation);
  write_text_file(out / "validate" / "summary.json",
                  json{{"total", validated.summary.total},
                       {"passed", validated.summary.passed},
                       {"pass_rate", validated.summary.pass_rate()},
                       {"strict", config.strict}}
                          .dump(2) +
                      "\n");
  log_info(validated.summary_line);
  const fs::path dv_path = out / "validate" / "dual_view.jsonl";
  const auto dv_records = load_records(dv_path);

  std::vector<fs::path> eval_files;
  for (mixer::MixKind kind : mixer::kAllMixKinds) {
    const std::string name(mixer::to_string(kind));
    const bool mixed = kind == mixer::MixKind::AllOrig || kind == mixer::MixKind::AllDV;
    MixInputs inputs{config.instruct_pool, std::nullopt, std::nullopt};
    if (kind == mixer::MixKind::AllOrig) inputs.noninstruct_pool = config.noninstruct_pool;
    if (kind == mixer::MixKind::InsDV || kind == mixer::MixKind::AllDV) inputs.dual_view = dv_path;
    const fs::path mix_path = out / "mix" / (name + ".jsonl");
    run_mix(kind, mixed ? config.all_size : config.ins_size, config.seed, inputs, config.sampling, mix_path);

    TrainOutputs trained{out / "train" / (name + ".params.bin"), out / "train" / (name + ".trajectory.json")};
    auto result = run_train(mix_path, config.encoder, config.train, trained);

    auto spec = write_dual_view_eval_inputs(dv_records, result.params, std::string(mixer::display_name(kind)),
                                            out / "eval" / name, config.cutoff);
    const fs::path eval_path = out / "eval" / (name + ".json");
    run_eval(spec, eval_path);
    eval_files.push_back(eval_path);
  }

  return {validated.summary, run_report(eval_files, out / "report" / "report.json", out / "report" / "table.txt")};
}

}  // namespace dualview::pipeline
