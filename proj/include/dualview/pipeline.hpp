#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dualview/llm_client.hpp"
#include "dualview/metrics.hpp"
#include "dualview/mixer.hpp"
#include "dualview/toytrain.hpp"
#include "dualview/validate.hpp"

namespace dualview::pipeline {

namespace fs = std::filesystem;

struct EncoderSettings {
  std::size_t num_buckets = std::size_t{1} << 16;
  std::size_t dim = 64;
  double tau = 0.02;
  std::size_t max_tokens = 64;
};

struct PipelineConfig {
  fs::path instruct_pool;
  fs::path noninstruct_pool;
  fs::path output_dir = "dualview-out";
  std::optional<fs::path> mock_llm_dir;
  LlmClientConfig llm;
  std::uint64_t seed = 0;

  bool strict = false;
  validate::ValidationOptions validation;

  std::size_t ins_size = 16;
  std::size_t all_size = 24;
  mixer::NegativeSampling sampling;

  EncoderSettings encoder;
  toytrain::TrainConfig train;

  std::size_t cutoff = 1000;
};

// Reads a TOML experiment manifest; relative paths resolve against the
// file's directory. Sections: [paths] [llm] [validate] [mix] [train] [eval].
PipelineConfig load_config(const fs::path& path);

struct SynthStats {
  std::size_t total = 0;
  std::size_t eligible = 0;
  std::size_t emitted = 0;
  std::size_t skipped = 0;
};

// Instruct records with at least one instruction negative are sent to the
// LLM; one DualViewRecord per accepted answer. Skips are written as
// {"source_id", "reason"} lines when skipped_out is set.
SynthStats run_synth(const fs::path& input, const fs::path& out, const std::optional<fs::path>& skipped_out,
                     const LlmClientConfig& llm, std::uint64_t seed);

struct ValidateOutcome {
  validate::ValidationSummary summary;
  std::string summary_line;
};

ValidateOutcome run_validate(const fs::path& input, const fs::path& reports_out, const std::optional<fs::path>& kept_out,
                             bool strict, const validate::ValidationOptions& opts);

struct MixInputs {
  fs::path instruct_pool;
  std::optional<fs::path> noninstruct_pool;
  std::optional<fs::path> dual_view;
};

std::size_t run_mix(mixer::MixKind kind, std::size_t size, std::uint64_t seed, const MixInputs& inputs,
                    const mixer::NegativeSampling& sampling, const fs::path& out);

struct TrainOutputs {
  fs::path params;
  fs::path trajectory;
};

// Params go to the flat binary format; the trajectory JSON also records the
// encoder settings needed to reload them.
toytrain::TrainResult run_train(const fs::path& examples, const EncoderSettings& encoder,
                                const toytrain::TrainConfig& train, const TrainOutputs& outputs);

// Loads params + trajectory JSON written by run_train.
toytrain::EncoderParams load_trained(const TrainOutputs& outputs);

struct SubsetSpec {
  std::string name;
  metrics::SubsetMetric metric;
  fs::path run;
  fs::path qrels;
};

struct EvalSpec {
  std::string label;
  std::vector<std::pair<std::string, fs::path>> paired;  // name -> manifest
  std::vector<SubsetSpec> subsets;
  std::size_t cutoff = 1000;
  metrics::Gain gain = metrics::Gain::Linear;
};

// "name=metric@k:run_path:qrels_path"
SubsetSpec parse_subset_spec(const std::string& text);
// "name=manifest_path"
std::pair<std::string, fs::path> parse_paired_spec(const std::string& text);

metrics::EvalResult run_eval(const EvalSpec& spec, const fs::path& out);

metrics::MetricReport run_report(const std::vector<fs::path>& eval_files, const std::optional<fs::path>& json_out,
                                 const std::optional<fs::path>& table_out);

// Ranks every dual-view record's candidates under both instructions with the
// encoder and writes og/new runs, qrels and a paired manifest under dir. The
// returned spec scores p-MRR on the swapped negative plus three retrieval
// subsets that make up the FollowIR-style Score.
EvalSpec write_dual_view_eval_inputs(const std::vector<DualViewRecord>& records, const toytrain::EncoderParams& params,
                                     const std::string& label, const fs::path& dir, std::size_t cutoff);

struct PipelineResult {
  validate::ValidationSummary validation;
  metrics::MetricReport report;
};

// synth -> validate -> mix (all four kinds) -> train -> eval -> report.
PipelineResult run_pipeline(const PipelineConfig& config);

}  // namespace dualview::pipeline
