#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dualview/corpus.hpp"

namespace dualview::mixer {

enum class MixKind { InsOrig, InsDV, AllOrig, AllDV };

inline constexpr MixKind kAllMixKinds[] = {MixKind::InsOrig, MixKind::InsDV, MixKind::AllOrig, MixKind::AllDV};

// "ins-orig", "ins-dv", "all-orig", "all-dv"
std::string_view to_string(MixKind kind);
// "Ins-orig", "Ins-DV", "All-orig", "All-DV"
std::string_view display_name(MixKind kind);
MixKind parse_mix_kind(std::string_view name);

enum class Origin { Instruct, NonInstruct, DualViewOriginal, DualViewReversed };

// One selected source record; dual-view pairs share a view_group.
struct MixEntry {
  InstructTriplet source;
  Origin origin = Origin::Instruct;
  std::optional<std::string> view_group;
};

struct MixComposition {
  std::size_t instruct = 0;
  std::size_t noninstruct = 0;
  std::size_t dual_view_pairs = 0;  // each pair is two examples

  std::size_t total() const { return instruct + noninstruct + 2 * dual_view_pairs; }
};

// Example counts for a target size. Throws std::invalid_argument for an odd
// target on the mixed kinds.
MixComposition composition(MixKind kind, std::size_t target_size);

// Seeded draw without replacement. Instruct records whose dual view was drawn
// are not drawn again as plain instruct samples. Output order: instruct,
// non-instruct, then dual-view pairs (original view first).
std::vector<MixEntry> build_mix(MixKind kind, const std::vector<InstructTriplet>& instruct_pool,
                                const std::vector<InstructTriplet>& noninstruct_pool,
                                const std::vector<DualViewRecord>& dv_pool, std::size_t target_size,
                                std::uint64_t seed);

inline constexpr std::string_view kQuerySeparator = " [SEP] ";

// Query and instruction joined by the reserved separator; the bare query when
// the instruction is empty.
std::string concat_query(std::string_view query, std::string_view instruction);

// Inverse of concat_query's query part: everything before the separator.
std::string strip_instruction(std::string_view input_text);

enum class NegativeRole { InstructionNegative, HardNegative };

std::string_view to_string(NegativeRole role);

struct Candidate {
  Document doc;
  NegativeRole role = NegativeRole::HardNegative;

  bool operator==(const Candidate&) const = default;
};

struct NegativeSampling {
  std::size_t k = 30;
  std::size_t instr_neg_min = 1;
  std::size_t instr_neg_max = 3;
};

// Instruction negatives (instruct sources only, up to instr_neg_max) then
// hard negatives up to k in total, shuffled. Never samples with replacement;
// a short pool is used whole and logged.
std::vector<Candidate> sample_negatives(const InstructTriplet& source, const NegativeSampling& sampling,
                                        std::uint64_t seed);

struct TrainingExample {
  std::string source_id;
  std::string input_text;
  Document positive;
  std::vector<Candidate> negatives;
  std::optional<std::string> view_group;

  bool operator==(const TrainingExample&) const = default;
};

struct TrainingBatch {
  std::size_t batch_id = 0;
  std::vector<TrainingExample> examples;
};

// Input text plus sampled negatives for every entry. Per-entry seeds derive
// from (seed, record_id).
std::vector<TrainingExample> to_examples(const std::vector<MixEntry>& mix, const NegativeSampling& sampling,
                                         std::uint64_t seed);

// Seeded shuffle into batches of at most batch_size. Examples sharing a
// view_group always land in the same batch.
std::vector<TrainingBatch> assemble_batches(const std::vector<TrainingExample>& examples, std::size_t batch_size,
                                            std::uint64_t seed);

nlohmann::json to_json(const TrainingExample& example);
TrainingExample example_from_json(const nlohmann::json& j, const std::string& where);

std::vector<TrainingExample> load_examples(const std::filesystem::path& path);
void write_examples(const std::filesystem::path& path, const std::vector<TrainingExample>& examples);

}  // namespace dualview::mixer
