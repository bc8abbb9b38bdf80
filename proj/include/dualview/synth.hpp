#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "dualview/corpus.hpp"
#include "dualview/llm_client.hpp"

namespace dualview::synth {

struct NewInstruction {
  std::string text;
};
struct Refused {};
struct ParseError {
  std::string reason;
};

using SynthesisOutcome = std::variant<NewInstruction, Refused, ParseError>;

// Fills the reversal prompt for the instruction negative at
// `target_negative_index`. Remaining instruction negatives are listed first,
// then hard negatives, numbered from 1.
std::string render_prompt(const InstructTriplet& triplet, std::size_t target_negative_index);

// Reads the last <answer>...</answer> block of a completion.
SynthesisOutcome parse_answer(std::string_view raw);

// Index of N*, uniform over the instruction negatives and fixed by (seed, record_id).
std::size_t choose_target_negative(const InstructTriplet& triplet, std::uint64_t seed);

// Builds the reversed view for a parsed new instruction. Throws InvariantError
// if the result breaks the dual-view structure.
DualViewRecord make_dual_view(const InstructTriplet& triplet, std::size_t target_negative_index,
                              const std::string& new_instruction);

struct Skipped {
  std::string source_id;
  std::string reason;  // "refused", "parse_error: ...", "invariant: ..."
};

using SynthesisResult = std::variant<DualViewRecord, Skipped>;

SynthesisResult synthesize_dual_view(const InstructTriplet& triplet, LlmClient& client, std::uint64_t seed);
SynthesisResult synthesize_dual_view(const InstructTriplet& triplet, const LlmClientConfig& config,
                                     std::uint64_t seed);

// Runs every triplet with up to client.config().max_in_flight concurrent
// requests. Results keep input order.
std::vector<SynthesisResult> synthesize_all(const std::vector<InstructTriplet>& triplets, LlmClient& client,
                                            std::uint64_t seed);

}  // namespace dualview::synth
