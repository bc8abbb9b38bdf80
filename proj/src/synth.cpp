#include "dualview/synth.hpp"

#include <mutex>
#include <sstream>
#include <thread>

namespace dualview::synth {

namespace {

constexpr std::string_view kPromptHeader = R"(Goal
Create a new synthetic instruction that reverses the original relevance judgment only for the specified passages:
- The original positive passage (P+) must become an instruction negative under the new instruction (i.e., relevant to the pure query but irrelevant once the instruction is applied).
- The specific instruction negative (N*) must become the new positive (i.e., relevant to the pure query and to the query+instruction).
- All remaining instruction negatives (N_1...N_k) must remain instruction negatives.
You must not change the query or any passage content. Only write a new instruction.

Inputs
- query (string)
- original_instruction (string)
- positive_passage = P+ (string)
- specific_instruction_negative = N* (string)
- remaining_instruction_negatives = N_1...N_k (array; may be empty)

Output
You should reason step by step, and the final answer should be in the following XML format:
<answer>
  <new_instruction>[your new instruction]</new_instruction>
</answer>
If you think this task is too hard to achieve, you should simply return <answer>None</answer>.

Definitions
- Relevant to the pure query: reasonably satisfies the user's intent without any extra instruction.
- Instruction negative: relevant to the pure query, but excluded by the instruction (e.g., by scope, geography, timeframe, format, source constraints, audience level).

Method
1) Profile passages
  - Identify attributes of P+ (domain, geography, timeframe, audience, medium/format, methodology, sources, constraints).
  - Identify attributes of N* that distinguish it from P+.
  - Skim each N_i to note attributes you must keep excluded.
2) Choose reversal levers
  Craft a new instruction that:
  - Positively selects N*'s attributes (so N* becomes positive), and
  - Excludes P+ via >=1 hard, objective constraint (so P+ becomes an instruction negative), while
  - Does not inadvertently admit any N_i (keep them instruction negatives).
  Useful levers: domain narrowing, region, timeframe/recency, audience level, style/format (e.g., "equations only", "bulleted checklist"), methodology/evidence type, required artifacts (e.g., runnable code in a specific language), explicit exclusions (e.g., "exclude major capitals", "exclude beach/island topics").
3) Diversity requirement
  Ensure the new instruction's format and perspective differ from the original_instruction (e.g., switch voice, deliverable type, constraint style). Avoid trivial rewording.
4) Sanity checks
  - Would P+ be filtered out by the new constraints? If not, tighten them.
  - Is N* clearly included by the positive selectors? If not, pivot constraints toward N*'s attributes.
  - Do all N_i still get excluded? If any slip in, add explicit exclusions or tighten scope.
5) Conciseness
  The new instruction must be one or two sentences, imperative, concrete, and unambiguous.

Guardrails
- Do not reference passage IDs or this meta-task; exclude or include by attribute only.
- Do not modify the query or passages.

Checklist (before you output)
- P+ becomes an instruction negative.
- N* becomes positive.
- All N_i remain instruction negatives.
- Instruction is concise (<=2 sentences) and diverse vs. the original_instruction.
- No meta-task language or passage IDs appear in the instruction.

Now perform the task with the following data:
)";

}  // namespace

std::string render_prompt(const InstructTriplet& triplet, std::size_t target_negative_index) {
  if (target_negative_index >= triplet.instruction_negatives.size())
    throw std::out_of_range("render_prompt: target negative index " + std::to_string(target_negative_index) +
                            " out of range for " + std::to_string(triplet.instruction_negatives.size()) +
                            " instruction negatives");
  std::ostringstream os;
  os << kPromptHeader;
  os << "- Query: " << triplet.query << '\n';
  os << "- Original instruction: " << triplet.instruction << '\n';
  os << "- Original positive passage: " << triplet.positive.text << '\n';
  os << "- Specific instruction negative passage: " << triplet.instruction_negatives[target_negative_index].text
     << '\n';
  os << "- All remaining instruction negative passages:\n";
  std::size_t index = 1;
  for (std::size_t i = 0; i < triplet.instruction_negatives.size(); ++i) {
    if (i == target_negative_index) continue;
    os << "  Negative passage " << index++ << ": " << triplet.instruction_negatives[i].text << '\n';
  }
  for (const auto& d : triplet.hard_negatives) os << "  Negative passage " << index++ << ": " << d.text << '\n';
  return os.str();
}

SynthesisOutcome parse_answer(std::string_view raw) {
  constexpr std::string_view kOpen = "<answer>";
  constexpr std::string_view kClose = "</answer>";
  std::size_t close = raw.rfind(kClose);
  if (close == std::string_view::npos) return ParseError{"no answer block"};
  std::size_t open = raw.rfind(kOpen, close);
  if (open == std::string_view::npos) return ParseError{"no answer block"};

  std::string_view body = trim(raw.substr(open + kOpen.size(), close - open - kOpen.size()));
  if (body == "None") return Refused{};

  constexpr std::string_view kInstrOpen = "<new_instruction>";
  constexpr std::string_view kInstrClose = "</new_instruction>";
  std::size_t a = body.find(kInstrOpen);
  std::size_t b = body.rfind(kInstrClose);
  if (a == std::string_view::npos || b == std::string_view::npos || b < a + kInstrOpen.size())
    return ParseError{"unrecognized answer body"};
  std::string_view text = trim(body.substr(a + kInstrOpen.size(), b - a - kInstrOpen.size()));
  if (text.empty()) return ParseError{"empty new_instruction"};
  return NewInstruction{std::string(text)};
}

std::size_t choose_target_negative(const InstructTriplet& triplet, std::uint64_t seed) {
  if (triplet.instruction_negatives.empty())
    throw std::invalid_argument("record '" + triplet.record_id + "' has no instruction negatives");
  Rng rng(derive_seed(seed, triplet.record_id));
  return rng.below(triplet.instruction_negatives.size());
}

DualViewRecord make_dual_view(const InstructTriplet& triplet, std::size_t target_negative_index,
                              const std::string& new_instruction) {
  const Document& target = triplet.instruction_negatives.at(target_negative_index);
  DualViewRecord r;
  r.source_id = triplet.record_id;
  r.original_view = triplet;
  r.swapped_negative_id = target.doc_id;

  InstructTriplet& rv = r.reversed_view;
  rv.record_id = triplet.record_id + ":dv";
  rv.query = triplet.query;
  rv.instruction = new_instruction;
  rv.positive = target;
  rv.instruction_negatives.push_back(triplet.positive);
  for (std::size_t i = 0; i < triplet.instruction_negatives.size(); ++i)
    if (i != target_negative_index) rv.instruction_negatives.push_back(triplet.instruction_negatives[i]);
  rv.hard_negatives = triplet.hard_negatives;
  rv.is_instruct = true;

  check_invariants(r);
  return r;
}

SynthesisResult synthesize_dual_view(const InstructTriplet& triplet, LlmClient& client, std::uint64_t seed) {
  if (!triplet.is_instruct)
    throw std::invalid_argument("record '" + triplet.record_id + "' is not an instruct record");
  std::size_t target = choose_target_negative(triplet, seed);
  std::string raw = client.complete(render_prompt(triplet, target));
  SynthesisOutcome outcome = parse_answer(raw);

  if (std::holds_alternative<Refused>(outcome)) return Skipped{triplet.record_id, "refused"};
  if (const auto* err = std::get_if<ParseError>(&outcome))
    return Skipped{triplet.record_id, "parse_error: " + err->reason};
  try {
    return make_dual_view(triplet, target, std::get<NewInstruction>(outcome).text);
  } catch (const InvariantError& e) {
    return Skipped{triplet.record_id, std::string("invariant: ") + e.what()};
  }
}

SynthesisResult synthesize_dual_view(const InstructTriplet& triplet, const LlmClientConfig& config,
                                     std::uint64_t seed) {
  LlmClient client(config);
  return synthesize_dual_view(triplet, client, seed);
}

std::vector<SynthesisResult> synthesize_all(const std::vector<InstructTriplet>& triplets, LlmClient& client,
                                            std::uint64_t seed) {
  std::vector<std::optional<SynthesisResult>> slots(triplets.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;

  auto worker = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= triplets.size()) return;
      try {
        slots[i] = synthesize_dual_view(triplets[i], client, seed);
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
        next.store(triplets.size());
        return;
      }
    }
  };

  std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(client.config().max_in_flight),
                                              std::max<std::size_t>(triplets.size(), 1));
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  std::vector<SynthesisResult> out;
  out.reserve(slots.size());
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

}  // namespace dualview::synth
