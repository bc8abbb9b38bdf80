#include "dualview/mixer.hpp"

#include <algorithm>
#include <deque>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "dualview/common.hpp"

namespace dualview::mixer {

using nlohmann::json;

std::string_view to_string(MixKind kind) {
  switch (kind) {
    case MixKind::InsOrig: return "ins-orig";
    case MixKind::InsDV: return "ins-dv";
    case MixKind::AllOrig: return "all-orig";
    case MixKind::AllDV: return "all-dv";
  }
  return "?";
}

std::string_view display_name(MixKind kind) {
  switch (kind) {
    case MixKind::InsOrig: return "Ins-orig";
    case MixKind::InsDV: return "Ins-DV";
    case MixKind::AllOrig: return "All-orig";
    case MixKind::AllDV: return "All-DV";
  }
  return "?";
}

MixKind parse_mix_kind(std::string_view name) {
  for (MixKind k : kAllMixKinds)
    if (to_string(k) == name) return k;
  throw std::invalid_argument("unknown mix kind '" + std::string(name) + "'");
}

std::string_view to_string(NegativeRole role) {
  return role == NegativeRole::InstructionNegative ? "instruction_negative" : "hard_negative";
}

MixComposition composition(MixKind kind, std::size_t target_size) {
  MixComposition c;
  if (kind == MixKind::InsOrig) {
    c.instruct = target_size;
    return c;
  }
  if (target_size % 2 != 0)
    throw std::invalid_argument("target size " + std::to_string(target_size) + " must be even for " +
                                std::string(to_string(kind)));
  const std::size_t half = target_size / 2;
  if (kind == MixKind::AllOrig) {
    c.instruct = half;
    c.noninstruct = half;
    return c;
  }
  // Dual views come in pairs; an odd half leaves one slot to an instruct sample.
  c.dual_view_pairs = half / 2;
  c.instruct = target_size - 2 * c.dual_view_pairs;
  return c;
}

std::vector<MixEntry> build_mix(MixKind kind, const std::vector<InstructTriplet>& instruct_pool,
                                const std::vector<InstructTriplet>& noninstruct_pool,
                                const std::vector<DualViewRecord>& dv_pool, std::size_t target_size,
                                std::uint64_t seed) {
  const MixComposition want = composition(kind, target_size);
  std::vector<MixEntry> out;
  out.reserve(want.total());

  Rng dv_rng(derive_seed(seed, "mix/dual-view"));
  if (dv_pool.size() < want.dual_view_pairs)
    throw std::invalid_argument("insufficient dual-view pool: need " + std::to_string(want.dual_view_pairs) +
                                ", have " + std::to_string(dv_pool.size()));
  std::vector<std::size_t> dv_pick = dv_rng.sample_indices(dv_pool.size(), want.dual_view_pairs);
  std::unordered_set<std::string> dv_sources;
  for (std::size_t i : dv_pick) dv_sources.insert(dv_pool[i].source_id);

  std::vector<const InstructTriplet*> instruct_candidates;
  for (const auto& t : instruct_pool)
    if (!dv_sources.count(t.record_id)) instruct_candidates.push_back(&t);
  if (instruct_candidates.size() < want.instruct)
    throw std::invalid_argument("insufficient instruct pool: need " + std::to_string(want.instruct) + ", have " +
                                std::to_string(instruct_candidates.size()));
  if (noninstruct_pool.size() < want.noninstruct)
    throw std::invalid_argument("insufficient non-instruct pool: need " + std::to_string(want.noninstruct) +
                                ", have " + std::to_string(noninstruct_pool.size()));

  Rng instruct_rng(derive_seed(seed, "mix/instruct"));
  for (std::size_t i : instruct_rng.sample_indices(instruct_candidates.size(), want.instruct))
    out.push_back({*instruct_candidates[i], Origin::Instruct, std::nullopt});

  Rng noninstruct_rng(derive_seed(seed, "mix/noninstruct"));
  for (std::size_t i : noninstruct_rng.sample_indices(noninstruct_pool.size(), want.noninstruct))
    out.push_back({noninstruct_pool[i], Origin::NonInstruct, std::nullopt});

  for (std::size_t i : dv_pick) {
    const auto& r = dv_pool[i];
    out.push_back({r.original_view, Origin::DualViewOriginal, r.source_id});
    out.push_back({r.reversed_view, Origin::DualViewReversed, r.source_id});
  }
  return out;
}

std::string concat_query(std::string_view query, std::string_view instruction) {
  if (query.empty()) throw std::invalid_argument("concat_query: empty query");
  std::string out(query);
  if (instruction.empty()) return out;
  out += kQuerySeparator;
  out += instruction;
  return out;
}

std::string strip_instruction(std::string_view input_text) {
  std::size_t at = input_text.find(kQuerySeparator);
  return std::string(at == std::string_view::npos ? input_text : input_text.substr(0, at));
}

std::vector<Candidate> sample_negatives(const InstructTriplet& source, const NegativeSampling& sampling,
                                        std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Candidate> out;

  if (source.is_instruct) {
    const std::size_t available = source.instruction_negatives.size();
    if (available < sampling.instr_neg_min)
      throw std::invalid_argument("record '" + source.record_id + "' has " + std::to_string(available) +
                                  " instruction negatives, at least " + std::to_string(sampling.instr_neg_min) +
                                  " required");
    const std::size_t m = std::min({available, sampling.instr_neg_max, sampling.k});
    for (std::size_t i : rng.sample_indices(available, m))
      out.push_back({source.instruction_negatives[i], NegativeRole::InstructionNegative});
  }

  const std::size_t room = sampling.k - out.size();
  const std::size_t fill = std::min(room, source.hard_negatives.size());
  for (std::size_t i : rng.sample_indices(source.hard_negatives.size(), fill))
    out.push_back({source.hard_negatives[i], NegativeRole::HardNegative});

  if (out.size() < sampling.k)
    log_warning("record '" + source.record_id + "': only " + std::to_string(out.size()) + " of " +
                std::to_string(sampling.k) + " negatives available");
  rng.shuffle(out);
  return out;
}

std::vector<TrainingExample> to_examples(const std::vector<MixEntry>& mix, const NegativeSampling& sampling,
                                         std::uint64_t seed) {
  std::vector<TrainingExample> out;
  out.reserve(mix.size());
  for (const auto& entry : mix) {
    const InstructTriplet& s = entry.source;
    TrainingExample ex;
    ex.source_id = s.record_id;
    ex.input_text = s.is_instruct ? concat_query(s.query, s.instruction) : concat_query(s.query, "");
    ex.positive = s.positive;
    ex.negatives = sample_negatives(s, sampling, derive_seed(seed, s.record_id));
    ex.view_group = entry.view_group;
    if (ex.negatives.empty())
      throw std::invalid_argument("record '" + s.record_id + "' has no negatives to train against");
    out.push_back(std::move(ex));
  }
  return out;
}

std::vector<TrainingBatch> assemble_batches(const std::vector<TrainingExample>& examples, std::size_t batch_size,
                                            std::uint64_t seed) {
  if (batch_size < 2) throw std::invalid_argument("batch_size must be at least 2");

  // Units: one per view group, one per ungrouped example, in first-seen order.
  std::vector<std::vector<std::size_t>> units;
  std::unordered_map<std::string, std::size_t> group_unit;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const auto& g = examples[i].view_group;
    if (!g) {
      units.push_back({i});
      continue;
    }
    auto [it, inserted] = group_unit.try_emplace(*g, units.size());
    if (inserted) units.emplace_back();
    units[it->second].push_back(i);
  }
  for (const auto& u : units)
    if (u.size() > batch_size)
      throw std::invalid_argument("view group of size " + std::to_string(u.size()) + " exceeds batch_size " +
                                  std::to_string(batch_size));

  Rng rng(seed);
  rng.shuffle(units);

  std::vector<TrainingBatch> batches;
  std::deque<std::vector<std::size_t>> pending;
  std::size_t next = 0;
  while (next < units.size() || !pending.empty()) {
    TrainingBatch batch;
    batch.batch_id = batches.size();
    std::size_t free = batch_size;
    auto take = [&](const std::vector<std::size_t>& unit) {
      for (std::size_t i : unit) batch.examples.push_back(examples[i]);
      free -= unit.size();
    };
    for (auto it = pending.begin(); it != pending.end() && free > 0;) {
      if (it->size() <= free) {
        take(*it);
        it = pending.erase(it);
      } else {
        ++it;
      }
    }
    while (free > 0 && next < units.size()) {
      const auto& unit = units[next++];
      if (unit.size() <= free)
        take(unit);
      else
        pending.push_back(unit);
    }
    batches.push_back(std::move(batch));
  }
  return batches;
}

json to_json(const TrainingExample& example) {
  json negatives = json::array();
  for (const auto& c : example.negatives)
    negatives.push_back({{"doc_id", c.doc.doc_id}, {"text", c.doc.text}, {"role", to_string(c.role)}});
  return json{{"source_id", example.source_id},
              {"input_text", example.input_text},
              {"positive", dualview::to_json(example.positive)},
              {"negatives", negatives},
              {"view_group", example.view_group ? json(*example.view_group) : json(nullptr)}};
}

TrainingExample example_from_json(const json& j, const std::string& where) {
  TrainingExample ex;
  try {
    ex.source_id = j.at("source_id").get<std::string>();
    ex.input_text = j.at("input_text").get<std::string>();
    ex.positive = document_from_json(j.at("positive"), where + ": positive");
    for (const auto& n : j.at("negatives")) {
      Candidate c{document_from_json(n, where + ": negatives"), NegativeRole::HardNegative};
      std::string role = n.at("role").get<std::string>();
      if (role == "instruction_negative")
        c.role = NegativeRole::InstructionNegative;
      else if (role != "hard_negative")
        throw SchemaError(where + ": unknown negative role '" + role + "'");
      ex.negatives.push_back(std::move(c));
    }
    if (auto it = j.find("view_group"); it != j.end() && !it->is_null()) ex.view_group = it->get<std::string>();
  } catch (const json::exception& e) {
    throw SchemaError(where + ": " + e.what());
  }
  if (ex.input_text.empty()) throw SchemaError(where + ": empty input_text");
  if (ex.negatives.empty()) throw InvariantError(where + ": example has no negatives");
  for (const auto& c : ex.negatives)
    if (c.doc.doc_id == ex.positive.doc_id) throw InvariantError(where + ": positive listed among negatives");
  return ex;
}

std::vector<TrainingExample> load_examples(const std::filesystem::path& path) {
  std::vector<TrainingExample> out;
  auto lines = read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    std::string where = path.filename().string() + ": line " + std::to_string(i + 1);
    json j;
    try {
      j = json::parse(lines[i]);
    } catch (const json::parse_error& e) {
      throw SchemaError(where + ": invalid JSON: " + e.what());
    }
    out.push_back(example_from_json(j, where));
  }
  return out;
}

void write_examples(const std::filesystem::path& path, const std::vector<TrainingExample>& examples) {
  std::ostringstream os;
  for (const auto& ex : examples) os << to_json(ex).dump() << '\n';
  write_text_file(path, os.str());
}

}  // namespace dualview::mixer
