#pragma once

#include <string>
#include <vector>

#include "dualview/corpus.hpp"

namespace dualview::validate {

struct ValidationOptions {
  double distinctness_threshold = 0.6;
  std::vector<std::string> banned = {"passage",   "negative passage", "p+",         "n*",
                                     "meta-task", "instruction negative", "the above", "this task"};
  std::vector<std::string> abbreviations = {"e.g.", "i.e.", "u.s.", "u.k.", "etc.", "vs.", "approx.", "no."};
};

struct SentenceCount {
  int count = 0;
  bool passed = false;
};

struct Distinctness {
  double jaccard = 0.0;
  bool passed = false;
};

struct BannedHit {
  std::string pattern;
  std::size_t offset = 0;

  bool operator==(const BannedHit&) const = default;
};

struct Check {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct ValidationReport {
  std::string source_id;
  std::vector<Check> checks;
  bool overall_pass = false;
};

// Sentences end at '.', '!' or '?' followed by whitespace or end of text,
// unless the word ending there is a known abbreviation. Trailing text without
// a terminator counts as one more sentence.
SentenceCount check_sentence_count(std::string_view instruction, const ValidationOptions& opts = {});

// Token-set Jaccard over lowercased alphanumeric tokens; passes below the
// threshold. Throws std::invalid_argument on empty input.
Distinctness check_distinctness(std::string_view original, std::string_view synthesized,
                                const ValidationOptions& opts = {});

// Case-insensitive scan. A hit nested inside a longer hit is not reported.
std::vector<BannedHit> check_banned_content(std::string_view instruction, const ValidationOptions& opts = {});

ValidationReport validate_record(const DualViewRecord& record, const ValidationOptions& opts = {});

nlohmann::json to_json(const ValidationReport& report);

struct ValidationSummary {
  std::size_t total = 0;
  std::size_t passed = 0;
  double pass_rate() const { return total == 0 ? 1.0 : static_cast<double>(passed) / static_cast<double>(total); }
};

// Validates every record. In strict mode `kept` holds only passing records;
// otherwise it is the input unchanged.
struct ValidationRun {
  std::vector<ValidationReport> reports;
  std::vector<DualViewRecord> kept;
  ValidationSummary summary;
};

ValidationRun validate_all(const std::vector<DualViewRecord>& records, bool strict,
                           const ValidationOptions& opts = {});

}  // namespace dualview::validate
