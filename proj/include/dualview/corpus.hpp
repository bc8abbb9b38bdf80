#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace dualview {

struct Document {
  std::string doc_id;
  std::string text;

  bool operator==(const Document&) const = default;
};

// One seed record: a query under an instruction with its positive, the
// documents the instruction excludes, and plain hard negatives.
struct InstructTriplet {
  std::string record_id;
  std::string query;
  std::string instruction;
  Document positive;
  std::vector<Document> instruction_negatives;
  std::vector<Document> hard_negatives;
  bool is_instruct = true;

  bool operator==(const InstructTriplet&) const = default;
};

// A seed paired with its polarity-reversed view: under the new instruction the
// swapped negative is the positive and the old positive is excluded.
struct DualViewRecord {
  std::string source_id;
  InstructTriplet original_view;
  InstructTriplet reversed_view;
  std::string swapped_negative_id;

  bool operator==(const DualViewRecord&) const = default;
};

// Empty when the record is well formed; otherwise one message per violation.
std::vector<std::string> triplet_violations(const InstructTriplet& t);
std::vector<std::string> dual_view_violations(const DualViewRecord& r);

// Throw InvariantError naming the record on the first violation.
void check_invariants(const InstructTriplet& t);
void check_invariants(const DualViewRecord& r);

// 16 hex digits over query, instruction, positive text and every negative text
// in order. Doc ids and record_id do not participate.
std::string content_hash(const InstructTriplet& t);

nlohmann::json to_json(const Document& d);
nlohmann::json to_json(const InstructTriplet& t);
nlohmann::json to_json(const DualViewRecord& r);

// `where` prefixes error messages, e.g. "line 3".
Document document_from_json(const nlohmann::json& j, const std::string& where);
InstructTriplet triplet_from_json(const nlohmann::json& j, const std::string& where);
DualViewRecord dual_view_from_json(const nlohmann::json& j, const std::string& where);

std::vector<InstructTriplet> load_triplets(const std::filesystem::path& path);
std::vector<DualViewRecord> load_records(const std::filesystem::path& path);

// Every record is validated before the file is opened; returns the count.
std::size_t write_records(const std::filesystem::path& path, std::span<const DualViewRecord> records);
std::size_t write_triplets(const std::filesystem::path& path, std::span<const InstructTriplet> records);

// Shared JSONL helpers.
std::vector<std::string> read_lines(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& contents);

}  // namespace dualview
