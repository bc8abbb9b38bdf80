#include "dualview/corpus.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

#include "dualview/common.hpp"

namespace dualview {

using nlohmann::json;

namespace {

bool contains_id(const std::vector<Document>& docs, const std::string& id) {
  for (const auto& d : docs)
    if (d.doc_id == id) return true;
  return false;
}

const json& require(const json& j, const char* key, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) throw SchemaError(where + ": missing field '" + key + "'");
  return *it;
}

std::string require_string(const json& j, const char* key, const std::string& where) {
  const json& v = require(j, key, where);
  if (!v.is_string()) throw SchemaError(where + ": field '" + key + "' must be a string");
  return v.get<std::string>();
}

std::vector<Document> documents_from_json(const json& j, const char* key, const std::string& where) {
  std::vector<Document> out;
  auto it = j.find(key);
  if (it == j.end()) return out;
  if (!it->is_array()) throw SchemaError(where + ": field '" + key + "' must be an array");
  for (std::size_t i = 0; i < it->size(); ++i)
    out.push_back(document_from_json((*it)[i], where + ": " + key + "[" + std::to_string(i) + "]"));
  return out;
}

json documents_to_json(const std::vector<Document>& docs) {
  json arr = json::array();
  for (const auto& d : docs) arr.push_back(to_json(d));
  return arr;
}

template <typename Parse>
auto load_jsonl(const std::filesystem::path& path, Parse parse) {
  std::vector<std::string> lines = read_lines(path);
  std::vector<decltype(parse(json{}, std::string{}))> out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    std::string where = "line " + std::to_string(i + 1);
    json j;
    try {
      j = json::parse(lines[i]);
    } catch (const json::parse_error& e) {
      throw SchemaError(where + ": invalid JSON: " + e.what());
    }
    if (!j.is_object()) throw SchemaError(where + ": expected a JSON object");
    out.push_back(parse(j, where));
  }
  return out;
}

}  // namespace

std::vector<std::string> triplet_violations(const InstructTriplet& t) {
  std::vector<std::string> v;
  if (t.record_id.empty()) v.push_back("empty record_id");
  if (t.query.empty()) v.push_back("empty query");
  if (t.is_instruct && t.instruction.empty()) v.push_back("instruct record with empty instruction");

  auto check_doc = [&](const Document& d, const std::string& role) {
    if (d.doc_id.empty()) v.push_back(role + " has empty doc_id");
    if (d.text.empty()) v.push_back(role + " '" + d.doc_id + "' has empty text");
  };
  check_doc(t.positive, "positive");
  for (const auto& d : t.instruction_negatives) check_doc(d, "instruction negative");
  for (const auto& d : t.hard_negatives) check_doc(d, "hard negative");

  if (contains_id(t.instruction_negatives, t.positive.doc_id) ||
      contains_id(t.hard_negatives, t.positive.doc_id))
    v.push_back("positive '" + t.positive.doc_id + "' also listed as a negative");

  std::set<std::string> seen;
  for (const auto* list : {&t.instruction_negatives, &t.hard_negatives}) {
    for (const auto& d : *list) {
      if (!seen.insert(d.doc_id).second) v.push_back("duplicated negative doc_id '" + d.doc_id + "'");
    }
  }
  return v;
}

std::vector<std::string> dual_view_violations(const DualViewRecord& r) {
  std::vector<std::string> v;
  for (auto& m : triplet_violations(r.original_view)) v.push_back("original_view: " + m);
  for (auto& m : triplet_violations(r.reversed_view)) v.push_back("reversed_view: " + m);

  const auto& og = r.original_view;
  const auto& rv = r.reversed_view;
  if (r.source_id.empty()) v.push_back("empty source_id");
  if (!contains_id(og.instruction_negatives, r.swapped_negative_id))
    v.push_back("swapped negative '" + r.swapped_negative_id + "' is not an original instruction negative");
  if (rv.positive.doc_id != r.swapped_negative_id)
    v.push_back("reversed positive '" + rv.positive.doc_id + "' is not the swapped negative");
  if (!contains_id(rv.instruction_negatives, og.positive.doc_id))
    v.push_back("original positive '" + og.positive.doc_id + "' not demoted to instruction negative");
  for (const auto& d : og.instruction_negatives) {
    if (d.doc_id == r.swapped_negative_id) continue;
    if (!contains_id(rv.instruction_negatives, d.doc_id))
      v.push_back("remaining negative '" + d.doc_id + "' not retained");
  }
  if (og.query != rv.query) v.push_back("query changed between views");
  if (og.instruction == rv.instruction) v.push_back("instruction unchanged between views");
  return v;
}

void check_invariants(const InstructTriplet& t) {
  auto v = triplet_violations(t);
  if (!v.empty()) throw InvariantError("record '" + t.record_id + "': " + v.front());
}

void check_invariants(const DualViewRecord& r) {
  auto v = dual_view_violations(r);
  if (!v.empty()) throw InvariantError("record '" + r.source_id + "': " + v.front());
}

std::string content_hash(const InstructTriplet& t) {
  Fnv1a64 h;
  h.field(t.query).field(t.instruction).field(t.positive.text);
  for (const auto* list : {&t.instruction_negatives, &t.hard_negatives}) {
    h.field(std::to_string(list->size()));
    for (const auto& d : *list) h.field(d.text);
  }
  return to_hex16(h.digest());
}

json to_json(const Document& d) { return json{{"doc_id", d.doc_id}, {"text", d.text}}; }

json to_json(const InstructTriplet& t) {
  return json{{"record_id", t.record_id},
              {"query", t.query},
              {"instruction", t.instruction},
              {"is_instruct", t.is_instruct},
              {"positive", to_json(t.positive)},
              {"instruction_negatives", documents_to_json(t.instruction_negatives)},
              {"hard_negatives", documents_to_json(t.hard_negatives)}};
}

json to_json(const DualViewRecord& r) {
  return json{{"source_id", r.source_id},
              {"swapped_negative_id", r.swapped_negative_id},
              {"original_view", to_json(r.original_view)},
              {"reversed_view", to_json(r.reversed_view)}};
}

Document document_from_json(const json& j, const std::string& where) {
  if (!j.is_object()) throw SchemaError(where + ": document must be an object");
  return Document{require_string(j, "doc_id", where), require_string(j, "text", where)};
}

InstructTriplet triplet_from_json(const json& j, const std::string& where) {
  InstructTriplet t;
  t.query = require_string(j, "query", where);
  t.instruction = j.contains("instruction") ? require_string(j, "instruction", where) : std::string{};
  if (auto it = j.find("is_instruct"); it != j.end()) {
    if (!it->is_boolean()) throw SchemaError(where + ": field 'is_instruct' must be a boolean");
    t.is_instruct = it->get<bool>();
  } else {
    t.is_instruct = !t.instruction.empty();
  }
  t.positive = document_from_json(require(j, "positive", where), where + ": positive");
  t.instruction_negatives = documents_from_json(j, "instruction_negatives", where);
  t.hard_negatives = documents_from_json(j, "hard_negatives", where);
  if (auto it = j.find("record_id"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) throw SchemaError(where + ": field 'record_id' must be a string");
    t.record_id = it->get<std::string>();
  }
  if (t.record_id.empty()) t.record_id = content_hash(t);
  return t;
}

DualViewRecord dual_view_from_json(const json& j, const std::string& where) {
  DualViewRecord r;
  r.source_id = require_string(j, "source_id", where);
  r.swapped_negative_id = require_string(j, "swapped_negative_id", where);
  r.original_view = triplet_from_json(require(j, "original_view", where), where + ": original_view");
  r.reversed_view = triplet_from_json(require(j, "reversed_view", where), where + ": reversed_view");
  return r;
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  if (in.bad()) throw IoError("read failure on '" + path.string() + "'");
  return lines;
}

void write_text_file(const std::filesystem::path& path, const std::string& contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << contents;
  if (!out) throw IoError("write failure on '" + path.string() + "'");
}

std::vector<InstructTriplet> load_triplets(const std::filesystem::path& path) {
  auto out = load_jsonl(path, [](const json& j, const std::string& where) {
    InstructTriplet t = triplet_from_json(j, where);
    auto v = triplet_violations(t);
    if (!v.empty()) throw InvariantError(where + ": record '" + t.record_id + "': " + v.front());
    return t;
  });
  std::unordered_set<std::string> ids;
  for (const auto& t : out)
    if (!ids.insert(t.record_id).second) throw InvariantError("duplicate record_id '" + t.record_id + "'");
  return out;
}

std::vector<DualViewRecord> load_records(const std::filesystem::path& path) {
  auto out = load_jsonl(path, [](const json& j, const std::string& where) {
    DualViewRecord r = dual_view_from_json(j, where);
    auto v = dual_view_violations(r);
    if (!v.empty()) throw InvariantError(where + ": record '" + r.source_id + "': " + v.front());
    return r;
  });
  std::unordered_set<std::string> ids;
  for (const auto& r : out)
    if (!ids.insert(r.source_id).second) throw InvariantError("duplicate source_id '" + r.source_id + "'");
  return out;
}

std::size_t write_records(const std::filesystem::path& path, std::span<const DualViewRecord> records) {
  for (const auto& r : records) check_invariants(r);
  std::ostringstream os;
  for (const auto& r : records) os << to_json(r).dump() << '\n';
  write_text_file(path, os.str());
  return records.size();
}

std::size_t write_triplets(const std::filesystem::path& path, std::span<const InstructTriplet> records) {
  for (const auto& t : records) check_invariants(t);
  std::ostringstream os;
  for (const auto& t : records) os << to_json(t).dump() << '\n';
  write_text_file(path, os.str());
  return records.size();
}

}  // namespace dualview
