#include "dualview/validate.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>
#include <tuple>

#include "dualview/common.hpp"

namespace dualview::validate {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

}  // namespace

SentenceCount check_sentence_count(std::string_view instruction, const ValidationOptions& opts) {
  std::string_view text = trim(instruction);
  int count = 0;
  std::size_t sentence_start = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (c != '.' && c != '!' && c != '?') continue;
    if (i + 1 < text.size() && !is_space(text[i + 1])) continue;

    std::size_t word_start = i;
    while (word_start > 0 && !is_space(text[word_start - 1])) --word_start;
    std::string word = to_lower(text.substr(word_start, i - word_start + 1));
    while (!word.empty() && (word.front() == '(' || word.front() == '"' || word.front() == '\'')) word.erase(0, 1);
    if (c == '.' && std::find(opts.abbreviations.begin(), opts.abbreviations.end(), word) != opts.abbreviations.end())
      continue;

    ++count;
    sentence_start = i + 1;
  }
  if (!trim(text.substr(std::min(sentence_start, text.size()))).empty()) ++count;
  return {count, count >= 1 && count <= 2};
}

Distinctness check_distinctness(std::string_view original, std::string_view synthesized,
                                const ValidationOptions& opts) {
  if (trim(original).empty() || trim(synthesized).empty())
    throw std::invalid_argument("check_distinctness: empty input");
  auto a_tokens = tokenize(original);
  auto b_tokens = tokenize(synthesized);
  std::set<std::string> a(a_tokens.begin(), a_tokens.end());
  std::set<std::string> b(b_tokens.begin(), b_tokens.end());
  if (a.empty() && b.empty()) return {1.0, false};

  std::size_t shared = 0;
  for (const auto& t : a) shared += b.count(t);
  std::size_t unioned = a.size() + b.size() - shared;
  double j = static_cast<double>(shared) / static_cast<double>(unioned);
  return {j, j < opts.distinctness_threshold};
}

std::vector<BannedHit> check_banned_content(std::string_view instruction, const ValidationOptions& opts) {
  const std::string lowered = to_lower(instruction);
  struct Span {
    std::size_t begin, end;
    std::string pattern;
  };
  std::vector<Span> spans;
  for (const auto& pattern : opts.banned) {
    std::string p = to_lower(pattern);
    if (p.empty()) continue;
    for (std::size_t at = lowered.find(p); at != std::string::npos; at = lowered.find(p, at + 1))
      spans.push_back({at, at + p.size(), pattern});
  }
  std::vector<BannedHit> hits;
  for (const auto& s : spans) {
    bool nested = std::any_of(spans.begin(), spans.end(), [&](const Span& o) {
      return o.begin <= s.begin && s.end <= o.end && (o.end - o.begin) > (s.end - s.begin);
    });
    if (!nested) hits.push_back({s.pattern, s.begin});
  }
  std::sort(hits.begin(), hits.end(),
            [](const BannedHit& a, const BannedHit& b) { return std::tie(a.offset, a.pattern) < std::tie(b.offset, b.pattern); });
  return hits;
}

ValidationReport validate_record(const DualViewRecord& record, const ValidationOptions& opts) {
  ValidationReport report;
  report.source_id = record.source_id;
  const std::string& instruction = record.reversed_view.instruction;

  auto sentences = check_sentence_count(instruction, opts);
  report.checks.push_back({"sentence_count", sentences.passed, std::to_string(sentences.count) + " sentence(s)"});

  if (trim(instruction).empty() || trim(record.original_view.instruction).empty()) {
    report.checks.push_back({"distinctness", false, "empty instruction"});
  } else {
    auto d = check_distinctness(record.original_view.instruction, instruction, opts);
    std::ostringstream detail;
    detail << "jaccard " << d.jaccard << " vs threshold " << opts.distinctness_threshold;
    report.checks.push_back({"distinctness", d.passed, detail.str()});
  }

  auto hits = check_banned_content(instruction, opts);
  std::string banned_detail;
  for (const auto& h : hits) {
    if (!banned_detail.empty()) banned_detail += "; ";
    banned_detail += "'" + h.pattern + "' at " + std::to_string(h.offset);
  }
  report.checks.push_back({"banned_content", hits.empty(), hits.empty() ? "none" : banned_detail});

  auto violations = dual_view_violations(record);
  std::string structure_detail;
  for (const auto& v : violations) {
    if (!structure_detail.empty()) structure_detail += "; ";
    structure_detail += v;
  }
  report.checks.push_back({"structure", violations.empty(), violations.empty() ? "ok" : structure_detail});

  report.overall_pass = std::all_of(report.checks.begin(), report.checks.end(), [](const Check& c) { return c.passed; });
  return report;
}

nlohmann::json to_json(const ValidationReport& report) {
  nlohmann::json checks = nlohmann::json::array();
  for (const auto& c : report.checks) checks.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
  return {{"source_id", report.source_id}, {"checks", checks}, {"overall_pass", report.overall_pass}};
}

ValidationRun validate_all(const std::vector<DualViewRecord>& records, bool strict, const ValidationOptions& opts) {
  ValidationRun run;
  for (const auto& r : records) {
    run.reports.push_back(validate_record(r, opts));
    bool ok = run.reports.back().overall_pass;
    run.summary.total += 1;
    run.summary.passed += ok ? 1 : 0;
    if (!strict || ok) run.kept.push_back(r);
  }
  return run;
}

}  // namespace dualview::validate
