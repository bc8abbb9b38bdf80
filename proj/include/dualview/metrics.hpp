#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace dualview::metrics {

struct RankedDoc {
  std::string doc_id;
  double score = 0.0;

  bool operator==(const RankedDoc&) const = default;
};

using Ranking = std::vector<RankedDoc>;

// qid -> documents by descending score, ties by ascending doc_id.
struct RunFile {
  std::map<std::string, Ranking> queries;
};

// qid -> doc_id -> graded relevance.
struct Qrels {
  std::map<std::string, std::map<std::string, int>> judgments;

  // Number of documents with relevance > 0 for qid.
  std::size_t relevant_count(const std::string& qid) const;
  int relevance(const std::string& qid, const std::string& doc_id) const;
};

// Applies the tie-break order in place.
void sort_ranking(Ranking& ranking);

// `qid Q0 doc_id rank score tag`; the rank column is ignored and recomputed.
RunFile parse_run(std::istream& in, const std::string& source);
RunFile read_run(const std::filesystem::path& path);
void write_run(const std::filesystem::path& path, const RunFile& run, const std::string& tag);

// `qid 0 doc_id rel`
Qrels parse_qrels(std::istream& in, const std::string& source);
Qrels read_qrels(const std::filesystem::path& path);
void write_qrels(const std::filesystem::path& path, const Qrels& qrels);

// 1-based position of doc_id under qid; nullopt if not retrieved. Throws
// std::out_of_range for an unknown qid.
std::optional<std::size_t> rank_of(const RunFile& run, const std::string& qid, const std::string& doc_id);
std::optional<std::size_t> rank_of(const Ranking& ranking, const std::string& doc_id);

// One query of a paired evaluation: the same query ranked under the original
// and the changed instruction, and the document the change makes relevant.
struct PairedEntry {
  std::string qid;
  Ranking run_og;
  Ranking run_new;
  std::string target_doc_id;
};

// Per-query rank-shift score: r_og/r_new - 1 when the target moved up under
// the changed instruction, 1 - r_new/r_og otherwise.
double p_mrr_query(std::size_t rank_og, std::size_t rank_new);

// 100 x mean per-query score. A document absent from a ranking, or ranked past
// the cutoff, takes rank cutoff + 1.
double p_mrr(const std::vector<PairedEntry>& paired, std::size_t cutoff = 1000);

// JSONL lines {"qid", "run_og", "run_new", "target_doc_id"}; run paths are
// resolved against the manifest's directory.
std::vector<PairedEntry> load_paired_manifest(const std::filesystem::path& path);

enum class Gain { Linear, Exponential };

double ndcg_at_k(const RunFile& run, const Qrels& qrels, const std::string& qid, std::size_t k,
                 Gain gain = Gain::Linear);
double map_at_k(const RunFile& run, const Qrels& qrels, const std::string& qid, std::size_t k);
double mrr(const RunFile& run, const Qrels& qrels, const std::string& qid);

// Macro average of the three FollowIR subset values.
double followir_score(std::span<const double> subset_values);

enum class MetricKind { Ndcg, Map, Mrr };

struct SubsetMetric {
  MetricKind kind = MetricKind::Ndcg;
  std::size_t k = 10;

  std::string name() const;  // "ndcg@10", "map@1000", "mrr"
};

// "ndcg@10", "map@1000", "mrr"
SubsetMetric parse_subset_metric(std::string_view text);

// Mean of the metric over queries present in both run and qrels.
double mean_metric(const RunFile& run, const Qrels& qrels, const SubsetMetric& metric, Gain gain = Gain::Linear);

struct SubsetResult {
  SubsetMetric metric;
  double value = 0.0;  // in [0, 1]
  std::size_t queries = 0;
};

// Everything `eval` computes for one trained model.
struct EvalResult {
  std::string label;
  std::map<std::string, double> p_mrr;          // paired set name -> p-MRR (x100)
  std::map<std::string, SubsetResult> subsets;  // subset name -> metric value

  // Mean over the subsets named "followir/..."; present only with exactly three.
  std::optional<double> followir_score() const;
};

nlohmann::json to_json(const EvalResult& result);
EvalResult eval_result_from_json(const nlohmann::json& j);

// Rows of the results table; values on the 0-100 scale, nullopt when an input
// was not evaluated.
struct ReportRow {
  std::string label;
  std::optional<double> followir_pmrr;
  std::optional<double> followir_score;
  std::optional<double> infosearch_length;
  std::optional<double> infosearch_keyword;
  std::optional<double> mair_ifeval;
  std::optional<double> mair_instructir;
};

struct MetricReport {
  std::vector<ReportRow> rows;
};

MetricReport build_report(const std::vector<EvalResult>& results);
nlohmann::json to_json(const MetricReport& report);
// Aligned text table with the benchmark group headers over the metric columns.
std::string render_table(const MetricReport& report);

}  // namespace dualview::metrics
