#include "dualview/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "dualview/common.hpp"
#include "dualview/corpus.hpp"

namespace dualview::metrics {

using nlohmann::json;

std::size_t Qrels::relevant_count(const std::string& qid) const {
  auto it = judgments.find(qid);
  if (it == judgments.end()) return 0;
  return static_cast<std::size_t>(
      std::count_if(it->second.begin(), it->second.end(), [](const auto& kv) { return kv.second > 0; }));
}

int Qrels::relevance(const std::string& qid, const std::string& doc_id) const {
  auto it = judgments.find(qid);
  if (it == judgments.end()) return 0;
  auto jt = it->second.find(doc_id);
  return jt == it->second.end() ? 0 : jt->second;
}

void sort_ranking(Ranking& ranking) {
  std::sort(ranking.begin(), ranking.end(), [](const RankedDoc& a, const RankedDoc& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.doc_id < b.doc_id;
  });
}

namespace {

std::vector<std::string> split_ws(const std::string& line) {
  std::istringstream is(line);
  std::vector<std::string> out;
  std::string field;
  while (is >> field) out.push_back(field);
  return out;
}

double parse_double(const std::string& s, const std::string& where) {
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw SchemaError(where + ": bad number '" + s + "'");
  }
  if (used != s.size() || !std::isfinite(v)) throw SchemaError(where + ": bad number '" + s + "'");
  return v;
}

int parse_int(const std::string& s, const std::string& where) {
  std::size_t used = 0;
  int v = 0;
  try {
    v = std::stoi(s, &used);
  } catch (const std::exception&) {
    throw SchemaError(where + ": bad integer '" + s + "'");
  }
  if (used != s.size()) throw SchemaError(where + ": bad integer '" + s + "'");
  return v;
}

std::string format_score(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace

RunFile parse_run(std::istream& in, const std::string& source) {
  RunFile run;
  std::map<std::string, std::set<std::string>> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto f = split_ws(line);
    if (f.empty()) continue;
    std::string where = source + ": line " + std::to_string(lineno);
    if (f.size() != 6) throw SchemaError(where + ": expected 6 columns, got " + std::to_string(f.size()));
    const std::string& qid = f[0];
    const std::string& doc = f[2];
    if (!seen[qid].insert(doc).second) throw SchemaError(where + ": duplicate document '" + doc + "' for query '" + qid + "'");
    run.queries[qid].push_back({doc, parse_double(f[4], where)});
  }
  for (auto& [qid, ranking] : run.queries) sort_ranking(ranking);
  return run;
}

RunFile read_run(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return parse_run(in, path.string());
}

void write_run(const std::filesystem::path& path, const RunFile& run, const std::string& tag) {
  std::ostringstream os;
  for (const auto& [qid, ranking] : run.queries) {
    Ranking sorted = ranking;
    sort_ranking(sorted);
    for (std::size_t i = 0; i < sorted.size(); ++i)
      os << qid << " Q0 " << sorted[i].doc_id << ' ' << (i + 1) << ' ' << format_score(sorted[i].score) << ' ' << tag
         << '\n';
  }
  write_text_file(path, os.str());
}

Qrels parse_qrels(std::istream& in, const std::string& source) {
  Qrels qrels;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto f = split_ws(line);
    if (f.empty()) continue;
    std::string where = source + ": line " + std::to_string(lineno);
    if (f.size() != 4) throw SchemaError(where + ": expected 4 columns, got " + std::to_string(f.size()));
    int rel = parse_int(f[3], where);
    if (rel < 0) throw SchemaError(where + ": negative relevance");
    if (!qrels.judgments[f[0]].emplace(f[2], rel).second)
      throw SchemaError(where + ": duplicate judgment for ('" + f[0] + "', '" + f[2] + "')");
  }
  return qrels;
}

Qrels read_qrels(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return parse_qrels(in, path.string());
}

void write_qrels(const std::filesystem::path& path, const Qrels& qrels) {
  std::ostringstream os;
  for (const auto& [qid, docs] : qrels.judgments)
    for (const auto& [doc, rel] : docs) os << qid << " 0 " << doc << ' ' << rel << '\n';
  write_text_file(path, os.str());
}

std::optional<std::size_t> rank_of(const Ranking& ranking, const std::string& doc_id) {
  for (std::size_t i = 0; i < ranking.size(); ++i)
    if (ranking[i].doc_id == doc_id) return i + 1;
  return std::nullopt;
}

std::optional<std::size_t> rank_of(const RunFile& run, const std::string& qid, const std::string& doc_id) {
  auto it = run.queries.find(qid);
  if (it == run.queries.end()) throw std::out_of_range("unknown qid '" + qid + "'");
  return rank_of(it->second, doc_id);
}

double p_mrr_query(std::size_t rank_og, std::size_t rank_new) {
  if (rank_og == 0 || rank_new == 0) throw std::invalid_argument("ranks are 1-based");
  const double og = static_cast<double>(rank_og);
  const double nw = static_cast<double>(rank_new);
  if (rank_og > rank_new) return og / nw - 1.0;
  return 1.0 - nw / og;
}

double p_mrr(const std::vector<PairedEntry>& paired, std::size_t cutoff) {
  if (paired.empty()) throw std::invalid_argument("p_mrr: empty paired set");
  auto effective = [cutoff](std::optional<std::size_t> r) {
    return (!r || *r > cutoff) ? cutoff + 1 : *r;
  };
  double total = 0.0;
  for (const auto& e : paired) {
    if (e.target_doc_id.empty()) throw std::invalid_argument("p_mrr: entry '" + e.qid + "' has no target document");
    total += p_mrr_query(effective(rank_of(e.run_og, e.target_doc_id)), effective(rank_of(e.run_new, e.target_doc_id)));
  }
  return 100.0 * total / static_cast<double>(paired.size());
}

std::vector<PairedEntry> load_paired_manifest(const std::filesystem::path& path) {
  const auto base = path.parent_path();
  std::map<std::filesystem::path, RunFile> runs;
  auto run_for = [&](const std::string& rel) -> const RunFile& {
    std::filesystem::path p = std::filesystem::path(rel).is_absolute() ? std::filesystem::path(rel) : base / rel;
    auto it = runs.find(p);
    if (it == runs.end()) it = runs.emplace(p, read_run(p)).first;
    return it->second;
  };

  std::vector<PairedEntry> out;
  auto lines = read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    std::string where = path.string() + ": line " + std::to_string(i + 1);
    PairedEntry e;
    std::string og_path, new_path;
    try {
      json j = json::parse(lines[i]);
      e.qid = j.at("qid").get<std::string>();
      og_path = j.at("run_og").get<std::string>();
      new_path = j.at("run_new").get<std::string>();
      e.target_doc_id = j.at("target_doc_id").get<std::string>();
    } catch (const json::exception& ex) {
      throw SchemaError(where + ": " + ex.what());
    }
    if (e.target_doc_id.empty()) throw SchemaError(where + ": empty target_doc_id");
    const RunFile& og = run_for(og_path);
    const RunFile& nw = run_for(new_path);
    auto og_it = og.queries.find(e.qid);
    auto nw_it = nw.queries.find(e.qid);
    if (og_it == og.queries.end() || nw_it == nw.queries.end())
      throw SchemaError(where + ": query '" + e.qid + "' missing from a paired run");
    e.run_og = og_it->second;
    e.run_new = nw_it->second;
    out.push_back(std::move(e));
  }
  return out;
}

namespace {

const Ranking& ranking_for(const RunFile& run, const std::string& qid) {
  auto it = run.queries.find(qid);
  if (it == run.queries.end()) throw std::out_of_range("unknown qid '" + qid + "'");
  return it->second;
}

double gain_of(int rel, Gain gain) {
  return gain == Gain::Linear ? static_cast<double>(rel) : std::exp2(static_cast<double>(rel)) - 1.0;
}

}  // namespace

double ndcg_at_k(const RunFile& run, const Qrels& qrels, const std::string& qid, std::size_t k, Gain gain) {
  if (k < 1) throw std::invalid_argument("ndcg_at_k: k must be >= 1");
  const Ranking& ranking = ranking_for(run, qid);

  double dcg = 0.0;
  for (std::size_t i = 0; i < std::min(k, ranking.size()); ++i)
    dcg += gain_of(qrels.relevance(qid, ranking[i].doc_id), gain) / std::log2(static_cast<double>(i) + 2.0);

  std::vector<int> ideal;
  if (auto it = qrels.judgments.find(qid); it != qrels.judgments.end())
    for (const auto& [doc, rel] : it->second)
      if (rel > 0) ideal.push_back(rel);
  std::sort(ideal.rbegin(), ideal.rend());
  double idcg = 0.0;
  for (std::size_t i = 0; i < std::min(k, ideal.size()); ++i)
    idcg += gain_of(ideal[i], gain) / std::log2(static_cast<double>(i) + 2.0);
  return idcg > 0 ? dcg / idcg : 0.0;
}

double map_at_k(const RunFile& run, const Qrels& qrels, const std::string& qid, std::size_t k) {
  if (k < 1) throw std::invalid_argument("map_at_k: k must be >= 1");
  const Ranking& ranking = ranking_for(run, qid);
  const std::size_t relevant = qrels.relevant_count(qid);
  if (relevant == 0) return 0.0;

  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < std::min(k, ranking.size()); ++i) {
    if (qrels.relevance(qid, ranking[i].doc_id) > 0) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(i + 1);
    }
  }
  return sum / static_cast<double>(std::min(k, relevant));
}

double mrr(const RunFile& run, const Qrels& qrels, const std::string& qid) {
  const Ranking& ranking = ranking_for(run, qid);
  for (std::size_t i = 0; i < ranking.size(); ++i)
    if (qrels.relevance(qid, ranking[i].doc_id) > 0) return 1.0 / static_cast<double>(i + 1);
  return 0.0;
}

double followir_score(std::span<const double> subset_values) {
  if (subset_values.size() != 3)
    throw std::invalid_argument("followir_score expects 3 subset values, got " + std::to_string(subset_values.size()));
  return (subset_values[0] + subset_values[1] + subset_values[2]) / 3.0;
}

std::string SubsetMetric::name() const {
  switch (kind) {
    case MetricKind::Ndcg: return "ndcg@" + std::to_string(k);
    case MetricKind::Map: return "map@" + std::to_string(k);
    case MetricKind::Mrr: return "mrr";
  }
  return "?";
}

SubsetMetric parse_subset_metric(std::string_view text) {
  std::string lowered = to_lower(text);
  if (lowered == "mrr") return {MetricKind::Mrr, 0};
  std::size_t at = lowered.find('@');
  if (at == std::string::npos) throw std::invalid_argument("metric '" + std::string(text) + "' needs a cutoff, e.g. ndcg@10");
  std::string name = lowered.substr(0, at);
  std::size_t k = 0;
  try {
    std::size_t used = 0;
    k = std::stoul(lowered.substr(at + 1), &used);
    if (used != lowered.size() - at - 1) throw std::invalid_argument("trailing characters");
  } catch (const std::exception&) {
    throw std::invalid_argument("bad cutoff in metric '" + std::string(text) + "'");
  }
  if (k < 1) throw std::invalid_argument("metric cutoff must be >= 1");
  if (name == "ndcg") return {MetricKind::Ndcg, k};
  if (name == "map") return {MetricKind::Map, k};
  throw std::invalid_argument("unknown metric '" + std::string(text) + "'");
}

double mean_metric(const RunFile& run, const Qrels& qrels, const SubsetMetric& metric, Gain gain) {
  double total = 0.0;
  std::size_t n = 0;
  for (const auto& [qid, ranking] : run.queries) {
    if (!qrels.judgments.count(qid)) continue;
    switch (metric.kind) {
      case MetricKind::Ndcg: total += ndcg_at_k(run, qrels, qid, metric.k, gain); break;
      case MetricKind::Map: total += map_at_k(run, qrels, qid, metric.k); break;
      case MetricKind::Mrr: total += mrr(run, qrels, qid); break;
    }
    ++n;
  }
  return n == 0 ? 0.0 : total / static_cast<double>(n);
}

std::optional<double> EvalResult::followir_score() const {
  std::vector<double> values;
  for (const auto& [name, r] : subsets)
    if (name.rfind("followir/", 0) == 0) values.push_back(r.value);
  if (values.size() != 3) return std::nullopt;
  return metrics::followir_score(values);
}

json to_json(const EvalResult& result) {
  json subsets = json::object();
  for (const auto& [name, r] : result.subsets)
    subsets[name] = {{"metric", r.metric.name()}, {"value", r.value}, {"queries", r.queries}};
  auto score = result.followir_score();
  return json{{"label", result.label},
              {"p_mrr", result.p_mrr},
              {"subsets", subsets},
              {"followir_score", score ? json(*score) : json(nullptr)}};
}

EvalResult eval_result_from_json(const json& j) {
  EvalResult r;
  try {
    r.label = j.at("label").get<std::string>();
    for (const auto& [name, v] : j.at("p_mrr").items()) r.p_mrr[name] = v.get<double>();
    for (const auto& [name, v] : j.at("subsets").items()) {
      SubsetResult s;
      s.metric = parse_subset_metric(v.at("metric").get<std::string>());
      s.value = v.at("value").get<double>();
      s.queries = v.value("queries", std::size_t{0});
      r.subsets[name] = s;
    }
  } catch (const json::exception& e) {
    throw SchemaError(std::string("eval result: ") + e.what());
  }
  return r;
}

MetricReport build_report(const std::vector<EvalResult>& results) {
  MetricReport report;
  for (const auto& r : results) {
    ReportRow row;
    row.label = r.label;
    auto pm = [&](const char* name) -> std::optional<double> {
      auto it = r.p_mrr.find(name);
      return it == r.p_mrr.end() ? std::nullopt : std::optional<double>(it->second);
    };
    auto subset = [&](const char* name) -> std::optional<double> {
      auto it = r.subsets.find(name);
      return it == r.subsets.end() ? std::nullopt : std::optional<double>(100.0 * it->second.value);
    };
    row.followir_pmrr = pm("followir");
    if (auto s = r.followir_score()) row.followir_score = 100.0 * *s;
    row.infosearch_length = pm("infosearch-length");
    row.infosearch_keyword = pm("infosearch-keyword");
    row.mair_ifeval = subset("mair-ifeval");
    row.mair_instructir = subset("mair-instructir");
    report.rows.push_back(std::move(row));
  }
  return report;
}

json to_json(const MetricReport& report) {
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  json rows = json::array();
  for (const auto& r : report.rows) {
    rows.push_back({{"training_data", r.label},
                    {"followir", {{"p_mrr", opt(r.followir_pmrr)}, {"score", opt(r.followir_score)}}},
                    {"infosearch_p_mrr", {{"length", opt(r.infosearch_length)}, {"keyword", opt(r.infosearch_keyword)}}},
                    {"mair_ndcg_at_10", {{"ifeval", opt(r.mair_ifeval)}, {"instructir", opt(r.mair_instructir)}}}});
  }
  return json{{"rows", rows}};
}

std::string render_table(const MetricReport& report) {
  std::size_t label_width = std::string("Training data").size();
  for (const auto& r : report.rows) label_width = std::max(label_width, r.label.size());
  constexpr int kCol = 11;

  auto cell = [](const std::optional<double>& v) {
    if (!v) return std::string("-");
    std::ostringstream os;
    os << std::fixed << std::setprecision(2) << *v;
    return os.str();
  };
  std::ostringstream os;
  os << std::left << std::setw(static_cast<int>(label_width)) << "" << std::right;
  os << std::setw(2 * kCol) << "FollowIR" << std::setw(2 * kCol + 2) << "InfoSearch (p-MRR)"
     << std::setw(2 * kCol + 2) << "MAIR (nDCG@10)" << '\n';
  os << std::left << std::setw(static_cast<int>(label_width)) << "Training data" << std::right;
  for (const char* h : {"p-MRR", "Score", "Length", "Keyword", "IFEval", "InstructIR"})
    os << std::setw(kCol) << h << (std::string_view(h) == "Score" || std::string_view(h) == "Keyword" ? "  " : "");
  os << '\n';
  for (const auto& r : report.rows) {
    os << std::left << std::setw(static_cast<int>(label_width)) << r.label << std::right;
    os << std::setw(kCol) << cell(r.followir_pmrr) << std::setw(kCol) << cell(r.followir_score) << "  ";
    os << std::setw(kCol) << cell(r.infosearch_length) << std::setw(kCol) << cell(r.infosearch_keyword) << "  ";
    os << std::setw(kCol) << cell(r.mair_ifeval) << std::setw(kCol) << cell(r.mair_instructir) << '\n';
  }
  return os.str();
}

}  // namespace dualview::metrics
