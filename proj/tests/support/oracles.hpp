#pragma once

// Reference implementations written independently of the library, for
// cross-checking it in tests.

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "dualview/common.hpp"
#include "dualview/metrics.hpp"
#include "dualview/mixer.hpp"
#include "dualview/toytrain.hpp"

namespace oracle {

// Ranked doc ids for a query: sort by (score desc, doc_id asc) using a
// plain comparison sort over a copy.
inline std::vector<std::string> ranked_ids(const dualview::metrics::RunFile& run, const std::string& qid) {
  auto it = run.queries.find(qid);
  if (it == run.queries.end()) return {};
  std::vector<std::pair<double, std::string>> rows;
  for (const auto& d : it->second) rows.push_back({d.score, d.doc_id});
  // Selection sort: quadratic on purpose, no shared code with the library.
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::size_t best = i;
    for (std::size_t j = i + 1; j < rows.size(); ++j) {
      bool better = rows[j].first > rows[best].first ||
                    (rows[j].first == rows[best].first && rows[j].second < rows[best].second);
      if (better) best = j;
    }
    std::swap(rows[i], rows[best]);
  }
  std::vector<std::string> ids;
  for (auto& r : rows) ids.push_back(r.second);
  return ids;
}

inline int rel(const dualview::metrics::Qrels& qrels, const std::string& qid, const std::string& doc) {
  auto q = qrels.judgments.find(qid);
  if (q == qrels.judgments.end()) return 0;
  auto d = q->second.find(doc);
  return d == q->second.end() ? 0 : d->second;
}

// nDCG@k with linear gain: DCG over the top k divided by DCG of the ideal
// ordering of all judged relevance values.
inline double ndcg(const dualview::metrics::RunFile& run, const dualview::metrics::Qrels& qrels,
                   const std::string& qid, std::size_t k) {
  auto ids = ranked_ids(run, qid);
  double dcg = 0.0;
  for (std::size_t i = 0; i < ids.size() && i < k; ++i) dcg += rel(qrels, qid, ids[i]) / std::log2(i + 2.0);
  std::vector<int> gains;
  auto q = qrels.judgments.find(qid);
  if (q != qrels.judgments.end())
    for (const auto& [doc, r] : q->second)
      if (r > 0) gains.push_back(r);
  std::sort(gains.rbegin(), gains.rend());
  double idcg = 0.0;
  for (std::size_t i = 0; i < gains.size() && i < k; ++i) idcg += gains[i] / std::log2(i + 2.0);
  return idcg == 0.0 ? 0.0 : dcg / idcg;
}

// Average precision over the top k, normalized by min(k, #relevant).
inline double average_precision(const dualview::metrics::RunFile& run, const dualview::metrics::Qrels& qrels,
                                const std::string& qid, std::size_t k) {
  auto ids = ranked_ids(run, qid);
  std::size_t total_rel = 0;
  auto q = qrels.judgments.find(qid);
  if (q != qrels.judgments.end())
    for (const auto& [doc, r] : q->second) total_rel += r > 0;
  if (total_rel == 0) return 0.0;
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < ids.size() && i < k; ++i) {
    if (rel(qrels, qid, ids[i]) > 0) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(i + 1);
    }
  }
  return sum / static_cast<double>(std::min(k, total_rel));
}

inline double reciprocal_rank(const dualview::metrics::RunFile& run, const dualview::metrics::Qrels& qrels,
                              const std::string& qid) {
  auto ids = ranked_ids(run, qid);
  for (std::size_t i = 0; i < ids.size(); ++i)
    if (rel(qrels, qid, ids[i]) > 0) return 1.0 / static_cast<double>(i + 1);
  return 0.0;
}

// Random run/qrels instance: up to 20 docs, up to 5 relevant, scores drawn
// from a few levels so ties are common.
struct MetricInstance {
  dualview::metrics::RunFile run;
  dualview::metrics::Qrels qrels;
  std::string qid = "q";
};

inline MetricInstance random_instance(dualview::Rng& rng) {
  MetricInstance inst;
  std::size_t n = 1 + rng.below(20);
  std::size_t n_rel = rng.below(std::min<std::size_t>(n, 5) + 1);
  dualview::metrics::Ranking ranking;
  for (std::size_t i = 0; i < n; ++i) {
    double score = static_cast<double>(rng.below(6)) * 0.5;
    ranking.push_back({"d" + std::to_string(i), score});
  }
  dualview::metrics::sort_ranking(ranking);
  inst.run.queries[inst.qid] = ranking;
  auto rel_idx = rng.sample_indices(n, n_rel);
  for (auto i : rel_idx) inst.qrels.judgments[inst.qid]["d" + std::to_string(i)] = 1 + static_cast<int>(rng.below(3));
  // Some relevant documents are never retrieved.
  if (rng.below(2) == 0) inst.qrels.judgments[inst.qid]["unretrieved"] = 1;
  return inst;
}

// Central finite-difference derivative of batch_loss with respect to one
// table entry.
inline double fd_derivative(const dualview::mixer::TrainingBatch& batch, dualview::toytrain::EncoderParams& params,
                            std::size_t index, double h) {
  double saved = params.table[index];
  params.table[index] = saved + h;
  double up = dualview::toytrain::batch_loss(batch, params);
  params.table[index] = saved - h;
  double down = dualview::toytrain::batch_loss(batch, params);
  params.table[index] = saved;
  return (up - down) / (2.0 * h);
}

}  // namespace oracle
