#include <cmath>
#include <sstream>

#include "../support/oracles.hpp"
#include "doctest.h"
#include "dualview/metrics.hpp"
#include "helpers.hpp"

using namespace dualview;
using namespace dualview::metrics;

namespace {

RunFile run_of(const std::string& text) {
  std::istringstream in(text);
  return parse_run(in, "inline");
}

Qrels qrels_of(const std::string& text) {
  std::istringstream in(text);
  return parse_qrels(in, "inline");
}

// Ranking d1..dn with strictly decreasing scores.
RunFile ordered_run(const std::string& qid, std::size_t n) {
  RunFile run;
  for (std::size_t i = 0; i < n; ++i)
    run.queries[qid].push_back({"d" + std::to_string(i + 1), static_cast<double>(n - i)});
  return run;
}

Ranking ranking_with_target_at(std::size_t rank, std::size_t n) {
  Ranking r;
  for (std::size_t i = 1; i <= n; ++i)
    r.push_back({i == rank ? "target" : "o" + std::to_string(i), static_cast<double>(n - i)});
  return r;
}

}  // namespace

TEST_SUITE("metrics") {
  TEST_CASE("canonical run line parses") {
    auto run = run_of("q1 Q0 docA 1 12.5 mytag\n");
    REQUIRE(run.queries.at("q1").size() == 1);
    CHECK(run.queries.at("q1")[0] == RankedDoc{"docA", 12.5});
  }

  TEST_CASE("equal scores order by ascending doc id") {
    auto run = run_of("q Q0 zeta 1 1.0 t\nq Q0 alpha 2 1.0 t\nq Q0 mid 3 2.0 t\n");
    const auto& r = run.queries.at("q");
    CHECK(r[0].doc_id == "mid");
    CHECK(r[1].doc_id == "alpha");
    CHECK(r[2].doc_id == "zeta");
    CHECK(rank_of(run, "q", "alpha") == 2u);
  }

  TEST_CASE("malformed runs are rejected") {
    CHECK_THROWS(run_of("q Q0 d 1 1.0 t\nq Q0 d 2 0.5 t\n"));  // duplicate doc
    CHECK_THROWS(run_of("q Q0 d 1 1.0\n"));                     // five columns
    CHECK_THROWS(run_of("q Q0 d 1 abc t\n"));                   // bad score
  }

  TEST_CASE("qrels parse graded relevance") {
    auto q = qrels_of("q1 0 a 2\nq1 0 b 0\nq2 0 c 1\n");
    CHECK(q.relevance("q1", "a") == 2);
    CHECK(q.relevance("q1", "zz") == 0);
    CHECK(q.relevant_count("q1") == 1);
    CHECK_THROWS(qrels_of("q1 0 a 1\nq1 0 a 2\n"));
    CHECK_THROWS(qrels_of("q1 0 a -1\n"));
  }

  TEST_CASE("run and qrels files round-trip") {
    testing::TempDir dir;
    auto run = run_of("q Q0 a 1 0.30000000000000004 t\nq Q0 b 2 -1e-300 t\nr Q0 c 1 7 t\n");
    write_run(dir / "r.run", run, "tag");
    auto back = read_run(dir / "r.run");
    CHECK(back.queries == run.queries);
    auto qrels = qrels_of("q 0 a 1\nr 0 c 3\n");
    write_qrels(dir / "q.qrels", qrels);
    CHECK(read_qrels(dir / "q.qrels").judgments == qrels.judgments);
  }

  TEST_CASE("rank_of") {
    auto run = ordered_run("q", 3);
    CHECK(rank_of(run, "q", "d1") == 1u);
    CHECK_FALSE(rank_of(run, "q", "missing").has_value());
    CHECK_THROWS_AS(rank_of(run, "other", "d1"), std::out_of_range);
  }

  TEST_CASE("p-MRR hand cases") {
    CHECK(100.0 * p_mrr_query(2, 1) == 100.0);
    CHECK(100.0 * p_mrr_query(1, 2) == -100.0);
    CHECK(p_mrr_query(5, 5) == 0.0);
    CHECK(p_mrr_query(4, 1) == 3.0);
    CHECK(p_mrr_query(1, 4) == -3.0);

    std::vector<PairedEntry> up = {{"q", ranking_with_target_at(2, 5), ranking_with_target_at(1, 5), "target"}};
    CHECK(p_mrr(up) == 100.0);
    std::vector<PairedEntry> down = {{"q", ranking_with_target_at(1, 5), ranking_with_target_at(2, 5), "target"}};
    CHECK(p_mrr(down) == -100.0);
  }

  TEST_CASE("identical paired runs give zero") {
    std::vector<PairedEntry> paired;
    for (std::size_t i = 1; i <= 6; ++i)
      paired.push_back({"q" + std::to_string(i), ranking_with_target_at(i, 8), ranking_with_target_at(i, 8), "target"});
    CHECK(p_mrr(paired) == 0.0);
  }

  TEST_CASE("an unretrieved target takes rank cutoff plus one") {
    std::vector<PairedEntry> paired = {{"q", ranking_with_target_at(9, 3), ranking_with_target_at(1, 3), "target"}};
    // og rank = 10 + 1 with cutoff 10
    CHECK(p_mrr(paired, 10) == doctest::Approx(100.0 * (11.0 - 1.0)));
    std::vector<PairedEntry> past = {{"q", ranking_with_target_at(5, 6), ranking_with_target_at(1, 6), "target"}};
    CHECK(p_mrr(past, 3) == doctest::Approx(100.0 * 3.0));
  }

  TEST_CASE("p-MRR is antisymmetric per query") {
    Rng rng(17);
    for (int i = 0; i < 1000; ++i) {
      std::size_t a = 1 + rng.below(1000), b = 1 + rng.below(1000);
      CHECK(p_mrr_query(a, b) == -p_mrr_query(b, a));
    }
  }

  TEST_CASE("nDCG hand cases") {
    auto run = ordered_run("q", 10);
    CHECK(ndcg_at_k(run, qrels_of("q 0 d1 1\nq 0 d2 1\n"), "q", 10) == doctest::Approx(1.0));
    double expected = (1.0 + 1.0 / std::log2(4.0)) / (1.0 + 1.0 / std::log2(3.0));
    CHECK(ndcg_at_k(run, qrels_of("q 0 d1 1\nq 0 d3 1\n"), "q", 10) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(expected == doctest::Approx(0.9197).epsilon(1e-4));
    CHECK(ndcg_at_k(run, qrels_of("q 0 d9 1\n"), "q", 5) == 0.0);
  }

  TEST_CASE("exponential gain differs for graded judgments") {
    auto run = ordered_run("q", 3);
    auto qrels = qrels_of("q 0 d1 1\nq 0 d2 3\n");
    CHECK(ndcg_at_k(run, qrels, "q", 3, Gain::Exponential) != ndcg_at_k(run, qrels, "q", 3, Gain::Linear));
  }

  TEST_CASE("MAP and MRR hand cases") {
    auto run = ordered_run("q", 5);
    auto first = qrels_of("q 0 d1 1\n");
    CHECK(map_at_k(run, first, "q", 10) == 1.0);
    CHECK(mrr(run, first, "q") == 1.0);
    CHECK(map_at_k(run, qrels_of("q 0 d2 1\nq 0 d4 1\n"), "q", 10) == doctest::Approx(0.5));
    auto none = qrels_of("q 0 zz 1\n");
    CHECK(map_at_k(run, none, "q", 10) == 0.0);
    CHECK(mrr(run, none, "q") == 0.0);
  }

  TEST_CASE("metrics agree with the brute-force oracle") {
    Rng rng(23);
    for (int i = 0; i < 100; ++i) {
      auto inst = oracle::random_instance(rng);
      for (std::size_t k : {1u, 3u, 5u, 10u, 20u}) {
        CHECK(std::abs(ndcg_at_k(inst.run, inst.qrels, inst.qid, k) - oracle::ndcg(inst.run, inst.qrels, inst.qid, k)) <=
              1e-9);
        CHECK(std::abs(map_at_k(inst.run, inst.qrels, inst.qid, k) -
                       oracle::average_precision(inst.run, inst.qrels, inst.qid, k)) <= 1e-9);
      }
      CHECK(std::abs(mrr(inst.run, inst.qrels, inst.qid) - oracle::reciprocal_rank(inst.run, inst.qrels, inst.qid)) <=
            1e-9);
    }
  }

  TEST_CASE("FollowIR Score") {
    std::vector<double> v = {20, 20, 24};
    CHECK(followir_score(v) == doctest::Approx(64.0 / 3.0));
    std::vector<double> w = {24, 20, 20};
    CHECK(followir_score(w) == followir_score(v));
    CHECK_THROWS(followir_score(std::vector<double>{1, 2}));
  }

  TEST_CASE("subset metric names") {
    CHECK(parse_subset_metric("ndcg@10").name() == "ndcg@10");
    CHECK(parse_subset_metric("map@1000").kind == MetricKind::Map);
    CHECK(parse_subset_metric("mrr").kind == MetricKind::Mrr);
    CHECK_THROWS(parse_subset_metric("precision@3"));
  }

  TEST_CASE("mean_metric averages over judged queries") {
    auto run = run_of("a Q0 x 1 2 t\na Q0 y 2 1 t\nb Q0 x 1 2 t\nc Q0 x 1 1 t\n");
    auto qrels = qrels_of("a 0 y 1\nb 0 x 1\n");
    CHECK(mean_metric(run, qrels, parse_subset_metric("mrr")) == doctest::Approx(0.75));
  }

  TEST_CASE("eval results round-trip and feed the report") {
    EvalResult r;
    r.label = "Ins-DV";
    r.p_mrr["followir"] = 7.57;
    r.subsets["followir/a"] = {parse_subset_metric("map@1000"), 0.2, 3};
    r.subsets["followir/b"] = {parse_subset_metric("map@1000"), 0.2, 3};
    r.subsets["followir/c"] = {parse_subset_metric("ndcg@5"), 0.24, 3};
    r.p_mrr["infosearch-length"] = -1.5;
    REQUIRE(r.followir_score().has_value());
    CHECK(*r.followir_score() == doctest::Approx(64.0 / 3.0 / 100.0));

    auto back = eval_result_from_json(to_json(r));
    CHECK(back.label == r.label);
    CHECK(back.p_mrr == r.p_mrr);

    auto report = build_report({r});
    REQUIRE(report.rows.size() == 1);
    CHECK(report.rows[0].followir_pmrr == 7.57);
    CHECK(*report.rows[0].followir_score == doctest::Approx(64.0 / 3.0));
    CHECK(report.rows[0].infosearch_length == -1.5);
    CHECK_FALSE(report.rows[0].mair_ifeval.has_value());
  }

  TEST_CASE("report table has the benchmark header layout") {
    EvalResult r;
    r.label = "Ins-orig";
    r.p_mrr["followir"] = 5.21;
    auto table = render_table(build_report({r}));
    std::istringstream lines(table);
    std::string top, second, row;
    std::getline(lines, top);
    std::getline(lines, second);
    std::getline(lines, row);
    CHECK(top.find("FollowIR") != std::string::npos);
    CHECK(top.find("InfoSearch (p-MRR)") != std::string::npos);
    CHECK(top.find("MAIR (nDCG@10)") != std::string::npos);
    for (const char* col : {"p-MRR", "Score", "Length", "Keyword", "IFEval", "InstructIR"})
      CHECK(second.find(col) != std::string::npos);
    CHECK(row.rfind("Ins-orig", 0) == 0);
    CHECK(row.find("5.21") != std::string::npos);
  }

  TEST_CASE("paired manifest resolves runs relative to itself") {
    testing::TempDir dir;
    testing::spit(dir / "runs/og.run", "q Q0 t 2 1 x\nq Q0 o 1 2 x\n");
    testing::spit(dir / "runs/new.run", "q Q0 t 1 2 x\nq Q0 o 2 1 x\n");
    testing::spit(dir / "paired.jsonl",
                  R"({"qid":"q","run_og":"runs/og.run","run_new":"runs/new.run","target_doc_id":"t"})" "\n");
    auto paired = load_paired_manifest(dir / "paired.jsonl");
    REQUIRE(paired.size() == 1);
    CHECK(p_mrr(paired) == 100.0);
  }
}
