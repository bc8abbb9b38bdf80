#include <algorithm>
#include <map>
#include <set>

#include "doctest.h"
#include "dualview/mixer.hpp"
#include "dualview/synth.hpp"
#include "helpers.hpp"

using namespace dualview;
using namespace dualview::mixer;
using testing::make_triplet;

namespace {

struct Pools {
  std::vector<InstructTriplet> instruct;
  std::vector<InstructTriplet> noninstruct;
  std::vector<DualViewRecord> dv;
};

Pools make_pools(std::size_t n_instruct, std::size_t n_noninstruct, std::size_t n_dv) {
  Pools p;
  for (std::size_t i = 0; i < n_instruct; ++i) p.instruct.push_back(make_triplet("i" + std::to_string(i), 3, 4));
  for (std::size_t i = 0; i < n_noninstruct; ++i)
    p.noninstruct.push_back(make_triplet("n" + std::to_string(i), 0, 4, false));
  for (std::size_t i = 0; i < n_dv; ++i)
    p.dv.push_back(synth::make_dual_view(p.instruct[i], 1, "facet one of i" + std::to_string(i)));
  return p;
}

std::map<Origin, std::size_t> count_origins(const std::vector<MixEntry>& mix) {
  std::map<Origin, std::size_t> counts;
  for (const auto& e : mix) ++counts[e.origin];
  return counts;
}

TrainingExample single(const std::string& id) {
  TrainingExample e;
  e.source_id = id;
  e.input_text = id;
  e.positive = {id + "-p", "p"};
  e.negatives = {{{id + "-n", "n"}, NegativeRole::HardNegative}};
  return e;
}

std::vector<TrainingExample> pairs_and_singles(std::size_t pairs, std::size_t singles) {
  std::vector<TrainingExample> out;
  for (std::size_t i = 0; i < pairs; ++i) {
    auto a = single("pair" + std::to_string(i));
    auto b = single("pair" + std::to_string(i) + ":dv");
    a.view_group = b.view_group = "pair" + std::to_string(i);
    out.push_back(a);
    out.push_back(b);
  }
  for (std::size_t i = 0; i < singles; ++i) out.push_back(single("s" + std::to_string(i)));
  return out;
}

void check_no_split_pairs(const std::vector<TrainingBatch>& batches) {
  std::map<std::string, std::set<std::size_t>> where;
  for (const auto& b : batches)
    for (const auto& e : b.examples)
      if (e.view_group) where[*e.view_group].insert(b.batch_id);
  for (const auto& [group, ids] : where) CHECK_MESSAGE(ids.size() == 1, group);
}

}  // namespace

TEST_SUITE("mixer") {
  TEST_CASE("InsDV of 100 is 50 originals plus 50 dual-view examples") {
    auto pools = make_pools(200, 0, 40);
    auto mix = build_mix(MixKind::InsDV, pools.instruct, pools.noninstruct, pools.dv, 100, 3);
    CHECK(mix.size() == 100);
    auto c = count_origins(mix);
    CHECK(c[Origin::Instruct] == 50);
    CHECK(c[Origin::DualViewOriginal] + c[Origin::DualViewReversed] == 50);
    CHECK(c[Origin::DualViewOriginal] == c[Origin::DualViewReversed]);
  }

  TEST_CASE("AllOrig of 100 is 50 instruct plus 50 non-instruct") {
    auto pools = make_pools(200, 200, 0);
    auto c = count_origins(build_mix(MixKind::AllOrig, pools.instruct, pools.noninstruct, pools.dv, 100, 3));
    CHECK(c[Origin::Instruct] == 50);
    CHECK(c[Origin::NonInstruct] == 50);
  }

  TEST_CASE("InsOrig and AllDV compositions") {
    auto pools = make_pools(200, 200, 60);
    auto ins = count_origins(build_mix(MixKind::InsOrig, pools.instruct, pools.noninstruct, pools.dv, 100, 3));
    CHECK(ins[Origin::Instruct] == 100);
    CHECK(ins.size() == 1);
    auto all = count_origins(build_mix(MixKind::AllDV, pools.instruct, pools.noninstruct, pools.dv, 100, 3));
    CHECK(all[Origin::Instruct] == 50);
    CHECK(all[Origin::DualViewOriginal] + all[Origin::DualViewReversed] == 50);
  }

  TEST_CASE("odd half of a dual-view target leaves one slot to instruct") {
    auto c = composition(MixKind::InsDV, 22);
    CHECK(c.dual_view_pairs == 5);
    CHECK(c.instruct == 12);
    CHECK(c.total() == 22);
  }

  TEST_CASE("size errors") {
    auto pools = make_pools(20, 5, 4);
    CHECK_THROWS_AS(composition(MixKind::InsDV, 7), std::invalid_argument);
    CHECK_THROWS_AS(composition(MixKind::AllOrig, 7), std::invalid_argument);
    CHECK_NOTHROW(composition(MixKind::InsOrig, 7));
    CHECK_THROWS_AS(build_mix(MixKind::InsOrig, pools.instruct, pools.noninstruct, pools.dv, 21, 0),
                    std::invalid_argument);
    CHECK_THROWS_AS(build_mix(MixKind::AllOrig, pools.instruct, pools.noninstruct, pools.dv, 20, 0),
                    std::invalid_argument);
    CHECK_THROWS_AS(build_mix(MixKind::InsDV, pools.instruct, pools.noninstruct, pools.dv, 20, 0),
                    std::invalid_argument);
  }

  TEST_CASE("same seed gives the same selection") {
    auto pools = make_pools(100, 100, 30);
    for (auto kind : kAllMixKinds) {
      auto a = build_mix(kind, pools.instruct, pools.noninstruct, pools.dv, 40, 9);
      auto b = build_mix(kind, pools.instruct, pools.noninstruct, pools.dv, 40, 9);
      REQUIRE(a.size() == b.size());
      for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].source == b[i].source);
    }
  }

  TEST_CASE("selection is without replacement and a drawn dual view is not also a plain sample") {
    auto pools = make_pools(60, 0, 30);
    auto mix = build_mix(MixKind::InsDV, pools.instruct, pools.noninstruct, pools.dv, 60, 4);
    std::set<std::string> ids;
    for (const auto& e : mix) CHECK(ids.insert(e.source.record_id).second);
    for (const auto& e : mix)
      if (e.origin == Origin::Instruct) CHECK(ids.count(e.source.record_id + ":dv") == 0);
  }

  TEST_CASE("dual-view pairs share a view group") {
    auto pools = make_pools(40, 0, 20);
    auto mix = build_mix(MixKind::InsDV, pools.instruct, pools.noninstruct, pools.dv, 20, 4);
    std::map<std::string, int> groups;
    for (const auto& e : mix) {
      if (e.origin == Origin::Instruct) CHECK_FALSE(e.view_group.has_value());
      else ++groups[e.view_group.value()];
    }
    for (const auto& [g, n] : groups) CHECK(n == 2);
  }

  TEST_CASE("mix kind names round-trip") {
    for (auto kind : kAllMixKinds) CHECK(parse_mix_kind(to_string(kind)) == kind);
    CHECK(display_name(MixKind::AllDV) == "All-DV");
    CHECK_THROWS(parse_mix_kind("bogus"));
  }

  TEST_CASE("concat_query") {
    CHECK(concat_query("q", "") == "q");
    CHECK(concat_query("what causes fog", "only coastal regions") == "what causes fog [SEP] only coastal regions");
    CHECK_THROWS_AS(concat_query("", "x"), std::invalid_argument);
    CHECK(strip_instruction(concat_query("what causes fog", "only coastal regions")) == "what causes fog");
    CHECK(strip_instruction("bare query") == "bare query");
  }

  TEST_CASE("concat_query is injective on the fixture seeds") {
    auto seeds = load_triplets(testing::fixtures_dir() / "seed_triplets.jsonl");
    auto plain = load_triplets(testing::fixtures_dir() / "noninstruct_pool.jsonl");
    std::set<std::pair<std::string, std::string>> pairs;
    std::set<std::string> texts;
    for (const auto* pool : {&seeds, &plain})
      for (const auto& t : *pool)
        if (pairs.insert({t.query, t.instruction}).second) texts.insert(concat_query(t.query, t.instruction));
    CHECK(texts.size() == pairs.size());
  }

  TEST_CASE("negative sampling") {
    NegativeSampling s;

    SUBCASE("two instruction negatives and forty hard") {
      auto negs = sample_negatives(make_triplet("a", 2, 40), s, 1);
      CHECK(negs.size() == 30);
      CHECK(std::count_if(negs.begin(), negs.end(),
                          [](const Candidate& c) { return c.role == NegativeRole::InstructionNegative; }) == 2);
    }
    SUBCASE("five instruction negatives are capped at three") {
      auto negs = sample_negatives(make_triplet("a", 5, 40), s, 1);
      CHECK(negs.size() == 30);
      CHECK(std::count_if(negs.begin(), negs.end(),
                          [](const Candidate& c) { return c.role == NegativeRole::InstructionNegative; }) == 3);
    }
    SUBCASE("a short pool is used whole and logged") {
      auto before = warning_count();
      auto negs = sample_negatives(make_triplet("a", 2, 8), s, 1);
      CHECK(negs.size() == 10);
      CHECK(warning_count() == before + 1);
    }
    SUBCASE("non-instruct sources take only hard negatives") {
      auto t = make_triplet("n", 0, 40, false);
      auto negs = sample_negatives(t, s, 1);
      CHECK(negs.size() == 30);
      for (const auto& c : negs) CHECK(c.role == NegativeRole::HardNegative);
    }
    SUBCASE("an instruct source with no instruction negative is an error") {
      CHECK_THROWS(sample_negatives(make_triplet("a", 0, 40), s, 1));
    }
    SUBCASE("no duplicates and deterministic order") {
      auto t = make_triplet("a", 3, 40);
      auto a = sample_negatives(t, s, 5);
      CHECK(a == sample_negatives(t, s, 5));
      std::set<std::string> ids;
      for (const auto& c : a) CHECK(ids.insert(c.doc.doc_id).second);
    }
  }

  TEST_CASE("ten pairs in batches of four make five batches of two pairs") {
    auto batches = assemble_batches(pairs_and_singles(10, 0), 4, 2);
    REQUIRE(batches.size() == 5);
    for (const auto& b : batches) CHECK(b.examples.size() == 4);
    check_no_split_pairs(batches);
  }

  TEST_CASE("mixed pairs and singles never split a pair") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      auto examples = pairs_and_singles(6, 8);
      auto batches = assemble_batches(examples, 4, seed);
      check_no_split_pairs(batches);
      std::size_t total = 0;
      for (const auto& b : batches) {
        CHECK(b.examples.size() <= 4);
        total += b.examples.size();
      }
      CHECK(total == examples.size());
    }
  }

  TEST_CASE("same seed gives the same batch sequence") {
    auto examples = pairs_and_singles(5, 7);
    auto a = assemble_batches(examples, 4, 12);
    auto b = assemble_batches(examples, 4, 12);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].examples == b[i].examples);
  }

  TEST_CASE("batch size below two is rejected") {
    CHECK_THROWS(assemble_batches(pairs_and_singles(1, 1), 1, 0));
  }

  TEST_CASE("to_examples joins query and instruction and keeps groups") {
    auto pools = make_pools(10, 0, 4);
    auto mix = build_mix(MixKind::InsDV, pools.instruct, pools.noninstruct, pools.dv, 8, 1);
    auto examples = to_examples(mix, NegativeSampling{}, 1);
    REQUIRE(examples.size() == mix.size());
    for (std::size_t i = 0; i < mix.size(); ++i) {
      CHECK(examples[i].input_text == concat_query(mix[i].source.query, mix[i].source.instruction));
      CHECK(examples[i].view_group == mix[i].view_group);
      CHECK(examples[i].positive == mix[i].source.positive);
    }
  }

  TEST_CASE("examples round-trip through jsonl") {
    testing::TempDir dir;
    auto examples = pairs_and_singles(2, 2);
    write_examples(dir / "ex.jsonl", examples);
    CHECK(load_examples(dir / "ex.jsonl") == examples);
  }
}
