#include "doctest.h"
#include "dualview/corpus.hpp"
#include "dualview/synth.hpp"
#include "helpers.hpp"

using namespace dualview;
using testing::make_triplet;
using testing::TempDir;

namespace {

DualViewRecord sample_record(const std::string& id) {
  return synth::make_dual_view(make_triplet(id, 2, 2), 0, "only documents matching facet one of " + id);
}

}  // namespace

TEST_SUITE("corpus") {
  TEST_CASE("load_triplets on an empty file returns nothing") {
    TempDir dir;
    testing::spit(dir / "empty.jsonl", "");
    CHECK(load_triplets(dir / "empty.jsonl").empty());
  }

  TEST_CASE("load_triplets preserves order") {
    TempDir dir;
    std::vector<InstructTriplet> in = {make_triplet("c", 1, 0), make_triplet("a", 2, 1), make_triplet("b", 1, 3)};
    CHECK(write_triplets(dir / "t.jsonl", in) == 3);
    CHECK(load_triplets(dir / "t.jsonl") == in);
  }

  TEST_CASE("missing query is a schema error naming the line") {
    TempDir dir;
    testing::spit(dir / "bad.jsonl",
                  R"({"instruction":"x","positive":{"doc_id":"p","text":"t"},"instruction_negatives":[],"hard_negatives":[]})"
                  "\n");
    try {
      load_triplets(dir / "bad.jsonl");
      FAIL("expected a schema error");
    } catch (const SchemaError& e) {
      std::string what = e.what();
      CHECK(what.find("line 1") != std::string::npos);
      CHECK(what.find("query") != std::string::npos);
    }
  }

  TEST_CASE("malformed json is a schema error") {
    TempDir dir;
    testing::spit(dir / "bad.jsonl", "{not json\n");
    CHECK_THROWS_AS(load_triplets(dir / "bad.jsonl"), SchemaError);
  }

  TEST_CASE("missing record_id defaults to the content hash") {
    TempDir dir;
    auto t = make_triplet("x", 1, 0);
    auto j = to_json(t);
    j.erase("record_id");
    testing::spit(dir / "t.jsonl", j.dump() + "\n");
    auto loaded = load_triplets(dir / "t.jsonl");
    REQUIRE(loaded.size() == 1);
    CHECK(loaded[0].record_id == content_hash(t));
  }

  TEST_CASE("duplicate record ids are rejected") {
    TempDir dir;
    auto t = make_triplet("x", 1, 0);
    testing::spit(dir / "t.jsonl", to_json(t).dump() + "\n" + to_json(t).dump() + "\n");
    CHECK_THROWS_AS(load_triplets(dir / "t.jsonl"), Error);
  }

  TEST_CASE("write then load five dual-view records round-trips") {
    TempDir dir;
    std::vector<DualViewRecord> in;
    for (int i = 0; i < 5; ++i) in.push_back(sample_record("r" + std::to_string(i)));
    CHECK(write_records(dir / "dv.jsonl", in) == 5);
    CHECK(load_records(dir / "dv.jsonl") == in);
  }

  TEST_CASE("writing an empty list makes an empty file") {
    TempDir dir;
    CHECK(write_records(dir / "dv.jsonl", std::vector<DualViewRecord>{}) == 0);
    CHECK(std::filesystem::exists(dir / "dv.jsonl"));
    CHECK(std::filesystem::file_size(dir / "dv.jsonl") == 0);
  }

  TEST_CASE("an invalid record is rejected before anything is written") {
    TempDir dir;
    std::vector<DualViewRecord> in = {sample_record("ok"), sample_record("bad")};
    in[1].reversed_view.hard_negatives.push_back(in[1].reversed_view.positive);  // duplicated doc_id
    CHECK_THROWS_AS(write_records(dir / "dv.jsonl", in), InvariantError);
    CHECK_FALSE(std::filesystem::exists(dir / "dv.jsonl"));
  }

  TEST_CASE("triplet invariants") {
    auto t = make_triplet("t", 2, 1);
    CHECK(triplet_violations(t).empty());

    SUBCASE("positive repeated among negatives") {
      t.hard_negatives.push_back(t.positive);
      CHECK_FALSE(triplet_violations(t).empty());
    }
    SUBCASE("empty query") {
      t.query = "";
      CHECK_FALSE(triplet_violations(t).empty());
    }
    SUBCASE("instruct record without instruction") {
      t.instruction = "";
      CHECK_FALSE(triplet_violations(t).empty());
    }
  }

  TEST_CASE("dual-view invariants catch a positive that was not demoted") {
    auto r = sample_record("r");
    CHECK(dual_view_violations(r).empty());
    auto& negs = r.reversed_view.instruction_negatives;
    negs.erase(negs.begin());  // drop the old positive
    CHECK_FALSE(dual_view_violations(r).empty());
  }

  TEST_CASE("content_hash is deterministic and sensitive") {
    auto a = make_triplet("h", 2, 2);
    auto b = a;
    CHECK(content_hash(a) == content_hash(b));
    b.instruction[0] = 'O';
    CHECK(content_hash(a) != content_hash(b));
    CHECK(content_hash(a).size() == 16);
  }

  TEST_CASE("content_hash ignores ids") {
    auto a = make_triplet("h", 1, 1);
    auto b = a;
    b.record_id = "other";
    b.positive.doc_id = "other-pos";
    CHECK(content_hash(a) == content_hash(b));
  }

  TEST_CASE("content_hash golden value") {
    InstructTriplet t;
    t.record_id = "golden";
    t.query = "what causes fog";
    t.instruction = "only coastal regions";
    t.positive = {"p", "Advection fog forms when moist air passes over cold water."};
    t.instruction_negatives = {{"n1", "Radiation fog forms in inland valleys on calm nights."}};
    t.hard_negatives = {{"h1", "Fog horns were used by lighthouses."}};
    CHECK(content_hash(t) == "475ae06005ecc30e");
  }
}
