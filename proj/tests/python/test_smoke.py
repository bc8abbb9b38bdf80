import math
import os
import pathlib

import pytest

import dualview

SOURCE_DIR = pathlib.Path(os.environ.get("DUALVIEW_SOURCE_DIR", pathlib.Path(__file__).resolve().parents[2]))

TRIPLET = {
    "record_id": "s1",
    "query": "effects of caffeine",
    "instruction": "Focus on sleep quality in adults.",
    "positive": {"doc_id": "p", "text": "Caffeine delays sleep onset in adults."},
    "instruction_negatives": [{"doc_id": "n1", "text": "Caffeine improves short term memory."}],
    "hard_negatives": [{"doc_id": "h1", "text": "Tea contains less caffeine than coffee."}],
    "is_instruct": True,
}


def test_parse_answer_kinds():
    assert dualview.parse_answer("<answer><new_instruction>Only memory effects count.</new_instruction></answer>") == (
        "new_instruction",
        "Only memory effects count.",
    )
    assert dualview.parse_answer("<answer>None</answer>")[0] == "refused"
    assert dualview.parse_answer("no idea")[0] == "parse_error"


def test_prompt_and_hash():
    prompt = dualview.render_prompt(TRIPLET, 0)
    assert "Caffeine improves short term memory." in prompt
    h = dualview.content_hash(TRIPLET)
    assert len(h) == 16 and h == dualview.content_hash(dict(TRIPLET))
    with pytest.raises(dualview.SchemaError):
        dualview.content_hash({"id": "x"})


def test_validation_checks():
    assert dualview.check_sentence_count("One. Two.") == (2, True)
    assert dualview.check_sentence_count("One. Two. Three.")[1] is False
    jac, ok = dualview.check_distinctness("a b c", "a b c")
    assert jac == pytest.approx(1.0) and not ok
    assert dualview.check_banned_content("Pick the passage.")


def test_query_views():
    joined = dualview.concat_query("q", "inst")
    assert joined == "q [SEP] inst"
    assert dualview.strip_instruction(joined) == "q"


def test_encoder_and_losses():
    enc = dualview.Encoder(num_buckets=256, dim=8, seed=1)
    v = enc.encode("hello world")
    assert len(v) == 8
    assert math.isclose(sum(x * x for x in v), 1.0, rel_tol=1e-9)
    ranked = enc.rank("hello", [("a", "hello"), ("b", "unrelated words")])
    assert ranked[0][0] == "a"
    assert dualview.infonce_loss([0.0, 0.0], 1.0) == pytest.approx(math.log(2))
    assert dualview.two_view_loss(0.0, 0.02) == pytest.approx(2 * math.log(2))
    assert dualview.instruction_blind_floor([0.0], 0.02) == pytest.approx(2 * math.log(2))


def test_metrics():
    assert dualview.p_mrr_query(2, 1) == pytest.approx(1.0)
    assert dualview.p_mrr_query(1, 2) == pytest.approx(-1.0)
    same = {"a": 2.0, "b": 1.0}
    assert dualview.p_mrr([("q", same, same, "b")]) == pytest.approx(0.0)
    run = {"q": {"a": 2.0, "b": 1.0}}
    qrels = {"q": {"b": 1}}
    assert dualview.mrr(run, qrels, "q") == pytest.approx(0.5)
    assert dualview.map_at_k(run, qrels, "q", 10) == pytest.approx(0.5)
    assert dualview.ndcg_at_k(run, qrels, "q", 10) == pytest.approx(1 / math.log2(3))
    assert dualview.followir_score([0.2, 0.4, 0.6]) == pytest.approx(0.4)


def test_cli_mix(tmp_path):
    fixtures = SOURCE_DIR / "fixtures"
    out = tmp_path / "mix.jsonl"
    code = dualview.run_cli(
        ["mix", "--kind", "ins-orig", "--size", "8", "--instruct", str(fixtures / "seed_triplets.jsonl"),
         "--out", str(out), "--seed", "1"]
    )
    assert code == 0
    assert len(out.read_text().splitlines()) == 8
    assert dualview.run_cli(["bogus"]) == 2
