"""Python bindings for the dualview C++ core."""

import json as _json

from . import _core
from ._core import (
    Encoder,
    InvariantError,
    SchemaError,
    check_banned_content,
    check_distinctness,
    check_sentence_count,
    concat_query,
    followir_score,
    infonce_loss,
    instruction_blind_floor,
    map_at_k,
    mrr,
    ndcg_at_k,
    p_mrr,
    p_mrr_query,
    parse_answer,
    run_cli,
    strip_instruction,
    two_view_loss,
)


def content_hash(triplet: dict) -> str:
    return _core.content_hash(_json.dumps(triplet))


def render_prompt(triplet: dict, target_negative_index: int) -> str:
    return _core.render_prompt(_json.dumps(triplet), target_negative_index)


__all__ = [
    "Encoder",
    "InvariantError",
    "SchemaError",
    "check_banned_content",
    "check_distinctness",
    "check_sentence_count",
    "concat_query",
    "content_hash",
    "followir_score",
    "infonce_loss",
    "instruction_blind_floor",
    "map_at_k",
    "mrr",
    "ndcg_at_k",
    "p_mrr",
    "p_mrr_query",
    "parse_answer",
    "render_prompt",
    "run_cli",
    "strip_instruction",
    "two_view_loss",
]
