"""Python access to the meta-action engine core.

Errors from the core raise ``RadError``; ``err.code`` names the error kind
(for example ``"NoMatch"`` or ``"CorruptStore"``).
"""

import json

from . import _rad
from ._rad import (
    EmbeddingStore,
    blended_similarity,
    canonical_phrase,
    chat_response_json,
    contract_checks,
    cosine,
    echo_reply,
    embed_request_json,
    embed_response_json,
    extract_meta_action,
    group,
    labels,
    loss_from_jsonl,
    mock_embedding,
    overall_score,
    parse_chat_request,
    parse_chat_response,
    parse_embed_request,
    parse_embed_response,
    parse_meta_action,
    run_cli,
    semantic_similarity,
)

RadError = _rad.RadError
RadError.code = property(lambda self: self.args[0] if self.args else None)


def evaluate(pairs, weights=None, k=16):
    """Score (gt_label, pred_label or None) pairs; returns the report dict."""
    return json.loads(_rad.evaluate_json(list(pairs), weights, k))


__all__ = [
    "EmbeddingStore",
    "RadError",
    "blended_similarity",
    "canonical_phrase",
    "chat_response_json",
    "contract_checks",
    "cosine",
    "echo_reply",
    "embed_request_json",
    "embed_response_json",
    "evaluate",
    "extract_meta_action",
    "group",
    "labels",
    "loss_from_jsonl",
    "mock_embedding",
    "overall_score",
    "parse_chat_request",
    "parse_chat_response",
    "parse_embed_request",
    "parse_embed_response",
    "parse_meta_action",
    "run_cli",
    "semantic_similarity",
]
