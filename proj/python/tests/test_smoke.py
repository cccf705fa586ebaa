import base64
import json
import math

import pytest

import rad


def test_taxonomy():
    assert len(rad.labels()) == 16
    assert rad.parse_meta_action("Change lane to the left.") == "change_lane_left"
    assert rad.semantic_similarity("turn_left", "shift_slightly_left") == 0.5
    assert rad.semantic_similarity("stop", "reverse") == 0.0
    assert rad.group("go_straight_slowly") == "Deceleration"
    with pytest.raises(rad.RadError) as err:
        rad.parse_meta_action("accelerate hard")
    assert err.value.code == "NoMatch"


def test_metrics():
    assert abs(rad.overall_score(0.4096, 0.1907, 0.3813, 0.5870) - 0.3956) < 5e-5
    report = rad.evaluate([("stop", "stop"), ("turn_left", "change_lane_left"), ("reverse", None)])
    assert report["n_total"] == 3
    assert report["n_parse_failures"] == 1
    assert report["partial_match_score"] == 0.5
    assert report["K"] == 16


def test_store_roundtrip(tmp_path):
    store = rad.EmbeddingStore(2, 2)
    store.put("a", [1.0, 0.0], [0.0, 1.0])
    store.put("b", [0.0, 1.0], [1.0, 0.0])
    path = str(tmp_path / "db.radstore")
    store.persist(path)
    back = rad.EmbeddingStore.open(path)
    assert len(back) == 2 and "a" in back
    hits = back.top_k([1.0, 0.0], [0.0, 1.0], omega=0.5, k=2)
    assert hits[0]["scene_id"] == "a"
    assert math.isclose(hits[0]["sim_overall"], 1.0)
    (tmp_path / "bad.radstore").write_bytes(b"RADSTORE")
    with pytest.raises(rad.RadError) as err:
        rad.EmbeddingStore.open(str(tmp_path / "bad.radstore"))
    assert err.value.code == "CorruptStore"


def test_wire_format():
    body = rad.embed_request_json(b"\x01\x02\x03", "bev")
    assert json.loads(body) == {"image": base64.b64encode(b"\x01\x02\x03").decode(), "kind": "bev"}
    assert rad.parse_embed_request(body) == (b"\x01\x02\x03", "bev")
    vec = rad.mock_embedding(b"img", "front_view", 8)
    assert len(vec) == 8
    assert rad.parse_embed_response(rad.embed_response_json(vec)) == vec
    chat = json.dumps(
        {
            "system": "s",
            "messages": [
                {"type": "text", "text": "hi"},
                {"type": "image", "image": base64.b64encode(b"x" * 11).decode()},
                {"type": "image", "image": base64.b64encode(b"y" * 3).decode()},
            ],
            "temperature": 0,
            "max_tokens": 8,
            "echo": True,
        }
    )
    parsed = rad.parse_chat_request(chat)
    assert parsed["messages"][0] == ("text", "hi")
    assert parsed["echo"] is True
    assert rad.echo_reply(chat) == "image_bytes=11,3"
    assert rad.parse_chat_response(rad.chat_response_json("Stop.")) == "Stop."


def test_loss_and_labeling():
    line = json.dumps(
        {"lambda1": 1, "lambda2": 0, "lambda3": 0, "y": [1, 0], "p": [0.5, 0.5],
         "z": [0, 0, 0], "z_star": [0, 0, 0], "x": 0, "x_star": 0}
    )
    assert abs(rad.loss_from_jsonl(line) - math.log(2)) < 1e-9
    straight = [(0.5 * i, 5.0 * i, 0.0, 0.0, 10.0) for i in range(7)]
    assert rad.extract_meta_action(straight) == "go_straight_constantly"


def test_cli_entry():
    status, out, err = rad.run_cli(["frobnicate"])
    assert status == 2
    assert "UsageError" in err
    status, out, _ = rad.run_cli(["contract-test", "--mock", "--calls", "5"])
    assert status == 0
