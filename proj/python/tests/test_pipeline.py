import base64
import json
import pathlib
import struct

import jsonschema
import numpy as np
import pytest

import amodal

SCHEMAS = pathlib.Path(__file__).resolve().parents[2] / "schemas"


@pytest.fixture(scope="module")
def demo(tmp_path_factory):
    d = tmp_path_factory.mktemp("demo")
    amodal.make_demo(d)
    return d


def test_complete_clock_tower(demo):
    r = amodal.complete(demo / "clock_tower.png", "clock tower", demo / "clock_tower.config.json")
    assert r["rgba"].shape == (144, 144, 4)
    assert r["placement"].offset_x == 48
    trace = json.loads(r["trace_json"])
    assert trace["inpaint_calls"] == 1
    assert trace["spatial"]["directions"] == ["left", "bottom"]
    keep = ~r["inpaint_mask"]
    np.testing.assert_array_equal(r["completed"][keep], r["masked_input"][keep])
    again = amodal.complete(demo / "clock_tower.png", "clock tower", demo / "clock_tower.config.json")
    np.testing.assert_array_equal(again["rgba"], r["rgba"])


def test_unknown_query_fails_with_stage(demo):
    with pytest.raises(amodal.PipelineError, match=r"\[occlusion\]"):
        amodal.complete(demo / "clock_tower.png", "weather vane", demo / "clock_tower.config.json")


def test_degenerate_scene_passes_through(demo):
    b = demo / "boundary"
    r = amodal.complete(b / "centered.png", "red box", b / "centered.config.json")
    np.testing.assert_array_equal(r["completed"], r["masked_input"])
    np.testing.assert_array_equal(r["alpha"], r["visible_mask"])


def test_wire_messages_match_schemas():
    img = np.full((20, 12, 3), 128, np.uint8)
    mask = np.zeros((20, 12), bool)
    mask[4:9, 2:7] = True
    msgs = amodal.wire_examples(img, mask, "a red box", "box")
    for name, text in msgs.items():
        schema = json.loads((SCHEMAS / f"{name}.schema.json").read_text())
        jsonschema.validate(json.loads(text), schema)

    att = json.loads(msgs["inpaint_response"])["attention"]
    assert (att["latent_w"], att["latent_h"]) == (2, 3)
    cross = base64.b64decode(att["cross_f32_b64"])
    assert len(cross) == 4 * 2 * 3
    values = struct.unpack("<6f", cross)
    assert max(values) == pytest.approx(1.0)
    metrics = json.loads(msgs["metrics_response"])
    assert metrics["lpips"] == 0.0
    assert metrics["feature_sim"] == 1.0
