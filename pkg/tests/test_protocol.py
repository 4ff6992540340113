import json

import numpy as np
import pytest

from paraspace.errors import ProtocolError
from paraspace.protocol import (
    canonical_params_key,
    encode_line,
    parse_descriptor,
    parse_line,
)


def test_encode_parse_round_trip():
    message = {"type": "run", "id": 7, "params": {"a": 1.0, "f": 1.0, "phi": 0.0}}
    line = encode_line(message)
    assert line.endswith("\n")
    assert parse_line(line) == message


def test_wire_example_is_bit_exact():
    line = encode_line({"type": "run", "id": 7,
                        "params": {"a": 1.0, "f": 1.0, "phi": 0.0}})
    assert line == '{"type":"run","id":7,"params":{"a":1.0,"f":1.0,"phi":0.0}}\n'


@pytest.mark.parametrize("bad", [
    "",
    "not json",
    "[1, 2, 3]",
    "123",
    '"run"',
    '{"no": "type"}',
    '{"type": "launch"}',
    '{"type": "run", "id": "seven"}',
    b"\xff\xfe garbage bytes",
])
def test_malformed_lines_raise_protocol_error(bad):
    with pytest.raises(ProtocolError):
        parse_line(bad)


def test_fuzz_lines_never_crash():
    rng = np.random.default_rng(1234)
    for _ in range(2000):
        blob = bytes(rng.integers(0, 256, size=rng.integers(0, 80)))
        blob = blob.replace(b"\n", b" ")
        try:
            message = parse_line(blob)
        except ProtocolError:
            continue
        # astronomically unlikely: random noise forming a valid message
        assert isinstance(message, dict) and message.get("type")


def descriptor_doc(**overrides):
    doc = {
        "type": "capabilities",
        "id": 1,
        "name": "sine",
        "parameters": [
            {"name": "phi", "default": 0.0, "description": "phase shift"},
            {"name": "f", "default": 1.0},
            {"name": "a", "default": 1.0},
        ],
        "capabilities": ["compute_solution", "display_plot", "compute_feature"],
        "plots": ["wave"],
        "features": [{"name": "v0"}, {"name": "v_half"}],
        "responses": [{"name": "solution", "arity": "vector"}],
    }
    doc.update(overrides)
    return doc


def test_parse_descriptor():
    descriptor = parse_descriptor(descriptor_doc())
    assert descriptor.name == "sine"
    assert descriptor.defaults() == {"phi": 0.0, "f": 1.0, "a": 1.0}
    assert descriptor.feature_names() == ("v0", "v_half")
    assert "file_io" not in descriptor.capabilities


def test_descriptor_requires_capabilities():
    with pytest.raises(ProtocolError):
        parse_descriptor(descriptor_doc(capabilities=[]))
    with pytest.raises(ProtocolError):
        parse_descriptor({k: v for k, v in descriptor_doc().items()
                          if k != "capabilities"})
    with pytest.raises(ProtocolError):
        parse_descriptor(descriptor_doc(capabilities=["teleport"]))


def test_descriptor_rejects_duplicates_and_bad_defaults():
    doc = descriptor_doc()
    doc["features"] = [{"name": "v0"}, {"name": "v0"}]
    with pytest.raises(ProtocolError):
        parse_descriptor(doc)
    doc = descriptor_doc()
    doc["parameters"][0]["default"] = float("nan")
    with pytest.raises(ProtocolError):
        parse_descriptor(doc)


def test_fill_defaults():
    descriptor = parse_descriptor(descriptor_doc())
    assert descriptor.fill_defaults({"a": 2}) == {"phi": 0.0, "f": 1.0, "a": 2.0}
    with pytest.raises(ProtocolError):
        descriptor.fill_defaults({"zeta": 1.0})


def test_canonical_params_key_normalizes():
    key1 = canonical_params_key("sine", {"a": 1, "f": 2.0})
    key2 = canonical_params_key("sine", {"f": 2, "a": 1.0})
    assert key1 == key2
    assert canonical_params_key("sine", {"a": 1.5}) != \
        canonical_params_key("sine", {"a": 1.25})
