"""Newline-delimited JSON protocol between the workbench and compute nodes.

One JSON object per line, UTF-8, over either the stdio of a spawned worker or
a TCP connection.  One request is in flight per connection and request ids are
client-assigned integers.

Client -> node            Node -> client
  {"type":"hello","id":N}    {"type":"capabilities","id":N, ...descriptor}
  {"type":"run","id":N,
   "params":{...}}           {"type":"result","id":N,"values":{...},
                              "wall_time":S[,"artifact":"runs/..."]}
  {"type":"feature","id":N,
   "name":F,"params":{...}}  {"type":"result","id":N,"values":{F:...}}
  {"type":"show","id":N,
   "plot":P,"params":{...}}  {"type":"image","id":N,"format":"png",
                              "width":W,"height":H,"data":"<base64>"}
  any failure                {"type":"error","id":N,"message":"..."}

Anything that is not one well-formed message object per line is a protocol
error; the client reports it and closes the connection rather than guessing.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

from .errors import ProtocolError

MESSAGE_TYPES = {"hello", "capabilities", "run", "feature", "show",
                 "result", "image", "error"}

CAPABILITIES = {"compute_solution", "display_plot", "file_io", "compute_feature"}


def encode_line(message: dict) -> str:
    """Serialize one message to its wire line (newline included)."""
    return json.dumps(message, ensure_ascii=False, allow_nan=False,
                      separators=(",", ":")) + "\n"


def parse_line(line: str | bytes) -> dict:
    """Decode one wire line into a message dict, or raise ProtocolError."""
    if isinstance(line, bytes):
        try:
            line = line.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ProtocolError(f"message is not UTF-8: {exc}") from exc
    try:
        message = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ProtocolError(f"message is not JSON: {exc}") from exc
    if not isinstance(message, dict):
        raise ProtocolError(f"message must be an object, got {type(message).__name__}")
    kind = message.get("type")
    if kind not in MESSAGE_TYPES:
        raise ProtocolError(f"unknown message type {kind!r}")
    if kind != "hello" and "id" in message and not isinstance(message["id"], int):
        raise ProtocolError("message id must be an integer")
    return message


# --- capability descriptors ---------------------------------------------------

@dataclass(frozen=True)
class ParameterSpec:
    name: str
    default: float
    description: str = ""


@dataclass(frozen=True)
class FeatureSpec:
    name: str
    arity: str = "scalar"  # scalar | vector


@dataclass(frozen=True)
class ComputeNodeDescriptor:
    """What a node declared in its capabilities message: its parameters with
    defaults, what it can do, and the plots/features/responses it serves."""

    name: str
    parameters: tuple[ParameterSpec, ...] = ()
    capabilities: frozenset[str] = frozenset()
    plots: tuple[str, ...] = ()
    features: tuple[FeatureSpec, ...] = ()
    responses: tuple[FeatureSpec, ...] = ()

    def parameter(self, name: str) -> ParameterSpec:
        for p in self.parameters:
            if p.name == name:
                return p
        raise KeyError(name)

    def defaults(self) -> dict[str, float]:
        return {p.name: p.default for p in self.parameters}

    def feature_names(self) -> tuple[str, ...]:
        return tuple(f.name for f in self.features)

    def fill_defaults(self, params: dict) -> dict[str, float]:
        filled = self.defaults()
        for name, value in params.items():
            if name not in filled:
                raise ProtocolError(f"unknown parameter {name!r}")
            filled[name] = float(value)
        return filled

    def to_message(self, request_id: int) -> dict:
        return {
            "type": "capabilities",
            "id": request_id,
            "name": self.name,
            "parameters": [
                {"name": p.name, "default": p.default, "description": p.description}
                for p in self.parameters
            ],
            "capabilities": sorted(self.capabilities),
            "plots": list(self.plots),
            "features": [{"name": f.name, "arity": f.arity} for f in self.features],
            "responses": [{"name": r.name, "arity": r.arity} for r in self.responses],
        }


def parse_descriptor(message: dict) -> ComputeNodeDescriptor:
    """Validate a capabilities message into a descriptor."""
    if message.get("type") != "capabilities":
        raise ProtocolError(
            f"expected capabilities message, got {message.get('type')!r}")
    name = message.get("name")
    if not isinstance(name, str) or not name:
        raise ProtocolError("capabilities message must name the node")
    caps = message.get("capabilities")
    if not isinstance(caps, list) or not caps:
        raise ProtocolError("capability set must be a non-empty list")
    unknown = set(caps) - CAPABILITIES
    if unknown:
        raise ProtocolError(f"unknown capabilities {sorted(unknown)}")

    parameters = []
    for entry in _list_field(message, "parameters"):
        pname = entry.get("name")
        default = entry.get("default")
        if not isinstance(pname, str):
            raise ProtocolError("parameter entries must have a name")
        if not isinstance(default, (int, float)) or not math.isfinite(default):
            raise ProtocolError(f"parameter {pname!r} needs a finite default")
        parameters.append(ParameterSpec(pname, float(default),
                                        str(entry.get("description", ""))))
    if len({p.name for p in parameters}) != len(parameters):
        raise ProtocolError("duplicate parameter names")

    plots = _list_field(message, "plots", of=str)
    if len(set(plots)) != len(plots):
        raise ProtocolError("duplicate plot names")

    features = _specs(message, "features")
    responses = _specs(message, "responses")
    return ComputeNodeDescriptor(
        name=name,
        parameters=tuple(parameters),
        capabilities=frozenset(caps),
        plots=tuple(plots),
        features=tuple(features),
        responses=tuple(responses),
    )


def _specs(message: dict, key: str) -> list[FeatureSpec]:
    specs = []
    for entry in _list_field(message, key):
        fname = entry.get("name")
        arity = entry.get("arity", "scalar")
        if not isinstance(fname, str):
            raise ProtocolError(f"{key} entries must have a name")
        if arity not in ("scalar", "vector"):
            raise ProtocolError(f"{key} arity must be scalar or vector")
        specs.append(FeatureSpec(fname, arity))
    if len({s.name for s in specs}) != len(specs):
        raise ProtocolError(f"duplicate {key} names")
    return specs


def _list_field(message: dict, key: str, of=dict) -> list:
    value = message.get(key, [])
    if not isinstance(value, list) or not all(isinstance(e, of) for e in value):
        raise ProtocolError(f"{key} must be a list of {of.__name__}s")
    return value


def canonical_params_key(node_name: str, params: dict[str, float]) -> str:
    """Cache key: node name plus the default-filled parameter tuple, with
    names sorted and values decimal-normalized so 1 and 1.0 collide."""
    parts = [f"{k}={float(v)!r}" for k, v in sorted(params.items())]
    return f"{node_name}|{','.join(parts)}"
