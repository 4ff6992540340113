"""Serving loop shared by the reference workers.

A node implementation provides a descriptor plus run/feature/render callables;
the host answers protocol messages over stdio (one worker per process) or TCP
(one thread per connection).  Worker-side failures become error messages, not
crashes: a worker must survive arbitrary input.
"""

from __future__ import annotations

import base64
import json
import socketserver
import sys
import time

from ..errors import ProtocolError
from ..protocol import ComputeNodeDescriptor, encode_line, parse_line


class NodeHost:
    def __init__(self, node, die_after_runs: int | None = None):
        self.node = node
        self.die_after_runs = die_after_runs
        self.runs_served = 0

    def handle_line(self, line: str) -> str | None:
        """One request in, one reply line out (None to drop the line)."""
        if not line.strip():
            return None
        try:
            message = parse_line(line)
        except ProtocolError as exc:
            return encode_line({"type": "error", "id": None, "message": str(exc)})
        request_id = message.get("id")
        try:
            return self.dispatch(message, request_id)
        except Exception as exc:  # noqa: BLE001 - report, never crash the loop
            return encode_line({"type": "error", "id": request_id,
                                "message": f"{type(exc).__name__}: {exc}"})

    def dispatch(self, message: dict, request_id) -> str:
        kind = message["type"]
        descriptor: ComputeNodeDescriptor = self.node.descriptor
        if kind == "hello":
            return encode_line(descriptor.to_message(request_id))
        if kind == "run":
            self.runs_served += 1
            if self.die_after_runs is not None and self.runs_served > self.die_after_runs:
                # Test hook: simulate a worker crash with a request in flight.
                import os
                os._exit(1)
            params = descriptor.fill_defaults(message.get("params") or {})
            start = time.monotonic()
            values = self.node.run(params)
            reply = {"type": "result", "id": request_id, "values": values,
                     "wall_time": time.monotonic() - start}
            return encode_line(reply)
        if kind == "feature":
            name = message.get("name")
            if name not in descriptor.feature_names():
                return encode_line({"type": "error", "id": request_id,
                                    "message": f"unknown feature {name!r}"})
            params = descriptor.fill_defaults(message.get("params") or {})
            value = self.node.feature(name, params)
            return encode_line({"type": "result", "id": request_id,
                                "values": {name: value}})
        if kind == "show":
            plot = message.get("plot")
            if plot not in descriptor.plots:
                return encode_line({"type": "error", "id": request_id,
                                    "message": f"unknown plot {plot!r}"})
            params = descriptor.fill_defaults(message.get("params") or {})
            png, width, height = self.node.render(plot, params)
            return encode_line({
                "type": "image", "id": request_id, "format": "png",
                "width": width, "height": height,
                "data": base64.b64encode(png).decode("ascii"),
            })
        return encode_line({"type": "error", "id": request_id,
                            "message": f"cannot serve message type {kind!r}"})

    def serve_stdio(self) -> None:
        for line in sys.stdin:
            reply = self.handle_line(line)
            if reply is not None:
                sys.stdout.write(reply)
                sys.stdout.flush()

    def serve_tcp(self, port: int, host: str = "127.0.0.1") -> None:
        node_host = self

        class Handler(socketserver.StreamRequestHandler):
            def handle(self):
                for raw in self.rfile:
                    reply = node_host.handle_line(raw.decode("utf-8", "replace"))
                    if reply is not None:
                        self.wfile.write(reply.encode("utf-8"))
                        self.wfile.flush()

        class Server(socketserver.ThreadingTCPServer):
            allow_reuse_address = True
            daemon_threads = True

        with Server((host, port), Handler) as server:
            actual = server.server_address[1]
            sys.stdout.write(json.dumps({"listening": actual}) + "\n")
            sys.stdout.flush()
            server.serve_forever()


def render_line_plot(xs, ys, y_limit: float, width: int = 320,
                     height: int = 240) -> tuple[bytes, int, int]:
    """Plot a polyline into PNG bytes with fixed vertical axis +-y_limit."""
    from PIL import Image, ImageDraw

    img = Image.new("RGB", (width, height), "white")
    draw = ImageDraw.Draw(img)
    margin = 10
    x_lo, x_hi = min(xs), max(xs)
    span = x_hi - x_lo or 1.0

    def to_px(x, y):
        px = margin + (x - x_lo) / span * (width - 2 * margin)
        py = height / 2 - y / y_limit * (height / 2 - margin)
        return (px, py)

    draw.line([to_px(x_lo, 0), to_px(x_hi, 0)], fill=(180, 180, 180))
    draw.line([to_px(x_lo, -y_limit), to_px(x_lo, y_limit)], fill=(180, 180, 180))
    pts = [to_px(x, max(-y_limit, min(y_limit, y))) for x, y in zip(xs, ys)]
    draw.line(pts, fill=(20, 60, 180), width=1)
    import io
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue(), width, height


def worker_main(node_factory, argv=None) -> None:
    import argparse

    parser = argparse.ArgumentParser()
    parser.add_argument("--tcp", type=int, default=None,
                        help="serve on this TCP port instead of stdio (0 = pick free)")
    parser.add_argument("--die-after-runs", type=int, default=None,
                        help="test hook: crash after serving N run requests")
    args, extra = parser.parse_known_args(argv)
    host = NodeHost(node_factory(extra), die_after_runs=args.die_after_runs)
    if args.tcp is not None:
        host.serve_tcp(args.tcp)
    else:
        host.serve_stdio()
