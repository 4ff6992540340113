"""Toy sine-wave node: v(t) = a*sin(2*pi*f*t + phi) sampled at 101 points of
t = 0..1.  Small enough to verify the protocol end to end against the closed
form; no file IO since recomputation is instant.
"""

from __future__ import annotations

import math

from ..protocol import ComputeNodeDescriptor, FeatureSpec, ParameterSpec
from .host import render_line_plot, worker_main

N_SAMPLES = 101
PLOT_Y_LIMIT = 5.0

DESCRIPTOR = ComputeNodeDescriptor(
    name="sine",
    parameters=(
        ParameterSpec("phi", 0.0, "phase shift"),
        ParameterSpec("f", 1.0, "frequency"),
        ParameterSpec("a", 1.0, "amplitude"),
    ),
    capabilities=frozenset({"compute_solution", "display_plot", "compute_feature"}),
    plots=("wave",),
    features=(FeatureSpec("v0"), FeatureSpec("v_half")),
    responses=(FeatureSpec("solution", "vector"),),
)


def solution(params: dict[str, float]) -> list[float]:
    a, f, phi = params["a"], params["f"], params["phi"]
    return [a * math.sin(2.0 * math.pi * f * (k / (N_SAMPLES - 1)) + phi)
            for k in range(N_SAMPLES)]


class SineNode:
    descriptor = DESCRIPTOR

    def run(self, params):
        return {"solution": solution(params)}

    def feature(self, name, params):
        # Both features follow from the inputs alone, no solve needed.
        a, f, phi = params["a"], params["f"], params["phi"]
        if name == "v0":
            return a * math.sin(phi)
        if name == "v_half":
            return a * math.sin(f * math.pi + phi)
        raise KeyError(name)

    def render(self, plot, params):
        ts = [k / (N_SAMPLES - 1) for k in range(N_SAMPLES)]
        return render_line_plot(ts, solution(params), PLOT_Y_LIMIT)


def main(argv=None) -> None:
    worker_main(lambda extra: SineNode(), argv)


if __name__ == "__main__":
    main()
