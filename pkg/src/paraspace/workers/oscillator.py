"""Damped oscillator node: x'' + c x' + k x = 0 with x(0)=1, x'(0)=0.

The closed-form solution splits at c^2 = 4k into an oscillatory and a
monotone regime, which makes this node a compact stand-in for simulators
whose parameter space partitions into qualitatively distinct behaviours.
`damping_margin` (c^2 - 4k) is the cheap screening feature computable from
the inputs alone; the trajectory features require the solve.
"""

from __future__ import annotations

import math

from ..protocol import ComputeNodeDescriptor, FeatureSpec, ParameterSpec
from .host import render_line_plot, worker_main

T_END = 20.0
N_SAMPLES = 201
PLOT_Y_LIMIT = 1.5

DESCRIPTOR = ComputeNodeDescriptor(
    name="oscillator",
    parameters=(
        ParameterSpec("k", 1.0, "stiffness"),
        ParameterSpec("c", 1.0, "damping"),
    ),
    capabilities=frozenset({"compute_solution", "display_plot",
                            "compute_feature", "file_io"}),
    plots=("trajectory",),
    features=(
        FeatureSpec("x_min"),
        FeatureSpec("crossings"),
        FeatureSpec("x_final"),
        FeatureSpec("damping_margin"),
        FeatureSpec("trajectory", "vector"),
    ),
    responses=(FeatureSpec("solution", "vector"),),
)


def displacement(k: float, c: float, t: float) -> float:
    disc = c * c - 4.0 * k
    if disc < 0.0:
        w = 0.5 * math.sqrt(-disc)
        decay = math.exp(-0.5 * c * t)
        if w == 0.0:
            return decay
        return decay * (math.cos(w * t) + (0.5 * c / w) * math.sin(w * t))
    if disc > 0.0:
        root = math.sqrt(disc)
        r1 = 0.5 * (-c + root)
        r2 = 0.5 * (-c - root)
        return (r1 * math.exp(r2 * t) - r2 * math.exp(r1 * t)) / (r1 - r2)
    return (1.0 + 0.5 * c * t) * math.exp(-0.5 * c * t)


def trajectory(params: dict[str, float]) -> list[float]:
    k, c = params["k"], params["c"]
    dt = T_END / (N_SAMPLES - 1)
    return [displacement(k, c, i * dt) for i in range(N_SAMPLES)]


class OscillatorNode:
    descriptor = DESCRIPTOR

    def run(self, params):
        return {"solution": trajectory(params)}

    def feature(self, name, params):
        if name == "damping_margin":
            return params["c"] ** 2 - 4.0 * params["k"]
        xs = trajectory(params)
        if name == "trajectory":
            return xs
        if name == "x_min":
            return min(xs)
        if name == "x_final":
            return xs[-1]
        if name == "crossings":
            count = 0
            for a, b in zip(xs, xs[1:]):
                if (a > 0.0) != (b > 0.0):
                    count += 1
            return float(count)
        raise KeyError(name)

    def render(self, plot, params):
        dt = T_END / (N_SAMPLES - 1)
        ts = [i * dt for i in range(N_SAMPLES)]
        return render_line_plot(ts, trajectory(params), PLOT_Y_LIMIT)


def main(argv=None) -> None:
    worker_main(lambda extra: OscillatorNode(), argv)


if __name__ == "__main__":
    main()
