import json
import math

import numpy as np
import pytest

from paraspace.errors import ParseError, UnboundedRegion, UnknownVariable, UnsupportedAnalytic
from paraspace.region import (
    All,
    And,
    Ball,
    Cursor,
    Interval,
    Not,
    Or,
    ViewTransform,
    ball_volume,
    bounding_box,
    contains,
    from_document,
    from_rectangle,
    load_region,
    save_region,
    to_document,
    unresolved_names,
    volume,
)
from util import oracle_contains, random_region


def test_interval_boundary_inclusive():
    region = Interval("x", 0.0, 1.0)
    assert contains(region, {"x": 1.0})
    assert contains(region, {"x": 0.0})
    assert not contains(region, {"x": 1.0000001})


def test_ball_membership():
    ball = Ball(("x", "y"), (0.0, 0.0), 1.0, 2.0)
    assert contains(ball, {"x": 1.0, "y": 0.0})
    assert not contains(ball, {"x": 1.0, "y": 1.0})


def test_ball_pnorms_differ():
    p1 = Ball(("x", "y"), (0.0, 0.0), 1.0, 1.0)
    pinf = Ball(("x", "y"), (0.0, 0.0), 1.0, math.inf)
    corner = {"x": 0.9, "y": 0.9}
    assert not contains(p1, corner)
    assert contains(pinf, corner)


def test_weighted_ball_stretches_axis():
    ball = Ball(("x", "y"), (0.0, 0.0), 1.0, 2.0, weights=(0.5, 2.0))
    assert contains(ball, {"x": 1.8, "y": 0.0})  # 0.5*1.8 = 0.9
    assert not contains(ball, {"x": 0.0, "y": 0.6})  # 2*0.6 = 1.2


def test_contains_missing_variable():
    with pytest.raises(UnknownVariable):
        contains(Interval("x", 0, 1), {"y": 0.5})


def test_boolean_conjunction_against_oracle():
    region = And((Interval("x", 0.0, 1.0), Interval("y", 0.0, 1.0)))
    rng = np.random.default_rng(11)
    for _ in range(1000):
        point = {"x": float(rng.uniform(-1, 2)), "y": float(rng.uniform(-1, 2))}
        expected = 0.0 <= point["x"] <= 1.0 and 0.0 <= point["y"] <= 1.0
        assert contains(region, point) == expected


def test_random_trees_against_oracle():
    names = ["x", "y", "z"]
    rng = np.random.default_rng(5)
    for _ in range(60):
        region = random_region(rng, names, depth=3)
        for _ in range(25):
            point = {n: float(rng.uniform(-2, 2)) for n in names}
            assert contains(region, point) == oracle_contains(region, point)


def test_de_morgan_pointwise():
    names = ["x", "y"]
    rng = np.random.default_rng(13)
    for _ in range(30):
        a = random_region(rng, names, depth=2, allow_all=False)
        b = random_region(rng, names, depth=2, allow_all=False)
        lhs = Not(And((a, b)))
        rhs = Or((Not(a), Not(b)))
        for _ in range(20):
            point = {n: float(rng.uniform(-2, 2)) for n in names}
            assert contains(lhs, point) == contains(rhs, point)


def test_cursor_region_and_ball():
    cursor = Cursor({"x": 1.0, "y": 2.0})
    assert contains(cursor.region(), {"x": 1.0, "y": 2.0})
    assert not contains(cursor.region(), {"x": 1.0, "y": 2.1})
    ball = cursor.ball(0.5)
    assert ball.center == (1.0, 2.0)
    with pytest.raises(ValueError):
        Cursor({"x": math.nan})


# --- bounding boxes ---------------------------------------------------------

def test_bounding_box_ball():
    box = bounding_box(Ball(("x", "y"), (0.0, 0.0), 1.0, 2.0))
    assert box == {"x": (-1.0, 1.0), "y": (-1.0, 1.0)}


def test_bounding_box_intersection():
    box = bounding_box(And((Interval("x", 0, 2), Interval("x", 1, 3))))
    assert box == {"x": (1.0, 2.0)}


def test_bounding_box_union_and_not():
    box = bounding_box(Or((Interval("x", 0, 1), Interval("x", 4, 5))))
    assert box == {"x": (0.0, 5.0)}
    with pytest.raises(UnboundedRegion):
        bounding_box(Not(Interval("x", 0, 1)))
    with pytest.raises(UnboundedRegion):
        bounding_box(All())
    with pytest.raises(UnboundedRegion):
        bounding_box(Or((Interval("x", 0, 1), Interval("y", 0, 1))))
    # a bounded sibling re-bounds the negated variable
    box = bounding_box(And((Interval("x", 0, 10), Not(Interval("x", 2, 3)))))
    assert box == {"x": (0.0, 10.0)}


def test_bounding_box_soundness_random():
    names = ["x", "y", "z"]
    rng = np.random.default_rng(23)
    for _ in range(40):
        region = random_region(rng, names, depth=2, allow_not=False, allow_all=False)
        try:
            box = bounding_box(region)
        except UnboundedRegion:
            continue
        for _ in range(30):
            point = {n: float(rng.uniform(-3, 3)) for n in names}
            if contains(region, point):
                for var, (lo, hi) in box.items():
                    assert lo <= point[var] <= hi


# --- volume ------------------------------------------------------------------

def test_unit_box_volume():
    box = And((Interval("x", -1, 1), Interval("y", -1, 1), Interval("z", -1, 1)))
    assert volume(box).value == 8.0


def test_ball_volume_closed_forms():
    assert volume(Ball(("x", "y"), (0, 0), 1.0, 2.0)).value == pytest.approx(math.pi)
    assert volume(Ball(tuple("abcde"), (0,) * 5, 1.0, math.inf)).value == 32.0
    # 1-norm cross-polytope: 2^n / n!
    assert ball_volume(3, 1.0, 1.0) == pytest.approx(8.0 / 6.0)


def test_ball_volume_monotone_in_p():
    for n in (1, 2, 3, 4, 5):
        values = [ball_volume(n, 1.0, p) for p in (1.0, 1.5, 2.0, 4.0, math.inf)]
        assert values == sorted(values)


def test_monte_carlo_matches_analytic_within_3_stderr():
    rng_seed = 99
    for n in (1, 2, 3, 4, 5):
        for p in (1.0, 2.0, math.inf):
            ball = Ball(tuple(f"x{i}" for i in range(n)), (0.0,) * n, 1.0, p)
            exact = volume(ball).value
            mc = volume(ball, "monte_carlo", samples=100_000, seed=rng_seed)
            assert abs(mc.value - exact) <= max(3 * mc.stderr, 1e-12), (n, p)


def test_weighted_ball_volume_scales():
    ball = Ball(("x", "y"), (0, 0), 1.0, 2.0, weights=(2.0, 1.0))
    assert volume(ball).value == pytest.approx(math.pi / 2.0)


def test_analytic_unsupported_on_composites():
    with pytest.raises(UnsupportedAnalytic):
        volume(Or((Interval("x", 0, 1), Interval("x", 2, 3))))
    with pytest.raises(UnsupportedAnalytic):
        volume(And((Interval("x", 0, 1), Ball(("y",), (0.0,), 1.0))))


def test_monte_carlo_unbounded():
    with pytest.raises(UnboundedRegion):
        volume(Not(Interval("x", 0, 1)), "monte_carlo", samples=100)


# --- screen rectangles --------------------------------------------------------

def test_from_rectangle_maps_to_data_units():
    view = ViewTransform("q_a", "q_al", x_scale=0.01, x_offset=2.0,
                         y_scale=-0.02, y_offset=10.0)
    region = from_rectangle(view, (100.0, 100.0, 200.0, 300.0))
    assert isinstance(region, And)
    x, y = region.children
    assert (x.var, x.lo, x.hi) == ("q_a", 3.0, 4.0)
    assert (y.var, y.lo, y.hi) == ("q_al", pytest.approx(4.0), pytest.approx(8.0))


def test_from_rectangle_zero_area_is_cursor():
    view = ViewTransform("x", "y")
    region = from_rectangle(view, (1.0, 2.0, 1.0, 2.0))
    x, y = region.children
    assert x.lo == x.hi == 1.0
    assert y.lo == y.hi == 2.0
    assert contains(region, {"x": 1.0, "y": 2.0})


def test_from_rectangle_on_embedding_columns():
    view = ViewTransform("embed_x", "embed_y")
    region = from_rectangle(view, (-0.5, -0.5, 0.5, 0.5))
    assert {c.var for c in region.children} == {"embed_x", "embed_y"}


# --- serialization --------------------------------------------------------------

def test_round_trip_random_trees():
    names = ["x", "y", "z", "w"]
    rng = np.random.default_rng(17)
    for _ in range(100):
        region = random_region(rng, names, depth=3)
        doc = to_document(region)
        json.dumps(doc)  # must be plain JSON
        assert from_document(doc) == region


def test_round_trip_p_inf():
    ball = Ball(("x",), (0.0,), 1.0, math.inf)
    doc = to_document(ball)
    assert doc["p"] == "inf"
    assert from_document(doc) == ball


def test_empty_and_deserializes_to_all():
    assert from_document({"type": "and", "children": []}) == All()


def test_unresolved_names_deferred_binding():
    region = from_document({"type": "interval", "var": "ghost", "lo": 0, "hi": 1})
    assert unresolved_names(region, ["x", "y"]) == {"ghost"}
    assert unresolved_names(region, ["ghost"]) == set()


@pytest.mark.parametrize("doc", [
    [],
    {"type": "box"},
    {"type": "interval", "var": "x", "lo": "a", "hi": 1},
    {"type": "interval", "var": "x", "lo": 2, "hi": 1},
    {"type": "ball", "vars": ["x"], "center": [0, 0], "radius": 1},
    {"type": "ball", "vars": ["x"], "center": [0], "radius": -1},
    {"type": "ball", "vars": ["x"], "center": [0], "radius": 1, "p": 0.5},
    {"type": "ball", "vars": [], "center": [], "radius": 1},
    {"type": "and"},
    {"type": "not"},
    {"type": "or", "children": []},
])
def test_parse_errors(doc):
    with pytest.raises(ParseError):
        from_document(doc)


def test_ball_rejects_nonfinite_geometry():
    with pytest.raises(ValueError):
        Ball(("x",), (math.nan,), 1.0)
    with pytest.raises(ValueError):
        Ball(("x",), (0.0,), math.inf)
    with pytest.raises(ValueError):
        Ball(("x",), (0.0,), 1.0, 2.0, weights=(-1.0,))


def test_file_round_trip(tmp_path):
    region = And((Interval("x", 0, 1), Ball(("y",), (0.5,), 0.25)))
    path = tmp_path / "roi.region.json"
    save_region(region, path)
    assert load_region(path) == region


def test_documents_validate_against_shipped_schema():
    jsonschema = pytest.importorskip("jsonschema")
    from importlib import resources

    schema = json.loads(
        resources.files("paraspace.schemas").joinpath("region.schema.json")
        .read_text(encoding="utf-8"))
    validator = jsonschema.Draft202012Validator(schema)
    rng = np.random.default_rng(29)
    for _ in range(50):
        doc = to_document(random_region(rng, ["x", "y", "z"], depth=3))
        validator.validate(doc)
    validator.validate(to_document(All()))
    with pytest.raises(jsonschema.ValidationError):
        validator.validate({"type": "interval", "var": "x", "lo": 0})
