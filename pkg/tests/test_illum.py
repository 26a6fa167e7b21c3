import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import margins_at, random_generator_set, sampled_margins
from spindle.ball_poly import (
    NotOnBoundary,
    build_ball_polyhedron,
    normal_cone,
    sample_boundary_cells,
)
from spindle.geom_core import SphericalPolygon, random_rotation, uniform_sphere_sample, unit
from spindle.illum import (
    DirectionSet,
    Infeasible,
    OutOfScope,
    Status,
    Verdict,
    code_registry,
    corollary_dispatch,
    covering_radius_grid,
    covering_radius_hull,
    get_code,
    hemisphere_test,
    illuminates_point,
    jung_certified,
    jung_code_directions,
    verify_illumination,
)

seeds = st.integers(0, 2**32 - 1)
TETRA_DIRS = unit(np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], float))
AXES = np.vstack([np.eye(3), -np.eye(3)])


def test_illuminates_point_examples(ball, lens):
    e1 = np.array([1.0, 0, 0])
    assert illuminates_point(ball, e1, -e1) is Verdict.TRUE
    assert illuminates_point(ball, e1, e1) is Verdict.FALSE
    assert illuminates_point(ball, e1, [0, 1, 0]) is Verdict.INDETERMINATE
    p = [0.5, math.sqrt(3) / 2, 0]
    assert illuminates_point(lens, p, [0, -1, 0]) is Verdict.TRUE
    with pytest.raises(NotOnBoundary):
        illuminates_point(ball, [0.5, 0, 0], e1)


def test_hemisphere_test_examples(ball, lens):
    e1 = np.array([1.0, 0, 0])
    assert hemisphere_test(normal_cone(ball, e1), -e1) is Verdict.TRUE
    cone = normal_cone(lens, [0.5, math.sqrt(3) / 2, 0])
    assert hemisphere_test(cone, e1) is Verdict.FALSE
    # a Gauss-image triangle around +e3 sits in the open hemisphere of -v for v = -e3
    tri = SphericalPolygon.from_points(unit(np.array([[0.2, 0, 1], [-0.1, 0.2, 1], [-0.1, -0.2, 1]])))
    assert hemisphere_test(tri, [0, 0, -1]) is Verdict.TRUE
    assert hemisphere_test(tri, [0, 0, 1]) is Verdict.FALSE


def test_verify_examples(ball, lens):
    assert verify_illumination(ball, TETRA_DIRS).status is Status.CERTIFIED
    cert = verify_illumination(ball, TETRA_DIRS[:3])
    assert cert.status is Status.FAILED
    w = cert.witness
    assert abs(np.linalg.norm(w) - 1) < 1e-9
    assert np.all(TETRA_DIRS[:3] @ (-w) <= 0)
    cert = verify_illumination(lens, AXES)
    assert cert.status is Status.CERTIFIED
    _, m = sampled_margins(lens, AXES, 10**6, 0)
    assert m.min() > 1e-9


def test_certificate_covers_every_cell(tetra):
    cert = verify_illumination(tetra, TETRA_DIRS)
    assert cert.status is Status.CERTIFIED
    n = len(tetra.vertices) + len(tetra.edges) + len(tetra.faces)
    assert len(cert.per_cell) == n
    assert all(c["margin"] > tetra.tol.strict_margin for c in cert.per_cell.values())
    doc = json.loads(json.dumps(cert.to_json()))
    assert doc["status"] == "CERTIFIED" and doc["witness"] is None


def test_depth_cap_gives_indeterminate(ball):
    cert = verify_illumination(ball, TETRA_DIRS, max_depth=0)
    assert cert.status is Status.INDETERMINATE
    assert cert.indeterminate == ["f0"]


def test_code_registry():
    codes = {c.name: c for c in code_registry()}
    expect = {"TETRA-4": 70.5288, "BIPYR-5": 63.4349, "OCTA-6": 54.7356}
    for name, deg in expect.items():
        c = codes[name]
        assert c.certified
        assert math.degrees(c.covering_radius) == pytest.approx(deg, abs=0.01)
        assert covering_radius_hull(c.points) == pytest.approx(c.covering_radius, abs=1e-12)
    assert math.degrees(codes["TETRA-4"].covering_radius) < 70.529
    assert math.degrees(codes["BIPYR-5"].covering_radius) < 63.435
    assert get_code("tetra-4") is codes["TETRA-4"]
    with pytest.raises(KeyError):
        get_code("cube-8")


def test_grid_covering_radius_is_independent_route():
    P = get_code("BIPYR-5").points
    assert covering_radius_grid(P, 100_000) == pytest.approx(math.atan(2), abs=1e-6)


def test_jung_directions_examples():
    D = jung_code_directions(0.577, get_code("TETRA-4"), 0)
    assert len(D) == 4
    assert np.allclose(D.directions, -get_code("TETRA-4").points)
    assert len(jung_code_directions(0.774, get_code("BIPYR-5"), 3)) == 5
    # zero slack at diameter 1 is still feasible
    assert len(jung_code_directions(1.0, get_code("OCTA-6"), 0)) == 6
    bad = jung_code_directions(1.5, get_code("TETRA-4"), 0)
    assert isinstance(bad, Infeasible) and bad.deficit > 0
    assert isinstance(jung_code_directions(0.6, get_code("TETRA-4"), 0), Infeasible)
    R = random_rotation(5)
    D = jung_code_directions(0.5, get_code("TETRA-4"), 5)
    assert np.allclose(D.directions, -get_code("TETRA-4").points @ R.T)


def test_corollary_dispatch():
    assert corollary_dispatch(0.5) == (4, "TETRA-4")
    assert corollary_dispatch(0.577) == (4, "TETRA-4")
    assert corollary_dispatch(0.7) == (5, "BIPYR-5")
    assert corollary_dispatch(0.774) == (5, "BIPYR-5")
    assert corollary_dispatch(0.9) == (6, "OCTA-6")
    with pytest.raises(OutOfScope):
        corollary_dispatch(1.01)


def test_direction_set_json_round_trip():
    D = DirectionSet(TETRA_DIRS, "t")
    E = DirectionSet.from_json(json.loads(json.dumps(D.to_json())))
    assert np.array_equal(D.directions, E.directions) and E.label == "t"
    with pytest.raises(ValueError):
        DirectionSet([[2.0, 0, 0]])


def random_instance(seed):
    rng = np.random.default_rng(seed)
    X = random_generator_set(rng, int(rng.integers(1, 20)), rng.uniform(0.05, 1.0))
    B = build_ball_polyhedron(X)
    D = uniform_sphere_sample(3, int(rng.integers(3, 9)), rng)
    return B, D


@given(seeds)
def test_verdict_agrees_with_sampling_oracle(seed):
    B, D = random_instance(seed)
    cert = verify_illumination(B, D)
    S, m = sampled_margins(B, D, 20_000, seed)
    if cert.status is Status.CERTIFIED:
        assert m.min() > -1e-9
    if m.min() < -1e-6:
        assert cert.status is Status.FAILED
    if cert.status is Status.FAILED:
        w = cert.witness
        dist = np.linalg.norm(B.X - w, axis=1)
        assert abs(dist.max() - 1) <= 1e-9
        act = np.abs(dist - 1) <= 1e-9
        assert ((B.X[act] - w) @ D.T).min(axis=0).max() < 0


@given(seeds)
def test_verdict_rotation_invariant(seed):
    B, D = random_instance(seed)
    R = random_rotation(seed + 1)
    B2 = build_ball_polyhedron(B.X @ R.T)
    s1 = verify_illumination(B, D).status
    s2 = verify_illumination(B2, D @ R.T).status
    assert s1 == s2


@given(seeds)
def test_hemisphere_test_matches_pointwise_illumination(seed):
    B, D = random_instance(seed)
    S = sample_boundary_cells(B, 40, seed)
    for b in S.points:
        cone = normal_cone(B, b)
        for v in D:
            assert (hemisphere_test(cone, v) is Verdict.TRUE) == (illuminates_point(B, b, v) is Verdict.TRUE)


@given(seeds)
def test_tetra_code_illuminates_small_bodies(seed):
    rng = np.random.default_rng(seed)
    B = build_ball_polyhedron(random_generator_set(rng, int(rng.integers(2, 25)), 0.577))
    D, cert = jung_certified(B, get_code("TETRA-4"), 0)
    assert cert.status is Status.CERTIFIED


def test_failed_witness_independent_of_cell_order(random_bodies):
    # directions that leave a whole hemisphere dark
    D = unit(np.array([[1, 0.1, 0], [1, -0.1, 0.1], [1, 0, -0.1]]))
    for B in random_bodies:
        cert = verify_illumination(B, D)
        assert cert.status is Status.FAILED
        S = sample_boundary_cells(B, 5000, 0)
        assert margins_at(B, S, D).min() < 0
