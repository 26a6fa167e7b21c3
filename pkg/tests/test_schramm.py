import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import spindle.schramm as sch
from spindle.ball_poly import build_ball_polyhedron
from spindle.geom_core import OutOfRange, euclidean_diameter, sample_cap, uniform_sphere_sample, unit
from spindle.illum import Status
from spindle.schramm import (
    BoundParams,
    ChainBroken,
    MCConfig,
    assemble_theorem_chain,
    budget_from,
    cover_sphere_caps,
    epsilon0,
    generate_illuminating_directions,
    kahn_kalai_lower,
    log_theorem_bound,
    positive_polar_measure,
    random_illuminating_directions,
    reflection_check,
    sample_bounded_diameter_set,
    schramm_direction_budget,
    theorem_bound,
    vdim_lower_bound,
)


def test_vdim_examples():
    assert vdim_lower_bound(math.sqrt(2), 3) == pytest.approx(0.4 / math.sqrt(24 * math.pi), rel=1e-14)
    assert vdim_lower_bound(math.sqrt(2), 3) == pytest.approx(0.046066, abs=1e-6)
    for d in (3, 5, 40):
        assert vdim_lower_bound(1e-9, d) == pytest.approx(1 / math.sqrt(8 * math.pi * d))
    with pytest.raises(OutOfRange):
        vdim_lower_bound(1.5, 3)
    with pytest.raises(OutOfRange):
        vdim_lower_bound(1.0, 2)


@given(st.floats(1e-6, math.sqrt(2)), st.integers(3, 200))
def test_vdim_in_open_unit_half(t, d):
    assert 0 < vdim_lower_bound(t, d) < 0.5


def test_vdim_unit_inner_term_at_epsilon0():
    for d in (3, 10, 100):
        K = math.sqrt(8 * math.pi * d) * 1.5 ** ((d - 1) / 2)
        assert 1 / vdim_lower_bound(1 + epsilon0(d), d) == pytest.approx(K, rel=1e-12)


def test_params_validation():
    BoundParams(3, 0.4, 1.4)
    with pytest.raises(OutOfRange):
        BoundParams(3, 0.5, 1.0)
    with pytest.raises(OutOfRange):
        BoundParams(2, 0.4, 1.0)
    with pytest.raises(ValueError):
        MCConfig(samples=10)


def test_positive_polar_examples():
    cfg = MCConfig(200_000, 1)
    p, ci = positive_polar_measure([[1, 0, 0]], cfg)
    assert abs(p - 0.5) <= ci
    p, ci = positive_polar_measure([[1, 0, 0], [0, 1, 0]], cfg)
    assert abs(p - 0.25) <= ci
    A = sample_cap([0, 0, 1], math.pi / 4, 50, np.random.default_rng(0))
    assert euclidean_diameter(A) <= math.sqrt(2)
    p, ci = positive_polar_measure(A, cfg)
    assert p + ci >= vdim_lower_bound(math.sqrt(2), 3)


def test_positive_polar_deterministic():
    A = uniform_sphere_sample(4, 3, 0)
    a = positive_polar_measure(A, MCConfig(150_000, 9))
    b = positive_polar_measure(A, MCConfig(150_000, 9))
    assert a == b
    assert a != positive_polar_measure(A, MCConfig(150_000, 10))


@pytest.mark.parametrize("d", [3, 4])
def test_measure_bound_holds_for_random_sets(d):
    rng = np.random.default_rng(d)
    for k in range(30):
        t = rng.uniform(0.2, math.sqrt(2))
        u = unit(rng.normal(size=d))
        A = sample_bounded_diameter_set(u, math.pi / 2, t, int(rng.integers(2, 12)), rng)
        t_real = euclidean_diameter(A)
        if t_real == 0:
            continue
        p, ci = positive_polar_measure(A, MCConfig(20_000, k))
        assert p + ci >= vdim_lower_bound(t_real, d)


@given(st.floats(1e-12, 1 - 1e-12, exclude_max=True))
def test_log_pivot_inequality(x):
    assert x < -math.log1p(-x) or x < 1e-8
    assert sch._log_gap(x) > 0


def test_reflection_examples():
    r = reflection_check(math.cos(math.pi / 4), math.sqrt(2), 100, 0, points=1000)
    assert r.passed and r.pairs == 100_000
    assert reflection_check(0.99, 0.05, 20, 1, points=500).passed
    assert reflection_check(0.5, 2 * math.sqrt(0.75), 20, 2, points=500, d=4).passed
    with pytest.raises(OutOfRange):
        reflection_check(0.9, 1.5, 1, 0)


def test_reflection_detects_a_too_large_cap():
    # the cap is sharp for the rim pair, so a slightly larger cap must fail
    r = reflection_check(0.6, 1.0, 30, 3, points=20_000, shrink=-0.02)
    assert r.violations > 0 and r.counterexamples


def test_cover_examples():
    assert len(cover_sphere_caps(3, 2.0)) == 2
    c = cover_sphere_caps(3, 1.0)
    assert c.certified and 20 <= len(c) <= 35 and len(c) < 125
    c = cover_sphere_caps(4, 1.0)
    assert c.certified and len(c) < 625
    c = cover_sphere_caps(3, 1.0, "lattice")
    assert c.certified and len(c) < 125
    with pytest.raises(OutOfRange):
        cover_sphere_caps(5, 1.0)


@pytest.mark.parametrize("eps", [0.4, 0.5, 1.5])
def test_cover_radius_and_certification(eps):
    c = cover_sphere_caps(3, eps)
    assert c.angular_radius == pytest.approx(math.asin(eps / 2))
    assert len(c) < (1 + 4 / eps) ** 3
    Z = uniform_sphere_sample(3, 200_000, 77)
    assert np.arccos(np.clip((Z @ c.centers.T).max(axis=1), -1, 1)).max() <= c.angular_radius + 1e-6


def test_budget_examples():
    e = epsilon0(3)
    assert 0 < schramm_direction_budget(3, e) < theorem_bound(3)[0]
    assert schramm_direction_budget(15, epsilon0(15)) < 2**15
    V = vdim_lower_bound(1.4, 3)
    assert budget_from(10 + math.log(2), V) - budget_from(10, V) == pytest.approx(math.log(2) / -math.log1p(-V))
    with pytest.raises(OutOfRange):
        schramm_direction_budget(3, 0.5)


@given(st.floats(0.1, 100), st.floats(1e-6, 0.4), st.floats(1e-6, 0.4))
def test_budget_decreases_in_measure(log_n, v1, v2):
    lo, hi = sorted((v1, v2))
    assert budget_from(log_n, hi) <= budget_from(log_n, lo)


def test_theorem_bound_crossover():
    assert theorem_bound(15)[0] < 2**15
    assert theorem_bound(14)[0] > 2**14
    assert theorem_bound(15)[0] == pytest.approx(2.84e4, rel=1e-2)
    assert theorem_bound(14)[0] == pytest.approx(2.07e4, rel=1e-2)
    for d in range(3, 400):
        tight, relaxed = theorem_bound(d)
        assert tight < relaxed
        assert math.log(tight) == pytest.approx(log_theorem_bound(d), rel=1e-12)
        assert (tight < 2.0**d) == (d >= 15)


def test_chain_examples():
    rep = assemble_theorem_chain(3)
    assert rep.epsilon0 == pytest.approx(math.sqrt(6 / 5) - 1)
    assert rep.epsilon0 == pytest.approx(0.09545, abs=1e-5)
    assert rep.epsilon0 > 4 / 47
    assert rep.holds
    for d in range(3, 201):
        assert assemble_theorem_chain(d).holds


def test_chain_growth_rate():
    # ln(tight)/d decreases toward ln sqrt(1.5) = ln 1.2247...
    target = math.log(math.sqrt(1.5))
    gaps = [log_theorem_bound(d) / d - target for d in (100, 1000, 10**4, 10**5, 10**6)]
    assert all(g > 0 for g in gaps)
    assert all(a > b for a, b in zip(gaps, gaps[1:]))
    assert log_theorem_bound(10**6) / 10**6 < math.log(1.225)


def test_chain_reports_breakage(monkeypatch):
    monkeypatch.setattr(sch, "theorem_bound", lambda d: (1.0, 0.5))
    with pytest.raises(ChainBroken):
        assemble_theorem_chain(3)


def test_kahn_kalai():
    assert kahn_kalai_lower(4) == pytest.approx(1.44)
    assert kahn_kalai_lower(100) == pytest.approx(6.1917364, rel=1e-7)
    vals = [kahn_kalai_lower(d) for d in range(1, 200)]
    assert all(a < b for a, b in zip(vals, vals[1:]))


def test_generator_ball(ball):
    res = generate_illuminating_directions(ball, 0.4, MCConfig(1000, 0))
    assert len(res.directions) >= 4
    assert res.certificate.status is Status.CERTIFIED


def test_generator_lens_within_budget(lens):
    budget = math.ceil(schramm_direction_budget(3, 0.4))
    sizes = []
    for seed in range(20):
        res = generate_illuminating_directions(lens, 0.4, MCConfig(1000, seed))
        assert res.certificate.status is Status.CERTIFIED
        sizes.append(len(res.directions))
    assert sum(s <= budget for s in sizes) >= 10


def test_generator_reproducible(tetra):
    a = random_illuminating_directions(tetra, 0.4, MCConfig(1000, 5))
    b = random_illuminating_directions(tetra, 0.4, MCConfig(1000, 5))
    assert np.array_equal(a.directions, b.directions)


def test_generator_rejects_wide_sets():
    B = build_ball_polyhedron([[0, 0, 0], [1.2, 0, 0]])
    with pytest.raises(OutOfRange):
        random_illuminating_directions(B, 0.4, MCConfig(1000, 0))
