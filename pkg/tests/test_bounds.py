import math

import numpy as np
import pytest

from fuzzy_evidence import NonConvergenceError
from fuzzy_evidence.bounds import (Ellipsoid, bounding_ellipsoid, log_unit_ball_volume,
                                   multi_decompose, propose_in_union, sample_in_ellipsoids,
                                   sample_prior, unit_ball_draws)
from fuzzy_evidence.models import PriorBox
from fuzzy_evidence.nested import Problem


def test_unit_ball_volume():
    assert math.exp(log_unit_ball_volume(1)) == pytest.approx(2.0)
    assert math.exp(log_unit_ball_volume(2)) == pytest.approx(math.pi)
    assert math.exp(log_unit_ball_volume(3)) == pytest.approx(4 * math.pi / 3)


def test_unit_ball_draws_inside_and_uniform_radius():
    rng = np.random.default_rng(0)
    x = unit_ball_draws(rng, 20000, 3)
    r = np.linalg.norm(x, axis=1)
    assert r.max() <= 1.0
    # P(r < 1/2) = 1/8 in three dimensions
    assert np.mean(r < 0.5) == pytest.approx(0.125, abs=0.01)


def test_square_corners_centroid():
    pts = np.array([[0.2, 0.2], [0.2, 0.6], [0.6, 0.2], [0.6, 0.6]])
    ell = bounding_ellipsoid(pts, 1.0)
    assert np.allclose(ell.center, [0.4, 0.4])
    assert ell.contains(pts).all()


def test_all_points_inside():
    rng = np.random.default_rng(1)
    for d in (1, 2, 5):
        pts = rng.normal(0.5, 0.1, (60, d))
        ell = bounding_ellipsoid(pts, 1.25)
        assert ell.contains(pts).all()


def test_ball_volume_within_factor_two():
    rng = np.random.default_rng(2)
    pts = unit_ball_draws(rng, 100, 3)
    ell = bounding_ellipsoid(pts, 1.0)
    ratio = ell.volume / math.exp(log_unit_ball_volume(3))
    assert 0.5 <= ratio <= 2.0


def test_singular_covariance_falls_back():
    pts = np.array([[0.1, 0.5], [0.3, 0.5], [0.7, 0.5]])
    ell = bounding_ellipsoid(pts, 1.25)
    assert np.all(np.isfinite(ell.axes))
    assert ell.contains(pts).all()


def test_min_volume_floor():
    pts = np.random.default_rng(3).normal(0.5, 1e-3, (30, 2))
    ell = bounding_ellipsoid(pts, 1.25, min_volume=0.01)
    assert ell.volume == pytest.approx(0.01, rel=1e-9)
    assert ell.contains(pts).all()


def test_rescaled_volume():
    ell = Ellipsoid([0.5, 0.5], np.diag([0.01, 0.04]), 1.0)
    assert ell.rescaled(3.0).volume == pytest.approx(3 * ell.volume)


def test_one_blob_gives_one_ellipsoid():
    rng = np.random.default_rng(4)
    pts = rng.normal(0.5, 0.05, (200, 2))
    ells = multi_decompose(pts, 1.25, rng)
    assert len(ells) == 1


def test_separated_blobs_give_two():
    rng = np.random.default_rng(5)
    s = 0.02
    pts = np.vstack([rng.normal([0.3, 0.5], s, (100, 2)), rng.normal([0.5, 0.5], s, (100, 2))])
    ells = multi_decompose(pts, 1.25, rng)
    assert len(ells) == 2
    covered = np.zeros(len(pts), dtype=bool)
    for e in ells:
        covered |= e.contains(pts)
    assert covered.all()


def test_union_covers_every_point_with_many_clusters():
    rng = np.random.default_rng(6)
    centres = rng.uniform(0.2, 0.8, (4, 3))
    pts = np.vstack([rng.normal(c, 0.01, (40, 3)) for c in centres])
    ells = multi_decompose(pts, 1.25, rng)
    covered = np.zeros(len(pts), dtype=bool)
    for e in ells:
        covered |= e.contains(pts)
    assert covered.all()


def test_pick_ratio_for_disjoint_equal_ellipsoids():
    a = Ellipsoid([0.25, 0.5], np.eye(2) * 0.01, 1.0)
    b = Ellipsoid([0.75, 0.5], np.eye(2) * 0.01, 1.0)
    rng = np.random.default_rng(7)
    draws = np.vstack([propose_in_union([a, b], rng, 500) for _ in range(20)])
    n = len(draws)
    assert n >= 9000
    left = int(np.sum(draws[:, 0] < 0.5))
    # binomial(n, 1/2): three standard deviations
    assert abs(left - n / 2) <= 3 * math.sqrt(n / 4)


def test_overlap_is_corrected():
    # two identical ellipsoids: union is one disc, so draws are uniform in it
    e = Ellipsoid([0.5, 0.5], np.eye(2) * 0.04, 1.0)
    rng = np.random.default_rng(8)
    draws = np.vstack([propose_in_union([e, e], rng, 1000) for _ in range(10)])
    r = np.linalg.norm(draws - 0.5, axis=1) / 0.2
    assert np.mean(r < math.sqrt(0.5)) == pytest.approx(0.5, abs=0.02)


def _problem(logl):
    return Problem(logl, PriorBox([0.0, 0.0], [1.0, 1.0]))


def test_whole_cube_ellipsoid_behaves_like_prior_sampling():
    cube = Ellipsoid([0.5, 0.5], np.eye(2), 1.0)
    prob = _problem(lambda t: 0.0 if t[0] < 0.3 else -1.0)
    rng = np.random.default_rng(9)
    hits = []
    for _ in range(2000):
        u, _, logl, n_calls, _ = sample_in_ellipsoids([cube], prob, -math.inf, rng)
        hits.append(u[0] < 0.3)
        assert n_calls == 1
    assert np.mean(hits) == pytest.approx(0.3, abs=0.04)


def test_accepted_points_satisfy_constraint():
    ell = Ellipsoid([0.5, 0.5], np.eye(2) * 0.05, 1.0)
    prob = _problem(lambda t: -float(np.sum((t - 0.5) ** 2)))
    rng = np.random.default_rng(10)
    for _ in range(200):
        u, theta, logl, _, _ = sample_in_ellipsoids([ell], prob, -0.01, rng)
        assert logl > -0.01
        assert ell.contains(u).all()


def test_basic_acceptance_rate_matches_volume():
    prob = _problem(lambda t: 1.0 if t[0] < 0.25 else 0.0)
    rng = np.random.default_rng(11)
    calls = [sample_prior(prob, 0.5, rng)[3] for _ in range(2000)]
    # geometric with success probability 1/4: mean 4 calls
    assert np.mean(calls) == pytest.approx(4.0, rel=0.08)
    u, _, logl, n, _ = sample_prior(prob, -math.inf, rng)
    assert n == 1


def test_budget_exhaustion_raises():
    prob = _problem(lambda t: 0.0)
    with pytest.raises(NonConvergenceError):
        sample_prior(prob, 1.0, np.random.default_rng(0), budget=100)
    ell = Ellipsoid([0.5, 0.5], np.eye(2) * 0.05, 1.0)
    with pytest.raises(NonConvergenceError):
        sample_in_ellipsoids([ell], prob, 1.0, np.random.default_rng(0), budget=100)
