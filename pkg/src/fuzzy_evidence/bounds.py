"""Ellipsoidal bounds on live points in the unit cube, and uniform draws
from their union."""

from __future__ import annotations

import math

import numpy as np

from .errors import NonConvergenceError

RIDGE = 1e-10


def log_unit_ball_volume(d: int) -> float:
    return 0.5 * d * math.log(math.pi) - math.lgamma(0.5 * d + 1.0)


def unit_ball_draws(rng: np.random.Generator, n: int, d: int) -> np.ndarray:
    z = rng.standard_normal((n, d))
    z /= np.linalg.norm(z, axis=1)[:, None]
    return z * rng.random(n)[:, None] ** (1.0 / d)


class Ellipsoid:
    """Points ``u`` with ``(u - center)^T shape^{-1} (u - center) <= scale``."""

    def __init__(self, center, shape, scale: float):
        self.center = np.asarray(center, dtype=float)
        self.shape = np.atleast_2d(np.asarray(shape, dtype=float))
        self.scale = float(scale)
        self.ndim = self.center.shape[0]
        self.precision = np.linalg.inv(self.shape)
        # maps the unit ball onto the ellipsoid
        self.axes = np.linalg.cholesky(self.shape) * math.sqrt(self.scale)
        _, logdet = np.linalg.slogdet(self.shape)
        self.log_volume = (log_unit_ball_volume(self.ndim) + 0.5 * logdet
                           + 0.5 * self.ndim * math.log(self.scale))

    @property
    def volume(self) -> float:
        return math.exp(self.log_volume)

    def mahalanobis(self, points) -> np.ndarray:
        delta = np.atleast_2d(points) - self.center
        return np.einsum("ij,jk,ik->i", delta, self.precision, delta)

    def contains(self, points) -> np.ndarray:
        return self.mahalanobis(points) <= self.scale

    def rescaled(self, factor: float) -> "Ellipsoid":
        """Same ellipsoid with volume multiplied by ``factor``."""
        return Ellipsoid(self.center, self.shape, self.scale * factor ** (2.0 / self.ndim))

    def sample(self, rng: np.random.Generator, n: int = 1) -> np.ndarray:
        return self.center + unit_ball_draws(rng, n, self.ndim) @ self.axes.T

    def major_axis_endpoints(self) -> tuple[np.ndarray, np.ndarray]:
        w, v = np.linalg.eigh(self.shape)
        axis = v[:, -1] * math.sqrt(w[-1] * self.scale)
        return self.center - axis, self.center + axis

    def __repr__(self):
        return f"Ellipsoid(center={self.center}, volume={self.volume:.4g})"


def bounding_ellipsoid(points, enlargement: float = 1.25, min_volume: float = 0.0) -> Ellipsoid:
    """Covariance ellipsoid scaled out to the farthest point, times ``enlargement``.

    A (near-)singular covariance gets a small ridge on the diagonal. If the
    result is smaller than ``min_volume`` it is inflated to that volume.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    n, d = points.shape
    center = points.mean(axis=0)
    if n > 1:
        cov = np.atleast_2d(np.cov(points, rowvar=False))
    else:
        cov = np.eye(d)
    ridge = RIDGE * max(np.trace(cov) / d, 1e-300)
    w = np.linalg.eigvalsh(cov)
    if w[0] <= ridge * 1e-2 or not np.all(np.isfinite(w)):
        cov = cov + ridge * np.eye(d) if np.trace(cov) > 0 else np.eye(d) * RIDGE
    delta = points - center
    maha = np.einsum("ij,jk,ik->i", delta, np.linalg.inv(cov), delta)
    scale = float(maha.max()) * enlargement
    if scale <= 0.0:
        scale = 1.0
    ell = Ellipsoid(center, cov, scale)
    if min_volume > 0.0 and ell.log_volume < math.log(min_volume):
        ell = ell.rescaled(min_volume / ell.volume)
    return ell


def two_means(points: np.ndarray, init: np.ndarray, n_iter: int = 20) -> np.ndarray:
    """Lloyd's algorithm with k=2 from the given centres; returns labels."""
    centres = init.copy()
    labels = np.zeros(points.shape[0], dtype=int)
    for it in range(n_iter):
        dist = ((points[:, None, :] - centres[None, :, :]) ** 2).sum(axis=2)
        new = np.argmin(dist, axis=1)
        if it > 0 and np.array_equal(new, labels):
            break
        labels = new
        for k in (0, 1):
            members = points[labels == k]
            if len(members):
                centres[k] = members.mean(axis=0)
    return labels


def multi_decompose(points, enlargement: float = 1.25, rng=None,
                    split_threshold: float = 0.7, point_volume: float = 0.0,
                    parent: Ellipsoid | None = None) -> list[Ellipsoid]:
    """Recursively split the points by 2-means while it shrinks the bound.

    A split is kept when the two child ellipsoids together have less than
    ``split_threshold`` times the parent's volume. Each ellipsoid is held
    at no less than ``point_volume`` per enclosed point. ``rng`` only
    perturbs the initial centres when the major axis is degenerate.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    n, d = points.shape
    if parent is None:
        parent = bounding_ellipsoid(points, enlargement, n * point_volume)
    min_members = max(d + 1, 2 * d)
    if n < 2 * min_members:
        return [parent]

    init = np.vstack(parent.major_axis_endpoints())
    if np.allclose(init[0], init[1]):
        if rng is None:
            return [parent]
        init = init + rng.normal(scale=1e-6, size=init.shape)
    labels = two_means(points, init)
    groups = [points[labels == k] for k in (0, 1)]
    if min(len(g) for g in groups) < min_members:
        return [parent]
    children = [bounding_ellipsoid(g, enlargement, len(g) * point_volume) for g in groups]
    log_total = np.logaddexp(children[0].log_volume, children[1].log_volume)
    if log_total < parent.log_volume + math.log(split_threshold):
        out = []
        for g, child in zip(groups, children):
            out.extend(multi_decompose(g, enlargement, rng, split_threshold, point_volume, child))
        return out
    return [parent]


def propose_in_union(ells: list[Ellipsoid], rng: np.random.Generator, batch: int) -> np.ndarray:
    """Up to ``batch`` points uniform on (union of ``ells``) within the unit cube.

    Draws from an ellipsoid picked with probability proportional to its
    volume and keeps a point inside q ellipsoids with probability 1/q. When
    the union is at least as big as the cube, drawing from the cube and
    testing membership is cheaper and has the same target.
    """
    d = ells[0].ndim
    log_vols = np.array([e.log_volume for e in ells])
    log_union_bound = float(np.logaddexp.reduce(log_vols))
    if log_union_bound >= 0.0:
        x = rng.random((batch, d))
        inside = np.zeros(batch, dtype=bool)
        for e in ells:
            inside |= e.contains(x)
        return x[inside]

    p = np.exp(log_vols - log_union_bound)
    p /= p.sum()
    which = rng.choice(len(ells), size=batch, p=p) if len(ells) > 1 else np.zeros(batch, dtype=int)
    ball = unit_ball_draws(rng, batch, d)
    x = np.empty((batch, d))
    for k, e in enumerate(ells):
        sel = which == k
        if sel.any():
            x[sel] = e.center + ball[sel] @ e.axes.T
    keep = np.all((x >= 0.0) & (x <= 1.0), axis=1)
    if len(ells) > 1:
        counts = np.zeros(batch)
        for e in ells:
            counts += e.contains(x)
        counts = np.maximum(counts, 1.0)
        keep &= rng.random(batch) < 1.0 / counts
    return x[keep]


def sample_in_ellipsoids(ells, problem, threshold: float, rng: np.random.Generator,
                         budget: int = 10**6, batch: int = 32):
    """First draw from the ellipsoid union with log-likelihood above ``threshold``.

    Returns ``(unit, theta, logl, n_calls, n_ties)`` where ``n_ties`` counts
    draws that landed exactly on the threshold.
    """
    n_calls = ties = 0
    empty_batches = 0
    while True:
        cand = propose_in_union(ells, rng, batch)
        if len(cand) == 0:
            empty_batches += 1
            if empty_batches * batch > 1000 * budget:
                raise NonConvergenceError("ellipsoid union does not meet the unit cube")
            continue
        for u in cand:
            theta = problem.prior_transform(u)
            logl = problem.log_likelihood(theta)
            n_calls += 1
            if logl > threshold:
                return u, theta, logl, n_calls, ties
            if logl == threshold:
                ties += 1
            if n_calls >= budget:
                raise NonConvergenceError(
                    f"no point above log-likelihood {threshold} after {budget} evaluations")


def sample_prior(problem, threshold: float, rng: np.random.Generator,
                 budget: int = 10**6, batch: int = 32):
    """Rejection sampling from the whole prior; same return as above."""
    n_calls = ties = 0
    while True:
        for u in rng.random((batch, problem.ndim)):
            theta = problem.prior_transform(u)
            logl = problem.log_likelihood(theta)
            n_calls += 1
            if logl > threshold:
                return u, theta, logl, n_calls, ties
            if logl == threshold:
                ties += 1
            if n_calls >= budget:
                raise NonConvergenceError(
                    f"no point above log-likelihood {threshold} after {budget} evaluations")
