"""Seeded random streams and exact sampling of the Gaussian functionals.

Every Monte Carlo sample owns one :class:`RngStream`. Streams are keyed by
``(seed, stream_id, family)`` through :class:`numpy.random.SeedSequence`
and drive a counter-based Philox generator, so a sample produces the same
numbers whether it runs serially or inside a worker process.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._validation import check_increasing_times, check_int, check_interval, check_positive
from .exceptions import NotPSD

_EPS = np.finfo(float).eps
# pivots at or below this multiple of eps * q_kk are roundoff of an exact zero
_ZERO_PIVOT = 64.0
# a pivot below -_NEG_PIVOT * trace means the matrix is not PSD
_NEG_PIVOT = 1e-12


class RngStream:
    """One independent random stream.

    Parameters
    ----------
    seed : int
        Study-wide seed.
    stream_id : int
        Index of the Monte Carlo sample that owns the stream.
    family : int, default 0
        Extra key separating otherwise identical stream ids, e.g. the step
        size level of a convergence study.
    """

    def __init__(self, seed, stream_id=0, family=0):
        self.seed = check_int(seed, "seed", min_value=0)
        self.stream_id = check_int(stream_id, "stream_id", min_value=0)
        self.family = check_int(family, "family", min_value=0)
        seq = np.random.SeedSequence(self.seed, spawn_key=(self.family, self.stream_id))
        self.generator = np.random.Generator(np.random.Philox(seq))

    def __repr__(self):
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id}, family={self.family})"


@dataclass(frozen=True)
class JointIncrement:
    """Wiener increment, centred-time integral and exact Ito integral of one interval."""

    x1: float
    x2: float
    x3: float


def standard_normal(rng, size=None):
    """Draw i.i.d. N(0, 1) variates from ``rng``."""
    return rng.generator.standard_normal(size)


def uniform_open_closed(rng, size=None):
    """Uniform draws on (0, 1]."""
    return 1.0 - rng.generator.random(size)


def exponential_from_uniform(u, a):
    """Inverse transform ``-ln(u) / a``; ``u`` must lie in (0, 1]."""
    a = check_positive(a, "rate a")
    u = np.asarray(u, dtype=float)
    if np.any((u <= 0.0) | (u > 1.0)):
        raise ValueError("u must lie in (0, 1]")
    z = -np.log(u) / a
    return float(z) if z.ndim == 0 else z


def sample_exponential(a, rng, size=None):
    """Exponential variates with ``P(Z > x) = exp(-a x)``."""
    a = check_positive(a, "rate a")
    return exponential_from_uniform(uniform_open_closed(rng, size), a)


def cholesky(q):
    """Lower-triangular factor of a symmetric PSD matrix, tolerant of rank loss.

    Works on a single ``(n, n)`` matrix or on a stack ``(..., n, n)``.
    A pivot that is roundoff-small relative to its diagonal entry is set to
    zero together with the rest of its column, which is how constant or
    vanishing integrands (rank-deficient covariances) are handled.

    Raises
    ------
    NotPSD
        If a pivot falls below ``-1e-12 * trace(q)``.
    """
    q = np.asarray(q, dtype=float)
    if q.ndim < 2 or q.shape[-1] != q.shape[-2]:
        raise ValueError(f"expected square matrices, got shape {q.shape}")
    n = q.shape[-1]
    trace = np.trace(q, axis1=-2, axis2=-1)
    neg_tol = _NEG_PIVOT * np.abs(trace)
    L = np.zeros_like(q)
    for j in range(n):
        diag = q[..., j, j]
        pivot = diag - np.sum(L[..., j, :j] ** 2, axis=-1)
        if np.any(pivot < -neg_tol):
            raise NotPSD(f"pivot {j} is negative beyond tolerance: min {np.min(pivot - (-neg_tol)):.3e}")
        keep = pivot > _ZERO_PIVOT * _EPS * np.abs(diag)
        ljj = np.where(keep, np.sqrt(np.where(keep, pivot, 1.0)), 0.0)
        L[..., j, j] = ljj
        safe = np.where(keep, ljj, 1.0)
        for i in range(j + 1, n):
            off = q[..., i, j] - np.sum(L[..., i, :j] * L[..., j, :j], axis=-1)
            L[..., i, j] = np.where(keep, off / safe, 0.0)
    return L


def joint_covariance(g, t0, t1):
    """Covariance of (dW, centred-time integral, Ito integral of g) on [t0, t1].

    ``t0`` and ``t1`` may be arrays of interval endpoints; the result then
    has shape ``(..., 3, 3)``.
    """
    t0, t1 = check_interval(t0, t1)
    h = t1 - t0
    m0, _, m2 = g.moments(t0, t1)
    q = np.zeros(np.broadcast(t0, t1).shape + (3, 3))
    q[..., 0, 0] = h
    q[..., 1, 1] = h**3 / 12.0
    q[..., 0, 2] = q[..., 2, 0] = m0
    q[..., 1, 2] = q[..., 2, 1] = g.centered_moment(t0, t1)
    q[..., 2, 2] = m2
    return q


def sample_joint_increments(g, nodes, rng):
    """Exact joint draws of (x1, x2, x3) on every interval of ``nodes``.

    Returns three arrays of length ``len(nodes) - 1``.
    """
    nodes = np.asarray(nodes, dtype=float)
    q = joint_covariance(g, nodes[:-1], nodes[1:])
    L = cholesky(q)
    z = standard_normal(rng, (nodes.size - 1, 3))
    x = np.einsum("kij,kj->ki", L, z)
    return x[:, 0], x[:, 1], x[:, 2]


def sample_joint_increment(g, t0, t1, rng):
    """Single-interval version of :func:`sample_joint_increments`."""
    x1, x2, x3 = sample_joint_increments(g, [t0, t1], rng)
    return JointIncrement(float(x1[0]), float(x2[0]), float(x3[0]))


def sample_wiener_pairs(nodes, rng):
    """Independent (dW, centred-time integral) pairs without an integrand."""
    h = np.diff(np.asarray(nodes, dtype=float))
    z = standard_normal(rng, (h.size, 2))
    return np.sqrt(h) * z[:, 0], h**1.5 / (2.0 * np.sqrt(3.0)) * z[:, 1]


def brownian_on_times(times, rng):
    """Wiener path values at strictly increasing ``times`` starting at 0."""
    times = check_increasing_times(times)
    w = np.zeros(times.size)
    if times.size > 1:
        w[1:] = np.cumsum(np.sqrt(np.diff(times)) * standard_normal(rng, times.size - 1))
    return w
