"""Quadrature rules for Ito integrals and the grids they run on.

Two kernels are provided:

* :func:`srm_quadrature`, the Riemann-Maruyama sum on a randomly shifted
  equidistant grid. Its first node is ``Theta * h``, so the piece
  ``[0, Theta * h]`` of the integral is not approximated at all.
* :func:`trap_quadrature`, the generalized stochastic trapezoidal rule for
  deterministic integrands. It needs, per interval, the Wiener increment
  and ``int (t - t_mid) dW``.

Both kernels are pure functions of pre-sampled inputs. The drivers
:func:`srm_integrate` and :func:`trap_integrate` do the sampling and also
return a reference value (the exact integral, or the same rule on a
finer grid) driven by the same randomness.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from ._validation import check_1d, check_int, check_positive, check_unit_interval
from .exceptions import SingularEvaluation
from .processes import PoissonPath, PoissonProcess
from .sampling import (
    brownian_on_times,
    sample_joint_increments,
    sample_wiener_pairs,
    uniform_open_closed,
)

SRM = "srm"
TRAP = "trap"


@dataclass(frozen=True)
class ShiftedGrid:
    """``{0} U {(j - 1 + shift) h : j = 1..N} U {T}`` with ``h = T / N``."""

    T: float
    N: int
    shift: float

    @property
    def h(self):
        return self.T / self.N

    @cached_property
    def points(self):
        """All ``N + 2`` nominal points, coincident ones included."""
        inner = (np.arange(self.N) + self.shift) * self.T / self.N
        pts = np.concatenate(([0.0], inner, [self.T]))
        pts[np.abs(pts - self.T) <= 1e-12 * self.T] = self.T
        pts = np.clip(pts, 0.0, self.T)
        pts.setflags(write=False)
        return pts

    @property
    def shifted_points(self):
        return self.points[1:-1]

    @cached_property
    def nodes(self):
        """Distinct grid nodes in increasing order."""
        nodes = np.unique(self.points)
        nodes.setflags(write=False)
        return nodes

    @cached_property
    def point_index(self):
        """Index into :attr:`nodes` of each nominal point."""
        return np.searchsorted(self.nodes, self.points)


@dataclass(frozen=True)
class UniformGrid:
    """Equidistant grid ``t_j = j h``, ``j = 0..N``."""

    T: float
    N: int

    @property
    def h(self):
        return self.T / self.N

    @cached_property
    def nodes(self):
        nodes = np.arange(self.N + 1) * self.T / self.N
        nodes[-1] = self.T
        nodes.setflags(write=False)
        return nodes

    @property
    def midpoints(self):
        return 0.5 * (self.nodes[:-1] + self.nodes[1:])

    def theta_points(self, theta):
        """Return ``(theta_j, theta_hat_j)`` for ``j = 1..N``."""
        left = self.nodes[:-1]
        return left + theta * self.h, left + (1.0 - theta) * self.h


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    rule: str
    n_intervals: int
    h: float
    shift: float | None = None
    theta: float | None = None
    skipped: int = 0


@dataclass(frozen=True)
class QuadratureSample:
    """A quadrature value paired with the reference it is compared against."""

    result: QuadratureResult
    reference: float
    reference_kind: str

    @property
    def error(self):
        return abs(self.reference - self.result.value)


def build_shifted_grid(T, N, shift):
    T = check_positive(T, "T")
    N = check_int(N, "N", min_value=1)
    shift = check_unit_interval(shift, "shift")
    return ShiftedGrid(T, N, shift)


def build_uniform_grid(T, N):
    return UniformGrid(check_positive(T, "T"), check_int(N, "N", min_value=1))


def srm_quadrature(evals, wiener, grid=None):
    """Randomly shifted Riemann-Maruyama sum.

    Parameters
    ----------
    evals : array of shape (N,)
        Integrand values at the shifted points ``Theta_1..Theta_N``.
    wiener : array
        Wiener values at the ``N + 2`` nominal points ``Theta_0..Theta_{N+1}``,
        or at the distinct ``grid.nodes`` when ``grid`` is given.
    grid : ShiftedGrid, optional
        Used to expand node values and to fill in the result metadata.
    """
    evals = check_1d(evals, "evals")
    wiener = check_1d(wiener, "wiener")
    n = evals.size
    if grid is not None:
        if grid.N != n:
            raise ValueError(f"grid has N={grid.N} but {n} evaluations were given")
        if wiener.size == grid.nodes.size and wiener.size != n + 2:
            wiener = wiener[grid.point_index]
    if wiener.size != n + 2:
        raise ValueError(f"expected {n + 2} Wiener values for {n} evaluations, got {wiener.size}")
    value = float(np.dot(evals, wiener[2:] - wiener[1:-1]))
    return QuadratureResult(
        value,
        SRM,
        n,
        grid.h if grid is not None else float("nan"),
        shift=grid.shift if grid is not None else None,
    )


def _eval_with_skip(g, t, skip_singular):
    try:
        return np.asarray(g.eval(t), dtype=float)
    except SingularEvaluation:
        if not skip_singular:
            raise
    bad = t == 0.0
    vals = np.asarray(g.eval(np.where(bad, 1.0, t)), dtype=float).copy()
    vals[bad] = np.nan
    return vals


def trap_quadrature(g, grid, theta, x1, x2, skip_singular=False):
    """Generalized stochastic trapezoidal rule on a uniform grid.

    ``theta = 0`` gives the trapezoidal rule (only the ``N + 1`` nodes are
    evaluated), ``theta = 1/2`` the midpoint rule. With ``skip_singular``
    every term that needs ``g`` at the singular point ``t = 0`` is left
    out of its sum; the count lands in ``QuadratureResult.skipped``.
    """
    theta = check_unit_interval(theta, "theta")
    x1 = check_1d(x1, "x1", length=grid.N)
    x2 = check_1d(x2, "x2", length=grid.N)
    g_nodes = _eval_with_skip(g, grid.nodes, skip_singular)
    if theta == 0.0 or theta == 1.0:
        g_lo, g_hi = g_nodes[:-1], g_nodes[1:]
    else:
        t_lo, t_hi = grid.theta_points(theta)
        g_lo = _eval_with_skip(g, t_lo, skip_singular)
        g_hi = _eval_with_skip(g, t_hi, skip_singular)
    terms = (g_lo, g_hi, g_nodes[:-1], g_nodes[1:])
    skipped = sum(int(np.count_nonzero(np.isnan(a))) for a in terms)
    if skipped:
        # a left-out evaluation contributes nothing to its sum
        g_lo, g_hi, g_left, g_right = (np.nan_to_num(a, nan=0.0) for a in terms)
    else:
        g_left, g_right = terms[2], terms[3]
    value = float(np.sum(0.5 * (g_lo + g_hi) * x1) + np.sum((g_right - g_left) / grid.h * x2))
    return QuadratureResult(value, TRAP, grid.N, grid.h, theta=theta, skipped=skipped)


def _is_process(g):
    return isinstance(g, (PoissonProcess, PoissonPath))


def _draw_shift(rng):
    # (0, 1] keeps the first shifted point off t = 0
    return float(uniform_open_closed(rng))


def srm_integrate(g, T, N, rng, reference="exact", factor=16):
    """Sample one shifted-grid SRM approximation together with its reference.

    The shift is drawn first and is independent of all other randomness.

    ``reference="exact"`` couples the rule with the exact Ito integral:
    joint Gaussian increments for deterministic integrands, and for a
    Poisson integrand a Wiener path that also passes through every jump
    time. ``reference="fine"`` compares with the same rule at step
    ``h / factor``, using the same shift and one Wiener path sampled on
    the union of both grids.
    """
    shift = _draw_shift(rng)
    grid = build_shifted_grid(T, N, shift)
    path = g.sample_path(T, rng) if isinstance(g, PoissonProcess) else g

    if reference == "exact":
        if isinstance(path, PoissonPath):
            knots = np.union1d(grid.nodes, path.jump_times)
            w = brownian_on_times(knots, rng)
            exact = float(np.dot(path.eval(knots[:-1]), np.diff(w)))
            w_nodes = w[np.searchsorted(knots, grid.nodes)]
        else:
            x1, _, x3 = sample_joint_increments(path, grid.nodes, rng)
            exact = float(np.sum(x3))
            w_nodes = np.concatenate(([0.0], np.cumsum(x1)))
        result = srm_quadrature(path.eval(grid.shifted_points), w_nodes, grid)
        return QuadratureSample(result, exact, "exact")

    if reference == "fine":
        factor = check_int(factor, "factor", min_value=2)
        fine = build_shifted_grid(T, N * factor, shift)
        knots = np.union1d(grid.nodes, fine.nodes)
        w = brownian_on_times(knots, rng)
        coarse = srm_quadrature(path.eval(grid.shifted_points), w[np.searchsorted(knots, grid.nodes)], grid)
        ref = srm_quadrature(path.eval(fine.shifted_points), w[np.searchsorted(knots, fine.nodes)], fine)
        return QuadratureSample(coarse, ref.value, f"fine:{factor}")

    raise ValueError(f"unknown reference mode {reference!r}")


def trap_integrate(g, T, N, rng, theta=0.0, reference="exact", factor=16, skip_singular=None):
    """Sample one trapezoidal-rule approximation together with its reference.

    ``skip_singular`` defaults to true exactly when ``g`` is singular at 0.
    """
    if _is_process(g):
        raise ValueError("the trapezoidal rule is implemented for deterministic integrands only")
    if skip_singular is None:
        from .integrands import is_singular_at_zero

        skip_singular = is_singular_at_zero(g)
    grid = build_uniform_grid(T, N)

    if reference == "exact":
        x1, x2, x3 = sample_joint_increments(g, grid.nodes, rng)
        result = trap_quadrature(g, grid, theta, x1, x2, skip_singular)
        return QuadratureSample(result, float(np.sum(x3)), "exact")

    if reference == "fine":
        factor = check_int(factor, "factor", min_value=2)
        fine = build_uniform_grid(T, N * factor)
        y1, y2 = sample_wiener_pairs(fine.nodes, rng)
        ref = trap_quadrature(g, fine, theta, y1, y2, skip_singular)
        # aggregate fine pairs to the coarse intervals; the centred-time
        # integral shifts by (fine midpoint - coarse midpoint) * dW
        offset = fine.midpoints.reshape(N, factor) - grid.midpoints[:, None]
        x1 = y1.reshape(N, factor).sum(axis=1)
        x2 = (y2.reshape(N, factor) + offset * y1.reshape(N, factor)).sum(axis=1)
        result = trap_quadrature(g, grid, theta, x1, x2, skip_singular)
        return QuadratureSample(result, ref.value, f"fine:{factor}")

    raise ValueError(f"unknown reference mode {reference!r}")
