"""Poisson integrand paths built from exponential inter-arrival times."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._validation import check_positive
from .sampling import sample_exponential


@dataclass(frozen=True, eq=False)
class PoissonPath:
    """One sample path ``t -> #{k : S_k <= t}`` on ``[0, horizon]``.

    ``jump_times`` holds the partial sums of the inter-arrival times that
    fall into ``[0, horizon]``; the array is read-only.
    """

    intensity: float
    horizon: float
    jump_times: np.ndarray

    def __post_init__(self):
        times = np.array(self.jump_times, dtype=float)
        if times.ndim != 1:
            raise ValueError("jump_times must be one-dimensional")
        if np.any(np.diff(times) <= 0):
            raise ValueError("jump_times must be strictly increasing")
        if times.size and (times[0] <= 0 or times[-1] > self.horizon):
            raise ValueError("jump_times must lie in (0, horizon]")
        times.setflags(write=False)
        object.__setattr__(self, "jump_times", times)

    @property
    def terminal_count(self):
        return int(self.jump_times.size)

    @property
    def singular_points(self):
        return tuple(self.jump_times)

    def eval(self, t):
        counts = np.searchsorted(self.jump_times, np.asarray(t, dtype=float), side="right")
        return int(counts) if np.ndim(counts) == 0 else counts.astype(float)

    __call__ = eval

    def integral_power(self, h, p):
        """Exact ``int_0^h Pi(t)^p dt`` for this path."""
        knots = np.concatenate(([0.0], self.jump_times[self.jump_times < h], [h]))
        levels = np.arange(knots.size - 1, dtype=float)
        return float(np.sum(levels**p * np.diff(knots)))


def eval_path(path, t):
    return path.eval(t)


def sample_poisson_path(a, T, rng):
    """Draw a Poisson path of intensity ``a`` on ``[0, T]``.

    Inter-arrival times are exponential; drawing stops at the first partial
    sum beyond ``T``.
    """
    a = check_positive(a, "intensity a")
    T = check_positive(T, "horizon T")
    mean = a * T
    batch = int(mean + 5.0 * math.sqrt(mean) + 10)
    sums = np.empty(0)
    total = 0.0
    while True:
        z = sample_exponential(a, rng, batch)
        s = total + np.cumsum(z)
        past = np.flatnonzero(s > T)
        if past.size:
            sums = np.concatenate((sums, s[: past[0]]))
            break
        sums = np.concatenate((sums, s))
        total = s[-1]
    return PoissonPath(a, T, sums)


class PoissonProcess:
    """The law of a homogeneous Poisson process with intensity ``a``."""

    kind = "poisson"

    def __init__(self, a):
        self.a = check_positive(a, "intensity a")

    @property
    def params(self):
        return {"a": self.a}

    def spec(self):
        return f"poisson:a={self.a!r}"

    def sample_path(self, T, rng):
        return sample_poisson_path(self.a, T, rng)

    def __eq__(self, other):
        return isinstance(other, PoissonProcess) and other.a == self.a

    def __hash__(self):
        return hash(("poisson", self.a))

    def __repr__(self):
        return f"PoissonProcess(a={self.a!r})"
