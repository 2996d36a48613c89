"""Deterministic test integrands with closed-form moment integrals.

Each integrand evaluates pointwise and returns the exact integrals
``int g``, ``int t g`` and ``int g^2`` over ``[t0, t1]``. These feed the
covariance of the exact-solution sampler, so they are written in forms
that stay accurate when ``t1 - t0`` is tiny relative to ``t0``.
"""
from __future__ import annotations

import numpy as np
from scipy import integrate

from ._validation import check_interval
from .exceptions import MissingDerivative, SingularEvaluation


def _scalar_or_array(x):
    return float(x) if np.ndim(x) == 0 else x


def _sin_minus_xcos(x):
    # x - (x^3/3 - ...) cancellation for small x, so switch to the series
    x = np.asarray(x, dtype=float)
    x2 = x * x
    series = x * x2 * (1 / 3 - x2 * (1 / 30 - x2 * (1 / 840 - x2 / 45360)))
    return np.where(np.abs(x) < 1e-2, series, np.sin(x) - x * np.cos(x))


def _x_minus_sin(x):
    x = np.asarray(x, dtype=float)
    x2 = x * x
    series = x * x2 * (1 / 6 - x2 * (1 / 120 - x2 * (1 / 5040 - x2 / 362880)))
    return np.where(np.abs(x) < 1e-2, series, x - np.sin(x))


def _pow_diff(t0, t1, alpha):
    """``t1**alpha - t0**alpha`` for 0 <= t0 < t1 without cancellation."""
    t0 = np.asarray(t0, dtype=float)
    t1 = np.asarray(t1, dtype=float)
    safe_t0 = np.where(t0 > 0, t0, 1.0)
    rel = np.where(t0 > 0, safe_t0**alpha * np.expm1(alpha * np.log1p((t1 - t0) / safe_t0)), 0.0)
    return np.where(t0 > 0, rel, t1**alpha)


class Integrand:
    """Interface shared by the deterministic integrands.

    Subclasses implement ``eval``, ``moments`` and optionally
    ``centered_moment`` and ``derivative``.
    """

    kind = "abstract"

    def eval(self, t):
        raise NotImplementedError

    def __call__(self, t):
        return self.eval(t)

    def moments(self, t0, t1):
        """Return ``(int g, int t g, int g^2)`` over ``[t0, t1]``."""
        raise NotImplementedError

    def moment0(self, t0, t1):
        return self.moments(t0, t1)[0]

    def moment1(self, t0, t1):
        return self.moments(t0, t1)[1]

    def moment2(self, t0, t1):
        return self.moments(t0, t1)[2]

    def centered_moment(self, t0, t1):
        """``int (t - t_mid) g(t) dt`` over ``[t0, t1]``."""
        m0, m1, _ = self.moments(t0, t1)
        mid = 0.5 * (np.asarray(t0, dtype=float) + np.asarray(t1, dtype=float))
        return _scalar_or_array(m1 - mid * m0)

    def derivative(self, t):
        raise MissingDerivative(f"{self.kind} integrand has no derivative")

    #: points where the integrand or its derivative loses regularity
    singular_points = ()

    def abs_moment(self, t0, t1, p):
        """``int |g|^p`` over ``[t0, t1]``."""
        if p == 2:
            return float(self.moment2(t0, t1))
        value, _ = integrate.quad(lambda t: abs(self.eval(t)) ** p, t0, t1, limit=200)
        return value

    @property
    def params(self):
        return {}

    def spec(self):
        """The ``kind:key=value`` string understood by :func:`parse_integrand`."""
        body = ",".join(f"{k}={v!r}" for k, v in self.params.items())
        return f"{self.kind}:{body}" if body else self.kind

    def __eq__(self, other):
        return type(self) is type(other) and self.params == other.params

    def __hash__(self):
        return hash((self.kind, tuple(self.params.items())))

    def __repr__(self):
        args = ", ".join(f"{k}={v!r}" for k, v in self.params.items())
        return f"{type(self).__name__}({args})"


class SineIntegrand(Integrand):
    """``g(t) = sin(lam * t)``, smooth and oscillating."""

    kind = "sine"

    def __init__(self, lam):
        self.lam = float(lam)

    @property
    def params(self):
        return {"lambda": self.lam}

    def eval(self, t):
        return _scalar_or_array(np.sin(self.lam * np.asarray(t, dtype=float)))

    def derivative(self, t):
        return _scalar_or_array(self.lam * np.cos(self.lam * np.asarray(t, dtype=float)))

    def _parts(self, t0, t1):
        t0, t1 = check_interval(t0, t1)
        return 0.5 * (t0 + t1), 0.5 * (t1 - t0), t1 - t0

    def moments(self, t0, t1):
        mid, k, h = self._parts(t0, t1)
        lam = self.lam
        if lam == 0.0:
            zero = np.zeros_like(mid)
            return _scalar_or_array(zero), _scalar_or_array(zero), _scalar_or_array(zero)
        # product forms of cos(a) - cos(b) etc. keep relative accuracy as h -> 0
        m0 = 2.0 * np.sin(lam * mid) * np.sin(lam * k) / lam
        centered = 2.0 * np.cos(lam * mid) * _sin_minus_xcos(lam * k) / lam**2
        m1 = centered + mid * m0
        x = lam * h
        m2 = _x_minus_sin(x) / (2.0 * lam) + np.sin(lam * mid) ** 2 * np.sin(x) / lam
        return _scalar_or_array(m0), _scalar_or_array(m1), _scalar_or_array(m2)

    def centered_moment(self, t0, t1):
        mid, k, _ = self._parts(t0, t1)
        if self.lam == 0.0:
            return _scalar_or_array(np.zeros_like(mid))
        return _scalar_or_array(2.0 * np.cos(self.lam * mid) * _sin_minus_xcos(self.lam * k) / self.lam**2)


class JumpIntegrand(Integrand):
    """Indicator of ``[c, T]``: 0 before the jump, 1 from ``c`` on."""

    kind = "jump"

    def __init__(self, c):
        self.c = float(c)
        if not self.c > 0:
            raise ValueError(f"jump location c must be > 0, got {c}")

    @property
    def params(self):
        return {"c": self.c}

    @property
    def singular_points(self):
        return (self.c,)

    def abs_moment(self, t0, t1, p):
        return float(self.moment0(t0, t1))

    def eval(self, t):
        return _scalar_or_array((np.asarray(t, dtype=float) >= self.c).astype(float))

    def moments(self, t0, t1):
        t0, t1 = check_interval(t0, t1)
        lo = np.maximum(t0, self.c)
        length = np.maximum(t1 - lo, 0.0)
        m1 = 0.5 * length * (t1 + lo)
        return _scalar_or_array(length), _scalar_or_array(m1), _scalar_or_array(length)

    def centered_moment(self, t0, t1):
        t0, t1 = check_interval(t0, t1)
        lo = np.maximum(t0, self.c)
        length = np.maximum(t1 - lo, 0.0)
        # int_lo^t1 (t - mid) dt with mid the interval midpoint
        return _scalar_or_array(0.5 * length * (lo - t0))


class PowerIntegrand(Integrand):
    """``g(t) = t**gamma``, singular at 0 for negative ``gamma``."""

    kind = "power"

    def __init__(self, gamma):
        self.gamma = float(gamma)
        if not -0.5 < self.gamma or self.gamma == 0.0:
            raise ValueError(f"gamma must lie in (-1/2, inf) without 0, got {gamma}")

    @property
    def params(self):
        return {"gamma": self.gamma}

    singular_points = (0.0,)

    def abs_moment(self, t0, t1, p):
        alpha = self.gamma * p + 1.0
        if alpha <= 0:
            return float("inf")
        return float(_pow_diff(t0, t1, alpha) / alpha)

    def eval(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t < 0):
            raise ValueError("power integrand is defined for t >= 0 only")
        if self.gamma < 0 and np.any(t == 0):
            raise SingularEvaluation(f"t**{self.gamma} is unbounded at t = 0")
        return _scalar_or_array(t**self.gamma)

    def derivative(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t <= 0) and self.gamma < 1:
            raise SingularEvaluation(f"derivative of t**{self.gamma} is unbounded at t = 0")
        return _scalar_or_array(self.gamma * t ** (self.gamma - 1.0))

    def moments(self, t0, t1):
        t0, t1 = check_interval(t0, t1)
        g = self.gamma
        m0 = _pow_diff(t0, t1, g + 1.0) / (g + 1.0)
        m1 = _pow_diff(t0, t1, g + 2.0) / (g + 2.0)
        m2 = _pow_diff(t0, t1, 2.0 * g + 1.0) / (2.0 * g + 1.0)
        return _scalar_or_array(m0), _scalar_or_array(m1), _scalar_or_array(m2)


class AffineIntegrand(Integrand):
    """``g(t) = a0 + a1 * t``; the trapezoidal rule integrates it exactly."""

    kind = "affine"

    def __init__(self, a0, a1=0.0):
        self.a0 = float(a0)
        self.a1 = float(a1)

    @property
    def params(self):
        return {"a0": self.a0, "a1": self.a1}

    def eval(self, t):
        t = np.asarray(t, dtype=float)
        return _scalar_or_array(self.a0 + self.a1 * t)

    def derivative(self, t):
        return _scalar_or_array(np.full(np.shape(t), self.a1))

    def moments(self, t0, t1):
        t0, t1 = check_interval(t0, t1)
        h = t1 - t0
        mid = 0.5 * (t0 + t1)
        gm = self.a0 + self.a1 * mid
        centered = self.a1 * h**3 / 12.0
        m0 = h * gm
        m1 = centered + mid * m0
        m2 = h * gm * gm + self.a1**2 * h**3 / 12.0
        return _scalar_or_array(m0), _scalar_or_array(m1), _scalar_or_array(m2)

    def centered_moment(self, t0, t1):
        t0, t1 = check_interval(t0, t1)
        return _scalar_or_array(self.a1 * (t1 - t0) ** 3 / 12.0)


def affine_integrand(a0, a1):
    return AffineIntegrand(a0, a1)


def constant_integrand(c):
    return AffineIntegrand(c, 0.0)


_KINDS = {
    "sine": (SineIntegrand, {"lambda": "lam", "lam": "lam"}),
    "jump": (JumpIntegrand, {"c": "c"}),
    "power": (PowerIntegrand, {"gamma": "gamma"}),
    "affine": (AffineIntegrand, {"a0": "a0", "a1": "a1"}),
}


def parse_integrand(text):
    """Build an integrand from a spec string such as ``sine:lambda=42``.

    ``poisson:a=0.75`` yields a :class:`~itoquad.processes.PoissonProcess`.
    """
    kind, _, body = text.strip().partition(":")
    kind = kind.strip().lower()
    kwargs = {}
    for item in filter(None, (s.strip() for s in body.split(","))):
        key, sep, value = item.partition("=")
        if not sep:
            raise ValueError(f"malformed parameter {item!r} in {text!r}")
        try:
            kwargs[key.strip()] = float(value)
        except ValueError:
            raise ValueError(f"parameter {key.strip()!r} in {text!r} is not a number") from None
    if kind == "poisson":
        from .processes import PoissonProcess

        if set(kwargs) != {"a"}:
            raise ValueError(f"poisson expects exactly a=<rate>, got {text!r}")
        return PoissonProcess(kwargs["a"])
    if kind not in _KINDS:
        raise ValueError(f"unknown integrand kind {kind!r}; expected one of {sorted(_KINDS)} or poisson")
    cls, names = _KINDS[kind]
    unknown = set(kwargs) - set(names)
    if unknown:
        raise ValueError(f"unknown parameters {sorted(unknown)} for {kind}")
    args = {names[k]: v for k, v in kwargs.items()}
    try:
        return cls(**args)
    except TypeError:
        raise ValueError(f"missing parameters for {kind}: {text!r}") from None


def is_singular_at_zero(g):
    return isinstance(g, PowerIntegrand) and g.gamma < 0


def exact_variance(g, T):
    """Variance of the exact Ito integral over ``[0, T]``."""
    return float(g.moment2(0.0, T))


__all__ = [
    "Integrand",
    "SineIntegrand",
    "JumpIntegrand",
    "PowerIntegrand",
    "AffineIntegrand",
    "affine_integrand",
    "constant_integrand",
    "parse_integrand",
    "is_singular_at_zero",
    "exact_variance",
]
