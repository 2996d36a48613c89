"""Monte Carlo convergence studies for the quadrature rules.

A study runs, for every step size ``h``, ``samples`` independent
realizations of ``|I[G] - Q_N[G]|`` and reduces them to an ``L^p`` error
estimate with a CLT confidence interval. Sample ``i`` at grid size ``N``
always draws from ``RngStream(seed, i, family=N)``, and realizations are
reduced in sample order, so results do not depend on how many workers
computed them.
"""
from __future__ import annotations

import math
import time
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np
from joblib import Parallel, delayed
from scipy import stats
from sklearn.base import BaseEstimator

from ._validation import check_int, check_positive, check_unit_interval
from .integrands import Integrand, parse_integrand
from .quadrature import SRM, TRAP, srm_integrate, trap_integrate
from .sampling import RngStream

EXACT = "exact"
DEFAULT_FACTOR = 16


def default_steps(T=1.0, first=3, last=10):
    return tuple(T * 2.0**-i for i in range(first, last + 1))


def parse_reference(text):
    """``"exact"`` -> ``("exact", None)``; ``"fine:16"`` -> ``("fine", 16)``."""
    mode, _, arg = str(text).partition(":")
    mode = mode.strip().lower()
    if mode == EXACT and not arg:
        return EXACT, None
    if mode == "fine":
        factor = int(arg) if arg else DEFAULT_FACTOR
        if factor < 2:
            raise ValueError(f"refinement factor must be >= 2, got {factor}")
        return "fine", factor
    raise ValueError(f"reference must be 'exact' or 'fine[:factor]', got {text!r}")


@dataclass(frozen=True)
class ExperimentConfig:
    integrand: str
    rule: str = SRM
    theta: float = 0.0
    p: float = 2.0
    T: float = 1.0
    steps: tuple = field(default_factory=default_steps)
    samples: int = 2000
    seed: int = 0
    reference: str = EXACT
    confidence: float = 0.95
    fit_rows: int = 6

    def __post_init__(self):
        if not isinstance(self.integrand, str):
            object.__setattr__(self, "integrand", self.integrand.spec())
        g = parse_integrand(self.integrand)
        if self.rule not in (SRM, TRAP):
            raise ValueError(f"rule must be 'srm' or 'trap', got {self.rule!r}")
        if self.rule == TRAP and not isinstance(g, Integrand):
            raise ValueError("the trapezoidal rule needs a deterministic integrand")
        check_unit_interval(self.theta, "theta")
        if check_positive(self.p, "p") < 1:
            raise ValueError(f"p must be >= 1, got {self.p}")
        T = check_positive(self.T, "T")
        steps = tuple(float(h) for h in self.steps)
        if not steps:
            raise ValueError("at least one step size is required")
        for h in steps:
            check_positive(h, "step size")
            if h > T * (1 + 1e-12):
                raise ValueError(f"step size {h} exceeds T = {T}")
            n = round(T / h)
            if abs(n * h - T) > 1e-9 * T:
                raise ValueError(f"T / h must be an integer, got T={T}, h={h}")
        object.__setattr__(self, "steps", tuple(sorted(steps, reverse=True)))
        check_int(self.samples, "samples", min_value=2)
        check_int(self.seed, "seed", min_value=0)
        parse_reference(self.reference)
        if not 0 < self.confidence < 1:
            raise ValueError(f"confidence must lie in (0, 1), got {self.confidence}")
        check_int(self.fit_rows, "fit_rows", min_value=2)

    def grid_sizes(self):
        return [round(self.T / h) for h in self.steps]

    def to_dict(self):
        d = asdict(self)
        d["steps"] = list(self.steps)
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d["steps"] = tuple(d["steps"])
        return cls(**d)


@dataclass(frozen=True)
class ConvergenceRow:
    h: float
    error: float
    eoc: float | None
    ci_low: float
    ci_high: float
    N: int
    samples: int


@dataclass
class StudyResult:
    config: ExperimentConfig
    rows: list
    slope: float | None
    intercept: float | None
    wall_time: float
    realizations: list = field(default_factory=list, repr=False)

    def mean_eoc(self):
        values = [r.eoc for r in self.rows if r.eoc is not None]
        return float(np.mean(values)) if values else None


def run_sample(config, N, stream):
    """One realization of the absolute quadrature error on ``N`` intervals."""
    g = parse_integrand(config.integrand)
    mode, factor = parse_reference(config.reference)
    if config.rule == SRM:
        sample = srm_integrate(g, config.T, N, stream, reference=mode, factor=factor or DEFAULT_FACTOR)
    else:
        sample = trap_integrate(
            g, config.T, N, stream, theta=config.theta, reference=mode, factor=factor or DEFAULT_FACTOR
        )
    return sample.error


def lp_error(realizations, p=2.0):
    """``(mean |e|^p)^(1/p)``."""
    e = np.abs(np.asarray(realizations, dtype=float))
    if e.size == 0:
        raise ValueError("need at least one realization")
    return float(np.mean(e**p) ** (1.0 / p))


def confidence_interval(realizations, p=2.0, level=0.95):
    """CLT interval for ``mean |e|^p`` mapped through the ``p``-th root.

    A negative lower end is clamped to zero before taking the root.
    """
    e = np.abs(np.asarray(realizations, dtype=float))
    n = e.size
    if n < 2:
        raise ValueError("need at least two realizations")
    if n < 30:
        warnings.warn(f"CLT interval from only {n} samples", RuntimeWarning, stacklevel=2)
    ep = e**p
    mean = np.mean(ep)
    half = stats.norm.ppf(0.5 + level / 2) * np.std(ep, ddof=1) / math.sqrt(n)
    lo = max(mean - half, 0.0)
    return float(lo ** (1.0 / p)), float((mean + half) ** (1.0 / p))


def eoc(error_coarse, error_fine, h_coarse, h_fine):
    """Empirical order of convergence between two rows."""
    for name, v in (
        ("error_coarse", error_coarse),
        ("error_fine", error_fine),
        ("h_coarse", h_coarse),
        ("h_fine", h_fine),
    ):
        if not v > 0:
            raise ValueError(f"{name} must be positive, got {v}")
    if h_coarse == h_fine:
        raise ValueError("step sizes must differ")
    return math.log(error_coarse / error_fine) / math.log(h_coarse / h_fine)


def fit_order(rows, last=None):
    """Least-squares fit of ``log(error)`` on ``log(h)``.

    Uses the ``last`` finest rows when given. Returns ``(slope, intercept)``.
    """
    rows = sorted(rows, key=lambda r: r.h, reverse=True)
    if last is not None:
        rows = rows[-last:]
    if len(rows) < 3:
        raise ValueError(f"need at least 3 rows to fit an order, got {len(rows)}")
    h = np.array([r.h for r in rows])
    err = np.array([r.error for r in rows])
    if np.any(err <= 0) or np.any(h <= 0):
        raise ValueError("errors and step sizes must be positive")
    if np.unique(h).size < 2:
        raise ValueError("step sizes must not all coincide")
    slope, intercept = np.polyfit(np.log(h), np.log(err), 1)
    return float(slope), float(intercept)


def _run_chunk(config, N, start, stop):
    return np.array([run_sample(config, N, RngStream(config.seed, i, family=N)) for i in range(start, stop)])


def _chunks(n, size):
    return [(a, min(a + size, n)) for a in range(0, n, size)]


def run_convergence_study(config, n_jobs=1, chunk_size=250, keep_realizations=False):
    """Run every step size of ``config`` and return a :class:`StudyResult`."""
    t0 = time.perf_counter()
    sizes = config.grid_sizes()
    tasks = [(N, a, b) for N in sizes for a, b in _chunks(config.samples, chunk_size)]
    if n_jobs == 1:
        parts = [_run_chunk(config, N, a, b) for N, a, b in tasks]
    else:
        parts = Parallel(n_jobs=n_jobs)(delayed(_run_chunk)(config, N, a, b) for N, a, b in tasks)
    per_size = {N: [] for N in sizes}
    for (N, _, _), part in zip(tasks, parts):
        per_size[N].append(part)

    rows, kept = [], []
    prev = None
    for h, N in zip(config.steps, sizes):
        e = np.concatenate(per_size[N])
        err = lp_error(e, config.p)
        lo, hi = confidence_interval(e, config.p, config.confidence)
        rate = None
        if prev is not None and prev.error > 0 and err > 0:
            rate = eoc(prev.error, err, prev.h, h)
        row = ConvergenceRow(h, err, rate, lo, hi, N, config.samples)
        rows.append(row)
        prev = row
        if keep_realizations:
            kept.append(e)

    slope = intercept = None
    fit_rows = [r for r in rows if r.error > 0][-config.fit_rows :]
    if len(fit_rows) >= 3:
        slope, intercept = fit_order(fit_rows)
    return StudyResult(config, rows, slope, intercept, time.perf_counter() - t0, kept)


def _fmt(x):
    return "" if x is None else f"{x:.10g}"


def rows_to_csv(rows):
    """CSV text with columns ``h,error,eoc,ci_low,ci_high`` and LF endings."""
    lines = ["h,error,eoc,ci_low,ci_high"]
    for r in rows:
        lines.append(",".join(_fmt(v) for v in (r.h, r.error, r.eoc, r.ci_low, r.ci_high)))
    return "\n".join(lines) + "\n"


def format_table(rows, title=None, level=0.95):
    out = []
    if title:
        out.append(title)
    pct = f"{100 * level:g}% conf. interval"
    out.append(f"{'h':>10}  {'error':>10}  {'EOC':>5}  {pct}")
    for r in rows:
        rate = f"{r.eoc:5.2f}" if r.eoc is not None else " " * 5
        out.append(f"{r.h:10.4f}  {r.error:10.5f}  {rate}  [{r.ci_low:.5f}, {r.ci_high:.5f}]")
    return "\n".join(out)


class ConvergenceStudy(BaseEstimator):
    """Estimator-style front end for :func:`run_convergence_study`.

    Parameters mirror :class:`ExperimentConfig`; ``steps=None`` means
    ``h = T * 2**-i`` for ``i = 3..10``. After :meth:`fit` the rows are in
    ``rows_`` and the least-squares order in ``order_``.

    >>> study = ConvergenceStudy("affine:a0=1,a1=2", rule="trap", steps=[0.5, 0.25, 0.125], samples=30)
    >>> max(r.error for r in study.fit().rows_) < 1e-12
    True
    """

    def __init__(
        self,
        integrand="sine:lambda=42",
        rule=SRM,
        theta=0.0,
        p=2.0,
        T=1.0,
        steps=None,
        samples=2000,
        seed=0,
        reference=EXACT,
        confidence=0.95,
        fit_rows=6,
        n_jobs=1,
    ):
        self.integrand = integrand
        self.rule = rule
        self.theta = theta
        self.p = p
        self.T = T
        self.steps = steps
        self.samples = samples
        self.seed = seed
        self.reference = reference
        self.confidence = confidence
        self.fit_rows = fit_rows
        self.n_jobs = n_jobs

    def _config(self, integrand):
        steps = default_steps(self.T) if self.steps is None else tuple(self.steps)
        return ExperimentConfig(
            integrand,
            self.rule,
            self.theta,
            self.p,
            self.T,
            steps,
            self.samples,
            self.seed,
            self.reference,
            self.confidence,
            self.fit_rows,
        )

    def fit(self, X=None, y=None):
        self.config_ = self._config(self.integrand if X is None else X)
        self.result_ = run_convergence_study(self.config_, n_jobs=self.n_jobs)
        self.rows_ = self.result_.rows
        self.order_ = self.result_.slope
        self.intercept_ = self.result_.intercept
        return self

    def to_csv(self):
        return rows_to_csv(self.rows_)
