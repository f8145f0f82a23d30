"""
Reference optimizers and empirical convergence checks for the OFO loop.

``optimal_q_analytic`` solves the one-dimensional problem in closed form;
``optimal_q_bruteforce`` evaluates the cost through the steady-state current
map on a grid and is kept deliberately independent of it.  The remaining
functions measure the contraction of the OFO iterate towards the moving
optimum and compare it against the recursive and asymptotic bounds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    AssumptionViolated,
    Infeasible,
    InsufficientTimescaleSeparation,
    InvalidArgument,
    NoContraction,
)
from .inner import Limits
from .ofo import DisturbanceSample, FeasibleInterval, cost

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
SLACK = 1e-9


@dataclass(frozen=True)
class ConvergenceRecord:
    """Per-trigger convergence quantities.

    ``inner_residual`` is the current-tracking error at the sample preceding
    the trigger, ``delta_Qopt`` the change of the optimum to the next trigger.
    """

    k: int
    psi: float
    epsilon: float
    delta_Qopt: float
    inner_residual: float
    v_norm: float
    bound_rhs: float = math.nan


@dataclass(frozen=True)
class InnerLoopConstants:
    """Exponential-stability constants of the inner loop.

    ``C1_fit`` is the raw ``exp(intercept) / e(0)`` of the log-linear fit;
    ``C1`` is the admissible value actually used in the bounds.
    """

    C1: float
    C2: float
    C3: float = math.nan
    residual: float = 0.0
    C1_fit: float = math.nan

    @property
    def per_tick(self) -> float:
        """One-step decay factor C1 * exp(-C2)."""
        return self.C1 * math.exp(-self.C2)


def _require(I: FeasibleInterval):
    if not I.nonempty:
        raise Infeasible(f"empty feasible interval [{I.lo}, {I.hi}]")


def optimal_q_analytic(d: DisturbanceSample, Q_ref: float, gamma: float, I: FeasibleInterval) -> float:
    _require(I)
    n2 = d.v_g.norm_sq()
    q_u = gamma * Q_ref / (gamma + 1.0 / n2)
    return min(max(q_u, I.lo), I.hi)


def golden_section(f, a: float, b: float, tol: float = 1e-12, max_iter: int = 200) -> float:
    """Minimize a unimodal ``f`` on ``[a, b]``."""
    c = b - _GOLDEN * (b - a)
    e = a + _GOLDEN * (b - a)
    fc, fe = f(c), f(e)
    for _ in range(max_iter):
        if abs(b - a) <= tol * max(1.0, abs(a) + abs(b)):
            break
        if fc <= fe:
            b, e, fe = e, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, e, fe
            e = a + _GOLDEN * (b - a)
            fe = f(e)
    return 0.5 * (a + b)


def optimal_q_bruteforce(
    d: DisturbanceSample, Q_ref: float, gamma: float, I: FeasibleInterval, n_grid: int = 1001
) -> float:
    """Grid search of the exact cost over the interval, then golden-section polish."""
    _require(I)
    if n_grid < 3:
        raise InvalidArgument(f"n_grid must be >= 3, got {n_grid}")
    lo, hi = I.lo, I.hi
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise InvalidArgument("brute-force search needs a bounded interval")
    if lo == hi:
        return lo
    grid = np.linspace(lo, hi, n_grid)
    vals = [cost(float(q), d, Q_ref, gamma) for q in grid]
    k = int(np.argmin(vals))
    a = float(grid[max(k - 1, 0)])
    b = float(grid[min(k + 1, n_grid - 1)])
    return golden_section(lambda q: cost(q, d, Q_ref, gamma), a, b)


def psi_metric(Q_star: float, Q_opt: float) -> float:
    return abs(Q_star - Q_opt)


def estimate_inner_loop_constants(
    step_response: Sequence[float],
    C3: float = math.nan,
    floor: float = 1e-9,
    min_samples: int = 20,
) -> InnerLoopConstants:
    """Fit ``log e(k) ~ a - C2 k`` to a tracking-error step response.

    Samples are used from the start of the response until the error drops
    below ``floor * e(0)``.  ``C2`` is minus the fitted slope.  The fitted
    ``exp(intercept) / e(0)`` is raised, if needed, to the smallest constant
    for which ``e(k) <= C1 * e(0) * exp(-C2 k)`` holds on every used sample,
    and to at least 1.
    """
    e = np.asarray(step_response, dtype=float)
    if e.size == 0 or not e[0] > 0:
        raise InvalidArgument("step response must start with a positive error")
    above = e > floor * e[0]
    n = int(np.argmin(above)) if not above.all() else e.size
    if n < min_samples:
        raise InvalidArgument(f"need at least {min_samples} samples above the floor, got {n}")
    k = np.arange(n, dtype=float)
    y = np.log(e[:n])
    slope, intercept = np.polyfit(k, y, 1)
    resid = float(np.sqrt(np.mean((y - (intercept + slope * k)) ** 2)))
    C2 = -float(slope)
    if not C2 > 1e-12:
        raise AssumptionViolated(f"tracking error does not decay (fitted rate {C2:.3g} per tick)")
    C1_fit = math.exp(float(intercept)) / e[0]
    envelope = float(np.max(e[:n] * np.exp(C2 * k))) / e[0]
    C1 = max(1.0, C1_fit, envelope)
    return InnerLoopConstants(C1=C1, C2=C2, C3=C3, residual=resid, C1_fit=C1_fit)


def theorem1_rhs(r: ConvergenceRecord, consts: InnerLoopConstants) -> float:
    t2 = consts.C1 * consts.C3 * r.v_norm * r.inner_residual * math.exp(-consts.C2)
    return abs(r.epsilon) * r.psi + abs(r.delta_Qopt) + t2


@dataclass(frozen=True)
class Theorem1Report:
    n_checked: int
    n_satisfied: int
    worst_margin: float
    max_contraction: float
    passed: bool
    n_skipped: int = 0

    @property
    def fraction(self) -> float:
        return self.n_satisfied / self.n_checked if self.n_checked else 1.0

    def as_dict(self) -> dict:
        return {
            "n_checked": self.n_checked,
            "n_satisfied": self.n_satisfied,
            "n_skipped": self.n_skipped,
            "fraction": self.fraction,
            "worst_margin": self.worst_margin,
            "max_contraction": self.max_contraction,
            "passed": self.passed,
        }


def theorem1_check(
    records: Sequence[ConvergenceRecord],
    consts: InnerLoopConstants,
    m: int,
    slack: float = SLACK,
    psi_floor: float = 0.0,
) -> Theorem1Report:
    """Check the one-trigger recursion on consecutive trigger records.

    Pairs that are not ``m`` ticks apart (gaps left by triggers with an empty
    feasible set) are skipped and counted.  ``max_contraction`` is the largest
    ratio psi(l+1)/psi(l) over pairs with ``psi(l) > psi_floor``.
    """
    ok = n = skipped = 0
    worst = math.inf
    ratio = 0.0
    for r0, r1 in zip(records[:-1], records[1:]):
        if r1.k - r0.k != m:
            skipped += 1
            continue
        n += 1
        margin = theorem1_rhs(r0, consts) - r1.psi
        worst = min(worst, margin)
        if margin >= -slack:
            ok += 1
        if r0.psi > psi_floor:
            ratio = max(ratio, r1.psi / r0.psi)
    return Theorem1Report(n, ok, worst if n else 0.0, ratio, ok == n, skipped)


def corollary1_asymptote(
    consts: InnerLoopConstants, eps_max: float, dQ_max: float, lim: Limits, m: int
) -> float:
    """Asymptotic bound on the distance of the iterate from the optimum."""
    if not eps_max < 1:
        raise NoContraction(f"eps_max = {eps_max} must be < 1")
    sep = consts.C1 * math.exp(-consts.C2 * m)
    if not sep < 1:
        raise InsufficientTimescaleSeparation(f"C1*exp(-C2*m) = {sep:.6g} must be < 1 (m = {m})")
    inner = 0.0
    if consts.C1 != 0:
        inner = 2.0 * consts.C1 * consts.C3 * lim.alpha_q * lim.P_g_max * math.exp(-consts.C2) / (1.0 - sep)
    return (abs(dQ_max) + inner) / (1.0 - eps_max)
