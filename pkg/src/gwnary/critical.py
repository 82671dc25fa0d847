"""Critical parameter of a one-parameter offspring family.

Above the critical value the smallest root of s = g_N(s) drops below 1. The
threshold is bracketed by bisection on that predicate and then polished by
Newton's method on the tangency system

    g_N(s; theta) - s = 0,     g_N'(s; theta) - 1 = 0

in the unknowns (s, theta).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from gwnary.errors import DomainError, NoSignChangeError, NonConvergenceError, SpecError
from gwnary.offspring import Binomial, Geometric, OffspringSpec, OneOrMany, Poisson
from gwnary.solve import Criticality, smallest_root
from gwnary.subtree_gf import SubtreeGF

__all__ = [
    "ParametricFamily",
    "CriticalReport",
    "geometric_family",
    "poisson_family",
    "one_or_many_family",
    "binomial_family",
    "find_critical",
    "one_or_many_closed_form",
]

MAX_BISECTIONS = 40
NEWTON_MAX_ITER = 100
NEWTON_RESIDUAL = 1e-12


@dataclass(frozen=True)
class ParametricFamily:
    """A family indexed by one real parameter.

    ``lower``/``upper`` are the open bounds of the valid parameter range and
    ``default_range`` is the search interval used when none is given.
    """

    name: str
    param_name: str
    build: Callable[[float], OffspringSpec]
    mean: Callable[[float], float]
    lower: float
    upper: float
    default_range: tuple[float, float]


def geometric_family() -> ParametricFamily:
    return ParametricFamily(
        name="geometric",
        param_name="p",
        build=Geometric,
        mean=lambda p: p / (1.0 - p),
        lower=0.0,
        upper=1.0,
        default_range=(0.05, 0.999),
    )


def poisson_family() -> ParametricFamily:
    return ParametricFamily(
        name="poisson",
        param_name="m",
        build=Poisson,
        mean=lambda m: m,
        lower=0.0,
        upper=math.inf,
        default_range=(0.5, 100.0),
    )


def one_or_many_family(r: int) -> ParametricFamily:
    return ParametricFamily(
        name=f"one-or-many(r={r})",
        param_name="p",
        build=lambda p: OneOrMany(p, r),
        mean=lambda p: (1.0 - p) + r * p,
        lower=0.0,
        upper=1.0,
        default_range=(0.01, 0.999),
    )


def binomial_family(n: int) -> ParametricFamily:
    return ParametricFamily(
        name=f"binomial(n={n})",
        param_name="p",
        build=lambda p: Binomial(n, p),
        mean=lambda p: n * p,
        lower=0.0,
        upper=1.0,
        default_range=(0.01, 0.9999),
    )


@dataclass(frozen=True)
class CriticalReport:
    param_name: str
    param_critical: float
    mean_critical: float
    gamma_critical: float
    a_at_critical: float
    b_at_critical: float
    tol: float

    def to_dict(self):
        return {
            "param_name": self.param_name,
            "param_critical": self.param_critical,
            "mean_critical": self.mean_critical,
            "gamma_critical": self.gamma_critical,
            "a_at_critical": self.a_at_critical,
            "b_at_critical": self.b_at_critical,
            "tol": self.tol,
        }

    @classmethod
    def from_dict(cls, data):
        return cls(
            param_name=str(data["param_name"]),
            **{k: float(data[k]) for k in (
                "param_critical", "mean_critical", "gamma_critical",
                "a_at_critical", "b_at_critical", "tol",
            )},
        )


def _survives(family, N, theta):
    report = smallest_root(SubtreeGF(family.build(theta), N))
    return report.cls is not Criticality.DEGENERATE, report


def _tangency_residual(family, N, s, theta):
    gf = SubtreeGF(family.build(theta), N)
    return np.array([gf.g(s) - s, gf.g_prime(s) - 1.0]), gf


def _theta_step(family, theta):
    h = 1e-6 * max(1.0, abs(theta))
    lo, hi = theta - h, theta + h
    # stay inside the open parameter range
    room = 0.5 * min(theta - family.lower, family.upper - theta)
    if h > room:
        lo, hi = theta - room, theta + room
    return lo, hi


def _polish(family, N, s, theta):
    """Damped Newton on the tangency system; returns (s, theta)."""
    res, gf = _tangency_residual(family, N, s, theta)
    norm = np.max(np.abs(res))
    for _ in range(NEWTON_MAX_ITER):
        lo, hi = _theta_step(family, theta)
        gf_lo = SubtreeGF(family.build(lo), N)
        gf_hi = SubtreeGF(family.build(hi), N)
        dg_dtheta = (gf_hi.g(s) - gf_lo.g(s)) / (hi - lo)
        dgp_dtheta = (gf_hi.g_prime(s) - gf_lo.g_prime(s)) / (hi - lo)
        jac = np.array([
            [gf.g_prime(s) - 1.0, dg_dtheta],
            [gf.g_double_prime(s), dgp_dtheta],
        ])
        try:
            step = np.linalg.solve(jac, -res)
        except np.linalg.LinAlgError as exc:
            raise NonConvergenceError("singular Jacobian in tangency polish") from exc
        damping = 1.0
        for _ in range(60):
            s_new = s + damping * step[0]
            t_new = theta + damping * step[1]
            if 0.0 < s_new < 1.0 and family.lower < t_new < family.upper:
                res_new, gf_new = _tangency_residual(family, N, s_new, t_new)
                norm_new = np.max(np.abs(res_new))
                if norm_new <= norm or norm <= NEWTON_RESIDUAL:
                    break
            damping *= 0.5
        else:
            break
        moved = max(abs(s_new - s), abs(t_new - theta))
        s, theta, res, gf, norm = s_new, t_new, res_new, gf_new, norm_new
        if norm <= NEWTON_RESIDUAL and moved <= 4e-16 * max(1.0, abs(theta)):
            break
    if norm > NEWTON_RESIDUAL:
        raise NonConvergenceError(f"tangency polish stalled at residual {norm:.3e}")
    return s, theta


def find_critical(family: ParametricFamily, N: int, param_range=None, tol: float = 1e-12) -> CriticalReport:
    """Threshold parameter at which an infinite N-ary subtree becomes possible.

    Assumes a single threshold inside ``param_range``; only the endpoints are
    checked.
    """
    lo, hi = param_range if param_range is not None else family.default_range
    lo, hi = float(lo), float(hi)
    if not lo < hi:
        raise DomainError(f"empty parameter range [{lo}, {hi}]")
    try:
        up_lo, _ = _survives(family, N, lo)
        up_hi, report_hi = _survives(family, N, hi)
    except SpecError as exc:
        raise DomainError(f"parameter range [{lo}, {hi}] is invalid for {family.name}: {exc}") from exc
    if up_lo == up_hi:
        raise NoSignChangeError(
            f"{family.name}, N={N}: both ends of [{lo}, {hi}] are "
            f"{'non-degenerate' if up_lo else 'degenerate'}"
        )
    # live: gamma < 1 there; dead: degenerate
    live, dead = (hi, lo) if up_hi else (lo, hi)
    live_report = report_hi if up_hi else None
    for _ in range(MAX_BISECTIONS):
        mid = 0.5 * (live + dead)
        up_mid, report_mid = _survives(family, N, mid)
        if up_mid:
            live, live_report = mid, report_mid
        else:
            dead = mid
    if live_report is None:
        live_report = smallest_root(SubtreeGF(family.build(live), N))
    s, theta = _polish(family, N, live_report.gamma, live)
    gf = SubtreeGF(family.build(theta), N)
    return CriticalReport(
        param_name=family.param_name,
        param_critical=float(theta),
        mean_critical=float(family.mean(theta)),
        gamma_critical=float(s),
        a_at_critical=float(gf.g_prime(s)),
        b_at_critical=float(gf.g_double_prime(s)),
        tol=tol,
    )


def one_or_many_closed_form(N: int) -> tuple[float, float]:
    """(p_c, gamma_c) for the one-or-many family with r = N + 1."""
    if int(N) != N or N < 2:
        raise DomainError(f"N must be an integer >= 2, got {N!r}")
    p_c = (1.0 - 1.0 / N) * (1.0 - 1.0 / N**2) ** (-N)
    return p_c, 1.0 / N**2
