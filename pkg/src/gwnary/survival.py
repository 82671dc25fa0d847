"""Iterates of g_N from 0 and the conditional survival curve.

gamma_seq[t] = g_N applied t times to 0 is the probability that no complete
N-ary subtree of height t hangs from the root. Conditional on no infinite
one, a height-t subtree survives with probability (gamma - gamma_seq[t])/gamma.

The gap e_t = gamma - gamma_seq[t] is carried separately through

    e_{t+1} = g_N(gamma) - g_N(gamma - e_t) = integral of g_N' over [gamma - e_t, gamma]

evaluated by Gauss-Legendre quadrature, so it keeps full relative precision
long after gamma - gamma_seq[t] has cancelled to rounding noise.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from gwnary.errors import ClassMismatchError, DegenerateRootError, WindowTooSmallError
from gwnary.solve import Criticality, RootReport
from gwnary.subtree_gf import SubtreeGF

__all__ = [
    "SurvivalCurve",
    "AsymptoteFit",
    "iterate_survival",
    "fit_asymptote",
    "law_prediction",
    "T_MAX",
]

T_MAX = 10_000
GAP_STOP = 1e-14
SUBCRITICAL_WINDOW = 20
SUBCRITICAL_MIN_WINDOW = 5
SUBCRITICAL_GAP_FLOOR = 1e-12
# cond_survival range used for the second-order residual check
RESIDUAL_RANGE = (1e-7, 1e-1)

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(24)


@dataclass
class SurvivalCurve:
    N: int
    t_max: int
    gamma_seq: np.ndarray
    cond_survival: np.ndarray
    gamma: float
    cls: Criticality
    gap: np.ndarray = field(repr=False)

    def to_dict(self):
        return {
            "N": self.N,
            "t_max": self.t_max,
            "gamma": self.gamma,
            "class": self.cls.value,
            "gamma_seq": [float(x) for x in self.gamma_seq],
            "cond_survival": [float(x) for x in self.cond_survival],
            "gap": [float(x) for x in self.gap],
        }

    @classmethod
    def from_dict(cls, data):
        return cls(
            N=int(data["N"]),
            t_max=int(data["t_max"]),
            gamma_seq=np.asarray(data["gamma_seq"], dtype=float),
            cond_survival=np.asarray(data["cond_survival"], dtype=float),
            gamma=float(data["gamma"]),
            cls=Criticality(data["class"]),
            gap=np.asarray(data["gap"], dtype=float),
        )

    def __eq__(self, other):
        if not isinstance(other, SurvivalCurve):
            return NotImplemented
        return (
            self.N == other.N
            and self.t_max == other.t_max
            and self.gamma == other.gamma
            and self.cls == other.cls
            and np.array_equal(self.gamma_seq, other.gamma_seq)
            and np.array_equal(self.cond_survival, other.cond_survival)
            and np.array_equal(self.gap, other.gap)
        )


@dataclass(frozen=True)
class AsymptoteFit:
    """Tail law of the conditional survival curve.

    ``model`` is "geometric" (cond ~ d a^t; ``rate`` and ``d`` are fitted) or
    "critical-reciprocal" (cond ~ C/t). ``fitted_constant`` is d for the
    geometric model and the limit of t * cond for the reciprocal one;
    ``predicted_constant`` is 2/(gamma b) in the latter case. ``tail_value``
    is the last observed ratio cond[t+1]/cond[t] (geometric) or t * cond[t]
    at the window end (reciprocal).
    """

    model: str
    fitted_constant: float
    fit_window: tuple[int, int]
    max_rel_residual: float
    rate: float | None = None
    d: float | None = None
    predicted_constant: float | None = None
    tail_value: float | None = None
    second_order_constant: float | None = None

    def to_dict(self):
        return {
            "model": self.model,
            "fitted_constant": self.fitted_constant,
            "fit_window": list(self.fit_window),
            "max_rel_residual": self.max_rel_residual,
            "rate": self.rate,
            "d": self.d,
            "predicted_constant": self.predicted_constant,
            "tail_value": self.tail_value,
            "second_order_constant": self.second_order_constant,
        }

    @classmethod
    def from_dict(cls, data):
        opt = lambda key: None if data.get(key) is None else float(data[key])  # noqa: E731
        return cls(
            model=str(data["model"]),
            fitted_constant=float(data["fitted_constant"]),
            fit_window=(int(data["fit_window"][0]), int(data["fit_window"][1])),
            max_rel_residual=float(data["max_rel_residual"]),
            rate=opt("rate"),
            d=opt("d"),
            predicted_constant=opt("predicted_constant"),
            tail_value=opt("tail_value"),
            second_order_constant=opt("second_order_constant"),
        )


def _next_gap(gf, gamma, e):
    lo = gamma - e
    half = 0.5 * e
    nodes = lo + half * (_GL_NODES + 1.0)
    np.clip(nodes, 0.0, 1.0, out=nodes)
    return half * float(np.dot(_GL_WEIGHTS, gf.g_prime(nodes)))


def iterate_survival(gf: SubtreeGF, root: RootReport, t_max: int = T_MAX) -> SurvivalCurve:
    """gamma_{N,t} for t = 0..t_max (fewer if the gap drops below 1e-14)."""
    if t_max < 1:
        raise ValueError(f"t_max must be >= 1, got {t_max}")
    if root.cls is Criticality.DEGENERATE or root.gamma <= 0.0:
        raise DegenerateRootError(
            f"conditional survival needs a root in (0, 1] that is not degenerate; got gamma={root.gamma}, "
            f"class={root.cls.value}"
        )
    gamma = root.gamma
    seq = [0.0]
    gaps = [gamma]
    x, e = 0.0, gamma
    for _ in range(t_max):
        x = gf.g(x)
        e = _next_gap(gf, gamma, e)
        seq.append(x)
        gaps.append(e)
        if e < GAP_STOP:
            break
    gap = np.asarray(gaps)
    return SurvivalCurve(
        N=gf.N,
        t_max=len(seq) - 1,
        gamma_seq=np.asarray(seq),
        cond_survival=gap / gamma,
        gamma=gamma,
        cls=root.cls,
        gap=gap,
    )


def _fit_geometric(curve, root):
    cond = curve.cond_survival
    eligible = np.flatnonzero(curve.gap > SUBCRITICAL_GAP_FLOOR)
    eligible = eligible[eligible >= 1]
    if eligible.size < SUBCRITICAL_MIN_WINDOW:
        raise WindowTooSmallError(
            f"need {SUBCRITICAL_MIN_WINDOW} points with gap > {SUBCRITICAL_GAP_FLOOR}, have {eligible.size}"
        )
    # fast decay (small a) can leave fewer than SUBCRITICAL_WINDOW such points
    window = eligible[-SUBCRITICAL_WINDOW:]
    t = window.astype(float)
    slope, intercept = np.polyfit(t, np.log(cond[window]), 1)
    rate = math.exp(slope)
    fitted = math.exp(intercept) * rate**t
    max_rel = float(np.max(np.abs(cond[window] - fitted) / fitted))
    last_ratio = float(cond[window[-1]] / cond[window[-2]])

    # d = lim cond[t] / a^t, read off at the window end where the O(a^t)
    # relative correction is smallest; a regression intercept over a short
    # window that starts at t=1 is biased by that correction
    a = root.a
    t_end = int(window[-1])
    d = float(cond[t_end] / a**t_end)
    ts = np.arange(1, curve.t_max + 1)
    mask = (cond[ts] >= RESIDUAL_RANGE[0]) & (cond[ts] <= RESIDUAL_RANGE[1])
    c2 = None
    if np.count_nonzero(mask) >= 3:
        ts = ts[mask]
        resid = cond[ts] - d * a**ts
        basis = a ** (2.0 * ts)
        c2 = float(np.dot(resid, basis) / np.dot(basis, basis))
    return AsymptoteFit(
        model="geometric",
        fitted_constant=d,
        fit_window=(int(window[0]), int(window[-1])),
        max_rel_residual=max_rel,
        rate=rate,
        d=d,
        tail_value=last_ratio,
        second_order_constant=c2,
    )


def _fit_reciprocal(curve, root):
    t_hi = curve.t_max
    t_lo = t_hi // 2
    if t_hi - t_lo < 2 or t_lo < 1:
        raise WindowTooSmallError(f"critical fit window [{t_lo}, {t_hi}] is too small")
    inv = 1.0 / curve.gap[t_lo : t_hi + 1]
    diffs = np.diff(inv)
    target = root.b / 2.0
    max_rel = float(np.max(np.abs(diffs - target)) / target)
    ts = np.arange(t_lo, t_hi + 1, dtype=float)
    slope, _ = np.polyfit(ts, inv, 1)
    gamma = curve.gamma
    return AsymptoteFit(
        model="critical-reciprocal",
        fitted_constant=float(1.0 / (gamma * slope)),
        fit_window=(t_lo, t_hi),
        max_rel_residual=max_rel,
        predicted_constant=float(2.0 / (gamma * root.b)),
        tail_value=float(t_hi * curve.cond_survival[t_hi]),
    )


def fit_asymptote(curve: SurvivalCurve, root: RootReport) -> AsymptoteFit:
    """Fit the tail law matching the root's class."""
    if curve.cls is not root.cls:
        raise ClassMismatchError(f"curve is {curve.cls.value} but root is {root.cls.value}")
    if curve.cls is Criticality.SUBCRITICAL:
        return _fit_geometric(curve, root)
    if curve.cls is Criticality.CRITICAL:
        return _fit_reciprocal(curve, root)
    raise ClassMismatchError(f"no asymptotic law for class {curve.cls.value}")


def law_prediction(fit: AsymptoteFit, root: RootReport, t):
    """Tail law at t: d a^t, or 2/(gamma b t) (nan at t=0)."""
    t = np.asarray(t, dtype=float)
    if fit.model == "geometric":
        return fit.d * root.a**t
    with np.errstate(divide="ignore"):
        out = np.where(t > 0, 2.0 / (root.gamma * root.b * np.where(t > 0, t, 1.0)), np.nan)
    return out
