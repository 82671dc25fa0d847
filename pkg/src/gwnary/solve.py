"""Smallest root of s = g_N(s) on [0, 1], its derivatives, and classification.

The root is bracketed by the first sign change of d(s) = g_N(s) - s on a
uniform grid and refined by bisection. When d stays positive on [0, 1) the
curve may still touch the diagonal; that tangency is located by golden-section
minimisation of d, then sharpened by solving g_N'(s) = 1, whose root is
simple even though the root of d is double.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from gwnary.errors import DomainError, InconsistencyError, InvalidToleranceError, NonConvergenceError
from gwnary.subtree_gf import SubtreeGF

__all__ = [
    "Criticality",
    "RootReport",
    "smallest_root",
    "classify",
    "pemantle_bound",
    "GRID_SIZE",
    "TOL",
    "TANGENCY_THRESHOLD",
    "TAU",
]

GRID_SIZE = 4096
TOL = 1e-12
TANGENCY_THRESHOLD = 1e-9
TAU = 1e-6
# |d| below this is indistinguishable from zero in double precision; a
# stationary point of d this close to the diagonal is taken as the root
_NOISE_FLOOR = 1e-14
_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


class Criticality(str, enum.Enum):
    DEGENERATE = "degenerate"
    SUBCRITICAL = "subcritical"
    CRITICAL = "critical"
    # only reachable for boundary roots (gamma == 0), where a > 1 is allowed
    SUPERCRITICAL = "supercritical"


@dataclass(frozen=True)
class RootReport:
    gamma: float
    a: float
    b: float
    cls: Criticality
    bracket: tuple[float, float]
    tol: float
    boundary: bool = False

    def to_dict(self):
        return {
            "gamma": self.gamma,
            "a": self.a,
            "b": self.b,
            "class": self.cls.value,
            "bracket": list(self.bracket),
            "tol": self.tol,
            "boundary": self.boundary,
        }

    @classmethod
    def from_dict(cls, data):
        return cls(
            gamma=float(data["gamma"]),
            a=float(data["a"]),
            b=float(data["b"]),
            cls=Criticality(data["class"]),
            bracket=(float(data["bracket"][0]), float(data["bracket"][1])),
            tol=float(data["tol"]),
            boundary=bool(data.get("boundary", False)),
        )


def _d(gf, s):
    return gf.g(s) - s


def _bisect(fn, lo, hi, tol, max_iter=200):
    """Bisection for fn(lo) > 0 >= fn(hi); returns the final bracket."""
    for _ in range(max_iter):
        if hi - lo <= tol:
            return lo, hi
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            return lo, hi
        if fn(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    raise NonConvergenceError(f"bisection did not shrink [{lo}, {hi}] below {tol}")


def _golden_min(fn, lo, hi, tol):
    c = hi - _INV_PHI * (hi - lo)
    d = lo + _INV_PHI * (hi - lo)
    fc, fd = fn(c), fn(d)
    while hi - lo > tol:
        if fc <= fd:
            hi, d, fd = d, c, fc
            c = hi - _INV_PHI * (hi - lo)
            fc = fn(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + _INV_PHI * (hi - lo)
            fd = fn(d)
    return (c, fc) if fc <= fd else (d, fd)


def _stationary_point(gf, s0, lo_bound, hi_bound, max_width=1e-2):
    """Root of g_N'(s) = 1 near s0, or None if no bracket is found."""
    def slope(s):
        return gf.g_prime(s) - 1.0

    f0 = slope(s0)
    if f0 == 0.0:
        return s0
    width = 1e-9
    while width <= max_width:
        lo = max(lo_bound, s0 - width)
        hi = min(hi_bound, s0 + width)
        flo, fhi = slope(lo), slope(hi)
        # d' = g' - 1 increases through a local minimum of d
        if flo <= 0.0 <= fhi:
            a, b = lo, hi
            break
        width *= 4.0
    else:
        return None
    # keep slope(a) <= 0 <= slope(b)
    for _ in range(200):
        mid = 0.5 * (a + b)
        if mid <= a or mid >= b:
            break
        if slope(mid) <= 0.0:
            a = mid
        else:
            b = mid
    return 0.5 * (a + b)


def _newton_polish(gf, s, lo, hi, steps=3):
    """A few guarded Newton steps on d inside [lo, hi]."""
    for _ in range(steps):
        slope = gf.g_prime(s) - 1.0
        if slope == 0.0:
            break
        nxt = s - _d(gf, s) / slope
        if not lo <= nxt <= hi:
            break
        if abs(_d(gf, nxt)) > abs(_d(gf, s)):
            break
        s = nxt
    return s


def smallest_root(gf: SubtreeGF, tol: float = TOL, *, grid_size: int = GRID_SIZE,
                  tangency_threshold: float = TANGENCY_THRESHOLD, tau: float = TAU) -> RootReport:
    """Least s in [0, 1] with g_N(s) = s, classified."""
    if not (tol > 0.0 and math.isfinite(tol)):
        raise InvalidToleranceError(f"tol must be positive, got {tol!r}")

    d0 = _d(gf, 0.0)
    if d0 <= 0.0:
        return classify(gf, 0.0, tau, bracket=(0.0, 0.0), tol=tol)

    grid = np.linspace(0.0, 1.0, grid_size + 1)[:-1]  # s = 1 is always a root
    dvals = gf.g(grid) - grid
    nonpos = np.flatnonzero(dvals <= 0.0)

    if nonpos.size:
        i = nonpos[0]
        lo, hi = _bisect(lambda s: _d(gf, s), grid[i - 1], grid[i], tol)
        root = _newton_polish(gf, hi, grid[i - 1], grid[i])
        if abs(gf.g_prime(root) - 1.0) < 1e-3:
            # near-double root: the crossing found by bisection may be rounding noise
            c = _stationary_point(gf, root, 0.0, 1.0)
            if c is not None and abs(_d(gf, c)) <= _NOISE_FLOOR:
                root = c
                lo, hi = min(lo, c), max(hi, c)
        return classify(gf, root, tau, bracket=(lo, hi), tol=tol)

    # no crossing in [0, 1): tangency at 1 (classical critical case) ...
    if abs(gf.g_prime(1.0) - 1.0) <= tau:
        return classify(gf, 1.0, tau, bracket=(grid[-1], 1.0), tol=tol)

    # ... or an interior tangency
    k = int(np.argmin(dvals))
    lo = grid[max(k - 1, 0)]
    hi = grid[k + 1] if k + 1 < grid.size else grid[-1] + 0.5 / grid_size
    s_min, d_min = _golden_min(lambda s: _d(gf, s), lo, hi, 1e-10)
    if d_min <= tangency_threshold:
        # a small d at the edge s = 0 with d' > 0 is not a touching point
        c = _stationary_point(gf, s_min, lo, hi)
        if c is not None and _d(gf, c) <= tangency_threshold and gf.g_double_prime(c) > 0.0:
            return classify(gf, c, tau, bracket=(lo, hi), tol=tol, tangency=True)
    return RootReport(
        gamma=1.0,
        a=gf.g_prime(1.0),
        b=gf.g_double_prime(1.0),
        cls=Criticality.DEGENERATE,
        bracket=(1.0, 1.0),
        tol=tol,
        boundary=True,
    )


def classify(gf: SubtreeGF, gamma: float, tau: float = TAU, *, bracket=None, tol: float = TOL,
             tangency: bool = False) -> RootReport:
    """Evaluate a = g_N'(gamma), b = g_N''(gamma) and assign the class.

    For gamma in (0, 1) a must not exceed 1 + tau; a larger value means the
    supplied gamma is not the smallest root. ``tangency`` marks a root found
    without a sign change, which is critical by construction.
    """
    if not 0.0 <= gamma <= 1.0:
        raise DomainError(f"gamma must lie in [0, 1], got {gamma}")
    a = gf.g_prime(gamma)
    b = gf.g_double_prime(gamma)
    boundary = gamma in (0.0, 1.0)
    if abs(a - 1.0) <= tau or (tangency and not boundary):
        cls = Criticality.CRITICAL
    elif a < 1.0 - tau:
        cls = Criticality.DEGENERATE if gamma == 1.0 else Criticality.SUBCRITICAL
    elif boundary:
        cls = Criticality.SUPERCRITICAL
    else:
        raise InconsistencyError(
            f"g_N'({gamma}) = {a} exceeds 1 + {tau}; gamma is not the smallest root"
        )
    if cls is Criticality.CRITICAL and not boundary and not b > 0.0:
        # a tangency has b > 0; with b <= 0 the root is a transversal crossing
        # whose slope merely lies inside the tau band
        if a < 1.0 and not tangency:
            cls = Criticality.SUBCRITICAL
        else:
            raise InconsistencyError(f"critical root with nonpositive g_N'' = {b}")
    if bracket is None:
        bracket = (gamma, gamma)
    return RootReport(
        gamma=float(gamma),
        a=float(a),
        b=float(b),
        cls=cls,
        bracket=(float(bracket[0]), float(bracket[1])),
        tol=tol,
        boundary=boundary,
    )


def pemantle_bound(gf: SubtreeGF, s0: float) -> bool:
    """True iff g_N(s0) <= s0, which certifies gamma_N <= s0."""
    if not 0.0 < s0 < 1.0:
        raise DomainError(f"s0 must lie in (0, 1), got {s0}")
    return gf.g(s0) <= s0
