"""Offspring distributions with exact generating functions and derivatives.

Every distribution evaluates its pgf ``f(s) = sum_k p_k s^k`` and the exact
``j``-th derivative on ``[0, 1]``. Arguments may be Python floats or numpy
arrays; array input returns an array of the same shape.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

import numpy as np

from gwnary.errors import DomainError, SpecError

__all__ = [
    "OffspringSpec",
    "Geometric",
    "Poisson",
    "OneOrMany",
    "Binomial",
    "Finite",
    "pgf",
    "pgf_deriv",
    "mean",
    "sample",
    "parse_spec",
    "format_spec",
]

_WEIGHT_SUM_TOL = 1e-12


def _check_s(s):
    arr = np.asarray(s, dtype=float)
    if not np.all((arr >= 0.0) & (arr <= 1.0)):
        raise DomainError(f"s must lie in [0, 1], got {s!r}")
    return arr


def _check_j(j):
    if int(j) != j or j < 0:
        raise DomainError(f"derivative order must be a nonnegative integer, got {j!r}")
    return int(j)


def _unwrap(value, like):
    """Return a Python float when the caller passed a scalar."""
    if np.ndim(like) == 0:
        return float(value)
    return value


def _open_unit(name, value):
    value = float(value)
    if not 0.0 < value < 1.0:
        raise SpecError(f"{name} must lie strictly inside (0, 1), got {value}")
    return value


def _falling(k, j):
    """k (k-1) ... (k-j+1) as a float."""
    out = 1.0
    for i in range(j):
        out *= k - i
    return out


class OffspringSpec:
    """Base class for offspring laws.

    Subclasses implement ``_deriv(s, j)`` for a validated float array ``s``
    and nonnegative integer ``j``; ``_deriv(s, 0)`` is the pgf itself.
    """

    family: str = ""

    def pgf(self, s):
        arr = _check_s(s)
        return _unwrap(self._deriv(arr, 0), s)

    def deriv(self, s, j):
        arr = _check_s(s)
        return _unwrap(self._deriv(arr, _check_j(j)), s)

    def mean(self):
        return self.deriv(1.0, 1)

    def pmf(self, kmax):
        """Probabilities p_0..p_kmax (truncated for infinite supports)."""
        raise NotImplementedError

    def support_max(self):
        """Largest k with p_k > 0, or ``math.inf``."""
        raise NotImplementedError

    def mass_above(self, n):
        """P(X > n)."""
        raise NotImplementedError

    def sample(self, rng):
        raise NotImplementedError

    def _deriv(self, s, j):
        raise NotImplementedError


@dataclass(frozen=True)
class Geometric(OffspringSpec):
    """p_k = (1-p) p^k, k >= 0; mean p/(1-p)."""

    p: float
    family = "geometric"

    def __post_init__(self):
        object.__setattr__(self, "p", _open_unit("p", self.p))

    def _deriv(self, s, j):
        p = self.p
        return (1.0 - p) * math.factorial(j) * p**j / (1.0 - p * s) ** (j + 1)

    def pmf(self, kmax):
        k = np.arange(kmax + 1)
        return (1.0 - self.p) * self.p**k

    def support_max(self):
        return math.inf

    def mass_above(self, n):
        return self.p ** (n + 1)

    def sample(self, rng):
        # numpy's geometric counts trials to first success (>= 1)
        return int(rng.geometric(1.0 - self.p)) - 1


@dataclass(frozen=True)
class Poisson(OffspringSpec):
    m: float
    family = "poisson"

    def __post_init__(self):
        m = float(self.m)
        if not (m > 0.0 and math.isfinite(m)):
            raise SpecError(f"m must be positive and finite, got {m}")
        object.__setattr__(self, "m", m)

    def _deriv(self, s, j):
        return self.m**j * np.exp(self.m * (s - 1.0))

    def pmf(self, kmax):
        k = np.arange(kmax + 1)
        logp = k * math.log(self.m) - self.m - np.array([math.lgamma(i + 1) for i in k])
        return np.exp(logp)

    def support_max(self):
        return math.inf

    def mass_above(self, n):
        return 1.0 - float(np.sum(self.pmf(n)))

    def sample(self, rng):
        return int(rng.poisson(self.m))


@dataclass(frozen=True)
class OneOrMany(OffspringSpec):
    """One child with probability 1-p, r children with probability p."""

    p: float
    r: int
    family = "one-or-many"

    def __post_init__(self):
        object.__setattr__(self, "p", _open_unit("p", self.p))
        if int(self.r) != self.r or self.r < 2:
            raise SpecError(f"r must be an integer > 1, got {self.r}")
        object.__setattr__(self, "r", int(self.r))

    def _deriv(self, s, j):
        p, r = self.p, self.r
        out = np.zeros_like(s)
        if j == 0:
            out = out + (1.0 - p) * s
        elif j == 1:
            out = out + (1.0 - p)
        if j <= r:
            out = out + p * _falling(r, j) * s ** (r - j)
        return out

    def pmf(self, kmax):
        out = np.zeros(kmax + 1)
        if kmax >= 1:
            out[1] = 1.0 - self.p
        if kmax >= self.r:
            out[self.r] = self.p
        return out

    def support_max(self):
        return self.r

    def mass_above(self, n):
        return (self.p if self.r > n else 0.0) + (1.0 - self.p if n < 1 else 0.0)

    def sample(self, rng):
        return self.r if rng.random() < self.p else 1


@dataclass(frozen=True)
class Binomial(OffspringSpec):
    n: int
    p: float
    family = "binomial"

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise SpecError(f"n must be an integer >= 1, got {self.n}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "p", _open_unit("p", self.p))

    def _deriv(self, s, j):
        n, p = self.n, self.p
        if j > n:
            return np.zeros_like(s)
        # written as 1 - p(1-s) so that f(1) is exactly 1
        return _falling(n, j) * p**j * (1.0 - p * (1.0 - s)) ** (n - j)

    def pmf(self, kmax):
        k = np.arange(kmax + 1)
        out = np.array(
            [math.comb(self.n, i) * self.p**i * (1 - self.p) ** (self.n - i) if i <= self.n else 0.0 for i in k]
        )
        return out

    def support_max(self):
        return self.n

    def mass_above(self, n):
        return float(np.sum(self.pmf(self.n)[n + 1 :]))

    def sample(self, rng):
        return int(rng.binomial(self.n, self.p))


@dataclass(frozen=True, eq=False)
class Finite(OffspringSpec):
    """Arbitrary law on {0, ..., len(weights)-1}.

    Weights are normalised after validation, so f(1) is 1 to rounding.
    Point masses are accepted here (degenerate trees are legitimate inputs for
    the subtree solver and the simulator).
    """

    weights: tuple = field(default=())
    family = "finite"

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).ravel()
        if w.size == 0:
            raise SpecError("finite law needs at least one weight")
        if np.any(~np.isfinite(w)) or np.any(w < 0):
            raise SpecError("finite weights must be finite and nonnegative")
        total = math.fsum(w)
        if abs(total - 1.0) > _WEIGHT_SUM_TOL:
            raise SpecError(f"finite weights must sum to 1 (got {total!r})")
        w = w / total
        # drop trailing zeros so support_max is exact
        nz = np.flatnonzero(w)
        w = w[: nz[-1] + 1]
        object.__setattr__(self, "weights", tuple(float(x) for x in w))

    def __eq__(self, other):
        return isinstance(other, Finite) and self.weights == other.weights

    def __hash__(self):
        return hash(("finite", self.weights))

    @property
    def coeffs(self):
        return np.asarray(self.weights)

    def _deriv(self, s, j):
        c = self.coeffs
        kmax = c.size - 1
        if j > kmax:
            return np.zeros_like(s)
        # coefficients of the j-th derivative: p_k k(k-1)...(k-j+1) s^(k-j)
        dc = np.array([c[k] * _falling(k, j) for k in range(j, kmax + 1)])
        out = np.zeros_like(s) + dc[-1]
        for coef in dc[-2::-1]:
            out = out * s + coef
        return out

    def pmf(self, kmax):
        out = np.zeros(kmax + 1)
        c = self.coeffs[: kmax + 1]
        out[: c.size] = c
        return out

    def support_max(self):
        return len(self.weights) - 1

    def mass_above(self, n):
        return math.fsum(self.weights[n + 1 :])

    def sample(self, rng):
        return int(rng.choice(len(self.weights), p=self.coeffs))


def pgf(spec: OffspringSpec, s):
    """f(s) for s in [0, 1]."""
    return spec.pgf(s)


def pgf_deriv(spec: OffspringSpec, s, j: int):
    """Exact j-th derivative of the pgf; at s=1 this is the left derivative."""
    return spec.deriv(s, j)


def mean(spec: OffspringSpec) -> float:
    return spec.mean()


def sample(spec: OffspringSpec, rng: np.random.Generator) -> int:
    """Draw one offspring count using the caller's generator."""
    return spec.sample(rng)


# --- text syntax -----------------------------------------------------------

_FAMILY_KEYS = {
    "geometric": (Geometric, {"p": float}),
    "poisson": (Poisson, {"m": float}),
    "one-or-many": (OneOrMany, {"p": float, "r": int}),
    "binomial": (Binomial, {"n": int, "p": float}),
}

_SPEC_RE = re.compile(r"^\s*([a-z-]+)\s*:\s*(.*?)\s*$")


def parse_spec(text: str) -> OffspringSpec:
    """Parse ``family:key=value,...`` (or ``finite:w0,w1,...``)."""
    match = _SPEC_RE.match(text)
    if not match:
        raise SpecError(f"cannot parse offspring spec {text!r}")
    name, body = match.groups()
    parts = [part.strip() for part in body.split(",")] if body else []
    if name == "finite":
        try:
            weights = [float(part) for part in parts]
        except ValueError as exc:
            raise SpecError(f"bad finite weights in {text!r}") from exc
        return Finite(tuple(weights))
    if name not in _FAMILY_KEYS:
        raise SpecError(f"unknown family {name!r}")
    cls, keys = _FAMILY_KEYS[name]
    kwargs = {}
    for part in parts:
        key, sep, value = part.partition("=")
        key = key.strip()
        if not sep or key not in keys:
            raise SpecError(f"bad parameter {part!r} for family {name}")
        if key in kwargs:
            raise SpecError(f"parameter {key!r} given twice")
        try:
            if keys[key] is int:
                number = float(value)
                if number != int(number):
                    raise ValueError
                kwargs[key] = int(number)
            else:
                kwargs[key] = float(value)
        except ValueError as exc:
            raise SpecError(f"bad value for {key!r}: {value!r}") from exc
    missing = set(keys) - set(kwargs)
    if missing:
        raise SpecError(f"family {name} is missing {sorted(missing)}")
    return cls(**kwargs)


def format_spec(spec: OffspringSpec) -> str:
    """Inverse of :func:`parse_spec` (floats written with repr)."""
    if isinstance(spec, Finite):
        return "finite:" + ",".join(repr(w) for w in spec.weights)
    if isinstance(spec, Geometric):
        return f"geometric:p={spec.p!r}"
    if isinstance(spec, Poisson):
        return f"poisson:m={spec.m!r}"
    if isinstance(spec, OneOrMany):
        return f"one-or-many:p={spec.p!r},r={spec.r}"
    if isinstance(spec, Binomial):
        return f"binomial:n={spec.n},p={spec.p!r}"
    raise TypeError(f"unknown spec type {type(spec).__name__}")
