"""The N-ary subtree generating function g_N and its first two derivatives.

    g_N(s)   = sum_{j<N} (1-s)^j f^(j)(s) / j!
    g_N'(s)  = (1-s)^(N-1) f^(N)(s) / (N-1)!
    g_N''(s) = (1-s)^(N-1) f^(N+1)(s) / (N-1)! - (1-s)^(N-2) f^(N)(s) / (N-2)!

g_N(s) is the probability that a vertex fails to root a complete N-ary
subtree one generation deeper, given that each child fails independently
with probability s. For N=1 it is the offspring pgf itself.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from gwnary.errors import DomainError, SpecError
from gwnary.offspring import OffspringSpec

__all__ = ["SubtreeGF", "g", "g_prime", "g_double_prime"]


def _neumaier(terms):
    """Compensated sum over the leading axis; works for scalars and arrays."""
    total = np.zeros_like(terms[0])
    comp = np.zeros_like(terms[0])
    for x in terms:
        t = total + x
        big = np.abs(total) >= np.abs(x)
        comp = comp + np.where(big, (total - t) + x, (x - t) + total)
        total = t
    return total + comp


@dataclass(frozen=True)
class SubtreeGF:
    """g_N for an offspring law.

    By default construction requires P(X > N) > 0; laws without mass above
    N make every question about infinite N-ary subtrees trivial. Pass
    ``allow_trivial=True`` to evaluate them anyway.
    """

    spec: OffspringSpec
    N: int
    allow_trivial: bool = False

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise SpecError(f"N must be an integer >= 1, got {self.N!r}")
        object.__setattr__(self, "N", int(self.N))
        if not self.allow_trivial and not self.spec.mass_above(self.N) > 0.0:
            raise SpecError(f"offspring law has no mass above N={self.N}")

    def _s(self, s):
        arr = np.asarray(s, dtype=float)
        if not np.all((arr >= 0.0) & (arr <= 1.0)):
            raise DomainError(f"s must lie in [0, 1], got {s!r}")
        return arr

    def _out(self, value, like):
        return float(value) if np.ndim(like) == 0 else value

    def g(self, s):
        arr = self._s(s)
        one_minus = 1.0 - arr
        terms = [
            one_minus**j * self.spec._deriv(arr, j) / math.factorial(j)
            for j in range(self.N)
        ]
        return self._out(_neumaier(terms), s)

    def g_prime(self, s):
        arr = self._s(s)
        N = self.N
        out = (1.0 - arr) ** (N - 1) * self.spec._deriv(arr, N) / math.factorial(N - 1)
        return self._out(out, s)

    def g_double_prime(self, s):
        arr = self._s(s)
        N = self.N
        f_n = self.spec._deriv(arr, N)
        f_n1 = self.spec._deriv(arr, N + 1)
        out = (1.0 - arr) ** (N - 1) * f_n1 / math.factorial(N - 1)
        if N >= 2:
            out = out - (1.0 - arr) ** (N - 2) * f_n / math.factorial(N - 2)
        return self._out(out, s)


def g(gf: SubtreeGF, s):
    return gf.g(s)


def g_prime(gf: SubtreeGF, s):
    return gf.g_prime(s)


def g_double_prime(gf: SubtreeGF, s):
    return gf.g_double_prime(s)
