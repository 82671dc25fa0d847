"""Monte Carlo estimate of gamma_{N,t} from simulated Galton-Watson trees.

A trial grows one tree lazily and decides whether the root carries a
complete N-ary subtree of height t:

    S_0(v) = True,   S_t(v) = #{children c : S_{t-1}(c)} >= N.

Children are examined depth first and a vertex is settled as soon as N
children succeed or too few remain to reach N.

Randomness is counter based. Every vertex has a 64-bit address (the root is
0, child i of v is a hash of (v, i)) and its offspring count is a pure
function of (trial key, address). The tree of a trial is therefore fixed by
(seed, trial index) alone, whatever order or subset of it gets visited, and
trials can run in any order or in parallel with identical results.
"""
from __future__ import annotations

import enum
import math
import os
from dataclasses import dataclass

import numba
import numpy as np

from gwnary.errors import DegenerateEstimateError
from gwnary.offspring import Geometric, OffspringSpec

__all__ = [
    "McConfig",
    "McEstimate",
    "Outcome",
    "has_nary_subtree",
    "estimate_gamma_nt",
    "stream_key",
    "sampler_params",
    "child_address",
    "draw_count",
    "draw_children",
    "NODE_BUDGET",
    "BUDGET_GATE",
]

# the system TBB is too old for numba; avoid probing it
if "NUMBA_THREADING_LAYER_PRIORITY" not in os.environ:
    numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]

NODE_BUDGET = 10_000_000
BUDGET_GATE = 0.01
THREADS_ENV = "GW_NARY_THREADS"

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_TRIAL_MULT = np.uint64(0xD1B54A32D192ED03)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_ONE = np.uint64(1)
_TWO_M53 = 1.0 / 9007199254740992.0

_GEOMETRIC = 0
_TABLE = 1


class Outcome(enum.IntEnum):
    ABSENT = 0
    PRESENT = 1
    BUDGET_EXCEEDED = -1


@numba.njit(cache=True)
def _mix(x):
    # splitmix64 finaliser
    z = x + _GOLDEN
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@numba.njit(cache=True)
def _stream_key(seed, trial):
    return _mix(_mix(seed) ^ (trial * _TRIAL_MULT + _ONE))


@numba.njit(cache=True)
def _child(node, i):
    return _mix(node + (np.uint64(i) + _ONE) * _GOLDEN)


@numba.njit(cache=True)
def _uniform(key, node):
    # strictly inside (0, 1)
    return (np.float64(_mix(key ^ _mix(node)) >> _S11) + 0.5) * _TWO_M53


@numba.njit(cache=True)
def _draw(key, node, code, p, cdf):
    u = _uniform(key, node)
    if code == _GEOMETRIC:
        return np.int64(math.floor(math.log(u) / math.log(p)))
    # inversion against a cdf table whose last entry is exactly 1
    k = 0
    while u >= cdf[k]:
        k += 1
    return np.int64(k)


@numba.njit(cache=True)
def _lazy_trial(key, N, t, budget, code, p, cdf):
    """1 if a complete N-ary subtree of height t exists, 0 if not, -1 on budget."""
    if t == 0:
        return 1
    ks = np.empty(t, np.int64)
    succ = np.zeros(t, np.int64)
    fail = np.zeros(t, np.int64)
    nxt = np.zeros(t, np.int64)
    ids = np.empty(t, np.uint64)

    ids[0] = np.uint64(0)
    ks[0] = _draw(key, ids[0], code, p, cdf)
    used = 1
    if ks[0] < N:
        return 0
    level = 0
    while True:
        i = nxt[level]
        nxt[level] = i + 1
        cid = _child(ids[level], i)
        if t - level - 1 == 0:
            r = 1
        else:
            used += 1
            if used > budget:
                return -1
            kc = _draw(key, cid, code, p, cdf)
            if kc < N:
                r = 0
            else:
                level += 1
                ids[level] = cid
                ks[level] = kc
                succ[level] = 0
                fail[level] = 0
                nxt[level] = 0
                continue
        # fold the child's verdict into its ancestors
        while True:
            if r == 1:
                succ[level] += 1
                done = succ[level] >= N
            else:
                fail[level] += 1
                done = fail[level] > ks[level] - N
            if not done:
                break
            if level == 0:
                return r
            level -= 1


@numba.njit(cache=True, parallel=True)
def _run_trials(seed, first, n, N, t, budget, code, p, cdf):
    out = np.empty(n, np.int8)
    for j in numba.prange(n):
        key = _stream_key(seed, np.uint64(first + j))
        out[j] = _lazy_trial(key, N, t, budget, code, p, cdf)
    return out


@numba.njit(cache=True)
def _draw_children(key, node, n, code, p, cdf):
    out = np.empty(n, np.int64)
    for i in range(n):
        out[i] = _draw(key, _child(node, i), code, p, cdf)
    return out


def sampler_params(spec: OffspringSpec):
    """(code, p, cdf) describing how the kernel draws offspring counts."""
    if isinstance(spec, Geometric):
        return _GEOMETRIC, spec.p, np.ones(1)
    kmax = spec.support_max()
    if math.isinf(kmax):
        # extend the table until the remaining tail is below double resolution
        m = spec.mean()
        kmax = int(m + 40.0 * math.sqrt(m) + 40)
    pmf = np.asarray(spec.pmf(int(kmax)), dtype=float)
    cdf = np.cumsum(pmf)
    cdf /= cdf[-1]
    cdf[-1] = 1.0
    return _TABLE, 0.0, cdf


def _u64(x):
    return np.uint64(int(x) & 0xFFFFFFFFFFFFFFFF)


def stream_key(seed: int, trial_index: int) -> int:
    """Key of the random stream for one trial."""
    return int(_stream_key(_u64(seed), _u64(trial_index)))


def child_address(node: int, i: int) -> int:
    return int(_child(_u64(node), np.int64(i)))


def draw_count(spec: OffspringSpec, key: int, node: int) -> int:
    """Offspring count of the vertex at ``node`` in the tree keyed by ``key``."""
    code, p, cdf = sampler_params(spec)
    return int(_draw(_u64(key), _u64(node), code, p, cdf))


def draw_children(spec: OffspringSpec, key: int, node: int, n: int) -> np.ndarray:
    """Offspring counts of children 0..n-1 of ``node`` (sampler checks)."""
    code, p, cdf = sampler_params(spec)
    return _draw_children(_u64(key), _u64(node), n, code, p, cdf)


def has_nary_subtree(spec: OffspringSpec, N: int, t: int, rng_state: int,
                     node_budget: int = NODE_BUDGET) -> Outcome:
    """Decide V_{N,t} >= 1 for the tree keyed by ``rng_state``."""
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    code, p, cdf = sampler_params(spec)
    return Outcome(int(_lazy_trial(_u64(rng_state), N, t, node_budget, code, p, cdf)))


@dataclass(frozen=True)
class McConfig:
    spec: OffspringSpec
    N: int
    t: int
    n_trials: int
    seed: int = 0
    node_budget: int = NODE_BUDGET

    def __post_init__(self):
        if self.n_trials < 1:
            raise ValueError("n_trials must be >= 1")
        if self.node_budget < 1:
            raise ValueError("node_budget must be >= 1")
        if self.t < 0:
            raise ValueError("t must be >= 0")
        if self.N < 1:
            raise ValueError("N must be >= 1")


@dataclass(frozen=True)
class McEstimate:
    """``n_trials`` counts the trials that finished within the node budget."""

    p_hat: float
    n_trials: int
    half_width_95: float
    budget_exhausted_count: int

    def to_dict(self):
        return {
            "p_hat": self.p_hat,
            "n_trials": self.n_trials,
            "half_width_95": self.half_width_95,
            "budget_exhausted_count": self.budget_exhausted_count,
        }

    @classmethod
    def from_dict(cls, data):
        return cls(
            p_hat=float(data["p_hat"]),
            n_trials=int(data["n_trials"]),
            half_width_95=float(data["half_width_95"]),
            budget_exhausted_count=int(data["budget_exhausted_count"]),
        )


def _apply_thread_cap():
    cap = os.environ.get(THREADS_ENV)
    if cap:
        n = max(1, min(int(cap), numba.config.NUMBA_NUM_THREADS))
        numba.set_num_threads(n)


def estimate_gamma_nt(cfg: McConfig) -> McEstimate:
    """Fraction of trees with no complete N-ary subtree of height t."""
    _apply_thread_cap()
    code, p, cdf = sampler_params(cfg.spec)
    out = _run_trials(_u64(cfg.seed), 0, cfg.n_trials, cfg.N, cfg.t, cfg.node_budget, code, p, cdf)
    exhausted = int(np.count_nonzero(out < 0))
    if exhausted > BUDGET_GATE * cfg.n_trials:
        raise DegenerateEstimateError(
            f"{exhausted} of {cfg.n_trials} trials exceeded the node budget of {cfg.node_budget}"
        )
    used = cfg.n_trials - exhausted
    absent = int(np.count_nonzero(out == 0))
    p_hat = absent / used if used else 0.0
    return McEstimate(
        p_hat=p_hat,
        n_trials=used,
        half_width_95=1.96 * math.sqrt(p_hat * (1.0 - p_hat) / used) if used else math.inf,
        budget_exhausted_count=exhausted,
    )
