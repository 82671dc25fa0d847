import json
import math

import numba
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gwnary.critical import find_critical, poisson_family
from gwnary.errors import DegenerateEstimateError
from gwnary.mc import (
    McConfig,
    McEstimate,
    Outcome,
    _child,
    _draw,
    _run_trials,
    _u64,
    draw_children,
    estimate_gamma_nt,
    has_nary_subtree,
    sampler_params,
    stream_key,
)
from gwnary.offspring import Binomial, Finite, Geometric, OneOrMany, Poisson
from gwnary.solve import smallest_root
from gwnary.subtree_gf import SubtreeGF
from gwnary.survival import iterate_survival


@numba.njit
def _exhaustive(key, node, t, N, code, p, cdf):
    # no early exit: every child of every vertex down to depth t is visited
    if t == 0:
        return True
    k = _draw(key, node, code, p, cdf)
    hits = 0
    for i in range(k):
        if _exhaustive(key, _child(node, i), t - 1, N, code, p, cdf):
            hits += 1
    return hits >= N


def exhaustive(spec, N, t, key):
    code, p, cdf = sampler_params(spec)
    return bool(_exhaustive(_u64(key), _u64(0), t, N, code, p, cdf))


def gamma_t(spec, N, t):
    gf = SubtreeGF(spec, N)
    return iterate_survival(gf, smallest_root(gf), t).gamma_seq[t]


def within_3(est, target):
    return abs(est.p_hat - target) <= 3 * est.half_width_95


@pytest.mark.parametrize("spec", [Geometric(0.8), Poisson(3.0), Finite((1.0,)), OneOrMany(0.5, 4)])
def test_height_zero_always_present(spec):
    for k in range(50):
        assert has_nary_subtree(spec, 2, 0, stream_key(1, k), 10) is Outcome.PRESENT
    assert estimate_gamma_nt(McConfig(spec, 2, 0, 1000)).p_hat == 0.0


def test_childless_law():
    for k in range(100):
        assert has_nary_subtree(Finite((1.0,)), 1, 1, stream_key(3, k)) is Outcome.ABSENT
    assert estimate_gamma_nt(McConfig(Finite((1.0,)), 1, 1, 1000)).p_hat == 1.0


@pytest.mark.parametrize("t", [1, 3, 8])
def test_binary_law(t):
    for k in range(20):
        assert has_nary_subtree(Finite((0.0, 0.0, 1.0)), 2, t, stream_key(4, k)) is Outcome.PRESENT


def test_one_or_many_first_generation():
    est = estimate_gamma_nt(McConfig(OneOrMany(8 / 9, 3), 2, 1, 1_000_000, seed=17))
    assert within_3(est, 1 / 9)
    assert est.n_trials == 1_000_000
    assert est.budget_exhausted_count == 0


def test_geometric_height_ten():
    est = estimate_gamma_nt(McConfig(Geometric(0.8), 2, 10, 100_000, seed=5))
    assert within_3(est, gamma_t(Geometric(0.8), 2, 10))


@pytest.mark.parametrize("spec, N, t", [
    (Poisson(6.0), 2, 4),
    (Binomial(9, 0.9), 3, 3),
    (OneOrMany(0.97, 4), 3, 5),
    (Finite((0.02, 0.03, 0.15, 0.3, 0.5)), 2, 6),
])
def test_agreement_other_laws(spec, N, t):
    est = estimate_gamma_nt(McConfig(spec, N, t, 50_000, seed=99))
    assert within_3(est, gamma_t(spec, N, t))


def test_critical_poisson_agreement():
    m = find_critical(poisson_family(), 2, (2.0, 5.0)).param_critical
    est = estimate_gamma_nt(McConfig(Poisson(m), 2, 5, 100_000, seed=8))
    assert within_3(est, gamma_t(Poisson(m), 2, 5))


def test_deterministic():
    cfg = McConfig(Poisson(3.5), 2, 6, 20_000, seed=123)
    assert estimate_gamma_nt(cfg) == estimate_gamma_nt(cfg)
    other = estimate_gamma_nt(McConfig(Poisson(3.5), 2, 6, 20_000, seed=124))
    assert other != estimate_gamma_nt(cfg)


def test_independent_of_thread_count():
    cfg = McConfig(Geometric(0.8), 2, 7, 20_000, seed=3)
    full = estimate_gamma_nt(cfg)
    before = numba.get_num_threads()
    try:
        numba.set_num_threads(1)
        single = estimate_gamma_nt(cfg)
    finally:
        numba.set_num_threads(before)
    assert single == full


def test_chunked_runs_match_one_run():
    code, p, cdf = sampler_params(Geometric(0.8))
    seed = _u64(77)
    whole = _run_trials(seed, 0, 9000, 2, 6, 10**6, code, p, cdf)
    parts = [_run_trials(seed, lo, 3000, 2, 6, 10**6, code, p, cdf) for lo in (0, 3000, 6000)]
    assert np.array_equal(whole, np.concatenate(parts))
    single = [has_nary_subtree(Geometric(0.8), 2, 6, stream_key(77, k), 10**6) for k in range(200)]
    assert [int(x) for x in single] == whole[:200].tolist()


def test_monotone_in_height():
    spec = Geometric(0.8)
    e5 = estimate_gamma_nt(McConfig(spec, 2, 5, 50_000, seed=21))
    e10 = estimate_gamma_nt(McConfig(spec, 2, 10, 50_000, seed=22))
    assert e5.p_hat <= e10.p_hat + 3 * (e5.half_width_95 + e10.half_width_95)
    # with a shared tree the event is nested: a height-10 subtree contains a height-5 one
    for k in range(2000):
        key = stream_key(9, k)
        if has_nary_subtree(spec, 2, 10, key) is Outcome.PRESENT:
            assert has_nary_subtree(spec, 2, 5, key) is Outcome.PRESENT


@pytest.mark.parametrize("spec, N", [
    (Geometric(0.8), 2),
    (Poisson(3.35), 2),
    (OneOrMany(8 / 9, 3), 2),
    (Finite((0.2, 0.1, 0.3, 0.2, 0.2)), 3),
])
@pytest.mark.parametrize("t", [1, 2, 3, 5])
def test_early_exit_matches_exhaustive(spec, N, t):
    for k in range(10_000):
        key = stream_key(2024, k)
        lazy = has_nary_subtree(spec, N, t, key, 10**8)
        assert lazy is not Outcome.BUDGET_EXCEEDED
        assert (lazy is Outcome.PRESENT) == exhaustive(spec, N, t, key)


def test_budget_outcome_and_gate():
    spec = Geometric(0.95)
    outcomes = {has_nary_subtree(spec, 2, 12, stream_key(0, k), 5) for k in range(200)}
    assert Outcome.BUDGET_EXCEEDED in outcomes
    with pytest.raises(DegenerateEstimateError):
        estimate_gamma_nt(McConfig(spec, 2, 12, 2000, node_budget=5))


def test_budget_exclusion_small_share():
    spec = Geometric(0.8)
    n = 20_000
    codes = np.array([int(has_nary_subtree(spec, 2, 8, stream_key(10, k), 1500)) for k in range(n)])
    exhausted = int(np.count_nonzero(codes < 0))
    assert 0 < exhausted <= 0.01 * n
    # exhausted trials are dropped, not counted as either answer
    est = estimate_gamma_nt(McConfig(spec, 2, 8, n, seed=10, node_budget=1500))
    assert est.budget_exhausted_count == exhausted
    assert est.n_trials == n - exhausted
    assert est.p_hat == np.count_nonzero(codes == 0) / (n - exhausted)


@pytest.mark.parametrize("spec", [OneOrMany(0.5, 3), Poisson(2.5), Binomial(5, 0.3), Finite((0.25, 0.0, 0.75))])
def test_sampler_frequencies(spec):
    n = 200_000
    draws = draw_children(spec, stream_key(31, 0), 0, n)
    kmax = int(draws.max())
    pmf = np.asarray(spec.pmf(kmax), dtype=float)
    counts = np.bincount(draws, minlength=kmax + 1)
    for k in range(kmax + 1):
        sd = math.sqrt(n * pmf[k] * (1 - pmf[k]))
        assert abs(counts[k] - n * pmf[k]) <= 5 * sd + 1


def test_geometric_sampler_mean():
    spec = Geometric(0.8)
    n = 500_000
    draws = draw_children(spec, stream_key(32, 0), 0, n)
    sd = math.sqrt(spec.p) / (1 - spec.p)
    assert abs(draws.mean() - 4.0) <= 4 * sd / math.sqrt(n)


def test_config_validation():
    for kwargs in ({"n_trials": 0}, {"node_budget": 0}, {"t": -1}, {"N": 0}):
        base = {"spec": Geometric(0.8), "N": 2, "t": 3, "n_trials": 10}
        base.update(kwargs)
        with pytest.raises(ValueError):
            McConfig(**base)
    with pytest.raises(ValueError):
        has_nary_subtree(Geometric(0.8), 2, -1, 0)


def test_thread_cap_env(monkeypatch):
    monkeypatch.setenv("GW_NARY_THREADS", "1")
    before = numba.get_num_threads()
    try:
        cfg = McConfig(Poisson(4.0), 2, 4, 5000, seed=1)
        assert estimate_gamma_nt(cfg).n_trials == 5000
        assert numba.get_num_threads() == 1
    finally:
        numba.set_num_threads(before)


@given(
    m=st.floats(0.5, 6.0),
    N=st.integers(1, 3),
    t=st.integers(0, 5),
    n=st.integers(1, 3000),
    seed=st.integers(0, 2**64 - 1),
)
@settings(max_examples=40, deadline=None)
def test_estimate_invariants(m, N, t, n, seed):
    est = estimate_gamma_nt(McConfig(Poisson(m), N, t, n, seed=seed))
    assert 0.0 <= est.p_hat <= 1.0
    assert est.half_width_95 == pytest.approx(1.96 * math.sqrt(est.p_hat * (1 - est.p_hat) / est.n_trials))
    assert McEstimate.from_dict(json.loads(json.dumps(est.to_dict()))) == est
