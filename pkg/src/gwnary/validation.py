"""Reproduction suite for the published reference values.

Each check returns a :class:`CheckResult`; ``run_checks`` runs a selection
and is shared by ``gwnary validate`` and the acceptance tests.
"""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from gwnary.critical import find_critical, one_or_many_closed_form, one_or_many_family, poisson_family
from gwnary.mc import McConfig, estimate_gamma_nt
from gwnary.offspring import Finite, Geometric, OneOrMany, Poisson
from gwnary.solve import Criticality, pemantle_bound, smallest_root
from gwnary.subtree_gf import SubtreeGF
from gwnary.survival import fit_asymptote, iterate_survival


@dataclass
class CheckResult:
    number: int
    name: str
    passed: bool
    detail: str
    seconds: float

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.number}. {self.name}: {self.detail} ({self.seconds:.2f}s)"


def random_finite_spec(rng, kmax=6):
    """Random law on {0..kmax}; about half the draws get a sparse support."""
    alpha = rng.choice([0.3, 0.7, 1.5])
    w = rng.dirichlet(np.full(kmax + 1, alpha))
    if rng.random() < 0.5:
        w[rng.random(kmax + 1) < 0.3] = 0.0
        if w.sum() == 0.0:
            w[kmax] = 1.0
    return Finite(tuple(w / w.sum()))


def _critical_poisson_m():
    return find_critical(poisson_family(), 2, (2.0, 5.0)).param_critical


def check_geometric_critical_point():
    t0 = time.perf_counter()
    r = smallest_root(SubtreeGF(Geometric(4 / 5), 2))
    dt = time.perf_counter() - t0
    ok = (abs(r.gamma - 0.75) <= 1e-9 and abs(r.a - 1.0) <= 1e-6 and abs(r.b - 2.0) <= 1e-8
          and r.cls is Criticality.CRITICAL and dt < 1.0)
    return ok, f"gamma={r.gamma!r} a={r.a!r} b={r.b!r} class={r.cls.value}", dt


def check_poisson_critical_point():
    t0 = time.perf_counter()
    c = find_critical(poisson_family(), 2, (2.0, 5.0))
    dt = time.perf_counter() - t0
    ok = (abs(c.mean_critical - 3.3509) <= 2e-3 and abs(c.gamma_critical - 0.4648) <= 2e-3
          and abs(c.b_at_critical - 1.48235) <= 1e-3 and dt < 5.0)
    return ok, f"m_c={c.mean_critical:.6f} gamma_c={c.gamma_critical:.6f} b_c={c.b_at_critical:.6f}", dt


def check_one_or_many_closed_form():
    t0 = time.perf_counter()
    c = find_critical(one_or_many_family(3), 2, (0.5, 0.99))
    p_c, gamma_c = one_or_many_closed_form(2)
    dt = time.perf_counter() - t0
    ok = (abs(c.param_critical - p_c) <= 1e-12 and abs(c.gamma_critical - gamma_c) <= 1e-12
          and abs(c.b_at_critical - 8 / 3) <= 1e-10)
    return ok, (f"p_c={c.param_critical!r} (closed {p_c!r}) gamma_c={c.gamma_critical!r} "
                f"b_c={c.b_at_critical!r}"), dt


def check_critical_asymptotic_law():
    cases = [
        ("geometric", Geometric(4 / 5), 4 / 3),
        ("poisson", Poisson(_critical_poisson_m()), 2.9028),
        ("one-or-many", OneOrMany(8 / 9, 3), 3.0),
    ]
    ok = True
    parts = []
    total = 0.0
    for name, spec, target in cases:
        t0 = time.perf_counter()
        gf = SubtreeGF(spec, 2)
        root = smallest_root(gf)
        curve = iterate_survival(gf, root, 10_000)
        fit = fit_asymptote(curve, root)
        dt = time.perf_counter() - t0
        total += dt
        tail = curve.t_max * curve.cond_survival[curve.t_max]
        rel = abs(tail - target) / target
        ok &= curve.t_max == 10_000 and rel <= 0.02 and dt < 1.0 and root.cls is Criticality.CRITICAL
        parts.append(f"{name}: t*cond={tail:.5f} vs {target:.5f} ({rel:.2%}), fit={fit.fitted_constant:.5f}")
    return ok, "; ".join(parts), total


def check_subcritical_law():
    t0 = time.perf_counter()
    gf = SubtreeGF(Geometric(0.9), 2)
    root = smallest_root(gf)
    curve = iterate_survival(gf, root)
    fit = fit_asymptote(curve, root)
    a = root.a
    ratio_err = abs(fit.tail_value - a)
    cond = curve.cond_survival
    ts = np.arange(1, curve.t_max + 1)
    ts = ts[(cond[ts] >= 1e-7) & (cond[ts] <= 1e-1)]
    resid = np.abs(cond[ts] - fit.d * a**ts)
    bound = 2.0 * abs(fit.second_order_constant) * a ** (2.0 * ts)
    dt = time.perf_counter() - t0
    ok = (root.cls is Criticality.SUBCRITICAL and ratio_err <= 1e-6 and fit.d > 0
          and ts.size >= 3 and bool(np.all(resid <= bound)))
    return ok, (f"a={a:.12f} ratio_err={ratio_err:.2e} d={fit.d:.6f} "
                f"C={fit.second_order_constant:.6f} over t={ts[0]}..{ts[-1]}"), dt


def check_theorem_i(n_specs=200, seed=20070101):
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    found = 0
    worst = -np.inf
    attempts = 0
    while found < n_specs and attempts < 100 * n_specs:
        attempts += 1
        spec = random_finite_spec(rng)
        N = int(rng.choice([2, 3]))
        if not spec.mass_above(N) > 0:
            continue
        r = smallest_root(SubtreeGF(spec, N))
        if 0.0 < r.gamma < 1.0:
            found += 1
            worst = max(worst, r.a)
    dt = time.perf_counter() - t0
    ok = found == n_specs and worst <= 1 + 1e-9 and dt < 10.0
    return ok, f"{found} roots in (0,1) from {attempts} draws, max a={worst!r}", dt


def check_monte_carlo(n_trials=100_000, seed=2007):
    t0 = time.perf_counter()
    cases = [
        ("geometric", Geometric(4 / 5)),
        ("poisson", Poisson(_critical_poisson_m())),
        ("one-or-many", OneOrMany(8 / 9, 3)),
    ]
    ok = True
    worst = 0.0
    for name, spec in cases:
        gf = SubtreeGF(spec, 2)
        curve = iterate_survival(gf, smallest_root(gf), 10)
        for t in (1, 2, 5, 10):
            est = estimate_gamma_nt(McConfig(spec, 2, t, n_trials, seed=seed))
            z = abs(est.p_hat - curve.gamma_seq[t]) / est.half_width_95
            worst = max(worst, z)
            ok &= z <= 3.0
    dt = time.perf_counter() - t0
    ok &= dt < 60.0
    return ok, f"12 cells, worst |p_hat - gamma_t| = {worst:.2f} half-widths", dt


def check_classical_reduction():
    t0 = time.perf_counter()
    gf = SubtreeGF(Finite((0.5, 0.0, 0.5)), 1)
    root = smallest_root(gf)
    fit = fit_asymptote(iterate_survival(gf, root), root)
    g1 = smallest_root(SubtreeGF(Geometric(0.8), 1)).gamma
    dt = time.perf_counter() - t0
    rel = abs(fit.fitted_constant - 2.0) / 2.0
    ok = rel <= 0.02 and abs(g1 - 0.25) <= 1e-10 and abs(root.b - 1.0) <= 1e-12
    return ok, f"fitted 2/b_1={fit.fitted_constant:.5f} ({rel:.2%}); geometric gamma_1={g1!r}", dt


def check_pemantle(n_specs=100, seed=1988):
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    checked = 0
    used = 0
    violations = 0
    while checked < n_specs:
        spec = random_finite_spec(rng)
        N = int(rng.choice([2, 3]))
        if not spec.mass_above(N) > 0:
            continue
        gf = SubtreeGF(spec, N)
        r = smallest_root(gf)
        if r.cls is not Criticality.SUBCRITICAL or not 0.0 < r.gamma < 1.0:
            continue
        checked += 1
        s0 = float(rng.uniform(1e-6, 1 - 1e-6))
        if pemantle_bound(gf, s0):
            used += 1
            violations += r.gamma > s0 + 1e-12
    dt = time.perf_counter() - t0
    return violations == 0, f"{checked} specs, bound held at {used} s0 draws, {violations} violations", dt


CHECKS = {
    1: ("geometric critical point", check_geometric_critical_point),
    2: ("poisson critical point", check_poisson_critical_point),
    3: ("one-or-many closed form", check_one_or_many_closed_form),
    4: ("critical 2/(gamma b t) law", check_critical_asymptotic_law),
    5: ("subcritical d a^t law", check_subcritical_law),
    6: ("a_N <= 1 on random laws", check_theorem_i),
    7: ("Monte Carlo agreement", check_monte_carlo),
    8: ("N=1 classical reduction", check_classical_reduction),
    9: ("Pemantle bound consistency", check_pemantle),
}


def run_check(number):
    name, fn = CHECKS[number]
    t0 = time.perf_counter()
    try:
        ok, detail, seconds = fn()
    except Exception as exc:  # a crash is a failed check, reported like one
        ok, detail, seconds = False, f"{type(exc).__name__}: {exc}", time.perf_counter() - t0
    return CheckResult(number, name, bool(ok), detail, seconds)


def run_checks(numbers=None):
    return [run_check(n) for n in (numbers or sorted(CHECKS))]
