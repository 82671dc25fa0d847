import json
from fractions import Fraction

import pytest

from gwnary.critical import (
    CriticalReport,
    binomial_family,
    find_critical,
    geometric_family,
    one_or_many_closed_form,
    one_or_many_family,
    poisson_family,
)
from gwnary.errors import DomainError, NoSignChangeError
from gwnary.solve import Criticality, smallest_root
from gwnary.subtree_gf import SubtreeGF


def test_geometric_threshold():
    c = find_critical(geometric_family(), 2, (0.5, 0.95))
    assert c.param_name == "p"
    assert c.param_critical == pytest.approx(0.8, abs=1e-10)
    assert c.mean_critical == pytest.approx(4.0, abs=1e-8)
    assert c.gamma_critical == pytest.approx(0.75, abs=1e-9)


def test_poisson_threshold():
    c = find_critical(poisson_family(), 2, (2.0, 5.0))
    assert c.mean_critical == pytest.approx(3.3509, abs=2e-3)
    assert c.gamma_critical == pytest.approx(0.4648, abs=2e-3)
    assert c.b_at_critical == pytest.approx(1.48235, abs=1e-3)


def test_one_or_many_threshold():
    c = find_critical(one_or_many_family(3), 2, (0.5, 0.99))
    assert c.param_critical == pytest.approx(8 / 9, abs=1e-12)
    assert c.gamma_critical == pytest.approx(0.25, abs=1e-12)


def test_closed_form_values():
    assert one_or_many_closed_form(2) == pytest.approx((8 / 9, 1 / 4), abs=1e-15)
    p_c, gamma_c = one_or_many_closed_form(3)
    assert gamma_c == pytest.approx(1 / 9, abs=1e-15)
    assert p_c == pytest.approx(243 / 256, abs=1e-15)
    # exact rational form of (1 - 1/N)(1 - 1/N^2)^(-N)
    assert Fraction(2, 3) * Fraction(8, 9) ** -3 == Fraction(243, 256)


@pytest.mark.parametrize("N", [0, 1, -3, 2.5])
def test_closed_form_domain(N):
    with pytest.raises(DomainError):
        one_or_many_closed_form(N)


@pytest.mark.parametrize("N", [2, 3, 4])
def test_closed_form_agrees_with_search(N):
    c = find_critical(one_or_many_family(N + 1), N, (0.5, 0.999))
    p_c, gamma_c = one_or_many_closed_form(N)
    assert abs(c.param_critical - p_c) <= 1e-6
    assert abs(c.gamma_critical - gamma_c) <= 1e-6


FAMILIES = [
    (geometric_family(), 2, (0.5, 0.95)),
    (poisson_family(), 2, (2.0, 5.0)),
    (one_or_many_family(3), 2, (0.5, 0.99)),
    (geometric_family(), 3, None),
    (binomial_family(9), 8, None),
]


@pytest.mark.parametrize("family, N, rng", FAMILIES, ids=lambda x: getattr(x, "name", str(x)))
def test_threshold_separates_classes(family, N, rng):
    c = find_critical(family, N, rng)
    assert 0.0 < c.gamma_critical < 1.0
    assert abs(c.a_at_critical - 1.0) <= 1e-4
    eps = 1e-3
    above = smallest_root(SubtreeGF(family.build(c.param_critical + eps), N))
    below = smallest_root(SubtreeGF(family.build(c.param_critical - eps), N))
    assert above.gamma < 1.0
    assert below.cls is Criticality.DEGENERATE


@pytest.mark.parametrize("family, N, rng", FAMILIES, ids=lambda x: getattr(x, "name", str(x)))
def test_threshold_solves_tangency_system(family, N, rng):
    c = find_critical(family, N, rng)
    gf = SubtreeGF(family.build(c.param_critical), N)
    assert abs(gf.g(c.gamma_critical) - c.gamma_critical) <= 1e-12
    assert abs(gf.g_prime(c.gamma_critical) - 1.0) <= 1e-9
    assert c.b_at_critical > 0.0


def test_chayes_binomial_threshold():
    c = find_critical(binomial_family(9), 8)
    assert c.param_critical == pytest.approx(0.9924838517, abs=1e-8)
    assert c.mean_critical == pytest.approx(9 * c.param_critical, rel=1e-15)


def test_geometric_n3_threshold_in_unit_interval():
    c = find_critical(geometric_family(), 3)
    assert 0.0 < c.param_critical < 1.0
    assert c.param_critical == pytest.approx(27 / 31, abs=1e-10)
    assert c.mean_critical == pytest.approx(6.75, abs=1e-8)
    assert c.gamma_critical == pytest.approx(19 / 27, abs=1e-9)


def test_no_sign_change():
    with pytest.raises(NoSignChangeError):
        find_critical(poisson_family(), 2, (4.0, 10.0))
    with pytest.raises(NoSignChangeError):
        find_critical(poisson_family(), 2, (0.5, 3.0))


def test_bad_ranges():
    with pytest.raises(DomainError):
        find_critical(poisson_family(), 2, (5.0, 2.0))
    with pytest.raises(DomainError):
        find_critical(geometric_family(), 2, (0.5, 1.5))


def test_report_round_trip():
    c = find_critical(poisson_family(), 2, (2.0, 5.0))
    assert CriticalReport.from_dict(json.loads(json.dumps(c.to_dict()))) == c
