import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad
from scipy.stats import norm

from segsi.intervals import (
    contains,
    intersect,
    log_gauss_mass,
    log_gauss_mass_set,
    normalize,
    total_length,
    two_sided_tail,
)


def test_normalize_merges_and_sorts():
    out = normalize([(2, 3), (0, 1), (0.5, 1.5), (4, 4)])
    assert out == [(0, 1.5), (2, 3)]


def test_intersect_basic():
    a = [(0, 2), (3, 5)]
    b = [(1, 4)]
    assert intersect(a, b) == [(1, 2), (3, 4)]


def test_intersect_disjoint_is_empty():
    assert intersect([(0, 1)], [(2, 3)]) == []


def test_total_length_and_contains():
    ivs = [(0, 1), (2, 4)]
    assert total_length(ivs) == pytest.approx(3.0)
    assert contains(ivs, 0.5)
    assert contains(ivs, 2.0)
    assert not contains(ivs, 1.5)
    assert contains(ivs, -1e-10, atol=1e-9)


def test_two_sided_tail():
    ivs = [(-3, -1), (0.5, 4)]
    assert two_sided_tail(ivs, 2.0) == [(-3, -2), (2, 4)]
    assert two_sided_tail(ivs, -2.0) == [(-3, -2), (2, 4)]


def test_log_gauss_mass_moderate():
    assert log_gauss_mass(-1, 1) == pytest.approx(
        np.log(norm.cdf(1) - norm.cdf(-1)), abs=1e-12
    )


def test_log_gauss_mass_symmetry():
    assert log_gauss_mass(2, 5) == pytest.approx(log_gauss_mass(-5, -2), abs=1e-12)


def test_log_gauss_mass_far_tail():
    # analytically log P(Z > t) ~ -t^2/2 - log(t sqrt(2 pi)) for large t
    t = 30.0
    got = log_gauss_mass(t, np.inf)
    expected = norm.logsf(t)
    assert got == pytest.approx(expected, rel=1e-10)


def test_log_gauss_mass_empty_and_cutoff():
    assert log_gauss_mass(1, 1) == -np.inf
    assert log_gauss_mass(2, 1) == -np.inf
    assert log_gauss_mass(40, 50) == -np.inf
    assert log_gauss_mass(-50, -40) == -np.inf


def test_log_gauss_mass_set_full_line():
    assert log_gauss_mass_set([(-np.inf, np.inf)], 2.5) == pytest.approx(0.0, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6))
def test_mass_matches_quadrature(seed):
    rng = np.random.default_rng(seed)
    sigma = float(rng.uniform(0.5, 3.0))
    edges = np.sort(rng.uniform(-6 * sigma, 6 * sigma, size=4))
    ivs = [(edges[0], edges[1]), (edges[2], edges[3])]
    ivs = [iv for iv in ivs if iv[1] > iv[0]]
    if not ivs:
        return
    got = np.exp(log_gauss_mass_set(ivs, sigma))
    want = sum(
        quad(lambda u: norm.pdf(u, scale=sigma), lo, hi, epsabs=1e-12)[0]
        for lo, hi in ivs
    )
    assert got == pytest.approx(want, abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_intersect_agrees_with_pointwise_membership(seed):
    rng = np.random.default_rng(seed)
    a = normalize([tuple(sorted(rng.uniform(-5, 5, 2))) for _ in range(3)])
    b = normalize([tuple(sorted(rng.uniform(-5, 5, 2))) for _ in range(3)])
    inter = intersect(a, b)
    for x in rng.uniform(-5, 5, 50):
        assert contains(inter, x) == (contains(a, x) and contains(b, x))
