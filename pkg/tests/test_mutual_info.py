import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mmwave_pgp.mutual_info import (
    CapacityError,
    gaussian_mi,
    gh_rule,
    hermite,
    idoe,
    mi_gh,
    mi_mc,
    qam,
)

from conftest import random_complex


@pytest.mark.parametrize("M", [2, 4, 16, 64])
def test_qam_unit_energy(M):
    c = qam(M)
    assert c.M == M
    assert np.mean(np.abs(c.points) ** 2) == pytest.approx(1.0, abs=1e-12)
    assert c.bits == math.log2(M)


def test_qam_rejects_and_symmetry():
    with pytest.raises(ValueError):
        qam(8)
    assert qam(16).rotation_order() == 4
    assert qam(2).rotation_order() == 2


def test_hermite_low_orders():
    x = np.linspace(-2, 2, 7)
    np.testing.assert_allclose(hermite(2, x), 4 * x**2 - 2)
    np.testing.assert_allclose(hermite(3, x), 8 * x**3 - 12 * x)


def test_gh_rule_l2():
    r = gh_rule(2)
    np.testing.assert_allclose(np.sort(r.nodes), [-1 / math.sqrt(2), 1 / math.sqrt(2)], atol=1e-14)
    np.testing.assert_allclose(r.weights, [math.sqrt(math.pi) / 2] * 2, atol=1e-14)


def test_gh_rule_l3_against_roots():
    r = gh_rule(3)
    roots = np.sort(np.roots([8, 0, -12, 0]).real)
    np.testing.assert_allclose(np.sort(r.nodes), roots, atol=1e-12)
    np.testing.assert_allclose(np.sort(r.nodes), [-math.sqrt(1.5), 0, math.sqrt(1.5)], atol=1e-12)
    assert r.weights.sum() == pytest.approx(math.sqrt(math.pi), abs=1e-12)


@pytest.mark.parametrize("L", [2, 3, 5, 10, 14, 20, 30])
def test_gh_rule_exactness(L):
    r = gh_rule(L)
    assert r.weights.sum() == pytest.approx(math.sqrt(math.pi), abs=1e-10)
    for p in range(4):
        if 2 * p <= 2 * L - 1:
            exact = math.gamma(p + 0.5)
            assert np.sum(r.weights * r.nodes ** (2 * p)) == pytest.approx(exact, rel=1e-10)
    ref_x, ref_w = np.polynomial.hermite.hermgauss(L)
    np.testing.assert_allclose(np.sort(r.nodes), ref_x, atol=1e-12)
    np.testing.assert_allclose(r.weights[np.argsort(r.nodes)], ref_w, rtol=1e-9, atol=1e-300)


def test_gh_rule_range():
    for L in (1, 31):
        with pytest.raises(ValueError):
            gh_rule(L)


def test_mi_noise_limit():
    assert mi_gh([[1.0]], [[1.0]], 1e3, qam(4)).bits < 0.01


def test_mi_bpsk_saturation():
    sigma = 10 ** (-30 / 20)
    assert mi_gh([[1.0]], [[1.0]], sigma, qam(2), L=10).bits == pytest.approx(1.0, abs=1e-3)


def test_mi_matches_monte_carlo_2x2():
    rng = np.random.default_rng(2024)
    H = random_complex(rng, 2, 2)
    sigma = 10 ** (-6 / 20)
    gh = mi_gh(H, np.eye(2), sigma, qam(4))
    mc = mi_mc(H, np.eye(2), sigma, qam(4), 200_000, np.random.default_rng(1))
    assert abs(gh.bits - mc.bits) <= max(0.03, 3 * mc.stderr)


def test_mc_reproducible_and_stderr_scaling():
    H = np.array([[1.0, 0.3], [0.2, 0.8]])
    a = mi_mc(H, np.eye(2), 0.7, qam(4), 10_000, np.random.default_rng(5))
    b = mi_mc(H, np.eye(2), 0.7, qam(4), 10_000, np.random.default_rng(5))
    assert a.bits == b.bits
    big = mi_mc(H, np.eye(2), 0.7, qam(4), 1_000_000, np.random.default_rng(6))
    assert 5 < a.stderr / big.stderr < 20
    with pytest.raises(ValueError):
        mi_mc(H, np.eye(2), 0.7, qam(4), 100, np.random.default_rng(0))


def test_guards():
    with pytest.raises(CapacityError, match="16\\^4"):
        mi_gh(np.ones((1, 4)), np.eye(4), 1.0, qam(16))
    with pytest.raises(CapacityError, match="10\\^8"):
        mi_gh(np.eye(4), np.eye(4)[:, :1], 1.0, qam(2), L=10)
    with pytest.raises(ValueError):
        mi_gh(np.eye(2), np.eye(3), 1.0, qam(4))
    with pytest.raises(ValueError):
        mi_gh(np.eye(2), np.eye(2), 0.0, qam(4))


def test_idoe_gaussian_entropy():
    for sigma in (0.5, 1.0, 2.0):
        est = mi_gh([[0.0]], [[1.0]], sigma, qam(4))
        h = idoe(est.f_hat, sigma, est.dims, 4)
        np.testing.assert_allclose(h, math.log2(math.pi * math.e * sigma**2), atol=1e-9)
    h1 = idoe(mi_gh([[0.0]], [[1.0]], 1.0, qam(4)).f_hat, 1.0, (1, 1), 4)
    h2 = idoe(mi_gh([[0.0]], [[1.0]], 2.0, qam(4)).f_hat, 2.0, (1, 1), 4)
    np.testing.assert_allclose(h2 - h1, 2.0, atol=1e-9)


def test_idoe_assembly_identity():
    rng = np.random.default_rng(3)
    H = random_complex(rng, 2, 2)
    sigma = 0.8
    est = mi_gh(H, np.eye(2), sigma, qam(4))
    h_y = np.mean(idoe(est.f_hat, sigma, est.dims, 4))
    # I = mean_k H_k(y) - H(y|x), with H(y|x) the noise entropy
    h_noise = 2 * math.log2(math.pi * math.e * sigma**2)
    assert h_y - h_noise == pytest.approx(est.bits, abs=1e-9)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31))
def test_mi_monotone_in_snr(seed):
    rng = np.random.default_rng(seed)
    H = random_complex(rng, 2, 2)
    vals = [mi_gh(H, np.eye(2), 10 ** (-s / 20), qam(4), L=6).bits for s in range(-10, 31, 5)]
    assert np.all(np.diff(vals) >= -2e-3)
    assert all(0 <= v <= 4 + 1e-6 for v in vals)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31), st.integers(0, 1))
def test_mi_invariant_to_quarter_turn(seed, col):
    rng = np.random.default_rng(seed)
    H = random_complex(rng, 2, 2)
    G = random_complex(rng, 2, 2)
    G2 = G.copy()
    G2[:, col] *= 1j
    a = mi_gh(H, G, 0.9, qam(16), L=6).bits
    b = mi_gh(H, G2, 0.9, qam(16), L=6).bits
    assert a == pytest.approx(b, abs=1e-9)


def test_gh_convergence_2x2():
    rng = np.random.default_rng(11)
    for _ in range(3):
        H = random_complex(rng, 2, 2)
        for snr_db in (0, 6, 12):
            s = 10 ** (-snr_db / 20)
            a = mi_gh(H, np.eye(2), s, qam(4), L=10).bits
            b = mi_gh(H, np.eye(2), s, qam(4), L=14).bits
            assert abs(a - b) < 0.01


def test_high_snr_is_finite():
    H = np.array([[1.0, 0.5], [0.1, 2.0]])
    est = mi_gh(H, np.eye(2), 10 ** (-60 / 20), qam(16))
    assert np.all(np.isfinite(est.f_hat))
    assert est.bits == pytest.approx(8.0, abs=1e-6)


def test_gaussian_mi():
    np.testing.assert_allclose(gaussian_mi([0, 1, 3]), [0, 1, 2])
