import math

import numpy as np
import pytest
from scipy import linalg, optimize

from conftest import cn
from fronthaul_mimo.channel import ArrayGeometry, normalized_los_channel, sample_drop
from fronthaul_mimo.uplink import (
    agc_matrix,
    da_mmse_combiner,
    effective_gains,
    gmi_objective,
    gmi_terms,
    linearize_uplink,
    mr_combiner,
    receive_cov,
    uplink_gmi,
    uplink_rate_perfect,
    uplink_sindr,
    uplink_trial,
)

RESOLUTIONS = (1, 2, 3, None)


def _instance(rng, bits, B=8, U=2, rho=3.0):
    H = cn(rng, (B, U))
    return H, linearize_uplink(H, rho, bits, 1e-4)


def test_agc_examples():
    rho, B = 2.0, 5
    np.testing.assert_allclose(agc_matrix((1 + rho) * np.eye(B)), 1 / math.sqrt(B * (1 + rho)))
    np.testing.assert_allclose(agc_matrix(np.eye(4)), 0.5)
    with pytest.raises(ValueError):
        agc_matrix(np.diag([1.0, 0.0]))


def test_agc_normalizes_every_antenna(rng):
    H = cn(rng, (12, 3))
    C_y = receive_cov(H, np.array([0.5, 2.0, 9.0]))
    a = agc_matrix(C_y)
    np.testing.assert_allclose((a ** 2) * C_y.diagonal().real, 1 / 12, rtol=1e-12)
    assert np.all(a > 0)


def test_receive_cov_per_user_snr_matches_folded_columns(rng):
    H = cn(rng, (6, 3))
    rho = np.array([0.5, 2.0, 4.0])
    np.testing.assert_allclose(receive_cov(H, rho), receive_cov(H * np.sqrt(rho), 1.0), atol=1e-12)
    with pytest.raises(ValueError):
        receive_cov(H, np.ones(2))


def test_mr_combiner_identity_chain(rng):
    H = cn(rng, (6, 2))
    np.testing.assert_array_equal(mr_combiner(H, np.ones(6), np.ones(6)), H)


def test_sindr_single_user_matched_filter(rng):
    # constant-modulus column: equal power per antenna makes the AGC a scalar
    h = 0.8 * np.exp(2j * np.pi * rng.random((16, 1)))
    rho = 2.5
    lin = linearize_uplink(h, rho, None, 1e-4)
    W = mr_combiner(h, lin.agc, lin.gain)
    gamma = uplink_sindr(h, W, lin.agc, lin.gain, lin.error_cov, rho)
    assert gamma[0] == pytest.approx(rho * np.sum(np.abs(h) ** 2), rel=1e-12)
    assert uplink_trial(h, h, rho, None, 1e-4)[0] == pytest.approx(
        math.log2(1 + rho * np.sum(np.abs(h) ** 2)), rel=1e-12)


def test_sindr_vanishes_at_zero_snr(rng):
    H, lin = _instance(rng, 2)
    W = mr_combiner(H, lin.agc, lin.gain)
    assert np.all(uplink_sindr(H, W, lin.agc, lin.gain, lin.error_cov, 1e-12) < 1e-10)


def test_sindr_scalar_rederivation(rng):
    B, U, rho = 2, 2, np.array([1.7, 0.4])
    H = cn(rng, (B, U))
    lin = linearize_uplink(H, rho, 1, 1e-4)
    A, G, Ce = lin.agc, lin.gain, lin.error_cov
    W = cn(rng, (B, U))
    got = uplink_sindr(H, W, A, G, Ce, rho)
    for u in range(U):
        def inner(v):
            return sum(np.conj(W[b, u]) * G[b] * A[b] * H[b, v] for b in range(B))
        num = rho[u] * abs(inner(u)) ** 2
        den = sum(rho[v] * abs(inner(v)) ** 2 for v in range(U) if v != u)
        den += sum(np.conj(W[b, u]) * Ce[b, c] * W[c, u] for b in range(B) for c in range(B)).real
        den += sum(abs(A[b] * G[b] * W[b, u]) ** 2 for b in range(B))
        assert got[u] == pytest.approx(num / den, rel=1e-12)


def test_rate_perfect_examples():
    np.testing.assert_allclose(uplink_rate_perfect([0.0, 1.0, 3.0]), [0.0, 1.0, 2.0], atol=1e-15)


def test_sindr_rejects_zero_combiner(rng):
    H, lin = _instance(rng, 2)
    W = np.zeros_like(H)
    with pytest.raises(ValueError):
        uplink_sindr(H, W, lin.agc, lin.gain, lin.error_cov, 1.0)


@pytest.mark.parametrize("bits", RESOLUTIONS)
def test_scale_invariance(rng, bits):
    H, lin = _instance(rng, bits, B=16, U=3)
    H_hat = H + 0.3 * cn(rng, H.shape)
    W = mr_combiner(H_hat, lin.agc, lin.gain)
    alpha = np.array([2.0 - 1.0j, 0.1j, -7.0])
    s1 = uplink_sindr(H, W, lin.agc, lin.gain, lin.error_cov, 3.0)
    s2 = uplink_sindr(H, W * alpha, lin.agc, lin.gain, lin.error_cov, 3.0)
    np.testing.assert_allclose(s1, s2, rtol=1e-9)
    for u in range(3):
        g1 = uplink_gmi(effective_gains(H, H_hat, W, lin.agc, lin.gain, lin.error_cov, 3.0, u))
        g2 = uplink_gmi(effective_gains(H, H_hat, W * alpha, lin.agc, lin.gain, lin.error_cov, 3.0, u))
        assert g2 == pytest.approx(g1, rel=1e-9)


def test_da_mmse_single_user_formula(rng):
    H, lin = _instance(rng, 1, B=6, U=1)
    W, reg = da_mmse_combiner(H, lin.agc, lin.gain, lin.error_cov, 3.0)
    ga = lin.agc * lin.gain
    ref = np.linalg.solve(lin.error_cov + np.diag(ga ** 2), ga * H[:, 0])
    assert not reg
    np.testing.assert_allclose(W[:, 0] / W[0, 0], ref / ref[0], rtol=1e-9)


def test_da_mmse_ideal_single_user_is_whitened_matched_filter(rng):
    # on an LOS channel every antenna sees the same power, so A is a scalar
    drop = sample_drop(rng, 1, 50, 150, 30, 150)
    h = normalized_los_channel(ArrayGeometry(16, 1.28, 0.01), drop).H
    lin = linearize_uplink(h, 2.0, None, 1e-4)
    W, _ = da_mmse_combiner(h, lin.agc, lin.gain, lin.error_cov, 2.0)
    ref = lin.agc * h[:, 0]
    w = W[:, 0]
    assert abs(np.vdot(w, ref)) == pytest.approx(np.linalg.norm(w) * np.linalg.norm(ref), rel=1e-12)


@pytest.mark.parametrize("bits", RESOLUTIONS)
def test_da_mmse_is_sindr_optimal(rng, bits):
    H, lin = _instance(rng, bits, B=8, U=2, rho=4.0)
    A, G, Ce = lin.agc, lin.gain, lin.error_cov
    W_mr = mr_combiner(H, A, G)
    W_da, _ = da_mmse_combiner(H, A, G, Ce, 4.0)
    s_mr = uplink_sindr(H, W_mr, A, G, Ce, 4.0)
    s_da = uplink_sindr(H, W_da, A, G, Ce, 4.0)
    assert np.all(s_da >= s_mr - 1e-9)
    # generalized-eigenvector oracle for the Rayleigh quotient
    eff = (G * A)[:, None] * H
    for u in range(2):
        signal = 4.0 * np.outer(eff[:, u], eff[:, u].conj())
        other = [v for v in range(2) if v != u]
        noise = 4.0 * eff[:, other] @ eff[:, other].conj().T + Ce + np.diag((G * A) ** 2)
        best = linalg.eigh(signal, noise, eigvals_only=True)[-1]
        assert s_da[u] == pytest.approx(best, rel=1e-8)


def test_gmi_terms_examples():
    t = gmi_terms(1.0, 1.0, 1.0, 1.0)
    assert (t.a, t.b, t.c) == (2.0, 1.0, 1.0)
    assert t.s == pytest.approx(1.0, rel=1e-15)
    t = gmi_terms(0.3 + 0.2j, 0.3 + 0.2j, 0.7, 5.0)
    assert t.s * t.sigma2 == pytest.approx(1.0, rel=1e-12)
    assert t.a == pytest.approx(abs(t.g) ** 2 * t.rho + t.sigma2)
    assert t.b == pytest.approx(abs(t.g_hat) ** 2 * t.rho)
    assert t.c == pytest.approx(abs(t.g - t.g_hat) ** 2 * t.rho + t.sigma2)


def test_closed_form_s_matches_golden_section():
    g, g_hat, rho, sigma2 = 0.9, 1.0, 10.0, 0.5
    t = gmi_terms(g, g_hat, sigma2, rho)
    res = optimize.minimize_scalar(lambda s: -gmi_objective(s, g, g_hat, sigma2, rho),
                                   bracket=(1e-6, 1.0, 10 / sigma2), method="golden", tol=1e-12)
    assert 0 < res.x < 10 / sigma2
    assert t.s == pytest.approx(res.x, abs=1e-6)
    ref = (-2 * t.c + t.b + math.sqrt(t.b ** 2 + 4 * t.a * t.c)) / (2 * t.b * t.c)
    assert t.s == pytest.approx(ref, rel=1e-12)


def test_gmi_zero_snr():
    assert uplink_gmi(gmi_terms(1.0, 0.8, 1.0, 0.0)) == 0.0
    assert uplink_gmi(gmi_terms(1.0, 0.0, 1.0, 1.0)) == 0.0
    assert gmi_terms(1.0, 0.0, 1.0, 1.0).s is None


def test_gmi_mismatch_penalty_and_monte_carlo(rng):
    g, g_hat, rho, sigma2 = 1.0, 0.5, 1.0, 1.0
    t = gmi_terms(g, g_hat, sigma2, rho)
    rate = uplink_gmi(t)
    assert 0 < rate < 1.0
    # Gaussian codebook: y = g sqrt(rho) x + w, metric exp(-s |y - g_hat sqrt(rho) x|^2)
    n = 100_000
    x = cn(rng, n)
    y = g * math.sqrt(rho) * x + math.sqrt(sigma2) * cn(rng, n)
    s, b = t.s, t.b
    log_q = -s * np.abs(y - g_hat * math.sqrt(rho) * x) ** 2
    log_mean_q = -s * np.abs(y) ** 2 / (1 + s * b) - math.log1p(s * b)
    mc = np.mean(log_q - log_mean_q) / math.log(2)
    assert mc == pytest.approx(rate, rel=0.02)


def test_perfect_csi_degeneration(rng):
    for i in range(100):
        bits = RESOLUTIONS[i % 4]
        U = (1, 3)[i % 2]
        H, lin = _instance(rng, bits, B=12, U=U, rho=10 ** rng.uniform(-1, 1))
        rho = np.exp(rng.uniform(-2, 2))
        lin = linearize_uplink(H, rho, bits, 1e-4)
        W = mr_combiner(H, lin.agc, lin.gain)
        ref = uplink_rate_perfect(uplink_sindr(H, W, lin.agc, lin.gain, lin.error_cov, rho))
        for u in range(U):
            t = effective_gains(H, H, W, lin.agc, lin.gain, lin.error_cov, rho, u)
            assert t.s * t.sigma2 == pytest.approx(1.0, rel=1e-9)
            assert uplink_gmi(t) == pytest.approx(ref[u], rel=1e-9)


def test_s_optimality_on_grid(rng):
    grid = np.concatenate([[0.0], np.logspace(-5, 4, 4001)])
    for i in range(100):
        H, lin = _instance(rng, RESOLUTIONS[i % 4], B=8, U=2)
        H_hat = H + 0.5 * cn(rng, H.shape)
        W = mr_combiner(H_hat, lin.agc, lin.gain)
        t = effective_gains(H, H_hat, W, lin.agc, lin.gain, lin.error_cov, 3.0, i % 2)
        best = max(gmi_objective(grid, t.g, t.g_hat, t.sigma2, t.rho).max(), 0.0) / math.log(2)
        assert uplink_gmi(t) >= best - 1e-9


def test_decoder_mismatch_never_helps(rng):
    for i in range(100):
        H, lin = _instance(rng, RESOLUTIONS[i % 4], B=8, U=2)
        H_hat = H + 0.7 * cn(rng, H.shape)
        W = mr_combiner(H_hat, lin.agc, lin.gain)
        matched = uplink_rate_perfect(uplink_sindr(H, W, lin.agc, lin.gain, lin.error_cov, 3.0))
        for u in range(2):
            t = effective_gains(H, H_hat, W, lin.agc, lin.gain, lin.error_cov, 3.0, u)
            assert uplink_gmi(t) <= matched[u] + 1e-12


def test_more_bits_help_on_los_drops(rng):
    geom = {q: ArrayGeometry(64, 1.28, 0.01) for q in (1, 12)}
    wins = 0
    for _ in range(100):
        drop = sample_drop(rng, 4, 50, 150, 30, 150)
        H = normalized_los_channel(geom[1], drop).H
        r1 = uplink_trial(H, H, 3.0, 1, 1e-4)
        r12 = uplink_trial(H, H, 3.0, 12, 1e-4)
        wins += np.all(r12 > r1)
    assert wins == 100


def test_noisy_estimate_rarely_beats_perfect(rng):
    ok = 0
    for _ in range(500):
        H = cn(rng, (16, 2))
        H_hat = H + 2.0 * cn(rng, H.shape)
        imperfect = uplink_trial(H, H_hat, 2.0, 2, 1e-4)
        perfect = uplink_trial(H, H, 2.0, 2, 1e-4)
        assert np.all(imperfect >= 0)
        ok += np.all(imperfect <= perfect + 1e-12)
    assert ok >= 475


def test_uplink_trial_combiner_choice(rng):
    H = cn(rng, (8, 2))
    r_mr = uplink_trial(H, H, 2.0, 3, 1e-4, combiner="mr")
    r_da = uplink_trial(H, H, 2.0, 3, 1e-4, combiner="da-mmse")
    assert np.all(r_da >= r_mr - 1e-9)
    with pytest.raises(ValueError):
        uplink_trial(H, H, 2.0, 3, 1e-4, combiner="zf")
