"""Built-in acceptance checks, run by ``fronthaul-mimo validate``.

Each check compares the library against an independent reference: a
Monte Carlo experiment, an arbitrary-precision evaluation or a brute-force
search. Checks return a :class:`CheckResult`; the report they print
contains measured values only (no timings), so two runs with the same seed
print identical bytes.
"""
import math
import os
import tempfile
from dataclasses import dataclass, replace

import mpmath
import numpy as np
from scipy import optimize

from . import engine, output
from .config import SystemConfig
from .estimation import (
    dft_pilots,
    monte_carlo_mse,
    mse_1bit_closed_form,
    mse_1bit_floor,
    pilot_model,
)
from .quantizer import (
    QuantizerSpec,
    bussgang_gain,
    calibrate_step,
    calibrated_spec,
    distortion_cov,
    quantize_array,
    quantize_complex,
)
from .uplink import (
    effective_gains,
    gmi_objective,
    linearize_uplink,
    mr_combiner,
    uplink_gmi,
    uplink_rate_perfect,
    uplink_sindr,
)

__all__ = ["CheckResult", "CHECKS", "run_check", "run_checks", "format_result"]


@dataclass
class CheckResult:
    id: int
    name: str
    passed: bool
    detail: str


def _rng(seed, check_id):
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(100, check_id)))


def _cn(rng, shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2)


def check_closed_form_mse(seed, realizations=100_000):
    """Single-antenna, single-user 1-bit estimator against the closed-form MSE."""
    rng = _rng(seed, 1)
    worst, where = 0.0, None
    for n_p in (1, 4, 10, 100):
        for rho in (0.1, 1.0, 10.0):
            model = pilot_model(dft_pilots(n_p, 1), 1.0, rho, 1, 1e-4, 1)
            emp = monte_carlo_mse(rng, _cn(rng, (realizations, 1)), model)
            ref = float(mse_1bit_closed_form(n_p, rho))
            err = abs(emp / ref - 1)
            if err >= worst:
                worst, where = err, (n_p, rho)
    return worst < 0.02, f"max rel err {worst:.4f} at (n_p, rho)={where}; tol 0.02"


def check_mse_floor(seed):
    """Large-pilot MSE floor against an arbitrary-precision arcsin."""
    mpmath.mp.dps = 40
    x = mpmath.mpf(10) / 11
    ref = float(1 - x / mpmath.asin(x))
    ours = float(mse_1bit_floor(10.0))
    ok = abs(ours - 0.2034) <= 1e-3 and abs(ours - ref) < 1e-12
    gaps = [abs(float(mse_1bit_closed_form(1e6, r)) - float(mse_1bit_floor(r))) for r in (0.1, 1.0, 10.0)]
    ok = ok and max(gaps) < 1e-4
    return ok, f"floor(10)={ours:.6f} (mpmath {ref:.6f}); max |mse(1e6)-floor|={max(gaps):.2e}"


def check_saturation(seed, num_antennas=100, num_users=10, realizations=40):
    """1-bit MSE saturates in the pilot length; ideal-converter MSE keeps falling."""
    rng = _rng(seed, 3)
    H = _cn(rng, (num_antennas * realizations, num_users))
    rho = 10.0
    res = {}
    for bits in (1, None):
        vals = []
        for n_p in (1000, 10000):
            model = pilot_model(dft_pilots(n_p, num_users), 1.0, rho, bits, 1e-4, num_antennas)
            vals.append(monte_carlo_mse(rng, H, model))
        res[bits] = vals[1] / vals[0] - 1
    ok = abs(res[1]) < 0.01 and res[None] < -0.5
    return ok, f"1-bit change {res[1]:+.4f} (tol 0.01); ideal change {res[None]:+.4f} (need < -0.5)"


def _random_instance(rng, bits, B, U):
    H = _cn(rng, (B, U))
    rho = 10 ** rng.uniform(-1, 1.5)
    return H, rho, bits


def check_gmi_perfect_csi(seed, instances=200):
    """With a perfect estimate the GMI collapses to log2(1 + SINDR)."""
    rng = _rng(seed, 4)
    worst = 0.0
    for i in range(instances):
        bits = (1, 2, 3, None)[i % 4]
        B = (8, 32)[(i // 4) % 2]
        U = (1, 4)[(i // 8) % 2]
        H, rho, bits = _random_instance(rng, bits, B, U)
        lin = linearize_uplink(H, rho, bits, 1e-4)
        W = mr_combiner(H, lin.agc, lin.gain)
        ref = uplink_rate_perfect(uplink_sindr(H, W, lin.agc, lin.gain, lin.error_cov, rho))
        H_hat = H.copy()
        gmi = np.array([uplink_gmi(effective_gains(H, H_hat, W, lin.agc, lin.gain, lin.error_cov, rho, u))
                        for u in range(U)])
        worst = max(worst, float(np.max(np.abs(gmi - ref) / np.abs(ref))))
    return worst < 1e-9, f"max rel err {worst:.2e} over {instances} instances; tol 1e-9"


def _best_s(g, g_hat, sigma2, rho):
    def f(s):
        return float(gmi_objective(s, g, g_hat, sigma2, rho))

    grid = np.concatenate([[0.0], np.logspace(-6, 4, 2001)])
    vals = gmi_objective(grid, g, g_hat, sigma2, rho)
    i = int(np.argmax(vals))
    lo = grid[max(i - 1, 0)]
    hi = grid[min(i + 1, grid.size - 1)]
    best = float(vals[i])
    if hi > lo:
        r = optimize.minimize_scalar(lambda s: -f(s), bounds=(lo, hi), method="bounded",
                                     options={"xatol": 1e-14 * max(hi, 1.0)})
        best = max(best, -float(r.fun))
    return best


def check_s_optimality(seed, instances=100):
    """Closed-form GMI parameter against a grid search plus bounded refinement."""
    rng = _rng(seed, 5)
    worst = 0.0
    done = 0
    while done < instances:
        B, U = (8, 32)[done % 2], (1, 4)[(done // 2) % 2]
        bits = (1, 2, 3, None)[done % 4]
        H, rho, bits = _random_instance(rng, bits, B, U)
        H_hat = H + math.sqrt(rng.uniform(0.01, 0.5)) * _cn(rng, (B, U))
        lin = linearize_uplink(H, rho, bits, 1e-4)
        W = mr_combiner(H_hat, lin.agc, lin.gain)
        t = effective_gains(H, H_hat, W, lin.agc, lin.gain, lin.error_cov, rho, int(rng.integers(U)))
        done += 1
        ours = uplink_gmi(t)
        best = max(_best_s(t.g, t.g_hat, t.sigma2, t.rho), 0.0) / math.log(2)
        worst = max(worst, best - ours)
    return worst < 1e-6, f"max shortfall vs search {worst:.2e} bit over {instances} instances; tol 1e-6"


def check_bussgang_gain(seed, samples=1_000_000):
    """Analytic gain against the empirical LMMSE coefficient of the quantizer."""
    rng = _rng(seed, 6)
    y = _cn(rng, samples)
    worst = 0.0
    for bits in (1, 2, 3, 4):
        spec = calibrated_spec(bits, 1.0, 1e-4)
        r = quantize_complex(y, spec)
        emp = float(np.vdot(y, r).real / np.vdot(y, y).real)
        ana = float(bussgang_gain(1.0, spec)[0])
        worst = max(worst, abs(emp / ana - 1))
    g12 = float(bussgang_gain(1.0, calibrated_spec(12, 1.0, 1e-4))[0])
    ok = worst < 0.01 and abs(g12 - 1) < 1e-3
    return ok, f"max rel err {worst:.5f} (tol 0.01); gain at Q=12 {g12:.6f}"


def check_arcsine(seed, samples=1_000_000):
    """1-bit output covariance of a correlated pair against simulation."""
    rng = _rng(seed, 7)
    rho = 0.3 + 0.4j
    C = np.array([[1, rho], [np.conj(rho), 1]])
    spec = QuantizerSpec(1, 1.0)
    dist = distortion_cov(C, spec)
    model = np.outer(dist.gain, dist.gain) * C + dist.error_cov
    L = np.linalg.cholesky(C)
    x = L @ _cn(rng, (2, samples))
    r = quantize_complex(x, spec)
    emp = r @ r.conj().T / samples
    rel = np.abs(emp - model) / np.abs(model)
    e_emp = r - dist.gain[:, None] * x
    e_cov = e_emp @ e_emp.conj().T / samples
    e_dev = float(np.max(np.abs(e_cov - dist.error_cov)))
    return bool(np.all(rel < 0.02)), (f"max rel err per entry {rel.max():.4f} (tol 0.02); "
                                      f"distortion cov max abs dev {e_dev:.4f}")


def _sweep(config, resolutions, rho_ul_db, trials):
    cfg = replace(config, resolutions=list(resolutions), rho_ul_db=rho_ul_db, trials=trials)
    return {(r.q, r.csi_mode): r for r in engine.fronthaul_sweep(cfg)}


def check_fronthaul_sweep(seed, trials=500):
    """Outage-rate trends of the uplink sweep at low and high SNR."""
    base = SystemConfig(seed=seed)
    low = _sweep(base, (1, 4), -10.0, trials)
    a = all(low[(1, m)].ul_rate > low[(4, m)].ul_rate for m in ("perfect", "estimated"))
    high = _sweep(base, base.resolutions, 10.0, trials)
    argmax = {m: max(base.resolutions, key=lambda q: high[(q, m)].ul_rate) for m in ("perfect", "estimated")}
    b = all(q in (1, 2, 3) for q in argmax.values())
    gap = abs(high[(8, "perfect")].ul_rate - high[(8, "estimated")].ul_rate) / high[(8, "perfect")].ul_rate
    gap_low = _sweep(base, (8,), -10.0, trials)
    gap_low = abs(gap_low[(8, "perfect")].ul_rate - gap_low[(8, "estimated")].ul_rate) / gap_low[(8, "perfect")].ul_rate
    c = gap < 0.05
    detail = (f"(a) -10 dB UL Q=1 vs Q=4: perfect {low[(1, 'perfect')].ul_rate:.4f}/{low[(4, 'perfect')].ul_rate:.4f}, "
              f"estimated {low[(1, 'estimated')].ul_rate:.4f}/{low[(4, 'estimated')].ul_rate:.4f} {'ok' if a else 'FAIL'}; "
              f"(b) +10 dB argmax Q {argmax['perfect']}/{argmax['estimated']} {'ok' if b else 'FAIL'}; "
              f"(c) Q=8 CSI gap {gap:.4f} at +10 dB {'ok' if c else 'FAIL'} "
              f"(at -10 dB: {gap_low:.4f}, informational)")
    return a and b and c, detail


def check_bidirectional(seed, trials=500):
    """At asymmetric SNRs the bidirectional rate is set by the uplink."""
    cfg = SystemConfig(seed=seed, rho_ul_db=5.0, rho_dl_db=15.0, trials=trials)
    rows = engine.fronthaul_sweep(cfg)
    dev = max(abs(r.bidir_rate / r.ul_rate - 1) for r in rows)
    best = {}
    for m in cfg.csi_modes:
        sel = [r for r in rows if r.csi_mode == m]
        best[m] = max(sel, key=lambda r: r.bidir_rate).q
    ok = dev <= 0.02 and all(q in (1, 2, 3) for q in best.values())
    return ok, (f"max |bidir/UL - 1| {dev:.4f} (tol 0.02); argmax Q "
                f"perfect {best['perfect']}, estimated {best['estimated']}")


def check_determinism(seed):
    """Sweep CSV bytes do not depend on the number of worker processes."""
    cfg = SystemConfig(seed=seed, trials=12, resolutions=[1, 3, 8], num_users=4)
    texts = [output.sweep_csv(engine.fronthaul_sweep(cfg, workers=w)) for w in (1, 2)]
    with tempfile.TemporaryDirectory() as d:
        paths = [os.path.join(d, f"w{i}.csv") for i in range(2)]
        for p, t in zip(paths, texts):
            output.write_text(p, t)
        blobs = [open(p, "rb").read() for p in paths]
    ok = blobs[0] == blobs[1]
    return ok, f"{len(blobs[0])} bytes, identical={ok}"


def check_quantizer(seed, points=10_000):
    """Alphabet, monotonicity, symmetry and granular error over a dense grid."""
    failures = []
    for bits in range(1, 9):
        step = calibrate_step(bits, 1.0, 1e-4)
        spec = QuantizerSpec(bits, step)
        clip = spec.clip_level
        x = np.linspace(-1.5 * clip, 1.5 * clip, points)
        # shift off the cell edges so odd symmetry is well defined
        on_edge = np.isclose(x / step, np.round(x / step), rtol=0, atol=1e-9)
        x = np.where(on_edge, x + 1e-6 * step, x)
        q = quantize_array(x, spec)
        alpha = spec.alphabet()
        idx = np.searchsorted(alpha, q)
        idx = np.clip(idx, 0, alpha.size - 1)
        if not np.all(alpha[idx] == q):
            failures.append(f"Q={bits}: output outside alphabet")
        if np.any(np.diff(q) < 0):
            failures.append(f"Q={bits}: not monotone")
        if not np.array_equal(quantize_array(-x, spec), -q):
            failures.append(f"Q={bits}: not odd-symmetric")
        inside = np.abs(x) <= clip
        if np.any(np.abs(q[inside] - x[inside]) > step / 2 * (1 + 1e-12)):
            failures.append(f"Q={bits}: granular error above step/2")
    return not failures, "; ".join(failures) if failures else f"Q=1..8 on {points} points"


CHECKS = {
    1: ("closed-form 1-bit estimation MSE", check_closed_form_mse),
    2: ("1-bit MSE floor", check_mse_floor),
    3: ("1-bit MSE saturation in pilot length", check_saturation),
    4: ("GMI equals log2(1+SINDR) with perfect CSI", check_gmi_perfect_csi),
    5: ("optimal GMI parameter", check_s_optimality),
    6: ("Bussgang gain vs simulation", check_bussgang_gain),
    7: ("arcsine law vs simulation", check_arcsine),
    8: ("fronthaul sweep trends", check_fronthaul_sweep),
    9: ("bidirectional rate follows uplink", check_bidirectional),
    10: ("parallel determinism", check_determinism),
    11: ("quantizer grid properties", check_quantizer),
}


def run_check(check_id, seed=1):
    name, fn = CHECKS[check_id]
    try:
        passed, detail = fn(seed)
    except Exception as exc:  # a crash is a failed check, not a crashed report
        passed, detail = False, f"error: {type(exc).__name__}: {exc}"
    return CheckResult(check_id, name, bool(passed), detail)


def format_result(r):
    return f"[{'PASS' if r.passed else 'FAIL'}] {r.id:2d} {r.name}: {r.detail}"


def run_checks(seed=1, only=None, stream=None):
    """Run the selected checks (all by default), printing one line per check."""
    ids = sorted(CHECKS) if not only else sorted(set(only))
    results = []
    for i in ids:
        if i not in CHECKS:
            raise KeyError(f"unknown check id {i}")
        r = run_check(i, seed)
        results.append(r)
        if stream is not None:
            print(format_result(r), file=stream, flush=True)
    return results
