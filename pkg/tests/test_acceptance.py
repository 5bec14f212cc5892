"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v``; the summary lines are
written straight to the terminal (not captured). The Monte Carlo criteria
take a few minutes each on one core.
"""
import time

import numpy as np
import pytest

from adaptive_srr.costmodel import ALGORITHMS, flops_probe
from adaptive_srr.experiments import (
    illustrative_config,
    outlier_config,
    outlier_free_config,
    psd_experiment,
    run_montecarlo,
    window_mean_db,
)
from adaptive_srr.explicit import build_explicit_matrix
from adaptive_srr.images import image_pool
from adaptive_srr.motion import Motion, apply_warp, apply_warp_transpose
from adaptive_srr.operators import (
    Decimator,
    OperatorSet,
    TemporalInverse,
    apply_decimate,
    apply_decimate_adjoint,
    apply_kernel,
    apply_kernel_adjoint,
    apply_temporal_inverse,
    identity_kernel,
)
from adaptive_srr.srr import (
    TABLE_OUTLIER,
    Algorithm,
    SrrParams,
    bicubic_init,
    eval_ltsr_lagrangian,
    least_perturbation_step,
    lms_step,
    ltsr_step,
    rlms_step,
    run_sequence,
    tsr_step,
)
from adaptive_srr.synth import SequenceSpec, synthesize

OPS = OperatorSet()

# Pre-build oracle run (200 realizations, seeds 0-3, shipped + scikit-image
# natural photographs): share of non-DC energy within a quarter of the
# Nyquist radius was 0.771 for every seed. Threshold fixed below it.
PSD_THRESHOLD = 0.70


@pytest.fixture
def report(capsys):
    def emit(num, name, ok, detail=""):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {num}: {name}" + (f" ({detail})" if detail else ""))
        assert ok, f"criterion {num} failed: {detail}"

    return emit


def _instance(r, shape=(8, 8)):
    x = r.uniform(0, 255, shape)
    w = r.uniform(0, 255, shape)
    y = r.uniform(0, 255, (shape[0] // 2, shape[1] // 2))
    return x, y, w


def test_c01_operator_oracles(report):
    t0 = time.perf_counter()
    r = np.random.default_rng(0)
    hr, lr = (8, 8), (4, 4)
    x, y = r.normal(size=hr), r.normal(size=lr)
    d = Decimator(2)
    D = build_explicit_matrix("D", hr, decimator=d)
    H = build_explicit_matrix("H", hr, kernel=OPS.blur)
    S = build_explicit_matrix("S", hr, kernel=OPS.smooth)
    Q = build_explicit_matrix("Q", hr, kernel=OPS.q)
    errs = {
        "D": np.abs(apply_decimate(d, x).ravel() - D @ x.ravel()).max(),
        "Dt": np.abs(apply_decimate_adjoint(d, y).ravel() - D.T @ y.ravel()).max(),
        "H": np.abs(apply_kernel(OPS.blur, x).ravel() - H @ x.ravel()).max(),
        "Ht": np.abs(apply_kernel_adjoint(OPS.blur, x).ravel() - H.T @ x.ravel()).max(),
        "S": np.abs(apply_kernel(OPS.smooth, x).ravel() - S @ x.ravel()).max(),
        "Q": np.abs(apply_kernel(OPS.q, x).ravel() - Q @ x.ravel()).max(),
    }
    motions = {
        "int": Motion.translation(1, -2),
        "frac": Motion.translation(0.3, -1.6),
        "dense": Motion.dense(2 * r.normal(size=(2,) + hr)),
    }
    for name, m in motions.items():
        G = build_explicit_matrix("G", hr, motion=m)
        errs[f"G[{name}]"] = np.abs(apply_warp(m, x).ravel() - G @ x.ravel()).max()
        errs[f"Gt[{name}]"] = np.abs(apply_warp_transpose(m, x).ravel() - G.T @ x.ravel()).max()
    for at in (0.017, 16.0):
        Mx = build_explicit_matrix("M", hr, kernel=OPS.q, alpha_t=at)
        mi = TemporalInverse(at, OPS.q, hr)
        errs[f"M[{at}]"] = np.abs(apply_temporal_inverse(mi, x).ravel() - Mx @ x.ravel()).max()
    dt = time.perf_counter() - t0
    worst = max(errs, key=errs.get)
    ok = errs[worst] < 1e-10 and dt < 1.0
    report(1, "operator-oracle equivalence", ok, f"max err {errs[worst]:.2e} on {worst}, {dt:.2f} s")


def test_c02_collapse_identities(report):
    r = np.random.default_rng(1)
    ops_i = OPS.with_q(identity_kernel())
    worst = {"ltsr0": 0.0, "rlms0": 0.0, "tsr_inf": 0.0, "lp": 0.0}
    for _ in range(100):
        x, y, w = _instance(r)
        mu, alpha, at = r.uniform(0.1, 4), r.uniform(0, 1e-2), r.uniform(0.01, 100)
        rl = rlms_step(x, SrrParams(mu=mu, alpha=alpha), OPS, y)
        lt = ltsr_step(x, SrrParams(mu=mu, alpha=alpha, alpha_t=0, algorithm="LTSR_LMS"), OPS, y, w)
        worst["ltsr0"] = max(worst["ltsr0"], np.abs(lt - rl).max())
        r0 = rlms_step(x, SrrParams(mu=mu, alpha=0), OPS, y)
        lm = lms_step(x, SrrParams(mu=mu, algorithm="LMS"), OPS, y)
        worst["rlms0"] = max(worst["rlms0"], np.abs(r0 - lm).max())
        ts = tsr_step(x, SrrParams(mu=mu, alpha=alpha, alpha_t=1e12, algorithm="TSR_LMS"), OPS, y, w)
        worst["tsr_inf"] = max(worst["tsr_inf"], np.linalg.norm(ts - rl) / np.linalg.norm(rl))
        lp = least_perturbation_step(x, SrrParams(mu=mu, alpha=alpha, alpha_t=at, algorithm="LP"), OPS, y, w)
        tq = tsr_step(x, SrrParams(mu=mu, alpha=alpha, alpha_t=at, algorithm="TSR_LMS"), ops_i, y, w)
        worst["lp"] = max(worst["lp"], np.abs(lp - tq).max())
    ok = worst["ltsr0"] <= 1e-12 and worst["rlms0"] <= 1e-12 and worst["tsr_inf"] <= 1e-6 and worst["lp"] <= 1e-10
    detail = ", ".join(f"{k} {v:.1e}" for k, v in worst.items())
    report(2, "collapse identities (100 instances each)", ok, detail)


def test_c03_proximal_and_gradient(report):
    r = np.random.default_rng(2)
    hr = (8, 8)
    D = build_explicit_matrix("D", hr)
    H = build_explicit_matrix("H", hr, kernel=OPS.blur)
    S = build_explicit_matrix("S", hr, kernel=OPS.smooth)
    # surrogate gradient at every R-LMS iterate
    worst_sg = 0.0
    for _ in range(20):
        x, y, _ = _instance(r)
        p = SrrParams(mu=r.uniform(0.5, 4), alpha=r.uniform(0, 1e-2))
        for _k in range(5):
            nxt = rlms_step(x, p, OPS, y)
            xv = x.ravel()
            grad = 2 * H.T @ D.T @ (D @ H @ xv - y.ravel()) + 2 * p.alpha * S.T @ S @ xv
            sg = grad + (2 / p.mu) * (nxt.ravel() - xv)
            worst_sg = max(worst_sg, np.linalg.norm(sg) / np.linalg.norm(xv))
            x = nxt
    # finite-difference gradient of the Lagrangian vs the LTSR direction
    worst_fd = 0.0
    h = 1e-3
    for _ in range(20):
        x, y, w = _instance(r)
        p = SrrParams(mu=r.uniform(0.1, 4), alpha=r.uniform(0, 1e-2), alpha_t=r.uniform(0.01, 1), algorithm="LTSR_LMS")
        g = np.zeros(x.size)
        for i in range(x.size):
            e = np.zeros(x.size)
            e[i] = h
            e = e.reshape(x.shape)
            g[i] = (eval_ltsr_lagrangian(x + e, y, w, p, OPS) - eval_ltsr_lagrangian(x - e, y, w, p, OPS)) / (2 * h)
        direction = ((ltsr_step(x, p, OPS, y, w) - x) / p.mu).ravel()
        worst_fd = max(worst_fd, np.linalg.norm(-2 * direction - g) / np.linalg.norm(g))
    ok = worst_sg < 1e-8 and worst_fd < 1e-4
    report(3, "proximal surrogate and FD gradient", ok, f"surrogate {worst_sg:.1e} x|x|, FD rel {worst_fd:.1e}")


def test_c04_first_iteration(report):
    r = np.random.default_rng(3)
    worst = 0.0
    p = TABLE_OUTLIER[Algorithm.LTSR_LMS]
    for _ in range(50):
        prev, y, _ = _instance(r, (16, 16))
        m = Motion.translation(*r.integers(-2, 3, 2)) if r.random() < 0.5 else Motion.dense(r.normal(size=(2, 16, 16)))
        x0 = apply_warp(m, prev)
        worst = max(worst, np.abs(ltsr_step(x0, p, OPS, y, x0) - rlms_step(x0, p, OPS, y)).max())
    report(4, "first-iteration LTSR/R-LMS equivalence", worst <= 1e-12, f"max diff {worst:.1e}")


def test_c05_illustrative(report):
    t0 = time.perf_counter()
    cfg = illustrative_config(50)
    curves = run_montecarlo(cfg)
    dt = time.perf_counter() - t0
    k2, k100, a100 = "alpha=2e-4,K=2", "alpha=2e-4,K=100", "alpha=100e-4,K=2"
    steady = range(20, 32)
    m = {k: (window_mean_db(curves, k, [32]), window_mean_db(curves, k, steady)) for k in curves}
    a_out = m[k100][0] < m[k2][0]
    a_ss = m[k100][1] < m[k2][1]
    b_out = m[a100][0] < m[k2][0]
    detail = (
        f"frame 32: K=2 {m[k2][0]:.2f}, K=100 {m[k100][0]:.2f}, a=1e-2 {m[a100][0]:.2f} dB; "
        f"frames 20-31: K=2 {m[k2][1]:.3f}, K=100 {m[k100][1]:.3f} dB; {dt:.0f} s"
    )
    report(5, "illustrative example orderings", a_out and a_ss and b_out and dt < 300, detail)


def test_c06_outlier_ordering(report):
    t0 = time.perf_counter()
    curves = run_montecarlo(outlier_config(10))
    dt = time.perf_counter() - t0
    names = {a: a.value for a in TABLE_OUTLIER}
    at = {f: {n: window_mean_db(curves, n, [f]) for n in names.values()} for f in (32, 35)}
    post = {n: window_mean_db(curves, n, range(40, 201)) for n in names.values()}
    ok = dt < 900
    for f in (32, 35):
        for good in ("TSR_LMS", "LTSR_LMS"):
            ok &= at[f][good] < at[f]["RLMS"] and at[f][good] < at[f]["LMS"]
    ok &= post["TSR_LMS"] <= post["RLMS"] and post["LTSR_LMS"] <= post["RLMS"]
    fmt = lambda d: "/".join(f"{d[n]:.2f}" for n in ("LMS", "RLMS", "TSR_LMS", "LTSR_LMS"))
    detail = f"LMS/RLMS/TSR/LTSR dB: f32 {fmt(at[32])}, f35 {fmt(at[35])}, f40+ {fmt(post)}; {dt:.0f} s"
    report(6, "outlier-robustness ordering", ok, detail)


def test_c07_outlier_free_steady_state(report):
    curves = run_montecarlo(outlier_free_config(10))
    last = {n: window_mean_db(curves, n, range(196, 201)) for n in curves}
    ok = (
        last["TSR_LMS"] <= last["RLMS"]
        and last["LTSR_LMS"] <= last["RLMS"]
        and last["RLMS"] <= last["LMS"]
    )
    detail = ", ".join(f"{n} {last[n]:.3f}" for n in ("LMS", "RLMS", "TSR_LMS", "LTSR_LMS")) + " dB"
    report(7, "outlier-free steady-state ordering", ok, detail)


def test_c08_innovation_psd(report):
    t0 = time.perf_counter()
    res = psd_experiment(image_pool(), realizations=200, seed=0)
    dt = time.perf_counter() - t0
    frac = res.low_quarter_fraction()
    ok = frac > 0.5 and frac >= PSD_THRESHOLD and dt < 60
    report(8, "innovation PSD low-frequency concentration", ok, f"fraction {frac:.3f}, threshold {PSD_THRESHOLD}, {dt:.1f} s")


def test_c09_cost_model(report):
    params = {a: TABLE_OUTLIER[a] for a in ALGORITHMS}
    rows = flops_probe(OPS, (16, 16), params) + flops_probe(OPS, (32, 32), params)
    bad = [
        f"{r['algorithm']}@{r['height']}"
        for r in rows
        if r["measured_ops"] != r["predicted_ops"] or r["measured_memory"] != r["predicted_memory"]
    ]
    report(9, "cost-model consistency (16x16, 32x32)", not bad, "all exact" if not bad else "mismatch: " + ", ".join(bad))


def test_c10_throughput(report):
    img = image_pool(min_size=288)[0]
    spec = SequenceSpec(img, (256, 256), 100, seed=0)
    _, lr, walk = synthesize(spec)
    init = bicubic_init(lr[0], 2)
    times = {}
    for alg, p in TABLE_OUTLIER.items():
        t0 = time.perf_counter()
        run_sequence(lr, walk, p, OPS, init)
        times[alg.value] = time.perf_counter() - t0
    worst = max(times.values())
    detail = ", ".join(f"{k} {v:.2f} s" for k, v in times.items())
    report(10, "throughput, 100 frames 128->256, K=2", worst < 10.0, detail)
