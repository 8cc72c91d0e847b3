"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines and timings.
"""

import json
import time
from pathlib import Path

import numpy as np

import trotterbench as tb
from trotterbench.bounds_and_rates import rate_fit
from trotterbench.cli_harness import main

CONFIG_DIR = Path(__file__).parent / "configs"


def run_cli(command, config_name, out_dir):
    code = main([command, "--config", str(CONFIG_DIR / config_name), "--out", str(out_dir)])
    report = json.loads((Path(out_dir) / "report.json").read_text(encoding="utf-8"))
    return code, report


def report_line(name, ok, detail):
    status = "PASS" if ok else "FAIL"
    print(f"[{name}] {status}  {detail}")


def test_criterion_1_holder_scalar_rate(tmp_path):
    start = time.time()
    code, report = run_cli("converge", "rate_holder_scalar.json", tmp_path)
    elapsed = time.time() - start
    slope, r2 = report["slope_left"], report["r2_left"]
    ok = code == 0 and 0.30 <= slope <= 0.80 and r2 >= 0.9 and elapsed < 10.0
    report_line(
        "criterion-1 holder-scalar-rate", ok,
        f"slope={slope:.3f} r2={r2:.4f} elapsed={elapsed:.1f}s",
    )
    assert code == 0
    assert 0.30 <= slope <= 0.80
    assert r2 >= 0.9
    assert elapsed < 10.0


def test_criterion_2_lipschitz_scalar_rate(tmp_path):
    start = time.time()
    code, report = run_cli("converge", "rate_lipschitz_scalar.json", tmp_path)
    elapsed = time.time() - start
    slope = report["slope_left"]
    ok = code == 0 and 0.85 <= slope <= 1.15 and elapsed < 10.0
    report_line(
        "criterion-2 lipschitz-scalar-rate", ok,
        f"slope={slope:.3f} elapsed={elapsed:.1f}s",
    )
    assert code == 0
    assert 0.85 <= slope <= 1.15
    assert elapsed < 10.0


def test_criterion_3_heat1d_rate_both_variants(tmp_path):
    start = time.time()
    code, report = run_cli("converge", "rate_heat1d.json", tmp_path)
    elapsed = time.time() - start
    slope_l, slope_r = report["slope_left"], report["slope_right"]
    # the declared-alpha = 0.7 variant satisfies the rate condition; at 0.8 it fails
    assert report["condition_ok"] is True
    entries = [(n, l) for n, l, _ in report["entries"]]
    assert rate_fit(entries, 0.8, 0.5).condition_ok is False
    ok = code == 0 and slope_l >= 0.30 and slope_r >= 0.30 and elapsed < 60.0
    report_line(
        "criterion-3 heat1d-rate", ok,
        f"slope_left={slope_l:.3f} slope_right={slope_r:.3f} elapsed={elapsed:.1f}s",
    )
    assert code == 0
    assert slope_l >= 0.30 and slope_r >= 0.30
    assert elapsed < 60.0


def test_criterion_4_correspondence_gap(tmp_path):
    start = time.time()
    worst = 0.0
    for name in ("semigroup_scalar.json", "semigroup_heat1d.json"):
        out = tmp_path / name.replace(".json", "")
        code, report = run_cli("semigroup", name, out)
        assert code == 0
        worst = max(worst, report["max_gap"])
    elapsed = time.time() - start
    ok = worst <= 1e-10 and elapsed < 30.0
    report_line(
        "criterion-4 correspondence-gap", ok,
        f"max_gap={worst:.2e} elapsed={elapsed:.1f}s",
    )
    assert worst <= 1e-10
    assert elapsed < 30.0


def builtin_suite():
    a1 = tb.scalar_operator(1.0)
    families = [
        (a1, tb.make_scalar_family("power", 1.0, c=0.0, beta=0.5), 0.5),
        (a1, tb.make_scalar_family("linear", 1.0), 0.5),
        (a1, tb.make_scalar_family("power", 1.0, c=1.0, beta=0.5), 0.5),
        (a1, tb.make_scalar_family("weierstrass", 1.0, c=1.0, beta=0.5, terms=12), 0.5),
    ]
    a3 = tb.diagonalize(np.diag([1.0, 2.0, 5.0]), role=tb.GENERATOR_ROLE)
    b0 = np.array([[1.0, 0.3, 0.0], [0.3, 1.0, 0.2], [0.0, 0.2, 0.5]])
    b1 = np.diag([0.5, 1.0, 0.2])
    families.append((a3, tb.make_synthetic_matrix_family(b0, np.eye(3), "power", 1.0, c=0.0), 0.5))
    families.append((a3, tb.make_synthetic_matrix_family(b1, b0, "linear", 1.0), 0.5))
    a8, heat = tb.make_heat1d_family(
        8, tb.sin_squared_potential, 1.0, "weierstrass", c=1.0, beta=0.5, terms=12,
        declared_alpha=0.75,
    )
    families.append((a8, heat, 0.8))
    return families


def test_criterion_5_explicit_constant_checks():
    start = time.time()
    onestep_taus = [1e-1, 1e-2, 1e-3, 1e-4]
    sandwich_taus = [2.0 ** (-e) for e in range(2, 9)]
    worst_onestep = 0.0
    worst_sandwich = 0.0
    for a_op, family, gamma in builtin_suite():
        rep1 = tb.check_onestep_linear_bound(
            a_op, family, gamma, onestep_taus, grid_n=8, oracle_tol=1e-9
        )
        beta = min(family.declared_beta, 1.0 - 1e-9)
        rep2 = tb.check_sandwiched_defect(
            a_op, family, gamma, beta, sandwich_taus, grid_n=8, oracle_tol=1e-9
        )
        worst_onestep = max(worst_onestep, rep1.max_ratio)
        worst_sandwich = max(worst_sandwich, rep2.max_ratio)
    elapsed = time.time() - start
    ok = worst_onestep <= 1 + 1e-6 and worst_sandwich <= 1 + 1e-6 and elapsed < 30.0
    report_line(
        "criterion-5 explicit-constants", ok,
        f"onestep_max={worst_onestep:.4f} sandwich_max={worst_sandwich:.4f} elapsed={elapsed:.1f}s",
    )
    assert worst_onestep <= 1 + 1e-6
    assert worst_sandwich <= 1 + 1e-6
    assert elapsed < 30.0


def test_criterion_6_beta_sum_scan(tmp_path):
    start = time.time()
    code, report = run_cli("bounds", "bounds_scan.json", tmp_path)
    elapsed = time.time() - start
    ok = code == 0 and report["all_hold"] is True and elapsed < 5.0
    report_line(
        "criterion-6 beta-sum-scan", ok,
        f"rows={report['rows']} all_hold={report['all_hold']} elapsed={elapsed:.1f}s",
    )
    assert code == 0
    assert report["all_hold"] is True
    assert elapsed < 5.0


def test_criterion_7_invariant_suite():
    start = time.time()
    a1 = tb.scalar_operator(1.0)
    a2 = tb.diagonalize(np.diag([1.0, 4.0]), role=tb.GENERATOR_ROLE)
    failures = []

    # contractivity of both products and the reference on a matrix family
    a8, heat = tb.make_heat1d_family(8, tb.sin_squared_potential, 1.0, "weierstrass")
    for n in (1, 7, 64):
        for make in (tb.trotter_left, tb.trotter_right):
            if tb.op_norm(make(a8, heat, 0.0, 1.0, n).matrix) > 1 + 1e-12:
                failures.append(f"contractivity n={n}")
    if tb.op_norm(tb.refine_to_tol(a8, heat, 0.0, 1.0, 1e-6).matrix) > 1 + 1e-12:
        failures.append("reference contractivity")

    # collapse to the free semigroup without perturbation
    freefam = tb.make_synthetic_matrix_family(np.zeros((2, 2)), np.eye(2), "power", 1.0, c=0.0)
    for n in (1, 5, 32):
        v = tb.trotter_left(a2, freefam, 0.0, 1.0, n).matrix
        if np.abs(v - a2.semigroup(1.0)).max() > 1e-12:
            failures.append(f"free collapse n={n}")

    # constant commuting family is reproduced exactly
    cfam = tb.make_synthetic_matrix_family(np.diag([0.5, 0.25]), np.eye(2), "power", 1.0, c=0.0)
    exact = tb.diagonalize(np.diag([1.5, 4.25])).semigroup(1.0)
    for n in (1, 4, 32):
        if np.abs(tb.trotter_left(a2, cfam, 0.0, 1.0, n).matrix - exact).max() > 1e-12:
            failures.append(f"commuting exactness n={n}")

    # cocycle property of the oracle
    tol = 1e-10
    sq = tb.make_scalar_family("power", 1.0, c=1.0, beta=0.5)
    full = tb.refine_to_tol(a1, sq, 0.0, 1.0, tol).matrix
    half1 = tb.refine_to_tol(a1, sq, 0.0, 0.5, tol).matrix
    half2 = tb.refine_to_tol(a1, sq, 0.5, 1.0, tol).matrix
    if tb.op_norm(half2 @ half1 - full) > 3 * tol:
        failures.append("cocycle")

    # block norm equals the assembled-matrix norm (N dim <= 512)
    rng = np.random.default_rng(21)
    blocks = np.zeros((64, 8, 8))
    for i in range(5, 64):
        blocks[i] = rng.normal(size=(8, 8))
    op = tb.BlockShiftOperator(5, blocks)
    assembled = np.linalg.norm(op.to_matrix(), 2)
    if abs(tb.block_norm(op) - assembled) > 1e-10 * max(1.0, assembled):
        failures.append("block norm identity")

    # random smoothing bound |A^g e^{-tau A}| <= tau^-g
    for _ in range(25):
        dim = int(rng.integers(1, 8))
        q, _ = np.linalg.qr(rng.normal(size=(dim, dim)))
        lam = np.sort(rng.uniform(0.01, 30.0, size=dim))
        op_r = tb.SpectralOperator(lam, q)
        gam = float(rng.uniform(0.0, 1.0))
        tau = float(10.0 ** rng.uniform(-3, 1))
        if tb.op_norm(op_r.frac_power(gam) @ op_r.semigroup(tau)) > tau ** (-gam) * (1 + 1e-12):
            failures.append("smoothing sample")

    elapsed = time.time() - start
    ok = not failures
    report_line("criterion-7 invariant-suite", ok, f"failures={failures} elapsed={elapsed:.1f}s")
    assert not failures


def test_criterion_8_oracle_self_consistency():
    start = time.time()
    a1 = tb.scalar_operator(1.0)
    tol = 1e-10
    worst = 0.0
    scalars = [
        tb.make_scalar_family("power", 1.0, c=0.0, beta=0.5),
        tb.make_scalar_family("linear", 1.0),
        tb.make_scalar_family("power", 1.0, c=1.0, beta=0.5),
        tb.make_scalar_family("weierstrass", 1.0, c=1.0, beta=0.5, terms=12),
    ]
    for fam in scalars:
        for s, t in ((0.0, 1.0), (0.25, 1.0), (0.0, 0.5)):
            u_ref = tb.refine_to_tol(a1, fam, s, t, tol).matrix
            u_closed = tb.analytic_commuting(a1, fam, s, t).matrix
            worst = max(worst, tb.op_norm(u_ref - u_closed))
    agree_ok = worst <= tol + 1e-12

    a8, heat_lin = tb.make_heat1d_family(8, tb.sin_squared_potential, 1.0, "linear")
    ref = tb.refine_to_tol(a8, heat_lin, 0.0, 1.0, 1e-11).matrix
    e1 = tb.op_norm(tb.midpoint_exponential(a8, heat_lin, 0.0, 1.0, 64).matrix - ref)
    e2 = tb.op_norm(tb.midpoint_exponential(a8, heat_lin, 0.0, 1.0, 128).matrix - ref)
    ratio = e1 / e2
    ratio_ok = 3.0 <= ratio <= 5.0

    elapsed = time.time() - start
    ok = agree_ok and ratio_ok
    report_line(
        "criterion-8 oracle-consistency", ok,
        f"max_disagreement={worst:.2e} richardson_ratio={ratio:.2f} elapsed={elapsed:.1f}s",
    )
    assert agree_ok
    assert ratio_ok
