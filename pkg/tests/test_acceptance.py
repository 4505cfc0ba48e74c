"""Exit criteria.  Each test prints one PASS/FAIL line (visible with -s or -v -rA)."""

import itertools
import time

import numpy as np
import pytest

from ktanh import baselines as bl
from ktanh import evaluate as ev
from ktanh import kernel as k
from ktanh import numerics as nx
from ktanh import optimizer as op


def report(num, ok, detail):
    print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {num}: {detail}")
    assert ok, detail


@pytest.fixture(scope="module")
def table1():
    return k.canonical_table()


@pytest.fixture(scope="module")
def kt(table1):
    return lambda b: k.ktanh_array(b, table1)


def test_c01_kernel_accuracy(kt):
    t0 = time.perf_counter()
    rep = ev.sweep(kt, ev.FULL, "ktanh")
    dt = time.perf_counter() - t0
    ok = rep.max_abs_err <= 2.0e-2 and rep.max_rel_err <= 3.5e-2 and dt < 1.0
    report(1, ok, f"max_abs={rep.max_abs_err:.4e} (<=2.0e-2, paper 1.67e-2) "
                  f"max_rel={rep.max_rel_err:.4%} over {rep.rel_err_domain} (<=3.5%, paper 3.03%) in {dt:.3f}s")


def test_c02_optimizer_regenerates_table1(table1):
    t0 = time.perf_counter()
    gen = op.generate_table()
    dt = time.perf_counter() - t0
    ivs = {iv.t: iv for iv in op.build_intervals()}
    worse = [t for t in range(32)
             if op.entry_objective(ivs[t], *gen.entry(t)) > op.entry_objective(ivs[t], *table1.entry(t))]
    exact = sum(gen.entry(t) == table1.entry(t) for t in range(32))
    report(2, not worse and dt < 1.0,
           f"objective <= published on {32 - len(worse)}/32 indices; exact matches {exact}/32; {dt:.3f}s")


def test_c03_bounds_formulas():
    bad = []
    for r, idx in itertools.product(range(8), range(8)):
        lo, hi = op.bounds(r, idx)
        ms = np.arange(idx * 16, idx * 16 + 16)
        for b in range(lo, hi + 1):
            out = (ms >> r) + b
            if out.min() < 0 or out.max() > 127:
                bad.append((r, idx, b))
    hand = op.bounds(0, 0) == (0, 112) and op.bounds(0, 7) == (-112, 0)
    report(3, not bad and hand, f"{len(bad)} overflowing (r, idx, b) triples; hand values match: {hand}")


def test_c04_odd_symmetry(kt):
    x = nx.all_patterns()
    x = x[~nx.is_nan(x)]
    mism = int(np.count_nonzero(kt(x ^ 0x8000) != (kt(x) ^ 0x8000)))
    report(4, mism == 0 and len(x) == 65536 - 254, f"{mism} mismatches over {len(x)} non-NaN patterns")


def test_c05_path_exactness(kt):
    x = nx.all_patterns()
    y = kt(x)
    mag = x & 0x7FFF
    bypass = mag < k.T1_BITS
    sat = (mag > k.T2_BITS) & (mag <= nx.INF_BITS)
    nan = mag > nx.INF_BITS
    ok_b = np.array_equal(y[bypass], x[bypass])
    ok_s = np.array_equal(y[sat], (x[sat] & 0x8000) | nx.ONE_BITS)
    ok_n = bool(np.all(nx.is_nan(y[nan])))
    report(5, ok_b and ok_s and ok_n,
           f"bypass {ok_b} ({bypass.sum()}), saturate incl. Inf {ok_s} ({sat.sum()}), NaN {ok_n} ({nan.sum()})")


def test_c06_ablation(table1):
    default = op.generate_table()
    abl = op.generate_table(op.OptimizerConfig(ablation_bmin_zero=True))
    e_def = ev.sweep(lambda b: k.ktanh_array(b, default)).max_abs_err
    e_pub = ev.sweep(lambda b: k.ktanh_array(b, table1)).max_abs_err
    e_abl = ev.sweep(lambda b: k.ktanh_array(b, abl)).max_abs_err
    report(6, e_abl > e_def and e_abl > e_pub,
           f"b_min=0 max_abs={e_abl:.4e} > default {e_def:.4e} (published table {e_pub:.4e})")


def test_c07_baseline_ordering(kt):
    e78 = ev.sweep(bl.fit_pade(7, 8)).max_abs_err
    e32 = ev.sweep(bl.fit_pade(3, 2)).max_abs_err
    ek = ev.sweep(kt).max_abs_err
    ok = e78 < ek < e32 and e78 <= e32 / 10
    report(7, ok, f"pade7/8 {e78:.4e} < ktanh {ek:.4e} < pade3/2 {e32:.4e}; "
                  f"ratio {e32 / e78:.2f} >= 10 (paper 1e-4 / 1.67e-2 / 2.35e-2)")


def test_c08_pade_correctness():
    num, den = bl.pade_coefficients(3, 2)
    want = [0, 1, 0, 1 / 15, 1, 0, 6 / 15]
    got = [float(v) for v in num + den]
    coeff_ok = all(abs(g - w) <= 1e-12 * max(1, abs(w)) for g, w in zip(got, want))
    import mpmath
    series_ok = True
    for p, q in ((3, 2), (7, 8)):
        n_, d_ = bl.pade_coefficients(p, q)
        with mpmath.workdps(80):
            r = []
            for x in (mpmath.mpf("1e-2"), mpmath.mpf("1e-3")):
                P = sum(mpmath.mpf(a.numerator) / a.denominator * x ** i for i, a in enumerate(n_))
                Q = sum(mpmath.mpf(b.numerator) / b.denominator * x ** i for i, b in enumerate(d_))
                r.append(abs(P / Q - mpmath.tanh(x)) / x ** (p + q + 1))
        series_ok &= bool(r[1] <= r[0] < 1)
    report(8, coeff_ok and series_ok, f"[3/2] coefficients match x(15+x^2)/(15+6x^2): {coeff_ok}; "
                                      f"series agree through order p+q for [3/2], [7/8]: {series_ok}")


def test_c09_minimax_equioscillation():
    worst, counts_ok = 0.0, True
    for degree in (2, 3):
        for piece in bl.fit_minimax(degree).pieces:
            n, spread = bl.equioscillation_spread(piece, degree)
            counts_ok &= n == degree + 2
            worst = max(worst, spread)
    report(9, counts_ok and worst <= 0.05, f"all pieces have degree+2 alternating extrema: {counts_ok}; "
                                           f"worst magnitude spread {worst:.2e} (<= 5%)")


def test_c10_derived_activations(table1):
    t0 = time.perf_counter()
    s0 = nx.decode(k.ksigmoid_eval(0, table1))
    w0 = nx.decode(k.kswish_eval(0, table1))
    x = nx.all_patterns()
    x = x[nx.is_finite(x)]
    xd = nx.decode_array(x)
    x = x[np.abs(xd) <= 5]
    xd = nx.decode_array(x)
    g = nx.decode_array(k.kgelu_array(x, table1))
    gerr = float(np.max(np.abs(g - nx.gelu_oracle(xd))))
    dt = time.perf_counter() - t0
    report(10, s0 == 0.5 and w0 == 0.0 and gerr <= 2.5e-2 and dt < 1.0,
           f"ksigmoid(0)={s0} kswish(0)={w0} max|kgelu-GELU| on [-5,5]={gerr:.4e} (<=2.5e-2) in {dt:.3f}s")


def test_c11_bench_report_only(kt):
    rows = ev.bench({"ktanh": kt}, batch=65536, reps=10)
    names = [r.approximator for r in rows]
    ok = names == ["ktanh", "native-tanh-f32"] and all(r.ns_per_eval > 0 for r in rows)
    report(11, ok, "rows: " + ", ".join(f"{r.approximator} {r.ns_per_eval:.2f} ns/eval" for r in rows)
                   + " (report only, no ratio asserted)")
