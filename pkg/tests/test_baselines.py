import json
import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest

from ktanh import baselines as bl
from ktanh import numerics as nx


@pytest.fixture(scope="module")
def fitted():
    return {
        "minimax2": bl.fit_minimax(2),
        "minimax3": bl.fit_minimax(3),
        "pade32": bl.fit_pade(3, 2),
        "pade78": bl.fit_pade(7, 8),
        "taylor2": bl.fit_taylor(2),
        "taylor3": bl.fit_taylor(3),
    }


def sweep_max(approx, finite_patterns):
    x = nx.decode_array(finite_patterns)
    return np.max(np.abs(nx.decode_array(approx(finite_patterns)) - np.tanh(x)))


def test_maclaurin_coefficients():
    c = bl.tanh_maclaurin(9)
    assert c == [0, 1, 0, Fraction(-1, 3), 0, Fraction(2, 15), 0, Fraction(-17, 315), 0, Fraction(62, 2835)]


def test_maclaurin_against_mpmath():
    c = bl.tanh_maclaurin(15)
    with mpmath.workdps(50):
        ref = mpmath.taylor(mpmath.tanh, 0, 15)
    for a, b in zip(c, ref):
        assert abs(float(a) - float(b)) <= 1e-15 * max(1.0, abs(float(b)))


def test_pade32_closed_form():
    num, den = bl.pade_coefficients(3, 2)
    # x (15 + x^2) / (15 + 6 x^2), normalized to a unit constant denominator
    want_num = [0, 1, 0, Fraction(1, 15)]
    want_den = [1, 0, Fraction(6, 15)]
    for got, want in zip(num + den, want_num + want_den):
        assert abs(float(got) - float(want)) <= 1e-12 * max(1.0, abs(float(want)))


def test_pade_value_and_slope_at_zero():
    p = bl.fit_pade(3, 2)
    assert p.eval_real(0.0) == 0.0
    h = 1e-6
    assert (p.eval_real(h) - p.eval_real(-h)) / (2 * h) == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("p, q", [(3, 2), (7, 8)])
def test_pade_series_agreement(p, q):
    num, den = bl.pade_coefficients(p, q)
    ratios, next_order = [], []
    with mpmath.workdps(80):
        for x in (mpmath.mpf("1e-2"), mpmath.mpf("1e-3")):
            P = sum(mpmath.mpf(a.numerator) / a.denominator * x ** i for i, a in enumerate(num))
            Q = sum(mpmath.mpf(b.numerator) / b.denominator * x ** i for i, b in enumerate(den))
            err = abs(P / Q - mpmath.tanh(x))
            ratios.append(err / x ** (p + q + 1))
            next_order.append(err / x ** (p + q + 2))
    # bounded at order p+q+1; odd remainder makes order p+q+2 the leading term
    assert ratios[1] <= ratios[0] < 1
    assert 0 < next_order[1]
    assert float(abs(next_order[0] - next_order[1]) / next_order[1]) < 0.01


def test_pade_degenerate():
    # T(x) has c_2 = 0 and c_1 = 1; a [0/1] fit needs c_0 = 0 as pivot
    with pytest.raises(bl.PadeDegenerateError):
        bl.pade_coefficients(0, 1)


def test_pade78_beats_pade32_by_10x(fitted, finite_patterns):
    e78 = sweep_max(fitted["pade78"], finite_patterns)
    e32 = sweep_max(fitted["pade32"], finite_patterns)
    assert e78 <= e32 / 10


def test_taylor_coeffs(fitted):
    assert fitted["taylor3"].coeffs == (0.0, 1.0, 0.0, -1.0 / 3.0)
    assert fitted["taylor2"].coeffs == (0.0, 1.0, 0.0)
    assert nx.decode(int(fitted["taylor3"](np.array([nx.encode(1.0)], dtype=np.uint16))[0])) == nx.decode(nx.encode(2 / 3))


def test_minimax_rejects_bad_degree():
    with pytest.raises(ValueError):
        bl.fit_minimax(1)
    with pytest.raises(ValueError):
        bl.fit_minimax(2, intervals=0)


@pytest.mark.parametrize("degree", [2, 3])
def test_minimax_equioscillation(fitted, degree):
    for piece in fitted[f"minimax{degree}"].pieces:
        count, spread = bl.equioscillation_spread(piece, degree)
        assert count == degree + 2
        assert spread <= 0.05
        assert not piece.fallback


def test_minimax_degree2_on_1_2():
    piece = bl.remez(1.0, 2.0, 2)
    u = np.linspace(-1, 1, 100001)
    err = np.tanh(piece.mid + piece.half * u) - bl.horner(piece.coeffs, u)
    # independent scan: local extrema of |err| at alternating signs
    interior = np.flatnonzero((np.abs(err[1:-1]) >= np.abs(err[:-2])) & (np.abs(err[1:-1]) >= np.abs(err[2:]))) + 1
    idx = np.concatenate([[0], interior, [len(u) - 1]])
    big = idx[np.abs(err[idx]) > 0.9 * np.abs(err).max()]
    assert len(big) == 4
    assert np.all(np.sign(err[big][1:]) != np.sign(err[big][:-1]))


def test_minimax_deg3_error_small(fitted):
    # the polynomial part alone; saturation at 4 adds 1 - tanh(4)
    assert max(p.error for p in fitted["minimax3"].pieces) <= 1e-4


def test_discrete_minimax_agrees_with_remez():
    piece = bl.remez(0.5, 1.0, 3)
    u = np.linspace(-1, 1, 2001)
    c = bl._discrete_minimax(u, np.tanh(0.75 + 0.25 * u), 3)
    err = np.abs(np.tanh(0.75 + 0.25 * u) - bl.horner(c, u)).max()
    assert err == pytest.approx(piece.error, rel=1e-3)


def test_zero_and_odd(fitted, patterns):
    x = patterns[~nx.is_nan(patterns)]
    for name, a in fitted.items():
        assert int(a(np.array([0], dtype=np.uint16))[0]) == 0, name
        assert np.array_equal(a(x ^ 0x8000), a(x) ^ 0x8000), name


def test_saturation(fitted):
    big = np.array([nx.encode(v) for v in (4.0, 10.0, 1e30, math.inf)], dtype=np.uint16)
    y = nx.decode_array(fitted["minimax3"](big))
    assert np.all(y == 1.0)
    assert np.all(nx.decode_array(fitted["pade78"](big)) == 1.0)


def test_error_ordering(fitted, finite_patterns):
    e = {k: sweep_max(a, finite_patterns) for k, a in fitted.items()}
    assert e["minimax3"] <= e["minimax2"]
    assert e["pade78"] <= e["pade32"]
    assert e["taylor3"] <= e["taylor2"]


def test_json_serialization(fitted):
    for a in fitted.values():
        d = json.loads(a.to_json())
        assert d["type"] in {"minimax", "pade", "taylor"}
        assert d["clamp"] == [-1.0, 1.0]
    d = json.loads(fitted["pade32"].to_json())
    assert d["den"] == ["1", "0", "2/5"]
