"""Floating-point reference approximators for TanH.

Piecewise minimax polynomials (Remez exchange), Pade rational approximants
solved exactly from the Maclaurin series, and clamped Taylor truncations.
All of them evaluate in double with Horner's rule, extend to negative inputs
by odd symmetry, and hand back BF16 patterns.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.optimize import linprog

from . import numerics as nx

log = logging.getLogger(__name__)


class PadeDegenerateError(ArithmeticError):
    pass


def tanh_maclaurin(n: int) -> list[Fraction]:
    """Exact Maclaurin coefficients c_0..c_n of tanh, from T' = 1 - T^2."""
    c = [Fraction(0)] * (n + 1)
    for k in range(n):
        s = sum((c[j] * c[k - j] for j in range(k + 1)), Fraction(0))
        c[k + 1] = (Fraction(int(k == 0)) - s) / (k + 1)
    return c


def horner(coeffs, x):
    """Evaluate sum(coeffs[i] * x**i)."""
    acc = np.zeros_like(x) + coeffs[-1]
    for a in coeffs[-2::-1]:
        acc = acc * x + a
    return acc


def _odd_eval(fn, x, x_sat: float) -> np.ndarray:
    """Odd extension of fn on |x| with saturation to +-1 and a [-1, 1] clamp."""
    x = np.asarray(x, dtype=np.float64)
    ax = np.abs(x)
    with np.errstate(all="ignore"):
        y = np.where(ax >= x_sat, 1.0, np.clip(fn(np.minimum(ax, x_sat)), -1.0, 1.0))
    # odd functions vanish at 0; also keeps -0 -> -0
    y = np.where(ax == 0.0, 0.0, y)
    y = np.copysign(y, x)
    return np.where(np.isnan(x), np.nan, y)


class _Baseline:
    x_sat: float

    def _core(self, ax):
        raise NotImplementedError

    def eval_real(self, x) -> np.ndarray:
        return _odd_eval(self._core, x, self.x_sat)

    def __call__(self, bits) -> np.ndarray:
        return nx.encode_array(self.eval_real(nx.decode_array(bits)))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


# --- saturation point -------------------------------------------------------------

_SAT_GRID = np.linspace(0.0, 10.0, 200_001)


def best_saturation(fn, lo: float = 0.5, hi: float = 10.0) -> float:
    """Switch-to-+-1 point minimizing the max abs error of the clamped fn.

    Scanned over a 0.01 grid of candidates on a dense 5e-5 evaluation grid;
    the smallest optimal candidate wins.
    """
    xs = _SAT_GRID
    with np.errstate(all="ignore"):
        err_fn = np.abs(np.clip(fn(xs), -1.0, 1.0) - np.tanh(xs))
    err_fn = np.where(np.isfinite(err_fn), err_fn, np.inf)
    err_one = 1.0 - np.tanh(xs)
    run_max = np.maximum.accumulate(err_fn)
    best, best_err = hi, math.inf
    for c in np.round(np.arange(lo, hi + 1e-9, 0.01), 2):
        k = np.searchsorted(xs, c)
        e = max(run_max[k - 1] if k else 0.0, err_one[k:].max())
        if e < best_err - 1e-15:
            best, best_err = float(c), e
    return best


# --- Taylor ------------------------------------------------------------------------

@dataclass(frozen=True)
class TaylorPoly(_Baseline):
    degree: int
    coeffs: tuple[float, ...]
    x_sat: float

    def _core(self, ax):
        return horner(self.coeffs, ax)

    def to_dict(self) -> dict:
        return {"type": "taylor", "degree": self.degree, "coeffs": list(self.coeffs),
                "x_sat": self.x_sat, "clamp": [-1.0, 1.0]}


def fit_taylor(degree: int) -> TaylorPoly:
    """Maclaurin truncation of tanh at ``degree``, clamped and saturated.

    Degree 2 is the truncation ``x`` since the x^2 term of tanh is zero.
    """
    if degree < 1:
        raise ValueError("degree must be >= 1")
    coeffs = tuple(float(c) for c in tanh_maclaurin(degree))
    x_sat = best_saturation(lambda x: horner(coeffs, x))
    return TaylorPoly(degree, coeffs, x_sat)


# --- Pade --------------------------------------------------------------------------

def _solve_exact(A: list[list[Fraction]], rhs: list[Fraction]) -> list[Fraction]:
    n = len(A)
    M = [row[:] + [v] for row, v in zip(A, rhs)]
    for col in range(n):
        piv = next((i for i in range(col, n) if M[i][col] != 0), None)
        if piv is None:
            raise PadeDegenerateError(f"singular Pade system at column {col}")
        M[col], M[piv] = M[piv], M[col]
        for i in range(n):
            if i != col and M[i][col] != 0:
                f = M[i][col] / M[col][col]
                M[i] = [a - f * b for a, b in zip(M[i], M[col])]
    return [M[i][n] / M[i][i] for i in range(n)]


@dataclass(frozen=True)
class PadeRational(_Baseline):
    p: int
    q: int
    num: tuple[Fraction, ...]
    den: tuple[Fraction, ...]
    x_sat: float = math.inf
    _num_f: tuple = field(init=False, repr=False, compare=False)
    _den_f: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_num_f", tuple(float(a) for a in self.num))
        object.__setattr__(self, "_den_f", tuple(float(b) for b in self.den))

    def _core(self, ax):
        return horner(self._num_f, ax) / horner(self._den_f, ax)

    def to_dict(self) -> dict:
        return {"type": "pade", "p": self.p, "q": self.q,
                "num": [str(a) for a in self.num], "den": [str(b) for b in self.den],
                "x_sat": self.x_sat, "clamp": [-1.0, 1.0]}


def pade_coefficients(p: int, q: int) -> tuple[list[Fraction], list[Fraction]]:
    """Exact [p/q] Pade coefficients of tanh, denominator normalized to b_0 = 1.

    Solves Q(x) T(x) - P(x) = O(x^(p+q+1)): the q equations for orders
    p+1..p+q fix the denominator, the orders 0..p then give the numerator.
    """
    if p < 0 or q < 0:
        raise ValueError("p and q must be non-negative")
    c = tanh_maclaurin(p + q)
    coef = lambda k: c[k] if k >= 0 else Fraction(0)  # noqa: E731
    if q:
        A = [[coef(p + 1 + i - (j + 1)) for j in range(q)] for i in range(q)]
        den = [Fraction(1)] + _solve_exact(A, [-coef(p + 1 + i) for i in range(q)])
    else:
        den = [Fraction(1)]
    num = [sum((den[j] * coef(k - j) for j in range(min(k, q) + 1)), Fraction(0))
           for k in range(p + 1)]
    return num, den


def fit_pade(p: int, q: int, saturate: bool = True) -> PadeRational:
    num, den = pade_coefficients(p, q)
    approx = PadeRational(p, q, tuple(num), tuple(den))
    if not saturate:
        return approx
    return PadeRational(p, q, tuple(num), tuple(den), best_saturation(approx._core))


# --- piecewise minimax ---------------------------------------------------------------

@dataclass
class MinimaxPiece:
    a: float
    b: float
    coeffs: np.ndarray  # in u = (x - mid) / half
    error: float
    iterations: int
    fallback: bool = False

    @property
    def mid(self) -> float:
        return 0.5 * (self.a + self.b)

    @property
    def half(self) -> float:
        return 0.5 * (self.b - self.a)

    def __call__(self, x):
        return horner(self.coeffs, (np.asarray(x) - self.mid) / self.half)


@dataclass
class PiecewisePoly(_Baseline):
    degree: int
    breakpoints: np.ndarray
    pieces: list[MinimaxPiece]
    x_sat: float

    def _core(self, ax):
        k = np.clip(np.searchsorted(self.breakpoints, ax, side="right") - 1, 0, len(self.pieces) - 1)
        y = np.empty_like(ax)
        for i, piece in enumerate(self.pieces):
            sel = k == i
            y[sel] = piece(ax[sel])
        return y

    def to_dict(self) -> dict:
        return {
            "type": "minimax",
            "degree": self.degree,
            "breakpoints": [float(v) for v in self.breakpoints],
            "pieces": [{"center": p.mid, "half_width": p.half,
                        "coeffs": [float(c) for c in p.coeffs],
                        "max_err": p.error, "fallback": p.fallback} for p in self.pieces],
            "x_sat": self.x_sat,
            "clamp": [-1.0, 1.0],
        }


GRID_PER_PIECE = 20_001


def _alternating_extrema(u, err, n_ref: int) -> np.ndarray | None:
    """Indices of n_ref alternating extrema of err, including the global max."""
    sign = np.sign(err)
    sign[sign == 0] = 1
    # one extremum per run of constant sign
    cuts = np.flatnonzero(np.diff(sign)) + 1
    runs = np.split(np.arange(len(u)), cuts)
    peaks = np.array([r[np.argmax(np.abs(err[r]))] for r in runs])
    if len(peaks) < n_ref:
        return None
    mags = np.abs(err[peaks])
    while len(peaks) > n_ref:
        # drop the weaker end; a window of n_ref keeps the alternation
        if mags[0] < mags[-1]:
            peaks, mags = peaks[1:], mags[1:]
        else:
            peaks, mags = peaks[:-1], mags[:-1]
    return peaks


def _discrete_minimax(u, f, degree) -> np.ndarray:
    """min_c max_i |V c - f| as a linear program over the dense grid."""
    V = np.vander(u, degree + 1, increasing=True)
    n = degree + 1
    ones = np.ones((len(u), 1))
    A = np.vstack([np.hstack([V, -ones]), np.hstack([-V, -ones])])
    rhs = np.concatenate([f, -f])
    cost = np.zeros(n + 1)
    cost[-1] = 1.0
    res = linprog(cost, A_ub=A, b_ub=rhs, bounds=[(None, None)] * n + [(0, None)], method="highs")
    return res.x[:n]


def remez(a: float, b: float, degree: int, max_iter: int = 60, tol: float = 1e-9) -> MinimaxPiece:
    """Minimax polynomial for tanh on [a, b] by the Remez exchange."""
    n_ref = degree + 2
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    u = np.linspace(-1.0, 1.0, GRID_PER_PIECE)
    f = np.tanh(mid + half * u)
    ref = np.searchsorted(u, -np.cos(np.pi * np.arange(n_ref) / (n_ref - 1)))
    ref = np.clip(ref, 0, len(u) - 1)
    alt = (-1.0) ** np.arange(n_ref)

    coeffs = None
    for it in range(1, max_iter + 1):
        A = np.hstack([np.vander(u[ref], degree + 1, increasing=True), alt[:, None]])
        sol = np.linalg.solve(A, f[ref])
        coeffs, level = sol[:-1], abs(sol[-1])
        err = f - horner(coeffs, u)
        peak = np.abs(err).max()
        new_ref = _alternating_extrema(u, err, n_ref)
        if new_ref is None:
            break
        ref = new_ref
        if peak - level <= tol * peak:
            return MinimaxPiece(a, b, coeffs, float(peak), it)

    log.warning("Remez did not converge on [%g, %g]; using discrete minimax", a, b)
    coeffs = _discrete_minimax(u, f, degree)
    err = np.abs(f - horner(coeffs, u)).max()
    return MinimaxPiece(a, b, coeffs, float(err), max_iter, fallback=True)


def fit_minimax(degree: int, intervals: int = 8, x_sat: float = 4.0) -> PiecewisePoly:
    if degree not in (2, 3):
        raise ValueError(f"minimax degree must be 2 or 3, got {degree}")
    if intervals < 1:
        raise ValueError("need at least one interval")
    if not x_sat > 0:
        raise ValueError("x_sat must be positive")
    bp = np.linspace(0.0, x_sat, intervals + 1)
    pieces = [remez(bp[i], bp[i + 1], degree) for i in range(intervals)]
    return PiecewisePoly(degree, bp, pieces, x_sat)


def equioscillation_spread(piece: MinimaxPiece, degree: int) -> tuple[int, float]:
    """Count of alternating residual extrema and (max - min) / max of their sizes."""
    u = np.linspace(-1.0, 1.0, GRID_PER_PIECE)
    err = np.tanh(piece.mid + piece.half * u) - horner(piece.coeffs, u)
    peaks = _alternating_extrema(u, err, degree + 2)
    if peaks is None:
        return 0, math.inf
    mags = np.abs(err[peaks])
    signs = np.sign(err[peaks])
    if np.any(signs[1:] == signs[:-1]):
        return 0, math.inf
    return len(peaks), float((mags.max() - mags.min()) / mags.max())
