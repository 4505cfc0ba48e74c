"""Offline fitting of the K-TanH parameter tables.

For each of the 32 input intervals:

1. take every positive BF16 input in [T1, T2] falling in the interval and
   its double-precision TanH target;
2. pick one output exponent for the whole interval, projecting targets with
   a different natural exponent onto mantissa 0 or 127;
3. choose the shift ``r`` and add ``b`` by integer least squares under the
   no-overflow bounds.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from . import numerics as nx
from .kernel import T1_BITS, T2_BITS, TABLE_SIZE, ParamTable, TableValidationError, index_of

P = nx.MANT_BITS  # input mantissa bits
Q = nx.MANT_BITS  # output mantissa bits


@dataclass(frozen=True)
class OptimizerConfig:
    r_max: int = P
    ablation_bmin_zero: bool = False
    exp_lsb_bits: int = 2
    man_msb_bits: int = 3

    def __post_init__(self):
        if not 0 <= self.r_max <= P:
            raise ValueError(f"r_max must lie in [0, {P}], got {self.r_max}")
        if self.exp_lsb_bits + self.man_msb_bits != 5:
            raise ValueError("index scheme must use 5 bits in total")


@dataclass(frozen=True)
class IntervalSample:
    t: int
    m: np.ndarray  # input mantissas
    x: np.ndarray  # decoded inputs
    y: np.ndarray  # unrounded tanh targets
    E_i: np.ndarray  # biased exponent of encode(y)
    M_i: np.ndarray  # mantissa of encode(y)

    @property
    def idx_val(self) -> int:
        return self.t & 0b111


@dataclass(frozen=True)
class IntervalFit:
    t: int
    E: int
    r: int
    b: int
    b_min: int
    b_max: int
    objective: float
    candidates: int


def build_intervals(cfg: OptimizerConfig | None = None) -> list[IntervalSample]:
    cfg = cfg or OptimizerConfig()
    bits = np.arange(T1_BITS, T2_BITS + 1, dtype=np.uint16)
    x = nx.decode_array(bits)
    y = nx.tanh_oracle(x)
    _, E_i, M_i = nx.unpack(nx.encode_array(y).astype(np.int64))
    t = index_of(bits.astype(np.int64), cfg.exp_lsb_bits, cfg.man_msb_bits)
    out = []
    for k in range(1 << (cfg.exp_lsb_bits + cfg.man_msb_bits)):
        sel = t == k
        if not sel.any():
            continue
        out.append(
            IntervalSample(
                t=k,
                m=(bits[sel] & nx.MANT_MASK).astype(np.int64),
                x=x[sel],
                y=y[sel],
                E_i=E_i[sel],
                M_i=M_i[sel],
            )
        )
    return out


def project_to_exponent(iv: IntervalSample, E: int) -> np.ndarray:
    """Mantissas of the targets forced onto output exponent ``E``."""
    M_hat = iv.M_i.copy()
    M_hat[iv.E_i < E] = 0
    M_hat[iv.E_i > E] = (1 << Q) - 1
    return M_hat


def _values(E: int, M_hat) -> np.ndarray:
    return math.ldexp(1.0, E - nx.EXP_BIAS) * (1.0 + np.asarray(M_hat) / (1 << Q))


def select_common_exponent(iv: IntervalSample) -> tuple[int, np.ndarray]:
    """Exponent (from the targets' own exponents) minimizing the squared error.

    Ties go to the smaller exponent.
    """
    best = None
    for E in sorted(set(iv.E_i.tolist())):
        M_hat = project_to_exponent(iv, E)
        sse = float(np.sum((iv.y - _values(E, M_hat)) ** 2))
        if best is None or sse < best[0]:
            best = (sse, E, M_hat)
    return best[1], best[2]


def bounds(r: int, idx_val: int, cfg: OptimizerConfig | None = None,
           man_msb_bits: int = 3) -> tuple[int, int]:
    """Range of the add constant ``b`` that cannot overflow the mantissa."""
    cfg = cfg or OptimizerConfig()
    s = man_msb_bits
    b_max = (1 << P) - 1 - (((idx_val + 1) * (1 << (P - s)) - 1) >> r)
    if cfg.ablation_bmin_zero or r > P - s:
        b_min = 0  # floor(2^(p-s-r)) == 0 once r > p - s
    else:
        b_min = -idx_val * (1 << (P - s - r))
    return b_min, b_max


def _round_half_away(v: float) -> int:
    return int(math.copysign(math.floor(abs(v) + 0.5), v))


def shift_add_objective(m, M_hat, r: int, b: int) -> float:
    resid = np.asarray(M_hat) - ((np.asarray(m) >> r) + b)
    return float(np.sum(resid.astype(np.float64) ** 2))


def fit_shift_add(iv: IntervalSample, E: int, M_hat: np.ndarray,
                  cfg: OptimizerConfig | None = None) -> IntervalFit:
    cfg = cfg or OptimizerConfig()
    best = None
    for r in range(cfg.r_max + 1):
        b_min, b_max = bounds(r, iv.idx_val, cfg, cfg.man_msb_bits)
        b = _round_half_away(float(np.mean(M_hat - (iv.m >> r))))
        b = min(max(b, b_min), b_max)
        obj = shift_add_objective(iv.m, M_hat, r, b)
        # strict < keeps the smaller r on ties; r is unique per candidate
        if best is None or obj < best.objective:
            best = IntervalFit(iv.t, E, r, b, b_min, b_max, obj, cfg.r_max + 1)
    return best


def fit_intervals(cfg: OptimizerConfig | None = None) -> list[IntervalFit]:
    cfg = cfg or OptimizerConfig()
    fits = []
    for iv in build_intervals(cfg):
        E, M_hat = select_common_exponent(iv)
        fits.append(fit_shift_add(iv, E, M_hat, cfg))
    return fits


def generate_table(cfg: OptimizerConfig | None = None) -> ParamTable:
    cfg = cfg or OptimizerConfig()
    fits = fit_intervals(cfg)
    if len(fits) != TABLE_SIZE:
        raise TableValidationError(f"only {len(fits)} of {TABLE_SIZE} intervals reachable")
    fits.sort(key=lambda f: f.t)
    note = f"generated: r_max={cfg.r_max}, b_min_zero={cfg.ablation_bmin_zero}"
    return ParamTable(
        E=[f.E for f in fits],
        r=[f.r for f in fits],
        b=[f.b for f in fits],
        exp_lsb_bits=cfg.exp_lsb_bits,
        man_msb_bits=cfg.man_msb_bits,
        provenance=note,
    )


def entry_objective(iv: IntervalSample, E: int, r: int, b: int) -> float:
    """Shift/add objective of a table entry, targets projected onto its exponent."""
    return shift_add_objective(iv.m, project_to_exponent(iv, E), r, b)


def fit_report_csv(fits: list[IntervalFit]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "E", "r", "b", "b_min", "b_max", "objective", "candidates"])
    for f in fits:
        w.writerow([f"{f.t:05b}", f.E, f.r, f.b, f.b_min, f.b_max, f"{f.objective:.6g}", f.candidates])
    return buf.getvalue()
