"""Exhaustive accuracy sweeps, comparisons, ablation and timing."""

from __future__ import annotations

import csv
import io
import json
import os
import platform
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from . import numerics as nx
from .kernel import T1_BITS, T2_BITS, TABLE_SIZE, ParamTable, index_of, ktanh_array

REL_ERR_MIN = 2.0 ** -6

Approximator = Callable[[np.ndarray], np.ndarray]  # BF16 bits -> BF16 bits


@dataclass(frozen=True)
class Domain:
    """A set of finite BF16 inputs: |x| in [lo, hi], optionally positive only."""

    lo: float = 0.0
    hi: float = float("inf")
    positive_only: bool = False
    rel_min: float = REL_ERR_MIN

    def patterns(self) -> np.ndarray:
        bits = nx.all_patterns()
        bits = bits[nx.is_finite(bits)]
        if self.positive_only:
            bits = bits[bits < nx.SIGN_MASK]
        ax = np.abs(nx.decode_array(bits))
        return bits[(ax >= self.lo) & (ax <= self.hi)]

    def describe(self) -> str:
        side = "x >= 0" if self.positive_only else "all signs"
        return f"finite bf16, {self.lo:g} <= |x| <= {self.hi:g}, {side}"

    def describe_rel(self) -> str:
        return f"|x| >= {self.rel_min:g}"


FULL = Domain()


@dataclass
class ErrorReport:
    approximator: str
    domain: str
    sweep_size: int
    max_abs_err: float
    argmax_bits: int
    max_rel_err: float
    rel_argmax_bits: int
    rel_err_domain: str
    per_interval: list[tuple[int, float, float]] = field(default_factory=list)

    def row(self) -> dict:
        return {
            "approximator": self.approximator,
            "domain": self.domain,
            "max_abs_err": f"{self.max_abs_err:.9e}",
            "argmax_bits_hex": f"0x{self.argmax_bits:04x}",
            "max_rel_err": f"{self.max_rel_err:.9e}",
            "rel_argmax_bits_hex": f"0x{self.rel_argmax_bits:04x}",
            "sweep_size": self.sweep_size,
        }

    def to_dict(self) -> dict:
        d = asdict(self)
        d["per_interval"] = [
            {"t": f"{t:05b}", "max_abs_err": mx, "mean_abs_err": mean} for t, mx, mean in self.per_interval
        ]
        return d


CSV_FIELDS = ["approximator", "domain", "max_abs_err", "argmax_bits_hex",
              "max_rel_err", "rel_argmax_bits_hex", "sweep_size"]


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("KTANH_THREADS", "1")))
    except ValueError:
        return 1


def _apply(approx: Approximator, bits: np.ndarray, threads: int) -> np.ndarray:
    if threads <= 1 or len(bits) < 4096:
        return approx(bits)
    chunks = np.array_split(bits, threads)
    with ThreadPoolExecutor(threads) as pool:
        return np.concatenate(list(pool.map(approx, chunks)))


def sweep(approx: Approximator, domain: Domain = FULL, name: str = "approx",
          threads: int | None = None) -> ErrorReport:
    bits = domain.patterns()
    x = nx.decode_array(bits)
    y = nx.decode_array(_apply(approx, bits, threads or _threads()))
    ref = nx.tanh_oracle(x)
    abs_err = np.abs(y - ref)
    i = int(np.argmax(abs_err))

    rel_sel = np.flatnonzero(np.abs(x) >= domain.rel_min)
    if len(rel_sel):
        rel = abs_err[rel_sel] / np.abs(ref[rel_sel])
        j = int(np.argmax(rel))
        max_rel, rel_bits = float(rel[j]), int(bits[rel_sel[j]])
    else:
        max_rel, rel_bits = 0.0, 0

    mag = bits & 0x7FFF
    on_table = (mag >= T1_BITS) & (mag <= T2_BITS)
    t = index_of(mag.astype(np.int64))
    per_interval = []
    for k in range(TABLE_SIZE):
        sel = on_table & (t == k)
        e = abs_err[sel]
        per_interval.append((k, float(e.max()) if e.size else 0.0, float(e.mean()) if e.size else 0.0))

    return ErrorReport(
        approximator=name,
        domain=domain.describe(),
        sweep_size=int(len(bits)),
        max_abs_err=float(abs_err[i]),
        argmax_bits=int(bits[i]),
        max_rel_err=max_rel,
        rel_argmax_bits=rel_bits,
        rel_err_domain=domain.describe_rel(),
        per_interval=per_interval,
    )


def point_errors(approx: Approximator, bits: int) -> tuple[float, float]:
    """Absolute and relative error of approx at one input pattern."""
    x = nx.decode(bits)
    y = nx.decode(int(approx(np.array([bits], dtype=np.uint16))[0]))
    ref = nx.tanh_oracle(x)
    err = abs(y - ref)
    return err, (err / abs(ref) if ref else float("inf"))


def compare(approximators: dict[str, Approximator], domain: Domain = FULL) -> list[ErrorReport]:
    """One report per approximator, ranked by max absolute error."""
    if not approximators:
        raise ValueError("need at least one approximator")
    reports = [sweep(a, domain, name) for name, a in approximators.items()]
    return sorted(reports, key=lambda r: (r.max_abs_err, r.approximator))


def reports_csv(reports: list[ErrorReport]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
    w.writeheader()
    for r in reports:
        w.writerow(r.row())
    return buf.getvalue()


def reports_json(reports: list[ErrorReport]) -> str:
    payload = [dict(rank=k + 1, **r.to_dict()) for k, r in enumerate(reports)]
    return json.dumps(payload, indent=2) + "\n"


@dataclass
class AblationReport:
    default: ErrorReport
    ablation: ErrorReport
    differing: list[int]

    def to_dict(self) -> dict:
        return {
            "default": self.default.to_dict(),
            "ablation": self.ablation.to_dict(),
            "differing_indices": [f"{t:05b}" for t in self.differing],
            "ablation_worse": self.ablation.max_abs_err > self.default.max_abs_err,
        }


def ablation_report(default: ParamTable, ablation: ParamTable, domain: Domain = FULL) -> AblationReport:
    differing = [t for t in range(TABLE_SIZE) if default.entry(t) != ablation.entry(t)]
    return AblationReport(
        default=sweep(lambda b: ktanh_array(b, default), domain, "ktanh-default"),
        ablation=sweep(lambda b: ktanh_array(b, ablation), domain, "ktanh-ablation"),
        differing=differing,
    )


# --- timing ----------------------------------------------------------------------

@dataclass
class BenchReport:
    approximator: str
    ns_per_eval: float
    batch: int
    reps: int
    host: str

    def row(self) -> dict:
        return {"approximator": self.approximator, "batch": self.batch, "reps": self.reps,
                "ns_per_eval": f"{self.ns_per_eval:.4f}", "host": self.host}


BENCH_FIELDS = ["approximator", "batch", "reps", "ns_per_eval", "host"]


def host_description() -> str:
    return f"{platform.machine()} {platform.processor() or platform.system()} python-{platform.python_version()} numpy-{np.__version__}"


def bench_batch(batch: int, seed: int = 0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    bits = rng.integers(0, 1 << 16, size=batch, dtype=np.uint32).astype(np.uint16)
    return np.where(nx.is_finite(bits), bits, np.uint16(0)).astype(np.uint16)


def time_callable(fn, arg, reps: int) -> float:
    best = float("inf")
    for _ in range(reps):
        t0 = time.perf_counter_ns()
        fn(arg)
        best = min(best, time.perf_counter_ns() - t0)
    return best


def bench(approximators: dict[str, Approximator], batch: int = 65536, reps: int = 10) -> list[BenchReport]:
    """Min-of-reps wall time per element.  Always includes the native tanh row."""
    if batch < 1024:
        raise ValueError("batch must be at least 1024")
    if reps < 1:
        raise ValueError("reps must be positive")
    bits = bench_batch(batch)
    host = host_description()
    out = []
    for name, fn in approximators.items():
        fn(bits)  # warm-up
        out.append(BenchReport(name, time_callable(fn, bits, reps) / batch, batch, reps, host))
    x32 = nx.decode_array(bits).astype(np.float32)
    np.tanh(x32)
    out.append(BenchReport("native-tanh-f32", time_callable(np.tanh, x32, reps) / batch, batch, reps, host))
    return out


def bench_csv(reports: list[BenchReport]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=BENCH_FIELDS, lineterminator="\n")
    w.writeheader()
    for r in reports:
        w.writerow(r.row())
    return buf.getvalue()
