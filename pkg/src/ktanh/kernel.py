"""Integer-only K-TanH kernel for BF16, and activations composed from it."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from . import numerics as nx

T1_BITS = 0x3E80  # 0.25 = (0, 01111101, 0000000)
T2_BITS = 0x4070  # 3.75 = (0, 10000000, 1110000)
TABLE_SIZE = 32


class TableValidationError(ValueError):
    """A parameter table would overflow or underflow the 7-bit mantissa."""


@dataclass(frozen=True)
class ParamTable:
    E: tuple[int, ...]
    r: tuple[int, ...]
    b: tuple[int, ...]
    exp_lsb_bits: int = 2
    man_msb_bits: int = 3
    t1_bits: int = T1_BITS
    t2_bits: int = T2_BITS
    provenance: str = ""
    _arrays: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        for name in ("E", "r", "b"):
            object.__setattr__(self, name, tuple(int(v) for v in getattr(self, name)))
        self.validate()
        object.__setattr__(
            self,
            "_arrays",
            (
                np.array(self.E, dtype=np.int32),
                np.array(self.r, dtype=np.int32),
                np.array(self.b, dtype=np.int32),
            ),
        )

    def validate(self) -> None:
        if self.exp_lsb_bits + self.man_msb_bits != 5:
            raise TableValidationError("index scheme must use 5 bits in total")
        for name in ("E", "r", "b"):
            if len(getattr(self, name)) != TABLE_SIZE:
                raise TableValidationError(f"T_{name} must have {TABLE_SIZE} entries")
        for t in range(TABLE_SIZE):
            e, r, b = self.E[t], self.r[t], self.b[t]
            if not 0 <= e <= 255:
                raise TableValidationError(f"index {t:05b}: E={e} outside 0..255")
            if not 0 <= r <= nx.MANT_BITS:
                raise TableValidationError(f"index {t:05b}: r={r} outside 0..7")
            lo, hi = mantissa_range(t, self.man_msb_bits)
            if (lo >> r) + b < 0 or (hi >> r) + b > nx.MANT_MASK:
                raise TableValidationError(
                    f"index {t:05b}: (m >> {r}) + {b} leaves [0, 127] for m in [{lo}, {hi}]"
                )

    # --- serialization ---------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "format": "bfloat16",
            "exp_lsb_bits": self.exp_lsb_bits,
            "man_msb_bits": self.man_msb_bits,
            "t1_bits": f"0x{self.t1_bits:04x}",
            "t2_bits": f"0x{self.t2_bits:04x}",
            "E": list(self.E),
            "r": list(self.r),
            "b": list(self.b),
            "provenance": self.provenance,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "ParamTable":
        if d.get("format", "bfloat16") != "bfloat16":
            raise TableValidationError(f"unsupported format {d['format']!r}")
        return cls(
            E=d["E"],
            r=d["r"],
            b=d["b"],
            exp_lsb_bits=int(d.get("exp_lsb_bits", 2)),
            man_msb_bits=int(d.get("man_msb_bits", 3)),
            t1_bits=int(d.get("t1_bits", "0x3e80"), 16),
            t2_bits=int(d.get("t2_bits", "0x4070"), 16),
            provenance=d.get("provenance", ""),
        )

    @classmethod
    def load(cls, path) -> "ParamTable":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def save(self, path) -> None:
        Path(path).write_text(self.to_json())

    def dump_text(self) -> str:
        """Rows laid out like the published table: index bits, E_t, r_t, b_t."""
        lines = ["index  E_t  r_t  b_t"]
        for t in range(TABLE_SIZE):
            lines.append(f"{t:05b}  {self.E[t]:>3d}  {self.r[t]:>3d}  {self.b[t]:>4d}")
        return "\n".join(lines) + "\n"

    def entry(self, t: int) -> tuple[int, int, int]:
        return self.E[t], self.r[t], self.b[t]


def mantissa_range(t: int, man_msb_bits: int = 3) -> tuple[int, int]:
    """Smallest and largest 7-bit mantissa that can map to index ``t``."""
    shift = nx.MANT_BITS - man_msb_bits
    idx_val = t & ((1 << man_msb_bits) - 1)
    return idx_val << shift, ((idx_val + 1) << shift) - 1


def canonical_table() -> ParamTable:
    """The published optimized table, shipped as a package asset."""
    text = resources.files("ktanh.data").joinpath("table1.json").read_text()
    return ParamTable.from_dict(json.loads(text))


# --- kernel ---------------------------------------------------------------

def index_of(bits, exp_lsb_bits: int = 2, man_msb_bits: int = 3):
    """Table index: exponent LSBs in the high bits, mantissa MSBs in the low bits."""
    e = (bits >> 7) & ((1 << exp_lsb_bits) - 1)
    m = (bits & nx.MANT_MASK) >> (nx.MANT_BITS - man_msb_bits)
    return (e << man_msb_bits) | m


def ktanh_array(bits, table: ParamTable) -> np.ndarray:
    """Vectorized K-TanH over an array of BF16 patterns.

    Integer operations only: a magnitude compare against the threshold
    patterns, a 5-bit gather, one shift and one add.
    """
    x = np.asarray(bits, dtype=np.uint16).astype(np.int32)
    sign = x & nx.SIGN_MASK
    mag = x & 0x7FFF
    TE, Tr, Tb = table._arrays

    t = index_of(mag, table.exp_lsb_bits, table.man_msb_bits)
    man = ((mag & nx.MANT_MASK) >> Tr[t]) + Tb[t]
    y = sign | (TE[t] << 7) | man

    y = np.where(mag < table.t1_bits, x, y)
    y = np.where(mag > table.t2_bits, sign | nx.ONE_BITS, y)
    y = np.where(mag > nx.INF_BITS, nx.QNAN_BITS, y)
    return y.astype(np.uint16)


def ktanh_eval(bits: int, table: ParamTable) -> int:
    """Scalar K-TanH on a single BF16 pattern."""
    bits = int(bits)
    sign, mag = bits & nx.SIGN_MASK, bits & 0x7FFF
    if mag > nx.INF_BITS:
        return nx.QNAN_BITS
    if mag < table.t1_bits:
        return bits
    if mag > table.t2_bits:
        return sign | nx.ONE_BITS
    t = index_of(mag, table.exp_lsb_bits, table.man_msb_bits)
    e, r, b = table.entry(t)
    return sign | (e << 7) | (((mag & nx.MANT_MASK) >> r) + b)


# --- derived activations ------------------------------------------------------
# Argument transforms and outer affine maps are done in double; only the
# TanH core goes through the integer kernel.

def _ktanh_real(z, table: ParamTable) -> np.ndarray:
    return nx.decode_array(ktanh_array(nx.encode_array(z), table))


def ksigmoid_array(bits, table: ParamTable) -> np.ndarray:
    x = nx.decode_array(bits)
    return nx.encode_array(0.5 * (1.0 + _ktanh_real(x / 2.0, table)))


def kswish_array(bits, table: ParamTable) -> np.ndarray:
    x = nx.decode_array(bits)
    return nx.encode_array(x * 0.5 * (1.0 + _ktanh_real(x / 2.0, table)))


def kgelu_array(bits, table: ParamTable) -> np.ndarray:
    x = nx.decode_array(bits)
    with np.errstate(over="ignore", invalid="ignore"):
        z = nx.gelu_tanh_arg(x)
        y = 0.5 * x * (1.0 + _ktanh_real(z, table))
    return nx.encode_array(y)


def ksigmoid_eval(bits: int, table: ParamTable) -> int:
    return int(ksigmoid_array(np.uint16(bits), table))


def kswish_eval(bits: int, table: ParamTable) -> int:
    return int(kswish_array(np.uint16(bits), table))


def kgelu_eval(bits: int, table: ParamTable) -> int:
    return int(kgelu_array(np.uint16(bits), table))


KINDS = {
    "tanh": ktanh_array,
    "sigmoid": ksigmoid_array,
    "swish": kswish_array,
    "gelu": kgelu_array,
}


@dataclass(frozen=True)
class KTanhActivation:
    table: ParamTable
    kind: str = "tanh"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown activation kind {self.kind!r}")

    def __call__(self, bits) -> np.ndarray:
        return KINDS[self.kind](bits, self.table)
