"""BFloat16 codec and double-precision reference activations.

A BF16 value is carried around as its raw 16-bit pattern (``np.uint16`` in
bulk, plain ``int`` for scalars).  Layout is (sign, exponent, mantissa) =
(1, 8, 7), i.e. the upper half of an IEEE float32.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import erf

EXP_BIAS = 127
MANT_BITS = 7
SIGN_MASK = 0x8000
EXP_MASK = 0x7F80
MANT_MASK = 0x007F
INF_BITS = 0x7F80
QNAN_BITS = 0x7FC0
ONE_BITS = 0x3F80

GELU_A = 0.044715
_SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)


def pack(s: int, e: int, m: int) -> int:
    """Assemble a BF16 bit pattern from sign, biased exponent and mantissa."""
    if not (0 <= s <= 1 and 0 <= e <= 255 and 0 <= m <= MANT_MASK):
        raise ValueError(f"field out of range: s={s} E={e} M={m}")
    return (s << 15) | (e << 7) | m


def unpack(bits):
    """Split bit pattern(s) into ``(s, E, M)``. Works on ints and arrays."""
    return (bits >> 15) & 1, (bits >> 7) & 0xFF, bits & MANT_MASK


def all_patterns() -> np.ndarray:
    """Every one of the 65,536 BF16 patterns, in bit order."""
    return np.arange(1 << 16, dtype=np.uint32).astype(np.uint16)


def is_nan(bits) -> np.ndarray:
    return (np.asarray(bits, dtype=np.uint16) & 0x7FFF) > INF_BITS


def is_finite(bits) -> np.ndarray:
    return (np.asarray(bits, dtype=np.uint16) & EXP_MASK) != EXP_MASK


def decode_array(bits) -> np.ndarray:
    """Exact float64 values of BF16 patterns (subnormals kept, not flushed)."""
    b = np.asarray(bits, dtype=np.uint16)
    f32 = (b.astype(np.uint32) << 16).view(np.float32)
    with np.errstate(invalid="ignore"):
        return f32.astype(np.float64)


def decode(bits: int) -> float:
    return float(decode_array(np.uint16(bits)))


def encode_array(x) -> np.ndarray:
    """Round float64 values to the nearest BF16, ties to even.

    Rounding is done once, directly from double, so there is no double
    rounding through float32.  Overflow goes to +-Inf; NaN becomes the
    canonical quiet NaN.
    """
    x = np.asarray(x, dtype=np.float64)
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    out = np.empty(x.shape, dtype=np.uint16)

    nan = np.isnan(x)
    fin = np.isfinite(x)
    with np.errstate(over="ignore", invalid="ignore"):
        _, e = np.frexp(np.where(fin, x, 0.0))
        # 8 significant bits for normals; fixed 2^-133 spacing below 2^-126
        quantum = np.ldexp(1.0, np.maximum(e, -125) - 8)
        y = np.where(fin, np.round(x / quantum) * quantum, x)
        y32 = y.astype(np.float32)  # exact for finite y below 2^128
    bits = (y32.view(np.uint32) >> 16).astype(np.uint16)
    out[:] = bits
    out[nan] = QNAN_BITS
    return out[0] if scalar else out


def encode(x: float) -> int:
    return int(encode_array(np.float64(x)))


# --- reference activations (double precision) -------------------------------

def tanh_oracle(x):
    """Reference TanH.  Evaluated on |x| and re-signed so it is exactly odd."""
    x = np.asarray(x, dtype=np.float64)
    y = np.copysign(np.tanh(np.abs(x)), x)
    return y if y.ndim else float(y)


def sigmoid_oracle(x):
    x = np.asarray(x, dtype=np.float64)
    y = 0.5 * (1.0 + tanh_oracle(x / 2.0))
    return y if np.ndim(y) else float(y)


def swish_oracle(x):
    x = np.asarray(x, dtype=np.float64)
    y = x * sigmoid_oracle(x)
    return y if np.ndim(y) else float(y)


def gelu_oracle(x):
    """Exact GELU, x * Phi(x), with Phi the standard normal CDF."""
    x = np.asarray(x, dtype=np.float64)
    y = 0.5 * x * (1.0 + erf(x / math.sqrt(2.0)))
    return y if np.ndim(y) else float(y)


def gelu_tanh_arg(x):
    """Inner argument sqrt(2/pi) * (x + a x^3) of the tanh form of GELU."""
    x = np.asarray(x, dtype=np.float64)
    return _SQRT_2_OVER_PI * (x + GELU_A * x * x * x)


def gelu_tanh_oracle(x):
    x = np.asarray(x, dtype=np.float64)
    y = 0.5 * x * (1.0 + tanh_oracle(gelu_tanh_arg(x)))
    return y if np.ndim(y) else float(y)
