"""Outer coding chain: rate-1/2 convolutional code, pseudo-random bit
interleaver, differential symbol mapping, soft-input Viterbi decoding.

Bit/symbol convention: coded bit c maps to the antipodal symbol 1 - 2c,
and a positive llr favours c = 0. The Viterbi decoder maximizes the
correlation sum(llr * (1 - 2c)) over trellis paths, so its decisions are
invariant under positive scaling of the llrs.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ._backend import kernels

__all__ = [
    "ConvCode",
    "Interleaver",
    "GENERATOR_CATALOG",
    "conv_encode",
    "viterbi_decode",
    "map_differential",
    "differential_decode",
]

# maximum-free-distance rate-1/2 generators (octal), indexed by the
# constraint-length parameter nu (2^nu trellis states)
GENERATOR_CATALOG = {
    2: (0o7, 0o5),
    3: (0o17, 0o15),
    4: (0o35, 0o23),
    5: (0o75, 0o53),
    6: (0o171, 0o133),
    7: (0o371, 0o247),
}


@dataclass(frozen=True)
class ConvCode:
    """Feedforward rate-1/2 convolutional code with 2^nu states."""

    nu: int
    generators: tuple[int, int]

    def __post_init__(self):
        for g in self.generators:
            if not (1 << self.nu) <= g < (1 << (self.nu + 1)):
                raise ValueError(
                    f"generator {g:o} (octal) does not have degree {self.nu}"
                )

    @classmethod
    def from_catalog(cls, nu: int) -> "ConvCode":
        if nu not in GENERATOR_CATALOG:
            raise ValueError(f"no catalog code for nu={nu}; have {sorted(GENERATOR_CATALOG)}")
        return cls(nu, GENERATOR_CATALOG[nu])

    def taps(self, j: int) -> np.ndarray:
        """Generator j as a 0/1 tap vector, current input first."""
        g = self.generators[j]
        return np.array([(g >> (self.nu - k)) & 1 for k in range(self.nu + 1)], dtype=np.int64)


def conv_encode(bits, code: ConvCode) -> np.ndarray:
    """Encode and zero-terminate: nu tail bits flush the register, output is
    2*(len(bits)+nu) coded bits with the two generator streams interleaved."""
    u = np.asarray(bits)
    if u.ndim != 1 or not np.all((u == 0) | (u == 1)):
        raise ValueError("info bits must be 0/1")
    u = np.concatenate([u.astype(np.int64), np.zeros(code.nu, dtype=np.int64)])
    out = np.empty(2 * u.size, dtype=np.int64)
    for j in (0, 1):
        out[j::2] = np.convolve(u, code.taps(j))[: u.size] % 2
    return out


@lru_cache(maxsize=None)
def _trellis_tables(code: ConvCode):
    """Per-(state, input) successor and output-sign tables.

    State after step t holds the last nu inputs with the newest at the
    LSB: s_{t+1} = ((s_t << 1) | u_t) mod 2^nu, so bit k of s is u_{t-1-k}.
    """
    nu = code.nu
    n_states = 1 << nu
    mask = n_states - 1
    next_state = np.empty((n_states, 2), dtype=np.int64)
    sgn = np.empty((2, n_states, 2), dtype=np.float64)
    for s in range(n_states):
        for u in (0, 1):
            next_state[s, u] = ((s << 1) | u) & mask
            for j in (0, 1):
                g = code.generators[j]
                c = ((g >> nu) & 1) * u  # tap on the current input
                for k in range(1, nu + 1):
                    c ^= ((g >> (nu - k)) & 1) * ((s >> (k - 1)) & 1)
                sgn[j, s, u] = 1.0 - 2.0 * c
    return next_state, sgn[0], sgn[1]


def viterbi_decode(llrs, code: ConvCode) -> np.ndarray:
    """Maximum-likelihood decoding of a zero-terminated stream from coded-bit
    reliabilities (2 per trellis step). Hard-input decoding is the special
    case of passing the hard decisions as +/-1. Returns the info bits with
    the nu tail bits stripped."""
    llrs = np.asarray(llrs, dtype=np.float64)
    if llrs.ndim != 1 or llrs.size % 2:
        raise ValueError("llrs must be a flat vector of even length")
    steps = llrs.size // 2
    if steps <= code.nu:
        raise ValueError("stream shorter than the code tail")
    if not np.any(llrs):
        warnings.warn("all-zero llrs: every codeword is equally likely, decode is ambiguous")
    _, sgn0, sgn1 = _trellis_tables(code)
    bits = kernels.viterbi_path(llrs.reshape(steps, 2), sgn0, sgn1)
    return bits[: steps - code.nu].astype(np.int64)


class Interleaver:
    """Seeded uniform permutation of a fixed-size bit block."""

    def __init__(self, size: int, seed=0, permutation=None):
        if permutation is None:
            permutation = np.random.default_rng(seed).permutation(size)
        else:
            permutation = np.asarray(permutation, dtype=np.int64)
            if not np.array_equal(np.sort(permutation), np.arange(size)):
                raise ValueError("permutation must be a bijection on [0, size)")
        self.size = size
        self.seed = seed
        self.permutation = permutation
        self._inverse = np.argsort(permutation)

    def interleave(self, x):
        x = np.asarray(x)
        if x.size != self.size:
            raise ValueError(f"expected {self.size} values, got {x.size}")
        return x[self.permutation]

    def deinterleave(self, y):
        y = np.asarray(y)
        if y.size != self.size:
            raise ValueError(f"expected {self.size} values, got {y.size}")
        return y[self._inverse]


def map_differential(a, b0: int = 1) -> np.ndarray:
    """Differentially encode antipodal symbols: b_i = b_0 * prod_{k<=i} a_k,
    returning L+1 channel symbols for L inputs (b_0 = +1 by default)."""
    a = np.asarray(a)
    if not np.all(np.abs(a) == 1) or abs(b0) != 1:
        raise ValueError("symbols must be +/-1")
    out = np.empty(a.size + 1, dtype=np.int8)
    out[0] = b0
    out[1:] = b0 * np.cumprod(a)
    return out


def differential_decode(b) -> np.ndarray:
    """Invert map_differential: a_i = b_{i-1} * b_i."""
    b = np.asarray(b)
    if not np.all(np.abs(b) == 1):
        raise ValueError("symbols must be +/-1")
    return (b[:-1] * b[1:]).astype(np.int8)
