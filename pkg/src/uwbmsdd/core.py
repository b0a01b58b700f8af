"""Shared domain types and the metric algebra used by every detector.

Conventions fixed here and relied on everywhere else:

* information symbols are antipodal, a_k in {+1, -1}, k = 1..L, with an
  implicit reference symbol in front of the block;
* the autocorrelation statistics Z_{l,i} exist for 0 <= l < i <= L and are
  stored in the strictly upper triangle of a dense (L+1, L+1) array;
* sign(0) = +1 (deterministic convention, needed for reproducible ties);
* all metrics are computed in double precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "AcrMatrix",
    "DetectorConfig",
    "SoftDecision",
    "as_hypothesis",
    "sign_of",
    "gamma_metric",
    "lambda_metric",
    "branch_metric",
    "max_node_count",
]


def sign_of(x):
    """Sign with the fixed convention sign(0) = +1.

    Works on scalars and arrays; returns float(s) in {+1.0, -1.0}.
    """
    if np.isscalar(x):
        return 1.0 if x >= 0 else -1.0
    return np.where(np.asarray(x) >= 0, 1.0, -1.0)


def as_hypothesis(a):
    """Validate and convert a symbol sequence to an int8 array of +/-1."""
    arr = np.asarray(a)
    out = arr.astype(np.int8)
    if arr.ndim != 1 or not np.array_equal(out, arr) or not np.all(np.abs(out) == 1):
        raise ValueError("hypothesis entries must be exactly +1 or -1")
    return out


def max_node_count(L):
    """Size of the full binary search tree: sum_{i=1..L} 2^i = 2^(L+1) - 2."""
    return 2 ** (L + 1) - 2


class AcrMatrix:
    """Autocorrelation statistics of one detection block.

    Holds the correlator outputs Z_{l,i} (block size L means L*(L+1)/2
    entries for 0 <= l < i <= L) together with the noise variance that
    scales the log-likelihood ratios. This is the sole detector input.
    """

    __slots__ = ("L", "dense", "sigma_n2")

    def __init__(self, dense, sigma_n2):
        dense = np.ascontiguousarray(dense, dtype=np.float64)
        if dense.ndim != 2 or dense.shape[0] != dense.shape[1] or dense.shape[0] < 2:
            raise ValueError("dense must be a square (L+1, L+1) array with L >= 1")
        L = dense.shape[0] - 1
        iu = np.triu_indices(L + 1, k=1)
        if not np.all(np.isfinite(dense[iu])):
            raise ValueError("autocorrelation entries must be finite")
        if not (math.isfinite(sigma_n2) and sigma_n2 >= 0.0):
            raise ValueError("sigma_n2 must be finite and >= 0")
        # only l < i is meaningful; zero the rest so dense algebra can use
        # the full array safely
        z = np.zeros_like(dense)
        z[iu] = dense[iu]
        self.L = L
        self.dense = z
        self.sigma_n2 = float(sigma_n2)

    @classmethod
    def from_entries(cls, L, entries, sigma_n2):
        """Build from a mapping {(l, i): value} covering all 0 <= l < i <= L."""
        z = np.zeros((L + 1, L + 1))
        seen = set()
        for (l, i), val in entries.items():
            if not (0 <= l < i <= L):
                raise ValueError(f"entry index ({l}, {i}) outside 0 <= l < i <= {L}")
            z[l, i] = val
            seen.add((l, i))
        if len(seen) != L * (L + 1) // 2:
            raise ValueError("expected exactly L*(L+1)/2 entries")
        return cls(z, sigma_n2)

    def entry(self, l, i):
        """Z_{l,i}; indices outside 0 <= l < i <= L are a contract violation."""
        if not (0 <= l < i <= self.L):
            raise IndexError(f"Z_({l},{i}) does not exist for block size {self.L}")
        return float(self.dense[l, i])

    def first_off_diagonal(self):
        """Z_{i-1,i} for i = 1..L, the single-lag correlations used by DD."""
        return np.ascontiguousarray(np.diagonal(self.dense, offset=1))

    def abs_sum(self):
        """Sum of |Z_{l,i}| over all entries (upper bound of the correlation metric)."""
        return float(np.abs(self.dense).sum())

    def min_abs(self):
        """Minimum |Z_{l,i}| over all entries."""
        iu = np.triu_indices(self.L + 1, k=1)
        return float(np.abs(self.dense[iu]).min())

    def __repr__(self):
        return f"AcrMatrix(L={self.L}, sigma_n2={self.sigma_n2!r})"


@dataclass(frozen=True)
class DetectorConfig:
    """Sphere-detector settings: clipping level, early stopping, block size.

    llr_max = inf disables clipping, llr_max = 0 yields hard output.
    """

    L: int
    llr_max: float = math.inf
    use_stopping_criterion: bool = False

    def __post_init__(self):
        if self.L < 1:
            raise ValueError("L must be >= 1")
        if not (self.llr_max >= 0.0):
            raise ValueError("llr_max must be >= 0")


@dataclass
class SoftDecision:
    """Detector output for one block.

    hard mirrors the jointly detected sequence (the authoritative source;
    sign(llr) agrees with it wherever the llr is nonzero). nodes_visited
    counts branch-metric evaluations of the sphere search. saturated marks
    positions whose counterhypothesis was never found before termination
    (llr is +/-inf there; only possible with early stopping and no clipping).
    """

    llr: np.ndarray
    hard: np.ndarray
    lambda_best: float
    nodes_visited: int
    terminated_early: bool
    saturated: np.ndarray


def _prefix_products(a):
    """P_0 = 1, P_i = a_1 * ... * a_i as a length L+1 int array."""
    a = as_hypothesis(a)
    return np.concatenate(([1], np.cumprod(a))).astype(np.int64)


def gamma_metric(z: AcrMatrix, a) -> float:
    """Correlation score of a hypothesis:

        sum_{i=1..L} sum_{l=0..i-1} (prod_{k=l+1..i} a_k) Z_{l,i}

    The inner product telescopes to P_l * P_i with prefix products P, so the
    double sum is P^T Z P over the stored triangle.
    """
    p = _prefix_products(a)
    if p.size != z.L + 1:
        raise ValueError(f"hypothesis length {p.size - 1} != block size {z.L}")
    return float(p @ z.dense @ p)


def lambda_metric(z: AcrMatrix, a) -> float:
    """Nonnegative mismatch metric minimized by the sphere search:

        sum_{i,l} |Z_{l,i}| (1 - sign(Z_{l,i}) prod_{k=l+1..i} a_k)

    Zero exactly when every term's symbol product matches the sign of its
    entry. Computed term by term (not via the identity with gamma_metric,
    which is a tested property instead).
    """
    p = _prefix_products(a)
    if p.size != z.L + 1:
        raise ValueError(f"hypothesis length {p.size - 1} != block size {z.L}")
    iu = np.triu_indices(z.L + 1, k=1)
    zz = z.dense[iu]
    prods = (p[iu[0]] * p[iu[1]]).astype(np.float64)
    return float(np.sum(np.abs(zz) * (1.0 - sign_of(zz) * prods)))


def branch_metric(z: AcrMatrix, a_prefix, i: int) -> float:
    """Per-depth metric increment for a partial hypothesis of length i:

        sum_{l=0..i-1} |Z_{l,i}| (1 - sign(Z_{l,i}) prod_{k=l+1..i} a_k)

    Summing over depths 1..L reproduces lambda_metric of the full sequence.
    """
    if not (1 <= i <= z.L):
        raise ValueError(f"depth {i} outside 1..{z.L}")
    a = as_hypothesis(a_prefix)
    if a.size < i:
        raise ValueError(f"prefix of length {a.size} does not cover depth {i}")
    p = _prefix_products(a[:i])
    zcol = z.dense[:i, i]
    prods = (p[:i] * p[i]).astype(np.float64)
    return float(np.sum(np.abs(zcol) * (1.0 - sign_of(zcol) * prods)))
