"""Detectors operating on autocorrelation statistics.

Four detector families share the AcrMatrix input:

* dd_hard / dd_soft: symbol-by-symbol differential detection from the
  single-lag correlations Z_{i-1,i};
* msdd_exhaustive: joint block detection by full enumeration, the exact
  reference used as the test oracle for both sphere decoders;
* hosd: hard-output sphere decoder (clipping level 0);
* sosd: single-tree-search soft-output sphere decoder, producing max-log
  reliabilities, with optional clipping and early stopping.

Reliabilities follow llr_i = a_i * (lam_counter_i - lam_best) / (sigma_n2 * (L+1)),
where a is the jointly detected sequence and lam_counter_i is the best metric
subject to flipping symbol i.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from ._backend import kernels
from .core import (
    AcrMatrix,
    DetectorConfig,
    SoftDecision,
    max_node_count,
    sign_of,
)

__all__ = [
    "dd_hard",
    "dd_soft",
    "msdd_exhaustive",
    "hosd",
    "sosd",
    "soft_llrs",
    "stopping_radius",
    "findbest",
    "findnext",
    "ExhaustiveResult",
    "HardDecision",
    "EXHAUSTIVE_MAX_L",
]

EXHAUSTIVE_MAX_L = 20


def dd_hard(z: AcrMatrix) -> np.ndarray:
    """Differential detection: element-wise sign of Z_{i-1,i} (sign(0) = +1)."""
    return sign_of(z.first_off_diagonal()).astype(np.int8)


def dd_soft(z: AcrMatrix) -> np.ndarray:
    """Soft differential detection: llr_i = Z_{i-1,i} / sigma_n2."""
    if z.sigma_n2 <= 0.0:
        raise ValueError("dd_soft requires sigma_n2 > 0")
    return z.first_off_diagonal() / z.sigma_n2


class ExhaustiveResult(NamedTuple):
    hypothesis: np.ndarray
    lambda_best: float
    lambda_counter: np.ndarray
    llr: np.ndarray


def _enumerate_metrics(z: AcrMatrix):
    """Mismatch metric of every hypothesis, plus the symbol table.

    Enumerates prefix-product vectors Q in {+1} x {+/-1}^L (bijective with
    hypotheses via a_i = Q_{i-1} Q_i) and evaluates the metric term by term.
    """
    L = z.L
    n = 1 << L
    # Q[:, 0] = 1; remaining columns run through all sign patterns
    grid = ((np.arange(n)[:, None] >> np.arange(L - 1, -1, -1)[None, :]) & 1)
    q = np.empty((n, L + 1), dtype=np.float64)
    q[:, 0] = 1.0
    q[:, 1:] = 1.0 - 2.0 * grid
    iu = np.triu_indices(L + 1, k=1)
    zz = z.dense[iu]
    lam = np.abs(zz)[None, :] * (1.0 - sign_of(zz)[None, :] * q[:, iu[0]] * q[:, iu[1]])
    lam = lam.sum(axis=1)
    symbols = (q[:, :-1] * q[:, 1:]).astype(np.int8)
    return lam, symbols


def msdd_exhaustive(z: AcrMatrix) -> ExhaustiveResult:
    """Joint block detection by enumerating all 2^L hypotheses.

    Returns the metric-minimizing sequence, its metric, the constrained
    minima with each symbol flipped, and the resulting reliabilities.
    Guarded to L <= 20; first-found sequence wins on exact metric ties.
    """
    if z.L > EXHAUSTIVE_MAX_L:
        raise ValueError(f"exhaustive enumeration limited to L <= {EXHAUSTIVE_MAX_L}")
    if z.sigma_n2 <= 0.0:
        raise ValueError("msdd_exhaustive requires sigma_n2 > 0 for the llr scaling")
    lam, symbols = _enumerate_metrics(z)
    best = int(np.argmin(lam))
    a_best = symbols[best]
    lam_best = float(lam[best])
    lam_counter = np.empty(z.L)
    for i in range(z.L):
        lam_counter[i] = lam[symbols[:, i] != a_best[i]].min()
    llr = a_best * (lam_counter - lam_best) / (z.sigma_n2 * (z.L + 1))
    return ExhaustiveResult(a_best.copy(), lam_best, lam_counter, llr)


def stopping_radius(z: AcrMatrix) -> float:
    """Early-termination radius: L times the minimum |Z_{l,i}|.

    A full sequence whose metric does not exceed it is certainly the block
    optimum, so the search may stop.
    """
    return z.L * z.min_abs()


class HardDecision(NamedTuple):
    hypothesis: np.ndarray
    lambda_best: float
    nodes_visited: int
    terminated_early: bool


def hosd(z: AcrMatrix, cfg: DetectorConfig) -> HardDecision:
    """Hard-output sphere decoder: the soft search with clipping level 0.

    Returns the same sequence (up to exact metric ties) and exactly the same
    metric as msdd_exhaustive, typically visiting far fewer nodes.
    """
    _check_block(z, cfg)
    r_stop = stopping_radius(z) if cfg.use_stopping_criterion else -1.0
    lam_best, _, a_best, nodes, term = kernels.sosd_block(z.dense, z.L, 0.0, r_stop)
    _check_nodes(nodes, z.L)
    return HardDecision(a_best, float(lam_best), int(nodes), bool(term))


def sosd(z: AcrMatrix, cfg: DetectorConfig) -> SoftDecision:
    """Single-tree-search soft-output sphere decoder.

    With llr_max = inf and stopping disabled the reliabilities equal the
    exhaustive max-log values exactly. Early stopping preserves the optimal
    hard sequence and metric but may underestimate reliability magnitudes;
    a finite llr_max bounds every |llr_i| by llr_max.
    """
    _check_block(z, cfg)
    if z.sigma_n2 <= 0.0:
        raise ValueError("sosd requires sigma_n2 > 0 for the llr scaling")
    scale = z.sigma_n2 * (z.L + 1)
    lambda_max = scale * cfg.llr_max if math.isfinite(cfg.llr_max) else math.inf
    r_stop = stopping_radius(z) if cfg.use_stopping_criterion else -1.0
    lam_best, lam_counter, a_best, nodes, term = kernels.sosd_block(
        z.dense, z.L, lambda_max, r_stop
    )
    _check_nodes(nodes, z.L)
    llr = soft_llrs(lam_best, lam_counter, a_best, z.sigma_n2, z.L, cfg.llr_max)
    return SoftDecision(
        llr=llr,
        hard=a_best,
        lambda_best=float(lam_best),
        nodes_visited=int(nodes),
        terminated_early=bool(term),
        saturated=~np.isfinite(llr),
    )


def soft_llrs(lam_best, lam_counter, a_best, sigma_n2, L, llr_max):
    """Assemble output reliabilities from search results.

    llr_i = a_i * min(lam_counter_i - lam_best, sigma_n2*(L+1)*llr_max)
                / (sigma_n2 * (L+1))

    Accepts scalars/1-D arrays for one block or 1-D/2-D arrays for a batch
    (lam_best broadcast along the last axis). The clip is applied here as
    well because an early stop can leave counterhypotheses above the final
    in-search clip level.
    """
    scale = sigma_n2 * (L + 1)
    gap = np.asarray(lam_counter, dtype=np.float64) - np.expand_dims(lam_best, -1)
    if math.isfinite(llr_max):
        np.minimum(gap, scale * llr_max, out=gap)
    return np.asarray(a_best, dtype=np.float64) * gap / scale


def _check_block(z: AcrMatrix, cfg: DetectorConfig):
    if cfg.L != z.L:
        raise ValueError(f"config block size {cfg.L} != matrix block size {z.L}")


def _check_nodes(nodes, L):
    if nodes > max_node_count(L):
        raise AssertionError("sphere search exceeded the full-tree node budget")


# ---------------------------------------------------------------------------
# Reference enumeration steps (pure, stateless); the kernels implement the
# same moves incrementally. Exposed for direct testing of the search order.

def _branch_delta(z: AcrMatrix, a, i):
    p = 1.0
    prods = np.empty(i)
    for l in range(i - 1, -1, -1):
        p *= a[l]
        prods[l] = p
    zcol = z.dense[:i, i]
    return float(np.sum(np.abs(zcol) * (1.0 - sign_of(zcol) * prods)))


def findbest(z: AcrMatrix, i: int, prefix):
    """Metric-minimizing branch at depth i given symbols 1..i-1.

    Returns (symbol, delta, n_i) with n_i = 1. Ties pick +1.
    """
    if not (1 <= i <= z.L):
        raise ValueError(f"depth {i} outside 1..{z.L}")
    prefix = list(prefix)
    if len(prefix) != i - 1:
        raise ValueError("prefix must cover symbols 1..i-1")
    d_plus = _branch_delta(z, prefix + [1], i)
    d_minus = _branch_delta(z, prefix + [-1], i)
    if d_plus <= d_minus:
        return 1, d_plus, 1
    return -1, d_minus, 1


def findnext(z: AcrMatrix, i: int, a, n):
    """Advance the enumeration: flip to the sibling branch at the deepest
    level with an untried branch, ascending while n_k == 2.

    a and n are sequences indexed 0-based for symbols 1..L. Returns
    (depth, symbol, delta, n_i); depth 0 means the tree is exhausted and the
    other fields are None.
    """
    a = list(a)
    n = list(n)
    while i > 0 and n[i - 1] == 2:
        i -= 1
    if i == 0:
        return 0, None, None, None
    sym = -a[i - 1]
    delta = _branch_delta(z, a[: i - 1] + [sym], i)
    return i, sym, delta, n[i - 1] + 1
