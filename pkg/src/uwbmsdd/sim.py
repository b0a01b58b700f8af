"""Monte-Carlo experiment engine.

Runs the full coded chain

    encode -> interleave -> map -> differential -> channel/front end ->
    detector -> deinterleave -> Viterbi

per grid point until enough information-bit errors accumulate, and
implements the three experiment types: BER sweeps over Eb/N0, the
performance/complexity tradeoff over clipping levels, and the
overall-complexity trajectory against a fixed differential-detection
reference.

Everything is deterministic given the config (including its seed): per-point
and per-frame random streams are derived from numpy SeedSequence keys that
depend only on the grid position, so runs with different detector settings
on the same grid see identical data, channels, and noise.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field, replace
from typing import NamedTuple

import numpy as np

from . import __version__
from ._backend import kernel_backend, kernels
from .coding import ConvCode, Interleaver, conv_encode, map_differential, viterbi_decode
from .core import AcrMatrix, max_node_count, sign_of
from .detect import EXHAUSTIVE_MAX_L, msdd_exhaustive, soft_llrs
from .waveform import (
    FrontEndConfig,
    PulseSpec,
    SalehValenzuelaParams,
    acr_front_end,
    captured_energy,
    make_receive_pulse,
    saleh_valenzuela,
)

__all__ = [
    "DETECTORS",
    "ExperimentConfig",
    "ResultRow",
    "SimulationError",
    "run_ber_sweep",
    "run_point",
    "run_tradeoff",
    "run_overall_complexity",
    "required_ebn0",
    "overall_complexity",
    "overall_complexity_reference",
    "overall_complexity_max",
    "select_trajectory_point",
    "CandidateResult",
    "write_rows_csv",
    "write_manifest",
    "CSV_COLUMNS",
]

DETECTORS = ("dd_hard", "dd_soft", "hosd", "sosd", "msdd_exhaustive")
FRONT_ENDS = ("semi_analytic", "waveform")


class SimulationError(RuntimeError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    """Complete description of one experiment; hashable and serializable."""

    ebn0_grid_db: tuple = (8.0, 10.0, 12.0, 14.0)
    L_list: tuple = (10,)
    detector: str = "sosd"
    llr_max: float = 10.0
    stopping: bool = False
    code_nu: int = 6
    interleaver_bits: int = 1000
    channel: SalehValenzuelaParams = field(default_factory=SalehValenzuelaParams)
    pulse: PulseSpec = field(default_factory=PulseSpec)
    symbol_duration: float = 50e-9
    integration_time: float = 30e-9
    min_bit_errors: int = 500
    max_bits: int = 2_000_000
    seed: int = 0
    front_end: str = "semi_analytic"
    stop_below_ber: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "ebn0_grid_db", tuple(float(x) for x in self.ebn0_grid_db))
        object.__setattr__(self, "L_list", tuple(int(x) for x in self.L_list))
        if not self.ebn0_grid_db or not self.L_list:
            raise ValueError("grids must be non-empty")
        if self.detector not in DETECTORS:
            raise ValueError(f"unknown detector {self.detector!r}; have {DETECTORS}")
        if self.front_end not in FRONT_ENDS:
            raise ValueError(f"unknown front end {self.front_end!r}; have {FRONT_ENDS}")
        if self.min_bit_errors < 50:
            raise ValueError("min_bit_errors must be >= 50 for reported points")
        if self.max_bits < self.interleaver_bits:
            raise ValueError("max_bits must cover at least one frame")
        if not (self.llr_max >= 0.0):
            raise ValueError("llr_max must be >= 0")
        if self.detector == "msdd_exhaustive" and max(self.L_list) > EXHAUSTIVE_MAX_L:
            raise ValueError(f"msdd_exhaustive limited to L <= {EXHAUSTIVE_MAX_L}")


@dataclass
class ResultRow:
    """One grid point of an experiment (CSV schema, see CSV_COLUMNS)."""

    ebn0_db: float
    L: int
    detector: str
    ber: float
    avg_c_sd: float
    max_c_sd: int
    c_o_soft: float
    c_o_max: float
    bits_simulated: int
    errors_counted: int
    llr_max: float
    stopping: bool
    feasible: bool = True
    code_nu: int = 6


CSV_COLUMNS = (
    "ebn0_db",
    "L",
    "detector",
    "ber",
    "avg_c_sd",
    "max_c_sd",
    "c_o_soft",
    "c_o_max",
    "bits_simulated",
    "errors_counted",
    "llr_max",
    "stopping",
    "feasible",
    "code_nu",
)


def overall_complexity(nu: int, avg_c_sd: float, L: int) -> float:
    """Per-symbol receiver complexity: 2^nu trellis nodes plus the search
    nodes amortized over the block, 2^nu + C_SD / L."""
    return 2.0**nu + avg_c_sd / L

def overall_complexity_reference(nu_ref: int) -> float:
    """Reference system: differential detection (one node per symbol) with a
    2^nu_ref-state code, 2^nu_ref + 1."""
    return 2.0**nu_ref + 1.0

def overall_complexity_max(nu: int, L: int) -> float:
    """Worst case: full tree enumeration, 2^nu + (2^(L+1) - 2) / L."""
    return 2.0**nu + max_node_count(L) / L


# ---------------------------------------------------------------------------
# per-block detection on raw statistics batches

def _detect_blocks(detector, zu, L, sigma_n2, llr_max, stopping):
    """Detect a (B, L+1, L+1) batch; returns (llr (B, L), nodes (B,)).

    Hard detectors (and the llr_max = 0 degenerate soft detector) emit +/-1
    as their reliability stream, i.e. hard-input decoding of the outer code.
    """
    B = zu.shape[0]
    if detector in ("dd_hard", "dd_soft"):
        offdiag = np.diagonal(zu, offset=1, axis1=1, axis2=2)
        if detector == "dd_hard":
            llr = sign_of(offdiag)
        else:
            llr = offdiag / sigma_n2
        nodes = np.full(B, L, dtype=np.int64)  # one correlator output per symbol
        return llr, nodes
    if detector == "msdd_exhaustive":
        llr = np.empty((B, L))
        for b in range(B):
            llr[b] = msdd_exhaustive(AcrMatrix(zu[b], sigma_n2)).llr
        return llr, np.full(B, max_node_count(L), dtype=np.int64)

    hard_out = detector == "hosd" or llr_max == 0.0
    eff_llr_max = 0.0 if hard_out else llr_max
    lambda_max = (
        sigma_n2 * (L + 1) * eff_llr_max if math.isfinite(eff_llr_max) else math.inf
    )
    if stopping:
        iu = np.triu_indices(L + 1, k=1)
        r_stop = L * np.abs(zu[:, iu[0], iu[1]]).min(axis=1)
    else:
        r_stop = np.full(B, -1.0)
    lam_best, lam_counter, a_best, nodes, _ = kernels.sosd_batch(zu, L, lambda_max, r_stop)
    if hard_out:
        return a_best.astype(np.float64), nodes
    llr = soft_llrs(lam_best, lam_counter, a_best, sigma_n2, L, eff_llr_max)
    if not np.all(np.isfinite(llr)):
        raise SimulationError(
            "non-finite llr leaked from the detector "
            "(early stopping without clipping leaves unresolved counterhypotheses)"
        )
    return llr, nodes


def _block_slices(n_symbols, L):
    """Consecutive blocks of at most L information symbols; adjacent blocks
    share one reference symbol, so N symbols need N+1 channel uses."""
    return [(s, min(s + L, n_symbols)) for s in range(0, n_symbols, L)]


def _semi_analytic_batch(bwins, e_c, fe: FrontEndConfig, rng):
    """Vectorized equivalent of semi_analytic_z over stacked symbol windows
    (nb, blk_L+1); identical per-entry statistics."""
    nb, n = bwins.shape
    iu = np.triu_indices(n, k=1)
    vals = e_c * (bwins[:, iu[0]] * bwins[:, iu[1]]).astype(np.float64)
    s2 = fe.sigma_n2
    if s2 > 0:
        std = math.sqrt(2.0 * e_c * s2 + s2 * s2 * fe.noise_dof)
        vals = vals + rng.normal(0.0, std, size=vals.shape)
    zu = np.zeros((nb, n, n))
    zu[:, iu[0], iu[1]] = vals
    return zu


class _FrameResult(NamedTuple):
    errors: int
    bits: int
    nodes: np.ndarray


def _run_frame(cfg: ExperimentConfig, code, interleaver, ebn0_db, L, frame_ss):
    """Simulate one coded frame; returns error count, info bits, node counts."""
    ss_bits, ss_chan, ss_noise = frame_ss.spawn(3)
    rng_bits = np.random.default_rng(ss_bits)
    info = rng_bits.integers(0, 2, cfg.interleaver_bits)
    coded = conv_encode(info, code)
    a = (1 - 2 * interleaver.interleave(coded)).astype(np.int8)
    b = map_differential(a)
    n_sym = a.size

    ch = saleh_valenzuela(cfg.channel, np.random.default_rng(ss_chan))
    pulse = make_receive_pulse(cfg.pulse, ch, max_duration=cfg.symbol_duration)
    e_c = captured_energy(pulse, cfg.integration_time)

    slices = _block_slices(n_sym, L)
    rng_noise = np.random.default_rng(ss_noise)
    llr_stream = np.empty(n_sym)
    nodes_all = np.empty(len(slices), dtype=np.int64)

    fe_frame = _fe_config(cfg, ebn0_db, L)
    r = None
    if cfg.front_end == "waveform":
        # one continuous waveform for the whole frame, so adjacent blocks
        # really share their boundary symbol (and its noise)
        r = synthesize_stream(b, pulse, fe_frame, rng_noise)

    # group blocks by size (the tail block may be shorter) and detect batched
    for blk_L in sorted({e - s for s, e in slices}):
        idx = [k for k, (s, e) in enumerate(slices) if e - s == blk_L]
        fe = _fe_config(cfg, ebn0_db, blk_L)
        if cfg.front_end == "semi_analytic":
            bwins = np.stack([b[slices[k][0] : slices[k][1] + 1] for k in idx])
            zu = _semi_analytic_batch(bwins, e_c, fe, rng_noise)
        else:
            ts, ki = fe.symbol_samples, fe.window_samples
            zu = np.empty((len(idx), blk_L + 1, blk_L + 1))
            for j, k in enumerate(idx):
                s, _ = slices[k]
                chunk = r[s * ts : s * ts + blk_L * ts + ki]
                zu[j] = acr_front_end(chunk, fe).dense
        llr_b, nodes_b = _detect_blocks(
            cfg.detector, zu, blk_L, fe.sigma_n2, cfg.llr_max, cfg.stopping
        )
        for j, k in enumerate(idx):
            s, e = slices[k]
            llr_stream[s:e] = llr_b[j]
            nodes_all[k] = nodes_b[j]

    decoded = viterbi_decode(interleaver.deinterleave(llr_stream), code)
    errors = int(np.count_nonzero(decoded != info))
    return _FrameResult(errors, int(info.size), nodes_all)


def _fe_config(cfg: ExperimentConfig, ebn0_db, L):
    return FrontEndConfig(
        L=L,
        ebn0_db=ebn0_db,
        symbol_duration=cfg.symbol_duration,
        integration_time=cfg.integration_time,
        sample_rate=cfg.pulse.sample_rate,
    )


def synthesize_stream(b, pulse, fe: FrontEndConfig, rng) -> np.ndarray:
    """Waveform of len(b) consecutive symbols plus white noise drawn from an
    existing generator (synthesize_block seeds its own instead)."""
    b = np.asarray(b)
    ts = fe.symbol_samples
    total = b.size * ts
    r = np.zeros(total)
    m = pulse.samples.size
    for i in range(b.size):
        stop = min(total, i * ts + m)
        r[i * ts : stop] += b[i] * pulse.samples[: stop - i * ts]
    if fe.n0 > 0:
        r += rng.normal(0.0, math.sqrt(fe.n0 / (2.0 * fe.dt)), size=total)
    return r


def run_point(cfg: ExperimentConfig, ebn0_db: float, L: int, point_index: int) -> ResultRow:
    """Simulate one grid point until min_bit_errors or max_bits."""
    code = ConvCode.from_catalog(cfg.code_nu)
    n_coded = 2 * (cfg.interleaver_bits + code.nu)
    interleaver = Interleaver(n_coded, seed=cfg.seed)

    errors = bits = blocks = 0
    nodes_sum = 0
    nodes_max = 0
    frame = 0
    while errors < cfg.min_bit_errors and bits < cfg.max_bits:
        frame_ss = np.random.SeedSequence(
            entropy=cfg.seed, spawn_key=(point_index, frame)
        )
        res = _run_frame(cfg, code, interleaver, ebn0_db, L, frame_ss)
        errors += res.errors
        bits += res.bits
        blocks += res.nodes.size
        nodes_sum += int(res.nodes.sum())
        nodes_max = max(nodes_max, int(res.nodes.max()))
        frame += 1

    avg_c_sd = nodes_sum / blocks
    return ResultRow(
        ebn0_db=float(ebn0_db),
        L=int(L),
        detector=cfg.detector,
        ber=errors / bits,
        avg_c_sd=avg_c_sd,
        max_c_sd=nodes_max,
        c_o_soft=overall_complexity(cfg.code_nu, avg_c_sd, L),
        c_o_max=overall_complexity(cfg.code_nu, float(nodes_max), L),
        bits_simulated=bits,
        errors_counted=errors,
        llr_max=cfg.llr_max,
        stopping=cfg.stopping,
        code_nu=cfg.code_nu,
    )


def run_ber_sweep(cfg: ExperimentConfig) -> list[ResultRow]:
    """BER and complexity over the (L, Eb/N0) grid.

    Points are keyed by grid position, so reruns and runs with different
    detector settings are seed-matched point by point. With
    cfg.stop_below_ber set, each L's sweep stops early once the measured
    BER falls below it (the grid is traversed in ascending Eb/N0).
    """
    rows = []
    for li, L in enumerate(cfg.L_list):
        for gi, ebn0 in enumerate(cfg.ebn0_grid_db):
            row = run_point(cfg, ebn0, L, point_index=li * len(cfg.ebn0_grid_db) + gi)
            rows.append(row)
            if cfg.stop_below_ber is not None and row.ber < cfg.stop_below_ber:
                break
    return rows


def required_ebn0(rows: list[ResultRow], target_ber: float):
    """Eb/N0 where the BER curve crosses target_ber, by linear interpolation
    of log10(BER) between the first bracketing grid points; the average
    search complexity is interpolated linearly between the same points.

    Returns (ebn0_db, avg_c_sd, max_c_sd) or None when the target is not
    bracketed within the grid. Zero-error points are floored to half an
    error for the interpolation.
    """
    pts = sorted(rows, key=lambda r: r.ebn0_db)

    def logber(r):
        return math.log10(max(r.ber, 0.5 / r.bits_simulated))

    for lo, hi in zip(pts, pts[1:]):
        if lo.ber >= target_ber and hi.ber < target_ber:
            t = math.log10(target_ber)
            frac = (t - logber(lo)) / (logber(hi) - logber(lo))
            x = lo.ebn0_db + frac * (hi.ebn0_db - lo.ebn0_db)
            c = lo.avg_c_sd + frac * (hi.avg_c_sd - lo.avg_c_sd)
            return x, c, max(lo.max_c_sd, hi.max_c_sd)
    if pts and pts[0].ber < target_ber:
        # already below target at the lowest grid point: report it directly
        return pts[0].ebn0_db, pts[0].avg_c_sd, pts[0].max_c_sd
    return None


def run_tradeoff(
    cfg: ExperimentConfig,
    llr_max_grid=(10.0, 2.0, 1.0, 0.5, 0.25, 0.1, 0.05),
    target_ber: float = 1e-3,
) -> list[ResultRow]:
    """Required Eb/N0 at the target BER versus average search complexity,
    per (L, clipping level). llr_max = 0 rows reproduce the hard-output
    detector by definition. Unreachable targets yield feasible=False rows."""
    out = []
    for L in cfg.L_list:
        for lm in llr_max_grid:
            sub = replace(
                cfg,
                L_list=(L,),
                llr_max=float(lm),
                detector="hosd" if lm == 0 else cfg.detector,
                stop_below_ber=target_ber / 4 if cfg.stop_below_ber is None else cfg.stop_below_ber,
            )
            rows = run_ber_sweep(sub)
            hit = required_ebn0(rows, target_ber)
            if hit is None:
                out.append(
                    ResultRow(
                        ebn0_db=math.nan, L=L, detector=sub.detector, ber=target_ber,
                        avg_c_sd=math.nan, max_c_sd=0, c_o_soft=math.nan,
                        c_o_max=math.nan, bits_simulated=0, errors_counted=0,
                        llr_max=float(lm), stopping=cfg.stopping, feasible=False,
                        code_nu=cfg.code_nu,
                    )
                )
                continue
            x, c, cmax = hit
            out.append(
                ResultRow(
                    ebn0_db=x, L=L, detector=sub.detector, ber=target_ber,
                    avg_c_sd=c, max_c_sd=cmax,
                    c_o_soft=overall_complexity(cfg.code_nu, c, L),
                    c_o_max=overall_complexity(cfg.code_nu, float(cmax), L),
                    bits_simulated=0, errors_counted=0,
                    llr_max=float(lm), stopping=cfg.stopping, code_nu=cfg.code_nu,
                )
            )
    return out


class CandidateResult(NamedTuple):
    nu: int
    llr_max: float
    required_ebn0_db: float
    avg_c_sd: float
    max_c_sd: int
    c_o_soft: float


def select_trajectory_point(candidates, c_o_ref: float):
    """Pick the lowest-required-Eb/N0 candidate whose average overall
    complexity stays within the reference budget; None if none qualifies."""
    feasible = [c for c in candidates if c.c_o_soft <= c_o_ref and math.isfinite(c.required_ebn0_db)]
    if not feasible:
        return None
    return min(feasible, key=lambda c: (c.required_ebn0_db, c.c_o_soft))


def run_overall_complexity(
    cfg: ExperimentConfig,
    candidates,
    nu_ref: int = 7,
    target_ber: float = 1e-3,
) -> list[ResultRow]:
    """Trajectory study: per block size, evaluate every (nu, llr_max)
    candidate at the target BER and keep the best one not exceeding the
    overall complexity of the differential-detection reference."""
    c_o_ref = overall_complexity_reference(nu_ref)
    out = []
    for L in cfg.L_list:
        cands = []
        for nu, lm in candidates:
            sub = replace(
                cfg,
                L_list=(L,),
                code_nu=int(nu),
                llr_max=float(lm),
                detector="hosd" if lm == 0 else cfg.detector,
                stop_below_ber=target_ber / 4 if cfg.stop_below_ber is None else cfg.stop_below_ber,
            )
            hit = required_ebn0(run_ber_sweep(sub), target_ber)
            if hit is None:
                continue
            x, c, cmax = hit
            cands.append(
                CandidateResult(int(nu), float(lm), x, c, cmax, overall_complexity(int(nu), c, L))
            )
        best = select_trajectory_point(cands, c_o_ref)
        if best is None:
            out.append(
                ResultRow(
                    ebn0_db=math.nan, L=L, detector=cfg.detector, ber=target_ber,
                    avg_c_sd=math.nan, max_c_sd=0, c_o_soft=math.nan, c_o_max=math.nan,
                    bits_simulated=0, errors_counted=0, llr_max=math.nan,
                    stopping=cfg.stopping, feasible=False, code_nu=cfg.code_nu,
                )
            )
            continue
        out.append(
            ResultRow(
                ebn0_db=best.required_ebn0_db, L=L, detector=cfg.detector, ber=target_ber,
                avg_c_sd=best.avg_c_sd, max_c_sd=best.max_c_sd,
                c_o_soft=best.c_o_soft,
                c_o_max=overall_complexity(best.nu, float(best.max_c_sd), L),
                bits_simulated=0, errors_counted=0,
                llr_max=best.llr_max, stopping=cfg.stopping, code_nu=best.nu,
            )
        )
    return out


# ---------------------------------------------------------------------------
# artifacts

def _fmt(v):
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_rows_csv(rows, path):
    """Fixed-order CSV with '.' decimals; byte-identical across reruns."""
    with open(path, "w", newline="", encoding="ascii") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_COLUMNS)
        for r in rows:
            w.writerow([_fmt(getattr(r, c)) for c in CSV_COLUMNS])


def write_manifest(cfg: ExperimentConfig, command: str, path, extra=None):
    """Machine-readable run description sufficient to regenerate the CSVs."""
    doc = {
        "command": command,
        "config": asdict(cfg),
        "seed": cfg.seed,
        "package_version": __version__,
        "kernel_backend": kernel_backend(),
    }
    if extra:
        doc.update(extra)
    with open(path, "w", encoding="ascii") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")
