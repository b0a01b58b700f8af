"""Benchmark the compiled kernels against the pure-Python fallback.

Runs the sphere search on realistic correlator batches (several block sizes
and clipping levels) and the Viterbi decoder on a coded frame, printing
per-call timings and the speedup. Usage:

    python benchmarks/bench_kernels.py [--blocks 2000] [--seed 0]
"""

import argparse
import time

import numpy as np

from uwbmsdd import _sdpy
from uwbmsdd.coding import ConvCode, _trellis_tables, conv_encode

try:
    from uwbmsdd import _sdkernel
except ImportError:
    _sdkernel = None


def _blocks(rng, n, L, ebn0_db=12.0, e_c=0.94):
    s2 = 10.0 ** (-ebn0_db / 10.0) / 2.0
    std = np.sqrt(2 * e_c * s2 + s2 * s2 * 600)
    a = rng.choice([-1.0, 1.0], size=(n, L))
    b = np.concatenate([np.ones((n, 1)), np.cumprod(a, axis=1)], axis=1)
    iu = np.triu_indices(L + 1, k=1)
    zu = np.zeros((n, L + 1, L + 1))
    zu[:, iu[0], iu[1]] = e_c * b[:, iu[0]] * b[:, iu[1]] + rng.normal(
        0, std, (n, iu[0].size)
    )
    return zu, s2


def bench_sosd(args):
    rng = np.random.default_rng(args.seed)
    print(f"{'case':<28}{'python':>12}{'cython':>12}{'speedup':>9}")
    for L, llr_max in ((5, 10.0), (10, 10.0), (10, np.inf), (15, 1.0)):
        zu, s2 = _blocks(rng, args.blocks, L)
        lam_max = s2 * (L + 1) * llr_max if np.isfinite(llr_max) else np.inf
        r_stop = np.full(args.blocks, -1.0)
        res = {}
        for name, mod in (("python", _sdpy), ("cython", _sdkernel)):
            if mod is None:
                res[name] = None
                continue
            t0 = time.perf_counter()
            out = mod.sosd_batch(zu, L, lam_max, r_stop)
            res[name] = (time.perf_counter() - t0, out)
        t_py = res["python"][0]
        nodes = res["python"][1][3]
        label = f"sosd L={L} llr_max={llr_max:g}"
        if res["cython"] is None:
            print(f"{label:<28}{t_py / args.blocks * 1e6:>10.1f}us{'n/a':>12}")
            continue
        t_cy = res["cython"][0]
        same = all(
            np.array_equal(np.asarray(a), np.asarray(b))
            for a, b in zip(res["python"][1], res["cython"][1])
        )
        print(
            f"{label:<28}{t_py / args.blocks * 1e6:>10.1f}us"
            f"{t_cy / args.blocks * 1e6:>10.1f}us{t_py / t_cy:>8.1f}x"
            f"   avg nodes {nodes.mean():.0f}{'' if same else '  OUTPUT MISMATCH'}"
        )


def bench_viterbi(args):
    rng = np.random.default_rng(args.seed)
    code = ConvCode.from_catalog(6)
    info = rng.integers(0, 2, 1000)
    llr = (1.0 - 2.0 * conv_encode(info, code)) + rng.normal(0, 0.8, 2 * (1000 + code.nu))
    _, sgn0, sgn1 = _trellis_tables(code)
    llr2 = llr.reshape(-1, 2)
    reps = 20
    print(f"\n{'case':<28}{'python':>12}{'cython':>12}{'speedup':>9}")
    times = {}
    for name, mod in (("python", _sdpy), ("cython", _sdkernel)):
        if mod is None:
            continue
        t0 = time.perf_counter()
        for _ in range(reps):
            bits = mod.viterbi_path(llr2, sgn0, sgn1)
        times[name] = (time.perf_counter() - t0) / reps, bits
    t_py = times["python"][0]
    label = "viterbi nu=6, 1000 bits"
    if "cython" not in times:
        print(f"{label:<28}{t_py * 1e3:>10.2f}ms{'n/a':>12}")
        return
    t_cy = times["cython"][0]
    same = np.array_equal(times["python"][1], times["cython"][1])
    print(
        f"{label:<28}{t_py * 1e3:>10.2f}ms{t_cy * 1e3:>10.2f}ms{t_py / t_cy:>8.1f}x"
        f"{'' if same else '  OUTPUT MISMATCH'}"
    )


if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--blocks", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    if _sdkernel is None:
        print("compiled kernel not available; timing the fallback only\n")
    bench_sosd(args)
    bench_viterbi(args)
