"""Time the numba kernels against their numpy/scipy counterparts.

    python3 benchmarks/bench_kernels.py [--pages N] [--repeat R]

Both paths are called directly (no env flag needed) on synthetic pages, so
the numbers compare like for like. The first numba call is a warm-up that
also checks the two backends agree.
"""

import argparse
import time

import numpy as np

from datefield import _kernels
from datefield.detector import ScanConfig
from datefield.layout import extract_lines
from datefield.synth import Stressors, SynthSpec, generate


def best_of(fn, args_list, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        for args in args_list:
            fn(*args)
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--pages", type=int, default=20)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    spec = SynthSpec(seed=11, stressors=Stressors(date_like_text=1, specks=40))
    pages = [generate(spec, i)[0] for i in range(args.pages)]
    bits = [(np.ascontiguousarray(p.bits),) for p in pages]

    cfg = ScanConfig()
    lines = []
    for p in pages:
        for line in extract_lines(p, cfg.layout):
            b = np.array([(c.bbox.x_min, c.bbox.y_min, c.bbox.x_max, c.bbox.y_max) for c in line.components], dtype=np.int64).reshape(-1, 4)
            lines.append((b[:, 0].copy(), b[:, 1].copy(), b[:, 2].copy(), b[:, 3].copy(), cfg.ranges.lo, cfg.ranges.hi, cfg.spacing_multiplier))

    # warm up and cross-check
    for a in bits[:2]:
        for x, y in zip(_kernels.label_components_numba(*a), _kernels.label_components_numpy(*a)):
            assert np.array_equal(x, y)
    for a in lines[:20]:
        c1, f1 = _kernels.scan_windows_numba(*a)
        c2, f2 = _kernels.scan_windows_numpy(*a)
        assert np.array_equal(c1, c2) and np.array_equal(f1, f2, equal_nan=True)

    h, w = pages[0].bits.shape
    n_comps = sum(len(a[0]) for a in lines)
    print(f"{args.pages} pages of {w}x{h}, {len(lines)} lines, {n_comps} components; best of {args.repeat}")
    print(f"{'kernel':<22}{'numba (ms)':>12}{'numpy (ms)':>12}{'speedup':>10}")
    for name, fast, slow, work in (
        ("label_components", _kernels.label_components_numba, _kernels.label_components_numpy, bits),
        ("scan_windows", _kernels.scan_windows_numba, _kernels.scan_windows_numpy, lines),
    ):
        t_fast = best_of(fast, work, args.repeat)
        t_slow = best_of(slow, work, args.repeat)
        print(f"{name:<22}{1e3 * t_fast:>12.2f}{1e3 * t_slow:>12.2f}{t_slow / t_fast:>9.1f}x")


if __name__ == "__main__":
    main()
