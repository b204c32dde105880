"""Compare the compiled and numpy sampling kernels.

    python benchmarks/bench_kernels.py [--repeat 5] [--presets toy compact desk]

Both backends consume the same rng stream, so the script also checks that
they return identical samples.
"""

from __future__ import annotations

import argparse
import statistics
import time

import numpy as np

from tpbs.core import get_preset, make_rng
from tpbs.kernels import backends
from tpbs.sigcrypt import signing_width
from tpbs.trapdoor import trap_gen


def _time(fn, repeat: int) -> float:
    runs = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        runs.append(time.perf_counter() - start)
    return statistics.median(runs)


def bench_integer_sampler(impls: dict, count: int, repeat: int) -> None:
    widths = np.full(count, 40.0)
    centers = np.linspace(-5, 5, count)
    tails = 6 * widths
    print(f"\ninteger sampler, {count} draws")
    ref = None
    for name, mod in impls.items():
        t = _time(lambda: mod.sample_z_batch(widths, centers, tails, make_rng(b"\0" * 32, "b")), repeat)
        out = mod.sample_z_batch(widths, centers, tails, make_rng(b"\0" * 32, "b"))
        same = "" if ref is None else f"  identical={np.array_equal(out, ref)}"
        ref = out if ref is None else ref
        print(f"  {name:7s} {t * 1e3:9.2f} ms{same}")


def bench_klein(impls: dict, preset: str, repeat: int) -> None:
    p = get_preset(preset)
    basis = trap_gen(p.n, p.m, p.q, make_rng(b"\1" * 32, "bench")).basis
    s = signing_width(basis.gs_norm, p.m)
    center = make_rng(b"\2" * 32, "c").uniform(-p.q / 2, p.q / 2, p.m)
    args = (basis.S.T, basis.gs_rows, basis.gs_sq, s, center, 6.0)
    print(f"\nKlein sampler, {preset} (dimension {p.m})")
    ref = None
    for name, mod in impls.items():
        t = _time(lambda: mod.klein(*args, make_rng(b"\3" * 32, "k")), repeat)
        out = mod.klein(*args, make_rng(b"\3" * 32, "k"))
        same = "" if ref is None else f"  identical={np.array_equal(out, ref)}"
        ref = out if ref is None else ref
        print(f"  {name:7s} {t * 1e3:9.2f} ms{same}")


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--draws", type=int, default=100_000)
    ap.add_argument("--presets", nargs="+", default=["toy", "compact", "desk"])
    args = ap.parse_args()
    impls = backends()
    print("backends:", ", ".join(impls))
    bench_integer_sampler(impls, args.draws, args.repeat)
    for preset in args.presets:
        bench_klein(impls, preset, args.repeat)


if __name__ == "__main__":
    main()
