"""Compare the compiled and pure-Python partition kernels.

    python benchmarks/bench_kernel.py [--repeat 3] [--json out.json]

Each case is a full exact enumeration of a pair-exponential weighting; the
two backends must return the same float, and the script exits 1 if not.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

from elastic_tilings import kernel
from elastic_tilings.exact import exact_partition, tiling_count
from elastic_tilings.lattice import Lattice
from elastic_tilings.weighting import WeightingFamily, build_weighting

CASES = [(1, 8, 2), (1, 12, 2), (1, 12, 3), (1, 12, 4), (2, 4, 2), (1, 14, 2)]


def time_case(f, backend: str, repeat: int) -> tuple[float, float]:
    best = float("inf")
    value = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        value = exact_partition(f, backend=backend).log_Z
        best = min(best, time.perf_counter() - t0)
    return best, value


def main(argv: list[str] | None = None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--json", help="write results here as well")
    ap.add_argument("--skip-python-above", type=int, default=3_000_000,
                    help="skip the pure backend for cases with more tilings than this")
    args = ap.parse_args(argv)

    backends = kernel.available_backends()
    if "cython" not in backends:
        print("compiled kernel not built; only the pure backend is available", file=sys.stderr)
    results = []
    mismatch = False
    print(f"{'d':>2} {'L':>3} {'n':>2} {'tilings':>10} " + " ".join(f"{b + ' s':>11}" for b in backends)
          + f" {'speedup':>8}")
    for d, L, n in CASES:
        lat = Lattice(d, L)
        count = tiling_count(lat.N, n)
        f = build_weighting(WeightingFamily("pair-exponential", 2.0), lat, n)
        row = {"d": d, "L": L, "n": n, "tilings": count}
        values = {}
        for b in backends:
            if b == "python" and count > args.skip_python_above:
                row[b] = None
                continue
            row[b], values[b] = time_case(f, b, args.repeat)
        if len(set(values.values())) > 1:
            mismatch = True
        speed = None
        if row.get("cython") and row.get("python"):
            speed = row["python"] / row["cython"]
        row["speedup"] = speed
        results.append(row)
        cells = " ".join(f"{row[b]:11.4f}" if row[b] is not None else f"{'-':>11}" for b in backends)
        print(f"{d:>2} {L:>3} {n:>2} {count:>10} {cells} {speed:8.1f}" if speed
              else f"{d:>2} {L:>3} {n:>2} {count:>10} {cells} {'-':>8}")
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            json.dump(results, fh, indent=2)
    if mismatch:
        print("backends disagree", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
