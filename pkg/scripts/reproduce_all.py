"""Run every table/figure driver at one budget tier, keeping partial output.

    python3 scripts/reproduce_all.py --tier desk --out runs/desk --workers 4
"""

import argparse
import sys
import time
from pathlib import Path

from kamscale.errors import KamError
from kamscale.reproduce import TABLE_IDS, ReproduceConfig, reproduce


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--tier", default="desk", choices=("desk", "lab", "paper"))
    ap.add_argument("--out", type=Path, default=Path("runs/desk"))
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--cache-dir", type=Path)
    ap.add_argument("ids", nargs="*", default=list(TABLE_IDS))
    a = ap.parse_args()
    status = 0
    for tid in a.ids:
        t0 = time.perf_counter()
        try:
            rep = reproduce(ReproduceConfig(tid, a.tier, a.out, a.workers, a.cache_dir, allow_partial=True))
        except KamError as exc:
            print(f"{tid}: {exc.code} {exc}", file=sys.stderr)
            status = 1
            continue
        print(f"{tid}: {len(rep.rows)} rows, {len(rep.skipped)} skipped, {time.perf_counter() - t0:.1f}s")
    return status


if __name__ == "__main__":
    sys.exit(main())
