"""Run every shipped experiment config in turn and print where the outputs went.

    python scripts/run_all.py                # desk scale
    python scripts/run_all.py --preset paper # full grids, slow
"""
import argparse
import sys
import time
from pathlib import Path

from proxymit.cli import main

ROOT = Path(__file__).resolve().parent.parent
ORDER = ["proxy_leakage", "map_quality", "mitigate", "code_bench", "noise_hist", "fit_map"]


def run(argv=None) -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--preset", choices=["desk", "paper"], default=None)
    ap.add_argument("--seed", type=int, default=None)
    ap.add_argument("--out", default=str(ROOT / "results"))
    ap.add_argument("--only", nargs="*", default=ORDER)
    args = ap.parse_args(argv)
    worst = 0
    for name in args.only:
        cmd = ["--config", str(ROOT / "configs" / f"{name}.json"), "--out", str(Path(args.out) / name)]
        if args.preset:
            cmd += ["--preset", args.preset]
        if args.seed is not None:
            cmd += ["--seed", str(args.seed)]
        t0 = time.perf_counter()
        code = main(cmd)
        print(f"{name}: exit {code} in {time.perf_counter() - t0:.1f}s", flush=True)
        worst = max(worst, code)
    return worst


if __name__ == "__main__":
    sys.exit(run())
