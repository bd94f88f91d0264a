"""Command-line runner: ``proxymit --config run.json [--seed N] [--samples N] [--preset desk] [--out DIR]``."""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import replace
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path

from .config import PRESETS, ExperimentConfig, load_config
from .errors import ConfigError, NumericalError
from .experiments import Outcome, run_experiment

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_UNDERDETERMINED = 0, 2, 3, 4


def package_version() -> str:
    try:
        return version("artifact")
    except PackageNotFoundError:
        return "unknown"


def _fmt(v) -> str:
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, float):
        return format(v, ".12g")
    return str(v)


def table_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    if rows:
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(list(rows[0]))
        for r in rows:
            w.writerow([_fmt(v) for v in r.values()])
    return buf.getvalue()


def write_outputs(cfg: ExperimentConfig, outcome: Outcome, out_dir: Path) -> list[str]:
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for name, rows in outcome.tables.items():
        (out_dir / f"{name}.csv").write_text(table_csv(rows))
        written.append(f"{name}.csv")
    for key, amap in outcome.maps.items():
        path = out_dir / f"map_{key}.json"
        amap.save(path)
        written.append(path.name)
    manifest = {
        "experiment": cfg.experiment,
        "seed": cfg.seed,
        "version": package_version(),
        "config": cfg.to_dict(),
        "notes": outcome.notes,
        "outputs": sorted(written),
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=1, sort_keys=True, default=_fmt) + "\n")
    return written


def run_scenario(cfg: ExperimentConfig, out_dir: str | Path | None = None) -> Outcome:
    outcome = run_experiment(cfg)
    write_outputs(cfg, outcome, Path(out_dir if out_dir is not None else cfg.out))
    return outcome


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="proxymit", description="Proxy-space noise characterisation experiments.")
    p.add_argument("--config", required=True, help="JSON experiment config")
    p.add_argument("--seed", type=int, help="master seed (overrides the config)")
    p.add_argument("--samples", type=int, help="disorder samples per grid point")
    p.add_argument("--preset", choices=sorted(PRESETS), help="paper- or desk-scale grids and sample count")
    p.add_argument("--out", help="output directory")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        cfg = cfg.with_overrides(args.seed, None, args.preset, args.out)
        if args.samples is not None:
            cfg = replace(cfg, samples=args.samples)
        if args.seed is not None and args.seed < 0:
            raise ConfigError("seed: must be non-negative")
        outcome = run_scenario(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"config error: cannot write outputs: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    for key, amap in outcome.maps.items():
        meta = amap.metadata
        print(f"map {key}: residual {meta['residual']:.6g} over {meta['n_pairs']} pairs, rank {meta['rank']}")
    if outcome.status == EXIT_UNDERDETERMINED:
        print("fit is underdetermined: fewer independent training pairs than parameters", file=sys.stderr)
    print(f"wrote {cfg.out}")
    return outcome.status


if __name__ == "__main__":
    sys.exit(main())
