"""Command line interface: ``mobsoc analyze|generate|compare``."""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, load_config
from .pipeline import PipelineError, generate_trace, run_pipeline, trace_metadata, write_reports
from .trace_io import EmptyTraceError, write_sessions

EXIT_OK, EXIT_CONFIG, EXIT_DATA = 0, 2, 3

log = logging.getLogger("mobsoc")


def _windows(text: str) -> list[int]:
    try:
        days = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"--windows expects comma-separated day counts, got {text!r}")
    if not days:
        raise argparse.ArgumentTypeError("--windows is empty")
    return days


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mobsoc", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("config", help="TOML pipeline config")
        p.add_argument("--seed", type=int, help="override generator and sampling seed")
        p.add_argument("--out", help="output location (overrides the config)")

    p = sub.add_parser("analyze", help="run the full pipeline and write a report bundle")
    common(p)
    p.add_argument("--threshold", type=float, help="similarity threshold of the primary graph")
    p.add_argument("--windows", type=_windows, help="comma-separated window lengths in days")

    p = sub.add_parser("generate", help="write a synthetic session trace")
    common(p)

    p = sub.add_parser("compare", help="side-by-side histogram and CDF of two bundles")
    p.add_argument("bundle_a")
    p.add_argument("bundle_b")
    p.add_argument("--window", help="window directory to compare, e.g. w28d (default: largest shared)")
    p.add_argument("--out", help="write the table here instead of stdout")
    return parser


def cmd_analyze(args) -> int:
    config = load_config(args.config).with_overrides(
        seed=args.seed, threshold=args.threshold, windows=args.windows, output_dir=args.out
    ).validate()
    bundle = run_pipeline(config)
    path = write_reports(bundle, config.output_dir)
    print(path)
    return EXIT_OK


def cmd_generate(args) -> int:
    config = load_config(args.config).with_overrides(seed=args.seed)
    if config.source.kind == "file":
        raise ConfigError("generate needs source.kind = 'rd' or 'tvc'")
    trace = generate_trace(config)
    out = Path(args.out) if args.out else Path(config.output_dir) / f"{config.name}.tsv"
    out.parent.mkdir(parents=True, exist_ok=True)
    tmp = out.with_name(out.name + ".partial")
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(f"# {config.source.kind} trace, seed {config.seed}\n")
        write_sessions(trace.sessions, fh)
    tmp.replace(out)
    meta = trace_metadata(config) | {"sessions": len(trace), "nodes": len(trace.node_ids)}
    out.with_name(out.name + ".meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    print(out)
    return EXIT_OK


def _read_csv(path: Path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _cdf_at(rows: list[dict], grid: np.ndarray) -> np.ndarray:
    scores = np.array([float(r["score"]) for r in rows])
    cum = np.array([float(r["cum_fraction"]) for r in rows])
    idx = np.searchsorted(scores, grid, side="right") - 1
    return np.where(idx >= 0, cum[np.clip(idx, 0, None)], 0.0)


def compare_bundles(bundle_a: Path, bundle_b: Path, window: str | None = None) -> str:
    """Histogram fractions and CDFs of two bundles on a shared grid, as CSV text."""
    wa = {p.name for p in bundle_a.iterdir() if p.is_dir()}
    wb = {p.name for p in bundle_b.iterdir() if p.is_dir()}
    shared = sorted(wa & wb)
    if window is None:
        if not shared:
            raise FileNotFoundError("bundles share no window directory")
        window = shared[-1]
    elif window not in shared:
        raise FileNotFoundError(f"window {window} missing from one bundle")
    ha = _read_csv(bundle_a / window / "histogram.csv")
    hb = _read_csv(bundle_b / window / "histogram.csv")
    if [(r["bin_low"], r["bin_high"]) for r in ha] != [(r["bin_low"], r["bin_high"]) for r in hb]:
        raise ValueError("bundles use different histogram bins")
    ta = sum(int(r["count"]) for r in ha) or 1
    tb = sum(int(r["count"]) for r in hb) or 1
    lines = [f"# window {window}", "bin_low,bin_high,fraction_a,fraction_b"]
    for ra, rb in zip(ha, hb):
        lines.append(
            f"{ra['bin_low']},{ra['bin_high']},{int(ra['count']) / ta:.6f},{int(rb['count']) / tb:.6f}"
        )
    grid = np.round(np.linspace(0.0, 1.0, 21), 10)
    ca = _cdf_at(_read_csv(bundle_a / window / "cdf.csv"), grid)
    cb = _cdf_at(_read_csv(bundle_b / window / "cdf.csv"), grid)
    lines.append("")
    lines.append("score,cdf_a,cdf_b")
    lines.extend(f"{g:.2f},{x:.6f},{y:.6f}" for g, x, y in zip(grid, ca, cb))
    return "\n".join(lines) + "\n"


def cmd_compare(args) -> int:
    text = compare_bundles(Path(args.bundle_a), Path(args.bundle_b), args.window)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    handler = {"analyze": cmd_analyze, "generate": cmd_generate, "compare": cmd_compare}[args.command]
    try:
        return handler(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PipelineError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (EmptyTraceError, FileNotFoundError, ValueError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
