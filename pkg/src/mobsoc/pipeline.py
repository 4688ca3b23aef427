"""End-to-end analysis: trace -> profiles -> similarity -> communities -> reports."""
from __future__ import annotations

import json
import logging
import os
import shutil
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, kernels
from .community import (
    Partition,
    avg_path_length,
    clustering_coefficient,
    cut_dendrogram,
    girvan_newman,
    hierarchical_dendrogram,
    random_baseline,
)
from .config import PipelineConfig
from .mobility import GENERATOR_VERSION, generate_random_direction, generate_tvc
from .profile import build_profiles
from .similarity import (
    build_similarity_graph,
    cdf_to_csv,
    similarity_cdf,
    similarity_histogram,
    similarity_matrix,
)
from .trace_io import Trace, build_location_universe, clip_to_window, parse_sessions, systematic_sample

log = logging.getLogger(__name__)

METRICS_COLUMNS = ("dataset", "cc_ori", "cc_rand", "apl_ori", "apl_rand", "Q_ori", "Q_rand")
PATH_COLUMNS = (
    "dataset", "apl_hops_ori", "apl_weighted_ori", "apl_hops_rand",
    "connected_pairs_ori", "disconnected_pairs_ori",
)


class PipelineError(RuntimeError):
    """A pipeline stage failed; ``stage`` names it."""

    def __init__(self, stage: str, cause: BaseException | str):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage '{stage}' failed: {cause}")


@dataclass
class ReportBundle:
    files: dict[str, str] = field(default_factory=dict)  # relative path -> text
    metadata: dict = field(default_factory=dict)

    def add(self, name: str, text: str) -> None:
        if text:
            self.files[name] = text


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return "nan" if x != x else repr(x)
    return str(x)


def _csv(header, rows) -> str:
    lines = [",".join(header)]
    lines.extend(",".join(_fmt(v) for v in row) for row in rows)
    return "\n".join(lines) + "\n"


def generate_trace(config: PipelineConfig) -> Trace:
    kind = config.source.kind
    if kind == "rd":
        return generate_random_direction(config.rd_config())
    if kind == "tvc":
        return generate_tvc(config.tvc_config(), config.assignment())
    raise ValueError(f"source kind {kind!r} is not a generator")


def trace_metadata(config: PipelineConfig) -> dict:
    return {
        "seed": config.seed,
        "config_hash": config.config_hash(),
        "generator": config.source.kind,
        "generator_version": GENERATOR_VERSION,
        "package_version": __version__,
    }


class _Stage:
    def __init__(self, name: str):
        self.name = name

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc is not None and not isinstance(exc, PipelineError):
            raise PipelineError(self.name, exc) from exc
        log.debug("%s done in %.2fs", self.name, time.perf_counter() - self.t0)
        return False


def _apl(graph, mode) -> tuple[float, int, int]:
    try:
        r = avg_path_length(graph, mode)
    except ValueError:
        return float("nan"), 0, 0
    return r.mean, r.connected_pairs, r.disconnected_pairs


def _gn_q(graph, analysis) -> tuple[float, Partition | None]:
    if graph.n_edges == 0:
        return float("nan"), None
    result = girvan_newman(graph, analysis.gn_patience, analysis.gn_max_removals)
    return result.best_modularity, result.best


def _analyze_window(trace, window, universe, cohort, config, bundle, prefix, metrics_rows, path_rows):
    a = config.analysis
    with _Stage("profile"):
        clipped = clip_to_window(trace, window)
        profiles, excluded = build_profiles(
            clipped, universe, window, cohort, a.power_threshold, a.max_components
        )
    with _Stage("similarity"):
        if len(profiles) < 2:
            raise PipelineError("similarity", f"fewer than 2 users with online time ({len(profiles)})")
        matrix = similarity_matrix(profiles)
        hist = similarity_histogram(matrix, a.histogram_bins)
        bundle.add(f"{prefix}/histogram.csv", hist.to_csv())
        bundle.add(f"{prefix}/histogram_lognorm.csv", hist.to_lognorm_csv())
        bundle.add(f"{prefix}/cdf.csv", cdf_to_csv(similarity_cdf(matrix)))
    with _Stage("dendrogram"):
        dendro = hierarchical_dendrogram(matrix)
        bundle.add(f"{prefix}/dendrogram.nwk", dendro.to_newick() + "\n")
        cuts = [(h, cut_dendrogram(dendro, h).community_count) for h in a.cut_heights]
        bundle.add(f"{prefix}/dendrogram_cuts.csv", _csv(("cut_height", "clusters"), cuts))
    with _Stage("community"):
        for thr in a.graph_thresholds:
            graph = build_similarity_graph(matrix, thr)
            tag = f"t{thr:.2f}"
            dataset = f"{config.name}/{prefix}/{tag}"
            q_ori, part = _gn_q(graph, a)
            if part is None:
                part = Partition.from_labels(range(graph.n_vertices))
            bundle.add(f"{prefix}/edges_{tag}.txt", graph.to_edge_list_text() or "# no edges\n")
            bundle.add(f"{prefix}/partition_{tag}.csv", part.to_csv(graph.vertices))
            rand = random_baseline(graph.n_vertices, graph.n_edges, a.baseline_seed)
            q_rand, _ = _gn_q(rand, a)
            hops, connected, disconnected = _apl(graph, "unweighted")
            weighted = _apl(graph, "weighted")[0]
            hops_rand = _apl(rand, "unweighted")[0]
            metrics_rows.append((
                dataset,
                clustering_coefficient(graph),
                clustering_coefficient(rand),
                weighted,
                hops_rand,
                q_ori,
                q_rand,
            ))
            path_rows.append((dataset, hops, weighted, hops_rand, connected, disconnected))
    return {
        "window_days": window.duration / 86400,
        "sessions": len(clipped),
        "users": len(profiles),
        "excluded_users": len(excluded),
        "mean_k": float(np.mean([p.k for p in profiles])),
    }


def run_pipeline(config: PipelineConfig, trace: Trace | None = None) -> ReportBundle:
    """Run every stage for every configured window and collect the reports.

    ``trace`` skips the ingest/generate stage when given.
    """
    a = config.analysis
    bundle = ReportBundle()
    with _Stage("ingest"):
        if trace is None:
            if config.source.kind == "file":
                trace = parse_sessions(config.source.path, slot_length=a.slot_length)
            else:
                trace = generate_trace(config)
    with _Stage("sample"):
        population = trace.node_ids
        if a.sample_size and a.sample_size < len(population):
            cohort = systematic_sample(population, a.sample_size, a.sample_seed)
        else:
            cohort = population
        universe = build_location_universe(trace.select_nodes(cohort))

    metrics_rows: list[tuple] = []
    path_rows: list[tuple] = []
    windows_meta = []
    for days in sorted(a.windows_days):
        n_slots = days * 86400 // a.slot_length
        if n_slots > trace.window.n_slots:
            raise PipelineError("window", f"{days}-day window exceeds the {trace.window.duration}s trace")
        window = trace.window.prefix(n_slots)
        prefix = f"w{days:02d}d"
        windows_meta.append(
            _analyze_window(trace, window, universe, cohort, config, bundle, prefix, metrics_rows, path_rows)
        )
    bundle.add("metrics.csv", _csv(METRICS_COLUMNS, metrics_rows))
    bundle.add("path_lengths.csv", _csv(PATH_COLUMNS, path_rows))
    bundle.metadata = {
        **trace_metadata(config),
        "name": config.name,
        "config": config.to_dict(),
        "kernel_backend": kernels.BACKEND,
        "population": len(population),
        "cohort": len(cohort),
        "locations": len(universe),
        "rejected_lines": trace.rejected_lines,
        "windows": windows_meta,
    }
    bundle.files["metadata.json"] = json.dumps(bundle.metadata, indent=2, sort_keys=True) + "\n"
    return bundle


def _run_dir_name(bundle: ReportBundle) -> str:
    stamp = time.strftime("%Y%m%dT%H%M%S", time.gmtime())
    meta = bundle.metadata
    return f"run-{stamp}-{meta.get('config_hash', 'x')[:10]}-seed{meta.get('seed', 0)}"


def write_reports(bundle: ReportBundle, out_dir: str | Path) -> Path:
    """Write the bundle into a fresh run directory under ``out_dir``.

    Files go to a hidden temporary directory that is renamed into place
    only once everything is written.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(prefix=".partial-", dir=out_dir))
    try:
        for rel, text in sorted(bundle.files.items()):
            path = tmp / rel
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(text, encoding="utf-8")
        base = _run_dir_name(bundle)
        final = out_dir / base
        n = 1
        while True:
            try:
                os.rename(tmp, final)
                break
            except OSError:
                if not final.exists():
                    raise
                final = out_dir / f"{base}-{n}"
                n += 1
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise
    return final
