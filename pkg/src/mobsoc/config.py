"""Pipeline configuration loaded from TOML."""
from __future__ import annotations

import hashlib
import json
import sys
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .mobility import RdConfig, TvcConfig, WorldGrid, assign_communities
from .trace_io import DAY

# sampling frames of the four campus traces
POPULATION_PRESETS = {"dartmouth": 1500, "mit": 1366, "uf": 3000, "usc": 3000}


class ConfigError(ValueError):
    """Invalid or inconsistent configuration."""


@dataclass(frozen=True)
class SourceConfig:
    kind: str = "tvc"  # file | rd | tvc
    path: str | None = None
    assignment: str = "homogeneous"
    groups: int = 1
    community_cells: int = 1


@dataclass(frozen=True)
class GeneratorConfig:
    node_count: int = 100
    seed: int = 1
    sim_days: int = 28
    v_min: float = 1.0
    v_max: float = 5.0
    pause_time: float | None = None  # model default when unset
    world_width: float = 1000.0
    world_height: float = 1000.0
    cell_size: float = 100.0
    pause_at: str = "boundary"


@dataclass(frozen=True)
class AnalysisConfig:
    slot_length: int = DAY
    windows_days: tuple[int, ...] = (7, 14, 21, 28)
    sample_size: int = 0  # 0 keeps the whole population
    sample_seed: int = 1
    power_threshold: float = 0.9
    max_components: int = 7
    graph_thresholds: tuple[float, ...] = (0.3, 0.5, 0.7)
    primary_threshold: float = 0.5
    histogram_bins: int = 10
    cut_heights: tuple[float, ...] = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)
    gn_patience: int | None = 10
    gn_max_removals: int | None = None
    baseline_seed: int = 1


@dataclass(frozen=True)
class PipelineConfig:
    name: str = "run"
    source: SourceConfig = field(default_factory=SourceConfig)
    generator: GeneratorConfig = field(default_factory=GeneratorConfig)
    analysis: AnalysisConfig = field(default_factory=AnalysisConfig)
    output_dir: str = "runs"

    def validate(self) -> "PipelineConfig":
        s, g, a = self.source, self.generator, self.analysis
        if s.kind not in ("file", "rd", "tvc"):
            raise ConfigError(f"source.kind must be file, rd or tvc, got {s.kind!r}")
        if s.kind == "file":
            if not s.path or not Path(s.path).is_file():
                raise ConfigError(f"trace file {s.path!r} does not exist")
        if s.assignment not in ("homogeneous", "grouped"):
            raise ConfigError(f"unknown assignment {s.assignment!r}")
        if g.node_count < 1 or g.sim_days < 1:
            raise ConfigError("node_count and sim_days must be positive")
        if a.slot_length <= 0:
            raise ConfigError("slot_length must be positive")
        if not a.windows_days or min(a.windows_days) < 1:
            raise ConfigError("windows_days must list positive day counts")
        if any((DAY * w) % a.slot_length for w in a.windows_days):
            raise ConfigError("window lengths must be whole multiples of slot_length")
        if s.kind != "file" and max(a.windows_days) > g.sim_days:
            raise ConfigError("a window is longer than the simulated period")
        if a.sample_size < 0:
            raise ConfigError("sample_size must be >= 0")
        if not 0 < a.power_threshold <= 1:
            raise ConfigError("power_threshold must be in (0, 1]")
        if a.max_components < 1 or a.histogram_bins < 1:
            raise ConfigError("max_components and histogram_bins must be positive")
        for t in (*a.graph_thresholds, a.primary_threshold):
            if not 0 <= t <= 1:
                raise ConfigError(f"graph threshold {t} outside [0, 1]")
        if any(h < 0 for h in a.cut_heights):
            raise ConfigError("cut heights must be >= 0")
        try:
            self.world()
            if s.kind == "rd":
                self.rd_config()
            elif s.kind == "tvc":
                self.tvc_config()
                self.assignment()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        return self

    def world(self) -> WorldGrid:
        g = self.generator
        return WorldGrid(g.world_width, g.world_height, g.cell_size)

    def rd_config(self) -> RdConfig:
        g = self.generator
        extra = {} if g.pause_time is None else {"pause_time": g.pause_time}
        return RdConfig(
            node_count=g.node_count, v_min=g.v_min, v_max=g.v_max,
            sim_duration=g.sim_days * DAY, world=self.world(), seed=g.seed,
            slot_length=self.analysis.slot_length, pause_at=g.pause_at, **extra,
        )

    def tvc_config(self) -> TvcConfig:
        g = self.generator
        extra = {} if g.pause_time is None else {"pause_time": g.pause_time}
        return TvcConfig(
            node_count=g.node_count, v_min=g.v_min, v_max=g.v_max,
            sim_duration=g.sim_days * DAY, world=self.world(), seed=g.seed,
            slot_length=self.analysis.slot_length, **extra,
        )

    def assignment(self):
        s, g = self.source, self.generator
        return assign_communities(
            g.node_count, s.assignment, self.world(), g.seed, s.groups, s.community_cells
        )

    def with_overrides(self, seed=None, threshold=None, windows=None, output_dir=None) -> "PipelineConfig":
        cfg = self
        if seed is not None:
            cfg = replace(
                cfg,
                generator=replace(cfg.generator, seed=seed),
                analysis=replace(cfg.analysis, sample_seed=seed),
            )
        if threshold is not None:
            a = cfg.analysis
            thresholds = a.graph_thresholds if threshold in a.graph_thresholds else tuple(
                sorted({*a.graph_thresholds, threshold})
            )
            cfg = replace(cfg, analysis=replace(a, primary_threshold=threshold, graph_thresholds=thresholds))
        if windows is not None:
            cfg = replace(cfg, analysis=replace(cfg.analysis, windows_days=tuple(windows)))
        if output_dir is not None:
            cfg = replace(cfg, output_dir=str(output_dir))
        return cfg

    @property
    def seed(self) -> int:
        return self.generator.seed

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("output_dir")
        return d

    def config_hash(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()


def _section(cls, data: dict, name: str):
    known = set(cls.__dataclass_fields__)
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown keys in [{name}]: {sorted(unknown)}")
    values = {}
    for key, value in data.items():
        if isinstance(value, list):
            value = tuple(value)
        values[key] = value
    return cls(**values)


def config_from_dict(data: dict, base_dir: Path | None = None) -> PipelineConfig:
    data = dict(data)
    source = dict(data.pop("source", {}))
    generator = dict(data.pop("generator", {}))
    analysis = dict(data.pop("analysis", {}))
    output = dict(data.pop("output", {}))
    name = data.pop("name", "run")
    if data:
        raise ConfigError(f"unknown top-level keys: {sorted(data)}")
    preset = generator.pop("preset", None)
    if preset is not None:
        if preset not in POPULATION_PRESETS:
            raise ConfigError(f"unknown preset {preset!r}; choose from {sorted(POPULATION_PRESETS)}")
        generator.setdefault("node_count", POPULATION_PRESETS[preset])
    for key in ("gn_patience", "gn_max_removals"):
        if analysis.get(key, 1) in (0, -1):
            analysis[key] = None
    if source.get("path") and base_dir is not None and not Path(source["path"]).is_absolute():
        source["path"] = str(base_dir / source["path"])
    try:
        cfg = PipelineConfig(
            name=name,
            source=_section(SourceConfig, source, "source"),
            generator=_section(GeneratorConfig, generator, "generator"),
            analysis=_section(AnalysisConfig, analysis, "analysis"),
            output_dir=output.get("dir", "runs"),
        )
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    return cfg.validate()


def load_config(path: str | Path) -> PipelineConfig:
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML in {path}: {exc}") from exc
    return config_from_dict(data, path.parent)
