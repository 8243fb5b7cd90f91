"""Run configuration: a single YAML document with strict validation.

Unknown keys are rejected by name, and every violation in a file is reported
at once. `dump_config` emits a canonical form whose load/dump round-trip is
byte-stable, which is what makes whole-pipeline reruns comparable.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import yaml

from .driver import BenchmarkInstance, FloorplanBudget
from .errors import ConfigError
from .geometry import Side
from .model import Controller, GridConfig, PortSpec, Template
from .placement import AnnealParams


@dataclass(frozen=True)
class InstanceSpec:
    id: str = "run"
    sites: int = 1
    diversity: int = 1
    seed: int = 0


@dataclass(frozen=True)
class DrcSpec:
    epsilon: float = 0.05
    seed: int = 0


@dataclass(frozen=True)
class RunConfig:
    templates: tuple[Template, ...]
    grid: GridConfig
    controller: Controller
    instance: InstanceSpec
    anneal: AnnealParams
    budget: FloorplanBudget
    drc: DrcSpec = field(default_factory=DrcSpec)
    density_weight: float | None = None  # None derives from mean block area
    aspect_weight: float | None = None
    output_dir: str = "out"
    wall_time_in_csv: bool = False
    svg_scale: int = 2

    def template_map(self) -> dict[int, Template]:
        return {t.id: t for t in self.templates}


_SIDES = {s.value for s in Side}


class _Reader:
    """Walks a nested dict, collecting violations instead of failing fast."""

    def __init__(self):
        self.violations: list[str] = []

    def fail(self, msg: str):
        self.violations.append(msg)

    def section(self, data: dict, key: str, allowed: set[str], where: str) -> dict:
        raw = data.get(key) or {}
        if not isinstance(raw, dict):
            self.fail(f"{where}.{key} must be a mapping")
            return {}
        for k in raw:
            if k not in allowed:
                self.fail(f"unknown key '{k}' in {where}.{key}")
        return raw

    def get(self, raw: dict, key: str, default, where: str, kind=None):
        value = raw.get(key, default)
        if value is not None and kind is not None and not isinstance(value, kind):
            if kind is float and isinstance(value, int):
                return float(value)
            self.fail(f"{where}.{key} has the wrong type ({type(value).__name__})")
            return default
        return value


def _parse_port(raw, where: str, reader: _Reader) -> PortSpec:
    if not isinstance(raw, dict):
        reader.fail(f"{where}.port must be a mapping")
        return PortSpec(Side.NORTH, 0, 1)
    for k in raw:
        if k not in {"side", "offset", "length"}:
            reader.fail(f"unknown key '{k}' in {where}.port")
    side = raw.get("side", "north")
    if side not in _SIDES:
        reader.fail(f"{where}.port.side must be one of {sorted(_SIDES)}")
        side = "north"
    try:
        return PortSpec(Side(side), int(raw.get("offset", 0)), int(raw.get("length", 1)))
    except (ValueError, TypeError) as exc:
        reader.fail(f"{where}.port: {exc}")
        return PortSpec(Side.NORTH, 0, 1)


_TOP_KEYS = {
    "templates", "grid", "controller", "instance", "anneal", "cost",
    "budget", "drc", "output_dir", "wall_time_in_csv", "svg_scale",
}


def parse_config(data: dict) -> RunConfig:
    reader = _Reader()
    if not isinstance(data, dict):
        raise ConfigError(["config root must be a mapping"])
    for k in data:
        if k not in _TOP_KEYS:
            reader.fail(f"unknown key '{k}' at top level")

    templates: list[Template] = []
    raw_templates = data.get("templates")
    if not isinstance(raw_templates, list) or not raw_templates:
        reader.fail("templates must be a non-empty list")
        raw_templates = []
    for idx, raw in enumerate(raw_templates):
        where = f"templates[{idx}]"
        if not isinstance(raw, dict):
            reader.fail(f"{where} must be a mapping")
            continue
        for k in raw:
            if k not in {"id", "width", "height", "port"}:
                reader.fail(f"unknown key '{k}' in {where}")
        port = _parse_port(raw.get("port", {}), where, reader)
        try:
            templates.append(
                Template(
                    id=int(raw.get("id", idx)),
                    width=int(raw.get("width", 0)),
                    height=int(raw.get("height", 0)),
                    port=port,
                )
            )
        except (ValueError, TypeError) as exc:
            reader.fail(f"{where}: {exc}")
    ids = [t.id for t in templates]
    if len(set(ids)) != len(ids):
        reader.fail("template ids must be unique")

    g = reader.section(data, "grid", {"spacing", "margin_x", "margin_y", "max_aspect", "outer_bound"}, "config")
    outer = g.get("outer_bound")
    if outer is not None:
        if not (isinstance(outer, (list, tuple)) and len(outer) == 2):
            reader.fail("config.grid.outer_bound must be a [width, height] pair")
            outer = None
        else:
            outer = (int(outer[0]), int(outer[1]))

    c = reader.section(data, "controller", {"width", "height", "port"}, "config")
    ctrl_port = _parse_port(c.get("port", {"side": "north", "offset": 0, "length": 1}), "controller", reader)
    ctrl_w = int(reader.get(c, "width", 8, "controller", int))
    ctrl_h = int(reader.get(c, "height", 8, "controller", int))
    side_len = ctrl_w if ctrl_port.side in (Side.NORTH, Side.SOUTH) else ctrl_h
    if ctrl_port.offset + ctrl_port.length > side_len:
        reader.fail("controller port segment exceeds its side")

    i = reader.section(data, "instance", {"id", "sites", "diversity", "seed"}, "config")
    if "seed" not in i:
        reader.fail("instance.seed is required (runs never seed from the clock)")
    instance = InstanceSpec(
        id=str(reader.get(i, "id", "run", "instance")),
        sites=int(reader.get(i, "sites", 1, "instance", int)),
        diversity=int(reader.get(i, "diversity", 1, "instance", int)),
        seed=int(reader.get(i, "seed", 0, "instance", int)),
    )
    if instance.sites < 1:
        reader.fail("instance.sites must be >= 1")
    if templates and not (1 <= instance.diversity <= len(templates)):
        reader.fail(f"instance.diversity must be within 1..{len(templates)}")

    a = reader.section(data, "anneal", {"iterations", "initial_temp", "cooling", "rng_seed"}, "config")
    co = reader.section(data, "cost", {"density_weight", "aspect_weight"}, "config")
    b = reader.section(data, "budget", {"placement_attempts", "routing_attempts", "time_limit"}, "config")
    d = reader.section(data, "drc", {"epsilon", "seed"}, "config")

    if reader.violations:
        raise ConfigError(reader.violations)

    try:
        grid = GridConfig(
            spacing=int(g.get("spacing", 2)),
            margin_x=int(g.get("margin_x", 3)),
            margin_y=int(g.get("margin_y", 3)),
            max_aspect=float(g.get("max_aspect", 2.0)),
            controller_size=(ctrl_w, ctrl_h),
            outer_bound=outer,
        )
        anneal = AnnealParams(
            iterations=int(a.get("iterations", 2000)),
            initial_temp=None if a.get("initial_temp") is None else float(a["initial_temp"]),
            cooling=float(a.get("cooling", 0.95)),
            rng_seed=int(a.get("rng_seed", instance.seed)),
        )
        budget = FloorplanBudget(
            placement_attempts=int(b.get("placement_attempts", 5)),
            routing_attempts=int(b.get("routing_attempts", 3)),
            time_limit=None if b.get("time_limit") is None else float(b["time_limit"]),
        )
    except ValueError as exc:
        raise ConfigError([str(exc)]) from exc

    return RunConfig(
        templates=tuple(templates),
        grid=grid,
        controller=Controller(width=ctrl_w, height=ctrl_h, port=ctrl_port),
        instance=instance,
        anneal=anneal,
        budget=budget,
        drc=DrcSpec(epsilon=float(d.get("epsilon", 0.05)), seed=int(d.get("seed", 0))),
        density_weight=None if co.get("density_weight") is None else float(co["density_weight"]),
        aspect_weight=None if co.get("aspect_weight") is None else float(co["aspect_weight"]),
        output_dir=str(data.get("output_dir", "out")),
        wall_time_in_csv=bool(data.get("wall_time_in_csv", False)),
        svg_scale=int(data.get("svg_scale", 2)),
    )


def load_config(path: str) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError([f"cannot read config: {exc}"]) from exc
    except yaml.YAMLError as exc:
        raise ConfigError([f"config parse error: {exc}"]) from exc
    return parse_config(data or {})


def _port_dict(port: PortSpec) -> dict:
    return {"side": port.side.value, "offset": port.offset, "length": port.length}


def dump_config(cfg: RunConfig) -> str:
    """Canonical YAML form: loading and re-dumping is byte-stable."""
    doc = {
        "templates": [
            {"id": t.id, "width": t.width, "height": t.height, "port": _port_dict(t.port)}
            for t in cfg.templates
        ],
        "grid": {
            "spacing": cfg.grid.spacing,
            "margin_x": cfg.grid.margin_x,
            "margin_y": cfg.grid.margin_y,
            "max_aspect": cfg.grid.max_aspect,
            "outer_bound": list(cfg.grid.outer_bound) if cfg.grid.outer_bound else None,
        },
        "controller": {
            "width": cfg.controller.width,
            "height": cfg.controller.height,
            "port": _port_dict(cfg.controller.port),
        },
        "instance": {
            "id": cfg.instance.id,
            "sites": cfg.instance.sites,
            "diversity": cfg.instance.diversity,
            "seed": cfg.instance.seed,
        },
        "anneal": {
            "iterations": cfg.anneal.iterations,
            "initial_temp": cfg.anneal.initial_temp,
            "cooling": cfg.anneal.cooling,
            "rng_seed": cfg.anneal.rng_seed,
        },
        "cost": {
            "density_weight": cfg.density_weight,
            "aspect_weight": cfg.aspect_weight,
        },
        "budget": {
            "placement_attempts": cfg.budget.placement_attempts,
            "routing_attempts": cfg.budget.routing_attempts,
            "time_limit": cfg.budget.time_limit,
        },
        "drc": {"epsilon": cfg.drc.epsilon, "seed": cfg.drc.seed},
        "output_dir": cfg.output_dir,
        "wall_time_in_csv": cfg.wall_time_in_csv,
        "svg_scale": cfg.svg_scale,
    }
    buf = io.StringIO()
    yaml.safe_dump(doc, buf, sort_keys=False, default_flow_style=False)
    return buf.getvalue()


def load_instances(path: str, templates: tuple[Template, ...]) -> list[BenchmarkInstance]:
    """Benchmark instance list: `instances:` with id/sites/diversity/seed rows."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError([f"cannot read instances: {exc}"]) from exc
    except yaml.YAMLError as exc:
        raise ConfigError([f"instances parse error: {exc}"]) from exc
    if not isinstance(data, dict) or "instances" not in data:
        raise ConfigError(["instances file needs a top-level 'instances' list"])
    violations: list[str] = []
    out: list[BenchmarkInstance] = []
    rows = data["instances"]
    if not isinstance(rows, list):
        raise ConfigError(["'instances' must be a list"])
    for idx, raw in enumerate(rows):
        where = f"instances[{idx}]"
        if not isinstance(raw, dict):
            violations.append(f"{where} must be a mapping")
            continue
        for k in raw:
            if k not in {"id", "sites", "diversity", "seed"}:
                violations.append(f"unknown key '{k}' in {where}")
        try:
            out.append(
                BenchmarkInstance(
                    id=str(raw.get("id", f"I{idx}")),
                    site_count=int(raw.get("sites", 1)),
                    template_diversity=int(raw.get("diversity", 1)),
                    template_library=templates,
                    seed=int(raw.get("seed", 0)),
                )
            )
        except (ValueError, TypeError) as exc:
            violations.append(f"{where}: {exc}")
    if violations:
        raise ConfigError(violations)
    return out
