"""Layout JSON round-trip. Output is canonical (sorted keys, fixed separators)
so identical layouts serialize to identical bytes."""

from __future__ import annotations

import json

from .errors import ConfigError
from .geometry import Side
from .model import Controller, GridConfig, Layout, PortSpec, RoutePath, SiteInstance, Template


def _port_dict(port: PortSpec) -> dict:
    return {"side": port.side.value, "offset": port.offset, "length": port.length}


def _port_from(raw: dict) -> PortSpec:
    return PortSpec(side=Side(raw["side"]), offset=raw["offset"], length=raw["length"])


def layout_to_json(layout: Layout) -> str:
    doc = {
        "grid": {
            "spacing": layout.grid.spacing,
            "margin_x": layout.grid.margin_x,
            "margin_y": layout.grid.margin_y,
            "max_aspect": layout.grid.max_aspect,
            "controller_size": list(layout.grid.controller_size),
            "outer_bound": list(layout.grid.outer_bound) if layout.grid.outer_bound else None,
        },
        "templates": [
            {"id": t.id, "width": t.width, "height": t.height, "port": _port_dict(t.port)}
            for t in sorted(layout.templates.values(), key=lambda t: t.id)
        ],
        "sites": [
            {
                "id": s.id,
                "template": s.template_id,
                "position": list(s.position) if s.position else None,
            }
            for s in layout.sites
        ],
        "controller": None
        if layout.controller is None
        else {
            "width": layout.controller.width,
            "height": layout.controller.height,
            "port": _port_dict(layout.controller.port),
            "position": list(layout.controller.position) if layout.controller.position else None,
        },
        "routes": [{"cells": [list(c) for c in p.cells]} for p in layout.routes],
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n"


def layout_from_json(text: str) -> Layout:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([f"layout parse error: {exc}"]) from exc
    try:
        grid = GridConfig(
            spacing=doc["grid"]["spacing"],
            margin_x=doc["grid"]["margin_x"],
            margin_y=doc["grid"]["margin_y"],
            max_aspect=doc["grid"]["max_aspect"],
            controller_size=tuple(doc["grid"]["controller_size"]),
            outer_bound=tuple(doc["grid"]["outer_bound"]) if doc["grid"]["outer_bound"] else None,
        )
        templates = {
            t["id"]: Template(id=t["id"], width=t["width"], height=t["height"], port=_port_from(t["port"]))
            for t in doc["templates"]
        }
        sites = tuple(
            SiteInstance(
                id=s["id"],
                template_id=s["template"],
                position=tuple(s["position"]) if s["position"] else None,
            )
            for s in doc["sites"]
        )
        controller = None
        if doc["controller"] is not None:
            c = doc["controller"]
            controller = Controller(
                width=c["width"],
                height=c["height"],
                port=_port_from(c["port"]),
                position=tuple(c["position"]) if c["position"] else None,
            )
        routes = tuple(
            RoutePath(
                cells=tuple(tuple(c) for c in p["cells"]),
                endpoints=(tuple(p["cells"][0]), tuple(p["cells"][-1])),
            )
            for p in doc["routes"]
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError([f"layout document malformed: {exc}"]) from exc
    return Layout(sites=sites, controller=controller, routes=routes, grid=grid, templates=templates)
