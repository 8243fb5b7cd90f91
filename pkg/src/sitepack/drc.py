"""Abutment-scenario enumeration and greedy construction of one covering layout.

Scenario conventions
--------------------
A scenario is (kind, participants, orientation). Participants are template
ids, or the track markers "track_h" / "track_v" for unit-width channel
segments. Orientation is the side of the *first* participant that faces the
second, after canonicalization:

* pair_abut      side-to-side abutment; participants sorted, so both north
                 and south (east and west) survive for distinct templates,
                 while a self-pair collapses north/south -> north and
                 east/west -> east.
* corner_abut    exact corner-to-corner touch; the stored orientation names
                 the diagonal of the first participant: north = NE, west = NW
                 (SE and SW flip into these by swapping participants).
* four_corner    four templates whose corners meet around one empty 1x1 cell
                 (orthogonal neighbors of the void stay empty); participants
                 are an unordered multiset, orientation pinned to north.
* track_template_abut   a channel segment laid parallel along one template
                 side; all four sides are distinct.
* track_track_abut      two channel segments touching: same-axis pairs keep
                 {north, east} (stacked / end-to-end), the mixed h+v pair
                 keeps all four attachment sides.

The brute-force oracle in the test suite re-derives these sets from raw
geometry, so the canonicalization here is cross-checked, not trusted.
"""

from __future__ import annotations

import random
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from itertools import combinations_with_replacement
from typing import Iterable, Sequence

from .errors import CoverageError
from .geometry import Rect, Side, bounding_rect
from .model import Template

TRACK_H = "track_h"
TRACK_V = "track_v"
TRACK_LEN = 2  # cells per generated channel segment

_OPPOSITE = {
    Side.NORTH: Side.SOUTH,
    Side.SOUTH: Side.NORTH,
    Side.EAST: Side.WEST,
    Side.WEST: Side.EAST,
}

# Corner diagonals are encoded onto the four-valued side enum.
_DIAG_FLIP = {Side.NORTH: Side.SOUTH, Side.SOUTH: Side.NORTH, Side.WEST: Side.EAST, Side.EAST: Side.WEST}
_DIAG_CANONICAL = {Side.NORTH: Side.NORTH, Side.SOUTH: Side.NORTH, Side.WEST: Side.WEST, Side.EAST: Side.WEST}


class ScenarioKind(str, Enum):
    PAIR_ABUT = "pair_abut"
    CORNER_ABUT = "corner_abut"
    FOUR_CORNER = "four_corner"
    TRACK_TEMPLATE_ABUT = "track_template_abut"
    TRACK_TRACK_ABUT = "track_track_abut"


Participant = int | str


def _participant_key(p: Participant) -> tuple[int, str]:
    return (0, f"{p:08d}") if isinstance(p, int) else (1, str(p))


@dataclass(frozen=True)
class Scenario:
    kind: ScenarioKind
    participants: tuple[Participant, ...]
    orientation: Side

    @classmethod
    def pair(cls, a: Participant, b: Participant, side: Side) -> "Scenario":
        if _participant_key(a) > _participant_key(b):
            a, b, side = b, a, _OPPOSITE[side]
        if a == b and side in (Side.SOUTH, Side.WEST):
            side = _OPPOSITE[side]
        if isinstance(a, str) and isinstance(b, str):
            kind = ScenarioKind.TRACK_TRACK_ABUT
        elif isinstance(a, str) or isinstance(b, str):
            kind = ScenarioKind.TRACK_TEMPLATE_ABUT
        else:
            kind = ScenarioKind.PAIR_ABUT
        return cls(kind=kind, participants=(a, b), orientation=side)

    @classmethod
    def corner(cls, a: int, b: int, diagonal: Side) -> "Scenario":
        if _participant_key(a) > _participant_key(b):
            a, b, diagonal = b, a, _DIAG_FLIP[diagonal]
        if a == b:
            diagonal = _DIAG_CANONICAL[diagonal]
        return cls(kind=ScenarioKind.CORNER_ABUT, participants=(a, b), orientation=diagonal)

    @classmethod
    def four(cls, participants: Iterable[int]) -> "Scenario":
        quad = tuple(sorted(participants))
        if len(quad) != 4:
            raise ValueError("four_corner needs exactly 4 participants")
        return cls(kind=ScenarioKind.FOUR_CORNER, participants=quad, orientation=Side.NORTH)

    def sort_key(self):
        return (
            self.kind.value,
            tuple(_participant_key(p) for p in self.participants),
            self.orientation.value,
        )

    def key(self) -> str:
        parts = "+".join(str(p) for p in self.participants)
        return f"{self.kind.value}:{parts}:{self.orientation.value}"


def enumerate_scenarios(templates: Sequence[Template]) -> set[Scenario]:
    """Full canonical scenario set for a template library (tracks included)."""
    ids = sorted({t.id for t in templates})
    out: set[Scenario] = set()
    for i in ids:
        for j in ids:
            for side in Side:
                out.add(Scenario.pair(i, j, side))
                out.add(Scenario.corner(i, j, side))
    for quad in combinations_with_replacement(ids, 4):
        out.add(Scenario.four(quad))
    for i in ids:
        out.add(Scenario.pair(i, TRACK_H, Side.NORTH))
        out.add(Scenario.pair(i, TRACK_H, Side.SOUTH))
        out.add(Scenario.pair(i, TRACK_V, Side.EAST))
        out.add(Scenario.pair(i, TRACK_V, Side.WEST))
    for a in (TRACK_H, TRACK_V):
        for b in (TRACK_H, TRACK_V):
            for side in Side:
                out.add(Scenario.pair(a, b, side))
    return out


@dataclass(frozen=True)
class Component:
    id: int
    kind: Participant  # template id or track marker
    rect: Rect

    @property
    def is_track(self) -> bool:
        return isinstance(self.kind, str)


def classify_contact(a: Component, b: Component) -> tuple[Scenario | None, bool]:
    """(scenario, touching) for two non-overlapping components.

    Touching contacts that have no scenario mapping (perpendicular track ends
    on a template, diagonal track touches) come back as (None, True).
    """
    ra, rb = a.rect, b.rect
    x_overlap = min(ra.x2, rb.x2) - max(ra.x, rb.x)
    y_overlap = min(ra.y2, rb.y2) - max(ra.y, rb.y)

    side: Side | None = None
    if x_overlap > 0:
        if rb.y == ra.y2:
            side = Side.NORTH
        elif ra.y == rb.y2:
            side = Side.SOUTH
    elif y_overlap > 0:
        if rb.x == ra.x2:
            side = Side.EAST
        elif ra.x == rb.x2:
            side = Side.WEST
    if side is not None:
        if not a.is_track and not b.is_track:
            return Scenario.pair(a.kind, b.kind, side), True
        if a.is_track and b.is_track:
            return Scenario.pair(a.kind, b.kind, side), True
        # template/track contact is a scenario only when the track runs
        # parallel along the template side
        tmpl, track, t_side = (a, b, side) if b.is_track else (b, a, _OPPOSITE[side])
        parallel = track.kind == (TRACK_H if t_side in (Side.NORTH, Side.SOUTH) else TRACK_V)
        if parallel:
            return Scenario.pair(tmpl.kind, track.kind, t_side), True
        return None, True

    if x_overlap == 0 and y_overlap == 0:
        diag: Side | None = None
        if rb.x == ra.x2 and rb.y == ra.y2:
            diag = Side.NORTH  # NE
        elif rb.x2 == ra.x and rb.y == ra.y2:
            diag = Side.WEST  # NW
        elif rb.x == ra.x2 and rb.y2 == ra.y:
            diag = Side.EAST  # SE
        elif rb.x2 == ra.x and rb.y2 == ra.y:
            diag = Side.SOUTH  # SW
        if diag is not None:
            if not a.is_track and not b.is_track:
                return Scenario.corner(a.kind, b.kind, diag), True
            return None, True
    return None, False


class _SpatialIndex:
    """Bucketed lookup so contact and void checks stay cheap on big layouts."""

    SHIFT = 4

    def __init__(self):
        self.buckets: dict[tuple[int, int], list[Component]] = {}

    def _span(self, rect: Rect):
        s = self.SHIFT
        for bx in range(rect.x >> s, ((rect.x2 - 1) >> s) + 1):
            for by in range(rect.y >> s, ((rect.y2 - 1) >> s) + 1):
                yield (bx, by)

    def add(self, comp: Component) -> None:
        for key in self._span(comp.rect):
            self.buckets.setdefault(key, []).append(comp)

    def near(self, rect: Rect) -> list[Component]:
        """Components whose rects may touch `rect` (includes 1-cell halo)."""
        halo = Rect(rect.x - 1, rect.y - 1, rect.w + 2, rect.h + 2)
        seen: dict[int, Component] = {}
        for key in self._span(halo):
            for comp in self.buckets.get(key, ()):
                seen[comp.id] = comp
        return [seen[i] for i in sorted(seen)]

    def owner(self, cell: tuple[int, int]) -> Component | None:
        for comp in self.buckets.get((cell[0] >> self.SHIFT, cell[1] >> self.SHIFT), ()):
            if comp.rect.contains_cell(cell):
                return comp
        return None


class _UnionIndex:
    """Read-only view over a base index plus a few staged components."""

    def __init__(self, base: _SpatialIndex, staged: Sequence[Component]):
        self.base = base
        self.overlay = _SpatialIndex()
        for comp in staged:
            self.overlay.add(comp)

    def near(self, rect: Rect) -> list[Component]:
        merged = {c.id: c for c in self.base.near(rect)}
        merged.update({c.id: c for c in self.overlay.near(rect)})
        return [merged[i] for i in sorted(merged)]

    def owner(self, cell: tuple[int, int]) -> Component | None:
        return self.overlay.owner(cell) or self.base.owner(cell)


@dataclass
class CoverLayout:
    """Unified layout of template instances and track segments plus its tally."""

    templates: dict[int, Template]
    components: list[Component] = field(default_factory=list)
    covered: Counter = field(default_factory=Counter)
    index: _SpatialIndex = field(default_factory=_SpatialIndex)
    protected: set[tuple[int, int]] = field(default_factory=set)

    def bbox(self) -> Rect:
        if not self.components:
            return Rect(0, 0, 0, 0)
        return bounding_rect([c.rect for c in self.components])

    def add(self, kind: Participant, rect: Rect) -> Component:
        comp = Component(id=len(self.components), kind=kind, rect=rect)
        self.components.append(comp)
        self.index.add(comp)
        return comp


def _void_instance(index: _SpatialIndex, cell: tuple[int, int]) -> Scenario | None:
    """four_corner scenario at `cell`, or None when the pattern is not present."""
    x, y = cell
    if index.owner(cell) is not None:
        return None
    for arm in ((x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)):
        if index.owner(arm) is not None:
            return None
    quads = []
    for diag in ((x - 1, y - 1), (x + 1, y - 1), (x - 1, y + 1), (x + 1, y + 1)):
        comp = index.owner(diag)
        if comp is None or comp.is_track:
            return None
        quads.append(comp)
    if len({c.id for c in quads}) != 4:
        return None
    return Scenario.four([c.kind for c in quads])


def _void_candidates_near(comps: Iterable[Component]):
    for comp in comps:
        r = comp.rect
        yield (r.x - 1, r.y - 1)
        yield (r.x2, r.y - 1)
        yield (r.x - 1, r.y2)
        yield (r.x2, r.y2)


def _instances_for(
    new_comps: Sequence[Component], index
) -> tuple[list[tuple[tuple, Scenario]], list[tuple[Component, Component]]]:
    """Scenario instances created by `new_comps` (already in the index).

    Returns (instances keyed for dedup, unmapped touching contacts).
    """
    new_ids = {c.id for c in new_comps}
    instances: dict[tuple, Scenario] = {}
    unmapped: list[tuple[Component, Component]] = []
    for comp in new_comps:
        for other in index.near(comp.rect):
            if other.id == comp.id:
                continue
            if other.id in new_ids and other.id > comp.id:
                continue  # pair handled once within the batch
            first, second = (other, comp) if other.id < comp.id else (comp, other)
            scenario, touching = classify_contact(first, second)
            if scenario is not None:
                instances[("contact", first.id, second.id)] = scenario
            elif touching:
                unmapped.append((first, second))
    for cell in _void_candidates_near(new_comps):
        scenario = _void_instance(index, cell)
        if scenario is not None:
            instances[("void", cell)] = scenario
    return list(instances.items()), unmapped


def scan_coverage(layout: CoverLayout) -> tuple[Counter, list[tuple[Component, Component]]]:
    """Full adjacency scan of a layout, independent of the greedy bookkeeping."""
    counts: Counter = Counter()
    unmapped: list[tuple[Component, Component]] = []
    comps = layout.components
    for comp in comps:
        for other in layout.index.near(comp.rect):
            if other.id <= comp.id:
                continue
            scenario, touching = classify_contact(comp, other)
            if scenario is not None:
                counts[scenario] += 1
            elif touching:
                unmapped.append((comp, other))
    seen_voids: set[tuple[int, int]] = set()
    for cell in _void_candidates_near(comps):
        if cell in seen_voids:
            continue
        seen_voids.add(cell)
        scenario = _void_instance(layout.index, cell)
        if scenario is not None:
            counts[scenario] += 1
    return counts, unmapped


@dataclass(frozen=True)
class CoverageReport:
    requested: int
    covered: int
    coverage_pct: float
    occurrences: dict[Scenario, int]
    missing: tuple[Scenario, ...]
    unexpected: tuple[Scenario, ...]
    unmapped_contacts: int
    avg_occurrence: float


def verify_coverage(layout: CoverLayout, scenarios: set[Scenario]) -> CoverageReport:
    """Independent scan of the layout against a requested scenario set."""
    counts, unmapped = scan_coverage(layout)
    occurrences = {s: counts.get(s, 0) for s in scenarios}
    covered = [s for s, n in occurrences.items() if n > 0]
    missing = tuple(sorted((s for s, n in occurrences.items() if n == 0), key=Scenario.sort_key))
    unexpected = tuple(sorted({s for s in counts if s not in scenarios}, key=Scenario.sort_key))
    total = sum(occurrences[s] for s in covered)
    return CoverageReport(
        requested=len(scenarios),
        covered=len(covered),
        coverage_pct=round(100.0 * len(covered) / len(scenarios), 2) if scenarios else 100.0,
        occurrences=occurrences,
        missing=missing,
        unexpected=unexpected,
        unmapped_contacts=len(unmapped),
        avg_occurrence=round(total / len(covered), 4) if covered else 0.0,
    )


def _dims(kind: Participant, templates: dict[int, Template]) -> tuple[int, int]:
    if kind == TRACK_H:
        return (TRACK_LEN, 1)
    if kind == TRACK_V:
        return (1, TRACK_LEN)
    t = templates[kind]
    return (t.width, t.height)


def _attach_offsets(wa: int, ha: int, wb: int, hb: int, side: Side) -> list[tuple[int, int]]:
    """Candidate offsets of a second block touching the first on `side`."""
    if side is Side.NORTH:
        return [(0, ha), (wa - wb, ha)]
    if side is Side.SOUTH:
        return [(0, -hb), (wa - wb, -hb)]
    if side is Side.EAST:
        return [(wa, 0), (wa, ha - hb)]
    return [(-wb, 0), (-wb, ha - hb)]


def _corner_offset(wa: int, ha: int, wb: int, hb: int, diagonal: Side) -> tuple[int, int]:
    if diagonal is Side.NORTH:  # NE
        return (wa, ha)
    if diagonal is Side.WEST:  # NW
        return (-wb, ha)
    if diagonal is Side.EAST:  # SE
        return (wa, -hb)
    return (-wb, -hb)  # SW


@dataclass
class _Candidate:
    target: Scenario
    comps: list[tuple[Participant, Rect]]


def _fresh_origin(layout: CoverLayout) -> tuple[int, int]:
    """A spot guaranteed free of any interaction with the existing layout."""
    if not layout.components:
        return (0, 0)
    return (layout.bbox().x2 + 3, 0)


def _scenario_candidates(
    scenario: Scenario, layout: CoverLayout, templates: dict[int, Template], anchor_cap: int = 3
) -> list[_Candidate]:
    out: list[_Candidate] = []
    fx, fy = _fresh_origin(layout)

    if scenario.kind is ScenarioKind.FOUR_CORNER:
        p = scenario.participants
        dims = [_dims(k, templates) for k in p]
        vx = fx + max(d[0] for d in dims)
        vy = fy + max(d[1] for d in dims)
        rects = [
            Rect(vx - dims[0][0], vy - dims[0][1], *dims[0]),  # SW
            Rect(vx + 1, vy - dims[1][1], *dims[1]),  # SE
            Rect(vx - dims[2][0], vy + 1, *dims[2]),  # NW
            Rect(vx + 1, vy + 1, *dims[3]),  # NE
        ]
        out.append(_Candidate(scenario, list(zip(p, rects))))
        return out

    a, b = scenario.participants
    wa, ha = _dims(a, templates)
    wb, hb = _dims(b, templates)
    is_corner = scenario.kind is ScenarioKind.CORNER_ABUT

    def anchored(anchor_kind, place_kind, pw, ph, flip: bool):
        side = scenario.orientation
        anchors = [c for c in layout.components if c.kind == anchor_kind][:anchor_cap]
        for anchor in anchors:
            r = anchor.rect
            if is_corner:
                diag = _DIAG_FLIP[side] if flip else side
                offs = [_corner_offset(r.w, r.h, pw, ph, diag)]
            else:
                s = _OPPOSITE[side] if flip else side
                offs = _attach_offsets(r.w, r.h, pw, ph, s)
            for dx, dy in offs:
                out.append(_Candidate(scenario, [(place_kind, Rect(r.x + dx, r.y + dy, pw, ph))]))

    anchored(a, b, wb, hb, flip=False)
    if a != b:
        anchored(b, a, wa, ha, flip=True)

    # fresh-space fallback: place both participants, always feasible
    base = Rect(fx + max(wb, 1), fy + max(hb, 1), wa, ha)
    if is_corner:
        dx, dy = _corner_offset(wa, ha, wb, hb, scenario.orientation)
    else:
        dx, dy = _attach_offsets(wa, ha, wb, hb, scenario.orientation)[0]
    out.append(_Candidate(scenario, [(a, base), (b, Rect(base.x + dx, base.y + dy, wb, hb))]))
    return out


def _touches_protected(rect: Rect, protected: set[tuple[int, int]]) -> bool:
    if not protected:
        return False
    if rect.area <= len(protected):
        return any(cell in protected for cell in rect.cells())
    return any(rect.contains_cell(cell) for cell in protected)


def _feasible(cand: _Candidate, layout: CoverLayout, scenario_set: set[Scenario]):
    """Place-check a candidate; returns (staged, instances) or None.

    Rejects placements that overlap, leave the grid, disturb a counted
    four-corner void, or create any contact outside the scenario set.
    """
    staged: list[Component] = []
    next_id = len(layout.components)
    for kind, rect in cand.comps:
        if rect.x < 0 or rect.y < 0:
            return None
        staged.append(Component(id=next_id, kind=kind, rect=rect))
        next_id += 1
    for comp in staged:
        r = comp.rect
        if _touches_protected(r, layout.protected):
            return None
        for other in layout.index.near(r):
            o = other.rect
            if r.x < o.x2 and o.x < r.x2 and r.y < o.y2 and o.y < r.y2:
                return None
        for other in staged:
            if other.id <= comp.id:
                continue
            o = other.rect
            if r.x < o.x2 and o.x < r.x2 and r.y < o.y2 and o.y < r.y2:
                return None
    instances, unmapped = _instances_for(staged, _UnionIndex(layout.index, staged))
    if unmapped:
        return None
    for _, scenario in instances:
        if scenario not in scenario_set:
            return None
    return staged, instances


def greedy_cover(
    scenarios: set[Scenario],
    templates: Sequence[Template],
    epsilon: float = 0.0,
    rng: random.Random | None = None,
    candidate_cap: int = 64,
) -> CoverLayout:
    """Build one layout covering every scenario.

    Each iteration scores up to `candidate_cap` placements by newly covered
    scenarios, penalized by bounding-box growth (weight 1.0) and redundant
    re-coverage (weight 0.25); with probability epsilon a random feasible
    candidate is taken instead of the argmax. Terminates at full coverage:
    every pending scenario always has a feasible fresh-space placement.
    """
    if not (0.0 <= epsilon <= 1.0):
        raise ValueError("epsilon must be within [0, 1]")
    if epsilon > 0 and rng is None:
        raise ValueError("epsilon > 0 needs an rng")
    tdict = {t.id: t for t in templates}
    layout = CoverLayout(templates=tdict)
    pending = set(scenarios)

    while pending:
        evaluated = []
        for scenario in sorted(pending, key=Scenario.sort_key):
            if len(evaluated) >= candidate_cap:
                break
            for cand in _scenario_candidates(scenario, layout, tdict):
                check = _feasible(cand, layout, scenarios)
                if check is None:
                    continue
                staged, instances = check
                evaluated.append((cand, staged, instances))
                if len(evaluated) >= candidate_cap:
                    break
        if not evaluated:
            raise CoverageError("coverage stuck")

        old_area = layout.bbox().area
        scored = []
        for pos, (cand, staged, instances) in enumerate(evaluated):
            scenarios_hit = {s for _, s in instances}
            newly = sum(1 for s in scenarios_hit if s in pending)
            re_covered = len(instances) - newly
            new_bbox = bounding_rect([c.rect for c in layout.components] + [c.rect for c in staged])
            growth = (new_bbox.area - old_area) / old_area if old_area else 0.0
            scored.append((newly - 1.0 * growth - 0.25 * re_covered, -pos))

        if epsilon > 0 and rng is not None and rng.random() < epsilon:
            pick = rng.randrange(len(evaluated))
        else:
            pick = max(range(len(evaluated)), key=lambda i: scored[i])
        _, staged, instances = evaluated[pick]

        for comp in staged:
            layout.add(comp.kind, comp.rect)
        for key, scenario in instances:
            layout.covered[scenario] += 1
            if key[0] == "void":
                x, y = key[1]
                layout.protected.update(
                    {(x, y), (x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)}
                )
            pending.discard(scenario)
    return layout


def write_coverage_csv(report: CoverageReport, out) -> None:
    out.write("scenario_id,kind,occurrences\n")
    for scenario in sorted(report.occurrences, key=Scenario.sort_key):
        out.write(f"{scenario.key()},{scenario.kind.value},{report.occurrences[scenario]}\n")
