"""Decomposition reports shared by the cycle engine and the catalog.

A report describes Z/2^K Z as a disjoint union of periodic orbits, minimal
components, basin regions and (at finite precision) regions that are not
resolved yet.  Both producers emit the same shape so they can be compared
residue by residue.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .padic import Ball, PartitionReport, coverage_counts

FIXED_POINT = "FixedPoint"
PERIODIC_ORBIT = "PeriodicOrbit"
FINITE_COMPONENT = "FiniteComponent"
INDEXED_FAMILY = "IndexedFamily"
BASIN = "Basin"
UNRESOLVED = "Unresolved"
UNEXPANDED = "UnexpandedTail"

PERIODIC_KINDS = (FIXED_POINT, PERIODIC_ORBIT)
COMPONENT_KINDS = (FINITE_COMPONENT, INDEXED_FAMILY)
OPEN_KINDS = (UNRESOLVED, UNEXPANDED)


@dataclass(frozen=True)
class Component:
    """One instantiated piece of a decomposition: a finite union of balls.

    For minimal components ``level`` is the level at which the cycle was
    found to strongly grow; periodic orbits are pinned at the truncation
    level.  Basin records may carry the location of their attractor.
    """

    kind: str
    level: int
    balls: tuple[Ball, ...]
    origin: str
    k: int | None = None
    n: int | None = None
    conditional: bool = False
    attractor: tuple[int, ...] | None = None

    @property
    def centers(self) -> list[int]:
        return [b.center for b in self.balls]

    def sort_key(self):
        return (self.level, min(self.centers) if self.balls else -1, self.kind, self.centers)

    def residues(self, k: int) -> np.ndarray:
        return np.flatnonzero(coverage_counts(self.balls, k))

    def to_record(self) -> dict:
        rec: dict = {"kind": self.kind, "level": self.level}
        if self.k is not None:
            rec["k"] = self.k
        if self.n is not None:
            rec["n"] = self.n
        rec["centers"] = self.centers
        if any(b.level != self.level for b in self.balls):
            rec["ball_levels"] = [b.level for b in self.balls]
        rec["origin"] = self.origin
        rec["conditional"] = self.conditional
        if self.attractor is not None:
            rec["attractor"] = list(self.attractor)
        return rec


@dataclass
class DecompositionReport:
    level: int
    source: str
    periodic: list[Component] = field(default_factory=list)
    components: list[Component] = field(default_factory=list)
    basins: list[Component] = field(default_factory=list)
    unresolved: list[Component] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)
    identity_map: bool = False

    # names used in the design documents
    @property
    def fixed_and_periodic(self) -> list[Component]:
        return self.periodic

    @property
    def minimal_components(self) -> list[Component]:
        return self.components

    @property
    def basin_regions(self) -> list[Component]:
        return self.basins

    def normalize(self) -> DecompositionReport:
        for group in (self.periodic, self.components, self.basins, self.unresolved):
            group.sort(key=Component.sort_key)
        return self

    def all_components(self) -> list[Component]:
        return sorted(self.periodic + self.components + self.basins + self.unresolved,
                      key=Component.sort_key)

    def to_record(self) -> dict:
        return {
            "source": self.source,
            "level": self.level,
            "identity_map": self.identity_map,
            "counts": {
                "periodic": len(self.periodic),
                "minimal_components": len(self.components),
                "basin_regions": len(self.basins),
                "unresolved": len(self.unresolved),
            },
            "components": [c.to_record() for c in self.all_components()],
            "notes": list(self.notes),
        }


# -- partitions -----------------------------------------------------------------

@dataclass
class Labelling:
    """Residues mod 2^K grouped into comparison classes."""

    level: int
    classes: dict[tuple[str, frozenset], Component | None]
    basin: frozenset
    open_region: frozenset
    partition: PartitionReport


def label_residues(report: DecompositionReport) -> Labelling:
    """Group residues by component, checking that the report is a partition.

    Basin records are read as their balls minus every periodic orbit they
    contain.  All basin residues form one class and all unresolved or
    unexpanded residues form another.
    """
    k = report.level
    size = 1 << k
    counts = np.zeros(size, dtype=np.int32)
    classes: dict[tuple[str, frozenset], Component | None] = {}
    for comp in report.periodic + report.components:
        res = coverage_counts(comp.balls, k)
        counts += res
        cat = "periodic" if comp.kind in PERIODIC_KINDS else "component"
        classes[(cat, frozenset(np.flatnonzero(res).tolist()))] = comp
    periodic_mask = np.zeros(size, dtype=bool)
    for comp in report.periodic:
        periodic_mask |= coverage_counts(comp.balls, k) > 0
    open_counts = coverage_counts([b for c in report.unresolved for b in c.balls], k)
    counts += open_counts
    basin_counts = coverage_counts([b for c in report.basins for b in c.balls], k)
    # a basin ball may contain its attractor; anything else doubly covered is an overlap
    counts += basin_counts - (basin_counts > 0) * periodic_mask
    basin = frozenset(np.flatnonzero((basin_counts > 0) & ~periodic_mask).tolist())
    open_region = frozenset(np.flatnonzero(open_counts).tolist())
    multi = np.flatnonzero(counts > 1)
    missing = np.flatnonzero(counts == 0)
    part = PartitionReport(level=k, disjoint=multi.size == 0, covers=missing.size == 0,
                           multiply_covered=multi[:64].tolist(), uncovered=missing[:64].tolist())
    return Labelling(k, classes, basin, open_region, part)


def partition_check(report: DecompositionReport) -> PartitionReport:
    return label_residues(report).partition


@dataclass
class Agreement:
    agree: bool
    exact: bool
    level: int
    only_left: list[dict] = field(default_factory=list)
    only_right: list[dict] = field(default_factory=list)
    level_mismatches: list[dict] = field(default_factory=list)
    partition_problems: list[str] = field(default_factory=list)
    compared_classes: int = 0

    def to_record(self) -> dict:
        return {
            "agree": self.agree,
            "exact": self.exact,
            "level": self.level,
            "compared_classes": self.compared_classes,
            "only_left": self.only_left,
            "only_right": self.only_right,
            "level_mismatches": self.level_mismatches,
            "partition_problems": self.partition_problems,
        }


def _describe(key, comp: Component | None, limit: int = 16) -> dict:
    cat, members = key
    d = {"class": cat, "size": len(members), "smallest": sorted(members)[:limit]}
    if comp is not None:
        d["level"] = comp.level
        d["origin"] = comp.origin
    return d


def compare_reports(left: DecompositionReport, right: DecompositionReport) -> Agreement:
    """Compare two reports at the same truncation level.

    Classes lying entirely inside the union of both sides' open regions are
    folded into that region first, so a report that resolved further than
    the other is not penalized for it.  ``exact`` records whether that
    folding was needed.
    """
    if left.level != right.level:
        raise ValueError("reports must share a truncation level")
    la, lb = label_residues(left), label_residues(right)
    problems = []
    for name, lab in (("left", la), ("right", lb)):
        if not lab.partition.disjoint:
            problems.append(f"{name} overlaps at {lab.partition.multiply_covered[:8]}")
        if not lab.partition.covers:
            problems.append(f"{name} misses {lab.partition.uncovered[:8]}")
    joint_open = la.open_region | lb.open_region
    folded = False

    def fold(lab: Labelling):
        nonlocal folded
        kept = {}
        open_region = set(lab.open_region)
        for key, comp in lab.classes.items():
            if key[1] <= joint_open:
                open_region |= key[1]
                folded = True
            else:
                kept[key] = comp
        basin = lab.basin
        if basin and basin <= joint_open:
            open_region |= basin
            basin = frozenset()
            folded = True
        return kept, basin, frozenset(open_region)

    ka, basin_a, open_a = fold(la)
    kb, basin_b, open_b = fold(lb)
    if open_a != la.open_region or open_b != lb.open_region:
        folded = True
    only_a = [_describe(key, comp) for key, comp in ka.items() if key not in kb]
    only_b = [_describe(key, comp) for key, comp in kb.items() if key not in ka]
    if basin_a != basin_b:
        only_a.append({"class": "basin", "size": len(basin_a), "smallest": sorted(basin_a)[:16]})
        only_b.append({"class": "basin", "size": len(basin_b), "smallest": sorted(basin_b)[:16]})
    if open_a != open_b:
        only_a.append({"class": "open", "size": len(open_a), "smallest": sorted(open_a - open_b)[:16]})
        only_b.append({"class": "open", "size": len(open_b), "smallest": sorted(open_b - open_a)[:16]})
    mismatches = []
    for key, comp in ka.items():
        other = kb.get(key)
        if key[0] == "component" and other is not None and comp is not None and comp.level != other.level:
            mismatches.append({"smallest": min(key[1]), "left_level": comp.level,
                               "right_level": other.level})
    agree = not (only_a or only_b or mismatches or problems)
    return Agreement(agree=agree, exact=agree and not folded, level=left.level,
                     only_left=only_a, only_right=only_b, level_mismatches=mismatches,
                     partition_problems=problems, compared_classes=len(ka))


def merge_balls(residues: Iterable[int], k: int) -> list[Ball]:
    """Cover a set of residues mod 2^k by the coarsest disjoint balls."""
    remaining = set(r % (1 << k) for r in residues)
    out = []
    for level in range(1, k + 1):
        step = 1 << level
        span = 1 << (k - level)
        for c in sorted({r % step for r in remaining}):
            members = range(c, 1 << k, step)
            if len(remaining) >= span and all(r in remaining for r in members):
                out.append(Ball(c, level))
                remaining.difference_update(members)
    if remaining:  # pragma: no cover - every residue is a level-k ball
        raise AssertionError("residue cover incomplete")
    return sorted(out)
