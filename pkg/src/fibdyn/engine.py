"""Lift-based cycle analysis for polynomial maps on Z/2^K Z.

A map is any object with ``value(x, k)`` and ``jet(x, k)`` returning
f(x) and (f(x), f'(x)) modulo 2^k.  Maps that also provide
``values_array``/``jets_array`` get whole-level lookup tables.
"""
from __future__ import annotations

from collections import Counter, deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterable, Sequence

import numpy as np

from .padic import Ball, PrecisionError, Residue, Valuation, nu2_int
from .report import (BASIN, FINITE_COMPONENT, FIXED_POINT, PERIODIC_ORBIT, UNRESOLVED,
                     Component, DecompositionReport)

GUARD = 2
TABLE_CAP = 20
VALUATION_GUARD = 24


class Behavior(str, Enum):
    STRONGLY_GROWS = "StronglyGrows"
    STRONGLY_SPLITS = "StronglySplits"
    WEAKLY_GROWS = "WeaklyGrows"
    WEAKLY_SPLITS = "WeaklySplits"
    GROWS_TAILS = "GrowsTails"

    def __str__(self) -> str:
        return self.value


def classify(a: int, b: int) -> Behavior:
    """Behavior from a_l mod 4 and b_l mod 2."""
    if a % 2 == 0:
        return Behavior.GROWS_TAILS
    if a % 4 == 1:
        return Behavior.STRONGLY_GROWS if b % 2 else Behavior.STRONGLY_SPLITS
    return Behavior.WEAKLY_GROWS if b % 2 else Behavior.WEAKLY_SPLITS


@dataclass(frozen=True)
class Cycle:
    level: int
    elements: tuple[int, ...]

    @property
    def length(self) -> int:
        return len(self.elements)

    def residues(self) -> list[Residue]:
        return [Residue(x, self.level) for x in self.elements]

    def balls(self) -> tuple[Ball, ...]:
        return tuple(Ball(x, self.level) for x in self.elements)

    def __repr__(self) -> str:
        return f"Cycle(level={self.level}, {list(self.elements)})"


def canonical(level: int, elements: Sequence[int]) -> Cycle:
    i = min(range(len(elements)), key=elements.__getitem__)
    return Cycle(level, tuple(elements[i:]) + tuple(elements[:i]))


@dataclass(frozen=True)
class CycleAnalysis:
    cycle: Cycle
    a: int                      # a_l mod 4
    b: int                      # b_l mod 2 at the canonical element
    b_all: tuple[int, ...]      # b_l mod 2 at every element
    behavior: Behavior
    b_valuation: Valuation | None = None

    @property
    def a_residue(self) -> Residue:
        return Residue(self.a, 2)

    @property
    def b_residue(self) -> Residue:
        return Residue(self.b, 1)


class Evaluator:
    """Memoizing front end for a map, with optional lookup tables."""

    def __init__(self, f, table_bits: int = 0):
        self.f = f
        self.bits = 0
        self._vals = self._ders = None
        if table_bits:
            self.ensure_table(table_bits)

    def ensure_table(self, bits: int) -> None:
        bits = min(bits, TABLE_CAP)
        if bits <= self.bits or not hasattr(self.f, "jets_array"):
            return
        xs = np.arange(1 << bits, dtype=np.uint64)
        v, d = self.f.jets_array(xs, bits)
        self._vals, self._ders = v.tolist(), d.tolist()
        self.bits = bits

    def value(self, x: int, k: int) -> int:
        if k <= self.bits:
            return self._vals[x & ((1 << self.bits) - 1)] & ((1 << k) - 1)
        return self.f.value(x, k)

    def jet(self, x: int, k: int) -> tuple[int, int]:
        if k <= self.bits:
            i = x & ((1 << self.bits) - 1)
            mask = (1 << k) - 1
            return self._vals[i] & mask, self._ders[i] & mask
        return self.f.jet(x, k)

    def table(self, k: int) -> np.ndarray:
        """f(x) mod 2^k for every x in [0, 2^k)."""
        if k <= self.bits:
            full = np.asarray(self._vals[: 1 << k], dtype=np.int64)
            return full & ((1 << k) - 1)
        if hasattr(self.f, "values_array") and k <= 64:
            return self.f.values_array(np.arange(1 << k, dtype=np.uint64), k).astype(np.int64)
        return np.array([self.f.value(x, k) for x in range(1 << k)], dtype=np.int64)

    def iterate(self, x: int, n: int, k: int) -> int:
        for _ in range(n):
            x = self.value(x, k)
        return x

    def orbit_jet(self, x: int, n: int, k: int) -> tuple[int, int]:
        """(f^n(x), (f^n)'(x)) mod 2^k by the chain rule."""
        mask = (1 << k) - 1
        d = 1
        for _ in range(n):
            x, dx = self.jet(x, k)
            d = (d * dx) & mask
        return x, d


def _ev(f) -> Evaluator:
    return f if isinstance(f, Evaluator) else Evaluator(f)


# -- cycles ---------------------------------------------------------------------

def functional_graph_cycles(table: np.ndarray, level: int) -> list[Cycle]:
    """Cycles of the map x -> table[x] on range(len(table))."""
    n = len(table)
    alive = np.ones(n, dtype=bool)
    while True:
        image = np.zeros(n, dtype=bool)
        image[table[alive]] = True
        image &= alive
        if image.sum() == alive.sum():
            break
        alive = image
    seen = np.zeros(n, dtype=bool)
    out = []
    tab = table.tolist()
    for start in np.flatnonzero(alive).tolist():
        if seen[start]:
            continue
        orbit = [start]
        seen[start] = True
        y = tab[start]
        while y != start:
            orbit.append(y)
            seen[y] = True
            y = tab[y]
        out.append(Cycle(level, tuple(orbit)))   # start is the smallest unseen member
    return out


def cycles_at_level(f, level: int) -> list[Cycle]:
    if level < 1:
        raise ValueError("level must be positive")
    if level > 24:
        raise ValueError("full enumeration is limited to level 24; follow lifts instead")
    return functional_graph_cycles(_ev(f).table(level), level)


def cycle_through(f, x: int, level: int, max_length: int) -> Cycle | None:
    """The cycle mod 2^level through x, if x is periodic with period <= max_length."""
    ev = _ev(f)
    x %= 1 << level
    orbit = [x]
    y = ev.value(x, level)
    while y != x:
        if len(orbit) >= max_length:
            return None
        orbit.append(y)
        y = ev.value(y, level)
    return canonical(level, orbit)


def analyze_cycle(f, c: Cycle, precision: int | None = None,
                  valuation_guard: int = VALUATION_GUARD) -> CycleAnalysis:
    """Compute a_l mod 4, b_l mod 2 and the behavior of a cycle."""
    ev = _ev(f)
    l, k = c.level, c.length
    work = l + GUARD if precision is None else precision
    if work < l + GUARD:
        raise PrecisionError(f"analysis at level {l} needs precision {l + GUARD}, got {work}")
    x0 = c.elements[0]
    for i, x in enumerate(c.elements):
        if ev.value(x, l) != c.elements[(i + 1) % k] % (1 << l):
            raise ValueError(f"{c!r} is not a cycle of the map")
    fk, deriv = ev.orbit_jet(x0, k, work)
    a = deriv % 4
    b = ((fk - x0) % (1 << work)) >> l & 1
    b_all = [b]
    for x in c.elements[1:]:
        y = ev.iterate(x, k, l + 1)
        b_all.append(((y - x) % (1 << (l + 1))) >> l)
    behavior = classify(a, b)
    val = None
    if behavior is Behavior.STRONGLY_SPLITS and valuation_guard > 0:
        val = b_valuation(ev, c, valuation_guard)
    return CycleAnalysis(c, a, b, tuple(b_all), behavior, val)


def b_valuation(f, c: Cycle, guard: int, x: int | None = None) -> Valuation:
    """Valuation of (f^k(x) - x) / 2^l, measured up to ``guard`` digits."""
    ev = _ev(f)
    x = c.elements[0] if x is None else x
    prec = c.level + guard
    diff = (ev.iterate(x, c.length, prec) - x) % (1 << prec)
    if diff == 0:
        return Valuation(guard, exact=False)
    return Valuation(nu2_int(diff) - c.level)


def lifts_of(f, c: Cycle) -> list[Cycle]:
    """Cycles mod 2^(l+1) inside X_sigma, canonical and sorted."""
    ev = _ev(f)
    l = c.level
    nodes = [x + t * (1 << l) for x in c.elements for t in (0, 1)]
    image = {x: ev.value(x, l + 1) for x in nodes}
    seen: set[int] = set()
    out = []
    for start in nodes:
        if start in seen:
            continue
        path, pos = [], {}
        y = start
        while y not in seen and y not in pos:
            pos[y] = len(path)
            path.append(y)
            y = image[y]
        if y in pos:
            out.append(canonical(l + 1, path[pos[y]:]))
        seen.update(path)
    return sorted(out, key=lambda cy: cy.elements[0])


# -- decomposition --------------------------------------------------------------

class ConvergenceError(RuntimeError):
    pass


def locate_attractor(f, c: Cycle, k_bits: int) -> tuple[int, ...]:
    """Periodic orbit inside a grows-tails region, mod 2^k_bits."""
    ev = _ev(f)
    y = c.elements[0]
    for _ in range(4 * k_bits):
        nxt = ev.iterate(y, c.length, k_bits)
        if nxt == y:
            break
        y = nxt
    else:
        raise ConvergenceError(f"f^{c.length} did not settle inside {c!r}")
    orbit = [y]
    for _ in range(c.length - 1):
        orbit.append(ev.value(orbit[-1], k_bits))
    return tuple(orbit)


def hensel_certified(f, c: Cycle) -> bool:
    """True when X_sigma provably contains a genuine k-periodic orbit.

    Uses Hensel's lemma on g(x) = f^k(x) - x: a root exists within
    2^-(v(g) - v(g')) of the representative when v(g) > 2 v(g').
    """
    ev = _ev(f)
    l = c.level
    prec = 2 * l + 8
    x = c.elements[0]
    fk, deriv = ev.orbit_jet(x, c.length, prec)
    g = (fk - x) % (1 << prec)
    dg = (deriv - 1) % (1 << prec)
    if dg == 0:
        return False
    vd = nu2_int(dg)
    vg = nu2_int(g) if g else prec
    return vg > 2 * vd and vg - vd >= l


def _periodic_record(orbit: Sequence[int], level: int, origin: str) -> Component:
    start = canonical(level, list(orbit))
    kind = FIXED_POINT if len(orbit) == 1 else PERIODIC_ORBIT
    return Component(kind, level, start.balls(), origin, k=len(orbit))


@dataclass
class _Partial:
    periodic: list = field(default_factory=list)
    components: list = field(default_factory=list)
    basins: list = field(default_factory=list)
    unresolved: list = field(default_factory=list)
    unresolved_cycles: list = field(default_factory=list)


def _explore(ev: Evaluator, roots: Iterable[Cycle], max_level: int,
             on_component: Callable[[Component], None] | None = None,
             frontier_limit: int | None = None) -> tuple[_Partial, list[Cycle]]:
    out = _Partial()
    work = deque(roots)
    while work:
        if frontier_limit is not None and len(work) >= frontier_limit:
            break
        c = work.popleft()
        an = analyze_cycle(ev, c, valuation_guard=0)
        beh, l = an.behavior, c.level
        if beh is Behavior.GROWS_TAILS:
            orbit = locate_attractor(ev, c, max_level)
            out.periodic.append(_periodic_record(
                orbit, max_level, f"attracting orbit of the grows-tails cycle at level {l}"))
            rec = Component(BASIN, l, c.balls(), f"grows tails at level {l}", k=c.length,
                            attractor=tuple(sorted(orbit)))
            out.basins.append(rec)
        elif beh is Behavior.STRONGLY_GROWS and l >= 2:
            rec = Component(FINITE_COMPONENT, l, c.balls(), f"strongly grows at level {l}",
                            k=c.length)
            out.components.append(rec)
        elif l >= max_level:
            if hensel_certified(ev, c):
                rec = _periodic_record(c.elements, l, f"periodic orbit certified at level {l} ({beh})")
                out.periodic.append(rec)
            else:
                rec = Component(UNRESOLVED, l, c.balls(), f"{beh} at level {l}", k=c.length)
                out.unresolved.append(rec)
                out.unresolved_cycles.append(c)
        else:
            work.extend(lifts_of(ev, c))
            continue
        if on_component is not None:
            on_component(rec)
    return out, list(work)


def _explore_remote(f, roots: list[Cycle], max_level: int) -> _Partial:
    ev = Evaluator(f, max_level + GUARD)
    return _explore(ev, roots, max_level)[0]


@dataclass
class EngineReport(DecompositionReport):
    unresolved_cycles: list[Cycle] = field(default_factory=list)


def decompose(f, max_level: int, start_level: int = 1, workers: int = 1,
              on_component: Callable[[Component], None] | None = None) -> EngineReport:
    """Minimal decomposition of f truncated at level ``max_level``."""
    if start_level not in (1, 2):
        raise ValueError("start level must be 1 or 2")
    if max_level < start_level + 2:
        raise ValueError("max_level must be at least start_level + 2")
    ev = f if isinstance(f, Evaluator) else Evaluator(f, max_level + GUARD)
    table = ev.table(start_level)
    roots = functional_graph_cycles(table, start_level)
    on_cycle = {x for c in roots for x in c.elements}
    tails = [x for x in range(1 << start_level) if x not in on_cycle]
    report = EngineReport(level=max_level, source="engine")
    if tails:
        report.basins.append(Component(BASIN, start_level, tuple(Ball(x, start_level) for x in tails),
                                       f"transient at level {start_level}"))
    parts: list[_Partial] = []
    if workers > 1:
        head, frontier = _explore(ev, roots, max_level, on_component, frontier_limit=4 * workers)
        parts.append(head)
        chunks = [frontier[i::workers] for i in range(workers)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_explore_remote, ev.f, ch, max_level) for ch in chunks if ch]
            for fut in futures:
                part = fut.result()
                if on_component is not None:
                    for rec in part.periodic + part.components + part.basins + part.unresolved:
                        on_component(rec)
                parts.append(part)
    else:
        parts.append(_explore(ev, roots, max_level, on_component)[0])
    for p in parts:
        report.periodic += p.periodic
        report.components += p.components
        report.basins += p.basins
        report.unresolved += p.unresolved
        report.unresolved_cycles += p.unresolved_cycles
    report.unresolved_cycles.sort(key=lambda c: c.elements[0])
    if report.unresolved:
        report.notes.append(f"{len(report.unresolved)} cycles still unresolved at level {max_level}")
    return report.normalize()


# -- lift laws ------------------------------------------------------------------

@dataclass
class LiftLawReport:
    level: int
    checked: Counter = field(default_factory=Counter)
    skipped: Counter = field(default_factory=Counter)
    violations: list[dict] = field(default_factory=list)
    growth_levels: Counter = field(default_factory=Counter)
    cycles_seen: int = 0

    @property
    def ok(self) -> bool:
        return not self.violations

    @property
    def saturated(self) -> bool:
        """Nothing could be checked because every split outlived the level."""
        return not self.checked and self.skipped["valuation-beyond-level"] > 0

    def to_record(self) -> dict:
        return {
            "level": self.level,
            "ok": self.ok,
            "saturated": self.saturated,
            "cycles_seen": self.cycles_seen,
            "checked": dict(sorted(self.checked.items())),
            "skipped": dict(sorted(self.skipped.items())),
            "growth_levels": {str(k): v for k, v in sorted(self.growth_levels.items())},
            "violations": self.violations,
        }


def verify_lift_laws(f, max_level: int) -> LiftLawReport:
    """Check the lifting laws on every cycle met below ``max_level``.

    Laws checked at levels 2 <= l <= max_level - 1:

    * strong growth: a single lift of twice the length, again strongly growing;
    * weak growth: a single lift of twice the length, strongly splitting;
    * weak splitting: two lifts of the same length, one weakly splitting and
      one weakly growing;
    * strong splitting with (f^k(x) - x)/2^l of constant valuation s on
      X_sigma: every descendant keeps the length and splits strongly up to
      level l + s - 1, and all descendants at level l + s strongly grow.
    """
    ev = Evaluator(f, max_level + GUARD)
    rep = LiftLawReport(level=max_level)
    memo: dict[Cycle, CycleAnalysis] = {}
    lift_memo: dict[Cycle, list[Cycle]] = {}

    def analysis(c: Cycle) -> CycleAnalysis:
        if c not in memo:
            memo[c] = analyze_cycle(ev, c, valuation_guard=0)
        return memo[c]

    def lifts(c: Cycle) -> list[Cycle]:
        if c not in lift_memo:
            lift_memo[c] = lifts_of(ev, c)
        return lift_memo[c]

    def violation(law: str, c: Cycle, **detail) -> None:
        rep.violations.append({"law": law, "level": c.level, "cycle": list(c.elements[:8]),
                               "length": c.length, **detail})

    work = deque((c, None) for c in cycles_at_level(ev, 1))
    while work:
        c, parent = work.popleft()
        rep.cycles_seen += 1
        an = analysis(c)
        beh, l, k = an.behavior, c.level, c.length
        if beh is Behavior.STRONGLY_GROWS and l >= 2 and parent is not Behavior.STRONGLY_GROWS:
            rep.growth_levels[l] += 1
        if beh is Behavior.GROWS_TAILS or l >= max_level:
            continue
        children = lifts(c)
        work.extend((ch, beh if l >= 2 else None) for ch in children)
        if l < 2:
            continue
        kids = [(ch.length, analysis(ch).behavior) for ch in children]
        if beh is Behavior.STRONGLY_GROWS:
            rep.checked["strong-growth-persists"] += 1
            if kids != [(2 * k, Behavior.STRONGLY_GROWS)]:
                violation("strong-growth-persists", c, lifts=[(n, str(b)) for n, b in kids])
        elif beh is Behavior.WEAKLY_GROWS:
            rep.checked["weak-growth-then-strong-split"] += 1
            if kids != [(2 * k, Behavior.STRONGLY_SPLITS)]:
                violation("weak-growth-then-strong-split", c, lifts=[(n, str(b)) for n, b in kids])
        elif beh is Behavior.WEAKLY_SPLITS:
            rep.checked["weak-split-one-same-one-weak-growth"] += 1
            if sorted(kids) != sorted([(k, Behavior.WEAKLY_SPLITS), (k, Behavior.WEAKLY_GROWS)]):
                violation("weak-split-one-same-one-weak-growth", c,
                          lifts=[(n, str(b)) for n, b in kids])
        else:
            _check_strong_split(ev, c, max_level, rep, analysis, lifts, violation)
    return rep


def _check_strong_split(ev, c, max_level, rep, analysis, lifts, violation) -> None:
    l, k = c.level, c.length
    s_val = b_valuation(ev, c, max_level - l + 1)
    if not s_val.exact or l + s_val.order > max_level:
        rep.skipped["valuation-beyond-level"] += 1
        return
    s = s_val.order
    # the law assumes v((f^k(x) - x)/2^l) = s on all of X_sigma; that is decided mod 2^(l+s+1)
    prec = l + s + 1
    step = 1 << l
    for x in c.elements:
        for t in range(1 << (s + 1)):
            y = x + t * step
            d = (ev.iterate(y, k, prec) - y) % (1 << prec)
            if d == 0 or nu2_int(d) != l + s:
                rep.skipped["valuation-not-constant"] += 1
                return
    rep.checked["strong-split-resolves"] += 1
    layer = [c]
    for depth in range(1, s + 1):
        nxt = []
        for cy in layer:
            nxt.extend(lifts(cy))
        want = Behavior.STRONGLY_GROWS if depth == s else Behavior.STRONGLY_SPLITS
        bad = [(ch.elements[0], ch.length, str(analysis(ch).behavior)) for ch in nxt
               if ch.length != k or analysis(ch).behavior is not want]
        if bad or len(nxt) != 2 * len(layer):
            violation("strong-split-resolves", c, s=s, at_level=l + depth, offenders=bad[:8])
            return
        layer = nxt


class PolyMap:
    """A polynomial with integer coefficients, lowest degree first."""

    def __init__(self, coeffs: Sequence[int]):
        self.coeffs = tuple(coeffs)

    def __repr__(self) -> str:
        return f"PolyMap({list(self.coeffs)})"

    def __reduce__(self):
        return (PolyMap, (self.coeffs,))

    def value(self, x: int, k: int) -> int:
        mask = (1 << k) - 1
        acc = 0
        for c in reversed(self.coeffs):
            acc = (acc * x + c) & mask
        return acc

    def jet(self, x: int, k: int) -> tuple[int, int]:
        mask = (1 << k) - 1
        v = d = 0
        for c in reversed(self.coeffs):
            d = (d * x + v) & mask
            v = (v * x + c) & mask
        return v, d

    def jets_array(self, xs: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
        mask = np.uint64((1 << k) - 1)
        xs = np.asarray(xs, dtype=np.uint64)
        v = np.zeros_like(xs)
        d = np.zeros_like(xs)
        for c in reversed(self.coeffs):
            d = (d * xs + v) & mask
            v = (v * xs + np.uint64(c % (1 << 64))) & mask
        return v, d

    def values_array(self, xs: np.ndarray, k: int) -> np.ndarray:
        return self.jets_array(xs, k)[0]
