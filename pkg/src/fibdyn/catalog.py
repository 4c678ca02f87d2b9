"""Closed-form minimal decompositions of F_m on Z_2.

Each class of m (by m mod 12 and then by the residue of q = (m - r)/12)
has a known decomposition: a fixed point or short attracting orbit, a
list of finite or n-indexed families of balls that are minimal
components, and an attracting basin.  ``catalog_decompose`` instantiates
the family for one m at a truncation level.

Two classes (m = 4 + 12(2 + 64d) and m = 8 + 12(61 + 64d)) are only known
conditionally; their components come from the recursively chosen
representatives g_l and are flagged ``conditional``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

from .engine import Behavior, Cycle, analyze_cycle, canonical, cycle_through
from .fibpoly import FibMap, fib_value
from .padic import Ball
from .report import (BASIN, FINITE_COMPONENT, FIXED_POINT, INDEXED_FAMILY, PERIODIC_ORBIT,
                     UNEXPANDED, Component, DecompositionReport, merge_balls)


class UnsupportedM(ValueError):
    pass


class UndefinedDigitFunction(ValueError):
    pass


class CatalogError(AssertionError):
    """A parameter identity that the case relies on does not hold."""


class BrokenDichotomy(RuntimeError):
    """Neither candidate for g_l gives a strongly growing 2-cycle."""

    def __init__(self, message: str, partial: GSequence):
        super().__init__(message)
        self.partial = partial


# -- binary digit statistics ----------------------------------------------------

def _digit(q: int, i: int) -> int:
    return (q >> i) & 1


def t_of(q: int) -> int:
    """Least i >= 0 with c_i = c_{i+1}."""
    if q < 0:
        raise ValueError("q must be nonnegative")
    i = 0
    while _digit(q, i) != _digit(q, i + 1):
        i += 1
    return i


def u0_of(q: int) -> int:
    """Least i >= 1 with c_i = 0."""
    if q < 0:
        raise ValueError("q must be nonnegative")
    i = 1
    while _digit(q, i):
        i += 1
    return i


def u1_of(q: int) -> int:
    """Least i >= 1 with c_i = 1; undefined for q in {0, 1}."""
    if q < 2:
        raise UndefinedDigitFunction(f"q={q} has no 1 digit at index >= 1")
    i = 1
    while not _digit(q, i):
        i += 1
    return i


@dataclass(frozen=True)
class DigitFns:
    q: int
    t: int
    u0: int
    u1: int | None


def digit_fns(q: int) -> DigitFns:
    return DigitFns(q, t_of(q), u0_of(q), u1_of(q) if q >= 2 else None)


# -- templates ------------------------------------------------------------------

@dataclass(frozen=True)
class FamilyTemplate:
    """A family of components: ball centers as exact integers.

    ``indexed`` families run over n >= 1 as well as k; ``level`` maps n to
    the level of the balls (n is ignored for finite families).
    """

    name: str
    k_count: int
    level: Callable[[int], int]
    centers: Callable[[int, int], tuple[int, ...]]
    indexed: bool = False

    def instantiate(self, k: int, n: int = 0, origin: str = "") -> Component:
        lev = self.level(n)
        balls = tuple(Ball(c, lev) for c in self.centers(n, k))
        kind = INDEXED_FAMILY if self.indexed else FINITE_COMPONENT
        label = f"{self.name}, n={n}, k={k}" if self.indexed else f"{self.name}, k={k}"
        return Component(kind, lev, balls, f"{origin}: {label}" if origin else label,
                         k=k, n=n if self.indexed else None)

    def max_n(self, level: int) -> int:
        n = 0
        while self.level(n + 1) <= level:
            n += 1
        return n


def _sgn(k: int) -> int:
    return -1 if k % 2 else 1


# Finite-component templates for m = 4 + 12q, keyed by (modulus, residue) of q.
_FOUR = [
    ((2, 1), 4, 4, lambda k: (1 + 4 * k, 11 + 4 * k)),
    ((4, 0), 5, 8, lambda k: (1 + 4 * k, 3 + 4 * k)),
    ((8, 6), 6, 16, lambda k: (1 + 4 * k, 19 + 20 * k + 16 * k * k)),
    ((16, 10), 7, 32, lambda k: (1 + 4 * k, 51 + 116 * k + 48 * k * k)),
    ((32, 18), 8, 64, lambda k: (1 + 4 * k, 243 + 116 * k + 112 * k * k + 64 * k ** 3)),
    ((64, 34), 9, 128, lambda k: (1 + 4 * k, 115 + 116 * k + 112 * k * k + 64 * k ** 3)),
]

# Finite-component templates for m = 8 + 12q.
_EIGHT = [
    ((2, 0), 4, 4, lambda k: (3 * (1 + 2 * k), 7 + 10 * k + 4 * k * k + 8 * k ** 3)),
    ((4, 3), 5, 8, lambda k: (1 + 2 * k, 29 + 22 * k + 20 * k * k + 24 * k ** 3)),
    ((8, 1), 6, 16, lambda k: (_sgn(k) * (1 - 4 * k),
                               (32 + 13 * _sgn(k)) + (32 + 20 * _sgn(k)) * k
                               + (32 - 16 * _sgn(k)) * k * k)),
    ((16, 5), 7, 32, lambda k: (_sgn(k) * (1 - 4 * k),
                                (64 + 13 * _sgn(k)) + (32 + 20 * _sgn(k)) * k
                                + (32 - 16 * _sgn(k)) * k * k)),
    ((32, 13), 8, 64, lambda k: (_sgn(k) * (1 - 4 * k),
                                 (128 - 115 * _sgn(k)) + (128 - 12 * _sgn(k)) * k
                                 + (128 + 16 * _sgn(k)) * k * k + (128 - 64 * _sgn(k)) * k ** 3)),
    ((64, 29), 9, 128, lambda k: (_sgn(k) * (1 - 4 * k),
                                  (256 + 141 * _sgn(k)) + (256 - 140 * _sgn(k)) * k
                                  + (256 - 112 * _sgn(k)) * k * k + (256 + 64 * _sgn(k)) * k ** 3)),
]

CONJECTURE_Q = {4: (64, 2), 8: (64, 61)}


@dataclass
class CaseInfo:
    """Which closed form applies to m, with its parameters."""

    m: int
    key: str
    q: int | None = None
    d: int | None = None
    params: dict = field(default_factory=dict)
    templates: list[FamilyTemplate] = field(default_factory=list)
    basin: tuple[Ball, ...] = ()
    fixed_zero: bool = True
    odd_orbit: int = 0              # 1 or 2 for odd m, else 0
    conjecture: int | None = None   # 4 or 8 for the conditional classes
    identity: bool = False

    def describe(self) -> str:
        bits = [f"m={self.m}", self.key]
        if self.q is not None:
            bits.append(f"q={self.q}")
        if self.d is not None:
            bits.append(f"d={self.d}")
        bits += [f"{k}={v}" for k, v in sorted(self.params.items())]
        return "; ".join(bits)


def _require(cond: bool, what: str) -> None:
    if not cond:
        raise CatalogError(what)


def _finite(name: str, level: int, count: int, fn) -> FamilyTemplate:
    return FamilyTemplate(name, count, lambda n, lev=level: lev, lambda n, k: tuple(fn(k)))


def _case_two(m: int) -> CaseInfo:
    q = (m - 2) // 12
    if q % 2:
        t = t_of(q)
        rhs = (2 * 2 ** t - 1) // 3 if t % 2 else (10 * 2 ** t - 1) // 3
        _require((q - rhs) % 2 ** (t + 2) == 0, f"q={q} is not (2^(t+1)-1)/3-shaped for t={t}")
        return CaseInfo(m, "m=2+12q, q=1+2d", q, (q - 1) // 2, {"t": t}, [
            _finite("A_k", 3, 4, lambda k: (1 + 2 * k,)),
            FamilyTemplate("M_{n,k}", 2 ** (t + 1), lambda n, t=t: n + t + 3,
                           lambda n, k, t=t: ((1 + 4 * k) << n, (2 ** (t + 2) - 1 - 4 * k) << n),
                           indexed=True),
        ])
    u = u1_of(q)
    _require((q - 2 ** u) % 2 ** (u + 1) == 0, f"q={q} is not 2^u mod 2^(u+1) for u={u}")
    return CaseInfo(m, "m=2+12q, q=2+2d", q, (q - 2) // 2, {"u1": u}, [
        _finite("A_k", u + 3, 2 ** (u + 2), lambda k: (1 + 2 * k,)),
        FamilyTemplate("M_{n,k}", 2 ** u, lambda n, u=u: n + u + 1,
                       lambda n, k: ((1 + 2 * k) << n,), indexed=True),
    ])


def _case_ladder(m: int, r: int, table) -> CaseInfo:
    q = (m - r) // 12
    base = f"m={r}+12q"
    for (mod, res), level, count, fn in table:
        if q % mod == res:
            name = f"q={res}+{mod}d" if res else f"q={mod}d"
            return CaseInfo(m, f"{base}, {name}", q, (q - res) // mod, {},
                            [_finite("M_k", level, count, fn)], basin=(Ball(0, 1),))
    mod, res = CONJECTURE_Q[r]
    _require(q % mod == res, f"no case of m={r}+12q matches q={q}")
    return CaseInfo(m, f"{base}, q={res}+{mod}d", q, (q - res) // mod, {}, [],
                    basin=(Ball(0, 1),), conjecture=r)


def _case_six(m: int) -> CaseInfo:
    q = (m - 6) // 12
    basin = (Ball(1, 1),)
    if q % 4 == 0:
        return CaseInfo(m, "m=6+12q, q=4d", q, q // 4, {}, [
            FamilyTemplate("M_{n,k}", 2, lambda n: n + 3,
                           lambda n, k: ((1 + 4 * k) << n, (3 + 4 * k) << n), indexed=True),
        ], basin=basin)
    t = t_of(q)
    if q % 2:
        return CaseInfo(m, "m=6+12q, q=1+2d", q, (q - 1) // 2, {"t": t}, [
            FamilyTemplate("M_{n,k}", 2 ** (t + 1), lambda n, t=t: n + t + 2,
                           lambda n, k: ((1 + 2 * k) << n,), indexed=True),
        ], basin=basin)
    return CaseInfo(m, "m=6+12q, q=2+4d", q, (q - 2) // 4, {"t": t}, [
        FamilyTemplate("M_{n,k}", 2 ** (t + 1), lambda n, t=t: n + t + 3,
                       lambda n, k, t=t: ((1 + 4 * k) << n, (2 ** (t + 2) - 1 - 4 * k) << n),
                       indexed=True),
    ], basin=basin)


def _case_ten(m: int) -> CaseInfo:
    q = (m - 10) // 12
    if q % 2 == 0:
        t = t_of(q)
        return CaseInfo(m, "m=10+12q, q=2d", q, q // 2, {"t": t}, [
            _finite("A_k", 4, 4, lambda k: (1 + 4 * k, 7 - 4 * k)),
            FamilyTemplate("M_{n,k}", 2 ** (t + 1), lambda n, t=t: n + t + 2,
                           lambda n, k: ((1 + 2 * k) << n,), indexed=True),
        ])
    if q % 4 == 1:
        return CaseInfo(m, "m=10+12q, q=1+4d", q, (q - 1) // 4, {}, [
            _finite("A_k", 5, 8, lambda k: (1 + 4 * k, 15 - 4 * k)),
            FamilyTemplate("M_{n,k}", 2, lambda n: n + 3,
                           lambda n, k: ((1 + 4 * k) << n, (3 + 4 * k) << n), indexed=True),
        ])
    u = u0_of(q)
    _require((q - (2 ** u - 1)) % 2 ** (u + 1) == 0, f"q={q} is not 2^u - 1 mod 2^(u+1) for u={u}")
    return CaseInfo(m, "m=10+12q, q=3+4d", q, (q - 3) // 4, {"u0": u}, [
        _finite("A_k", u + 4, 2 ** (u + 2), lambda k, u=u: (1 + 4 * k, 2 ** (u + 3) - 1 - 4 * k)),
        FamilyTemplate("M_{n,k}", 2 ** u, lambda n, u=u: n + u + 2,
                       lambda n, k, u=u: ((1 + 4 * k) << n, (2 ** (u + 1) - 1 - 4 * k) << n),
                       indexed=True),
    ])


def catalog_case(m: int) -> CaseInfo:
    if m < 2:
        raise UnsupportedM(f"F_{m} is constant; no decomposition to report")
    if m % 2:
        orbit = 2 if m % 3 == 0 else 1
        key = "m odd, m=0 mod 3" if orbit == 2 else "m odd, m=+-1 mod 3"
        return CaseInfo(m, key, fixed_zero=False, odd_orbit=orbit,
                        basin=(Ball(0, 1), Ball(1, 1)))
    r = m % 12
    if r == 0:
        return CaseInfo(m, "m=12q", m // 12, basin=(Ball(0, 1), Ball(1, 1)))
    if r == 2:
        if m == 2:
            return CaseInfo(m, "m=2", identity=True, fixed_zero=False)
        return _case_two(m)
    if r == 4:
        return _case_ladder(m, 4, _FOUR)
    if r == 6:
        return _case_six(m)
    if r == 8:
        return _case_ladder(m, 8, _EIGHT)
    return _case_ten(m)


def matching_cases(m: int) -> list[str]:
    """Every case predicate that holds for an even m >= 4 (should be exactly one)."""
    r, q = m % 12, (m - m % 12) // 12
    preds = {
        "m=12q": r == 0,
        "m=2+12q, q=1+2d": r == 2 and q % 2 == 1,
        "m=2+12q, q=2+2d": r == 2 and q >= 1 and q % 2 == 0,
        "m=6+12q, q=4d": r == 6 and q % 4 == 0,
        "m=6+12q, q=1+2d": r == 6 and q % 2 == 1,
        "m=6+12q, q=2+4d": r == 6 and q % 4 == 2,
        "m=10+12q, q=2d": r == 10 and q % 2 == 0,
        "m=10+12q, q=1+4d": r == 10 and q % 4 == 1,
        "m=10+12q, q=3+4d": r == 10 and q % 4 == 3,
    }
    for table, rr in ((_FOUR, 4), (_EIGHT, 8)):
        for (mod, res), *_ in table:
            name = f"q={res}+{mod}d" if res else f"q={mod}d"
            preds[f"m={rr}+12q, {name}"] = r == rr and q % mod == res
        mod, res = CONJECTURE_Q[rr]
        preds[f"m={rr}+12q, q={res}+{mod}d"] = r == rr and q % mod == res
    return [k for k, v in preds.items() if v]


# -- conditional classes: the g_l sequence --------------------------------------

def case_m(case: int, d: int) -> int:
    if case not in CONJECTURE_Q:
        raise ValueError("case must be 4 or 8")
    if d < 0:
        raise ValueError("d must be nonnegative")
    mod, res = CONJECTURE_Q[case]
    return case + 12 * (res + mod * d)


def g_seed(case: int, d: int) -> int:
    """g_10; the companion g'_10 is g_10 + 8."""
    if case == 4:
        return 1 if d % 2 == 0 else 5
    return 5 if d % 2 == 0 else 1


@dataclass
class GSequence:
    case: int
    d: int
    m: int
    entries: list[tuple[int, int, bool]] = field(default_factory=list)   # (l, g_l, certified)
    companions: list[int] = field(default_factory=list)                  # g'_l

    @property
    def all_certified(self) -> bool:
        return all(c for _, _, c in self.entries)

    def g(self, level: int) -> int:
        for l, g, _ in self.entries:
            if l == level:
                return g
        raise KeyError(level)

    def to_record(self) -> dict:
        return {
            "case": self.case, "d": self.d, "m": self.m,
            "entries": [{"level": l, "g": g, "g_prime": gp, "certified": c}
                        for (l, g, c), gp in zip(self.entries, self.companions)],
            "all_certified": self.all_certified,
        }


def strongly_growing_pair(f, x: int, level: int) -> bool:
    """Is {x, f(x)} a 2-cycle mod 2^level that strongly grows there?"""
    c = cycle_through(f, x, level, 2)
    return c is not None and c.length == 2 and \
        analyze_cycle(f, c, valuation_guard=0).behavior is Behavior.STRONGLY_GROWS


def g_sequence(case: int, d: int, max_level: int) -> GSequence:
    if max_level < 10:
        raise ValueError("the sequence starts at level 10")
    m = case_m(case, d)
    f = FibMap(m)
    g = g_seed(case, d)
    gp = g + 8
    seq = GSequence(case, d, m)
    seq.entries.append((10, g, strongly_growing_pair(f, g, 10)))
    seq.companions.append(gp)
    for l in range(11, max_level + 1):
        step = 1 << (l - 7)
        if strongly_growing_pair(f, gp, l):
            g, gp = gp, gp + step
        else:
            g = gp + step
            if not strongly_growing_pair(f, g, l):
                raise BrokenDichotomy(
                    f"m={m}: neither {gp} nor {g} gives a strongly growing 2-cycle at level {l}", seq)
        seq.entries.append((l, g, True))
        seq.companions.append(gp)
    return seq


# Level-10 2-cycle templates {first(k), second(k)}, k = 0..63, with the
# behaviour predicted for each (class, parity of d).
def _pair(c0, c1, c2, d0, d1, d2):
    return (lambda k: c0 + c1 * k + c2 * k * k, lambda k: d0 + d1 * k + d2 * k * k)


_SG, _SS = Behavior.STRONGLY_GROWS, Behavior.STRONGLY_SPLITS
_L10_TABLE = {
    (4, 0): [("{1+16k, 371+464k+768k^2}", _pair(1, 16, 0, 371, 464, 768), _SG),
             ("{-1-16k, 653+560k+256k^2}", _pair(-1, -16, 0, 653, 560, 256), _SG),
             ("{5+16k, 663+80k+768k^2}", _pair(5, 16, 0, 663, 80, 768), _SS),
             ("{-5-16k, 361+944k+256k^2}", _pair(-5, -16, 0, 361, 944, 256), _SS)],
    (4, 1): [("{5+16k, 151+80k+768k^2}", _pair(5, 16, 0, 151, 80, 768), _SG),
             ("{-5-16k, 873+944k+256k^2}", _pair(-5, -16, 0, 873, 944, 256), _SG),
             ("{1+16k, 883+464k+768k^2}", _pair(1, 16, 0, 883, 464, 768), _SS),
             ("{-1-16k, 141+560k+256k^2}", _pair(-1, -16, 0, 141, 560, 256), _SS)],
    (8, 0): [("{5+16k, 873+944k+256k^2}", _pair(5, 16, 0, 873, 944, 256), _SG),
             ("{-5-16k, 151+80k+768k^2}", _pair(-5, -16, 0, 151, 80, 768), _SG),
             ("{1+16k, 141+560k+256k^2}", _pair(1, 16, 0, 141, 560, 256), _SS),
             ("{-1-16k, 883+464k+768k^2}", _pair(-1, -16, 0, 883, 464, 768), _SS)],
    (8, 1): [("{1+16k, 653+560k+256k^2}", _pair(1, 16, 0, 653, 560, 256), _SG),
             ("{-1-16k, 371+464k+768k^2}", _pair(-1, -16, 0, 371, 464, 768), _SG),
             ("{5+16k, 361+944k+256k^2}", _pair(5, 16, 0, 361, 944, 256), _SS),
             ("{-5-16k, 663+80k+768k^2}", _pair(-5, -16, 0, 663, 80, 768), _SS)],
}


def level10_cycle_table(case: int, d: int) -> list[tuple[Cycle, Behavior, str]]:
    """Predicted level-10 behaviour of the four 2-cycle families, k = 0..63.

    Each entry is (cycle, predicted behaviour, label).  The cycle is built
    from the template alone; whether it really is a cycle of F_m is for
    the caller to check.
    """
    if d < 0:
        raise ValueError("d must be nonnegative")
    out = []
    for label, (first, second), beh in _L10_TABLE[(case, d % 2)]:
        for k in range(64):
            out.append((canonical(10, [first(k) % 1024, second(k) % 1024]), beh, f"{label}, k={k}"))
    return out


# -- instantiation --------------------------------------------------------------

def _attracting_orbit(m: int, start: int, period: int, level: int) -> tuple[int, ...]:
    y = start
    for _ in range(4 * level):
        nxt = y
        for _ in range(period):
            nxt = fib_value(m, nxt, level)
        if nxt == y:
            break
        y = nxt
    else:  # pragma: no cover - the map contracts there
        raise CatalogError(f"F_{m}^{period} did not settle from {start}")
    orbit = [y]
    for _ in range(period - 1):
        orbit.append(fib_value(m, orbit[-1], level))
    return tuple(orbit)


def catalog_decompose(m: int, level: int, max_n: int | None = None) -> DecompositionReport:
    """Closed-form decomposition of F_m at truncation level ``level``.

    Indexed families are expanded for n <= max_n (default: as far as the
    truncation level allows); whatever is left near 0 is reported as an
    unexpanded tail.
    """
    if level < 3:
        raise ValueError("truncation level must be at least 3")
    info = catalog_case(m)
    desc = info.describe()
    rep = DecompositionReport(level=level, source="catalog")
    rep.notes.append(desc)
    if info.identity:
        rep.identity_map = True
        rep.periodic = [Component(FIXED_POINT, level, (Ball(x, level),), f"{desc}: identity map", k=1)
                        for x in range(1 << level)]
        return rep
    if info.odd_orbit:
        start = 1 if info.odd_orbit == 1 else 0
        orbit = _attracting_orbit(m, start, info.odd_orbit, level)
        c = canonical(level, list(orbit))
        kind = FIXED_POINT if info.odd_orbit == 1 else PERIODIC_ORBIT
        rep.periodic.append(Component(kind, level, c.balls(), f"{desc}: attracting orbit",
                                      k=info.odd_orbit))
        rep.basins.append(Component(BASIN, 1, info.basin, f"{desc}: basin",
                                    attractor=tuple(sorted(orbit))))
        return rep.normalize()
    if info.fixed_zero:
        rep.periodic.append(Component(FIXED_POINT, level, (Ball(0, level),), f"{desc}: fixed point 0", k=1))
    if info.basin:
        rep.basins.append(Component(BASIN, min(b.level for b in info.basin), info.basin,
                                    f"{desc}: basin", attractor=(0,)))
    n_eff = None
    for tpl in info.templates:
        if tpl.indexed:
            top = tpl.max_n(level)
            n_eff = top if max_n is None else min(max_n, top)
            for n in range(1, n_eff + 1):
                rep.components += [tpl.instantiate(k, n, desc) for k in range(tpl.k_count)]
        elif tpl.level(0) <= level:
            rep.components += [tpl.instantiate(k, 0, desc) for k in range(tpl.k_count)]
        else:
            rep.unresolved.append(Component(UNEXPANDED, 1, (Ball(1, 1),),
                                            f"{desc}: {tpl.name} lies below level {level}"))
    if n_eff is not None:
        tail = tuple(Ball(1 << j, j + 1) for j in range(n_eff + 1, level))
        if tail:
            rep.unresolved.append(Component(UNEXPANDED, n_eff + 1, tail,
                                            f"{desc}: families with n > {n_eff}"))
    if info.conjecture:
        _conditional_components(rep, info, level, desc)
    return rep.normalize()


def _conditional_components(rep: DecompositionReport, info: CaseInfo, level: int, desc: str) -> None:
    m = info.m
    covered: set[int] = set()
    if level >= 10:
        seq = g_sequence(info.conjecture, info.d, level)
        rep.notes.append("components conditional on the g_l sequence continuing to strongly grow")
        for l, g, _ in seq.entries:
            step = 1 << (l - 6)
            for k in range(64):
                x = g + step * k
                fx = fib_value(m, x, l)
                for sign in (1, -1):
                    pair = canonical(l, [(sign * x) % (1 << l), (sign * fx) % (1 << l)])
                    comp = Component(INDEXED_FAMILY, l, pair.balls(),
                                     f"{desc}: M_(l,k,{'+' if sign > 0 else '-'}1), l={l}, k={k}",
                                     k=k, conditional=True)
                    rep.components.append(comp)
                    for b in comp.balls:
                        covered.update(b.residues(level))
    rest = [x for x in range(1, 1 << level, 2) if x not in covered]
    if rest:
        rep.unresolved.append(Component(UNEXPANDED, level, tuple(merge_balls(rest, level)),
                                        f"{desc}: odd part beyond level {level}", conditional=True))
