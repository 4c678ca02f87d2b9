"""Named verification suites over the Fibonacci-polynomial toolkit.

Every suite returns a ``SuiteResult`` holding named checks.  A failing
check keeps the first counterexample so a report can show it.  The suites
are used by ``fibdyn verify`` and by the test-suite.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .catalog import catalog_case, catalog_decompose, matching_cases, t_of
from .engine import (Behavior, analyze_cycle, cycle_through, decompose, verify_lift_laws)
from .fibpoly import (GAUSSIAN_TABLE, FibMap, fib_eval_fast, fib_naive_sequence, fib_sum_terms,
                      fib_sum_values_array, fib_values_array, period_of, power_table)
from .padic import Residue, nu2, nu2_int
from .report import COMPONENT_KINDS, Component, compare_reports, partition_check


@dataclass
class Check:
    name: str
    passed: bool = True
    cases: int = 0
    counterexample: dict | None = None

    def record(self, ok: bool, **detail) -> None:
        self.cases += 1
        if not ok and self.passed:
            self.passed = False
            self.counterexample = detail

    def to_record(self) -> dict:
        rec = {"name": self.name, "passed": self.passed, "cases": self.cases}
        if self.counterexample is not None:
            rec["counterexample"] = self.counterexample
        return rec


@dataclass
class SuiteResult:
    suite: str
    params: dict
    checks: list[Check] = field(default_factory=list)
    elapsed: float = 0.0
    extra: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def check(self, name: str) -> Check:
        c = Check(name)
        self.checks.append(c)
        return c

    def to_record(self, timing: bool = False) -> dict:
        rec = {"suite": self.suite, "params": self.params, "passed": self.passed,
               "checks": [c.to_record() for c in self.checks]}
        if self.extra:
            rec["details"] = self.extra
        if timing:
            rec["elapsed_seconds"] = round(self.elapsed, 3)
        return rec


def _timed(fn: Callable[..., SuiteResult]) -> Callable[..., SuiteResult]:
    def run(*args, **kwargs) -> SuiteResult:
        start = time.perf_counter()
        res = fn(*args, **kwargs)
        res.elapsed = time.perf_counter() - start
        return res
    run.__name__ = fn.__name__
    run.__doc__ = fn.__doc__
    return run


def _component(seq_index: int):
    """Sequence factory picking one jet component from the naive recurrence."""
    def make(x: int, k: int):
        return lambda: (t[seq_index] for t in fib_naive_sequence(1 << 30, x, k))
    return make


_VALUE, _D1, _D2, _D3 = (_component(i) for i in range(4))


# -- fibpoly suites -------------------------------------------------------------

@_timed
def periodicity_suite(max_l: int = 8, odd_bits: int = 6,
                      even_points: tuple[int, ...] = (2, 4, 6, 8, 12, 16)) -> SuiteResult:
    """Periods of m -> F_m(s) mod 2^l for odd and even s."""
    res = SuiteResult("periodicity", {"max_l": max_l, "odd_bits": odd_bits,
                                      "even_points": list(even_points)})
    odd = res.check("odd s: period 3*2^(l-1)")
    anchor = res.check("odd s: F_{3*2^l}(s) = 0 and F_{3*2^l+1}(s) = 1 + 2^(l+1) mod 2^(l+2)")
    even = res.check("even s: period 2 or 2^(l+1-v(s))")
    for s in range(1, 1 << odd_bits, 2):
        for l in range(1, max_l + 1):
            want = 3 << (l - 1)
            got = period_of(_VALUE(s, l), l, 2 * want)
            odd.record(got == want, s=s, l=l, expected=want, got=got)
            j = fib_eval_fast(3 << l, s, l + 2).as_tuple()[0]
            j1 = fib_eval_fast((3 << l) + 1, s, l + 2).as_tuple()[0]
            anchor.record(j == 0 and j1 == (1 + (1 << (l + 1))) % (1 << (l + 2)),
                          s=s, l=l, values=[j, j1])
    for s in even_points:
        v = nu2_int(s)
        for l in range(1, max_l + 1):
            want = 2 if l <= v else 1 << (l + 1 - v)
            got = period_of(_VALUE(s, l), l, 2 * want)
            even.record(got == want, s=s, l=l, expected=want, got=got)
    return res


@_timed
def valuation_suite(max_l: int = 10, odd_bits: int = 5) -> SuiteResult:
    """v_2(F_{3*2^l}(s)) = l + 2 for odd s."""
    res = SuiteResult("valuation", {"max_l": max_l, "odd_bits": odd_bits})
    chk = res.check("v2(F_{3*2^l}(s)) = l + 2")
    for s in range(1, 1 << odd_bits, 2):
        for l in range(1, max_l + 1):
            val = nu2(fib_eval_fast(3 << l, Residue(s, l + 8)).value)
            chk.record(val.exact and val.order == l + 2, s=s, l=l, got=str(val))
    return res


# first twelve terms mod 4 for odd s.  The F''' row was derived by hand from
# F'''_m = 3 F''_{m-1} + s F'''_{m-1} + F'''_{m-2}; it puts the 2s at m = 4 and
# m = 8, in line with F'''_8 = 2 mod 4.
_D1_MOD4 = (0, 0, 1, 2, 1, 2, 0, 2, 3, 2, 3, 0)
_D2_MOD4 = (0, 0, 0, 2, 2, 2, 0, 2, 2, 2, 0, 0)
_D3_MOD4 = (0, 0, 0, 0, 2, 0, 0, 0, 2, 0, 0, 0)


@_timed
def derivatives_suite(max_l: int = 8, odd_bits: int = 4) -> SuiteResult:
    """Congruences of F', F'', F''' at m = 3*2^l, 3*2^l + 1, 3*2^l + 2 and their periods."""
    res = SuiteResult("derivatives", {"max_l": max_l, "odd_bits": odd_bits})
    c1 = res.check("F'_{3*2^l} = 0, F'_{3*2^l+1} = 2^l mod 2^(l+1)")
    c2 = res.check("F''_{3*2^l} = 0, F''_{3*2^l+1} = 2^l mod 2^(l+1)")
    c3 = res.check("F'''_{3*2^l} = 0, F'''_{3*2^l+1} = 0, F'''_{3*2^l+2} = 2^l mod 2^(l+1)")
    p1 = res.check("F' mod 2^l has period 3*2^l")
    p2 = res.check("F'' mod 2^(l+1) has period 3*2^(l+1)")
    p3 = res.check("F''' mod 2^(l+1) has period 3*2^(l+1)")
    m4 = res.check("F', F'', F''' mod 4 match the listed 12-periodic patterns")
    pp = res.check("F'_m(s1) F'_m(s2) mod 4 has period 6")
    odds = range(1, 1 << odd_bits, 2)
    for s in odds:
        for l in range(1, max_l + 1):
            k = l + 1
            base = 3 << l
            _, a0, b0, t0 = fib_eval_fast(base, s, k).as_tuple()
            _, a1, b1, t1 = fib_eval_fast(base + 1, s, k).as_tuple()
            t2 = fib_eval_fast(base + 2, s, k).as_tuple()[3]
            half = 1 << l
            c1.record(a0 == 0 and a1 == half, s=s, l=l, got=[a0, a1])
            c2.record(b0 == 0 and b1 == half, s=s, l=l, got=[b0, b1])
            c3.record(t0 == 0 and t1 == 0 and t2 == half, s=s, l=l, got=[t0, t1, t2])
            want = 3 << l
            got = period_of(_D1(s, l), l, 2 * want)
            p1.record(got == want, s=s, l=l, expected=want, got=got)
            want = 3 << (l + 1)
            for chk, make in ((p2, _D2), (p3, _D3)):
                got = period_of(make(s, l + 1), l + 1, 2 * want)
                chk.record(got == want, s=s, l=l, expected=want, got=got)
        head = [t for _, t in zip(range(24), fib_naive_sequence(24, s, 2))]
        for idx, pattern in ((1, _D1_MOD4), (2, _D2_MOD4), (3, _D3_MOD4)):
            got = tuple(t[idx] for t in head)
            m4.record(got == pattern * 2, s=s, order=idx, got=list(got[:12]))
    for s1 in odds:
        for s2 in odds:
            seq = lambda s1=s1, s2=s2: (a[1] * b[1] for a, b in zip(
                fib_naive_sequence(1 << 30, s1, 2), fib_naive_sequence(1 << 30, s2, 2)))
            got = period_of(seq, 2, 12)
            pp.record(got == 6, s1=s1, s2=s2, got=got)
    return res


@_timed
def oracles_suite(max_m: int = 2000, x_count: int = 32, k: int = 16) -> SuiteResult:
    """Doubling, recurrence and binomial-sum evaluators agree on a grid."""
    res = SuiteResult("oracles", {"max_m": max_m, "x_range": [0, x_count], "k": k})
    fast_naive = res.check("doubling = recurrence (value and three derivatives)")
    sum_naive = res.check("binomial sum = recurrence (value)")
    xs = np.arange(x_count, dtype=np.uint64)
    mask = (1 << k) - 1
    naive = np.zeros((max_m + 1, x_count, 4), dtype=np.uint64)
    for x in range(x_count):
        for m, jet in enumerate(fib_naive_sequence(max_m + 1, x, k)):
            naive[m, x] = jet
    fact = (1, 1, 2, 6)
    powers = power_table(xs, max(max_m - 1, 0), k)
    for m in range(max_m + 1):
        coeffs = fib_values_array(m, xs, k, order=3)
        fast = np.stack([(c * np.uint64(f)) & np.uint64(mask) for c, f in zip(coeffs, fact)], axis=1)
        bad = np.flatnonzero((fast != naive[m]).any(axis=1))
        fast_naive.record(bad.size == 0, m=m, x=int(bad[0]) if bad.size else None)
        summed = fib_sum_values_array(m, xs, k, powers)
        bad = np.flatnonzero(summed != naive[m, :, 0])
        sum_naive.record(bad.size == 0, m=m, x=int(bad[0]) if bad.size else None)
    return res


@_timed
def gaussian_suite(max_m: int = 96) -> SuiteResult:
    """F_m(i)/i from the table against the binomial sum evaluated in Z[i]."""
    res = SuiteResult("gaussian", {"max_m": max_m})
    chk = res.check("F_m(i)/i from the 12-periodic table = binomial sum at i")
    powers = ((1, 0), (0, 1), (-1, 0), (0, -1))
    for m in range(max_m + 1):
        re = im = 0
        for c, e in fib_sum_terms(m):
            pr, pi = powers[e % 4]
            re, im = re + c * pr, im + c * pi
        # divide by i: (a + bi)/i = b - ai
        got = (im, -re)
        chk.record(got == GAUSSIAN_TABLE[m % 12], m=m, got=list(got),
                   table=list(GAUSSIAN_TABLE[m % 12]))
    return res


@_timed
def addition_law_suite(max_index: int = 64, x_count: int = 16, k: int = 32) -> SuiteResult:
    """F_{m+n} = F_{m+1} F_n + F_m F_{n-1} and the two doubling identities."""
    res = SuiteResult("addition-law", {"max_index": max_index, "x_range": [0, x_count], "k": k})
    add = res.check("F_{m+n} = F_{m+1} F_n + F_m F_{n-1}")
    even = res.check("F_{2m} = F_m (F_{m+1} + F_{m-1})")
    odd = res.check("F_{2m+1} = F_{m+1}^2 + F_m^2")
    mod = 1 << k
    for x in range(x_count):
        F = [t[0] for t in fib_naive_sequence(2 * max_index + 2, x, k)]
        for m in range(max_index + 1):
            for n in range(1, max_index + 1):
                add.record(F[m + n] == (F[m + 1] * F[n] + F[m] * F[n - 1]) % mod, x=x, m=m, n=n)
            if m >= 1:
                even.record(F[2 * m] == F[m] * (F[m + 1] + F[m - 1]) % mod, x=x, m=m)
            odd.record(F[2 * m + 1] == (F[m + 1] ** 2 + F[m] ** 2) % mod, x=x, m=m)
    return res


@_timed
def digit_pair_parity_suite(max_q: int = 1 << 16) -> SuiteResult:
    """t(q) is odd exactly when the repeated digit pair is 00 (q odd) or 11 (q even)."""
    res = SuiteResult("digit-pair-parity", {"max_q": max_q})
    odd_q = res.check("q odd: t odd iff c_t = c_{t+1} = 0")
    even_q = res.check("q even: t odd iff c_t = c_{t+1} = 1")
    for q in range(max_q + 1):
        t = t_of(q)
        digit = (q >> t) & 1
        if q % 2:
            odd_q.record((t % 2 == 1) == (digit == 0), q=q, t=t)
        else:
            even_q.record((t % 2 == 1) == (digit == 1), q=q, t=t)
    return res


# -- dynamics suites --------------------------------------------------------------

@_timed
def lift_laws_suite(ms: tuple[int, ...] = (8, 14, 16, 28), level: int = 11) -> SuiteResult:
    """Lifting laws of cycles hold for every cycle met up to ``level``."""
    res = SuiteResult("lift-laws", {"m": list(ms), "level": level})
    for m in ms:
        rep = verify_lift_laws(FibMap(m), level)
        chk = res.check(f"m={m}: lifting laws")
        chk.cases = sum(rep.checked.values())
        if rep.violations:
            chk.passed = False
            chk.counterexample = rep.violations[0]
        if rep.saturated:
            chk.passed = False
            chk.counterexample = {"saturated": True, "skipped": dict(rep.skipped)}
        res.extra[str(m)] = rep.to_record()
    return res


def growth_level_problem(m: int, comp: Component) -> dict | None:
    """Why ``comp`` is not a cycle that first strongly grows at its level, or None."""
    f = FibMap(m)
    lev = comp.level
    centers = comp.centers
    c = cycle_through(f, centers[0], lev, len(centers))
    if c is None or sorted(c.elements) != sorted(centers):
        return {"reason": "not a single cycle", "level": lev, "centers": centers[:8]}
    beh = analyze_cycle(f, c, valuation_guard=0).behavior
    if beh is not Behavior.STRONGLY_GROWS:
        return {"reason": f"{beh} at its level", "level": lev, "centers": centers[:8]}
    parent = cycle_through(f, centers[0], lev - 1, len(centers))
    if parent is not None and lev - 1 >= 2:
        pbeh = analyze_cycle(f, parent, valuation_guard=0).behavior
        if pbeh is Behavior.STRONGLY_GROWS:
            return {"reason": "already strongly grows one level lower", "level": lev,
                    "centers": centers[:8]}
    return None


def check_growth_levels(m: int, level: int, max_n: int | None = None) -> tuple[int, dict | None]:
    """Check every catalog component of F_m; returns (count, first problem)."""
    rep = catalog_decompose(m, level, max_n)
    count = 0
    for comp in rep.components:
        if comp.kind not in COMPONENT_KINDS:
            continue
        count += 1
        prob = growth_level_problem(m, comp)
        if prob is not None:
            return count, {"m": m, **prob}
    return count, None


@_timed
def catalog_suite(max_case_m: int = 4000, partition_max_m: int = 200,
                  agreement_max_m: int = 200, level: int = 10, max_n: int = 8) -> SuiteResult:
    """Case ladder, partition exactness and engine agreement for the catalog."""
    res = SuiteResult("catalog", {"max_case_m": max_case_m, "partition_max_m": partition_max_m,
                                  "agreement_max_m": agreement_max_m, "level": level,
                                  "max_n": max_n})
    ladder = res.check("exactly one case per even m")
    for m in range(4, max_case_m + 1, 2):
        hits = matching_cases(m)
        ok = len(hits) == 1 and hits[0] == catalog_case(m).key
        ladder.record(ok, m=m, matches=hits)
    part = res.check("catalog reports partition Z/2^K Z")
    growth = res.check("catalog components first strongly grow at their stated level")
    for m in range(2, partition_max_m + 1):
        p = partition_check(catalog_decompose(m, level, max_n))
        part.record(p.exact, m=m, overlaps=p.multiply_covered[:8], missing=p.uncovered[:8])
        if m % 2 == 0 and m > 2:
            n, prob = check_growth_levels(m, level, max_n)
            if prob is None:
                growth.cases += n
            else:
                growth.record(False, **prob)
    agree = res.check("engine and catalog induce the same partition")
    folded = []
    for m in range(2, agreement_max_m + 1):
        ag = compare_reports(catalog_decompose(m, level), decompose(FibMap(m), level))
        agree.record(ag.agree, m=m, only_catalog=ag.only_left[:2], only_engine=ag.only_right[:2],
                     level_mismatches=ag.level_mismatches[:2])
        if ag.agree and not ag.exact:
            folded.append(m)
    res.extra["agreement_needed_open_region_folding"] = folded
    return res


SUITES: dict[str, Callable[..., SuiteResult]] = {
    "periodicity": periodicity_suite,
    "valuation": valuation_suite,
    "derivatives": derivatives_suite,
    "oracles": oracles_suite,
    "gaussian": gaussian_suite,
    "addition-law": addition_law_suite,
    "digit-pair-parity": digit_pair_parity_suite,
    "lift-laws": lift_laws_suite,
    "catalog": catalog_suite,
}


def run_suite(name: str, **params) -> SuiteResult:
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")
    return SUITES[name](**params)
