"""Acceptance criteria, one test each.  Every test records a PASS/FAIL line."""
import time

from fibdyn.catalog import (case_m, catalog_case, catalog_decompose, g_sequence,
                            level10_cycle_table)
from fibdyn.engine import Behavior, analyze_cycle, cycle_through, cycles_at_level, decompose
from fibdyn.fibpoly import FibMap, fib_value
from fibdyn.report import BASIN, FIXED_POINT, PERIODIC_ORBIT, compare_reports, partition_check
from fibdyn.verify import (check_growth_levels, derivatives_suite, lift_laws_suite, oracles_suite,
                           periodicity_suite, valuation_suite)


def _suite_line(res) -> str:
    failed = [c.name for c in res.checks if not c.passed]
    cases = sum(c.cases for c in res.checks)
    return f"{cases} cases, {res.elapsed:.1f}s" + (f", failed: {failed}" if failed else "")


def test_ac01_periodicity(criterion):
    res = periodicity_suite(max_l=8, odd_bits=6, even_points=(2, 4, 6, 8, 12, 16))
    ok = res.passed and res.elapsed < 10
    assert criterion(1, "periods of F_m(s) mod 2^l for odd and even s", ok, _suite_line(res))


def test_ac02_valuation(criterion):
    res = valuation_suite(max_l=10, odd_bits=5)
    ok = res.passed and res.elapsed < 5
    assert criterion(2, "v2(F_{3*2^l}(s)) = l + 2", ok, _suite_line(res))


def test_ac03_derivatives(criterion):
    res = derivatives_suite(max_l=8, odd_bits=4)
    ok = res.passed and res.elapsed < 10
    assert criterion(3, "derivative congruences at 3*2^l, 3*2^l+1, 3*2^l+2", ok, _suite_line(res))


def test_ac04_oracles(criterion):
    res = oracles_suite(max_m=2000, x_count=32, k=16)
    ok = res.passed and res.elapsed < 60
    assert criterion(4, "doubling = recurrence = binomial sum, m <= 2000", ok, _suite_line(res))


# m -> (case key, level at which its components first strongly grow)
FINITE_CASES = {
    16: ("m=4+12q, q=1+2d", 4), 4: ("m=4+12q, q=4d", 5), 76: ("m=4+12q, q=6+8d", 6),
    124: ("m=4+12q, q=10+16d", 7), 220: ("m=4+12q, q=18+32d", 8), 412: ("m=4+12q, q=34+64d", 9),
    8: ("m=8+12q, q=2d", 4), 32: ("m=8+12q, q=2d", 4), 44: ("m=8+12q, q=3+4d", 5),
    20: ("m=8+12q, q=1+8d", 6), 68: ("m=8+12q, q=5+16d", 7), 164: ("m=8+12q, q=13+32d", 8),
    356: ("m=8+12q, q=29+64d", 9),
}


def test_ac05_finite_cases(criterion):
    start = time.perf_counter()
    problems = []
    for m, (key, level) in FINITE_CASES.items():
        info = catalog_case(m)
        if info.key != key or {t.level(0) for t in info.templates} != {level}:
            problems.append(f"m={m}: dispatch {info.key}")
            continue
        K = level + 2
        count, prob = check_growth_levels(m, K)
        if prob is not None or count == 0:
            problems.append(f"m={m}: {prob}")
        ag = compare_reports(catalog_decompose(m, K), decompose(FibMap(m), K))
        if not (ag.agree and ag.exact):
            problems.append(f"m={m}: partitions differ at K={K}")
    elapsed = time.perf_counter() - start
    ok = not problems and elapsed < 300
    assert criterion(5, "finite families grow at the stated level; partitions agree at K=level+2",
                     ok, f"{len(FINITE_CASES)} values of m, {elapsed:.1f}s {problems[:3]}")


INDEXED_CASES = {
    14: "m=2+12q, q=1+2d", 26: "m=2+12q, q=2+2d", 6: "m=6+12q, q=4d", 18: "m=6+12q, q=1+2d",
    30: "m=6+12q, q=2+4d", 10: "m=10+12q, q=2d", 22: "m=10+12q, q=1+4d", 34: "m=10+12q, q=2d",
    46: "m=10+12q, q=3+4d",
}


def test_ac06_indexed_families(criterion):
    start = time.perf_counter()
    problems = []
    for m, key in INDEXED_CASES.items():
        if catalog_case(m).key != key:
            problems.append(f"m={m}: dispatch")
        cat = catalog_decompose(m, 10, max_n=7)
        ag = compare_reports(cat, decompose(FibMap(m), 10))
        if not ag.agree:
            problems.append(f"m={m}: {ag.to_record()}")
        count, prob = check_growth_levels(m, 10, 7)
        if prob is not None or count == 0:
            problems.append(f"m={m}: {prob}")
        if m % 12 == 6:
            image = {fib_value(m, x, 4) for x in range(1, 16, 2)}
            if image != {8}:
                problems.append(f"m={m}: odd residues map to {sorted(image)} mod 16")
    elapsed = time.perf_counter() - start
    ok = not problems and elapsed < 300
    assert criterion(6, "indexed families and basins agree on Z/2^10 Z with max_n = 7", ok,
                     f"{len(INDEXED_CASES)} values of m, {elapsed:.1f}s {problems[:2]}")


def test_ac07_odd_and_multiple_of_twelve(criterion):
    start = time.perf_counter()
    problems = []
    for m in (3, 5, 7, 9, 11, 13, 12, 24):
        rep = decompose(FibMap(m), 10)
        if m % 2:
            want_len = 2 if m % 3 == 0 else 1
            want_kind = PERIODIC_ORBIT if want_len == 2 else FIXED_POINT
        else:
            want_len, want_kind = 1, FIXED_POINT
        per = rep.periodic
        if len(per) != 1 or per[0].kind != want_kind or per[0].k != want_len:
            problems.append(f"m={m}: periodic {[c.centers for c in per]}")
        if m % 2 == 0 and per and per[0].centers != [0]:
            problems.append(f"m={m}: fixed point is not 0")
        if rep.components or rep.unresolved or any(b.kind != BASIN for b in rep.basins):
            problems.append(f"m={m}: extra pieces")
        if not partition_check(rep).exact:
            problems.append(f"m={m}: not a partition")
        if not compare_reports(catalog_decompose(m, 10), rep).exact:
            problems.append(f"m={m}: catalog differs")
    elapsed = time.perf_counter() - start
    ok = not problems and elapsed < 60
    assert criterion(7, "odd m: one attracting orbit plus basin; m = 12, 24: fixed 0 plus basin",
                     ok, f"{elapsed:.1f}s {problems[:3]}")


def test_ac08_level10_table(criterion):
    start = time.perf_counter()
    problems = []
    for case, d in ((4, 0), (4, 1), (8, 0)):
        m = case_m(case, d)
        f = FibMap(m)
        table = level10_cycle_table(case, d)
        for c, beh, label in table:
            if cycle_through(f, c.elements[0], 10, 2) != c:
                problems.append(f"m={m}: {label} is not a cycle")
            elif analyze_cycle(f, c).behavior is not beh:
                problems.append(f"m={m}: {label} behaves differently")
        odd_two_cycles = {c for c in cycles_at_level(f, 10) if c.length == 2 and c.elements[0] % 2}
        if odd_two_cycles != {c for c, _, _ in table}:
            problems.append(f"m={m}: the templates do not list every odd 2-cycle")
    elapsed = time.perf_counter() - start
    ok = not problems and elapsed < 120
    assert criterion(8, "level-10 behaviours for m = 28, 796, 740, k = 0..63", ok,
                     f"768 cycles, {elapsed:.1f}s {problems[:3]}")


def test_ac09_conjecture_experiment(criterion):
    start = time.perf_counter()
    problems = []
    for case in (4, 8):
        seq = g_sequence(case, 0, 16)
        f = FibMap(seq.m)
        if [l for l, _, _ in seq.entries] != list(range(10, 17)):
            problems.append(f"case {case}: levels {seq.entries}")
        for l, g, certified in seq.entries:
            c = cycle_through(f, g, l, 2)
            grows = c is not None and c.length == 2 and \
                analyze_cycle(f, c).behavior is Behavior.STRONGLY_GROWS
            if not (certified and grows):
                problems.append(f"case {case}: level {l} not certified")
    elapsed = time.perf_counter() - start
    ok = not problems and elapsed < 600
    assert criterion(9, "g_l strongly grows at every level 10..16 for both classes, d = 0", ok,
                     f"{elapsed:.1f}s {problems[:3]}")


def test_ac10_lift_laws(criterion):
    res = lift_laws_suite(ms=(8, 14, 16, 28), level=11)
    laws = set()
    for rec in res.extra.values():
        laws |= set(rec["checked"])
    exercised = {"weak-growth-then-strong-split", "strong-split-resolves",
                 "weak-split-one-same-one-weak-growth"} <= laws
    ok = res.passed and exercised and res.elapsed < 120
    assert criterion(10, "lifting laws for m = 8, 14, 16, 28 up to level 11", ok,
                     _suite_line(res) + f", laws exercised: {sorted(laws)}")
