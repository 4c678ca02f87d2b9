from math import comb

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fibdyn.fibpoly import (GAUSSIAN_TABLE, FibMap, GaussianValue, fib_eval_fast, fib_eval_naive,
                            fib_eval_sum, fib_gaussian, fib_naive_sequence, fib_sum_terms,
                            fib_sum_values_array, fib_value, fib_value_deriv, fib_values_array,
                            period_of, power_table)
from fibdyn.padic import Residue

small_m = st.integers(min_value=0, max_value=400)
xs = st.integers(min_value=-(1 << 40), max_value=1 << 40)
precisions = st.integers(min_value=1, max_value=90)


def test_first_polynomials():
    # F_2 = x, F_3 = 1 + x^2, F_4 = 2x + x^3, F_5 = 1 + 3x^2 + x^4, F_6 = 3x + 4x^3 + x^5
    expected = {2: lambda x: x, 3: lambda x: 1 + x * x, 4: lambda x: 2 * x + x ** 3,
                5: lambda x: 1 + 3 * x * x + x ** 4, 6: lambda x: 3 * x + 4 * x ** 3 + x ** 5}
    for m, poly in expected.items():
        for x in range(-5, 20):
            assert fib_value(m, x, 40) == poly(x) % (1 << 40)


def test_derivative_closed_forms():
    # F'_3 = 2x, F'_4 = 2 + 3x^2, F''_6 = 24x + 20x^3, F'''_8 = 60 + 360x^2 + 210x^4
    for x in range(1, 30, 2):
        assert fib_eval_fast(3, x, 30).d1.value == 2 * x
        assert fib_eval_fast(4, x, 30).d1.value == 2 + 3 * x * x
        assert fib_eval_fast(6, x, 30).d2.value == 24 * x + 20 * x ** 3
        assert fib_eval_fast(8, x, 40).d3.value == 60 + 360 * x ** 2 + 210 * x ** 4


@given(small_m, xs, precisions)
def test_three_evaluators_agree(m, x, k):
    fast = fib_eval_fast(m, x, k)
    naive = fib_eval_naive(m, Residue(x, k))
    assert fast == naive
    assert fib_eval_sum(m, x, k) == fast.value


@given(small_m, xs, precisions)
def test_value_helpers_match_jets(m, x, k):
    jet = fib_eval_fast(m, x, k).as_tuple()
    assert fib_value(m, x, k) == jet[0]
    assert fib_value_deriv(m, x, k) == jet[:2]


@given(st.integers(min_value=0, max_value=300), st.integers(min_value=1, max_value=64))
def test_array_evaluation_matches_scalar(m, k):
    pts = np.array([0, 1, 2, 3, 5, 255, (1 << 63) + 7], dtype=np.uint64)
    coeffs = fib_values_array(m, pts, k, order=3)
    for i, x in enumerate(pts.tolist()):
        jet = fib_eval_fast(m, x, k).as_tuple()
        got = [int(c[i]) * f % (1 << k) for c, f in zip(coeffs, (1, 1, 2, 6))]
        assert got == list(jet)
    assert fib_sum_values_array(m, pts, k).tolist() == [fib_value(m, x, k) for x in pts.tolist()]
    table = power_table(pts, max(m - 1, 0), k)
    assert fib_sum_values_array(m, pts, k, table).tolist() == [fib_value(m, x, k) for x in pts.tolist()]


def test_array_evaluation_is_limited_to_64_bits():
    with pytest.raises(ValueError):
        fib_values_array(5, np.arange(4), 65)


@pytest.mark.parametrize("m", [1, 2, 3, 10, 11, 57, 400, 401])
def test_sum_coefficients_are_binomials(m):
    h = (m - 1) // 2
    want = tuple((comb(m - 1 - h + j, h - j), m - 1 - 2 * h + 2 * j) for j in range(h + 1))
    assert fib_sum_terms(m) == want
    assert fib_sum_terms(0) == ()


@given(st.integers(min_value=1, max_value=80), st.integers(min_value=1, max_value=80), xs)
def test_addition_law(m, n, x):
    k = 64
    F = lambda i: fib_value(i, x, k)
    assert F(m + n) == (F(m + 1) * F(n) + F(m) * F(n - 1)) % (1 << k)


def test_negative_index_rejected():
    for fn in (fib_eval_fast, fib_eval_naive):
        with pytest.raises(ValueError):
            fn(-1, 3, 8)
    with pytest.raises(ValueError):
        fib_eval_sum(-1, 3, 8)
    with pytest.raises(ValueError):
        FibMap(-2)


def test_integer_argument_needs_precision():
    with pytest.raises(ValueError):
        fib_eval_fast(5, 3)


def test_gaussian_table():
    # F_m(i)/i for m = 0..11: 0, -i, 1, 0, 1, i, 0, i, -1, 0, -1, -i
    assert [complex(v.re, v.im) for v in map(fib_gaussian, range(12))] == \
        [0, -1j, 1, 0, 1, 1j, 0, 1j, -1, 0, -1, -1j]
    assert fib_gaussian(12 * 7 + 5) == GaussianValue(0, 1)
    assert len(GAUSSIAN_TABLE) == 12


def test_period_of_synthetic_sequences():
    assert period_of([1, 2, 3] * 20, 8, 10) == 3
    assert period_of(lambda: iter([5] * 30), 8, 10) == 1
    assert period_of(list(range(100)), 8, 10) is None
    # a transient prefix is skipped by offset
    assert period_of([9, 9, 9] + [0, 1] * 30, 8, 10, offset=3) == 2


def test_naive_sequence_starts_at_zero_one():
    seq = list(fib_naive_sequence(4, 3, 10))
    assert seq[0] == (0, 0, 0, 0) and seq[1] == (1, 0, 0, 0) and seq[2] == (3, 1, 0, 0)


def test_fibmap_pickles():
    import pickle
    f = pickle.loads(pickle.dumps(FibMap(28)))
    assert f.m == 28 and f.value(3, 10) == fib_value(28, 3, 10)
    v, d = f.jets_array(np.arange(8, dtype=np.uint64), 10)
    assert [(int(a), int(b)) for a, b in zip(v, d)] == [f.jet(x, 10) for x in range(8)]
