"""Fibonacci polynomials F_m(x) and their derivatives modulo 2^K.

Three independent evaluation routes are provided:

* ``fib_eval_naive``: the O(m) three-term recurrences for F and F', F'', F'''.
* ``fib_eval_fast``: O(log m) doubling carried out in the truncated Taylor
  ring (Z/2^K)[e]/(e^4), i.e. evaluating at x + e.  Multiplication in that
  ring is the Leibniz rule, so the derivative components come from
  differentiating the doubling identities.
* ``fib_eval_sum``: the closed binomial sum (value only).
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, Iterator, Sequence

import numpy as np

from .padic import Residue


@dataclass(frozen=True)
class FibJet:
    m: int
    value: Residue
    d1: Residue
    d2: Residue
    d3: Residue

    def as_tuple(self) -> tuple[int, int, int, int]:
        return (self.value.value, self.d1.value, self.d2.value, self.d3.value)


def _as_residue(x, precision: int | None) -> Residue:
    if isinstance(x, Residue):
        return x if precision is None else x.truncate(precision)
    if precision is None:
        raise ValueError("an integer argument needs an explicit precision")
    return Residue(x, precision)


def _jet(m: int, k: int, parts: Sequence[int]) -> FibJet:
    return FibJet(m, *(Residue(p, k) for p in parts))


# -- naive recurrence ---------------------------------------------------------

def fib_naive_sequence(count: int, x: int, k: int) -> Iterator[tuple[int, int, int, int]]:
    """Yield (F_m, F'_m, F''_m, F'''_m)(x) mod 2^k for m = 0 .. count-1."""
    mask = (1 << k) - 1
    prev = (0, 0, 0, 0)
    cur = (1 & mask, 0, 0, 0)
    for m in range(count):
        yield prev
        f1, a1, b1, c1 = cur
        f0, a0, b0, c0 = prev
        nxt = ((x * f1 + f0) & mask,
               (f1 + x * a1 + a0) & mask,
               (2 * a1 + x * b1 + b0) & mask,
               (3 * b1 + x * c1 + c0) & mask)
        prev, cur = cur, nxt


def fib_eval_naive(m: int, x, precision: int | None = None) -> FibJet:
    if m < 0:
        raise ValueError("index must be nonnegative")
    r = _as_residue(x, precision)
    last = None
    for last in fib_naive_sequence(m + 1, r.value, r.precision):
        pass
    return _jet(m, r.precision, last)


# -- Taylor-jet doubling --------------------------------------------------------
#
# A jet is a list of Taylor coefficients [c0, c1, ..., c_order] of a function
# of x + e.  Entries are Python ints or numpy uint64 arrays; both wrap
# correctly once masked, since 2^k divides 2^64 for k <= 64.

def _jmul(a, b, order, mask):
    if order == 0:
        return [(a[0] * b[0]) & mask]
    if order == 1:
        return [(a[0] * b[0]) & mask, (a[0] * b[1] + a[1] * b[0]) & mask]
    if order == 3:
        a0, a1, a2, a3 = a
        b0, b1, b2, b3 = b
        return [(a0 * b0) & mask,
                (a0 * b1 + a1 * b0) & mask,
                (a0 * b2 + a1 * b1 + a2 * b0) & mask,
                (a0 * b3 + a1 * b2 + a2 * b1 + a3 * b0) & mask]
    return [sum(a[i] * b[j - i] for i in range(j + 1)) & mask for j in range(order + 1)]


def _fib_taylor(m: int, x, mask, order: int):
    zero = x * 0
    X = [x, zero + 1, zero, zero][: order + 1]   # the jet of x + e
    A = [zero] * (order + 1)            # F_n
    B = [zero + 1] + [zero] * order     # F_{n+1}
    for bit in bin(m)[2:] if m else "":
        XA = _jmul(X, A, order, mask)
        prev = [(b - xa) & mask for b, xa in zip(B, XA)]           # F_{n-1}
        even = _jmul(A, [(b + p) & mask for b, p in zip(B, prev)], order, mask)
        odd = [(u + v) & mask for u, v in zip(_jmul(B, B, order, mask), _jmul(A, A, order, mask))]
        if bit == "1":
            nxt = [(u + v) & mask for u, v in zip(_jmul(X, odd, order, mask), even)]
            A, B = odd, nxt
        else:
            A, B = even, odd
    return A


_FACT = (1, 1, 2, 6)


def fib_eval_fast(m: int, x, precision: int | None = None) -> FibJet:
    if m < 0:
        raise ValueError("index must be nonnegative")
    r = _as_residue(x, precision)
    mask = r.modulus - 1
    coeffs = _fib_taylor(m, r.value, mask, 3)
    return _jet(m, r.precision, [(c * f) & mask for c, f in zip(coeffs, _FACT)])


def fib_value(m: int, x: int, k: int) -> int:
    """F_m(x) mod 2^k as a plain integer."""
    return _fib_taylor(m, x, (1 << k) - 1, 0)[0]


def fib_value_deriv(m: int, x: int, k: int) -> tuple[int, int]:
    """(F_m(x), F'_m(x)) mod 2^k."""
    v, d = _fib_taylor(m, x, (1 << k) - 1, 1)
    return v, d


def fib_values_array(m: int, xs: np.ndarray, k: int, order: int = 0) -> list[np.ndarray]:
    """Vectorized Taylor coefficients of F_m at every entry of ``xs`` (k <= 64)."""
    if k > 64:
        raise ValueError("array evaluation is limited to 64 bits")
    xs = np.asarray(xs, dtype=np.uint64)
    mask = np.uint64((1 << k) - 1)
    out = _fib_taylor(m, xs, mask, order)
    return [np.broadcast_to(c, xs.shape).astype(np.uint64) & mask for c in out]


# -- binomial sum ---------------------------------------------------------------

@lru_cache(maxsize=4096)
def fib_sum_terms(m: int) -> tuple[tuple[int, int], ...]:
    """(coefficient, exponent) pairs of F_m from the closed binomial sum."""
    if m == 0:
        return ()
    h = (m - 1) // 2
    base = m - 1 - 2 * h
    # walk j downward from h, where the coefficient is C(m-1, 0) = 1, using
    # C(n-1, r+1) = C(n, r) (n-r)(n-r-1) / (n (r+1)), which divides exactly
    coeffs = [1]
    n, r = m - 1, 0
    for _ in range(h):
        coeffs.append(coeffs[-1] * (n - r) * (n - r - 1) // (n * (r + 1)))
        n, r = n - 1, r + 1
    coeffs.reverse()
    return tuple((c, base + 2 * j) for j, c in enumerate(coeffs))


def fib_eval_sum(m: int, x, precision: int | None = None) -> Residue:
    if m < 0:
        raise ValueError("index must be nonnegative")
    r = _as_residue(x, precision)
    mod = r.modulus
    total = sum(c * pow(r.value, e, mod) for c, e in fib_sum_terms(m))
    return Residue(total, r.precision)


def power_table(xs: Sequence[int], max_exponent: int, k: int) -> np.ndarray:
    """Rows x^0 .. x^max_exponent mod 2^k (k <= 64) for every entry of ``xs``."""
    xs = np.asarray(xs, dtype=np.uint64)
    mask = np.uint64((1 << k) - 1)
    powers = np.ones((max_exponent + 1, xs.size), dtype=np.uint64)
    for e in range(1, max_exponent + 1):
        powers[e] = (powers[e - 1] * xs) & mask
    return powers


def fib_sum_values_array(m: int, xs: Sequence[int], k: int,
                         powers: np.ndarray | None = None) -> np.ndarray:
    """Binomial-sum values of F_m at many points at once (k <= 64).

    ``powers`` may be a precomputed ``power_table(xs, e, k)`` with e >= m - 1.
    """
    mask = np.uint64((1 << k) - 1)
    terms = fib_sum_terms(m)
    xs = np.asarray(xs, dtype=np.uint64)
    if not terms:
        return np.zeros(xs.shape, dtype=np.uint64)
    coeffs = np.array([c & ((1 << k) - 1) for c, _ in terms], dtype=np.uint64)
    exps = np.array([e for _, e in terms])
    if powers is None:
        powers = power_table(xs, int(exps.max()), k)
    return (powers[exps] * coeffs[:, None]).sum(axis=0, dtype=np.uint64) & mask


# -- Gaussian integers ----------------------------------------------------------

@dataclass(frozen=True)
class GaussianValue:
    re: int
    im: int


# Published first twelve values of F_m(i)/i, as (re, im).
_GAUSSIAN_REFERENCE = ((0, 0), (0, -1), (1, 0), (0, 0), (1, 0), (0, 1),
                       (0, 0), (0, 1), (-1, 0), (0, 0), (-1, 0), (0, -1))


def _derive_gaussian_table(steps: int = 24) -> tuple[tuple[int, int], ...]:
    # run F_m = i F_{m-1} + F_{m-2} over Z[i], then divide by i: (a+bi)/i = b - ai
    seq = []
    prev, cur = (0, 0), (1, 0)
    for _ in range(steps):
        seq.append((prev[1], -prev[0]))
        nxt = (-cur[1] + prev[0], cur[0] + prev[1])
        prev, cur = cur, nxt
    if seq[12:24] != seq[:12]:
        raise AssertionError("F_m(i)/i is not 12-periodic")
    return tuple(seq[:12])


GAUSSIAN_TABLE = _derive_gaussian_table()
if GAUSSIAN_TABLE != _GAUSSIAN_REFERENCE:  # pragma: no cover - self check
    raise AssertionError("derived Gaussian table disagrees with the reference values")


def fib_gaussian(m: int) -> GaussianValue:
    if m < 0:
        raise ValueError("index must be nonnegative")
    return GaussianValue(*GAUSSIAN_TABLE[m % 12])


# -- periods --------------------------------------------------------------------

def period_of(seq: Iterable[int] | Callable[[], Iterable[int]], modulus_exponent: int,
              max_probe: int, offset: int = 0) -> int | None:
    """Least period d <= max_probe of a sequence read mod 2^l, or None.

    The sequence is read for ``offset + 3 * max_probe`` terms, so every
    candidate is checked over at least two full windows past ``offset``.
    """
    if callable(seq):
        seq = seq()
    mask = (1 << modulus_exponent) - 1
    n = offset + 3 * max_probe
    vals = []
    for v in seq:
        vals.append(v & mask)
        if len(vals) >= n:
            break
    vals = vals[offset:]
    for d in range(1, max_probe + 1):
        if len(vals) < 3 * d:
            break
        if vals[d:] == vals[:-d]:
            return d
    return None


class FibMap:
    """F_m as a map on Z/2^K Z, in the form the cycle engine consumes."""

    def __init__(self, m: int):
        if m < 0:
            raise ValueError("index must be nonnegative")
        self.m = m

    def __repr__(self) -> str:
        return f"FibMap({self.m})"

    def __reduce__(self):
        return (FibMap, (self.m,))

    def value(self, x: int, k: int) -> int:
        return fib_value(self.m, x, k)

    def jet(self, x: int, k: int) -> tuple[int, int]:
        return fib_value_deriv(self.m, x, k)

    def values_array(self, xs: np.ndarray, k: int) -> np.ndarray:
        return fib_values_array(self.m, xs, k)[0]

    def jets_array(self, xs: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
        v, d = fib_values_array(self.m, xs, k, order=1)
        return v, d
