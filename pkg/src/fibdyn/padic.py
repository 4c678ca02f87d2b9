"""Truncated 2-adic arithmetic: residues mod 2^K, valuations and balls.

Everything here is immutable. Python integers back the residues, so the
precision K is unbounded.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import numpy as np


class PrecisionError(ValueError):
    """An operation needed more 2-adic digits than were available."""


def _check_precision(k: int) -> None:
    if not isinstance(k, int) or k < 1:
        raise ValueError(f"precision must be a positive integer, got {k!r}")


@dataclass(frozen=True)
class Residue:
    """An element of Z/2^K Z.

    The value is normalized into [0, 2^K) on construction, so negative
    inputs such as -1 - 16k land on their canonical representative.
    """

    value: int
    precision: int

    def __post_init__(self) -> None:
        _check_precision(self.precision)
        object.__setattr__(self, "value", self.value % (1 << self.precision))

    @property
    def modulus(self) -> int:
        return 1 << self.precision

    def truncate(self, precision: int) -> Residue:
        if precision > self.precision:
            raise PrecisionError(f"cannot raise precision {self.precision} to {precision}")
        return Residue(self.value, precision)

    def _coerce(self, other) -> tuple[int, int]:
        if isinstance(other, Residue):
            return other.value, min(self.precision, other.precision)
        if isinstance(other, int):
            return other, self.precision
        return NotImplemented  # type: ignore[return-value]

    def __add__(self, other):
        v = self._coerce(other)
        if v is NotImplemented:
            return NotImplemented
        return Residue(self.value + v[0], v[1])

    __radd__ = __add__

    def __sub__(self, other):
        v = self._coerce(other)
        if v is NotImplemented:
            return NotImplemented
        return Residue(self.value - v[0], v[1])

    def __rsub__(self, other):
        v = self._coerce(other)
        if v is NotImplemented:
            return NotImplemented
        return Residue(v[0] - self.value, v[1])

    def __mul__(self, other):
        v = self._coerce(other)
        if v is NotImplemented:
            return NotImplemented
        return Residue(self.value * v[0], v[1])

    __rmul__ = __mul__

    def __neg__(self) -> Residue:
        return Residue(-self.value, self.precision)

    def __pow__(self, e: int) -> Residue:
        if e < 0:
            raise ValueError("negative exponents are not supported")
        return Residue(pow(self.value, e, self.modulus), self.precision)

    def __int__(self) -> int:
        return self.value

    def __repr__(self) -> str:
        return f"Residue({self.value} mod 2^{self.precision})"


def add(x: Residue, y: Residue) -> Residue:
    return x + y


def sub(x: Residue, y: Residue) -> Residue:
    return x - y


def mul(x: Residue, y: Residue) -> Residue:
    return x * y


def neg(x: Residue) -> Residue:
    return -x


def power(x: Residue, e: int) -> Residue:
    return x ** e


@dataclass(frozen=True)
class Valuation:
    """2-adic valuation of a truncated residue.

    ``exact`` is False when the residue was zero, in which case ``order``
    is the precision and the true valuation is only known to be at least
    that large.
    """

    order: int
    exact: bool = True

    def __str__(self) -> str:
        return str(self.order) if self.exact else f">={self.order}"


def nu2_int(n: int) -> int:
    """Valuation of a nonzero integer."""
    if n == 0:
        raise ValueError("valuation of 0 is infinite")
    return (n & -n).bit_length() - 1


def nu2(x: Residue) -> Valuation:
    if x.value == 0:
        return Valuation(x.precision, exact=False)
    return Valuation(nu2_int(x.value))


@dataclass(frozen=True, order=True)
class Ball:
    """The clopen set center + 2^level Z_2, with center reduced mod 2^level."""

    level: int
    center: int

    def __init__(self, center: int, level: int):
        _check_precision(level)
        object.__setattr__(self, "level", level)
        object.__setattr__(self, "center", center % (1 << level))

    def __repr__(self) -> str:
        return f"Ball({self.center} + 2^{self.level}Z_2)"

    def __contains__(self, x: Residue) -> bool:
        return ball_membership(x, self)

    def children(self) -> tuple[Ball, Ball]:
        return (Ball(self.center, self.level + 1),
                Ball(self.center + (1 << self.level), self.level + 1))

    def residues(self, k: int) -> range:
        """Residues mod 2^k lying in the ball (requires k >= level)."""
        if k < self.level:
            raise PrecisionError(f"ball at level {self.level} is not a union of classes mod 2^{k}")
        return range(self.center, 1 << k, 1 << self.level)

    def contains_ball(self, other: Ball) -> bool:
        return other.level >= self.level and other.center % (1 << self.level) == self.center


def ball_membership(x: Residue, ball: Ball) -> bool:
    if x.precision < ball.level:
        raise PrecisionError(
            f"residue known mod 2^{x.precision} cannot be tested against a level-{ball.level} ball")
    return x.value % (1 << ball.level) == ball.center


@dataclass
class PartitionReport:
    level: int
    disjoint: bool
    covers: bool
    multiply_covered: list[int] = field(default_factory=list)
    uncovered: list[int] = field(default_factory=list)
    outside_target: list[int] = field(default_factory=list)

    @property
    def exact(self) -> bool:
        return self.disjoint and self.covers and not self.outside_target


def coverage_counts(balls: Iterable[Ball], k: int) -> np.ndarray:
    """How many of the balls contain each residue mod 2^k."""
    counts = np.zeros(1 << k, dtype=np.int32)
    for b in balls:
        if b.level > k:
            raise PrecisionError(f"{b!r} is finer than the truncation level {k}")
        counts[b.center::1 << b.level] += 1
    return counts


def ball_partition_check(balls: Iterable[Ball], k: int,
                         target: Iterable[int] | None = None,
                         max_listed: int = 64) -> PartitionReport:
    """Check that ``balls`` partition ``target`` (default: all of Z/2^k Z).

    Residues are listed up to ``max_listed`` per anomaly kind.
    """
    counts = coverage_counts(balls, k)
    if target is None:
        wanted = np.ones(1 << k, dtype=bool)
    else:
        wanted = np.zeros(1 << k, dtype=bool)
        wanted[np.fromiter((t % (1 << k) for t in target), dtype=np.int64)] = True
    multi = np.flatnonzero(counts > 1)
    missing = np.flatnonzero(wanted & (counts == 0))
    extra = np.flatnonzero(~wanted & (counts > 0))
    return PartitionReport(
        level=k,
        disjoint=multi.size == 0,
        covers=missing.size == 0,
        multiply_covered=[int(r) for r in multi[:max_listed]],
        uncovered=[int(r) for r in missing[:max_listed]],
        outside_target=[int(r) for r in extra[:max_listed]],
    )
