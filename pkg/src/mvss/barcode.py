"""Intervals, barcode bases and barcode vectors over a prime field.

A barcode vector is a linear combination of basis generators truncated by a
step threshold. Coefficients on generators that are already dead at the
threshold are dropped, which keeps every stored vector natural.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .errors import UsageError

INF = math.inf


def is_prime(p: int) -> bool:
    if p < 2:
        return False
    i = 2
    while i * i <= p:
        if p % i == 0:
            return False
        i += 1
    return True


@dataclass(frozen=True, order=True)
class Interval:
    birth: float
    death: float = INF

    def __post_init__(self):
        if not math.isfinite(self.birth):
            raise UsageError(f"birth must be finite, got {self.birth}")
        if self.death < self.birth:
            raise UsageError(f"death {self.death} < birth {self.birth}")

    @property
    def is_empty(self) -> bool:
        return self.birth == self.death

    def contains(self, r: float) -> bool:
        return self.birth <= r < self.death

    def __repr__(self) -> str:
        return f"[{self.birth:g},{self.death:g})"


ZERO_BAR = Interval(0.0, 0.0)


def basis_key(bar: Interval, index: int):
    """Sort key of the generator order: birth up, then death down, then index."""
    return (bar.birth, -bar.death, index)


class BarcodeBasis:
    """Ordered list of bars naming the generators of a persistence module.

    ``order_index[i]`` is the insertion position of the generator stored at i.
    """

    __slots__ = ("bars", "order_index")

    def __init__(self, bars: Sequence[Interval], order_index: Sequence[int] | None = None):
        bars = list(bars)
        if order_index is None:
            order_index = list(range(len(bars)))
        order_index = list(order_index)
        for i in range(1, len(bars)):
            if basis_key(bars[i - 1], order_index[i - 1]) > basis_key(bars[i], order_index[i]):
                raise UsageError("bars are not in basis order; use BarcodeBasis.sort")
        self.bars = bars
        self.order_index = order_index

    @classmethod
    def sort(cls, bars: Iterable[Interval]) -> tuple["BarcodeBasis", list[int]]:
        """Sort bars into basis order. Returns the basis and, for each sorted
        position, the position of that bar in the input."""
        bars = list(bars)
        perm = sorted(range(len(bars)), key=lambda i: basis_key(bars[i], i))
        return cls([bars[i] for i in perm], perm), perm

    def __len__(self) -> int:
        return len(self.bars)

    def __getitem__(self, i: int) -> Interval:
        return self.bars[i]

    def __iter__(self):
        return iter(self.bars)

    def __eq__(self, other) -> bool:
        return isinstance(other, BarcodeBasis) and self.bars == other.bars

    def __repr__(self) -> str:
        return f"BarcodeBasis({self.bars!r})"


def pointwise_basis(B: BarcodeBasis | Sequence[Interval], r: float) -> list[int]:
    """Indices i with birth_i <= r < death_i, in basis order."""
    return [i for i, bar in enumerate(B) if bar.birth <= r < bar.death]


def critical_values(*bases: Iterable[Interval]) -> list[float]:
    vals = set()
    for B in bases:
        for bar in B:
            vals.add(bar.birth)
            vals.add(bar.death)
    return sorted(vals)


@dataclass(frozen=True)
class BarcodeVector:
    """Sparse combination of generators of a fixed basis, with a step threshold.

    ``basis`` is an optional tag naming the basis the indices refer to.
    """

    coeffs: Mapping[int, int]
    step: float
    assoc: Interval = field(default=ZERO_BAR)
    basis: object = field(default=None, compare=False)

    @property
    def is_zero(self) -> bool:
        return not self.coeffs

    def evaluate(self, bars: Sequence[Interval], r: float) -> dict[int, int]:
        """Coordinates of the vector at parameter r (empty below the step)."""
        if r < self.assoc.birth or r >= self.assoc.death:
            return {}
        return {j: c for j, c in self.coeffs.items() if bars[j].death > r}


def make_vector(coeffs: Mapping[int, int], step: float, bars: Sequence[Interval], p: int,
                basis: object = None) -> BarcodeVector:
    """Normalise raw coefficients into a BarcodeVector (drops zeros and dead terms)."""
    out = {}
    for j, c in coeffs.items():
        c %= p
        if c:
            out[j] = c
    if not out:
        return BarcodeVector({}, step, ZERO_BAR, basis)
    birth = max(step, max(bars[j].birth for j in out))
    out = {j: c for j, c in out.items() if bars[j].death > birth}
    if not out:
        return BarcodeVector({}, birth, ZERO_BAR, basis)
    death = max(bars[j].death for j in out)
    return BarcodeVector(dict(sorted(out.items())), birth, Interval(birth, death), basis)


def generator(j: int, bars: Sequence[Interval], basis: object = None) -> BarcodeVector:
    return BarcodeVector({j: 1}, bars[j].birth, bars[j], basis)


def bar_sum(terms: Iterable[tuple[int, BarcodeVector | int]], bars: BarcodeBasis | Sequence[Interval],
            p: int) -> BarcodeVector:
    """The truncated sum of scaled barcode vectors.

    Terms are (scalar, vector) where the vector is a BarcodeVector or a plain
    generator index. The step of the result is the largest birth among terms
    with nonzero scalar and nonzero vector. Vectors tagged with different
    bases raise UsageError.
    """
    acc: dict[int, int] = {}
    step = -INF
    seen = False
    tag = None
    for c, v in terms:
        c %= p
        if isinstance(v, int):
            v = generator(v, bars)
        elif not isinstance(v, BarcodeVector):
            raise UsageError("bar_sum terms must be BarcodeVector or generator index")
        if v.basis is not None:
            if tag is not None and v.basis != tag:
                raise UsageError("bar_sum over vectors of different bases")
            tag = v.basis
        if c == 0:
            continue
        # a zero vector still carries its threshold, which keeps the sum associative
        seen = True
        step = max(step, v.step if v.is_zero else v.assoc.birth)
        for j, x in v.coeffs.items():
            if j >= len(bars):
                raise UsageError("term refers to a generator outside the basis")
            acc[j] = (acc.get(j, 0) + c * x) % p
    if not seen:
        return BarcodeVector({}, -INF, ZERO_BAR, tag)
    return make_vector(acc, step, bars, p, tag)


def apply_step(s: float, v: BarcodeVector, bars: Sequence[Interval], p: int) -> BarcodeVector:
    """The step operator 1_s: raise the threshold of v to at least s."""
    if v.is_zero:
        return v if s <= v.step else BarcodeVector({}, s, ZERO_BAR, v.basis)
    if s <= v.assoc.birth:
        return v
    return make_vector(v.coeffs, s, bars, p, v.basis)
