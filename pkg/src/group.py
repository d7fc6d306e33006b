"""
Finite abelian groups Z_{n_1} x ... x Z_{n_k}, their duals and the character pairing.

Points and characters are stored as residue tuples. The pairing
<x, gamma> = exp(2 pi i sum_j x_j gamma_j / n_j) is accumulated as an exact
integer phase over lcm(n_1, ..., n_k) before one complex exponential.
"""

import cmath
import itertools
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, List, Sequence, Tuple, TypeVar, Union

import numpy as np

from .errors import StructuralError


@dataclass(frozen=True, order=True)
class _Residues:
    coords: Tuple[int, ...]

    def __iter__(self):
        return iter(self.coords)

    def __len__(self) -> int:
        return len(self.coords)

    def __repr__(self) -> str:
        return f"{type(self).__name__}{self.coords}"


class GroupElement(_Residues):
    """A point x of the group."""


class DualCharacter(_Residues):
    """A character gamma of the group, written in the same coordinates."""


Point = TypeVar("Point", GroupElement, DualCharacter)
Coords = Union[int, Sequence[int]]


@dataclass(frozen=True)
class FiniteAbelianGroup:
    """Z_{n_1} x ... x Z_{n_k}. The dual group has the same moduli."""

    moduli: Tuple[int, ...]

    def __post_init__(self):
        moduli = tuple(int(n) for n in self.moduli)
        if not moduli:
            raise StructuralError("a group needs at least one modulus")
        if any(n < 1 for n in moduli):
            raise StructuralError(f"every modulus must be >= 1, got {list(moduli)}")
        object.__setattr__(self, "moduli", moduli)

    @classmethod
    def cyclic(cls, n: int) -> "FiniteAbelianGroup":
        return cls((n,))

    @property
    def order(self) -> int:
        return math.prod(self.moduli)

    @property
    def rank(self) -> int:
        return len(self.moduli)

    @property
    def is_cyclic(self) -> bool:
        return self.rank == 1

    def dual(self) -> "FiniteAbelianGroup":
        return self

    @cached_property
    def _phase_denominator(self) -> int:
        return math.lcm(*self.moduli)

    @cached_property
    def _phase_weights(self) -> Tuple[int, ...]:
        return tuple(self._phase_denominator // n for n in self.moduli)

    # construction and validation

    def _reduce(self, coords: Coords) -> Tuple[int, ...]:
        if isinstance(coords, (int, np.integer)):
            coords = (int(coords),)
        coords = tuple(int(c) for c in coords)
        if len(coords) != self.rank:
            raise StructuralError(
                f"expected {self.rank} coordinates for moduli {list(self.moduli)}, got {list(coords)}"
            )
        return tuple(c % n for c, n in zip(coords, self.moduli))

    def element(self, coords: Coords) -> GroupElement:
        return GroupElement(self._reduce(coords))

    def character(self, coords: Coords) -> DualCharacter:
        return DualCharacter(self._reduce(coords))

    def zero(self) -> GroupElement:
        return GroupElement((0,) * self.rank)

    def trivial_character(self) -> DualCharacter:
        return DualCharacter((0,) * self.rank)

    def contains(self, point: _Residues) -> bool:
        return (
            isinstance(point, _Residues)
            and len(point.coords) == self.rank
            and all(0 <= c < n for c, n in zip(point.coords, self.moduli))
        )

    def check(self, point: _Residues) -> None:
        if not self.contains(point):
            raise StructuralError(f"{point!r} is not a point of Z{list(self.moduli)}")

    # enumeration

    @cached_property
    def _lexicographic(self) -> Tuple[Tuple[int, ...], ...]:
        return tuple(itertools.product(*(range(n) for n in self.moduli)))

    def elements(self) -> List[GroupElement]:
        """All points in lexicographic order; the canonical column order."""
        return [GroupElement(c) for c in self._lexicographic]

    def characters(self) -> List[DualCharacter]:
        """All characters in lexicographic order; the canonical row order."""
        return [DualCharacter(c) for c in self._lexicographic]

    def index_of(self, point: _Residues) -> int:
        self.check(point)
        index = 0
        for c, n in zip(point.coords, self.moduli):
            index = index * n + c
        return index

    # group law

    def add(self, x: Point, y: Point) -> Point:
        self._same_kind(x, y)
        return type(x)(tuple((a + b) % n for a, b, n in zip(x.coords, y.coords, self.moduli)))

    def neg(self, x: Point) -> Point:
        self.check(x)
        return type(x)(tuple((-a) % n for a, n in zip(x.coords, self.moduli)))

    def subtract(self, x: Point, y: Point) -> Point:
        return self.add(x, self.neg(y))

    def sumset(self, xs: Iterable[Point], ys: Iterable[Point]) -> frozenset:
        """Minkowski sum {x + y}."""
        ys = list(ys)
        return frozenset(self.add(x, y) for x in xs for y in ys)

    def difference_set(self, xs: Iterable[Point]) -> frozenset:
        """{x - y : x, y in xs}."""
        xs = list(xs)
        return frozenset(self.subtract(x, y) for x in xs for y in xs)

    def _same_kind(self, x: _Residues, y: _Residues) -> None:
        self.check(x)
        self.check(y)
        if type(x) is not type(y):
            raise StructuralError(f"cannot combine {x!r} with {y!r}")

    # characters

    def _phase_numerator(self, x: GroupElement, gamma: DualCharacter) -> int:
        return sum(a * b * w for a, b, w in zip(x.coords, gamma.coords, self._phase_weights)) % self._phase_denominator

    def pairing(self, x: GroupElement, gamma: DualCharacter) -> complex:
        """<x, gamma> as a unit complex number."""
        if not isinstance(x, GroupElement) or not isinstance(gamma, DualCharacter):
            raise StructuralError(f"pairing takes (GroupElement, DualCharacter), got ({x!r}, {gamma!r})")
        self.check(x)
        self.check(gamma)
        return cmath.exp(2j * math.pi * self._phase_numerator(x, gamma) / self._phase_denominator)

    def character_table(self, rows: Sequence[DualCharacter], columns: Sequence[GroupElement],
                        conjugate: bool = True) -> np.ndarray:
        """
        Matrix of pairings, entry [i, j] = conj(<columns[j], rows[i]>) by default.

        Uses the same integer phase accumulation as `pairing`.
        """
        for gamma in rows:
            self.check(gamma)
        for x in columns:
            self.check(x)
        if not rows or not columns:
            return np.zeros((len(rows), len(columns)), dtype=complex)
        gammas = np.array([g.coords for g in rows], dtype=np.int64)
        points = np.array([x.coords for x in columns], dtype=np.int64)
        weights = np.array(self._phase_weights, dtype=np.int64)
        numerators = ((gammas * weights) @ points.T) % self._phase_denominator
        sign = -1.0 if conjugate else 1.0
        return np.exp(sign * 2j * np.pi * numerators / self._phase_denominator)

    def __str__(self) -> str:
        return " x ".join(f"Z_{n}" for n in self.moduli)
