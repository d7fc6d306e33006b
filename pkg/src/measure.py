"""
Atomic measures on a finite abelian group or its dual, and the measure calculus
used by the frame-measure constructions: Dirac and Haar measures, convolution,
translation, restriction, density reweighting, sums, packing pairs and
Radon-Nikodym derivatives.

Supports are exactly the stored keys: zero-weight atoms are dropped and no
epsilon thresholding is applied.
"""

from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, Iterator, List, Mapping, Optional, Tuple, Type

import numpy as np

from .errors import DomainError, StructuralError
from .group import DualCharacter, FiniteAbelianGroup, GroupElement, _Residues
from .logger import get_logger

logger = get_logger(__name__)

MASS_TOLERANCE = 1e-12


class AtomicMeasure:
    """
    A finite nonnegative weighted point set on a group (or on its dual).

    Atoms are kept sorted lexicographically, so every derived matrix and
    report is independent of the order the atoms were supplied in.
    """

    __slots__ = ("_group", "_kind", "_weights")

    def __init__(self, group: FiniteAbelianGroup, weights: Mapping[_Residues, float],
                 kind: Type[_Residues] = GroupElement):
        if kind not in (GroupElement, DualCharacter):
            raise StructuralError(f"measures live on points or characters, not {kind!r}")
        cleaned: Dict[_Residues, float] = {}
        for point, weight in weights.items():
            if type(point) is not kind:
                raise StructuralError(f"atom {point!r} does not belong to a {kind.__name__} measure")
            group.check(point)
            weight = float(weight)
            if not np.isfinite(weight) or weight < 0:
                raise DomainError(f"atom {point!r} has invalid weight {weight}")
            if weight > 0:
                cleaned[point] = cleaned.get(point, 0.0) + weight
        self._group = group
        self._kind = kind
        self._weights = dict(sorted(cleaned.items()))

    @property
    def group(self) -> FiniteAbelianGroup:
        return self._group

    @property
    def kind(self) -> Type[_Residues]:
        return self._kind

    @property
    def on_dual(self) -> bool:
        return self._kind is DualCharacter

    @property
    def weights(self) -> Dict[_Residues, float]:
        return dict(self._weights)

    def weight(self, point: _Residues) -> float:
        return self._weights.get(point, 0.0)

    def items(self) -> Iterator[Tuple[_Residues, float]]:
        return iter(self._weights.items())

    @property
    def support(self) -> FrozenSet[_Residues]:
        return frozenset(self._weights)

    @property
    def support_list(self) -> List[_Residues]:
        """Support in lexicographic order."""
        return list(self._weights)

    def weight_vector(self) -> np.ndarray:
        return np.fromiter(self._weights.values(), dtype=float, count=len(self._weights))

    @property
    def total_mass(self) -> float:
        return float(sum(self._weights.values()))

    def is_zero(self) -> bool:
        return not self._weights

    def __len__(self) -> int:
        return len(self._weights)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, AtomicMeasure)
            and self._group == other._group
            and self._kind is other._kind
            and self._weights == other._weights
        )

    def isclose(self, other: "AtomicMeasure", rel: float = MASS_TOLERANCE) -> bool:
        """Same group, same support and weights equal to a relative tolerance."""
        if self._group != other._group or self._kind is not other._kind:
            return False
        if self.support != other.support:
            return False
        scale = max(self.total_mass, other.total_mass, 1.0)
        return all(abs(w - other.weight(x)) <= rel * scale for x, w in self.items())

    def __repr__(self) -> str:
        atoms = ", ".join(f"{list(x.coords)}: {w:g}" for x, w in self.items())
        return f"AtomicMeasure({self._group}, {'dual' if self.on_dual else 'group'}, {{{atoms}}})"


@dataclass(frozen=True)
class DensityFunction:
    """Strictly positive multiplier on a finite set of points."""

    values: Dict[_Residues, float]

    def __post_init__(self):
        for point, value in self.values.items():
            if not np.isfinite(value) or value <= 0:
                raise DomainError(f"density must be positive and finite, got {value} at {point!r}")
        object.__setattr__(self, "values", dict(sorted(self.values.items())))

    @classmethod
    def constant(cls, points: Iterable[_Residues], value: float) -> "DensityFunction":
        return cls({x: float(value) for x in points})

    def __call__(self, point: _Residues) -> float:
        try:
            return self.values[point]
        except KeyError:
            raise StructuralError(f"density is not defined at {point!r}")

    @property
    def domain(self) -> FrozenSet[_Residues]:
        return frozenset(self.values)

    @property
    def lower(self) -> float:
        """min value (a_phi)."""
        return min(self.values.values()) if self.values else 0.0

    @property
    def upper(self) -> float:
        """max value (b_phi)."""
        return max(self.values.values()) if self.values else 0.0

    @property
    def sup_norm(self) -> float:
        return self.upper


@dataclass(frozen=True)
class PackingReport:
    packing: bool
    witness: Optional[_Residues] = None
    product_rule_holds: Optional[bool] = None
    product_rule_deviation: float = 0.0
    disjoint_translates: Optional[bool] = None
    samples: int = 0
    details: Dict[str, float] = field(default_factory=dict)


# constructors


def from_atoms(group: FiniteAbelianGroup, atoms: Iterable[Tuple[Iterable[int], float]],
               dual: bool = False) -> AtomicMeasure:
    """Build a measure from (coords, weight) pairs; repeated coords add up."""
    make = group.character if dual else group.element
    weights: Dict[_Residues, float] = {}
    for coords, weight in atoms:
        point = make(coords)
        weights[point] = weights.get(point, 0.0) + float(weight)
    return AtomicMeasure(group, weights, DualCharacter if dual else GroupElement)


def zero_measure(group: FiniteAbelianGroup, dual: bool = False) -> AtomicMeasure:
    return AtomicMeasure(group, {}, DualCharacter if dual else GroupElement)


def dirac(group: FiniteAbelianGroup, point: _Residues) -> AtomicMeasure:
    """delta_x: one atom of weight 1."""
    group.check(point)
    return AtomicMeasure(group, {point: 1.0}, type(point))


def haar(group: FiniteAbelianGroup, normalization: str = "counting", dual: bool = False) -> AtomicMeasure:
    """Uniform measure: weight 1 per point (counting) or 1/order (probability)."""
    if normalization == "counting":
        weight = 1.0
    elif normalization == "probability":
        weight = 1.0 / group.order
    else:
        raise StructuralError(f"unknown Haar normalization {normalization!r}")
    points = group.characters() if dual else group.elements()
    return AtomicMeasure(group, {x: weight for x in points}, DualCharacter if dual else GroupElement)


# calculus


def _same_space(mu: AtomicMeasure, lam: AtomicMeasure) -> None:
    if mu.group != lam.group:
        raise StructuralError(f"measures live on different groups: {mu.group} and {lam.group}")
    if mu.kind is not lam.kind:
        raise StructuralError("cannot combine a measure on the group with a measure on the dual")


def convolve(mu: AtomicMeasure, lam: AtomicMeasure) -> AtomicMeasure:
    """(mu * lam)({z}) = sum over x + y = z of mu({x}) lam({y})."""
    _same_space(mu, lam)
    group = mu.group
    weights: Dict[_Residues, float] = {}
    for x, wx in mu.items():
        for y, wy in lam.items():
            z = group.add(x, y)
            weights[z] = weights.get(z, 0.0) + wx * wy
    return AtomicMeasure(group, weights, mu.kind)


def translate(mu: AtomicMeasure, a: _Residues) -> AtomicMeasure:
    """delta_a * mu: the atom at x moves to x + a."""
    group = mu.group
    group.check(a)
    if type(a) is not mu.kind:
        raise StructuralError(f"cannot translate a {mu.kind.__name__} measure by {a!r}")
    return AtomicMeasure(group, {group.add(x, a): w for x, w in mu.items()}, mu.kind)


def reflect(mu: AtomicMeasure) -> AtomicMeasure:
    """mu(-.)."""
    group = mu.group
    return AtomicMeasure(group, {group.neg(x): w for x, w in mu.items()}, mu.kind)


def restrict(mu: AtomicMeasure, subset: Iterable[_Residues]) -> AtomicMeasure:
    """mu|_E, weights kept exactly on E intersected with the support."""
    subset = frozenset(subset)
    restricted = AtomicMeasure(mu.group, {x: w for x, w in mu.items() if x in subset}, mu.kind)
    if restricted.is_zero() and not mu.is_zero():
        logger.warn("Restriction has zero mass", subset_size=len(subset), support_size=len(mu))
    return restricted


def reweight(mu: AtomicMeasure, density: DensityFunction) -> AtomicMeasure:
    """phi d(mu)."""
    return AtomicMeasure(mu.group, {x: density(x) * w for x, w in mu.items()}, mu.kind)


def scale(mu: AtomicMeasure, factor: float) -> AtomicMeasure:
    """c mu, for c >= 0."""
    if not np.isfinite(factor) or factor < 0:
        raise DomainError(f"scaling factor must be nonnegative, got {factor}")
    return AtomicMeasure(mu.group, {x: factor * w for x, w in mu.items()}, mu.kind)


def add(mu: AtomicMeasure, lam: AtomicMeasure) -> AtomicMeasure:
    _same_space(mu, lam)
    weights = mu.weights
    for x, w in lam.items():
        weights[x] = weights.get(x, 0.0) + w
    return AtomicMeasure(mu.group, weights, mu.kind)


def translate_restrict(mu: AtomicMeasure, subset: Iterable[_Residues], a: _Residues) -> AtomicMeasure:
    """
    T_a(mu|_{F+a}): the atom at x in (F + a) moves to x - a.

    Satisfies  sum f d(T_a(mu|_{F+a})) = sum over x in F + a of f(x - a) mu({x}).
    """
    group = mu.group
    shifted = frozenset(group.add(x, a) for x in subset)
    return AtomicMeasure(
        group,
        {group.subtract(x, a): w for x, w in mu.items() if x in shifted},
        mu.kind,
    )


def measure_of(mu: AtomicMeasure, subset: Iterable[_Residues]) -> float:
    """mu(E)."""
    return float(sum(mu.weight(x) for x in frozenset(subset)))


def radon_nikodym(numerator: AtomicMeasure, denominator: AtomicMeasure) -> DensityFunction:
    """
    d(numerator)/d(denominator) as the atomwise weight ratio on the numerator's support.

    Raises DomainError naming an atom of the numerator the denominator does not charge.
    """
    _same_space(numerator, denominator)
    ratios: Dict[_Residues, float] = {}
    for x, w in numerator.items():
        base = denominator.weight(x)
        if base <= 0:
            raise DomainError(f"not absolutely continuous: atom {list(x.coords)} has no mass in the reference measure")
        ratios[x] = w / base
    return DensityFunction(ratios)


def essential_bounds(mu: AtomicMeasure, base: AtomicMeasure) -> Tuple[float, float]:
    """(ess inf, ess sup) of d(mu)/d(base), taken over the support of mu."""
    derivative = radon_nikodym(mu, base)
    return derivative.lower, derivative.upper


def is_packing_pair(mu: AtomicMeasure, lam: AtomicMeasure, samples: int = 16, seed: int = 0) -> PackingReport:
    """
    Check (K_mu - K_mu) and (K_lam - K_lam) meet only at 0.

    When they do, also checks on sampled E in K_mu and F in K_lam that
    sigma(E + F) = mu(E) lam(F) for sigma = mu * lam, and that the translates
    K_mu + x, K_mu + y are disjoint for distinct x, y in K_lam.
    """
    _same_space(mu, lam)
    group = mu.group
    zero = mu.kind((0,) * group.rank)
    common = (group.difference_set(mu.support) & group.difference_set(lam.support)) - {zero}
    if common:
        witness = min(common)
        return PackingReport(packing=False, witness=witness)

    sigma = convolve(mu, lam)
    rng = np.random.default_rng(seed)
    mu_support, lam_support = mu.support_list, lam.support_list
    worst = 0.0
    checked = 0
    for _ in range(samples if mu_support and lam_support else 0):
        e = [x for x in mu_support if rng.random() < 0.5] or [mu_support[0]]
        f = [y for y in lam_support if rng.random() < 0.5] or [lam_support[0]]
        lhs = measure_of(sigma, group.sumset(e, f))
        rhs = measure_of(mu, e) * measure_of(lam, f)
        worst = max(worst, abs(lhs - rhs) / max(abs(rhs), 1.0))
        checked += 1

    translates = [frozenset(group.add(x, y) for x in mu_support) for y in lam_support]
    disjoint = all(
        not (translates[i] & translates[j])
        for i in range(len(translates))
        for j in range(i + 1, len(translates))
    )
    return PackingReport(
        packing=True,
        product_rule_holds=worst <= MASS_TOLERANCE,
        product_rule_deviation=worst,
        disjoint_translates=disjoint,
        samples=checked,
    )
