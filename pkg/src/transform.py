"""
Fourier transforms with respect to measures.

analysis      f -> f^dmu(gamma)   = sum_x f(x) conj(<x, gamma>) mu({x})
synthesis     phi -> phi^dnu(x)   = sum_gamma phi(gamma) <x, gamma> nu({gamma})

`analysis_matrix` is the single place where the weighted-coordinate convention
lives: with g(x) = mu({x})^(1/p) f(x) the unweighted p-norm of g equals
||f||_{L^p(mu)} and the unweighted q-norm of M g equals ||f^dmu||_{L^q(nu)}.
"""

import csv
import io
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence, Tuple, Type

import numpy as np

from .errors import DomainError, StructuralError
from .group import DualCharacter, FiniteAbelianGroup, GroupElement, _Residues
from .measure import AtomicMeasure


@dataclass(frozen=True)
class PNormConfig:
    """Exponents 1 < p, q < infinity and their conjugates."""

    p: float
    q: float

    def __post_init__(self):
        for name in ("p", "q"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ValueError(f"{name} must be a number, got {value!r}")
            if not 1 < value < np.inf:
                raise ValueError(f"{name} must lie in (1, inf), got {value}")
            object.__setattr__(self, name, float(value))

    @property
    def p_conj(self) -> float:
        return self.p / (self.p - 1)

    @property
    def q_conj(self) -> float:
        return self.q / (self.q - 1)

    @property
    def is_hilbert(self) -> bool:
        return self.p == 2 and self.q == 2

    @property
    def density_exponent(self) -> float:
        """q(1 - 1/p), the exponent that density bounds enter frame bounds with."""
        return self.q * (1 - 1 / self.p)


HILBERT = PNormConfig(2, 2)


def lp_norm(values: np.ndarray, weights: Optional[np.ndarray], p: float) -> float:
    """(sum |v|^p w)^(1/p); unweighted when weights is None."""
    magnitudes = np.abs(np.asarray(values)) ** p
    if weights is not None:
        magnitudes = magnitudes * weights
    return float(np.sum(magnitudes) ** (1 / p))


class _SampledFunction:
    """Complex values on an ordered tuple of points of one kind."""

    kind: Type[_Residues] = _Residues

    def __init__(self, points: Sequence[_Residues], values):
        points = tuple(points)
        values = np.asarray(values, dtype=complex).reshape(-1)
        if len(points) != values.size:
            raise StructuralError(f"{len(points)} points but {values.size} values")
        for point in points:
            if type(point) is not self.kind:
                raise StructuralError(f"{type(self).__name__} is defined on {self.kind.__name__}s, got {point!r}")
        if len(set(points)) != len(points):
            raise StructuralError("repeated point in function domain")
        self.points = points
        self.values = values
        self._index = {x: i for i, x in enumerate(points)}

    @classmethod
    def from_mapping(cls, mapping: Mapping[_Residues, complex]):
        points = sorted(mapping)
        return cls(points, [mapping[x] for x in points])

    @classmethod
    def on(cls, measure: AtomicMeasure, values):
        """Function on the support of `measure`, values in support order."""
        return cls(measure.support_list, values)

    @classmethod
    def constant(cls, measure: AtomicMeasure, value: complex = 1.0):
        return cls(measure.support_list, np.full(len(measure), value, dtype=complex))

    def __call__(self, point: _Residues) -> complex:
        try:
            return complex(self.values[self._index[point]])
        except KeyError:
            raise StructuralError(f"function is not defined at {point!r}")

    def values_on(self, measure: AtomicMeasure) -> np.ndarray:
        """Values on the support of `measure`; off-support values are ignored."""
        if measure.kind is not self.kind:
            raise StructuralError(f"{type(self).__name__} cannot be integrated against a {measure.kind.__name__} measure")
        try:
            return np.array([self.values[self._index[x]] for x in measure.support_list], dtype=complex)
        except KeyError as missing:
            raise StructuralError(f"function is not defined at support point {missing.args[0]!r}")

    def norm(self, measure: AtomicMeasure, p: float) -> float:
        """||f||_{L^p(measure)}."""
        return lp_norm(self.values_on(measure), measure.weight_vector(), p)

    def __repr__(self) -> str:
        return f"{type(self).__name__}({len(self.points)} points)"


class GroupFunction(_SampledFunction):
    """f in L^p(mu): values on points of the group."""

    kind = GroupElement


class DualFunction(_SampledFunction):
    """phi in L^q'(nu), or a transform f^dmu: values on characters."""

    kind = DualCharacter


def _require(measure: AtomicMeasure, on_dual: bool, role: str) -> None:
    if measure.on_dual != on_dual:
        where = "the dual group" if on_dual else "the group"
        raise StructuralError(f"{role} must be a measure on {where}")


def analysis(f: GroupFunction, mu: AtomicMeasure) -> DualFunction:
    """f^dmu on the full dual."""
    _require(mu, False, "mu")
    group = mu.group
    rows = group.characters()
    if mu.is_zero():
        return DualFunction(rows, np.zeros(len(rows)))
    table = group.character_table(rows, mu.support_list)
    return DualFunction(rows, table @ (f.values_on(mu) * mu.weight_vector()))


def fourier_stieltjes(mu: AtomicMeasure) -> DualFunction:
    """mu^(gamma) = sum_x conj(<x, gamma>) mu({x})."""
    return analysis(GroupFunction.constant(mu), mu)


def synthesis(phi: DualFunction, nu: AtomicMeasure) -> GroupFunction:
    """phi^dnu on the full group."""
    _require(nu, True, "nu")
    group = nu.group
    columns = group.elements()
    if nu.is_zero():
        return GroupFunction(columns, np.zeros(len(columns)))
    table = group.character_table(nu.support_list, columns, conjugate=False)
    return GroupFunction(columns, table.T @ (phi.values_on(nu) * nu.weight_vector()))


def duality_gap(f: GroupFunction, phi: DualFunction, mu: AtomicMeasure, nu: AtomicMeasure,
                cfg: PNormConfig = HILBERT) -> float:
    """
    |<f^dmu, phi>_nu - <f, phi^dnu>_mu|.

    The pairing is bilinear, so cfg only fixes which spaces f and phi belong to.
    """
    _require(mu, False, "mu")
    _require(nu, True, "nu")
    transformed = analysis(f, mu)
    left = np.sum(transformed.values_on(nu) * np.conj(phi.values_on(nu)) * nu.weight_vector())
    inverse = synthesis(phi, nu)
    right = np.sum(f.values_on(mu) * np.conj(inverse.values_on(mu)) * mu.weight_vector())
    return float(abs(left - right))


@dataclass(frozen=True)
class AnalysisMatrix:
    """
    entry[gamma, x] = nu({gamma})^(1/q) mu({x})^(1/p') conj(<x, gamma>).

    Rows follow the support of nu, columns the support of mu. `raw` wraps an
    arbitrary operator written in the same weighted coordinates.
    """

    matrix: np.ndarray
    norms: PNormConfig
    rows: Optional[Tuple[DualCharacter, ...]] = None
    columns: Optional[Tuple[GroupElement, ...]] = None
    column_weights: Optional[np.ndarray] = None

    @classmethod
    def raw(cls, matrix: np.ndarray, norms: PNormConfig) -> "AnalysisMatrix":
        return cls(np.asarray(matrix, dtype=complex), norms)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.matrix.shape

    def weighted_coordinates(self, f: GroupFunction) -> np.ndarray:
        """g(x) = mu({x})^(1/p) f(x) in column order."""
        if self.columns is None or self.column_weights is None:
            raise StructuralError("a raw operator has no column measure")
        values = np.array([f(x) for x in self.columns], dtype=complex)
        return values * self.column_weights ** (1 / self.norms.p)

    def apply(self, g: np.ndarray) -> np.ndarray:
        return self.matrix @ g

    def gain(self, g: np.ndarray) -> float:
        """||M g||_q^q / ||g||_p^q."""
        denominator = lp_norm(g, None, self.norms.p) ** self.norms.q
        if denominator == 0:
            raise DomainError("gain of the zero vector is undefined")
        return lp_norm(self.matrix @ g, None, self.norms.q) ** self.norms.q / denominator

    def to_csv(self) -> str:
        """Rows labelled by dual coords, columns by group coords, entries as re+imi."""
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        columns = self.columns or tuple(range(self.shape[1]))
        rows = self.rows or tuple(range(self.shape[0]))
        writer.writerow([""] + [_label(x) for x in columns])
        for label, row in zip(rows, self.matrix):
            writer.writerow([_label(label)] + [_complex_text(z) for z in row])
        return buffer.getvalue()


def _label(point) -> str:
    if isinstance(point, _Residues):
        return "(" + " ".join(str(c) for c in point.coords) + ")"
    return str(point)


def _complex_text(z: complex) -> str:
    return f"{z.real:.17g}{z.imag:+.17g}i"


def analysis_matrix(mu: AtomicMeasure, nu: AtomicMeasure, cfg: PNormConfig) -> AnalysisMatrix:
    _require(mu, False, "mu")
    _require(nu, True, "nu")
    if mu.group != nu.group:
        raise StructuralError(f"mu lives on {mu.group} but nu on the dual of {nu.group}")
    if mu.is_zero() or nu.is_zero():
        raise DomainError("analysis matrix needs nonempty supports for both measures")
    group = mu.group
    rows, columns = nu.support_list, mu.support_list
    mu_weights, nu_weights = mu.weight_vector(), nu.weight_vector()
    table = group.character_table(rows, columns)
    matrix = (nu_weights ** (1 / cfg.q))[:, None] * table * (mu_weights ** (1 / cfg.p_conj))[None, :]
    return AnalysisMatrix(matrix, cfg, tuple(rows), tuple(columns), mu_weights)


def synthesis_matrix(mu: AtomicMeasure, nu: AtomicMeasure, cfg: PNormConfig) -> np.ndarray:
    """
    The synthesis operator L^q'(nu) -> L^p'(mu) in weighted coordinates.

    Input coordinates h = nu^(1/q') phi, output coordinates mu^(1/p') phi^dnu;
    in these coordinates the dual pairing is the plain dot product, so the
    matrix should equal the conjugate transpose of `analysis_matrix`. Built
    column by column through `synthesis`, independently of that matrix.
    """
    _require(mu, False, "mu")
    _require(nu, True, "nu")
    rows, columns = mu.support_list, nu.support_list
    mu_scale = mu.weight_vector() ** (1 / cfg.p_conj)
    result = np.zeros((len(rows), len(columns)), dtype=complex)
    for j, (gamma, weight) in enumerate(nu.items()):
        indicator = np.zeros(len(columns), dtype=complex)
        indicator[j] = weight ** (-1 / cfg.q_conj)
        image = synthesis(DualFunction(columns, indicator), nu)
        result[:, j] = mu_scale * image.values_on(mu)
    return result


def modulate(f: GroupFunction, group: FiniteAbelianGroup, omega: DualCharacter) -> GroupFunction:
    """(omega f)(x) = <x, omega> f(x)."""
    return GroupFunction(f.points, [group.pairing(x, omega) * v for x, v in zip(f.points, f.values)])


def shift(f: GroupFunction, group: FiniteAbelianGroup, a: GroupElement) -> GroupFunction:
    """f(. - a), defined on the translated domain."""
    return GroupFunction([group.add(x, a) for x in f.points], f.values)
