"""
Optimal (p, q)-frame bounds.

Bounds are reported in the q-th power convention of the frame inequality:
A <= ||f^dmu||_q^q / ||f||_p^q <= B. In weighted coordinates (see
transform.analysis_matrix) these are the extremal values of ||M g||_q^q over
the unit p-sphere.

At p = q = 2 both bounds come from one singular value decomposition and are
exact. Otherwise the supremum is estimated by nonlinear power iteration, which
can only undershoot, and the infimum by projected gradient descent on the
p-sphere, which can only overshoot.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .config import config
from .errors import DomainError, PreconditionError
from .group import DualCharacter
from .logger import get_logger
from .measure import AtomicMeasure
from .transform import AnalysisMatrix, PNormConfig, analysis_matrix, fourier_stieltjes, lp_norm

logger = get_logger(__name__)

# Relative drop tolerated before a power-iteration restart counts as non-monotone.
MONOTONE_SLACK = 1e-12
NULL_RESIDUAL = 1e-12


@dataclass(frozen=True)
class SolverConfig:
    """Restart/iteration budget and RNG seed for the heuristic solvers."""

    seed: int
    restarts: int = 32
    max_iterations: int = 500
    tolerance: float = 1e-11
    step_size: float = 1.0
    step_shrink: float = 0.5
    max_backtracks: int = 40
    workers: int = 1

    def __post_init__(self):
        if isinstance(self.seed, bool) or not isinstance(self.seed, (int, np.integer)):
            raise ValueError(f"seed must be an integer, got {self.seed!r}")
        if self.restarts < 1:
            raise ValueError("restarts must be at least 1")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if not 0 < self.step_shrink < 1:
            raise ValueError("step_shrink must lie in (0, 1)")
        if not self.step_size > 0:
            raise ValueError("step_size must be positive")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")

    @classmethod
    def from_config(cls, seed: int, **overrides) -> "SolverConfig":
        """Fill everything not overridden from the environment configuration."""
        values = {
            "restarts": config.restarts,
            "max_iterations": config.max_iterations,
            "tolerance": config.tolerance,
            "workers": config.workers,
        }
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(seed=seed, **values)


@dataclass(frozen=True)
class SolverResult:
    value: float
    witness: np.ndarray
    converged: bool
    iterations: int
    restarts: int
    best_restart: int
    aborted_restarts: int = 0

    @property
    def warning(self) -> Optional[str]:
        if not self.converged:
            return "did not converge: iteration cap or non-monotone step; best value so far"
        return None


@dataclass(frozen=True)
class FrameBoundsEstimate:
    """
    Lower/upper frame bounds. When `exact` is false, `lower` >= true A and
    `upper` <= true B.
    """

    lower: float
    upper: float
    exact: bool
    p: float
    q: float
    lower_witness: np.ndarray
    upper_witness: np.ndarray
    seed: Optional[int] = None
    restarts: int = 0
    iterations: int = 0
    converged: bool = True
    warnings: Tuple[str, ...] = ()

    @property
    def direction(self) -> str:
        return "exact" if self.exact else "lower>=A_opt,upper<=B_opt"

    @property
    def ratio(self) -> float:
        """B / A, infinite when the lower bound vanishes."""
        return self.upper / self.lower if self.lower > 0 else float("inf")

    @property
    def is_frame(self) -> bool:
        return self.lower > 0

    def to_dict(self) -> Dict[str, object]:
        return {
            "A_est": self.lower,
            "B_est": self.upper,
            "exact": self.exact,
            "direction": self.direction,
            "p": self.p,
            "q": self.q,
            "seed": self.seed,
            "restarts": self.restarts,
            "iterations": self.iterations,
            "converged": self.converged,
            "warnings": list(self.warnings),
            "lower_witness": _pairs(self.lower_witness),
            "upper_witness": _pairs(self.upper_witness),
        }


def _pairs(vector: np.ndarray) -> List[List[float]]:
    return [[float(z.real), float(z.imag)] for z in np.asarray(vector, dtype=complex)]


# numerical kernels


def duality_map(z: np.ndarray, r: float) -> np.ndarray:
    """Phi_r(z) = |z|^(r-1) z/|z| componentwise, with Phi_r(0) = 0."""
    z = np.asarray(z, dtype=complex)
    magnitude = np.abs(z)
    out = np.zeros_like(z)
    nonzero = magnitude > 0
    out[nonzero] = magnitude[nonzero] ** (r - 1) * (z[nonzero] / magnitude[nonzero])
    return out


def _normalize(g: np.ndarray, p: float) -> np.ndarray:
    norm = lp_norm(g, None, p)
    if norm == 0:
        raise DomainError("cannot normalize the zero vector")
    return g / norm


def _objective(matrix: np.ndarray, g: np.ndarray, q: float) -> float:
    return lp_norm(matrix @ g, None, q) ** q


def column_values(matrix: np.ndarray, q: float) -> np.ndarray:
    """||M e_j||_q^q for every canonical basis vector (unit in every p-norm)."""
    return np.sum(np.abs(matrix) ** q, axis=0)


@dataclass
class _Restart:
    witness: np.ndarray
    value: float
    iterations: int
    converged: bool
    aborted: bool = False


def _ascend(matrix: np.ndarray, p: float, q: float, start: np.ndarray, cfg: SolverConfig) -> _Restart:
    p_conj = p / (p - 1)
    adjoint = matrix.conj().T
    g = _normalize(start, p)
    value = _objective(matrix, g, q)
    for iteration in range(1, cfg.max_iterations + 1):
        direction = duality_map(adjoint @ duality_map(matrix @ g, q), p_conj)
        if not np.any(direction):
            return _Restart(g, value, iteration, True)
        candidate = _normalize(direction, p)
        new_value = _objective(matrix, candidate, q)
        if new_value < value * (1 - MONOTONE_SLACK):
            return _Restart(g, value, iteration, False, aborted=True)
        change = (new_value - value) / max(new_value, np.finfo(float).tiny)
        g, value = candidate, new_value
        if change <= cfg.tolerance:
            return _Restart(g, value, iteration, True)
    return _Restart(g, value, cfg.max_iterations, False)


def _descend(matrix: np.ndarray, p: float, q: float, start: np.ndarray, cfg: SolverConfig) -> _Restart:
    adjoint = matrix.conj().T
    g = _normalize(start, p)
    value = _objective(matrix, g, q)
    step = cfg.step_size
    for iteration in range(1, cfg.max_iterations + 1):
        gradient = q * (adjoint @ duality_map(matrix @ g, q) - value * duality_map(g, p))
        gradient_norm = np.linalg.norm(gradient)
        if gradient_norm == 0 or value == 0:
            return _Restart(g, value, iteration, True)
        direction = gradient * (np.linalg.norm(g) / gradient_norm)

        # backtracking line search along the normalized gradient
        t = step
        accepted = None
        for _ in range(cfg.max_backtracks):
            trial = g - t * direction
            if np.any(trial):
                trial = _normalize(trial, p)
                trial_value = _objective(matrix, trial, q)
                if trial_value < value:
                    accepted = (trial, trial_value)
                    break
            t *= cfg.step_shrink
        if accepted is None:
            return _Restart(g, value, iteration, True)

        change = (value - accepted[1]) / max(value, np.finfo(float).tiny)
        g, value = accepted
        step = min(t / cfg.step_shrink, cfg.step_size)
        if change <= cfg.tolerance:
            return _Restart(g, value, iteration, True)
    return _Restart(g, value, cfg.max_iterations, False)


def _random_start(n: int, seed: int, restart: int) -> np.ndarray:
    rng = np.random.default_rng([seed, restart])
    return rng.standard_normal(n) + 1j * rng.standard_normal(n)


def _run_restarts(kernel: Callable[..., _Restart], matrix: np.ndarray, p: float, q: float,
                  starts: Sequence[np.ndarray], cfg: SolverConfig, maximize: bool, label: str) -> SolverResult:
    def run(start):
        return kernel(matrix, p, q, start, cfg)

    if cfg.workers > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            outcomes = list(pool.map(run, starts))
    else:
        outcomes = [run(start) for start in starts]

    # ties go to the lowest restart index, whatever the thread count
    best_index = 0
    for index, outcome in enumerate(outcomes):
        better = outcome.value > outcomes[best_index].value if maximize else outcome.value < outcomes[best_index].value
        if better:
            best_index = index
    best = outcomes[best_index]
    aborted = sum(1 for o in outcomes if o.aborted)
    if aborted:
        logger.warn(f"{label}: restarts stopped on a non-monotone step", aborted=aborted, restarts=len(outcomes))
    if not best.converged and not best.aborted:
        logger.warn(f"{label}: best restart hit the iteration cap", restart=best_index,
                    iterations=best.iterations, value=best.value)
    return SolverResult(
        value=float(best.value),
        witness=best.witness,
        converged=best.converged,
        iterations=sum(o.iterations for o in outcomes),
        restarts=len(outcomes),
        best_restart=best_index,
        aborted_restarts=aborted,
    )


def _check_exponents(p: float, q: float) -> None:
    for name, value in (("p", p), ("q", q)):
        if not 1 < value < np.inf:
            raise ValueError(f"{name} must lie in (1, inf), got {value}")


def matrix_norm_pq(matrix: np.ndarray, p: float, q: float, cfg: SolverConfig) -> SolverResult:
    """sup over ||g||_p = 1 of ||M g||_q^q by nonlinear power iteration."""
    _check_exponents(p, q)
    matrix = np.asarray(matrix, dtype=complex)
    n = matrix.shape[1]
    if n == 0:
        raise DomainError("operator has no columns")
    columns = column_values(matrix, q)
    starts = [np.eye(n, dtype=complex)[int(np.argmax(columns))]]
    if cfg.restarts > 1:
        starts.append(np.linalg.svd(matrix)[2][0].conj())
    starts.extend(_random_start(n, cfg.seed, r) for r in range(len(starts), cfg.restarts))
    return _run_restarts(_ascend, matrix, p, q, starts[:cfg.restarts], cfg, True, "operator norm")


def matrix_min_gain_pq(matrix: np.ndarray, p: float, q: float, cfg: SolverConfig) -> SolverResult:
    """inf over ||g||_p = 1 of ||M g||_q^q by projected gradient descent; 0 on a null vector."""
    _check_exponents(p, q)
    matrix = np.asarray(matrix, dtype=complex)
    rows, n = matrix.shape
    if n == 0:
        raise DomainError("operator has no columns")
    _, singular, vh = np.linalg.svd(matrix)
    smallest = vh[-1].conj()
    scale = max(singular[0] if singular.size else 0.0, 1.0)
    if np.linalg.norm(matrix @ smallest) < NULL_RESIDUAL * scale:
        return SolverResult(0.0, _normalize(smallest, p), True, 0, 0, 0)

    columns = column_values(matrix, q)
    starts = [smallest]
    if cfg.restarts > 1:
        starts.append(np.eye(n, dtype=complex)[int(np.argmin(columns))])
    starts.extend(_random_start(n, cfg.seed, r) for r in range(len(starts), cfg.restarts))
    return _run_restarts(_descend, matrix, p, q, starts[:cfg.restarts], cfg, False, "minimal gain")


def operator_norm_pq(M: AnalysisMatrix, cfg: SolverConfig) -> Tuple[float, np.ndarray]:
    """B-side estimate: (value, witness) with value = ||M g||_q^q."""
    result = matrix_norm_pq(M.matrix, M.norms.p, M.norms.q, cfg)
    return result.value, result.witness


def min_gain_pq(M: AnalysisMatrix, cfg: SolverConfig) -> Tuple[float, np.ndarray]:
    """A-side estimate: (value, witness)."""
    result = matrix_min_gain_pq(M.matrix, M.norms.p, M.norms.q, cfg)
    return result.value, result.witness


def exact_bounds(matrix: np.ndarray) -> Tuple[float, float, np.ndarray, np.ndarray]:
    """(s_min^2, s_max^2, minimizing vector, maximizing vector); s_min = 0 for wide matrices."""
    rows, n = matrix.shape
    _, singular, vh = np.linalg.svd(matrix)
    upper = float(singular[0] ** 2)
    if n > rows:
        return 0.0, upper, vh[-1].conj(), vh[0].conj()
    return float(singular[n - 1] ** 2), upper, vh[n - 1].conj(), vh[0].conj()


def frame_bounds(mu: AtomicMeasure, nu: AtomicMeasure, norms: PNormConfig,
                 solver: Optional[SolverConfig] = None) -> FrameBoundsEstimate:
    """Optimal frame bounds: exact at p = q = 2, direction-aware estimates otherwise."""
    if mu.is_zero():
        raise DomainError("frame bounds need a measure with nonempty support")
    if nu.is_zero():
        # every unit vector attains the zero gain
        unit = np.eye(len(mu), dtype=complex)[0]
        return FrameBoundsEstimate(0.0, 0.0, True, norms.p, norms.q, unit, unit)

    M = analysis_matrix(mu, nu, norms)
    if norms.is_hilbert:
        lower, upper, low_vec, high_vec = exact_bounds(M.matrix)
        return FrameBoundsEstimate(
            lower, upper, True, norms.p, norms.q, low_vec, high_vec,
            seed=solver.seed if solver else None,
        )

    if solver is None:
        raise ValueError("a SolverConfig with a seed is required away from p = q = 2")
    low = matrix_min_gain_pq(M.matrix, norms.p, norms.q, solver)
    high = matrix_norm_pq(M.matrix, norms.p, norms.q, solver)
    lower, upper = low.value, high.value
    lower_witness, upper_witness = low.witness, high.witness

    # each value is attained at its witness, so swapping keeps both directions valid
    if lower > upper:
        lower, upper = upper, lower
        lower_witness, upper_witness = upper_witness, lower_witness

    warnings = tuple(w for w in (low.warning, high.warning) if w)
    logger.info("Estimated frame bounds", p=norms.p, q=norms.q, lower=lower, upper=upper,
                columns=M.shape[1], rows=M.shape[0])
    return FrameBoundsEstimate(
        lower, upper, False, norms.p, norms.q, lower_witness, upper_witness,
        seed=solver.seed,
        restarts=low.restarts + high.restarts,
        iterations=low.iterations + high.iterations,
        converged=low.converged and high.converged,
        warnings=warnings,
    )


def bessel_certificate(mu: AtomicMeasure, nu: AtomicMeasure, norms: PNormConfig) -> float:
    """nu(G^) mu(G)^(q/p'), an upper bound for B_opt."""
    return nu.total_mass * mu.total_mass ** (norms.q / norms.p_conj)


def bessel_forms(mu: AtomicMeasure, nu: AtomicMeasure, norms: PNormConfig) -> Dict[str, float]:
    """
    The Hoelder-consistent certificate next to the literal nu(G^) mu(G) bound
    of the atomic Bessel construction. The two agree only when mu(G) = 1 or q = p'.
    """
    certificate = bessel_certificate(mu, nu, norms)
    literal = nu.total_mass * mu.total_mass
    return {
        "certificate": certificate,
        "literal": literal,
        "discrepancy": literal - certificate,
    }


@dataclass(frozen=True)
class LocalFinitenessReport:
    delta: float
    bound: float
    max_mass: float
    max_ratio: float
    worst_shift: Optional[DualCharacter]
    passed: bool
    masses: Dict[DualCharacter, float] = field(default_factory=dict)


def local_finiteness_check(mu: AtomicMeasure, nu: AtomicMeasure, neighborhood: Iterable[DualCharacter],
                           B_ref: float, norms: PNormConfig, tolerance: float = 1e-9) -> LocalFinitenessReport:
    """
    nu(xi + V) <= B mu(G)^(q/p) / delta^q for every character xi, with
    delta = min over V of |mu^|.
    """
    group = mu.group
    neighborhood = sorted(frozenset(neighborhood))
    if not neighborhood:
        raise PreconditionError("the neighborhood V must be nonempty")
    transform = fourier_stieltjes(mu)
    delta = min(abs(transform(gamma)) for gamma in neighborhood)
    if delta <= NULL_RESIDUAL * max(mu.total_mass, 1.0):
        raise PreconditionError(f"|mu^| vanishes on V (delta = {delta:g}); pick a smaller neighborhood")
    bound = B_ref * mu.total_mass ** (norms.q / norms.p) / delta ** norms.q

    masses = {}
    for xi in group.characters():
        masses[xi] = sum(nu.weight(group.add(xi, gamma)) for gamma in neighborhood)
    worst = max(masses, key=lambda xi: masses[xi])
    max_mass = masses[worst]
    ratio = max_mass / bound if bound > 0 else (0.0 if max_mass == 0 else float("inf"))
    passed = max_mass <= bound * (1 + tolerance) + tolerance * NULL_RESIDUAL
    return LocalFinitenessReport(delta, bound, max_mass, ratio, worst if max_mass > 0 else None, passed, masses)


def brute_force_pq(matrix: np.ndarray, p: float, q: float, resolution: int = 1000) -> Tuple[float, float]:
    """
    (min, max) of ||M g||_q^q over a grid of the unit p-sphere, for at most two
    columns. The global phase is fixed; the grid has resolution^2 points.
    """
    matrix = np.asarray(matrix, dtype=complex)
    n = matrix.shape[1]
    if n == 1:
        value = float(column_values(matrix, q)[0])
        return value, value
    if n != 2:
        raise DomainError("the exhaustive oracle handles one or two columns only")
    angles = np.linspace(0.0, np.pi / 2, resolution)
    phases = np.exp(1j * np.linspace(0.0, 2 * np.pi, resolution, endpoint=False))
    first, second = matrix[:, 0], matrix[:, 1]
    lowest, highest = np.inf, -np.inf
    for t in angles:
        a = np.cos(t) ** (2 / p)
        b = np.sin(t) ** (2 / p)
        images = a * first[:, None] + b * second[:, None] * phases[None, :]
        values = np.sum(np.abs(images) ** q, axis=0)
        lowest = min(lowest, float(values.min()))
        highest = max(highest, float(values.max()))
    return lowest, highest
