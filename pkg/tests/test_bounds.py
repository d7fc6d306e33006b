"""
Unit tests for optimal frame bound computation.
"""

import numpy as np
import pytest

from src.bounds import (
    FrameBoundsEstimate,
    SolverConfig,
    _Restart,
    _run_restarts,
    bessel_certificate,
    bessel_forms,
    brute_force_pq,
    column_values,
    duality_map,
    exact_bounds,
    frame_bounds,
    local_finiteness_check,
    matrix_min_gain_pq,
    matrix_norm_pq,
    min_gain_pq,
    operator_norm_pq,
)
from src.errors import DomainError, PreconditionError
from src.group import DualCharacter, FiniteAbelianGroup, GroupElement
from src.measure import AtomicMeasure, add, from_atoms, haar, zero_measure
from src.transform import HILBERT, PNormConfig, analysis_matrix, lp_norm


def random_measure(group, seed, dual=False, low=0.1, high=1.0):
    rng = np.random.default_rng(seed)
    points = group.characters() if dual else group.elements()
    weights = rng.uniform(low, high, len(points))
    return AtomicMeasure(group, dict(zip(points, weights)), DualCharacter if dual else GroupElement)


@pytest.fixture
def solver():
    return SolverConfig(seed=42, restarts=16)


class TestSolverConfig:
    """Test cases for solver settings."""

    @pytest.mark.parametrize("overrides,message", [
        ({"restarts": 0}, "restarts must be at least 1"),
        ({"max_iterations": 0}, "max_iterations must be at least 1"),
        ({"tolerance": 0.0}, "tolerance must be positive"),
        ({"step_shrink": 1.0}, "step_shrink must lie in"),
        ({"workers": 0}, "workers must be at least 1"),
    ])
    def test_invalid_settings_raise(self, overrides, message):
        """Test that each budget is validated."""
        with pytest.raises(ValueError, match=message):
            SolverConfig(seed=0, **overrides)

    def test_seed_must_be_integer(self):
        """Test that the seed is required to be an integer."""
        with pytest.raises(ValueError, match="seed must be an integer"):
            SolverConfig(seed="7")

    def test_from_config_ignores_none_overrides(self):
        """Test that None overrides fall back to configured defaults."""
        solver = SolverConfig.from_config(5, restarts=None, workers=2)

        assert solver.seed == 5
        assert solver.workers == 2
        assert solver.restarts >= 1


class TestKernels:
    """Test cases for the numerical building blocks."""

    def test_duality_map(self):
        """Test Phi_r(z) = |z|^(r-1) z/|z| with Phi_r(0) = 0."""
        z = np.array([0.0, 2.0, -8.0j])

        result = duality_map(z, 3.0)

        assert result[0] == 0
        assert result[1] == pytest.approx(4.0)
        assert result[2] == pytest.approx(-64.0j)

    def test_column_values(self):
        """Test ||M e_j||_q^q for every column."""
        matrix = np.array([[1.0, 2.0], [1.0j, 0.0]])

        assert column_values(matrix, 3).tolist() == pytest.approx([2.0, 8.0])

    def test_exact_bounds_tall_and_wide(self):
        """Test squared singular values, with A = 0 for wide matrices."""
        tall = np.diag([3.0, 0.5])
        wide = np.array([[1.0, 0.0, 1.0]])

        lower, upper, low_vec, high_vec = exact_bounds(tall)
        assert (lower, upper) == pytest.approx((0.25, 9.0))
        assert np.linalg.norm(tall @ high_vec) ** 2 == pytest.approx(9.0)
        assert np.linalg.norm(tall @ low_vec) ** 2 == pytest.approx(0.25)

        assert exact_bounds(wide)[0] == 0.0

    def test_power_iteration_matches_svd_at_two(self, solver):
        """Test that the heuristic supremum reproduces s_max^2 when p = q = 2."""
        rng = np.random.default_rng(3)
        matrix = rng.standard_normal((5, 4)) + 1j * rng.standard_normal((5, 4))

        result = matrix_norm_pq(matrix, 2.0, 2.0, solver)

        assert result.value == pytest.approx(np.linalg.norm(matrix, 2) ** 2, rel=1e-9)
        assert lp_norm(result.witness, None, 2.0) == pytest.approx(1.0)

    @pytest.mark.parametrize("p,q", [(1.5, 3.0), (3.0, 1.5), (4.0 / 3.0, 4.0)])
    def test_heuristics_match_exhaustive_search_on_two_columns(self, solver, p, q):
        """Test both estimates against a dense grid of the unit p-sphere."""
        rng = np.random.default_rng(11)
        matrix = rng.standard_normal((3, 2)) + 1j * rng.standard_normal((3, 2))

        grid_min, grid_max = brute_force_pq(matrix, p, q, resolution=400)
        high = matrix_norm_pq(matrix, p, q, solver)
        low = matrix_min_gain_pq(matrix, p, q, solver)

        assert high.value == pytest.approx(grid_max, rel=1e-3)
        assert low.value == pytest.approx(grid_min, rel=2e-3, abs=1e-4 * grid_max)
        assert low.value <= high.value

    def test_estimates_are_attained_at_witnesses(self, solver):
        """Test that each reported value is ||M g||_q^q at a unit witness."""
        rng = np.random.default_rng(5)
        matrix = rng.standard_normal((4, 3)) + 1j * rng.standard_normal((4, 3))

        for result in (matrix_norm_pq(matrix, 1.5, 3.0, solver), matrix_min_gain_pq(matrix, 1.5, 3.0, solver)):
            assert lp_norm(result.witness, None, 1.5) == pytest.approx(1.0)
            assert lp_norm(matrix @ result.witness, None, 3.0) ** 3.0 == pytest.approx(result.value)

    def test_min_gain_is_exactly_zero_on_null_vector(self, solver):
        """Test that a rank-deficient operator reports a minimal gain of exactly 0."""
        column = np.array([1.0, 2.0j, -1.0])
        matrix = np.stack([column, column], axis=1)

        result = matrix_min_gain_pq(matrix, 1.5, 3.0, solver)

        assert result.value == 0.0
        assert np.linalg.norm(matrix @ result.witness) < 1e-12

    def test_runs_are_deterministic(self):
        """Test that a fixed seed reproduces results, also with threads."""
        rng = np.random.default_rng(8)
        matrix = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))

        serial = matrix_norm_pq(matrix, 1.5, 3.0, SolverConfig(seed=1, restarts=8))
        again = matrix_norm_pq(matrix, 1.5, 3.0, SolverConfig(seed=1, restarts=8))
        threaded = matrix_norm_pq(matrix, 1.5, 3.0, SolverConfig(seed=1, restarts=8, workers=4))

        assert serial.value == again.value
        assert serial.value == threaded.value
        assert serial.best_restart == threaded.best_restart

    def test_exponents_are_checked(self, solver):
        """Test that p = 1 is rejected by the solvers."""
        with pytest.raises(ValueError, match="p must lie in"):
            matrix_norm_pq(np.eye(2), 1.0, 2.0, solver)

    def test_ties_go_to_lowest_restart(self, solver):
        """Test the deterministic tie-break between restarts."""
        outcomes = iter([
            _Restart(np.array([1.0]), 2.0, 3, True),
            _Restart(np.array([2.0]), 5.0, 4, True),
            _Restart(np.array([3.0]), 5.0, 5, True),
        ])

        result = _run_restarts(lambda *args: next(outcomes), np.eye(1), 2.0, 2.0,
                               [np.ones(1)] * 3, solver, True, "test")

        assert result.value == 5.0
        assert result.best_restart == 1
        assert result.iterations == 12

    def test_aborted_restarts_are_logged(self, solver, mocker):
        """Test that non-monotone restarts are counted and reported."""
        warn = mocker.patch("src.bounds.logger.warn")
        outcomes = iter([
            _Restart(np.array([1.0]), 0.25, 2, False, aborted=True),
            _Restart(np.array([1.0]), 0.5, 2, True),
        ])

        result = _run_restarts(lambda *args: next(outcomes), np.eye(1), 2.0, 2.0,
                               [np.ones(1)] * 2, solver, True, "operator norm")

        assert result.aborted_restarts == 1
        assert result.converged
        assert "non-monotone" in warn.call_args[0][0]

    def test_aborted_best_restart_is_not_converged(self, solver, mocker):
        """Test that a best restart stopped on a non-monotone step keeps the warning flag."""
        mocker.patch("src.bounds.logger.warn")
        outcomes = iter([
            _Restart(np.array([1.0]), 2.0, 2, False, aborted=True),
            _Restart(np.array([1.0]), 0.5, 2, True),
        ])

        result = _run_restarts(lambda *args: next(outcomes), np.eye(1), 2.0, 2.0,
                               [np.ones(1)] * 2, solver, True, "operator norm")

        assert result.best_restart == 0
        assert result.aborted_restarts == 1
        assert not result.converged
        assert "non-monotone" in result.warning

    def test_iteration_cap_is_reported(self, mocker):
        """Test that hitting the iteration cap marks the result unconverged."""
        warn = mocker.patch("src.bounds.logger.warn")
        rng = np.random.default_rng(2)
        matrix = rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5))

        result = matrix_min_gain_pq(matrix, 1.5, 3.0, SolverConfig(seed=0, restarts=2, max_iterations=1))

        assert not result.converged
        assert result.warning is not None
        warn.assert_called()


class TestFrameBounds:
    """Test cases for frame_bounds on measures."""

    def test_plancherel_is_exact(self):
        """Test A = B = 1 for counting measure against normalized dual Haar."""
        group = FiniteAbelianGroup.cyclic(8)
        nu = from_atoms(group, [((n,), 1 / 8) for n in range(8)], dual=True)

        estimate = frame_bounds(haar(group), nu, HILBERT)

        assert estimate.exact
        assert estimate.lower == pytest.approx(1.0, rel=1e-12)
        assert estimate.upper == pytest.approx(1.0, rel=1e-12)
        assert estimate.direction == "exact"

    @pytest.mark.parametrize("p,q", [(2, 2), (1.5, 3), (3, 1.5)])
    def test_single_atom_gives_unit_bounds(self, solver, p, q):
        """Test that one atom of weight 1 against a probability dual measure gives A = B = 1."""
        group = FiniteAbelianGroup.cyclic(4)
        mu = from_atoms(group, [((3,), 1.0)])
        nu = from_atoms(group, [((0,), 0.5), ((1,), 0.25), ((2,), 0.25)], dual=True)

        estimate = frame_bounds(mu, nu, PNormConfig(p, q), solver)

        assert estimate.lower == pytest.approx(1.0, rel=1e-9)
        assert estimate.upper == pytest.approx(1.0, rel=1e-9)

    def test_hausdorff_young_constant(self, solver):
        """Test B = 1 for probability Haar against counting dual Haar at p = 4/3, q = 4."""
        group = FiniteAbelianGroup.cyclic(8)
        norms = PNormConfig(4 / 3, 4)

        estimate = frame_bounds(haar(group, "probability"), haar(group, dual=True), norms, solver)

        assert not estimate.exact
        assert estimate.direction == "lower>=A_opt,upper<=B_opt"
        assert estimate.upper == pytest.approx(1.0, rel=1e-6)
        assert estimate.lower <= estimate.upper

    def test_wide_operator_is_not_a_frame(self):
        """Test A = 0 when nu has fewer atoms than mu."""
        group = FiniteAbelianGroup.cyclic(6)
        nu = from_atoms(group, [((0,), 1.0), ((1,), 1.0)], dual=True)

        estimate = frame_bounds(haar(group), nu, HILBERT)

        assert estimate.lower == 0.0
        assert not estimate.is_frame
        assert estimate.ratio == float("inf")

    def test_zero_nu_gives_zero_bounds(self):
        """Test that an empty spectrum gives A = B = 0."""
        group = FiniteAbelianGroup.cyclic(4)

        estimate = frame_bounds(haar(group), zero_measure(group, dual=True), PNormConfig(1.5, 3))

        assert (estimate.lower, estimate.upper) == (0.0, 0.0)
        assert estimate.exact

    def test_zero_nu_witnesses_are_unit_vectors(self):
        """Test that the witnesses for an empty spectrum are nonzero unit vectors."""
        group = FiniteAbelianGroup.cyclic(4)
        norms = PNormConfig(1.5, 3)

        estimate = frame_bounds(haar(group), zero_measure(group, dual=True), norms)

        for witness in (estimate.lower_witness, estimate.upper_witness):
            assert witness.shape == (4,)
            assert lp_norm(witness, None, norms.p) == pytest.approx(1.0)

    def test_zero_mu_raises(self):
        """Test that an empty group-side measure is a domain error."""
        group = FiniteAbelianGroup.cyclic(4)

        with pytest.raises(DomainError):
            frame_bounds(zero_measure(group), haar(group, dual=True), HILBERT)

    def test_heuristic_path_needs_solver(self):
        """Test that p, q away from 2 require a seeded solver."""
        group = FiniteAbelianGroup.cyclic(4)

        with pytest.raises(ValueError, match="SolverConfig"):
            frame_bounds(haar(group), haar(group, dual=True), PNormConfig(1.5, 3))

    def test_wrappers_return_value_and_witness(self, solver):
        """Test operator_norm_pq and min_gain_pq on an analysis matrix."""
        group = FiniteAbelianGroup.cyclic(5)
        M = analysis_matrix(random_measure(group, 1), random_measure(group, 2, dual=True), PNormConfig(1.5, 3))

        high, high_witness = operator_norm_pq(M, solver)
        low, low_witness = min_gain_pq(M, solver)

        assert 0 < low <= high
        assert M.gain(high_witness) == pytest.approx(high)
        assert M.gain(low_witness) == pytest.approx(low)

    def test_to_dict(self, solver):
        """Test the serialized estimate."""
        group = FiniteAbelianGroup.cyclic(3)
        estimate = frame_bounds(haar(group), haar(group, dual=True), PNormConfig(1.5, 3), solver)

        record = estimate.to_dict()

        assert record["A_est"] == estimate.lower
        assert record["B_est"] == estimate.upper
        assert record["seed"] == 42
        assert record["exact"] is False
        assert len(record["upper_witness"]) == 3
        assert all(len(pair) == 2 for pair in record["upper_witness"])


class TestMonotonicityAndDirection:
    """Test cases for ordering properties of the bounds."""

    @pytest.mark.parametrize("moduli", [(5,), (4, 2), (3, 3)])
    def test_bounds_grow_with_nu_at_two(self, moduli):
        """Test that nu <= nu' atomwise gives A <= A' and B <= B' on the exact path."""
        group = FiniteAbelianGroup(moduli)
        mu = random_measure(group, 10)
        for seed in range(10):
            nu = random_measure(group, 100 + seed, dual=True)
            larger = add(nu, random_measure(group, 200 + seed, dual=True, low=0.01, high=0.5))

            small, large = frame_bounds(mu, nu, HILBERT), frame_bounds(mu, larger, HILBERT)

            assert small.lower <= large.lower * (1 + 1e-12) + 1e-15
            assert small.upper <= large.upper * (1 + 1e-12)

    @pytest.mark.parametrize("p,q", [(1.5, 3), (3, 1.5), (4, 2), (1.2, 1.7)])
    def test_heuristic_estimates_respect_basis_vectors(self, solver, p, q):
        """Test B_est >= every column gain and 0 <= A_est <= every column gain."""
        group = FiniteAbelianGroup.cyclic(6)
        norms = PNormConfig(p, q)
        for seed in range(5):
            M = analysis_matrix(random_measure(group, seed), random_measure(group, 50 + seed, dual=True), norms)
            columns = column_values(M.matrix, q)

            high, _ = operator_norm_pq(M, solver)
            low, _ = min_gain_pq(M, solver)

            assert high >= columns.max() * (1 - 1e-12)
            assert 0.0 <= low <= columns.min() * (1 + 1e-12)


class TestCertificates:
    """Test cases for the Bessel certificate and local finiteness."""

    @pytest.mark.parametrize("p,q", [(2, 2), (1.5, 3), (3, 1.5)])
    def test_certificate_bounds_optimal_upper(self, solver, p, q):
        """Test B_opt <= nu(G^) mu(G)^(q/p')."""
        group = FiniteAbelianGroup((3, 2))
        mu = random_measure(group, 10, high=3.0)
        nu = random_measure(group, 11, dual=True)
        norms = PNormConfig(p, q)

        estimate = frame_bounds(mu, nu, norms, solver)

        assert estimate.upper <= bessel_certificate(mu, nu, norms) * (1 + 1e-12)

    def test_forms_agree_for_probability_mu(self):
        """Test that both certificate forms coincide when mu(G) = 1."""
        group = FiniteAbelianGroup.cyclic(4)
        mu = haar(group, "probability")
        nu = random_measure(group, 4, dual=True)

        forms = bessel_forms(mu, nu, PNormConfig(1.5, 3))

        assert forms["discrepancy"] == pytest.approx(0.0, abs=1e-15)

    def test_forms_differ_otherwise(self):
        """Test that the two forms agree when q = p' and differ otherwise."""
        group = FiniteAbelianGroup.cyclic(4)

        forms = bessel_forms(haar(group), haar(group, dual=True), PNormConfig(1.5, 3))

        assert forms["certificate"] == pytest.approx(4 * 4 ** 1.0)
        assert forms["literal"] == pytest.approx(16.0)
        assert forms["discrepancy"] == pytest.approx(0.0)

        forms = bessel_forms(haar(group), haar(group, dual=True), PNormConfig(2, 3))
        assert forms["discrepancy"] != pytest.approx(0.0)

    def test_local_finiteness_holds_with_optimal_bound(self):
        """Test nu(xi + V) <= B mu(G)^(q/p) / delta^q for every xi."""
        group = FiniteAbelianGroup.cyclic(6)
        mu = random_measure(group, 20)
        nu = random_measure(group, 21, dual=True)
        B = frame_bounds(mu, nu, HILBERT).upper

        report = local_finiteness_check(mu, nu, [group.trivial_character()], B, HILBERT)

        assert report.passed
        assert report.max_ratio <= 1 + 1e-9
        assert len(report.masses) == 6

    def test_empty_neighborhood_raises(self):
        """Test that V must be nonempty."""
        group = FiniteAbelianGroup.cyclic(4)

        with pytest.raises(PreconditionError, match="nonempty"):
            local_finiteness_check(haar(group), haar(group, dual=True), [], 1.0, HILBERT)

    def test_vanishing_transform_raises(self):
        """Test that delta = 0 on V is a precondition failure."""
        group = FiniteAbelianGroup.cyclic(4)

        with pytest.raises(PreconditionError, match="vanishes"):
            local_finiteness_check(haar(group), haar(group, dual=True), [group.character(1)], 1.0, HILBERT)


class TestBruteForce:
    """Test cases for the exhaustive oracle."""

    def test_single_column(self):
        """Test that one column gives min = max = its value."""
        assert brute_force_pq(np.array([[1.0], [2.0]]), 1.5, 3.0) == pytest.approx((9.0, 9.0))

    def test_too_many_columns(self):
        """Test that the oracle refuses three columns."""
        with pytest.raises(DomainError, match="one or two columns"):
            brute_force_pq(np.eye(3), 2.0, 2.0)

    def test_identity_at_two(self):
        """Test min = max = 1 for the 2x2 identity at p = q = 2."""
        lowest, highest = brute_force_pq(np.eye(2), 2.0, 2.0, resolution=50)

        assert lowest == pytest.approx(1.0)
        assert highest == pytest.approx(1.0)


class TestEstimateProperties:
    """Test cases for FrameBoundsEstimate helpers."""

    def test_ratio(self):
        """Test B/A and frame status."""
        estimate = FrameBoundsEstimate(0.5, 2.0, True, 2.0, 2.0, np.zeros(1), np.zeros(1))

        assert estimate.ratio == 4.0
        assert estimate.is_frame
