"""
Unit tests for atomic measures and the measure calculus.
"""

import numpy as np
import pytest

from src.errors import DomainError, StructuralError
from src.group import DualCharacter, FiniteAbelianGroup, GroupElement
from src.measure import (
    AtomicMeasure,
    DensityFunction,
    add,
    convolve,
    dirac,
    essential_bounds,
    from_atoms,
    haar,
    is_packing_pair,
    measure_of,
    radon_nikodym,
    reflect,
    restrict,
    reweight,
    scale,
    translate,
    translate_restrict,
    zero_measure,
)


@pytest.fixture
def z8():
    return FiniteAbelianGroup.cyclic(8)


def random_measure(group, rng, size, low=0.1, high=2.0):
    """A measure with `size` random atoms and uniform random weights."""
    elements = group.elements()
    picks = rng.choice(len(elements), size=min(size, len(elements)), replace=False)
    return AtomicMeasure(group, {elements[i]: rng.uniform(low, high) for i in picks}, GroupElement)


class TestAtomicMeasure:
    """Test cases for AtomicMeasure construction and accessors."""

    def test_atoms_are_sorted(self, z8):
        """Test that support order is lexicographic regardless of input order."""
        mu = from_atoms(z8, [((5,), 1.0), ((2,), 0.5), ((7,), 2.0)])

        assert [x.coords for x in mu.support_list] == [(2,), (5,), (7,)]
        assert list(mu.weight_vector()) == [0.5, 1.0, 2.0]

    def test_repeated_atoms_add_up(self, z8):
        """Test that the same point given twice accumulates its weight."""
        mu = from_atoms(z8, [((1,), 0.25), ((9,), 0.5)])

        assert len(mu) == 1
        assert mu.weight(z8.element(1)) == 0.75

    def test_zero_weights_are_dropped(self, z8):
        """Test that the support holds only strictly positive atoms."""
        mu = from_atoms(z8, [((0,), 0.0), ((3,), 1.0)])

        assert mu.support == frozenset({z8.element(3)})

    @pytest.mark.parametrize("weight", [-1.0, float("nan"), float("inf")])
    def test_invalid_weights_raise(self, z8, weight):
        """Test that negative and non-finite weights are rejected."""
        with pytest.raises(DomainError, match="invalid weight"):
            from_atoms(z8, [((0,), weight)])

    def test_kind_mismatch_raises(self, z8):
        """Test that characters cannot be atoms of a measure on the group."""
        with pytest.raises(StructuralError):
            AtomicMeasure(z8, {z8.character(1): 1.0}, GroupElement)

    def test_total_mass_and_zero(self, z8):
        """Test total mass and the zero measure."""
        assert haar(z8).total_mass == 8
        assert haar(z8, "probability").total_mass == pytest.approx(1.0)
        assert zero_measure(z8).is_zero()
        assert zero_measure(z8, dual=True).on_dual

    def test_unknown_haar_normalization_raises(self, z8):
        """Test that only counting and probability normalizations exist."""
        with pytest.raises(StructuralError, match="unknown Haar normalization"):
            haar(z8, "lebesgue")

    def test_dirac_on_dual(self, z8):
        """Test that a Dirac mass at a character lives on the dual."""
        delta = dirac(z8, z8.character(3))

        assert delta.on_dual
        assert delta.weight(z8.character(3)) == 1.0

    def test_equality_and_isclose(self, z8):
        """Test exact equality and tolerance-based comparison."""
        mu = from_atoms(z8, [((1,), 1.0)])
        nearly = from_atoms(z8, [((1,), 1.0 + 1e-14)])

        assert mu == from_atoms(z8, [((1,), 1.0)])
        assert mu != nearly
        assert mu.isclose(nearly)
        assert not mu.isclose(from_atoms(z8, [((2,), 1.0)]))


class TestCalculus:
    """Test cases for convolution, translation and friends."""

    def test_convolution_of_diracs(self, z8):
        """Test delta_x * delta_y = delta_{x+y}."""
        result = convolve(dirac(z8, z8.element(5)), dirac(z8, z8.element(6)))

        assert result == dirac(z8, z8.element(3))

    def test_convolution_mass_is_multiplicative(self, z8):
        """Test (mu * lam)(G) = mu(G) lam(G)."""
        mu = from_atoms(z8, [((0,), 0.5), ((1,), 1.5)])
        lam = from_atoms(z8, [((0,), 2.0), ((4,), 1.0)])

        assert convolve(mu, lam).total_mass == pytest.approx(mu.total_mass * lam.total_mass)

    def test_convolution_is_commutative(self, z8):
        """Test mu * lam = lam * mu."""
        mu = from_atoms(z8, [((0,), 0.5), ((3,), 1.5)])
        lam = from_atoms(z8, [((1,), 2.0), ((4,), 1.0)])

        assert convolve(mu, lam).isclose(convolve(lam, mu))

    @pytest.mark.parametrize("moduli", [(8,), (6, 2), (3, 3, 2)])
    def test_convolution_is_associative(self, moduli):
        """Test (mu * lam) * rho = mu * (lam * rho) on random measures."""
        group = FiniteAbelianGroup(moduli)
        rng = np.random.default_rng(len(moduli))
        for _ in range(10):
            mu, lam, rho = (random_measure(group, rng, 4) for _ in range(3))

            assert convolve(convolve(mu, lam), rho).isclose(convolve(mu, convolve(lam, rho)))

    @pytest.mark.parametrize("moduli", [(8,), (6, 2)])
    def test_dirac_at_zero_is_the_identity(self, moduli):
        """Test delta_0 * mu = mu * delta_0 = mu."""
        group = FiniteAbelianGroup(moduli)
        rng = np.random.default_rng(3)
        identity = dirac(group, group.zero())
        for _ in range(10):
            mu = random_measure(group, rng, 5)

            assert convolve(identity, mu).isclose(mu)
            assert convolve(mu, identity).isclose(mu)

    def test_translate_moves_the_support(self):
        """Test support(translate(mu, a)) = support(mu) + a for every shift."""
        group = FiniteAbelianGroup((4, 3))
        rng = np.random.default_rng(5)
        for _ in range(5):
            mu = random_measure(group, rng, 4)
            for a in group.elements():
                shifted = translate(mu, a)

                assert shifted.support == group.sumset(mu.support, [a])
                assert shifted.total_mass == pytest.approx(mu.total_mass)

    def test_cannot_mix_group_and_dual(self, z8):
        """Test that a group measure and a dual measure do not combine."""
        with pytest.raises(StructuralError, match="measure on the dual"):
            convolve(haar(z8), haar(z8, dual=True))

    def test_cannot_mix_groups(self, z8):
        """Test that measures on different groups do not combine."""
        with pytest.raises(StructuralError, match="different groups"):
            add(haar(z8), haar(FiniteAbelianGroup.cyclic(4)))

    def test_translate_equals_dirac_convolution(self, z8):
        """Test translate(mu, a) = delta_a * mu."""
        mu = from_atoms(z8, [((0,), 0.5), ((6,), 1.5)])
        a = z8.element(3)

        assert translate(mu, a) == convolve(dirac(z8, a), mu)

    def test_translate_by_wrong_kind_raises(self, z8):
        """Test that a group measure cannot be shifted by a character."""
        with pytest.raises(StructuralError):
            translate(haar(z8), z8.character(1))

    def test_reflect(self, z8):
        """Test mu(-.)."""
        mu = from_atoms(z8, [((1,), 2.0)])

        assert reflect(mu) == from_atoms(z8, [((7,), 2.0)])

    def test_restrict_keeps_exact_weights(self, z8):
        """Test restriction to a subset."""
        mu = from_atoms(z8, [((0,), 0.5), ((1,), 1.5), ((2,), 2.5)])

        restricted = restrict(mu, [z8.element(1), z8.element(2), z8.element(5)])

        assert restricted == from_atoms(z8, [((1,), 1.5), ((2,), 2.5)])

    def test_restrict_to_empty_warns(self, z8, mocker):
        """Test that a zero-mass restriction is logged as a warning."""
        warn = mocker.patch("src.measure.logger.warn")

        restricted = restrict(haar(z8), [])

        assert restricted.is_zero()
        warn.assert_called_once()

    def test_reweight_and_scale(self, z8):
        """Test density reweighting and scalar multiples."""
        mu = from_atoms(z8, [((0,), 1.0), ((1,), 2.0)])
        density = DensityFunction({z8.element(0): 3.0, z8.element(1): 0.5})

        assert reweight(mu, density) == from_atoms(z8, [((0,), 3.0), ((1,), 1.0)])
        assert scale(mu, 2.0) == from_atoms(z8, [((0,), 2.0), ((1,), 4.0)])
        assert scale(mu, 0.0).is_zero()

    def test_negative_scale_raises(self, z8):
        """Test that scaling by a negative factor is rejected."""
        with pytest.raises(DomainError):
            scale(haar(z8), -1.0)

    def test_add(self, z8):
        """Test that sums add weights atomwise."""
        mu = from_atoms(z8, [((0,), 1.0)])
        lam = from_atoms(z8, [((0,), 0.5), ((2,), 1.0)])

        assert add(mu, lam) == from_atoms(z8, [((0,), 1.5), ((2,), 1.0)])

    def test_translate_restrict_integrates_shifted_function(self, z8):
        """Test sum f dT_a(mu|_{F+a}) = sum over F + a of f(x - a) mu({x})."""
        mu = from_atoms(z8, [((n,), 1.0 + n) for n in range(8)])
        subset = [z8.element(0), z8.element(1)]
        a = z8.element(3)

        result = translate_restrict(mu, subset, a)

        assert result == from_atoms(z8, [((0,), 4.0), ((1,), 5.0)])

    def test_measure_of(self, z8):
        """Test mu(E) with points outside the support."""
        mu = from_atoms(z8, [((0,), 1.0), ((1,), 2.0)])

        assert measure_of(mu, [z8.element(1), z8.element(5)]) == 2.0


class TestDensities:
    """Test cases for densities and Radon-Nikodym derivatives."""

    def test_density_must_be_positive(self, z8):
        """Test that zero or negative density values are rejected."""
        with pytest.raises(DomainError):
            DensityFunction({z8.element(0): 0.0})

    def test_density_bounds(self, z8):
        """Test lower, upper and sup norm."""
        density = DensityFunction({z8.element(0): 0.5, z8.element(1): 4.0})

        assert density.lower == 0.5
        assert density.upper == 4.0
        assert density.sup_norm == 4.0

    def test_density_outside_domain_raises(self, z8):
        """Test that evaluating off the domain fails."""
        density = DensityFunction.constant([z8.element(0)], 2.0)

        with pytest.raises(StructuralError):
            density(z8.element(1))

    def test_radon_nikodym(self, z8):
        """Test atomwise weight ratios."""
        numerator = from_atoms(z8, [((0,), 1.0), ((1,), 3.0)])
        base = from_atoms(z8, [((0,), 2.0), ((1,), 1.0), ((2,), 5.0)])

        derivative = radon_nikodym(numerator, base)

        assert derivative(z8.element(0)) == 0.5
        assert derivative(z8.element(1)) == 3.0
        assert essential_bounds(numerator, base) == (0.5, 3.0)

    def test_radon_nikodym_names_offending_atom(self, z8):
        """Test that a numerator atom outside the base support is reported."""
        numerator = from_atoms(z8, [((4,), 1.0)])

        with pytest.raises(DomainError, match=r"atom \[4\]"):
            radon_nikodym(numerator, from_atoms(z8, [((0,), 1.0)]))

    def test_derivative_of_translated_restriction(self):
        """Test that the derivative exists exactly when the shifted atoms lie in the reference support."""
        group = FiniteAbelianGroup((6, 2))
        rng = np.random.default_rng(11)
        elements = group.elements()
        outcomes = set()
        for _ in range(60):
            mu = random_measure(group, rng, 8)
            source = random_measure(group, rng, 6)
            subset = [elements[i] for i in rng.choice(len(elements), size=3, replace=False)]
            a = elements[rng.integers(len(elements))]
            numerator = translate_restrict(source, subset, a)
            expected = numerator.support <= mu.support

            try:
                derivative = radon_nikodym(numerator, mu)
            except DomainError:
                assert not expected
                outcomes.add(False)
            else:
                assert expected
                outcomes.add(True)
                for x, weight in numerator.items():
                    assert derivative(x) * mu.weight(x) == pytest.approx(weight)

        assert outcomes == {True, False}


class TestPackingPairs:
    """Test cases for the packing-pair detector."""

    def test_digit_sets_pack(self):
        """Test that {0, 1} and {0, 2} pack in Z_8."""
        group = FiniteAbelianGroup.cyclic(8)
        mu = from_atoms(group, [((0,), 0.5), ((1,), 0.5)])
        lam = from_atoms(group, [((0,), 0.5), ((2,), 0.5)])

        report = is_packing_pair(mu, lam)

        assert report.packing
        assert report.product_rule_holds
        assert report.disjoint_translates
        assert report.samples == 16

    def test_overlapping_differences_do_not_pack(self):
        """Test that a shared nonzero difference gives a witness."""
        group = FiniteAbelianGroup.cyclic(8)
        mu = from_atoms(group, [((0,), 1.0), ((2,), 1.0)])
        lam = from_atoms(group, [((1,), 1.0), ((3,), 1.0)])

        report = is_packing_pair(mu, lam)

        assert not report.packing
        assert report.witness == group.element(2)
        assert report.product_rule_holds is None

    def test_every_two_point_pair_in_z8(self):
        """Test the detector against brute force on every pair of two-point supports in Z_8."""
        group = FiniteAbelianGroup.cyclic(8)
        elements = group.elements()
        pairs = [(x, y) for i, x in enumerate(elements) for y in elements[i + 1:]]
        packings = 0
        for first in pairs:
            for second in pairs:
                mu = AtomicMeasure(group, {first[0]: 1.0, first[1]: 2.0}, GroupElement)
                lam = AtomicMeasure(group, {second[0]: 0.5, second[1]: 1.5}, GroupElement)
                sums = group.sumset(mu.support, lam.support)

                report = is_packing_pair(mu, lam, samples=2)

                assert report.packing == (len(sums) == 4)
                if report.packing:
                    packings += 1
                    assert report.disjoint_translates
                    assert report.product_rule_holds

        assert 0 < packings < len(pairs) ** 2

    @pytest.mark.parametrize("moduli", [(16,), (4, 4), (2, 2, 2, 2), (8, 8), (16, 16), (256,)])
    def test_packing_pairs_have_disjoint_translates(self, moduli):
        """Test that packing pairs have pairwise disjoint translates, checked by enumeration."""
        group = FiniteAbelianGroup(moduli)
        rng = np.random.default_rng(group.order)
        for _ in range(30):
            mu = random_measure(group, rng, int(rng.integers(2, 5)))
            lam = random_measure(group, rng, int(rng.integers(2, 5)))
            zero = group.zero()
            shared = (group.difference_set(mu.support) & group.difference_set(lam.support)) - {zero}
            translates = [group.sumset(mu.support, [y]) for y in lam.support]
            enumerated = sum(len(t) for t in translates) == len(frozenset().union(*translates))

            report = is_packing_pair(mu, lam, samples=4)

            assert report.packing == (not shared)
            if report.packing:
                assert enumerated
                assert report.disjoint_translates
                assert report.product_rule_holds
