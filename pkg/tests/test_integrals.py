"""Closed-form integrals against direct quadrature."""

import math

import pytest

from thzrf.errors import DomainError
from thzrf.services.integrals import (
    i2_spec, i4_spec, integral_i1, integral_i2, integral_i3, integral_i4,
)
from thzrf.services.oracle import oracle_i1, oracle_i2, oracle_i3, oracle_i4


class TestElementaryIntegrals:
    def test_i1_by_hand(self):
        assert integral_i1(-0.5, 2.0) == pytest.approx(math.sqrt(math.pi) / math.sqrt(2.0), rel=1e-14)

    @pytest.mark.parametrize("chi1,chi2", [(-0.5, 0.3), (0.0, 1.0), (2.7, 5.0)])
    def test_i1_matches_quadrature(self, chi1, chi2):
        assert integral_i1(chi1, chi2) == pytest.approx(oracle_i1(chi1, chi2).value, rel=1e-9)

    @pytest.mark.parametrize("chi1,chi2,chi3", [(0.0, 3.0, 1.0), (-0.5, 2.0, 1.5), (1.2, 2.0, 0.5), (2.0, 1.0, 0.0)])
    def test_i3_matches_quadrature(self, chi1, chi2, chi3):
        assert integral_i3(chi1, chi2, chi3) == pytest.approx(oracle_i3(chi1, chi2, chi3).value, rel=1e-8)

    def test_i3_without_growth_is_i1(self):
        assert integral_i3(0.5, 2.0, 0.0) == pytest.approx(integral_i1(0.5, 2.0), rel=1e-14)

    @pytest.mark.parametrize("args", [(-1.0, 2.0, 1.0), (0.0, 1.0, 1.0), (0.0, 1.0, -0.1)])
    def test_i3_domain(self, args):
        with pytest.raises(DomainError):
            integral_i3(*args)

    def test_i1_domain(self):
        with pytest.raises(DomainError):
            integral_i1(-1.0, 1.0)


class TestFoxHIntegrals:
    @pytest.mark.parametrize("chi1", [-0.5, 0.0, 1.0])
    @pytest.mark.parametrize("chi2", [0.5, 2.0])
    def test_i2_matches_quadrature(self, constants_30db, chi1, chi2):
        expected = oracle_i2(constants_30db, chi1, chi2).value
        assert integral_i2(constants_30db, chi1, chi2) == pytest.approx(expected, rel=1e-6)

    def test_i2_spec_variables(self, constants_30db):
        k = constants_30db
        spec = i2_spec(k, -0.5, 0.25)
        assert spec.variables[0] == pytest.approx(k.mu * (4.0 * k.A) ** (k.alpha / 2))
        assert spec.variables[1] == pytest.approx(4.0 * k.C)
        assert spec.outer_params[0].weights == (k.alpha / 2, 1.0)

    def test_i2_domain(self, constants_30db):
        with pytest.raises(DomainError):
            i2_spec(constants_30db, -1.0, 1.0)
        with pytest.raises(DomainError):
            i2_spec(constants_30db, 0.0, 0.0)

    def test_i4_collapses_without_growth(self, constants_30db):
        assert integral_i4(constants_30db, 1.5, 0.0) == integral_i2(constants_30db, 0.0, 1.5)

    def test_i4_domain(self, constants_30db):
        with pytest.raises(DomainError):
            i4_spec(constants_30db, 0.5, 0.5)

    @pytest.mark.slow
    def test_i4_small_growth_is_close_to_i2(self, constants_30db):
        """chi2 = 1e-6 still takes the trivariate contour."""
        spec = i4_spec(constants_30db, 1.5, 1e-6)
        assert spec.variables[0] == pytest.approx(1e-6 / (1.5 - 1e-6), rel=1e-12)
        value = integral_i4(constants_30db, 1.5, 1e-6)
        assert value == pytest.approx(integral_i2(constants_30db, 0.0, 1.5), rel=1e-5)


I2_GRID = [(chi1, chi2) for chi1 in (-0.5, -0.25, 0.0, 0.5, 1.0) for chi2 in (0.25, 0.5, 1.0, 2.0)]
I4_GRID = [(chi1, ratio * chi1) for chi1 in (0.5, 1.0, 1.5, 2.0, 3.0) for ratio in (0.1, 0.3, 0.5, 0.7)]


@pytest.mark.slow
class TestFoxHGrid:
    """Fox-H closed forms against quadrature over a 20-point parameter grid each."""

    @pytest.mark.parametrize("chi1,chi2", I2_GRID)
    def test_i2(self, constants_30db, chi1, chi2):
        expected = oracle_i2(constants_30db, chi1, chi2).value
        assert integral_i2(constants_30db, chi1, chi2) == pytest.approx(expected, rel=1e-6)

    @pytest.mark.parametrize("chi1,chi2", I4_GRID)
    def test_i4(self, constants_30db, chi1, chi2):
        expected = oracle_i4(constants_30db, chi1, chi2).value
        assert integral_i4(constants_30db, chi1, chi2) == pytest.approx(expected, rel=1e-6)
