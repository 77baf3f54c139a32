"""Contour quadrature of Meijer-G and multivariate Fox-H functions."""

import math

import mpmath
import pytest

from thzrf.errors import ContourError, EvaluationError, NodeBudgetError
from thzrf.schemas import ContourConfig, FoxHSpec, InnerParams, MeijerGSpec, OuterParam, Refinement
from thzrf.services import mellin_barnes
from thzrf.services.mellin_barnes import fox_h, fox_h_bivariate, fox_h_trivariate, meijer_g, meijer_inner


def composite_spec(mu: float, ratio: float) -> MeijerGSpec:
    return MeijerGSpec(a_bot=(1.0, ratio + 1.0), b_top=(mu, 0.0, ratio))


def mpmath_composite(mu: float, ratio: float, z: float) -> float:
    return float(mpmath.meijerg([[], [1, ratio + 1]], [[mu, 0, ratio], []], z))


EXPONENTIAL = InnerParams(d=((0.0, 1.0),), m=1)


class TestMeijerG:
    """Single-line quadrature against arbitrary-precision values."""

    @pytest.mark.parametrize("mu,ratio", [(2.25, 2.934782608695652), (1.0, 1.5), (3.1, 3.39)])
    @pytest.mark.parametrize("z", [1e-3, 0.1, 1.0, 5.0, 30.0])
    def test_composite_kernel_matches_mpmath(self, mu, ratio, z):
        value = meijer_g(composite_spec(mu, ratio), z)
        assert value == pytest.approx(mpmath_composite(mu, ratio, z), rel=1e-8, abs=1e-14)

    def test_exponential_special_case(self):
        """G^{1,0}_{0,1}[x | -; 0] = e^{-x}."""
        assert meijer_g(MeijerGSpec(b_top=(0.0,)), 2.5) == pytest.approx(math.exp(-2.5), rel=1e-10)

    def test_fixed_refinement(self):
        contour = ContourConfig(refinement=Refinement.FIXED, nodes_per_axis=512)
        value = meijer_g(composite_spec(2.25, 2.9), 1.0, contour)
        assert value == pytest.approx(mpmath_composite(2.25, 2.9, 1.0), rel=1e-8)

    def test_explicit_offset_outside_strip(self):
        with pytest.raises(ContourError):
            meijer_g(composite_spec(2.25, 2.9), 1.0, ContourConfig(offsets=(-1.0,)))

    def test_nonpositive_argument(self):
        with pytest.raises(ValueError):
            meijer_g(composite_spec(2.25, 2.9), 0.0)

    def test_overlapping_pole_families_rejected(self):
        with pytest.raises(ValueError):
            MeijerGSpec(a_top=(1.5,), b_top=(0.0,))


class TestFoxH:
    """Univariate, separable and coupled multivariate evaluation."""

    def test_univariate_equals_meijer(self):
        spec = composite_spec(2.25, 2.9)
        fox = fox_h(FoxHSpec(variables=(0.7,), inner_params=(meijer_inner(spec),)))
        assert fox == pytest.approx(meijer_g(spec, 0.7), rel=1e-10)

    def test_separable_product(self):
        """Without coupling factors the function factorizes: e^{-z1} e^{-z2}."""
        spec = FoxHSpec(
            variables=(0.7, 2.0),
            inner_params=(EXPONENTIAL, EXPONENTIAL),
            contour=ContourConfig(refinement=Refinement.FIXED, nodes_per_axis=800),
        )
        assert fox_h_bivariate(spec) == pytest.approx(math.exp(-2.7), rel=1e-9)

    def test_coupled_bivariate_reduces_to_gamma_ratio(self):
        """
        With Gamma(s) Gamma(t) and coupling Gamma(1 - a - s - t) the integral is
        Gamma(1 - a) (1 + z1 + z2)^{-(1 - a)}.
        """
        a = -0.5
        spec = FoxHSpec(
            variables=(0.4, 1.3),
            outer_params=(OuterParam(coefficient=a, weights=(1.0, 1.0)),),
            inner_params=(EXPONENTIAL, EXPONENTIAL),
        )
        expected = math.gamma(1.0 - a) * (1.0 + 0.4 + 1.3) ** (-(1.0 - a))
        assert fox_h_bivariate(spec) == pytest.approx(expected, rel=1e-8)

    def test_node_budget(self):
        spec = FoxHSpec(
            variables=(0.4, 1.3),
            outer_params=(OuterParam(coefficient=0.0, weights=(1.0, 1.0)),),
            inner_params=(EXPONENTIAL, EXPONENTIAL),
        )
        with pytest.raises(NodeBudgetError):
            fox_h(spec, node_budget=100)

    def test_rank_checks(self):
        spec = FoxHSpec(variables=(1.0,), inner_params=(EXPONENTIAL,))
        with pytest.raises(ValueError):
            fox_h_bivariate(spec)
        with pytest.raises(ValueError):
            fox_h_trivariate(spec)

    def test_offsets_crossing_coupling_poles(self):
        spec = FoxHSpec(
            variables=(0.4, 1.3),
            outer_params=(OuterParam(coefficient=0.0, weights=(1.0, 1.0)),),
            inner_params=(EXPONENTIAL, EXPONENTIAL),
            contour=ContourConfig(offsets=(0.6, 0.6)),
        )
        with pytest.raises(ContourError):
            fox_h(spec)

    def test_spec_rejects_nonpositive_variable(self):
        with pytest.raises(ValueError):
            FoxHSpec(variables=(0.0,), inner_params=(EXPONENTIAL,))


@pytest.fixture
def refinement_history(monkeypatch):
    """Estimates of every halving step taken while the test runs."""
    history = []
    real_refine = mellin_barnes._refine

    def recording(evaluate, fixed_step, gap_step, contour, label, history_=None):
        return real_refine(evaluate, fixed_step, gap_step, contour, label, history)

    monkeypatch.setattr(mellin_barnes, "_refine", recording)
    return history


def assert_approaches(history, final):
    assert len(history) >= 2
    assert history[-1] == pytest.approx(final, rel=1e-15, abs=1e-300)
    distances = [abs(value - final) for value in history]
    slack = 1e-11 * abs(final)
    for before, after in zip(distances, distances[1:]):
        assert after <= before + slack


class TestRefinement:
    def test_meijer_estimates_approach_limit(self, refinement_history):
        value = meijer_g(composite_spec(2.25, 2.9), 1.0)
        assert_approaches(refinement_history, value)
        assert value == pytest.approx(mpmath_composite(2.25, 2.9, 1.0), rel=1e-8)

    def test_coupled_estimates_approach_limit(self, refinement_history):
        spec = FoxHSpec(
            variables=(0.4, 1.3),
            outer_params=(OuterParam(coefficient=-0.5, weights=(1.0, 1.0)),),
            inner_params=(EXPONENTIAL, EXPONENTIAL),
        )
        value = fox_h_bivariate(spec)
        assert_approaches(refinement_history, value)

    def test_fixed_mode_records_nothing(self, refinement_history):
        meijer_g(composite_spec(2.25, 2.9), 1.0, ContourConfig(refinement=Refinement.FIXED))
        assert refinement_history == []

    def test_scale_overflow_is_an_evaluation_error(self):
        assert mellin_barnes._scale(1.0, "H") == pytest.approx(math.e)
        with pytest.raises(EvaluationError, match="beyond double range"):
            mellin_barnes._scale(800.0, "H")
