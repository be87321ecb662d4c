"""Tests for representations, psychometric families, and their checks."""

import csv
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from simlaw import (
    Constant,
    Grid,
    TableCurve,
    affine,
    balanced_parallel_rep,
    check_family_properties,
    decompose_balanced_parallel,
    export_psychometric_csv,
    fechnerian,
    gain_control,
    identity_scale,
    log_scale,
    logistic_table,
    make_family,
    make_psychometric,
    parallel,
    representation_from_spec,
    representation_residual,
    sensitivity_from_psychometric,
    subtractive,
)
from simlaw.errors import (
    DomainError,
    GridSymmetryError,
    LinkRangeError,
    NonMonotoneError,
    NotInvertibleError,
    ParamError,
    RangeError,
)

WIDE = identity_scale(domain=(-50.0, 50.0))


class TestRepresentationEvaluation:
    def test_fechnerian_with_log_scale_is_multiplicative(self):
        rep = fechnerian(log_scale(1.0, 0.0))
        assert rep.xi(2.0, 1.0) == pytest.approx(2.0 * math.e, rel=1e-12)

    def test_subtractive_combines_two_scales(self):
        rep = subtractive(WIDE, affine(1.0, -1.0))
        assert rep.xi(2.0, 0.5) == pytest.approx(1.5)

    def test_gain_control_scales_the_state(self):
        rep = gain_control(WIDE, Constant(2.0))
        assert rep.xi(1.0, 0.25) == pytest.approx(1.5)

    def test_parallel_adds_separate_terms(self):
        rep = parallel(affine(2.0, 0.0), affine(1.0, 1.0))
        assert rep.xi(1.5, 0.5) == pytest.approx(4.5)

    def test_balanced_parallel_shifts_by_the_offset(self):
        rep = balanced_parallel_rep(affine(1.0, -0.5))
        assert rep.xi(2.0, 0.75) == pytest.approx(2.25)

    def test_invertibility_is_enforced_where_needed(self):
        curve = TableCurve([0.0, 1.0], [0.0, 1.0])
        with pytest.raises(NotInvertibleError):
            fechnerian(curve)
        with pytest.raises(ParamError):
            subtractive(WIDE, 3.0)


class TestRepresentationResidual:
    def _grid(self):
        return Grid.build(np.linspace(0.5, 1.5, 9), [1.0], np.linspace(0.1, 0.9, 9))

    def test_additive_family_matches_subtractive_form(self):
        fam = make_family("shifted_power", {"a": 1.0, "c": 1.0, "rho": 1.0, "r": 1.0, "eps": 0.0})
        rep = representation_residual(fam, subtractive(WIDE, WIDE), self._grid())
        assert rep.passed
        assert rep.max_abs <= 1e-12

    def test_exponential_family_matches_log_fechnerian_form(self):
        fam = make_family("fechner_exp", {"rate": 1.0})
        rep = representation_residual(fam, fechnerian(log_scale(1.0, 0.0)), self._grid())
        assert rep.passed

    def test_gain_family_matches_gain_control_form(self):
        fam = make_family("weber", {"k": affine(1.0, 1.0)})
        model = gain_control(identity_scale(domain=(-20.0, 20.0)), identity_scale(domain=(0.01, 100.0)))
        rep = representation_residual(fam, model, self._grid())
        assert rep.passed

    def test_mismatched_pair_fails(self):
        fam = make_family("fechner_exp", {"rate": 1.0})
        rep = representation_residual(fam, subtractive(WIDE, WIDE), self._grid())
        assert not rep.passed


class TestLogisticTable:
    def test_balance_holds_exactly_at_arbitrary_points(self):
        t = logistic_table(halfwidth=8.0, knots=101)
        for x in np.linspace(-8.0, 8.0, 33):
            assert t.eval(x) + t.eval(-x) == 0.5 + 0.5  # exact, not approximate

    def test_midpoint_and_monotonicity(self):
        t = logistic_table()
        assert t.eval(0.0) == 0.5
        assert t.is_increasing()
        assert t.eval(2.0) == pytest.approx(1.0 / (1.0 + math.exp(-2.0)), abs=1e-6)

    def test_knot_count_must_be_odd(self):
        with pytest.raises(ParamError):
            logistic_table(knots=4)
        with pytest.raises(ParamError):
            logistic_table(halfwidth=-1.0)


class TestPsychometricFamilies:
    def _family(self, interval=(-6.0, 6.0)):
        return make_psychometric(fechnerian(WIDE), logistic_table(), interval)

    def test_statistic_of_translation_model_is_the_difference(self):
        pf = self._family()
        assert pf.statistic(1.0, 3.5) == pytest.approx(2.5, abs=1e-12)

    def test_probability_is_link_of_statistic(self):
        pf = self._family()
        t = logistic_table()
        assert pf.p(1.0, 3.5) == pytest.approx(t.eval(2.5), abs=1e-12)

    def test_parallel_statistic_inverts_the_state_scale(self):
        rep = parallel(affine(2.0, 0.0), affine(1.0, 1.0, domain=(-20.0, 20.0)))
        pf = make_psychometric(rep, logistic_table(), (-3.0, 3.0))
        # xi_s(a) = 2a + s + 1, so the statistic at (a, x) solves x = 2a + s + 1.
        assert pf.statistic(0.5, 2.0) == pytest.approx(0.0, abs=1e-12)

    def test_gain_control_statistic_rejects_vanishing_gain(self):
        rep = gain_control(WIDE, affine(1.0, 0.0, domain=(-10.0, 10.0)))
        pf = make_psychometric(rep, logistic_table(), (0.5, 3.0))
        with pytest.raises(DomainError):
            pf.statistic(0.0, 1.0)

    def test_link_range_must_sit_inside_the_unit_interval(self):
        with pytest.raises(LinkRangeError):
            make_psychometric(fechnerian(WIDE), affine(1.0, 0.0, domain=(-6.0, 6.0)), (-3.0, 3.0))

    def test_link_must_increase(self):
        with pytest.raises(NonMonotoneError):
            make_psychometric(fechnerian(WIDE), affine(-0.05, 0.5, domain=(-3.0, 3.0)), (-3.0, 3.0))

    def test_parallel_state_scale_must_be_invertible(self):
        with pytest.raises(NonMonotoneError):
            make_psychometric(parallel(affine(1.0, 0.0), Constant(1.0)), logistic_table(), (-3.0, 3.0))

    @settings(max_examples=60)
    @given(a=st.floats(-1.0, 1.0), pi=st.floats(0.1, 0.9))
    def test_quantile_round_trip(self, a, pi):
        pf = self._family()
        x = sensitivity_from_psychometric(pf, a, pi)
        assert pf.p(a, x) == pytest.approx(pi, abs=1e-9)

    def test_unattained_probability_raises(self):
        pf = self._family(interval=(-1.0, 1.0))
        with pytest.raises(RangeError):
            sensitivity_from_psychometric(pf, 0.0, 0.999)


class TestFamilyProperties:
    def _check(self, rep, interval=(-6.0, 6.0)):
        pf = make_psychometric(rep, logistic_table(), interval)
        return check_family_properties(
            pf, backgrounds=np.linspace(-1.0, 1.0, 5), probs=np.linspace(0.2, 0.8, 7)
        )

    def test_translation_model_has_all_three_properties(self):
        parts = self._check(fechnerian(WIDE))
        assert parts["anchored"].passed
        assert parts["parallel"].passed
        assert parts["balanced"].passed
        assert parts["balanced"].max_abs == 0.0

    def test_offset_model_is_parallel_but_not_balanced(self):
        parts = self._check(subtractive(WIDE, affine(2.0, 0.0)))
        assert parts["parallel"].passed
        assert not parts["balanced"].passed

    def test_state_dependent_gain_breaks_parallelism(self):
        rep = gain_control(WIDE, affine(1.0, 2.0, domain=(-1.5, 10.0)))
        parts = self._check(rep)
        assert not parts["parallel"].passed


class TestBalancedDecomposition:
    def _grid(self, n_s=17):
        return Grid.build(np.linspace(0.5, 2.0, 7), [1.0], np.linspace(0.1, 0.9, n_s))

    def test_monotone_offset_is_recovered_invertibly(self):
        fam = make_family("balanced_parallel", {"offset": affine(1.0, -0.5)})
        curve, rep = decompose_balanced_parallel(fam, self._grid())
        assert rep.passed
        assert rep.parts["x_independence"].max_abs <= 1e-12
        assert rep.parts["antisymmetry"].max_abs <= 1e-12
        assert curve.invert(0.2) == pytest.approx(0.7, abs=1e-9)

    def test_oscillating_odd_offset_still_balances(self):
        knots = np.linspace(0.0, 1.0, 201)
        fam = make_family(
            "balanced_parallel", {"offset": TableCurve(knots, np.sin(2.0 * np.pi * knots))}
        )
        curve, rep = decompose_balanced_parallel(fam, self._grid())
        assert rep.passed
        assert isinstance(curve, TableCurve)
        assert not hasattr(curve, "invert")

    def test_simple_additive_family_fails_antisymmetry(self):
        fam = make_family("shifted_power", {"a": 1.0, "c": 1.0, "rho": 1.0, "r": 1.0, "eps": 0.0})
        curve, rep = decompose_balanced_parallel(fam, self._grid())
        assert not rep.passed
        assert rep.parts["x_independence"].passed
        assert rep.parts["antisymmetry"].max_abs >= 0.5

    def test_state_grid_must_be_mirror_symmetric(self):
        fam = make_family("balanced_parallel", {"offset": affine(1.0, -0.5)})
        bad = Grid.build(np.linspace(0.5, 2.0, 7), [1.0], np.linspace(0.1, 0.8, 8))
        with pytest.raises(GridSymmetryError):
            decompose_balanced_parallel(fam, bad)


class TestCsvExport:
    def test_rows_match_family_probabilities(self, tmp_path):
        pf = make_psychometric(fechnerian(WIDE), logistic_table(), (-6.0, 6.0))
        path = tmp_path / "curves.csv"
        n = export_psychometric_csv(pf, [-0.5, 0.5], np.linspace(-2.0, 2.0, 5), path)
        assert n == 10
        with open(path) as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["a", "x", "p"]
        assert len(rows) == 11
        a, x, p = (float(v) for v in rows[1])
        assert p == pf.p(a, x)


class TestSpecParsing:
    def test_fechnerian_spec_round_trip(self):
        rep = representation_from_spec(
            {"kind": "fechnerian", "u": {"kind": "log", "a": 1.0, "b": 0.0}}
        )
        assert rep.xi(2.0, 1.0) == pytest.approx(2.0 * math.e, rel=1e-12)

    def test_unknown_kind_raises(self):
        with pytest.raises(ParamError):
            representation_from_spec({"kind": "mystery"})
        with pytest.raises(ParamError):
            representation_from_spec({})
