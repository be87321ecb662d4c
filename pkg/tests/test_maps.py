"""Tests for state-change maps, gain maps, and their structure checks."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from simlaw import (
    Constant,
    Grid,
    additive_log_eta,
    affine_shift_eta,
    affine,
    check_exponent_invariance,
    check_mult_translational,
    conjugate_eta,
    derive_gamma,
    eta_from_spec,
    extract_conjugator,
    gamma_from_spec,
    identity_eta,
    identity_scale,
    lambda_identity,
    lambda_power,
    lambda_power_in_s,
    log_blend_eta,
    power_scale,
    power_scale_eta,
    ratio_gamma,
    s_only_eta,
    tabulated_eta,
)
from simlaw.errors import DomainError, NotInvertibleError, ParamError


def _boundary_grid(lam_hi=2.0, s_hi=1.0, n=9, **kw):
    """Grid that samples lambda = 1 and s = 0, as the structure check requires."""
    return Grid.build([1.0], np.linspace(1.0, lam_hi, n), np.linspace(0.0, s_hi, n), **kw)


class TestEtaEvaluation:
    def test_power_scale_formula(self):
        eta = power_scale_eta(2.0)
        assert eta.eval(1.5, 0.4) == pytest.approx(0.9, abs=1e-12)
        assert eta(1.0, 0.7) == 0.7

    def test_conjugate_matches_power_scale(self):
        h = power_scale(1.0, 2.0, 0.0, domain=(0.0, 100.0))
        eta = conjugate_eta(h)
        ref = power_scale_eta(2.0)
        for lam in (0.5, 0.9, 1.7):
            for s in (0.25, 1.0, 3.0):
                assert eta.eval(lam, s) == pytest.approx(ref.eval(lam, s), rel=1e-12)

    def test_conjugate_fixes_identity_argument_exactly(self):
        h = power_scale(1.0, 3.0, 0.0, domain=(0.0, 100.0))
        eta = conjugate_eta(h)
        assert eta.eval(1.0, 0.7) == 0.7

    def test_affine_shift_formula(self):
        eta = affine_shift_eta(1.0, 0.5)
        assert eta.eval(2.0, 1.0) == pytest.approx(0.75, abs=1e-12)
        assert eta.eval(2.0, 0.0) == pytest.approx(0.25, abs=1e-12)

    def test_additive_log_formula(self):
        eta = additive_log_eta(2.0, 4.0)
        assert eta.eval(math.e, 0.3) == pytest.approx(0.8, abs=1e-12)

    def test_log_blend_formula(self):
        kappa, beta, delta = 1.5, 0.1, 0.5
        eta = log_blend_eta(kappa, beta, delta)
        lam, s = 1.7, 0.6
        inner = lam ** (-delta) * (math.exp(-kappa * s) - beta) + beta
        assert eta.eval(lam, s) == pytest.approx(-math.log(inner) / kappa, abs=1e-12)

    def test_log_blend_rejects_nonpositive_inner_value(self):
        eta = log_blend_eta(1.0, 0.9, -3.0)
        with pytest.raises(DomainError):
            eta.eval(3.0, 5.0)

    def test_s_only_ignores_lambda(self):
        eta = s_only_eta(affine(0.5, 0.0))
        assert eta.eval(0.3, 0.8) == eta.eval(7.0, 0.8) == pytest.approx(0.4)

    def test_tabulated_interpolates_bilinearly(self):
        lams = np.array([1.0, 2.0])
        ss = np.array([0.0, 1.0])
        table = np.array([[0.0, 1.0], [0.0, 2.0]])
        eta = tabulated_eta(lams, ss, table)
        assert eta.eval(1.5, 1.0) == pytest.approx(1.5)
        assert eta.eval(1.5, 0.5) == pytest.approx(0.75)

    def test_tabulated_shape_mismatch_raises(self):
        with pytest.raises(ParamError):
            tabulated_eta([1.0, 2.0], [0.0, 1.0], np.zeros((3, 2)))


class TestCocycleProperty:
    @settings(max_examples=100)
    @given(
        delta=st.floats(-2.0, 2.0),
        eps=st.floats(-1.0, 1.0),
        lam=st.floats(0.8, 1.25),
        mu=st.floats(0.8, 1.25),
        s=st.floats(0.1, 1.0),
    )
    def test_affine_shift_translates(self, delta, eps, lam, mu, s):
        eta = affine_shift_eta(delta, eps)
        lhs = eta.eval(lam * mu, s)
        rhs = eta.eval(mu, eta.eval(lam, s))
        assert lhs == pytest.approx(rhs, abs=1e-11)

    @settings(max_examples=100)
    @given(
        kappa=st.floats(0.5, 2.0),
        beta=st.floats(0.0, 0.12),
        delta=st.floats(-1.0, 1.0),
        lam=st.floats(0.8, 1.25),
        mu=st.floats(0.8, 1.25),
        s=st.floats(0.1, 1.0),
    )
    def test_log_blend_translates(self, kappa, beta, delta, lam, mu, s):
        eta = log_blend_eta(kappa, beta, delta)
        lhs = eta.eval(lam * mu, s)
        rhs = eta.eval(mu, eta.eval(lam, s))
        assert lhs == pytest.approx(rhs, abs=1e-11)

    @settings(max_examples=100)
    @given(
        delta=st.floats(-2.0, 2.0),
        kappa=st.floats(0.5, 2.0),
        lam=st.floats(0.5, 2.0),
        mu=st.floats(0.5, 2.0),
        s=st.floats(-1.0, 1.0),
    )
    def test_additive_log_translates(self, delta, kappa, lam, mu, s):
        eta = additive_log_eta(delta, kappa)
        lhs = eta.eval(lam * mu, s)
        rhs = eta.eval(mu, eta.eval(lam, s))
        assert lhs == pytest.approx(rhs, abs=1e-11)

    @settings(max_examples=60)
    @given(
        p=st.floats(0.5, 2.5),
        lam=st.floats(0.8, 1.2),
        mu=st.floats(0.8, 1.2),
        s=st.floats(0.1, 2.0),
    )
    def test_conjugate_translates(self, p, lam, mu, s):
        eta = conjugate_eta(power_scale(2.0, p, 0.0, domain=(0.0, 1e6)))
        lhs = eta.eval(lam * mu, s)
        rhs = eta.eval(mu, eta.eval(lam, s))
        assert lhs == pytest.approx(rhs, rel=1e-9, abs=1e-11)


class TestTranslationalCheck:
    def test_power_scale_passes_with_exact_boundaries(self):
        grid = _boundary_grid(s_interval=(0.0, 4.0))
        rep = check_mult_translational(power_scale_eta(2.0), grid)
        assert rep.passed
        assert rep.parts["zero_boundary"].max_abs == 0.0
        assert rep.parts["identity_boundary"].max_abs == 0.0

    def test_identity_map_passes(self):
        rep = check_mult_translational(identity_eta(), _boundary_grid())
        assert rep.passed and rep.max_abs == 0.0

    def test_affine_shift_fails_only_at_zero_boundary(self):
        rep = check_mult_translational(affine_shift_eta(1.0, 0.5), _boundary_grid())
        assert not rep.passed
        assert rep.parts["cocycle"].passed
        assert rep.parts["identity_boundary"].passed
        zero = rep.parts["zero_boundary"]
        assert zero.max_abs == pytest.approx(0.25, abs=1e-12)

    def test_state_only_map_fails_cocycle_and_identity(self):
        rep = check_mult_translational(s_only_eta(affine(0.5, 0.0)), _boundary_grid())
        assert not rep.passed
        assert rep.parts["zero_boundary"].passed
        assert not rep.parts["cocycle"].passed
        assert not rep.parts["identity_boundary"].passed

    def test_grid_must_sample_the_boundary_points(self):
        no_one = Grid.build([1.0], np.linspace(1.5, 2.0, 5), np.linspace(0.0, 1.0, 5))
        with pytest.raises(ParamError):
            check_mult_translational(power_scale_eta(1.0), no_one)
        no_zero = Grid.build([1.0], np.linspace(1.0, 2.0, 5), np.linspace(0.5, 1.0, 5))
        with pytest.raises(ParamError):
            check_mult_translational(power_scale_eta(1.0), no_zero)

    def test_escaping_the_state_interval_raises(self):
        grid = _boundary_grid(s_interval=(0.0, 1.0))
        with pytest.raises(DomainError):
            check_mult_translational(power_scale_eta(5.0), grid)


class TestConjugatorExtraction:
    def test_power_section_is_tabulated_exactly(self):
        lam = np.linspace(0.5, 1.0, 21)
        grid = Grid.build([1.0], lam, np.linspace(0.25, 1.0, 21), s_interval=(0.0, 4.0))
        # Off-knot products only reconstruct to interpolation accuracy, so the
        # sweep tolerance reflects the 21-knot table; knot values are exact.
        section, rep = extract_conjugator(power_scale_eta(2.0), 1.0, grid, tolerance=1e-3)
        assert rep.passed
        assert section.eval(0.8) == pytest.approx(0.64, abs=1e-12)
        assert np.allclose(section.knots_y, lam**2)

    def test_decreasing_section_reconstructs(self):
        n = 16
        lam = 2.0 ** (-np.arange(n)[::-1] / (n - 1.0))
        s = np.sort(1.0 / lam)
        grid = Grid.build([1.0], lam, s, s_interval=(0.0, 4.0))
        eta = power_scale_eta(-1.0)
        section, rep = extract_conjugator(eta, 1.0, grid, tolerance=1e-9)
        assert not section.is_increasing()
        assert rep.passed

    def test_flat_section_is_rejected(self):
        grid = Grid.build([1.0], np.linspace(0.5, 1.0, 9), np.linspace(0.25, 1.0, 9))
        with pytest.raises(NotInvertibleError):
            extract_conjugator(identity_eta(), 1.0, grid)


class TestGammaMaps:
    def test_lambda_power_and_identity_forms(self):
        assert lambda_power(2.0).eval(1.5, 0.3) == pytest.approx(2.25)
        assert lambda_identity().eval(1.5, 0.3) == 1.5
        phi = affine(1.0, 1.0)
        assert lambda_power_in_s(phi).eval(2.0, 1.0) == pytest.approx(4.0)

    def test_ratio_form_formula(self):
        kappa = power_scale(1.0, 2.0, 0.0, domain=(0.0, 100.0))
        h = identity_scale(domain=(0.0, 10.0))
        g = ratio_gamma(kappa, h)
        # kappa(s * lam) / kappa(s) = lam^2 for a square kappa.
        assert g.eval(1.5, 0.7) == pytest.approx(2.25, abs=1e-12)

    def test_ratio_vanishing_denominator_raises(self):
        kappa = affine(1.0, -1.0)
        g = ratio_gamma(kappa, identity_scale(domain=(0.0, 10.0)))
        with pytest.raises(DomainError):
            g.eval(1.5, 1.0)


class TestDeriveGamma:
    def _grid(self):
        return Grid.build(
            [1.0], np.linspace(0.5, 2.0, 16), np.linspace(0.25, 2.0, 15), s_interval=(0.1, 10.0)
        )

    def test_plain_lambda_with_reciprocal_conjugator(self):
        derived, rep = derive_gamma(lambda_identity(), power_scale(1.0, -1.0, 0.0), self._grid())
        assert rep.passed
        assert rep.max_abs <= 1e-10

    def test_square_lambda_with_identity_conjugator(self):
        derived, rep = derive_gamma(lambda_power(2.0), identity_scale(domain=(0.0, 100.0)), self._grid())
        assert rep.passed

    def test_derived_map_is_exactly_one_at_unit_lambda(self):
        derived, _ = derive_gamma(lambda_power(2.0), identity_scale(domain=(0.0, 100.0)), self._grid())
        for s in (0.25, 0.7, 1.9):
            assert derived.eval(1.0, s) == 1.0

    def test_grid_must_sample_unit_state(self):
        grid = Grid.build([1.0], np.linspace(0.5, 2.0, 5), np.linspace(2.0, 3.0, 5))
        with pytest.raises(ParamError):
            derive_gamma(lambda_identity(), identity_scale(domain=(0.0, 100.0)), grid)

    def test_degenerate_normalization_raises(self):
        # H^-1(1) = 0 for H(t) = t + 1, so the section cannot be normalized.
        with pytest.raises(ParamError):
            derive_gamma(lambda_identity(), affine(1.0, 1.0), self._grid())


class TestExponentInvariance:
    def _grid(self):
        return Grid.build([1.0], np.linspace(1.5, 2.0, 8), np.linspace(0.5, 1.0, 8))

    def test_constant_exponent_is_invariant(self):
        rep = check_exponent_invariance(Constant(3.0), power_scale_eta(1.0), self._grid())
        assert rep.max_abs == 0.0

    def test_monotone_exponent_moves_along_orbits(self):
        rep = check_exponent_invariance(
            identity_scale(domain=(0.0, 10.0)), power_scale_eta(1.0), self._grid()
        )
        assert not rep.passed
        assert rep.max_abs > 0.1


class TestSpecParsing:
    def test_eta_kinds_round_trip(self):
        eta = eta_from_spec({"kind": "power_scale", "theta": 2.0})
        assert eta.eval(1.5, 1.0) == pytest.approx(2.25)
        eta = eta_from_spec({"kind": "conjugate", "h": {"kind": "exp", "a": 1.0, "k": 1.0, "b": -1.0}})
        assert eta.eval(1.0, 0.7) == 0.7
        eta = eta_from_spec({"kind": "affine_shift", "delta": 1.0, "eps": 0.5, "s_interval": [0.0, 1.0]})
        assert eta.s_interval == (0.0, 1.0)

    def test_gamma_kinds_round_trip(self):
        g = gamma_from_spec({"kind": "lambda_power", "r": 2.0})
        assert g.eval(3.0, 0.0) == 9.0
        g = gamma_from_spec({"kind": "lambda"})
        assert g.eval(3.0, 0.0) == 3.0
        g = gamma_from_spec(
            {"kind": "lambda_power_in_s", "exponent": {"kind": "const", "value": 2.0}}
        )
        assert g.eval(2.0, 5.0) == 4.0

    def test_unknown_kinds_raise(self):
        with pytest.raises(ParamError):
            eta_from_spec({"kind": "mystery"})
        with pytest.raises(ParamError):
            gamma_from_spec({"kind": "mystery"})
        with pytest.raises(ParamError):
            eta_from_spec("not a mapping")

    def test_tabulated_csv_round_trip(self, tmp_path):
        path = tmp_path / "eta.csv"
        lams = [1.0, 2.0]
        ss = [0.0, 0.5, 1.0]
        with open(path, "w") as fh:
            fh.write("lambda,s,value\n")
            for lam in lams:
                for s in ss:
                    fh.write(f"{lam},{s},{lam * s}\n")
        eta = eta_from_spec({"kind": "tabulated", "csv": str(path)})
        assert eta.eval(1.5, 0.5) == pytest.approx(0.75)

    def test_tabulated_csv_bad_header_raises(self, tmp_path):
        path = tmp_path / "eta.csv"
        path.write_text("a,b,c\n1,2,3\n")
        with pytest.raises(ParamError):
            eta_from_spec({"kind": "tabulated", "csv": str(path)})
