"""Representations of sensitivity functions and psychometric families.

A representation expresses xi_s(x) through monotone scales:

- ``fechnerian``          xi_s(x) = u^-1(s + u(x))
- ``subtractive``         xi_s(x) = u^-1(s + w(x))
- ``gain_control``        xi_s(x) = u^-1(s * sigma(x) + u(x))
- ``parallel``            xi_s(x) = u(x) + v(s)
- ``balanced_parallel``   xi_s(x) = x + nu(s)

``representation_residual`` checks the defining identity of each variant on
a grid, reported unscaled because the identities live on the scale's own
units.  A representation can also be packaged as a psychometric family
p_a(x) = F(z(a, x)) through a link function F; the two directions are tied
by xi_{F^-1(pi)}(a) = p_a^-1(pi), which ``sensitivity_from_psychometric``
realizes by bisection.

``check_family_properties`` tests a psychometric family for the three
structural properties (anchored at 1/2, parallel quantile spacing, and the
balance p_a(b) + p_b(a) = 1), and ``decompose_balanced_parallel`` recovers
the state offset nu from a family that is a pure shift of its argument.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .errors import (
    DomainError,
    GridSymmetryError,
    LinkRangeError,
    NonMonotoneError,
    NotInvertibleError,
    ParamError,
    RangeError,
)
from .grids import Grid, ResidualAccumulator, ResidualReport, merge_reports
from .scales import ScaleFunction, TableCurve, scale_from_spec, table_scale

__all__ = [
    "Representation",
    "fechnerian",
    "subtractive",
    "gain_control",
    "parallel",
    "balanced_parallel_rep",
    "xi_from_representation",
    "representation_residual",
    "logistic_table",
    "PsychometricFamily",
    "make_psychometric",
    "sensitivity_from_psychometric",
    "check_family_properties",
    "decompose_balanced_parallel",
    "export_psychometric_csv",
    "representation_from_spec",
]

_KINDS = {
    "fechnerian": ("u",),
    "subtractive": ("u", "w"),
    "gain_control": ("u", "sigma"),
    "parallel": ("u", "v"),
    "balanced_parallel": ("nu",),
}

_SKIP = (DomainError, RangeError)


@dataclass(frozen=True, eq=False)
class Representation:
    """A sensitivity model built from monotone scales."""

    kind: str
    params: Mapping[str, object] = field(repr=False)

    def xi(self, x: float, s: float) -> float:
        x = float(x)
        s = float(s)
        p = self.params
        if self.kind == "fechnerian":
            u = p["u"]
            return u.invert(s + u.eval(x))
        if self.kind == "subtractive":
            u, w = p["u"], p["w"]
            return u.invert(s + w.eval(x))
        if self.kind == "gain_control":
            u, sigma = p["u"], p["sigma"]
            return u.invert(s * sigma.eval(x) + u.eval(x))
        if self.kind == "parallel":
            u, v = p["u"], p["v"]
            return u.eval(x) + v.eval(s)
        if self.kind == "balanced_parallel":
            return x + p["nu"].eval(s)
        raise ParamError(f"unknown representation kind {self.kind!r}")

    __call__ = xi


def _need_scale(name: str, obj, invertible: bool) -> None:
    if not hasattr(obj, "eval"):
        raise ParamError(f"representation scale {name!r} must expose eval()")
    if invertible and not hasattr(obj, "invert"):
        raise NotInvertibleError(f"representation scale {name!r} must be invertible")


def fechnerian(u) -> Representation:
    _need_scale("u", u, invertible=True)
    return Representation("fechnerian", {"u": u})


def subtractive(u, w) -> Representation:
    _need_scale("u", u, invertible=True)
    _need_scale("w", w, invertible=False)
    return Representation("subtractive", {"u": u, "w": w})


def gain_control(u, sigma) -> Representation:
    _need_scale("u", u, invertible=True)
    _need_scale("sigma", sigma, invertible=False)
    return Representation("gain_control", {"u": u, "sigma": sigma})


def parallel(u, v) -> Representation:
    _need_scale("u", u, invertible=False)
    _need_scale("v", v, invertible=False)
    return Representation("parallel", {"u": u, "v": v})


def balanced_parallel_rep(nu) -> Representation:
    _need_scale("nu", nu, invertible=False)
    return Representation("balanced_parallel", {"nu": nu})


def xi_from_representation(rep: Representation, x: float, s: float) -> float:
    return rep.xi(x, s)


def representation_residual(
    family, rep: Representation, grid: Grid, tolerance: float = 1e-9
) -> ResidualReport:
    """Unscaled residual of the representation's defining identity.

    The identity is solved for the state term so that every variant is
    checked in the same units: for example the fechnerian residual is
    s - (u(xi_s(x)) - u(x)), and the parallel residual compares xi itself
    against u(x) + v(s).
    """
    p = rep.params
    acc = ResidualAccumulator(f"{rep.kind} representation")
    for s in grid.s:
        s = float(s)
        for x in grid.x:
            x = float(x)
            try:
                value = family.xi(x, s)
                if rep.kind == "fechnerian":
                    u = p["u"]
                    r = s - (u.eval(value) - u.eval(x))
                elif rep.kind == "subtractive":
                    r = s - (p["u"].eval(value) - p["w"].eval(x))
                elif rep.kind == "gain_control":
                    r = s * p["sigma"].eval(x) - (p["u"].eval(value) - p["u"].eval(x))
                elif rep.kind == "parallel":
                    r = value - (p["u"].eval(x) + p["v"].eval(s))
                elif rep.kind == "balanced_parallel":
                    r = value - (x + p["nu"].eval(s))
                else:
                    raise ParamError(f"unknown representation kind {rep.kind!r}")
            except _SKIP:
                acc.exclude()
                continue
            acc.add(r, (x, s))
    return acc.finish(tolerance)


# ---------------------------------------------------------------------------
# psychometric families


def logistic_table(halfwidth: float = 16.0, knots: int = 2001) -> ScaleFunction:
    """Tabulated logistic link, symmetric by construction.

    The knot set is mirrored around an exact zero and the right half is
    written as 1 minus the left half, so T(x) + T(-x) = 1 holds exactly at
    knots and, by linearity, between them.
    """
    halfwidth = float(halfwidth)
    if halfwidth <= 0:
        raise ParamError("halfwidth must be positive")
    knots = int(knots)
    if knots < 3 or knots % 2 == 0:
        raise ParamError("knots must be an odd count >= 3")
    half = np.linspace(0.0, halfwidth, (knots + 1) // 2)
    xs = np.concatenate([-half[::-1][:-1], half])
    right = 1.0 / (1.0 + np.exp(-half))
    ys = np.concatenate([(1.0 - right)[::-1][:-1], right])
    return table_scale(xs, ys)


@dataclass(frozen=True, eq=False)
class PsychometricFamily:
    """Family of choice-probability curves p_a(x) = F(z(a, x)).

    ``rep`` fixes the comparison statistic z per variant and ``link`` maps
    it to a probability.  ``interval`` is the common background/stimulus
    interval on which the family is defined.
    """

    rep: Representation
    link: ScaleFunction
    interval: tuple[float, float]

    def statistic(self, a: float, x: float) -> float:
        a = float(a)
        x = float(x)
        p = self.rep.params
        kind = self.rep.kind
        if kind == "fechnerian":
            u = p["u"]
            return u.eval(x) - u.eval(a)
        if kind == "subtractive":
            return p["u"].eval(x) - p["w"].eval(a)
        if kind == "gain_control":
            u, sigma = p["u"], p["sigma"]
            denom = sigma.eval(a)
            if denom == 0:
                raise DomainError(f"gain sigma({a}) is zero")
            return (u.eval(x) - u.eval(a)) / denom
        if kind == "parallel":
            return p["v"].invert(x - p["u"].eval(a))
        if kind == "balanced_parallel":
            return p["nu"].invert(x - a)
        raise ParamError(f"unknown representation kind {kind!r}")

    def p(self, a: float, x: float) -> float:
        """Probability of judging x above the background a."""
        return self.link.eval(self.statistic(a, x))

    __call__ = p


def make_psychometric(
    rep: Representation, link: ScaleFunction, interval: tuple[float, float], probe_points: int = 9
) -> PsychometricFamily:
    """Validate and assemble a psychometric family.

    The link must be strictly increasing with range inside the open unit
    interval; the resulting p_a must be strictly increasing in x.  Both are
    probed on a small deterministic grid, so a link or representation that
    only misbehaves off-grid is the caller's responsibility.
    """
    lo, hi = link.range()
    if lo <= 0.0 or hi >= 1.0:
        raise LinkRangeError(f"link range [{lo}, {hi}] must lie strictly inside (0, 1)")
    d0, d1 = link.domain
    probes = np.linspace(d0, d1, max(probe_points, 3))
    vals = [link.eval(float(t)) for t in probes]
    if any(b <= a for a, b in zip(vals, vals[1:])):
        raise NonMonotoneError("link must be strictly increasing")
    if rep.kind in ("parallel",):
        _need_scale("v", rep.params["v"], invertible=True)
    if rep.kind == "balanced_parallel":
        _need_scale("nu", rep.params["nu"], invertible=True)
    fam = PsychometricFamily(rep, link, (float(interval[0]), float(interval[1])))
    a = 0.5 * (fam.interval[0] + fam.interval[1])
    xs = np.linspace(fam.interval[0], fam.interval[1], max(probe_points, 3))
    seen = []
    for x in xs:
        try:
            seen.append(fam.p(a, float(x)))
        except _SKIP:
            continue
    if len(seen) >= 2 and any(b <= a_ for a_, b in zip(seen, seen[1:])):
        raise NonMonotoneError("p_a must be strictly increasing in the stimulus")
    return fam


def sensitivity_from_psychometric(
    pf: PsychometricFamily, a: float, pi: float, tolerance: float = 1e-10
) -> float:
    """Solve p_a(x) = pi for x on the family interval by bisection."""
    a = float(a)
    pi = float(pi)
    lo, hi = pf.interval
    p_lo = pf.p(a, lo)
    p_hi = pf.p(a, hi)
    if not (p_lo <= pi <= p_hi):
        raise RangeError(f"probability {pi} not attained on [{lo}, {hi}] (range [{p_lo}, {p_hi}])")
    while hi - lo > tolerance:
        mid = 0.5 * (lo + hi)
        if pf.p(a, mid) < pi:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _distance_to_interval(value: float, lo: float, hi: float) -> float:
    if value < lo:
        return lo - value
    if value > hi:
        return value - hi
    return 0.0


def check_family_properties(
    pf: PsychometricFamily, backgrounds, probs, tolerance: float = 1e-9
) -> dict[str, ResidualReport]:
    """Check the anchored, parallel and balanced properties of a family.

    - anchored: along each curve, and across curves at each fixed stimulus,
      the value 1/2 lies in the attained probability interval; the residual
      is the distance from 1/2 to that interval.
    - parallel: quantiles x(a, pi) shift by an a-independent amount between
      probability levels; the residual is the spread of the shift over a.
      Quantiles that are not attained on the interval are excluded.
    - balanced: p_a(b) + p_b(a) = 1 for all background pairs.
    """
    a_vals = np.asarray(backgrounds, dtype=float)
    pis = np.asarray(probs, dtype=float)
    if a_vals.size < 2:
        raise ParamError("need at least two backgrounds")
    if pis.size < 2:
        raise ParamError("need at least two probability levels")
    if np.any(pis <= 0.0) or np.any(pis >= 1.0):
        raise ParamError("probability levels must lie strictly inside (0, 1)")
    lo, hi = pf.interval

    anchored = ResidualAccumulator("anchored at one half")
    for a in a_vals:
        a = float(a)
        try:
            p0 = pf.p(a, lo)
            p1 = pf.p(a, hi)
        except _SKIP:
            anchored.exclude()
            continue
        anchored.add(_distance_to_interval(0.5, min(p0, p1), max(p0, p1)), (a, float("nan")))
    for x in a_vals:
        x = float(x)
        col = []
        for a in a_vals:
            try:
                col.append(pf.p(float(a), x))
            except _SKIP:
                continue
        if not col:
            anchored.exclude()
            continue
        anchored.add(_distance_to_interval(0.5, min(col), max(col)), (float("nan"), x))
    anchored_report = anchored.finish(tolerance)

    quant = np.full((a_vals.size, pis.size), np.nan)
    unattained = 0
    for i, a in enumerate(a_vals):
        for j, pi in enumerate(pis):
            try:
                quant[i, j] = sensitivity_from_psychometric(pf, float(a), float(pi), tolerance=1e-12)
            except RangeError:
                unattained += 1
    par = ResidualAccumulator("parallel quantile spacing")
    for _ in range(unattained):
        par.exclude()
    for j in range(pis.size):
        for k in range(j + 1, pis.size):
            gaps = quant[:, k] - quant[:, j]
            gaps = gaps[np.isfinite(gaps)]
            if gaps.size < 2:
                continue
            par.add(float(gaps.max() - gaps.min()), (float(pis[j]), float(pis[k])))
    parallel_report = par.finish(tolerance)

    bal = ResidualAccumulator("balance of mirrored choices")
    for i, a in enumerate(a_vals):
        for j in range(i, a_vals.size):
            b = float(a_vals[j])
            try:
                bal.add(pf.p(float(a), b) + pf.p(b, float(a)) - 1.0, (float(a), b))
            except _SKIP:
                bal.exclude()
    balanced_report = bal.finish(tolerance)

    return {"anchored": anchored_report, "parallel": parallel_report, "balanced": balanced_report}


def decompose_balanced_parallel(
    family, grid: Grid, tolerance: float = 1e-9
) -> tuple[object, ResidualReport]:
    """Recover nu from xi_s(x) = x + nu(s) and check the balance law.

    The state grid must be symmetric around 1/2 (each s needs a partner
    1 - s among the samples) so that the antisymmetry nu(1 - s) = -nu(s)
    can be checked; otherwise GridSymmetryError is raised.  Returns the
    estimated offset curve (an invertible table when monotone, a plain
    curve otherwise) and a composite report with parts ``x_independence``
    and ``antisymmetry``.
    """
    s_vals = np.asarray(grid.s, dtype=float)
    if s_vals.size < 2:
        raise GridSymmetryError("need at least two state samples")
    mirror = np.full(s_vals.size, -1, dtype=int)
    for j, s in enumerate(s_vals):
        match = np.where(np.abs(s_vals + s - 1.0) <= 1e-9)[0]
        if match.size == 0:
            raise GridSymmetryError(f"state grid lacks the mirror 1 - s of s = {s}")
        mirror[j] = int(match[0])

    nu_hat = np.empty(s_vals.size)
    indep = ResidualAccumulator("offset independent of stimulus")
    per_point: list[list[tuple[float, float]]] = []
    for j, s in enumerate(s_vals):
        diffs = []
        for x in grid.x:
            try:
                diffs.append((float(x), family.xi(float(x), float(s)) - float(x)))
            except _SKIP:
                indep.exclude()
        if not diffs:
            raise GridSymmetryError(f"state s = {s} could not be evaluated anywhere")
        nu_hat[j] = float(np.mean([d for _, d in diffs]))
        per_point.append(diffs)
    for j, s in enumerate(s_vals):
        for x, d in per_point[j]:
            indep.add(d - nu_hat[j], (x, float(s)))
    indep_report = indep.finish(tolerance)

    anti = ResidualAccumulator("offset antisymmetric around one half")
    for j, s in enumerate(s_vals):
        anti.add(nu_hat[mirror[j]] + nu_hat[j], (float("nan"), float(s)))
    anti_report = anti.finish(tolerance)

    try:
        nu_curve: object = table_scale(s_vals, nu_hat)
    except NonMonotoneError:
        nu_curve = TableCurve(s_vals, nu_hat)
    report = merge_reports({"x_independence": indep_report, "antisymmetry": anti_report}, tolerance)
    return nu_curve, report


def export_psychometric_csv(pf: PsychometricFamily, backgrounds, stimuli, path) -> int:
    """Write p_a(x) rows as ``a,x,p``; returns the number of rows written."""
    rows = 0
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["a", "x", "p"])
        for a in backgrounds:
            for x in stimuli:
                writer.writerow([repr(float(a)), repr(float(x)), repr(pf.p(float(a), float(x)))])
                rows += 1
    return rows


def representation_from_spec(spec: Mapping) -> Representation:
    """Build a representation from a config mapping with scale sub-specs."""
    if "kind" not in spec:
        raise ParamError("representation spec needs a 'kind'")
    kind = str(spec["kind"])
    if kind not in _KINDS:
        raise ParamError(f"unknown representation kind {kind!r}; expected one of {sorted(_KINDS)}")
    builders = {
        "fechnerian": fechnerian,
        "subtractive": subtractive,
        "gain_control": gain_control,
        "parallel": parallel,
        "balanced_parallel": balanced_parallel_rep,
    }
    args = []
    for name in _KINDS[kind]:
        if name not in spec:
            raise ParamError(f"representation kind {kind!r} needs scale {name!r}")
        args.append(scale_from_spec(spec[name]))
    return builders[kind](*args)
