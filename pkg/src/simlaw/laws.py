"""Law checkers: similarity residuals, functional-equation cases, classifier.

Every checker sweeps a :class:`~simlaw.grids.Grid` and returns a
:class:`~simlaw.grids.ResidualReport`.  Law residuals are scaled relative,
|lhs - rhs| / (1 + |lhs|), so absolute and relative error are controlled
together; the functional-equation residual is reported unscaled because its
two sides live on an interval scale.  Grid points that a family or map
cannot evaluate are excluded and counted; a sweep that excludes more than
half of its points raises instead of reporting a hollow pass.

``make_lundberg_case`` builds the five solution branches of the composition
equation f(l(x) + g(y)) = m(x) + h(x + y) on which subtractive
representation results rest; each branch returns the five callables, and
``lundberg_residual`` verifies the identity on a product grid.

``classify_laws`` labels a family with the specializations it satisfies:
WEBER (gain lambda, state unchanged), POWER_LAW with a per-state exponent
estimated by log-log regression, SHIFT with the state-scaling exponent
found by a golden-section search, or GENERAL when nothing passes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import (
    DomainError,
    EmptyGridError,
    InsufficientDataError,
    NonPositiveError,
    ParamError,
    RangeError,
    TooManyExclusionsError,
)
from .families import SensitivityFamily
from .grids import Grid, ResidualAccumulator, ResidualReport
from .maps import EtaMap, GammaMap

__all__ = [
    "iverson_residual",
    "weber_residual",
    "power_law_residual",
    "shift_invariance_residual",
    "LundbergCase",
    "make_lundberg_case",
    "lundberg_residual",
    "LawClassification",
    "classify_laws",
]

_SKIP = (DomainError, RangeError)


def iverson_residual(
    family: SensitivityFamily, gamma: GammaMap, eta: EtaMap, grid: Grid, tolerance: float = 1e-10
) -> ResidualReport:
    """Residual of the similarity law for a (family, gamma, eta) triple.

    r(x, lambda, s) = |xi_s(lambda*x) - gamma(lambda,s) * xi_eta(lambda,s)(x)|
    scaled by 1 + |xi_s(lambda*x)|.  Points where eta leaves the state
    interval (the map's own, falling back to the grid's) are excluded.
    """
    s_lo, s_hi = eta.s_interval if eta.s_interval is not None else grid.s_interval
    slack = 1e-9 * (1.0 + abs(s_lo) + abs(s_hi))
    acc = ResidualAccumulator("similarity law")
    for s in grid.s:
        s = float(s)
        for x, lam in grid.iter_pairs():
            try:
                moved = eta.eval(lam, s)
            except _SKIP:
                acc.exclude()
                continue
            if not (s_lo - slack <= moved <= s_hi + slack):
                acc.exclude()
                continue
            try:
                lhs = family.xi(lam * x, s)
                rhs = gamma.eval(lam, s) * family.xi(x, moved)
            except _SKIP:
                acc.exclude()
                continue
            acc.add((lhs - rhs) / (1.0 + abs(lhs)), (x, lam, s))
    return acc.finish(tolerance)


def weber_residual(family: SensitivityFamily, grid: Grid, tolerance: float = 1e-10) -> ResidualReport:
    """Residual of xi_s(lambda*x) = lambda * xi_s(x), scaled relative."""
    acc = ResidualAccumulator("proportional law")
    for s in grid.s:
        s = float(s)
        for x, lam in grid.iter_pairs():
            try:
                lhs = family.xi(lam * x, s)
                rhs = lam * family.xi(x, s)
            except _SKIP:
                acc.exclude()
                continue
            acc.add((lhs - rhs) / (1.0 + abs(lhs)), (x, lam, s))
    return acc.finish(tolerance)


def power_law_residual(
    family: SensitivityFamily, exponent, grid: Grid, tolerance: float = 1e-10
) -> ResidualReport:
    """Residual of xi_s(lambda*x) = lambda**exponent(s) * xi_s(x)."""
    acc = ResidualAccumulator("power law")
    for s in grid.s:
        s = float(s)
        for x, lam in grid.iter_pairs():
            try:
                phi = exponent.eval(s)
                lhs = family.xi(lam * x, s)
                rhs = lam**phi * family.xi(x, s)
            except _SKIP:
                acc.exclude()
                continue
            acc.add((lhs - rhs) / (1.0 + abs(lhs)), (x, lam, s))
    return acc.finish(tolerance)


def shift_invariance_residual(
    family: SensitivityFamily, theta: float, grid: Grid, tolerance: float = 1e-10
) -> ResidualReport:
    """Residual of xi_{lambda**theta * s}(lambda*x) = lambda * xi_s(x).

    Shifted states lambda**theta * s falling outside the grid's state
    interval are excluded and counted.
    """
    theta = float(theta)
    acc = ResidualAccumulator("shift invariance")
    for s in grid.s:
        s = float(s)
        for x, lam in grid.iter_pairs():
            shifted = lam**theta * s
            if not grid.contains_s(shifted):
                acc.exclude()
                continue
            try:
                lhs = family.xi(lam * x, shifted)
                rhs = lam * family.xi(x, s)
            except _SKIP:
                acc.exclude()
                continue
            acc.add((lhs - rhs) / (1.0 + abs(lhs)), (x, lam, s))
    return acc.finish(tolerance)


# ---------------------------------------------------------------------------
# composition equation branches


@dataclass(frozen=True)
class LundbergCase:
    """The five callables of one branch of f(l(x) + g(y)) = m(x) + h(x + y)."""

    case: int
    f: Callable[[float], float]
    g: Callable[[float], float]
    h: Callable[[float], float]
    ell: Callable[[float], float]
    m: Callable[[float], float]


def _safe_log(v: float, where: str) -> float:
    if v <= 0:
        raise DomainError(f"log argument {v} <= 0 in {where}")
    return math.log(v)


def _build_case_1(p):
    alpha, rho, beta, b, tau = (p[k] for k in ("alpha", "rho", "beta", "b", "tau"))
    ell_fn = p["ell"]
    ell = ell_fn.eval if hasattr(ell_fn, "eval") else ell_fn

    def f(t):
        return alpha + rho * t

    def g(y):
        return beta + b * y

    def h(t):
        return -tau + rho * b * t

    def m(x):
        return rho * ell(x) - rho * b * x + alpha + rho * beta + tau

    return f, g, h, ell, m


def _build_case_2(p):
    alpha, rho, c, kappa, beta, d, delta, b, tau = (
        p[k] for k in ("alpha", "rho", "c", "kappa", "beta", "d", "delta", "b", "tau")
    )

    def f(t):
        return alpha + rho * _safe_log(c + math.exp(kappa * t), "f")

    def g(y):
        return _safe_log(-beta * c + d * math.exp(delta * y), "g") / kappa

    def h(t):
        return -tau + alpha + rho * _safe_log(b * c + d * math.exp(delta * t), "h")

    def ell(x):
        return -_safe_log(beta + b * math.exp(-delta * x), "l") / kappa

    def m(x):
        return tau - rho * _safe_log(b + beta * math.exp(delta * x), "m")

    return f, g, h, ell, m


def _build_case_3(p):
    rho, alpha, b, kappa, beta, d, eps, tau = (
        p[k] for k in ("rho", "alpha", "b", "kappa", "beta", "d", "eps", "tau")
    )

    def f(t):
        return rho * _safe_log(alpha - b * math.exp(kappa * t), "f")

    def g(y):
        return _safe_log(beta - d * alpha * y, "g") / kappa

    def h(t):
        return -tau + rho * _safe_log(b * d * alpha * t + alpha * eps - b * beta, "h")

    def ell(x):
        return -_safe_log(eps + b * d * x, "l") / kappa

    def m(x):
        return tau - rho * _safe_log(eps + b * d * x, "m")

    return f, g, h, ell, m


def _build_case_4(p):
    alpha, rho, kappa, beta, b, c, delta, tau = (
        p[k] for k in ("alpha", "rho", "kappa", "beta", "b", "c", "delta", "tau")
    )

    def f(t):
        return alpha + rho * math.exp(kappa * t)

    def g(y):
        return beta + _safe_log(b + c * math.exp(delta * y), "g") / kappa

    def h(t):
        return -tau + alpha + rho * c * math.exp(delta * t)

    def ell(x):
        return -beta + (delta / kappa) * x

    def m(x):
        return tau + rho * b * math.exp(delta * x)

    return f, g, h, ell, m


def _build_case_5(p):
    alpha, rho, delta, beta, eps, c, b, tau = (
        p[k] for k in ("alpha", "rho", "delta", "beta", "eps", "c", "b", "tau")
    )

    def f(t):
        return alpha + (rho / delta) * _safe_log(beta + t, "f")

    def g(y):
        return -beta - eps + c * math.exp(delta * y)

    def h(t):
        return -tau + alpha + (rho / delta) * _safe_log(b + c * math.exp(delta * t), "h")

    def ell(x):
        return eps + b * math.exp(-delta * x)

    def m(x):
        return tau - rho * x

    return f, g, h, ell, m


_CASE_BUILDERS = {1: _build_case_1, 2: _build_case_2, 3: _build_case_3, 4: _build_case_4, 5: _build_case_5}
_CASE_PARAMS = {
    1: ("alpha", "rho", "beta", "b", "tau", "ell"),
    2: ("alpha", "rho", "c", "kappa", "beta", "d", "delta", "b", "tau"),
    3: ("rho", "alpha", "b", "kappa", "beta", "d", "eps", "tau"),
    4: ("alpha", "rho", "kappa", "beta", "b", "c", "delta", "tau"),
    5: ("alpha", "rho", "delta", "beta", "eps", "c", "b", "tau"),
}


def make_lundberg_case(
    case: int,
    params: dict,
    x_interval: tuple[float, float] = (0.1, 1.0),
    y_interval: tuple[float, float] = (0.1, 1.0),
    require_philandering: bool = True,
) -> LundbergCase:
    """Build one branch of the composition equation and vet it.

    The five functions are probed on the requested intervals (including the
    composed arguments l(x) + g(y) and x + y); any non-real value raises
    ParamError.  With ``require_philandering`` the functions h, l and m must
    each be non-constant on their interval, rejecting degenerate parameter
    choices such as a zero leading coefficient.
    """
    case = int(case)
    if case not in _CASE_BUILDERS:
        raise ParamError(f"case must be 1..5, got {case}")
    names = _CASE_PARAMS[case]
    missing = [n for n in names if n not in params]
    if missing:
        raise ParamError(f"case {case} missing parameters {missing}")
    p = {}
    for n in names:
        if n == "ell":
            v = params[n]
            if not (callable(v) or hasattr(v, "eval")):
                raise ParamError("case 1 parameter 'ell' must be callable")
            p[n] = v
        else:
            p[n] = float(params[n])
    f, g, h, ell, m = _CASE_BUILDERS[case](p)

    xs = np.linspace(*x_interval, 17)
    ys = np.linspace(*y_interval, 17)
    try:
        g_vals = [g(float(y)) for y in ys]
        ell_vals = [ell(float(x)) for x in xs]
        m_vals = [m(float(x)) for x in xs]
        h_vals = [h(float(x) + float(y)) for x in xs for y in ys]
        f_vals = [f(lv + gv) for lv in ell_vals for gv in g_vals]
    except (DomainError, OverflowError, ValueError) as exc:
        raise ParamError(f"case {case} parameters are not real on the requested intervals: {exc}") from exc
    for vals in (g_vals, ell_vals, m_vals, h_vals, f_vals):
        if not all(math.isfinite(v) for v in vals):
            raise ParamError(f"case {case} produces non-finite values on the requested intervals")
    if require_philandering:
        for name, vals in (("h", h_vals), ("l", ell_vals), ("m", m_vals)):
            spread = max(vals) - min(vals)
            if spread <= 1e-12 * (1.0 + max(abs(v) for v in vals)):
                raise ParamError(f"case {case}: {name} is constant on the interval (not philandering)")
    return LundbergCase(case, f, g, h, ell, m)


def lundberg_residual(
    case_fns: LundbergCase, x_grid, y_grid, tolerance: float = 1e-9
) -> ResidualReport:
    """Unscaled residual of f(l(x) + g(y)) - m(x) - h(x + y) on a product grid."""
    xs = np.asarray(x_grid, dtype=float)
    ys = np.asarray(y_grid, dtype=float)
    acc = ResidualAccumulator("composition equation")
    for x in xs:
        x = float(x)
        for y in ys:
            y = float(y)
            try:
                lhs = case_fns.f(case_fns.ell(x) + case_fns.g(y))
                rhs = case_fns.m(x) + case_fns.h(x + y)
            except _SKIP:
                acc.exclude()
                continue
            acc.add(lhs - rhs, (x, y))
    return acc.finish(tolerance)


# ---------------------------------------------------------------------------
# classifier


@dataclass(frozen=True)
class LawClassification:
    """Labels plus the evidence reports behind them.

    ``labels`` is a sorted tuple drawn from WEBER, POWER_LAW, SHIFT and
    GENERAL; the labels are not exclusive.  ``reports`` keeps every
    candidate's report, including failed candidates, for diagnostics.
    """

    labels: tuple[str, ...]
    exponent_hat: object | None
    theta_hat: float | None
    reports: dict[str, ResidualReport]


_SCAN_ERRORS = _SKIP + (EmptyGridError, TooManyExclusionsError, ParamError)


def _golden_min(fn, lo: float, hi: float, iters: int = 80) -> float:
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    fc, fd = fn(c), fn(d)
    for _ in range(iters):
        if b - a < 1e-9:
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = fn(d)
    return 0.5 * (a + b)


def classify_laws(family: SensitivityFamily, grid: Grid, tolerance: float = 1e-8) -> LawClassification:
    """Label a family with the law specializations it satisfies on the grid.

    The shift exponent is located by a golden-section search seeded from an
    81-point scan of [-4, 4].  A shift label with theta close to zero is
    suppressed because it collapses to the proportional (WEBER) law, which
    is reported in its own right.
    """
    from .fitting import SampleSet, fit_power_per_s

    labels: list[str] = []
    reports: dict[str, ResidualReport] = {}
    exponent_hat = None
    theta_hat = None

    try:
        rep = weber_residual(family, grid, tolerance)
        reports["weber"] = rep
        if rep.passed:
            labels.append("WEBER")
    except _SCAN_ERRORS:
        pass

    try:
        samples = SampleSet.from_family(family, grid.x, grid.s)
        per_state, _fit = fit_power_per_s(samples)
        candidate = per_state.exponent_curve()
        rep = power_law_residual(family, candidate, grid, tolerance)
        reports["power_law"] = rep
        if rep.passed:
            labels.append("POWER_LAW")
            exponent_hat = candidate
    except _SCAN_ERRORS + (NonPositiveError, InsufficientDataError):
        pass

    def shift_objective(theta: float) -> float:
        try:
            return shift_invariance_residual(family, theta, grid, tolerance).max_abs
        except _SCAN_ERRORS:
            return math.inf

    thetas = np.linspace(-4.0, 4.0, 81)
    scan = np.array([shift_objective(float(t)) for t in thetas])
    best = int(np.argmin(scan))
    if math.isfinite(scan[best]):
        lo = float(thetas[max(best - 1, 0)])
        hi = float(thetas[min(best + 1, len(thetas) - 1)])
        theta_best = _golden_min(shift_objective, lo, hi)
        try:
            rep = shift_invariance_residual(family, theta_best, grid, tolerance)
            reports["shift"] = rep
            if rep.passed:
                theta_hat = theta_best
                if abs(theta_best) > 1e-2:
                    labels.append("SHIFT")
        except _SCAN_ERRORS:
            pass

    if not labels:
        labels = ["GENERAL"]
    return LawClassification(tuple(sorted(labels)), exponent_hat, theta_hat, reports)
