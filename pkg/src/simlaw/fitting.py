"""Fitting tools: sample containers, regressions, and scale recovery.

``SampleSet`` holds (x, s, xi) triples, either measured or synthesized from
a family with optional Gaussian noise.  On top of it sit four estimators:

- ``fit_power_per_s``: per-state log-log regression for families of the
  form coeff(s) * x**exponent(s).
- ``fit_family``: damped Gauss-Newton for the closed-form parametric kinds,
  with a fifth of the rows held out for the reported residual.
- ``fit_scales_subtractive``: alternating least squares that recovers the
  two monotone scales of a subtractive representation u^-1(s + w(x)) as
  piecewise-linear tables, with monotonicity enforced by pooling and a
  small curvature penalty that vanishes on affine truth.
- ``extract_template``: rebuilds the shape/stretch/gain decomposition
  xi_s(x) = shape(stretch(s) * x) / gain(s) from a family and a verified
  (gamma, eta) pair.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve

from .errors import (
    ConstraintError,
    DivergenceError,
    DomainError,
    InsufficientDataError,
    IoError,
    NonConvergenceError,
    NonPositiveError,
    NotInvertibleError,
    ParamError,
    RangeError,
)
from .families import make_family
from .grids import Grid, ResidualAccumulator, ResidualReport
from .scales import Constant, ScaleFunction, TableCurve, table_scale

__all__ = [
    "SampleSet",
    "FitResult",
    "PowerPerS",
    "fit_power_per_s",
    "fit_family",
    "fit_scales_subtractive",
    "TemplateParts",
    "extract_template",
]

_SKIP = (DomainError, RangeError)


@dataclass(frozen=True, eq=False)
class SampleSet:
    """Immutable column store of (stimulus, state, response) rows."""

    x: np.ndarray
    s: np.ndarray
    xi: np.ndarray

    def __post_init__(self):
        for name in ("x", "s", "xi"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float).ravel())
        if not (self.x.size == self.s.size == self.xi.size):
            raise ParamError("x, s and xi columns must have equal length")
        if self.x.size == 0:
            raise ParamError("sample set must not be empty")
        for name in ("x", "s", "xi"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise ParamError(f"sample column {name!r} contains non-finite values")

    def __len__(self) -> int:
        return int(self.x.size)

    @classmethod
    def from_family(cls, family, x_samples, s_samples, noise_sigma: float = 0.0, seed=None) -> "SampleSet":
        """Sample a family on the product grid, optionally with noise.

        Noise is Gaussian with standard deviation ``noise_sigma`` from a
        generator seeded by ``seed``, so synthetic data is reproducible.
        """
        xs = np.asarray(x_samples, dtype=float).ravel()
        ss = np.asarray(s_samples, dtype=float).ravel()
        cols_x, cols_s, cols_xi = [], [], []
        for s in ss:
            for x in xs:
                cols_x.append(float(x))
                cols_s.append(float(s))
                cols_xi.append(family.xi(float(x), float(s)))
        xi = np.asarray(cols_xi)
        if noise_sigma:
            rng = np.random.default_rng(seed)
            xi = xi + rng.normal(0.0, float(noise_sigma), xi.size)
        return cls(np.asarray(cols_x), np.asarray(cols_s), xi)

    @classmethod
    def from_csv(cls, path) -> "SampleSet":
        try:
            with open(path, newline="") as fh:
                rows = list(csv.reader(fh))
        except OSError as exc:
            raise IoError(str(exc)) from exc
        if not rows or [c.strip() for c in rows[0]] != ["x", "s", "xi"]:
            raise ParamError(f"{path}: expected header 'x,s,xi'")
        try:
            data = np.array([[float(c) for c in r] for r in rows[1:] if r], dtype=float)
        except ValueError as exc:
            raise ParamError(f"{path}: malformed row: {exc}") from exc
        if data.size == 0:
            raise ParamError(f"{path}: no data rows")
        return cls(data[:, 0], data[:, 1], data[:, 2])

    def to_csv(self, path) -> int:
        try:
            with open(path, "w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(["x", "s", "xi"])
                for x, s, xi in zip(self.x, self.s, self.xi):
                    writer.writerow([repr(float(x)), repr(float(s)), repr(float(xi))])
        except OSError as exc:
            raise IoError(str(exc)) from exc
        return len(self)


@dataclass(frozen=True)
class FitResult:
    """Outcome of an estimator: parameters, evidence, and bookkeeping."""

    params: dict
    residual: ResidualReport
    iterations: int
    converged: bool


# ---------------------------------------------------------------------------
# per-state power regression


@dataclass(frozen=True, eq=False)
class PowerPerS:
    """Per-state coefficient and exponent estimates from log-log regression."""

    s: np.ndarray
    coeff: np.ndarray
    exponent: np.ndarray

    def coeff_curve(self):
        if self.s.size == 1:
            return Constant(float(self.coeff[0]))
        return TableCurve(self.s, self.coeff)

    def exponent_curve(self):
        if self.s.size == 1:
            return Constant(float(self.exponent[0]))
        return TableCurve(self.s, self.exponent)


def fit_power_per_s(samples: SampleSet, tolerance: float = 1e-8) -> tuple[PowerPerS, FitResult]:
    """Fit coeff(s) * x**exponent(s) by ordinary least squares in log-log.

    Each state needs at least three distinct stimuli; all stimuli and
    responses must be positive for the logarithms to exist.
    """
    s_unique = np.unique(samples.s)
    coeffs = np.empty(s_unique.size)
    exponents = np.empty(s_unique.size)
    for i, s in enumerate(s_unique):
        mask = samples.s == s
        xs = samples.x[mask]
        ys = samples.xi[mask]
        if np.unique(xs).size < 3:
            raise InsufficientDataError(f"state {s}: need at least 3 distinct stimuli, got {np.unique(xs).size}")
        if np.any(xs <= 0) or np.any(ys <= 0):
            raise NonPositiveError(f"state {s}: log-log regression needs positive stimuli and responses")
        slope, intercept = np.polyfit(np.log(xs), np.log(ys), 1)
        coeffs[i] = math.exp(float(intercept))
        exponents[i] = float(slope)
    per_state = PowerPerS(s_unique, coeffs, exponents)
    index = {float(s): i for i, s in enumerate(s_unique)}
    acc = ResidualAccumulator("per-state power fit")
    for x, s, xi in zip(samples.x, samples.s, samples.xi):
        i = index[float(s)]
        model = coeffs[i] * float(x) ** exponents[i]
        acc.add((model - xi) / (1.0 + abs(xi)), (float(x), float(s)))
    report = acc.finish(tolerance)
    return per_state, FitResult({"states": int(s_unique.size)}, report, 1, True)


# ---------------------------------------------------------------------------
# parametric Gauss-Newton


_FIT_PARAMS: dict[str, tuple[str, ...]] = {
    "power": ("coeff", "exponent"),
    "gain_power": ("c", "mu", "d"),
    "gain_exp": ("c", "d"),
    "fechner_exp": ("rate",),
    "exp_power": ("a", "b", "rho", "r"),
    "shifted_power": ("a", "c", "rho", "r", "eps"),
}

# parameters that must stay away from zero while stepping
_FIT_NONZERO: dict[str, tuple[str, ...]] = {
    "gain_power": ("c", "mu"),
    "gain_exp": ("c",),
    "shifted_power": ("rho",),
}

_CONSTANT_WRAPPED = {"power": ("coeff", "exponent")}


def _feasible(kind: str, values: Mapping[str, float]) -> bool:
    return all(abs(values[name]) > 1e-8 for name in _FIT_NONZERO.get(kind, ()))


def _build_candidate(kind: str, values: Mapping[str, float]):
    params: dict = dict(values)
    for name in _CONSTANT_WRAPPED.get(kind, ()):
        params[name] = Constant(params[name])
    return make_family(kind, params)


def _residual_vector(kind, values, x, s, xi):
    """Raw model-minus-data residuals, or None when the point is infeasible."""
    try:
        fam = _build_candidate(kind, values)
    except ParamError:
        return None
    out = np.empty(xi.size)
    for i in range(xi.size):
        try:
            out[i] = fam.xi(float(x[i]), float(s[i])) - xi[i]
        except _SKIP:
            return None
    if not np.all(np.isfinite(out)):
        return None
    return out


def fit_family(
    samples: SampleSet,
    kind: str,
    init: Mapping[str, float],
    fixed: Mapping[str, float] | None = None,
    tolerance: float = 1e-8,
    max_iter: int = 200,
) -> FitResult:
    """Fit a closed-form family by damped Gauss-Newton least squares.

    ``init`` supplies starting values for the free parameters; ``fixed``
    pins parameters that the model cannot identify jointly (for example
    the redundant exponent split of the exponential-power kind).  Every
    fifth row is held out of the objective and used for the reported
    residual; with fewer than five rows the report covers all of them.

    Raises ConstraintError when the starting point violates a parameter
    constraint or cannot be evaluated, and DivergenceError after twenty
    consecutive rejected steps.
    """
    if kind not in _FIT_PARAMS:
        raise ParamError(f"unsupported fit kind {kind!r}; expected one of {sorted(_FIT_PARAMS)}")
    fixed = {k: float(v) for k, v in (fixed or {}).items()}
    names = tuple(n for n in _FIT_PARAMS[kind] if n not in fixed)
    if not names:
        raise ParamError("no free parameters left to fit")
    unknown = set(init) - set(names)
    if unknown:
        raise ParamError(f"init has parameters {sorted(unknown)} that are fixed or unknown for {kind!r}")
    missing = [n for n in names if n not in init]
    if missing:
        raise ParamError(f"init missing parameters {missing}")

    holdout = np.arange(len(samples)) % 5 == 4
    if not holdout.any():
        holdout = np.ones(len(samples), dtype=bool)
    train = ~holdout if holdout.sum() < len(samples) else np.ones(len(samples), dtype=bool)
    xt, st, yt = samples.x[train], samples.s[train], samples.xi[train]

    p = np.array([float(init[n]) for n in names])

    def values_at(vec):
        d = dict(zip(names, (float(v) for v in vec)))
        d.update(fixed)
        return d

    if not _feasible(kind, values_at(p)):
        raise ConstraintError(f"initial parameters violate a {kind!r} constraint")
    r = _residual_vector(kind, values_at(p), xt, st, yt)
    if r is None:
        raise ConstraintError("initial parameters cannot be evaluated on the samples")

    sse = float(r @ r)
    mu = 1e-3
    fails = 0
    iterations = 0
    converged = False
    while iterations < max_iter:
        iterations += 1
        J = np.empty((r.size, p.size))
        bad = False
        for k in range(p.size):
            h = 1e-7 * (1.0 + abs(p[k]))
            for step in (h, -h):
                q = p.copy()
                q[k] += step
                rq = _residual_vector(kind, values_at(q), xt, st, yt)
                if rq is not None:
                    J[:, k] = (rq - r) / step
                    break
            else:
                bad = True
                break
        if bad:
            mu *= 2.0
            fails += 1
            if fails >= 20:
                raise DivergenceError(f"{kind!r} fit: jacobian not computable after repeated damping")
            continue
        jtj = J.T @ J
        jtr = J.T @ r
        try:
            delta = np.linalg.solve(jtj + mu * np.eye(p.size), -jtr)
        except np.linalg.LinAlgError:
            mu *= 2.0
            fails += 1
            if fails >= 20:
                raise DivergenceError(f"{kind!r} fit: normal equations stayed singular")
            continue
        if float(np.linalg.norm(delta)) < 1e-10 * (1.0 + float(np.linalg.norm(p))):
            converged = True
            break
        trial = p + delta
        vals = values_at(trial)
        rt = _residual_vector(kind, vals, xt, st, yt) if _feasible(kind, vals) else None
        if rt is not None and float(rt @ rt) < sse:
            p, r, sse = trial, rt, float(rt @ rt)
            mu = max(mu / 2.0, 1e-15)
            fails = 0
        else:
            mu *= 2.0
            fails += 1
            if fails >= 20:
                raise DivergenceError(f"{kind!r} fit diverged: 20 consecutive rejected steps (sse={sse:.3e})")

    final = values_at(p)
    fam = _build_candidate(kind, final)
    acc = ResidualAccumulator(f"{kind} fit (held out rows)")
    for i in np.nonzero(holdout)[0]:
        try:
            model = fam.xi(float(samples.x[i]), float(samples.s[i]))
        except _SKIP:
            acc.exclude()
            continue
        acc.add((model - samples.xi[i]) / (1.0 + abs(samples.xi[i])), (float(samples.x[i]), float(samples.s[i])))
    report = acc.finish(tolerance)
    return FitResult(final, report, iterations, converged)


# ---------------------------------------------------------------------------
# subtractive scale recovery


def _hat_matrix(values: np.ndarray, knots: np.ndarray) -> sp.csr_matrix:
    n = values.size
    k = knots.size
    idx = np.clip(np.searchsorted(knots, values) - 1, 0, k - 2)
    t = (values - knots[idx]) / (knots[idx + 1] - knots[idx])
    t = np.clip(t, 0.0, 1.0)
    rows = np.concatenate([np.arange(n), np.arange(n)])
    cols = np.concatenate([idx, idx + 1])
    data = np.concatenate([1.0 - t, t])
    return sp.csr_matrix((data, (rows, cols)), shape=(n, k))


def _second_difference(k: int) -> sp.csr_matrix:
    main = np.ones(k - 2)
    return sp.diags([main, -2.0 * main, main], offsets=[0, 1, 2], shape=(k - 2, k))


def _pava_increasing(y: np.ndarray) -> np.ndarray:
    vals: list[float] = []
    counts: list[int] = []
    for v in y:
        vals.append(float(v))
        counts.append(1)
        while len(vals) > 1 and vals[-2] > vals[-1]:
            v2, c2 = vals.pop(), counts.pop()
            v1, c1 = vals.pop(), counts.pop()
            vals.append((v1 * c1 + v2 * c2) / (c1 + c2))
            counts.append(c1 + c2)
    out = np.empty(y.size)
    pos = 0
    for v, c in zip(vals, counts):
        out[pos : pos + c] = v
        pos += c
    return out


def _strictify(vals: np.ndarray) -> np.ndarray:
    # pooling can leave flat runs; bump them by a negligible ramp so the
    # result is a valid strictly monotone table
    out = vals.copy()
    span = max(float(out[-1] - out[0]), 1.0)
    eps = 1e-13 * span
    for i in range(1, out.size):
        if out[i] <= out[i - 1]:
            out[i] = out[i - 1] + eps
    return out


def fit_scales_subtractive(
    samples: SampleSet,
    knots: int = 41,
    tolerance: float = 1e-6,
    max_rounds: int = 100,
    ridge: float = 1e-8,
) -> tuple[ScaleFunction, ScaleFunction, FitResult]:
    """Recover u and w with u(xi) = s + w(x) from sampled data.

    Both scales are piecewise linear on ``knots`` equally spaced knots.
    The model is fit as u(xi) = alpha * s + w(x) with u pinned to [0, 1]
    across its knot range, alternating a (alpha, w) step and a u step;
    each step solves a sparse ridge-regularized least squares problem and
    projects onto the increasing cone by pooling adjacent violators.  The
    returned scales are divided by alpha so that u(xi) - w(x) = s holds in
    the state's own units, which is also how the residual is reported.

    Stops when the data objective decreases by less than 1e-12 between
    rounds; otherwise raises NonConvergenceError carrying the best
    iterate seen in its ``result`` attribute.
    """
    k = int(knots)
    if k < 4:
        raise ParamError("need at least 4 knots per scale")
    x, s, xi = samples.x, samples.s, samples.xi
    if np.any(xi <= 0):
        raise NonPositiveError("scale recovery needs positive response values")
    if float(xi.max() - xi.min()) <= 0 or float(x.max() - x.min()) <= 0:
        raise ParamError("samples must span an interval in both x and xi")
    uk = np.linspace(float(xi.min()), float(xi.max()), k)
    wk = np.linspace(float(x.min()), float(x.max()), k)
    bu = _hat_matrix(xi, uk)
    bw = _hat_matrix(x, wk)
    d2 = _second_difference(k)
    dtd = (d2.T @ d2).tocsr()
    s_col = sp.csr_matrix(s.reshape(-1, 1))

    vu = np.linspace(0.0, 1.0, k)
    alpha = 1.0
    vw = np.zeros(k)

    def data_sse(vu_, alpha_, vw_):
        res = bu @ vu_ - alpha_ * s - bw @ vw_
        return float(res @ res)

    best = None
    prev = math.inf
    converged = False
    rounds = 0
    for rounds in range(1, max_rounds + 1):
        # (alpha, w) step for the current u
        target = bu @ vu
        design = sp.hstack([s_col, bw]).tocsr()
        penalty = sp.block_diag([sp.csr_matrix((1, 1)), ridge * dtd])
        sol = spsolve((design.T @ design + penalty).tocsc(), design.T @ target)
        alpha = float(sol[0])
        if abs(alpha) < 1e-12:
            raise NonConvergenceError("state coefficient collapsed to zero", result=best)
        vw = _pava_increasing(np.asarray(sol[1:]).ravel())

        # u step for the current (alpha, w), with u pinned to 0 and 1
        target = alpha * s + bw @ vw
        mu_full = (bu.T @ bu + ridge * dtd).tocsr()
        rhs_full = bu.T @ target
        interior = np.arange(1, k - 1)
        m_ii = mu_full[interior][:, interior]
        rhs = rhs_full[interior] - np.asarray(mu_full[interior][:, [k - 1]].todense()).ravel()
        vu_int = spsolve(m_ii.tocsc(), rhs)
        vu = np.concatenate([[0.0], np.asarray(vu_int).ravel(), [1.0]])
        vu = _pava_increasing(vu)
        span = float(vu[-1] - vu[0])
        if span <= 1e-12:
            raise NonConvergenceError("stimulus scale collapsed to a constant", result=best)
        vu = (vu - vu[0]) / span

        current = data_sse(vu, alpha, vw)
        if best is None or current < best[3]:
            best = (vu.copy(), alpha, vw.copy(), current, rounds)
        if prev - current < 1e-12:
            converged = True
            break
        prev = current

    vu, alpha, vw, sse, best_round = best
    u_scale = table_scale(uk, _strictify(vu) / alpha)
    w_scale = table_scale(wk, _strictify(vw) / alpha)

    acc = ResidualAccumulator("subtractive scale recovery")
    resid = (bu @ vu - alpha * s - bw @ vw) / alpha
    for i in range(resid.size):
        acc.add(float(resid[i]), (float(x[i]), float(s[i])))
    report = acc.finish(tolerance)
    result = FitResult({"alpha": alpha, "knots": k}, report, rounds, converged)
    if not converged:
        err = NonConvergenceError(
            f"no plateau after {max_rounds} rounds (best sse {sse:.3e} at round {best_round})",
            result=(u_scale, w_scale, result),
        )
        raise err
    return u_scale, w_scale, result


# ---------------------------------------------------------------------------
# template extraction


@dataclass(frozen=True, eq=False)
class TemplateParts:
    """shape(stretch(s) * x) / gain(s) decomposition of a family."""

    shape: object
    stretch: ScaleFunction
    gain: object


def extract_template(
    family, gamma, eta, s_star: float, grid: Grid, tolerance: float = 1e-9
) -> tuple[TemplateParts, ResidualReport]:
    """Rebuild the template decomposition from a verified (gamma, eta) pair.

    The anchor state ``s_star`` seeds the construction: the stretch table
    maps each reachable state eta(lambda, s_star) back to its lambda, the
    gain table records gamma there, and the shape is the anchor section
    xi_{s_star} tabulated densely (with every product lambda * x as a knot,
    so the verification sweep reads the table exactly where it was built).
    The residual compares the family against shape(stretch(s) * x) / gain(s)
    at the reachable states, scaled by 1 + |xi|.

    Raises NotInvertibleError when lambda -> eta(lambda, s_star) is not
    strictly monotone, since the stretch must invert it.
    """
    s_star = float(s_star)
    lams = np.asarray(grid.lam, dtype=float)
    if lams.size < 2:
        raise ParamError("need at least two scaling factors")
    image = np.array([eta.eval(float(l), s_star) for l in lams])
    diffs = np.diff(image)
    if not (np.all(diffs > 0) or np.all(diffs < 0)):
        raise NotInvertibleError("eta(., s_star) is not strictly monotone; cannot build the stretch")
    order = np.argsort(image)
    gains = np.array([gamma.eval(float(l), s_star) for l in lams])
    if np.any(gains == 0):
        raise ParamError("gamma vanishes at the anchor state")
    stretch = table_scale(image[order], lams[order])
    gain = TableCurve(image[order], gains[order])

    xlo, xhi = grid.x_interval
    products = np.multiply.outer(grid.x, lams).ravel()
    keep = (products >= xlo) & (products <= xhi)
    dense = np.unique(np.concatenate([np.linspace(xlo, xhi, 801), grid.x, products[keep]]))
    shape_vals = np.array([family.xi(float(t), s_star) for t in dense])
    shape = TableCurve(dense, shape_vals)

    acc = ResidualAccumulator("template reconstruction")
    for i, lam in enumerate(lams):
        s_img = float(image[i])
        g = float(gains[i])
        for j, xv in enumerate(grid.x):
            if not grid.pair_ok[j, i]:
                acc.exclude()
                continue
            try:
                data = family.xi(float(xv), s_img)
                model = shape.eval(float(lam) * float(xv)) / g
            except _SKIP:
                acc.exclude()
                continue
            acc.add((data - model) / (1.0 + abs(data)), (float(xv), float(lam), s_img))
    report = acc.finish(tolerance)
    return TemplateParts(shape, stretch, gain), report
