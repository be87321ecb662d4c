"""State-change maps eta(lambda, s) and gain maps gamma(lambda, s).

The similarity law xi_s(lambda*x) = gamma(lambda, s) * xi_eta(lambda, s)(x)
pairs each sensitivity family with a gain map gamma and a state-change map
eta.  A state-change map is multiplicatively translational when

    eta(lambda*mu, s) = eta(mu, eta(lambda, s)),   eta(1, s) = s,
    eta(lambda, 0) = 0,

and regular when one section lambda -> eta(lambda, s*) is a bijection onto
the state interval.  Regular translational maps are exactly the conjugates
eta(lambda, s) = H(lambda * H^-1(s)) of plain multiplication, where H is
that section.  This module provides the map catalogs, the translation
checker, section extraction, conjugation, the ratio normal form for gamma,
and an invariance check for power-law exponents.

Eta map kinds
=============
============== ============================================== =
power_scale    lambda**theta * s
conjugate      H(lambda * H^-1(s)) for an invertible scale H
identity       s
s_only         nu(s), constant in lambda
affine_shift   lambda**(-delta) * (s - eps) + eps
log_blend      -ln(lambda**(-delta)*(e**(-kappa*s) - beta) + beta) / kappa
additive_log   s + (delta / kappa) * ln(lambda)
tabulated      bilinear interpolation of a value table
============== ============================================== =

All of these satisfy the composition identity; the boundary identities hold
only for specific parameters (affine_shift needs eps = 0 or delta = 0,
log_blend needs beta = 1 or delta = 0, additive_log needs delta = 0), and
the checker reports which part failed.

Gamma map kinds: ``lambda_power`` (lambda**r), ``lambda_power_in_s``
(lambda**phi(s)), ``lambda`` (gamma = lambda), ``ratio``
(kappa(h(s)*lambda) / kappa(h(s))) and ``tabulated``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DomainError,
    IoError,
    NotInvertibleError,
    ParamError,
    RangeError,
)
from .grids import Grid, ResidualAccumulator, ResidualReport, merge_reports
from .scales import ScaleFunction, table_scale

__all__ = [
    "EtaMap",
    "GammaMap",
    "power_scale_eta",
    "conjugate_eta",
    "identity_eta",
    "s_only_eta",
    "affine_shift_eta",
    "log_blend_eta",
    "additive_log_eta",
    "tabulated_eta",
    "lambda_power",
    "lambda_power_in_s",
    "lambda_identity",
    "ratio_gamma",
    "tabulated_gamma",
    "check_mult_translational",
    "extract_conjugator",
    "derive_gamma",
    "check_exponent_invariance",
    "eta_from_spec",
    "gamma_from_spec",
]


def _bilinear(xs: np.ndarray, ys: np.ndarray, table: np.ndarray, x: float, y: float) -> float:
    if not (xs[0] - 1e-12 <= x <= xs[-1] + 1e-12) or not (ys[0] - 1e-12 <= y <= ys[-1] + 1e-12):
        raise DomainError(f"({x}, {y}) outside tabulated rectangle")
    i = int(np.clip(np.searchsorted(xs, x) - 1, 0, len(xs) - 2))
    j = int(np.clip(np.searchsorted(ys, y) - 1, 0, len(ys) - 2))
    tx = (x - xs[i]) / (xs[i + 1] - xs[i])
    ty = (y - ys[j]) / (ys[j + 1] - ys[j])
    tx = min(max(tx, 0.0), 1.0)
    ty = min(max(ty, 0.0), 1.0)
    v00, v01 = table[i, j], table[i, j + 1]
    v10, v11 = table[i + 1, j], table[i + 1, j + 1]
    return float((1 - tx) * ((1 - ty) * v00 + ty * v01) + tx * ((1 - ty) * v10 + ty * v11))


def _load_lambda_s_csv(path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise IoError(str(exc)) from exc
    if not rows or [c.strip() for c in rows[0]] != ["lambda", "s", "value"]:
        raise ParamError(f"{path}: expected header 'lambda,s,value'")
    try:
        data = np.array([[float(c) for c in r] for r in rows[1:] if r], dtype=float)
    except ValueError as exc:
        raise ParamError(f"{path}: malformed row: {exc}") from exc
    lams = np.unique(data[:, 0])
    ss = np.unique(data[:, 1])
    if lams.size * ss.size != data.shape[0]:
        raise ParamError(f"{path}: rows must cover the full lambda x s product grid")
    table = np.full((lams.size, ss.size), np.nan)
    li = np.searchsorted(lams, data[:, 0])
    si = np.searchsorted(ss, data[:, 1])
    table[li, si] = data[:, 2]
    if np.isnan(table).any():
        raise ParamError(f"{path}: duplicate or missing grid rows")
    return lams, ss, table


@dataclass(frozen=True, eq=False)
class EtaMap:
    """State-change map with an optional declared (J, S) rectangle."""

    kind: str
    params: dict
    lam_interval: tuple[float, float] | None = None
    s_interval: tuple[float, float] | None = None

    def eval(self, lam: float, s: float) -> float:
        lam = float(lam)
        s = float(s)
        k = self.kind
        if k == "power_scale":
            return lam ** self.params["theta"] * s
        if k == "conjugate":
            h = self.params["h"]
            if lam == 1.0:
                # H(1 * H^-1(s)) is s identically; skipping the round trip
                # keeps the identity boundary free of spurious ulp noise.
                return s
            return h.eval(lam * h.invert(s))
        if k == "identity":
            return s
        if k == "s_only":
            return self.params["nu"].eval(s)
        if k == "affine_shift":
            delta, eps = self.params["delta"], self.params["eps"]
            return lam ** (-delta) * (s - eps) + eps
        if k == "log_blend":
            kap, beta, delta = self.params["kappa"], self.params["beta"], self.params["delta"]
            inner = lam ** (-delta) * (math.exp(-kap * s) - beta) + beta
            if inner <= 0:
                raise DomainError(f"log_blend inner value {inner} <= 0 at ({lam}, {s})")
            return -math.log(inner) / kap
        if k == "additive_log":
            delta, kap = self.params["delta"], self.params["kappa"]
            return s + (delta / kap) * math.log(lam)
        # tabulated
        return _bilinear(self.params["lams"], self.params["ss"], self.params["table"], lam, s)

    __call__ = eval


@dataclass(frozen=True, eq=False)
class GammaMap:
    """Gain map gamma(lambda, s) > 0 with gamma(1, s) = 1 for catalog kinds."""

    kind: str
    params: dict

    def eval(self, lam: float, s: float) -> float:
        lam = float(lam)
        s = float(s)
        k = self.kind
        if k == "lambda_power":
            return lam ** self.params["r"]
        if k == "lambda_power_in_s":
            return lam ** self.params["exponent"].eval(s)
        if k == "lambda":
            return lam
        if k == "ratio":
            kap, h = self.params["kappa"], self.params["h"]
            hs = h.eval(s)
            denom = kap.eval(hs)
            if denom == 0.0:
                raise DomainError(f"ratio gain denominator vanishes at s={s}")
            return kap.eval(hs * lam) / denom
        return _bilinear(self.params["lams"], self.params["ss"], self.params["table"], lam, s)

    __call__ = eval


# ---------------------------------------------------------------------------
# eta factories


def power_scale_eta(theta: float, lam_interval=None, s_interval=None) -> EtaMap:
    return EtaMap("power_scale", {"theta": float(theta)}, lam_interval, s_interval)


def conjugate_eta(h, lam_interval=None, s_interval=None) -> EtaMap:
    """eta(lambda, s) = H(lambda * H^-1(s)) for an invertible scale H.

    For the zero boundary to hold, H should fix zero: H(0) = 0.
    """
    if not (hasattr(h, "eval") and hasattr(h, "invert")):
        raise ParamError("conjugate eta needs an invertible scale")
    return EtaMap("conjugate", {"h": h}, lam_interval, s_interval)


def identity_eta(lam_interval=None, s_interval=None) -> EtaMap:
    return EtaMap("identity", {}, lam_interval, s_interval)


def s_only_eta(nu, lam_interval=None, s_interval=None) -> EtaMap:
    if not hasattr(nu, "eval"):
        raise ParamError("s_only eta needs a curve for nu")
    return EtaMap("s_only", {"nu": nu}, lam_interval, s_interval)


def affine_shift_eta(delta: float, eps: float, lam_interval=None, s_interval=None) -> EtaMap:
    return EtaMap("affine_shift", {"delta": float(delta), "eps": float(eps)}, lam_interval, s_interval)


def log_blend_eta(kappa: float, beta: float, delta: float, lam_interval=None, s_interval=None) -> EtaMap:
    if kappa == 0:
        raise ParamError("log_blend eta needs kappa != 0")
    return EtaMap(
        "log_blend",
        {"kappa": float(kappa), "beta": float(beta), "delta": float(delta)},
        lam_interval,
        s_interval,
    )


def additive_log_eta(delta: float, kappa: float, lam_interval=None, s_interval=None) -> EtaMap:
    if kappa == 0:
        raise ParamError("additive_log eta needs kappa != 0")
    return EtaMap("additive_log", {"delta": float(delta), "kappa": float(kappa)}, lam_interval, s_interval)


def tabulated_eta(lams, ss, table, lam_interval=None, s_interval=None) -> EtaMap:
    lams = np.asarray(lams, dtype=float)
    ss = np.asarray(ss, dtype=float)
    table = np.asarray(table, dtype=float)
    if table.shape != (lams.size, ss.size):
        raise ParamError("tabulated eta needs a (len(lams), len(ss)) value table")
    return EtaMap("tabulated", {"lams": lams, "ss": ss, "table": table}, lam_interval, s_interval)


def tabulated_eta_from_csv(path, lam_interval=None, s_interval=None) -> EtaMap:
    lams, ss, table = _load_lambda_s_csv(path)
    return tabulated_eta(lams, ss, table, lam_interval, s_interval)


# ---------------------------------------------------------------------------
# gamma factories


def lambda_power(r: float) -> GammaMap:
    return GammaMap("lambda_power", {"r": float(r)})


def lambda_power_in_s(exponent) -> GammaMap:
    if not hasattr(exponent, "eval"):
        raise ParamError("lambda_power_in_s needs a curve for the exponent")
    return GammaMap("lambda_power_in_s", {"exponent": exponent})


def lambda_identity() -> GammaMap:
    return GammaMap("lambda", {})


def ratio_gamma(kappa, h) -> GammaMap:
    """gamma(lambda, s) = kappa(h(s) * lambda) / kappa(h(s))."""
    if not hasattr(kappa, "eval") or not hasattr(h, "eval"):
        raise ParamError("ratio gamma needs curves for kappa and h")
    return GammaMap("ratio", {"kappa": kappa, "h": h})


def tabulated_gamma(lams, ss, table) -> GammaMap:
    lams = np.asarray(lams, dtype=float)
    ss = np.asarray(ss, dtype=float)
    table = np.asarray(table, dtype=float)
    if table.shape != (lams.size, ss.size):
        raise ParamError("tabulated gamma needs a (len(lams), len(ss)) value table")
    return GammaMap("tabulated", {"lams": lams, "ss": ss, "table": table})


def tabulated_gamma_from_csv(path) -> GammaMap:
    lams, ss, table = _load_lambda_s_csv(path)
    return tabulated_gamma(lams, ss, table)


# ---------------------------------------------------------------------------
# small adapter curves used by derive_gamma


@dataclass(frozen=True, eq=False)
class GammaSection:
    """kappa(t) = gamma(t, s_fix) as an eval-only curve."""

    gamma: GammaMap
    s_fix: float = 1.0

    def eval(self, t: float) -> float:
        return self.gamma.eval(t, self.s_fix)

    __call__ = eval


@dataclass(frozen=True, eq=False)
class NormalizedInverse:
    """h(s) = H^-1(s) / H^-1(s_unit) as an eval-only curve."""

    h_scale: object
    denom: float

    def eval(self, s: float) -> float:
        return self.h_scale.invert(s) / self.denom

    __call__ = eval


# ---------------------------------------------------------------------------
# operations


def _require_sampled(vec: np.ndarray, value: float, what: str) -> None:
    if not np.any(np.abs(vec - value) <= 1e-9 * (1.0 + abs(value))):
        raise ParamError(f"grid must sample {what} = {value}")


def check_mult_translational(eta: EtaMap, grid: Grid, tolerance: float = 1e-10) -> ResidualReport:
    """Check the translation identity and both boundary identities.

    The composite report carries three parts: ``cocycle`` for
    |eta(lam*mu, s) - eta(mu, eta(lam, s))| over sampled (lam, mu, s),
    ``zero_boundary`` for |eta(lam, 0)| and ``identity_boundary`` for
    |eta(1, s) - s|.  The grid must sample lambda = 1 and s = 0.  The
    cocycle sweep covers only pairs whose product lam*mu stays inside the
    lambda interval (no interval is closed under multiplication, so pairs
    outside are not part of the identity's domain); points where eta itself
    fails to evaluate are excluded and counted.
    """
    _require_sampled(grid.lam, 1.0, "lambda")
    _require_sampled(grid.s, 0.0, "s")
    s_lo, s_hi = eta.s_interval if eta.s_interval is not None else grid.s_interval
    s_slack = 1e-9 * (1.0 + abs(s_lo) + abs(s_hi))
    lam_int = eta.lam_interval if eta.lam_interval is not None else grid.lam_interval
    l_lo, l_hi = lam_int
    l_slack = 1e-12 * (1.0 + abs(l_lo) + abs(l_hi))

    coc = ResidualAccumulator("cocycle")
    for lam in grid.lam:
        lam = float(lam)
        for mu in grid.lam:
            mu = float(mu)
            prod = lam * mu
            if not (l_lo - l_slack <= prod <= l_hi + l_slack):
                continue
            for s in grid.s:
                s = float(s)
                try:
                    inner = eta.eval(lam, s)
                except (DomainError, RangeError):
                    coc.exclude()
                    continue
                if not (s_lo - s_slack <= inner <= s_hi + s_slack):
                    raise DomainError(
                        f"eta({lam}, {s}) = {inner} leaves the state interval [{s_lo}, {s_hi}]"
                    )
                try:
                    lhs = eta.eval(prod, s)
                    rhs = eta.eval(mu, inner)
                except (DomainError, RangeError):
                    coc.exclude()
                    continue
                coc.add(lhs - rhs, (lam, mu, s))

    zero = ResidualAccumulator("zero_boundary")
    for lam in grid.lam:
        try:
            zero.add(eta.eval(float(lam), 0.0), (float(lam), 0.0))
        except (DomainError, RangeError):
            zero.exclude()

    ident = ResidualAccumulator("identity_boundary")
    for s in grid.s:
        try:
            ident.add(eta.eval(1.0, float(s)) - float(s), (1.0, float(s)))
        except (DomainError, RangeError):
            ident.exclude()

    parts = {
        "cocycle": coc.finish(tolerance),
        "zero_boundary": zero.finish(tolerance),
        "identity_boundary": ident.finish(tolerance),
    }
    return merge_reports(parts, tolerance)


def extract_conjugator(
    eta: EtaMap, s_star: float, grid: Grid, tolerance: float = 1e-9, sweep_max: int = 65
) -> tuple[ScaleFunction, ResidualReport]:
    """Tabulate the section H(lam) = eta(lam, s_star) and verify conjugacy.

    Returns the section as a piecewise-linear scale with knots at the grid
    lambda samples, plus a report of the reconstruction residual
    |eta(lam, s) - H(lam * H^-1(s))| on a thinned (lambda, s) sweep (at most
    ``sweep_max`` samples per axis).  Raises NotInvertibleError when the
    section is not strictly monotone on the samples.  Dense lambda sampling
    sharpens both the table and the reported residual.
    """
    vals = []
    for lam in grid.lam:
        vals.append(eta.eval(float(lam), float(s_star)))
    vals = np.asarray(vals)
    d = np.diff(vals)
    if not (np.all(d > 0) or np.all(d < 0)):
        raise NotInvertibleError(f"section at s* = {s_star} is not strictly monotone")
    section = table_scale(grid.lam, vals)

    def thin(vec):
        if vec.size <= sweep_max:
            return vec
        idx = np.unique(np.linspace(0, vec.size - 1, sweep_max).astype(int))
        return vec[idx]

    acc = ResidualAccumulator("conjugacy")
    for lam in thin(grid.lam):
        lam = float(lam)
        for s in thin(grid.s):
            s = float(s)
            try:
                rebuilt = section.eval(lam * section.invert(s))
                direct = eta.eval(lam, s)
            except (DomainError, RangeError):
                acc.exclude()
                continue
            acc.add(direct - rebuilt, (lam, s))
    return section, acc.finish(tolerance)


def derive_gamma(
    gamma: GammaMap, h_scale, grid: Grid, tolerance: float = 1e-10
) -> tuple[GammaMap, ResidualReport]:
    """Build the ratio normal form of a gain map and report its residual.

    With kappa(t) = gamma(t, 1) and h(s) = H^-1(s) / H^-1(1), a gain map
    compatible with a regular state-change map H(lambda * H^-1(s)) equals
    kappa(h(s) * lambda) / kappa(h(s)).  The grid must sample s = 1.  Grid
    points where the denominator kappa(h(s)) vanishes are excluded and
    counted.  The returned map satisfies gamma(1, s) = 1 identically.
    """
    _require_sampled(grid.s, 1.0, "s")
    denom_unit = h_scale.invert(1.0)
    if denom_unit == 0.0:
        raise ParamError("H^-1(1) = 0; cannot normalize the section")
    kappa = GammaSection(gamma, 1.0)
    h_curve = NormalizedInverse(h_scale, denom_unit)
    derived = ratio_gamma(kappa, h_curve)

    acc = ResidualAccumulator("ratio form")
    for s in grid.s:
        s = float(s)
        try:
            hs = h_curve.eval(s)
            if kappa.eval(hs) == 0.0:
                for _ in grid.lam:
                    acc.exclude()
                continue
        except (DomainError, RangeError):
            for _ in grid.lam:
                acc.exclude()
            continue
        for lam in grid.lam:
            lam = float(lam)
            try:
                acc.add(gamma.eval(lam, s) - derived.eval(lam, s), (lam, s))
            except (DomainError, RangeError):
                acc.exclude()
    return derived, acc.finish(tolerance)


def check_exponent_invariance(phi, eta: EtaMap, grid: Grid, tolerance: float = 1e-10) -> ResidualReport:
    """Report max |phi(s) - phi(eta(lambda, s))| over the (lambda, s) grid.

    A power-law exponent must be invariant along state-change orbits; a
    strictly monotone exponent paired with a non-identity regular map fails
    this check, which is the expected outcome.
    """
    acc = ResidualAccumulator("exponent invariance")
    for lam in grid.lam:
        lam = float(lam)
        for s in grid.s:
            s = float(s)
            try:
                moved = eta.eval(lam, s)
                acc.add(phi.eval(s) - phi.eval(moved), (lam, s))
            except (DomainError, RangeError):
                acc.exclude()
    return acc.finish(tolerance)


# ---------------------------------------------------------------------------
# config support


def _need_keys(spec: dict, what: str, kind: str, *names):
    missing = [n for n in names if n not in spec]
    if missing:
        raise ParamError(f"{what} kind {kind!r} missing parameters {missing}")
    return [spec[n] for n in names]


def eta_from_spec(spec: dict) -> EtaMap:
    from .scales import scale_from_spec

    if not isinstance(spec, dict) or "kind" not in spec:
        raise ParamError(f"eta spec must be a mapping with 'kind', got {spec!r}")
    kind = spec["kind"]
    lam_int = tuple(spec["lam_interval"]) if "lam_interval" in spec else None
    s_int = tuple(spec["s_interval"]) if "s_interval" in spec else None

    def need(*names):
        return _need_keys(spec, "eta", kind, *names)

    if kind == "power_scale":
        (theta,) = need("theta")
        return power_scale_eta(float(theta), lam_int, s_int)
    if kind == "conjugate":
        (h,) = need("h")
        return conjugate_eta(scale_from_spec(h), lam_int, s_int)
    if kind == "identity":
        return identity_eta(lam_int, s_int)
    if kind == "s_only":
        (nu,) = need("nu")
        return s_only_eta(scale_from_spec(nu), lam_int, s_int)
    if kind == "affine_shift":
        delta, eps = need("delta", "eps")
        return affine_shift_eta(float(delta), float(eps), lam_int, s_int)
    if kind == "log_blend":
        kappa, beta, delta = need("kappa", "beta", "delta")
        return log_blend_eta(float(kappa), float(beta), float(delta), lam_int, s_int)
    if kind == "additive_log":
        delta, kappa = need("delta", "kappa")
        return additive_log_eta(float(delta), float(kappa), lam_int, s_int)
    if kind == "tabulated":
        (csv_path,) = need("csv")
        return tabulated_eta_from_csv(csv_path, lam_int, s_int)
    raise ParamError(f"unknown eta kind {kind!r}")


def gamma_from_spec(spec: dict) -> GammaMap:
    from .scales import scale_from_spec

    if not isinstance(spec, dict) or "kind" not in spec:
        raise ParamError(f"gamma spec must be a mapping with 'kind', got {spec!r}")
    kind = spec["kind"]

    def need(*names):
        return _need_keys(spec, "gamma", kind, *names)

    if kind == "lambda_power":
        (r,) = need("r")
        return lambda_power(float(r))
    if kind == "lambda_power_in_s":
        (exponent,) = need("exponent")
        return lambda_power_in_s(scale_from_spec(exponent))
    if kind == "lambda":
        return lambda_identity()
    if kind == "ratio":
        kappa, h = need("kappa", "h")
        return ratio_gamma(scale_from_spec(kappa), scale_from_spec(h))
    if kind == "tabulated":
        (csv_path,) = need("csv")
        return tabulated_gamma_from_csv(csv_path)
    raise ParamError(f"unknown gamma kind {kind!r}")
