"""Catalog of closed-form sensitivity families xi_s(x).

Each family maps a stimulus intensity x and a state value s to a sensed
magnitude xi_s(x).  The catalog collects the closed forms that solve the
similarity law xi_s(lambda*x) = gamma(lambda, s) * xi_eta(lambda, s)(x)
under various side conditions, plus a bilinear table for measured data.

Catalog (kind: formula):

* ``weber``             k(s) * x
* ``power``             coeff(s) * x**exponent(s)
* ``template``          shape(stretch(s) * x) / gain(s)
* ``gain_power``        ((s + d) / c)**(1/mu) * x
* ``gain_exp``          exp((s - d) / c) * x
* ``identity``          x
* ``parallel_log``      alpha * ln(stretch(s) * x) + beta + offset
* ``parallel_power``    alpha * x**exponent + offset / stretch(s)**exponent
* ``balanced_parallel`` x + offset(s), offset antisymmetric about s = 1/2
* ``exp_power``         a * exp(b*rho*s) * x**(r + rho)
* ``shifted_power``     a * (c * x**(r/rho) + s - eps)**rho
* ``fechner_exp``       exp(rate * s) * x
* ``power_template``    x**exponent(s) * shape(x * conjugator^-1(s))
* ``shift_invariant``   gain(x * s**(1/theta)) / gain(s**(1/theta)) * shape(x**theta * s)
* ``homogeneous``       s * profile(x / s) for s != 0, else c * x
* ``tabulated``         bilinear interpolation of sampled values

Coefficient parameters take anything with an ``eval`` method (a monotone
scale, a :class:`~simlaw.scales.Constant`, a table curve); parameters that
must be inverted (``stretch``, ``conjugator``) need a genuine invertible
scale.  ``canonical_companions`` returns a (gamma, eta) pair that satisfies
the similarity law identically for the given family, or None when no exact
pair exists (``balanced_parallel``, ``tabulated``, and ``power_template``
with a non-constant exponent, whose law a moving exponent breaks).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from . import maps
from .errors import DomainError, IoError, ParamError
from .scales import Constant, InverseScale, power_scale

__all__ = [
    "SensitivityFamily",
    "make_family",
    "eval_xi",
    "canonical_companions",
    "family_from_spec",
    "tabulated_family_from_csv",
]

_REAL = "real"
_CURVE = "curve"
_SCALE = "scale"  # needs eval + invert

# kind -> ordered (name, role) parameter spec
_PARAM_SPECS: dict[str, tuple[tuple[str, str], ...]] = {
    "weber": (("k", _CURVE),),
    "power": (("coeff", _CURVE), ("exponent", _CURVE)),
    "template": (("shape", _CURVE), ("stretch", _CURVE), ("gain", _CURVE)),
    "gain_power": (("c", _REAL), ("mu", _REAL), ("d", _REAL)),
    "gain_exp": (("c", _REAL), ("d", _REAL)),
    "identity": (),
    "parallel_log": (("alpha", _REAL), ("beta", _REAL), ("offset", _REAL), ("stretch", _CURVE)),
    "parallel_power": (("alpha", _REAL), ("exponent", _REAL), ("offset", _REAL), ("stretch", _CURVE)),
    "balanced_parallel": (("offset", _CURVE),),
    "exp_power": (("a", _REAL), ("b", _REAL), ("rho", _REAL), ("r", _REAL)),
    "shifted_power": (("a", _REAL), ("c", _REAL), ("rho", _REAL), ("r", _REAL), ("eps", _REAL)),
    "fechner_exp": (("rate", _REAL),),
    "power_template": (("exponent", _CURVE), ("shape", _CURVE), ("conjugator", _SCALE)),
    "shift_invariant": (("gain", _CURVE), ("shape", _CURVE), ("theta", _REAL)),
    "homogeneous": (("profile", _CURVE), ("c", _REAL)),
}

_NONZERO = {
    "gain_power": ("c", "mu"),
    "gain_exp": ("c",),
    "parallel_log": ("alpha",),
    "parallel_power": ("alpha", "exponent"),
    "shifted_power": ("rho",),
}


@dataclass(frozen=True, eq=False)
class SensitivityFamily:
    """One member of the catalog; immutable, evaluated pointwise.

    ``rectangle``, when given as ((x_lo, x_hi), (s_lo, s_hi)), bounds the
    arguments accepted by :meth:`xi`; evaluation outside raises DomainError.
    """

    kind: str
    params: dict
    rectangle: tuple[tuple[float, float], tuple[float, float]] | None = None

    def xi(self, x: float, s: float) -> float:
        x = float(x)
        s = float(s)
        if self.rectangle is not None:
            (xlo, xhi), (slo, shi) = self.rectangle
            xs = 1e-12 * (1.0 + abs(xlo) + abs(xhi))
            ss = 1e-12 * (1.0 + abs(slo) + abs(shi))
            if not (xlo - xs <= x <= xhi + xs) or not (slo - ss <= s <= shi + ss):
                raise DomainError(f"({x}, {s}) outside declared rectangle")
        value = _EVAL[self.kind](self.params, x, s)
        if not math.isfinite(value):
            raise DomainError(f"{self.kind} family is not finite at ({x}, {s})")
        return value

    __call__ = xi


def eval_xi(family: SensitivityFamily, x: float, s: float) -> float:
    return family.xi(x, s)


# ---------------------------------------------------------------------------
# evaluators


def _eval_weber(p, x, s):
    return p["k"].eval(s) * x


def _eval_power(p, x, s):
    return p["coeff"].eval(s) * x ** p["exponent"].eval(s)


def _eval_template(p, x, s):
    g = p["gain"].eval(s)
    if g == 0.0:
        raise DomainError(f"template gain vanishes at s={s}")
    return p["shape"].eval(p["stretch"].eval(s) * x) / g


def _eval_gain_power(p, x, s):
    base = (s + p["d"]) / p["c"]
    if base < 0:
        raise DomainError(f"gain_power slope base {base} < 0 at s={s}")
    return base ** (1.0 / p["mu"]) * x


def _eval_gain_exp(p, x, s):
    return math.exp((s - p["d"]) / p["c"]) * x


def _eval_identity(p, x, s):
    return x


def _eval_parallel_log(p, x, s):
    arg = p["stretch"].eval(s) * x
    if arg <= 0:
        raise DomainError(f"parallel_log argument {arg} <= 0")
    return p["alpha"] * math.log(arg) + p["beta"] + p["offset"]


def _eval_parallel_power(p, x, s):
    f = p["stretch"].eval(s)
    if f == 0.0:
        raise DomainError(f"parallel_power stretch vanishes at s={s}")
    return p["alpha"] * x ** p["exponent"] + p["offset"] / f ** p["exponent"]


def _eval_balanced_parallel(p, x, s):
    return x + p["offset"].eval(s)


def _eval_exp_power(p, x, s):
    return p["a"] * math.exp(p["b"] * p["rho"] * s) * x ** (p["r"] + p["rho"])


def _eval_shifted_power(p, x, s):
    base = p["c"] * x ** (p["r"] / p["rho"]) + s - p["eps"]
    rho = p["rho"]
    if base < 0 and rho != round(rho):
        raise DomainError(f"shifted_power base {base} < 0 with fractional rho")
    return p["a"] * base**rho


def _eval_fechner_exp(p, x, s):
    return math.exp(p["rate"] * s) * x


def _eval_power_template(p, x, s):
    t = p["conjugator"].invert(s)
    return x ** p["exponent"].eval(s) * p["shape"].eval(x * t)


def _eval_shift_invariant(p, x, s):
    if s <= 0:
        raise DomainError(f"shift_invariant needs s > 0, got {s}")
    root = s ** (1.0 / p["theta"])
    denom = p["gain"].eval(root)
    if denom == 0.0:
        raise DomainError(f"shift_invariant gain vanishes at s={s}")
    return p["gain"].eval(x * root) / denom * p["shape"].eval(x ** p["theta"] * s)


def _eval_homogeneous(p, x, s):
    if s == 0.0:
        return p["c"] * x
    return s * p["profile"].eval(x / s)


def _eval_tabulated(p, x, s):
    xs, ss, table = p["xs"], p["ss"], p["table"]
    if not (xs[0] - 1e-12 <= x <= xs[-1] + 1e-12) or not (ss[0] - 1e-12 <= s <= ss[-1] + 1e-12):
        raise DomainError(f"({x}, {s}) outside tabulated rectangle")
    i = int(np.clip(np.searchsorted(xs, x) - 1, 0, len(xs) - 2))
    j = int(np.clip(np.searchsorted(ss, s) - 1, 0, len(ss) - 2))
    tx = min(max((x - xs[i]) / (xs[i + 1] - xs[i]), 0.0), 1.0)
    ty = min(max((s - ss[j]) / (ss[j + 1] - ss[j]), 0.0), 1.0)
    return float(
        (1 - tx) * ((1 - ty) * table[i, j] + ty * table[i, j + 1])
        + tx * ((1 - ty) * table[i + 1, j] + ty * table[i + 1, j + 1])
    )


_EVAL = {
    "weber": _eval_weber,
    "power": _eval_power,
    "template": _eval_template,
    "gain_power": _eval_gain_power,
    "gain_exp": _eval_gain_exp,
    "identity": _eval_identity,
    "parallel_log": _eval_parallel_log,
    "parallel_power": _eval_parallel_power,
    "balanced_parallel": _eval_balanced_parallel,
    "exp_power": _eval_exp_power,
    "shifted_power": _eval_shifted_power,
    "fechner_exp": _eval_fechner_exp,
    "power_template": _eval_power_template,
    "shift_invariant": _eval_shift_invariant,
    "homogeneous": _eval_homogeneous,
    "tabulated": _eval_tabulated,
}


# ---------------------------------------------------------------------------
# construction


def make_family(kind: str, params: dict | None = None, rectangle=None) -> SensitivityFamily:
    """Validate parameters for ``kind`` and build the family.

    Raises ParamError naming the violated constraint.  When a rectangle is
    supplied, the family is probed on an 8x8 sample of it so that non-finite
    regions surface at construction time.
    """
    params = dict(params or {})
    if kind == "tabulated":
        fam = _make_tabulated(params, rectangle)
    else:
        if kind not in _PARAM_SPECS:
            raise ParamError(f"unknown family kind {kind!r}")
        spec = _PARAM_SPECS[kind]
        missing = [n for n, _ in spec if n not in params]
        if missing:
            raise ParamError(f"family kind {kind!r} missing parameters {missing}")
        extra = set(params) - {n for n, _ in spec}
        if extra:
            raise ParamError(f"family kind {kind!r} got unknown parameters {sorted(extra)}")
        clean: dict = {}
        for name, role in spec:
            v = params[name]
            if role == _REAL:
                try:
                    clean[name] = float(v)
                except (TypeError, ValueError):
                    raise ParamError(f"{kind}.{name} must be a real number, got {v!r}") from None
            else:
                if not hasattr(v, "eval"):
                    raise ParamError(f"{kind}.{name} must be a curve with an eval method")
                if role == _SCALE and not hasattr(v, "invert"):
                    raise ParamError(f"{kind}.{name} must be invertible")
                clean[name] = v
        for name in _NONZERO.get(kind, ()):
            if clean[name] == 0.0:
                raise ParamError(f"{kind}.{name} must be nonzero")
        if kind == "shift_invariant" and clean["theta"] <= 0:
            raise ParamError("shift_invariant.theta must be positive")
        fam = SensitivityFamily(kind, clean, rectangle)
    if rectangle is not None:
        _probe_rectangle(fam)
    return fam


def _probe_rectangle(fam: SensitivityFamily) -> None:
    (xlo, xhi), (slo, shi) = fam.rectangle
    for x in np.linspace(xlo, xhi, 8):
        for s in np.linspace(slo, shi, 8):
            fam.xi(float(x), float(s))  # raises DomainError on a bad region


def _make_tabulated(params: dict, rectangle) -> SensitivityFamily:
    try:
        xs = np.asarray(params["xs"], dtype=float)
        ss = np.asarray(params["ss"], dtype=float)
        table = np.asarray(params["table"], dtype=float)
    except KeyError as exc:
        raise ParamError(f"tabulated family missing {exc}") from None
    if xs.ndim != 1 or ss.ndim != 1 or table.shape != (xs.size, ss.size):
        raise ParamError("tabulated family needs xs, ss vectors and a matching value table")
    if not (np.all(np.diff(xs) > 0) and (ss.size < 2 or np.all(np.diff(ss) > 0))):
        raise ParamError("tabulated family sample vectors must be strictly ascending")
    if not np.all(np.isfinite(table)):
        raise ParamError("tabulated family values must be finite")
    return SensitivityFamily("tabulated", {"xs": xs, "ss": ss, "table": table}, rectangle)


def tabulated_family_from_csv(path) -> SensitivityFamily:
    """Load a tabulated family from long-format CSV with header x,s,xi."""
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
    xs = np.unique(data[:, 0])
    ss = np.unique(data[:, 1])
    if xs.size * ss.size != data.shape[0]:
        raise ParamError(f"{path}: rows must cover the full x by s product grid")
    table = np.full((xs.size, ss.size), np.nan)
    xi_idx = np.searchsorted(xs, data[:, 0])
    si_idx = np.searchsorted(ss, data[:, 1])
    table[xi_idx, si_idx] = data[:, 2]
    if np.isnan(table).any():
        raise ParamError(f"{path}: duplicate or missing grid rows")
    return make_family("tabulated", {"xs": xs, "ss": ss, "table": table})


# ---------------------------------------------------------------------------
# canonical companions


def canonical_companions(family: SensitivityFamily):
    """Return (gamma, eta) satisfying the similarity law identically.

    Returns None for kinds without an exact pair: ``balanced_parallel``,
    ``tabulated``, and ``power_template`` unless its exponent is constant
    (a state-dependent exponent cannot ride a non-trivial state change).
    """
    k = family.kind
    p = family.params
    if k in ("weber", "fechner_exp", "gain_power", "gain_exp", "identity"):
        return maps.lambda_identity(), maps.identity_eta()
    if k == "power":
        return maps.lambda_power_in_s(p["exponent"]), maps.identity_eta()
    if k == "template":
        stretch = p["stretch"]
        if not hasattr(stretch, "invert"):
            return None
        kappa = _Section(p["gain"], stretch)
        return maps.ratio_gamma(kappa, stretch), maps.conjugate_eta(InverseScale(stretch))
    if k == "parallel_log":
        stretch = p["stretch"]
        if not hasattr(stretch, "invert"):
            return None
        return maps.lambda_power(0.0), maps.conjugate_eta(InverseScale(stretch))
    if k == "parallel_power":
        stretch = p["stretch"]
        if not hasattr(stretch, "invert"):
            return None
        return maps.lambda_power(p["exponent"]), maps.conjugate_eta(InverseScale(stretch))
    if k == "exp_power":
        if p["b"] == 0.0:
            return maps.lambda_power(p["r"] + p["rho"]), maps.identity_eta()
        return maps.lambda_power(p["r"]), maps.additive_log_eta(1.0, p["b"])
    if k == "shifted_power":
        return maps.lambda_power(p["r"]), maps.affine_shift_eta(p["r"] / p["rho"], p["eps"])
    if k == "power_template":
        exponent = p["exponent"]
        if not isinstance(exponent, Constant):
            return None
        return maps.lambda_power(exponent.value), maps.conjugate_eta(p["conjugator"])
    if k == "shift_invariant":
        theta = p["theta"]
        root = power_scale(1.0, 1.0 / theta, 0.0)
        return maps.ratio_gamma(p["gain"], root), maps.power_scale_eta(theta)
    if k == "homogeneous":
        return maps.lambda_identity(), maps.power_scale_eta(-1.0)
    return None


@dataclass(frozen=True, eq=False)
class _Section:
    """gain(stretch^-1(t)) as an eval-only curve (template gamma kernel)."""

    gain: object
    stretch: object

    def eval(self, t: float) -> float:
        return self.gain.eval(self.stretch.invert(t))

    __call__ = eval


# ---------------------------------------------------------------------------
# config support


def family_from_spec(spec: dict) -> SensitivityFamily:
    from .scales import scale_from_spec

    if not isinstance(spec, dict) or "kind" not in spec:
        raise ParamError(f"family spec must be a mapping with 'kind', got {spec!r}")
    kind = spec["kind"]
    rectangle = None
    if "rectangle" in spec:
        rx, rs = spec["rectangle"]
        rectangle = ((float(rx[0]), float(rx[1])), (float(rs[0]), float(rs[1])))
    if kind == "tabulated":
        if "csv" in spec:
            return tabulated_family_from_csv(spec["csv"])
        return make_family("tabulated", {k: spec[k] for k in ("xs", "ss", "table")}, rectangle)
    if kind not in _PARAM_SPECS:
        raise ParamError(f"unknown family kind {kind!r}")
    params = {}
    for name, role in _PARAM_SPECS[kind]:
        if name not in spec:
            raise ParamError(f"family kind {kind!r} missing parameter {name!r}")
        v = spec[name]
        params[name] = float(v) if role == _REAL else scale_from_spec(v)
    return make_family(kind, params, rectangle)
