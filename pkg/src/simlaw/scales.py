"""Strictly monotone one-dimensional scales with exact inversion.

A :class:`ScaleFunction` is a strictly monotone real function on a closed
interval.  Five shapes are supported:

======== ======================= =============================
kind     formula                 parameters
======== ======================= =============================
affine   a*x + b                 a != 0
log      a*ln(x) + b             a != 0, domain in (0, inf)
power    a*x**p + b              a != 0, p != 0, domain >= 0
exp      a*e**(k*x) + b          a != 0, k != 0
table    piecewise linear        strictly monotone knot values
======== ======================= =============================

Parametric kinds invert through their closed-form inverse; the table kind
inverts by bisection to 1e-12 absolute accuracy in x.  Both directions obey
the round-trip bound ``|invert(eval(x)) - x| <= 1e-9 * (1 + |x|)``.

Scale objects are immutable and safe to share between threads.

The module also provides eval-only curves for coefficient functions that
never need inversion: :class:`Constant`, :class:`TableCurve` (piecewise
linear without a monotonicity requirement), :class:`InverseScale` (a view
swapping eval and invert) and :class:`ComposedCurve`.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, IoError, NonMonotoneError, ParamError, RangeError

__all__ = [
    "ScaleFunction",
    "Constant",
    "TableCurve",
    "InverseScale",
    "ComposedCurve",
    "affine",
    "log_scale",
    "power_scale",
    "exp_scale",
    "table_scale",
    "identity_scale",
    "scale_from_spec",
]

# Table bisection stops once the bracket is narrower than this (absolute x).
_BISECT_TOL = 1e-12
# Slack applied to domain/range membership tests so that values a few ulp
# past an endpoint (from upstream rounding) are still accepted.
_EDGE_SLACK = 1e-9

_WIDE = 1e9


def _interval(lo: float, hi: float) -> tuple[float, float]:
    lo, hi = float(lo), float(hi)
    if not (math.isfinite(lo) and math.isfinite(hi)) or not lo < hi:
        raise ParamError(f"domain must be a finite interval with lo < hi, got ({lo}, {hi})")
    return lo, hi


@dataclass(frozen=True, eq=False)
class ScaleFunction:
    """A strictly monotone function on a closed interval.

    Construct through the module-level factories (:func:`affine`,
    :func:`log_scale`, :func:`power_scale`, :func:`exp_scale`,
    :func:`table_scale`) which validate monotonicity eagerly.
    """

    kind: str
    params: tuple[float, ...]
    domain: tuple[float, float]
    knots_x: np.ndarray | None = field(default=None, repr=False)
    knots_y: np.ndarray | None = field(default=None, repr=False)

    # -- evaluation ---------------------------------------------------------

    def _check_domain(self, x: float) -> float:
        lo, hi = self.domain
        # Slack follows the queried value, not the interval width, so a huge
        # far endpoint cannot mask a clearly out-of-domain query.
        slack = _EDGE_SLACK * (1.0 + abs(x))
        if not (lo - slack <= x <= hi + slack):
            raise DomainError(f"{x!r} outside domain [{lo}, {hi}] of {self.kind} scale")
        # Clamp ulp-level overshoot so downstream formulas stay real.
        return min(max(x, lo), hi)

    def eval(self, x: float) -> float:
        x = self._check_domain(float(x))
        k = self.kind
        if k == "affine":
            a, b = self.params
            return a * x + b
        if k == "log":
            a, b = self.params
            return a * math.log(x) + b
        if k == "power":
            a, p, b = self.params
            return a * x**p + b
        if k == "exp":
            a, kk, b = self.params
            return a * math.exp(kk * x) + b
        # table
        return float(np.interp(x, self.knots_x, self.knots_y))

    __call__ = eval

    # -- inversion ----------------------------------------------------------

    def range(self) -> tuple[float, float]:
        """Attained value interval, ordered low to high."""
        lo, hi = self.domain
        if self.kind == "table":
            y0, y1 = float(self.knots_y[0]), float(self.knots_y[-1])
        else:
            y0, y1 = self.eval(lo), self.eval(hi)
        return (y0, y1) if y0 <= y1 else (y1, y0)

    def _check_range(self, y: float) -> float:
        lo, hi = self.range()
        slack = _EDGE_SLACK * (1.0 + abs(y))
        if not (lo - slack <= y <= hi + slack):
            raise RangeError(f"{y!r} outside range [{lo}, {hi}] of {self.kind} scale")
        return min(max(y, lo), hi)

    def invert(self, y: float) -> float:
        """Return x in the domain with eval(x) = y, else raise RangeError."""
        y = self._check_range(float(y))
        k = self.kind
        if k == "affine":
            a, b = self.params
            return (y - b) / a
        if k == "log":
            a, b = self.params
            return math.exp((y - b) / a)
        if k == "power":
            a, p, b = self.params
            t = (y - b) / a
            t = max(t, 0.0)
            return t ** (1.0 / p)
        if k == "exp":
            a, kk, b = self.params
            t = (y - b) / a
            if t <= 0.0:
                raise RangeError(f"{y!r} not attained by exp scale")
            return math.log(t) / kk
        return self._invert_table(y)

    def _invert_table(self, y: float) -> float:
        xs, ys = self.knots_x, self.knots_y
        lo, hi = float(xs[0]), float(xs[-1])
        increasing = ys[-1] > ys[0]
        f_lo = float(ys[0])
        # Bisection on the interpolant; sign convention follows direction.
        if (y <= f_lo) == increasing:
            return lo
        a, b = lo, hi
        while b - a > _BISECT_TOL:
            mid = 0.5 * (a + b)
            v = float(np.interp(mid, xs, ys))
            if (v < y) == increasing:
                a = mid
            else:
                b = mid
        return 0.5 * (a + b)

    # -- views and properties -----------------------------------------------

    def is_increasing(self) -> bool:
        lo, hi = self.domain
        if self.kind == "table":
            return bool(self.knots_y[-1] > self.knots_y[0])
        return self.eval(hi) > self.eval(lo)

    def inverse(self) -> "InverseScale":
        """A view of the inverse function (eval and invert swapped)."""
        return InverseScale(self)

    # -- serialization (table kind) -----------------------------------------

    def to_csv(self, path) -> None:
        if self.kind != "table":
            raise ParamError("only table scales serialize to CSV")
        try:
            with open(path, "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["x", "y"])
                for x, y in zip(self.knots_x, self.knots_y):
                    w.writerow([repr(float(x)), repr(float(y))])
        except OSError as exc:
            raise IoError(str(exc)) from exc

    @staticmethod
    def from_csv(path) -> "ScaleFunction":
        try:
            with open(path, newline="") as fh:
                rows = list(csv.reader(fh))
        except OSError as exc:
            raise IoError(str(exc)) from exc
        if not rows or [c.strip() for c in rows[0]] != ["x", "y"]:
            raise ParamError(f"{path}: expected header 'x,y'")
        try:
            xs = [float(r[0]) for r in rows[1:] if r]
            ys = [float(r[1]) for r in rows[1:] if r]
        except (ValueError, IndexError) as exc:
            raise ParamError(f"{path}: malformed row: {exc}") from exc
        return table_scale(xs, ys)


# ---------------------------------------------------------------------------
# factories


def affine(a: float, b: float, domain: tuple[float, float] = (-_WIDE, _WIDE)) -> ScaleFunction:
    """a*x + b with a != 0."""
    if a == 0:
        raise ParamError("affine scale needs a != 0")
    return ScaleFunction("affine", (float(a), float(b)), _interval(*domain))


def log_scale(a: float, b: float, domain: tuple[float, float] = (1e-12, _WIDE)) -> ScaleFunction:
    """a*ln(x) + b on a positive domain."""
    if a == 0:
        raise ParamError("log scale needs a != 0")
    dom = _interval(*domain)
    if dom[0] <= 0:
        raise ParamError("log scale needs a strictly positive domain")
    return ScaleFunction("log", (float(a), float(b)), dom)


def power_scale(a: float, p: float, b: float, domain: tuple[float, float] | None = None) -> ScaleFunction:
    """a*x**p + b on a nonnegative domain (positive when p < 0)."""
    if a == 0:
        raise ParamError("power scale needs a != 0")
    if p == 0:
        raise ParamError("power scale needs p != 0")
    if domain is None:
        domain = (1e-9, _WIDE) if p < 0 else (0.0, _WIDE)
    dom = _interval(*domain)
    if dom[0] < 0:
        raise ParamError("power scale needs a nonnegative domain")
    if p < 0 and dom[0] == 0:
        raise ParamError("power scale with p < 0 needs a strictly positive domain")
    return ScaleFunction("power", (float(a), float(p), float(b)), dom)


def exp_scale(a: float, k: float, b: float, domain: tuple[float, float] | None = None) -> ScaleFunction:
    """a*e**(k*x) + b; default domain keeps the exponent below overflow."""
    if a == 0:
        raise ParamError("exp scale needs a != 0")
    if k == 0:
        raise ParamError("exp scale needs k != 0")
    if domain is None:
        lim = min(_WIDE, 700.0 / abs(k))
        domain = (-lim, lim)
    return ScaleFunction("exp", (float(a), float(k), float(b)), _interval(*domain))


def identity_scale(domain: tuple[float, float] = (-_WIDE, _WIDE)) -> ScaleFunction:
    return affine(1.0, 0.0, domain)


def table_scale(xs, ys) -> ScaleFunction:
    """Piecewise-linear scale through strictly monotone knots."""
    kx = np.asarray(xs, dtype=float)
    ky = np.asarray(ys, dtype=float)
    if kx.ndim != 1 or kx.shape != ky.shape or kx.size < 2:
        raise ParamError("table scale needs two equal-length knot vectors, len >= 2")
    if not (np.all(np.isfinite(kx)) and np.all(np.isfinite(ky))):
        raise ParamError("table knots must be finite")
    dx = np.diff(kx)
    if not np.all(dx > 0):
        raise NonMonotoneError("table knot x values must be strictly ascending")
    dy = np.diff(ky)
    if not (np.all(dy > 0) or np.all(dy < 0)):
        raise NonMonotoneError("table knot y values must be strictly monotone")
    kx.setflags(write=False)
    ky.setflags(write=False)
    return ScaleFunction("table", (), (float(kx[0]), float(kx[-1])), kx, ky)


# ---------------------------------------------------------------------------
# eval-only curves


@dataclass(frozen=True, eq=False)
class Constant:
    """A constant coefficient curve.  Has no inverse."""

    value: float

    def eval(self, x: float) -> float:
        return self.value

    __call__ = eval

    @property
    def domain(self) -> tuple[float, float]:
        return (-math.inf, math.inf)

    def invert(self, y: float) -> float:
        raise NonMonotoneError("a constant curve has no inverse")


@dataclass(frozen=True, eq=False)
class TableCurve:
    """Piecewise-linear curve without a monotonicity requirement."""

    knots_x: np.ndarray
    knots_y: np.ndarray

    def __init__(self, xs, ys):
        kx = np.asarray(xs, dtype=float)
        ky = np.asarray(ys, dtype=float)
        if kx.ndim != 1 or kx.shape != ky.shape or kx.size < 2:
            raise ParamError("table curve needs two equal-length knot vectors, len >= 2")
        if not np.all(np.diff(kx) > 0):
            raise NonMonotoneError("table curve knot x values must be strictly ascending")
        if not (np.all(np.isfinite(kx)) and np.all(np.isfinite(ky))):
            raise ParamError("table curve knots must be finite")
        kx.setflags(write=False)
        ky.setflags(write=False)
        object.__setattr__(self, "knots_x", kx)
        object.__setattr__(self, "knots_y", ky)

    @property
    def domain(self) -> tuple[float, float]:
        return (float(self.knots_x[0]), float(self.knots_x[-1]))

    def eval(self, x: float) -> float:
        lo, hi = self.domain
        slack = _EDGE_SLACK * (1.0 + abs(x))
        if not (lo - slack <= x <= hi + slack):
            raise DomainError(f"{x!r} outside curve domain [{lo}, {hi}]")
        return float(np.interp(x, self.knots_x, self.knots_y))

    __call__ = eval


@dataclass(frozen=True, eq=False)
class InverseScale:
    """View of a scale's inverse: eval becomes invert and vice versa."""

    base: ScaleFunction

    def eval(self, x: float) -> float:
        return self.base.invert(x)

    __call__ = eval

    def invert(self, y: float) -> float:
        return self.base.eval(y)

    @property
    def domain(self) -> tuple[float, float]:
        return self.base.range()

    def range(self) -> tuple[float, float]:
        lo, hi = self.base.domain
        return (lo, hi)

    def is_increasing(self) -> bool:
        return self.base.is_increasing()

    def inverse(self) -> ScaleFunction:
        return self.base


@dataclass(frozen=True, eq=False)
class ComposedCurve:
    """outer(inner(x)) as an eval-only curve."""

    outer: object
    inner: object

    def eval(self, x: float) -> float:
        return self.outer.eval(self.inner.eval(x))

    __call__ = eval


# ---------------------------------------------------------------------------
# config support


def scale_from_spec(spec: dict) -> object:
    """Build a scale or curve from a plain config mapping.

    The mapping carries ``kind`` plus the factory parameters, for example
    ``{"kind": "affine", "a": 1.0, "b": 0.0}`` or
    ``{"kind": "table", "csv": "knots.csv"}``.  ``const`` builds a
    :class:`Constant` coefficient.
    """
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ParamError(f"scale spec must be a mapping with 'kind', got {spec!r}")
    kind = spec["kind"]
    dom = tuple(spec["domain"]) if "domain" in spec else None

    def need(*names):
        missing = [n for n in names if n not in spec]
        if missing:
            raise ParamError(f"scale kind {kind!r} missing parameters {missing}")
        return [float(spec[n]) for n in names]

    if kind == "affine":
        a, b = need("a", "b")
        return affine(a, b, dom) if dom else affine(a, b)
    if kind == "log":
        a, b = need("a", "b")
        return log_scale(a, b, dom) if dom else log_scale(a, b)
    if kind == "power":
        a, p, b = need("a", "p", "b")
        return power_scale(a, p, b, dom)
    if kind == "exp":
        a, k, b = need("a", "k", "b")
        return exp_scale(a, k, b, dom)
    if kind == "const":
        (v,) = need("value")
        return Constant(v)
    if kind == "identity":
        return identity_scale(dom) if dom else identity_scale()
    if kind == "table":
        if "csv" in spec:
            return ScaleFunction.from_csv(spec["csv"])
        if "x" in spec and "y" in spec:
            return table_scale(spec["x"], spec["y"])
        raise ParamError("table scale spec needs 'csv' or 'x'/'y' knot lists")
    if kind == "curve":
        if "x" in spec and "y" in spec:
            return TableCurve(spec["x"], spec["y"])
        raise ParamError("curve spec needs 'x'/'y' knot lists")
    raise ParamError(f"unknown scale kind {kind!r}")
