"""Evaluation grids and residual reports shared by every checker.

A :class:`Grid` bundles ascending sample vectors for stimulus intensity x,
scaling factor lambda and state s, together with the enclosing intervals.
The stimulus interval must absorb every sampled product lambda*x
(product closure); offending (x, lambda) pairs are filtered at construction
and the filtered count is recorded, never silently dropped.

A :class:`ResidualReport` is the uniform result of a sweep: the maximum and
mean absolute residual, the worst point, how many points were evaluated,
how many were excluded as out of domain, and whether the maximum clears the
tolerance.  Composite checks (for example the translation-equation check,
which combines a cocycle part and two boundary parts) expose the pieces in
``parts``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyGridError, ParamError, TooManyExclusionsError

__all__ = ["Grid", "ResidualReport", "ResidualAccumulator"]


def _ascending(vec, name: str) -> np.ndarray:
    arr = np.asarray(vec, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise ParamError(f"{name} samples must form a nonempty vector")
    if not np.all(np.isfinite(arr)):
        raise ParamError(f"{name} samples must be finite")
    if arr.size > 1 and not np.all(np.diff(arr) > 0):
        raise ParamError(f"{name} samples must be strictly ascending")
    arr.setflags(write=False)
    return arr


def _hull(arr: np.ndarray, interval) -> tuple[float, float]:
    if interval is None:
        return (float(arr[0]), float(arr[-1]))
    lo, hi = float(interval[0]), float(interval[1])
    if not lo <= hi:
        raise ParamError(f"interval must satisfy lo <= hi, got ({lo}, {hi})")
    return (lo, hi)


@dataclass(frozen=True, eq=False)
class Grid:
    """Sample vectors plus enclosing intervals for (x, lambda, s) sweeps."""

    x: np.ndarray
    lam: np.ndarray
    s: np.ndarray
    x_interval: tuple[float, float]
    lam_interval: tuple[float, float]
    s_interval: tuple[float, float]
    pair_ok: np.ndarray = field(repr=False)
    closure_filtered: int

    @staticmethod
    def build(x, lam, s, x_interval=None, lam_interval=None, s_interval=None) -> "Grid":
        """Build from sample vectors; intervals default to generous hulls.

        When ``x_interval`` is omitted it is widened to cover every sampled
        product lambda*x, so no pair is filtered.  Passing a tighter
        interval turns on closure filtering.
        """
        xv = _ascending(x, "x")
        lv = _ascending(lam, "lambda")
        sv = _ascending(s, "s")
        prods = np.outer(xv, lv)
        if x_interval is None:
            lo = min(float(xv[0]), float(prods.min()))
            hi = max(float(xv[-1]), float(prods.max()))
            xint = (lo, hi)
        else:
            xint = _hull(xv, x_interval)
        lint = _hull(lv, lam_interval)
        sint = _hull(sv, s_interval)
        slack = 1e-12 * (1.0 + abs(xint[0]) + abs(xint[1]))
        ok = (prods >= xint[0] - slack) & (prods <= xint[1] + slack)
        filtered = int(ok.size - ok.sum())
        if not ok.any():
            raise EmptyGridError("product closure filtered every (x, lambda) pair")
        ok.setflags(write=False)
        return Grid(xv, lv, sv, xint, lint, sint, ok, filtered)

    @staticmethod
    def regular(x: tuple, lam: tuple, s: tuple, **intervals) -> "Grid":
        """Build from (lo, hi, n) triples with evenly spaced samples."""

        def lin(spec, name):
            lo, hi, n = spec
            n = int(n)
            if n < 1:
                raise ParamError(f"{name} sample count must be >= 1")
            if n == 1:
                return np.array([float(lo)])
            return np.linspace(float(lo), float(hi), n)

        return Grid.build(lin(x, "x"), lin(lam, "lambda"), lin(s, "s"), **intervals)

    def iter_pairs(self):
        """Yield (x, lam) for every closure-valid sampled pair."""
        ok = self.pair_ok
        for i, xv in enumerate(self.x):
            row = ok[i]
            for j, lv in enumerate(self.lam):
                if row[j]:
                    yield float(xv), float(lv)

    def contains_s(self, value: float) -> bool:
        lo, hi = self.s_interval
        slack = 1e-12 * (1.0 + abs(lo) + abs(hi))
        return lo - slack <= value <= hi + slack

    def contains_lam(self, value: float) -> bool:
        lo, hi = self.lam_interval
        slack = 1e-12 * (1.0 + abs(lo) + abs(hi))
        return lo - slack <= value <= hi + slack


@dataclass(frozen=True)
class ResidualReport:
    """Outcome of one residual sweep."""

    max_abs: float
    mean_abs: float
    worst_point: tuple
    evaluated_count: int
    excluded_count: int
    tolerance: float
    passed: bool
    parts: dict | None = None

    def to_dict(self) -> dict:
        d = {
            "max_abs": float(self.max_abs),
            "mean_abs": float(self.mean_abs),
            "worst_point": [float(v) for v in self.worst_point],
            "evaluated_count": int(self.evaluated_count),
            "excluded_count": int(self.excluded_count),
            "tolerance": float(self.tolerance),
            "passed": bool(self.passed),
        }
        if self.parts is not None:
            d["parts"] = {k: v.to_dict() for k, v in self.parts.items()}
        return d


class ResidualAccumulator:
    """Collects |residual| values point by point and closes into a report."""

    def __init__(self, label: str = "sweep"):
        self.label = label
        self.max_abs = 0.0
        self.sum_abs = 0.0
        self.worst_point: tuple = ()
        self.evaluated = 0
        self.excluded = 0

    def add(self, value: float, point: tuple) -> None:
        v = abs(float(value))
        self.evaluated += 1
        self.sum_abs += v
        if v >= self.max_abs:
            self.max_abs = v
            self.worst_point = point

    def exclude(self) -> None:
        self.excluded += 1

    def finish(self, tolerance: float, parts: dict | None = None) -> ResidualReport:
        total = self.evaluated + self.excluded
        if self.evaluated == 0:
            raise EmptyGridError(f"{self.label}: no grid point could be evaluated")
        if self.excluded > 0.5 * total:
            raise TooManyExclusionsError(
                f"{self.label}: {self.excluded} of {total} points excluded (over half)"
            )
        mean = self.sum_abs / self.evaluated
        worst = self.worst_point if self.worst_point else (math.nan,)
        return ResidualReport(
            max_abs=self.max_abs,
            mean_abs=mean,
            worst_point=worst,
            evaluated_count=self.evaluated,
            excluded_count=self.excluded,
            tolerance=float(tolerance),
            passed=self.max_abs <= tolerance,
            parts=parts,
        )


def merge_reports(label_parts: dict[str, ResidualReport], tolerance: float) -> ResidualReport:
    """Pool component reports into one composite report with ``parts``."""
    if not label_parts:
        raise EmptyGridError("no component reports to merge")
    max_abs = 0.0
    worst: tuple = ()
    total_sum = 0.0
    evaluated = 0
    excluded = 0
    for rep in label_parts.values():
        if rep.max_abs >= max_abs:
            max_abs = rep.max_abs
            worst = rep.worst_point
        total_sum += rep.mean_abs * rep.evaluated_count
        evaluated += rep.evaluated_count
        excluded += rep.excluded_count
    return ResidualReport(
        max_abs=max_abs,
        mean_abs=total_sum / evaluated,
        worst_point=worst,
        evaluated_count=evaluated,
        excluded_count=excluded,
        tolerance=float(tolerance),
        passed=all(r.passed for r in label_parts.values()),
        parts=dict(label_parts),
    )
