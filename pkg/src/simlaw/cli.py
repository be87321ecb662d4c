"""Command-line front end: config-driven checks, fits, and simulation.

One command, five verbs selected by the config file:

- ``simulate``  write CSV samples from a family or a psychometric family
- ``check``     run law / map / representation checkers and report
- ``fit``       run a fitting operation and report the result
- ``classify``  label a family with the laws it satisfies
- ``report``    render a previously written report as an aligned table

The config is YAML; nested mappings describe scales, families, maps and
representations in the same ``kind`` + named-parameter shape used by the
``*_from_spec`` builders.  Reports are YAML with sorted keys and carry the
tool version plus the fully resolved config, so a rerun with the same
config and seed is byte-identical.  Exit status is 0 exactly when every
check in the run passed (for ``classify``: when some specialization label
was found); config or runtime errors exit with status 2.
"""

from __future__ import annotations

import sys
from pathlib import Path

import click
import numpy as np
import yaml

from . import __version__
from .errors import ConfigError, IoError, SimlawError
from .families import family_from_spec
from .fitting import SampleSet, fit_family, fit_power_per_s, fit_scales_subtractive
from .grids import Grid
from .laws import (
    classify_laws,
    iverson_residual,
    lundberg_residual,
    make_lundberg_case,
    power_law_residual,
    shift_invariance_residual,
    weber_residual,
)
from .maps import (
    check_exponent_invariance,
    check_mult_translational,
    derive_gamma,
    eta_from_spec,
    gamma_from_spec,
)
from .representations import (
    check_family_properties,
    decompose_balanced_parallel,
    export_psychometric_csv,
    logistic_table,
    make_psychometric,
    representation_from_spec,
    representation_residual,
)
from .scales import scale_from_spec

_COMMANDS = ("simulate", "check", "fit", "classify", "report")

_GRID_DEFAULT = {"x": [0.5, 1.0, 32], "lam": [0.5, 1.0, 32], "s": [0.5, 1.0, 32]}


def _fail(msg: str) -> None:
    raise ConfigError(msg)


def _axis(spec, name: str) -> tuple[float, float, int]:
    try:
        lo, hi, n = spec
        lo, hi, n = float(lo), float(hi), int(n)
    except (TypeError, ValueError):
        _fail(f"grid axis {name!r} must be [lo, hi, count], got {spec!r}")
    if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
        _fail(f"grid axis {name!r} needs finite bounds with lo < hi")
    if n < 4:
        _fail(f"grid axis {name!r} needs at least 4 samples, got {n}")
    return lo, hi, n


def _samples(spec, name: str) -> np.ndarray:
    lo, hi, n = _axis(spec, name)
    return np.linspace(lo, hi, n)


def _interval(spec, name: str):
    if spec is None:
        return None
    try:
        lo, hi = float(spec[0]), float(spec[1])
    except (TypeError, ValueError, IndexError):
        _fail(f"{name} must be [lo, hi], got {spec!r}")
    if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
        _fail(f"{name} needs finite bounds with lo < hi")
    return lo, hi


def _build_grid(cfg: dict) -> Grid:
    spec = dict(_GRID_DEFAULT)
    spec.update(cfg.get("grid") or {})
    axes = {}
    for name in ("x", "lam", "s"):
        axes[name] = list(spec.get(name, _GRID_DEFAULT[name]))
    return Grid.build(
        _samples(axes["x"], "x"),
        _samples(axes["lam"], "lam"),
        _samples(axes["s"], "s"),
        x_interval=_interval(spec.get("x_interval"), "x_interval"),
        lam_interval=_interval(spec.get("lam_interval"), "lam_interval"),
        s_interval=_interval(spec.get("s_interval"), "s_interval"),
    )


def _tolerance(cfg: dict) -> float:
    tol = float(cfg.get("tolerance", 1e-8))
    if not (tol > 0):
        _fail(f"tolerance must be positive, got {tol}")
    return tol


def _link_from_spec(spec):
    if spec is None or (isinstance(spec, dict) and spec.get("kind") == "logistic"):
        spec = spec or {}
        return logistic_table(float(spec.get("halfwidth", 16.0)), int(spec.get("knots", 2001)))
    return scale_from_spec(spec)


def _psychometric_from_cfg(spec: dict):
    if "representation" not in spec or "interval" not in spec:
        _fail("psychometric spec needs 'representation' and 'interval'")
    rep = representation_from_spec(spec["representation"])
    link = _link_from_spec(spec.get("link"))
    interval = _interval(spec["interval"], "psychometric interval")
    return make_psychometric(rep, link, interval)


# ---------------------------------------------------------------------------
# verbs


def _run_check(cfg: dict, grid: Grid, out_dir: Path) -> tuple[dict, bool]:
    tol = _tolerance(cfg)
    checks = cfg.get("checks")
    if not isinstance(checks, list) or not checks:
        _fail("'check' needs a non-empty 'checks' list")
    results = []
    for i, chk in enumerate(checks):
        if not isinstance(chk, dict) or "type" not in chk:
            _fail(f"check #{i + 1} must be a mapping with a 'type'")
        ctype = chk["type"]
        ctol = float(chk.get("tolerance", tol))
        if ctype == "law":
            report = iverson_residual(
                family_from_spec(chk["family"]), gamma_from_spec(chk["gamma"]), eta_from_spec(chk["eta"]), grid, ctol
            )
        elif ctype == "weber":
            report = weber_residual(family_from_spec(chk["family"]), grid, ctol)
        elif ctype == "power_law":
            report = power_law_residual(
                family_from_spec(chk["family"]), scale_from_spec(chk["exponent"]), grid, ctol
            )
        elif ctype == "shift":
            report = shift_invariance_residual(family_from_spec(chk["family"]), float(chk["theta"]), grid, ctol)
        elif ctype == "translational":
            report = check_mult_translational(eta_from_spec(chk["eta"]), grid, ctol)
        elif ctype == "gamma_ratio_form":
            _, report = derive_gamma(gamma_from_spec(chk["gamma"]), scale_from_spec(chk["h"]), grid, ctol)
        elif ctype == "exponent_invariance":
            report = check_exponent_invariance(
                scale_from_spec(chk["phi"]), eta_from_spec(chk["eta"]), grid, ctol
            )
        elif ctype == "representation":
            report = representation_residual(
                family_from_spec(chk["family"]), representation_from_spec(chk["representation"]), grid, ctol
            )
        elif ctype == "decompose_balanced":
            _, report = decompose_balanced_parallel(family_from_spec(chk["family"]), grid, ctol)
        elif ctype == "lundberg":
            case = make_lundberg_case(int(chk["case"]), _lundberg_params(chk.get("params") or {}))
            report = lundberg_residual(case, grid.x, grid.x, ctol)
        elif ctype == "psychometric_properties":
            pf = _psychometric_from_cfg(chk["psychometric"])
            backgrounds = _samples(chk.get("backgrounds", [pf.interval[0], pf.interval[1], 8]), "backgrounds")
            probs = _samples(chk.get("probs", [0.2, 0.8, 5]), "probs")
            parts = check_family_properties(pf, backgrounds, probs, ctol)
            results.extend(
                {
                    "name": f"{i + 1:02d}_{ctype}_{key}",
                    "type": ctype,
                    "report": rep.to_dict(),
                }
                for key, rep in sorted(parts.items())
            )
            continue
        else:
            _fail(f"unknown check type {ctype!r}")
        results.append({"name": f"{i + 1:02d}_{ctype}", "type": ctype, "report": report.to_dict()})
    all_passed = all(r["report"]["passed"] for r in results)
    return {"results": results}, all_passed


def _lundberg_params(raw: dict) -> dict:
    params = {}
    for key, value in raw.items():
        params[key] = scale_from_spec(value) if isinstance(value, dict) else float(value)
    return params


def _run_simulate(cfg: dict, out_dir: Path) -> tuple[dict, bool]:
    seed = int(cfg.get("seed", 42))
    sigma = float(cfg.get("noise_sigma", 0.0))
    output = cfg.get("output", "samples.csv")
    path = out_dir / output
    if "psychometric" in cfg:
        pf = _psychometric_from_cfg(cfg["psychometric"])
        backgrounds = _samples(cfg.get("backgrounds", [pf.interval[0], pf.interval[1], 8]), "backgrounds")
        stimuli = _samples(cfg.get("stimuli", [pf.interval[0], pf.interval[1], 16]), "stimuli")
        rows = export_psychometric_csv(pf, backgrounds, stimuli, path)
        info = {"output": str(output), "rows": rows, "mode": "psychometric"}
        return {"results": [], "simulated": info}, True
    if "family" not in cfg:
        _fail("'simulate' needs a 'family' or 'psychometric' section")
    family = family_from_spec(cfg["family"])
    grid = _build_grid(cfg)
    samples = SampleSet.from_family(family, grid.x, grid.s, noise_sigma=sigma, seed=seed)
    rows = samples.to_csv(path)
    info = {"output": str(output), "rows": rows, "mode": "family", "noise_sigma": sigma, "seed": seed}
    return {"results": [], "simulated": info}, True


def _load_samples(cfg: dict, config_dir: Path) -> SampleSet:
    if "input" in cfg:
        return SampleSet.from_csv(config_dir / cfg["input"])
    if "family" in cfg:
        family = family_from_spec(cfg["family"])
        grid = _build_grid(cfg)
        seed = int(cfg.get("seed", 42))
        sigma = float(cfg.get("noise_sigma", 0.0))
        return SampleSet.from_family(family, grid.x, grid.s, noise_sigma=sigma, seed=seed)
    _fail("'fit' needs an 'input' CSV or a 'family' to sample")


def _run_fit(cfg: dict, out_dir: Path, config_dir: Path) -> tuple[dict, bool]:
    tol = _tolerance(cfg)
    fit_cfg = cfg.get("fit")
    if not isinstance(fit_cfg, dict) or "op" not in fit_cfg:
        _fail("'fit' needs a 'fit' mapping with an 'op'")
    samples = _load_samples(cfg, config_dir)
    op = fit_cfg["op"]
    if op == "power_per_s":
        per_state, result = fit_power_per_s(samples, tol)
        payload = {
            "op": op,
            "per_state": {
                "s": [float(v) for v in per_state.s],
                "coeff": [float(v) for v in per_state.coeff],
                "exponent": [float(v) for v in per_state.exponent],
            },
        }
    elif op == "family":
        if "kind" not in fit_cfg or "init" not in fit_cfg:
            _fail("fit op 'family' needs 'kind' and 'init'")
        result = fit_family(
            samples,
            fit_cfg["kind"],
            {k: float(v) for k, v in fit_cfg["init"].items()},
            fixed={k: float(v) for k, v in (fit_cfg.get("fixed") or {}).items()},
            tolerance=tol,
        )
        payload = {"op": op, "kind": fit_cfg["kind"]}
    elif op == "scales_subtractive":
        knots = int(fit_cfg.get("knots", 41))
        u_scale, w_scale, result = fit_scales_subtractive(samples, knots, tolerance=tol)
        u_path, w_path = out_dir / "u_table.csv", out_dir / "w_table.csv"
        u_scale.to_csv(u_path)
        w_scale.to_csv(w_path)
        payload = {"op": op, "u_table": u_path.name, "w_table": w_path.name}
    else:
        _fail(f"unknown fit op {op!r}")
    payload["params"] = {k: float(v) for k, v in result.params.items()}
    payload["iterations"] = int(result.iterations)
    payload["converged"] = bool(result.converged)
    results = [{"name": f"01_fit_{op}", "type": "fit", "report": result.residual.to_dict()}]
    return {"results": results, "fit": payload}, bool(result.residual.passed)


def _run_classify(cfg: dict, grid: Grid, out_dir: Path) -> tuple[dict, bool]:
    tol = _tolerance(cfg)
    if "family" not in cfg:
        _fail("'classify' needs a 'family' section")
    family = family_from_spec(cfg["family"])
    outcome = classify_laws(family, grid, tol)
    matched = tuple(outcome.labels) != ("GENERAL",)
    results = []
    label_keys = {"WEBER": "weber", "POWER_LAW": "power_law", "SHIFT": "shift"}
    for label in outcome.labels:
        key = label_keys.get(label)
        if key and key in outcome.reports:
            results.append({"name": f"label_{key}", "type": "classify", "report": outcome.reports[key].to_dict()})
    payload = {
        "labels": list(outcome.labels),
        "theta_hat": None if outcome.theta_hat is None else float(outcome.theta_hat),
        "candidates": {k: v.to_dict() for k, v in sorted(outcome.reports.items())},
    }
    return {"results": results, "classification": payload}, matched


def _render_table(data: dict) -> str:
    rows = [("check", "max_abs", "mean_abs", "evaluated", "excluded", "tolerance", "pass")]
    for entry in data.get("results", []):
        rep = entry["report"]
        rows.append(
            (
                str(entry["name"]),
                f"{rep['max_abs']:.3e}",
                f"{rep['mean_abs']:.3e}",
                str(rep["evaluated_count"]),
                str(rep["excluded_count"]),
                f"{rep['tolerance']:.3e}",
                "pass" if rep["passed"] else "FAIL",
            )
        )
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    lines = ["  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip() for row in rows]
    return "\n".join(lines)


def _run_report(cfg: dict, config_dir: Path) -> tuple[dict, bool]:
    if "input" not in cfg:
        _fail("'report' needs an 'input' report path")
    path = config_dir / cfg["input"]
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh)
    except OSError as exc:
        raise IoError(str(exc)) from exc
    if not isinstance(data, dict) or "results" not in data:
        _fail(f"{path}: not a report file")
    click.echo(_render_table(data))
    results = data.get("results", [])
    all_passed = bool(data.get("passed", all(r["report"]["passed"] for r in results)))
    return {"results": [], "rendered": str(cfg["input"])}, all_passed


# ---------------------------------------------------------------------------
# entry point


def _parse_grid_override(text):
    if text is None:
        return None
    try:
        parts = [int(p) for p in text.split(",")]
    except ValueError:
        raise ConfigError(f"--grid must be three integers 'nx,nl,ns', got {text!r}") from None
    if len(parts) != 3:
        raise ConfigError(f"--grid must be three integers 'nx,nl,ns', got {text!r}")
    return tuple(parts)


@click.command(name="simlaw")
@click.version_option(__version__)
@click.option("--config", "config_path", required=True, type=click.Path(), help="YAML run configuration.")
@click.option("--out", "out_dir", default=".", type=click.Path(file_okay=False), help="Output directory.")
@click.option("--tol", type=float, default=None, help="Override the config tolerance.")
@click.option("--seed", type=int, default=None, help="Override the config seed.")
@click.option("--grid", "grid_text", default=None, help="Override grid sample counts as 'nx,nl,ns'.")
def main(config_path, out_dir, tol, seed, grid_text):
    """Run a similarity-law check, fit, simulation or classification."""
    try:
        code = _run(config_path, out_dir, tol, seed, grid_text)
    except SimlawError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    sys.exit(code)


def _run(config_path, out_dir, tol, seed, grid_text) -> int:
    grid_override = _parse_grid_override(grid_text)
    try:
        with open(config_path) as fh:
            cfg = yaml.safe_load(fh)
    except OSError as exc:
        raise IoError(str(exc)) from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"{config_path}: invalid YAML: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError(f"{config_path}: config must be a mapping")
    if tol is not None:
        cfg["tolerance"] = tol
    if seed is not None:
        cfg["seed"] = seed
    if grid_override is not None:
        # Fold the override into the config so the report's resolved config
        # matches what was actually evaluated.
        spec = dict(_GRID_DEFAULT)
        spec.update(cfg.get("grid") or {})
        for name, count in zip(("x", "lam", "s"), grid_override):
            axis = list(spec.get(name, _GRID_DEFAULT[name]))
            axis[2] = int(count)
            spec[name] = axis
        cfg["grid"] = spec
    command = cfg.get("command")
    if command not in _COMMANDS:
        raise ConfigError(f"config 'command' must be one of {_COMMANDS}, got {command!r}")

    out_path = Path(out_dir)
    out_path.mkdir(parents=True, exist_ok=True)
    config_dir = Path(config_path).resolve().parent

    if command == "check":
        body, passed = _run_check(cfg, _build_grid(cfg), out_path)
    elif command == "simulate":
        body, passed = _run_simulate(cfg, out_path)
    elif command == "fit":
        body, passed = _run_fit(cfg, out_path, config_dir)
    elif command == "classify":
        body, passed = _run_classify(cfg, _build_grid(cfg), out_path)
    else:
        body, passed = _run_report(cfg, config_dir)

    document = {
        "command": command,
        "version": __version__,
        "config": cfg,
        "passed": bool(passed),
    }
    document.update(body)
    report_path = out_path / cfg.get("report_name", "report.yaml")
    try:
        with open(report_path, "w") as fh:
            yaml.safe_dump(document, fh, sort_keys=True, default_flow_style=False)
    except OSError as exc:
        raise IoError(str(exc)) from exc

    for entry in document.get("results", []):
        rep = entry["report"]
        status = "pass" if rep["passed"] else "FAIL"
        click.echo(f"{entry['name']}: {status} (max_abs={rep['max_abs']:.3e}, tol={rep['tolerance']:.3e})")
    click.echo(f"{command}: {'pass' if passed else 'FAIL'} -> {report_path}")
    return 0 if passed else 1


if __name__ == "__main__":
    main()
