"""Batch command-line front end.

Every subcommand is driven by a JSON configuration (validated against a
schema before execution) with a few common overrides exposed as flags;
results land in the output directory as CSV/JSON plus standalone SVG line
plots.  Exit codes: 0 success, 2 configuration error, 3 numeric failure
(with a machine-readable JSON error object on stderr).
"""

from __future__ import annotations

import json
import os
import sys
from pathlib import Path

import click
import jsonschema
import numpy as np

from . import acceptance as _acceptance
from . import eig as _eig
from . import io as _io
from . import mesh as _mesh
from . import operator as _op
from . import soliton as _soliton
from . import svg as _svg
from . import tracker as _tracker
from .parallel import default_workers
from .profiles import (FourierPerturbed, FourierTerm, family_from_json,
                       profile_from_json, triple_point_profile)

EXIT_CONFIG = 2
EXIT_NUMERIC = 3

_BC_SCHEMA = {
    "type": "object",
    "properties": {
        "kind": {"enum": ["physical_vacuum", "idealized_dirichlet", "box_dirichlet"]},
        "l": {"type": "integer", "minimum": 0},
        "X": {"type": "number", "exclusiveMinimum": 0},
    },
    "required": ["kind"],
    "additionalProperties": False,
}

_PHI_SCHEMA = {
    "type": "object",
    "properties": {
        "constant": {"type": "number"},
        "terms": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {
                    "kind": {"enum": ["cos", "sin"]},
                    "k": {"type": "integer", "minimum": 1},
                    "amplitude": {"type": "number"},
                },
                "required": ["kind", "k", "amplitude"],
                "additionalProperties": False,
            },
        },
    },
    "additionalProperties": False,
}

_COMMON = {
    "command": {"type": "string"},
    "M": {"type": "integer", "minimum": 8},
    "workers": {"type": "integer", "minimum": 1},
    "out_dir": {"type": "string"},
}

SCHEMAS = {
    "spectrum": {
        "type": "object",
        "properties": {
            **_COMMON,
            "family": {"type": "object"},
            "param_range": {"type": "array", "items": {"type": "number"},
                            "minItems": 2, "maxItems": 2},
            "steps": {"type": "integer", "minimum": 2},
            "bc": _BC_SCHEMA,
            "mode_count": {"type": "integer", "minimum": 1},
            "jump_frac": {"type": "number", "exclusiveMinimum": 0},
            "richardson": {"type": "boolean"},
            "detect_eps": {"type": "boolean"},
            "dump_matrix": {"type": "boolean"},
        },
        "required": ["family", "param_range", "steps", "bc", "M"],
        "additionalProperties": False,
    },
    "triple": {
        "type": "object",
        "properties": {
            **_COMMON,
            "window": {
                "type": "object",
                "properties": {
                    "zeta": {"type": "array", "items": {"type": "number"},
                             "minItems": 2, "maxItems": 2},
                    "C": {"type": "array", "items": {"type": "number"},
                          "minItems": 2, "maxItems": 2},
                },
                "required": ["zeta", "C"],
            },
            "l": {"type": "integer", "minimum": 0},
            "coarse": {"type": "integer", "minimum": 3},
            "candidates": {"type": "integer", "minimum": 3},
        },
        "required": ["window", "M"],
        "additionalProperties": False,
    },
    "mesh": {
        "type": "object",
        "properties": {
            **_COMMON,
            "l": {"type": "integer", "minimum": 0},
            "alpha0_max": {"type": "number", "exclusiveMinimum": 0},
            "n_max": {"type": "integer", "minimum": 2},
            "samples": {"type": "integer", "minimum": 2},
        },
        "required": ["l", "alpha0_max", "n_max"],
        "additionalProperties": False,
    },
    "unfold": {
        "type": "object",
        "properties": {
            **_COMMON,
            "dp": {
                "type": "object",
                "properties": {
                    "n": {"type": "integer", "minimum": 1},
                    "eps": {"enum": [1, -1]},
                    "m": {"type": "integer", "minimum": 1},
                    "delta": {"enum": [1, -1]},
                    "l": {"type": "integer", "minimum": 0},
                },
                "required": ["n", "eps", "m", "delta"],
                "additionalProperties": False,
            },
            "phi": _PHI_SCHEMA,
            "amplitude": {"type": "number"},
        },
        "required": ["dp", "phi", "amplitude"],
        "additionalProperties": False,
    },
    "resonance": {
        "type": "object",
        "properties": {
            **_COMMON,
            "n_max": {"type": "integer", "minimum": 2},
            "phi": _PHI_SCHEMA,
            "amplitude": {"type": "number"},
            "alpha0": {"type": "number"},
            "alpha0_window": {"type": "array", "items": {"type": "number"},
                              "minItems": 2, "maxItems": 2},
            "overcritical_scan": {"type": "array", "items": {"type": "number"}},
        },
        "required": ["n_max", "phi", "amplitude"],
        "additionalProperties": False,
    },
    "soliton-branch": {
        "type": "object",
        "properties": {
            **_COMMON,
            "l_list": {"type": "array", "items": {"type": "integer", "minimum": 0}},
            "x0_range": {"type": "array", "items": {"type": "number"},
                         "minItems": 2, "maxItems": 2},
            "X": {"type": "number", "exclusiveMinimum": 0},
            "samples": {"type": "integer", "minimum": 3},
            "jordan": {"type": "boolean"},
        },
        "required": ["l_list", "x0_range", "X", "M"],
        "additionalProperties": False,
    },
    "cutoff": {
        "type": "object",
        "properties": {
            **_COMMON,
            "l": {"type": "integer", "minimum": 0},
            "x0": {"type": "number", "exclusiveMinimum": 0},
            "X_list": {"type": "array", "items": {"type": "number"}, "minItems": 3},
            "mode_count": {"type": "integer", "minimum": 2},
            "density": {"type": "number", "exclusiveMinimum": 0},
        },
        "required": ["l", "x0", "X_list"],
        "additionalProperties": False,
    },
}


class ConfigError(ValueError):
    pass


def _load_config(command: str, config_path, overrides: dict) -> dict:
    cfg = {}
    if config_path:
        try:
            cfg = json.loads(Path(config_path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {config_path}: {exc}") from exc
    for key, value in overrides.items():
        if value is not None:
            cfg[key] = value
    if "command" in cfg and cfg["command"] != command:
        raise ConfigError(f"config is for command {cfg['command']!r}, not {command!r}")
    cfg.pop("command", None)
    schema = SCHEMAS[command]
    try:
        jsonschema.validate(cfg, schema)
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"config schema violation: {exc.message}") from exc
    cfg.setdefault("workers", default_workers())
    cfg.setdefault("out_dir", ".")
    out = Path(cfg["out_dir"])
    out.mkdir(parents=True, exist_ok=True)
    return cfg


def _bc_from_config(obj) -> _op.BoundarySpec:
    return _op.BoundarySpec(kind=obj["kind"], l=int(obj.get("l", 0)),
                            X=float(obj.get("X", 1.0)))


def _phi_from_config(obj) -> FourierPerturbed:
    terms = tuple(FourierTerm(t["kind"], int(t["k"]), float(t["amplitude"]))
                  for t in obj.get("terms", []))
    return FourierPerturbed(alpha0=float(obj.get("constant", 0.0)), terms=terms)


def _fail(code: int, kind: str, message: str, module: str = "") -> None:
    payload = {"error": {"type": kind, "message": message, "module": module}}
    click.echo(json.dumps(payload), err=True)
    sys.exit(code)


def _run_guarded(command, config, overrides, runner):
    try:
        cfg = _load_config(command, config, overrides)
    except ConfigError as exc:
        _fail(EXIT_CONFIG, "config", str(exc))
        return
    try:
        summary = runner(cfg)
    except ConfigError as exc:
        _fail(EXIT_CONFIG, "config", str(exc))
        return
    except (ValueError, _eig.EigenSolveError, _mesh.QuadratureError,
            _mesh.RootBracketError, _soliton.BranchLossError) as exc:
        _fail(EXIT_NUMERIC, type(exc).__name__, str(exc), module=type(exc).__module__)
        return
    click.echo(summary)


@click.group()
def main():
    """Spectral analysis of spherically symmetric alpha^2-dynamo operators."""


_common_options = [
    click.option("--config", type=click.Path(), default=None, help="JSON run configuration."),
    click.option("--M", "M", type=int, default=None, help="Override grid size M."),
    click.option("--workers", type=int, default=None, help="Override worker count."),
    click.option("--out-dir", "out_dir", type=click.Path(), default=None,
                 help="Override output directory."),
]


def _with_common(fn):
    for opt in reversed(_common_options):
        fn = opt(fn)
    return fn


@main.command()
@_with_common
def spectrum(config, M, workers, out_dir):
    """Branch graph of a one-parameter profile family, with EP detection."""

    def run(cfg):
        try:
            family = family_from_json(cfg["family"])
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        bc = _bc_from_config(cfg["bc"])
        result = _tracker.sweep(
            family, tuple(cfg["param_range"]), cfg["steps"], bc, cfg["M"],
            mode_count=cfg.get("mode_count"), jump_frac=cfg.get("jump_frac", 0.05),
            richardson=cfg.get("richardson", False), workers=cfg["workers"],
        )
        out = Path(cfg["out_dir"])
        _io.write_csv(out / "branches.csv", _tracker.BRANCH_CSV_COLUMNS,
                      _tracker.branch_csv_rows(result))
        points = []
        if cfg.get("detect_eps", True):
            points = _tracker.detect_branch_points(result)
            _io.write_csv(out / "branch_points.csv", _tracker.BRANCH_POINT_CSV_COLUMNS,
                          _tracker.branch_point_csv_rows(points))
        if cfg.get("dump_matrix", False):
            op = _op.assemble(family(cfg["param_range"][0]), bc, cfg["M"])
            _op.write_matrix_text(op.matrix, out / "matrix.txt")
        plot = _svg.LinePlot(title="spectral branches", xlabel="parameter",
                             ylabel="Re lambda / Im lambda (>= 0)")
        for b in result.branches:
            plot.add(b.params, b.lambdas.real)
        for b in result.branches:
            im = np.maximum(b.lambdas.imag, 0.0)
            if np.any(im > 0):
                plot.add(b.params, im, stroke_width=1.0)
        plot.write(out / "spectrum.svg")
        return (f"spectrum: {len(result.branches)} branches, "
                f"{len(result.branches[0].params)} points, {len(points)} branch points "
                f"-> {out}")

    _run_guarded("spectrum", config, dict(M=M, workers=workers, out_dir=out_dir), run)


@main.command()
@_with_common
def triple(config, M, workers, out_dir):
    """2D search for a third-order coalescence of the quartic family."""

    def run(cfg):
        window = (tuple(cfg["window"]["zeta"]), tuple(cfg["window"]["C"]))
        bc = _op.BoundarySpec.vacuum(l=int(cfg.get("l", 1)))
        res = _tracker.find_triple_point(
            triple_point_profile, window, bc, cfg["M"],
            coarse=cfg.get("coarse", (13, 31)), candidates=cfg.get("candidates", 10),
            workers=cfg["workers"],
        )
        out = Path(cfg["out_dir"])
        report = {
            "found": res.found,
            "zeta": res.point.params[0],
            "C": res.point.params[1],
            "residual": res.point.residual,
            "re_lambda": res.point.eigenvalue.real,
            "im_lambda": res.point.eigenvalue.imag,
            "objective_evals": res.objective_evals,
        }
        _io.write_json(out / "triple.json", report)
        return (f"triple: found={res.found} at (zeta={report['zeta']:.5f}, "
                f"C={report['C']:.5f}), residual={report['residual']:.3e} -> {out}")

    _run_guarded("triple", config, dict(M=M, workers=workers, out_dir=out_dir), run)


@main.command()
@click.option("--l", "l", type=int, default=None, help="Angular mode number.")
@click.option("--alpha0-max", type=float, default=None)
@click.option("--n-max", type=int, default=None)
@_with_common
def mesh(l, alpha0_max, n_max, config, M, workers, out_dir):
    """Exact constant-alpha spectral mesh with the DP catalog appended."""

    def run(cfg):
        ll, a_max, nx = cfg["l"], cfg["alpha0_max"], cfg["n_max"]
        out = Path(cfg["out_dir"])
        alphas = np.linspace(0.0, a_max, cfg.get("samples", 101))
        rows = []
        for mode in _mesh.radial_modes(ll, nx):
            for eps in (+1, -1):
                for a0 in alphas:
                    rows.append({
                        "n": mode.n, "eps": eps, "alpha0": float(a0),
                        "lambda": _mesh.mesh_eigenvalue(mode.n, eps, ll, float(a0)),
                    })
        path = out / "mesh.csv"
        _io.write_csv(path, ["n", "eps", "alpha0", "lambda"], rows)
        dps = _mesh.diabolical_points(ll, nx, (0.0, a_max))
        _io.append_csv_section(
            path,
            ["dp_n", "eps", "dp_m", "delta", "alpha0_c", "lambda0", "same_type", "j"],
            [
                {
                    "dp_n": p.n, "eps": p.eps, "dp_m": p.m, "delta": p.delta,
                    "alpha0_c": p.alpha0_c, "lambda0": p.lambda0,
                    "same_type": int(p.same_type),
                    "j": p.parabola_index if p.parabola_index is not None else "",
                }
                for p in dps
            ],
        )
        plot = _svg.LinePlot(title="spectral mesh", xlabel="alpha0", ylabel="Re lambda")
        for mode in _mesh.radial_modes(ll, nx):
            for eps in (+1, -1):
                lam = [-mode.rho + eps * a0 * mode.sqrt_rho for a0 in alphas]
                plot.add(alphas, lam)
        plot.write(out / "mesh.svg")
        return f"mesh: {nx} mode pairs, {len(dps)} DPs -> {path}"

    _run_guarded("mesh", config, dict(l=l, alpha0_max=alpha0_max, n_max=n_max,
                                      M=M, workers=workers, out_dir=out_dir), run)


@main.command()
@_with_common
def unfold(config, M, workers, out_dir):
    """First-order DP unfolding versus the observed discrete splitting."""

    def run(cfg):
        d = cfg["dp"]
        ll = int(d.get("l", 0))
        roots = _mesh.radial_modes(ll, max(d["n"], d["m"]))
        kn, km = roots[d["n"] - 1].sqrt_rho, roots[d["m"] - 1].sqrt_rho
        dp = _mesh.DiabolicalPoint(
            n=d["n"], eps=d["eps"], m=d["m"], delta=d["delta"], l=ll,
            alpha0_c=d["eps"] * kn + d["delta"] * km,
            lambda0=d["eps"] * d["delta"] * kn * km,
        )
        phi = _phi_from_config(cfg["phi"])
        amplitude = float(cfg["amplitude"])
        unf = _mesh.dp_unfold(dp, phi, amplitude)
        obs = _mesh.observed_splitting(dp, phi, amplitude, M=cfg.get("M", 240))
        pred = amplitude * unf.split1
        report = {
            "alpha0_c": dp.alpha0_c, "lambda0": dp.lambda0,
            "parabola_j": dp.parabola_index, "same_type": dp.same_type,
            "lambda1": [[z.real, z.imag] for z in unf.lambda1],
            "predictions": [[z.real, z.imag] for z in unf.predictions],
            "complex_split": unf.complex_split,
            "predicted_split": [pred.real, pred.imag],
            "observed_split": [obs.real, obs.imag],
            "match_within_10pct": _mesh.split_magnitudes_match(pred, obs)
            if abs(pred) > 0 else None,
        }
        out = Path(cfg["out_dir"])
        _io.write_json(out / "unfold.json", report)
        return (f"unfold: DP ({dp.n},{dp.eps:+d}),({dp.m},{dp.delta:+d}) "
                f"|pred|={abs(pred):.4e} |obs|={abs(obs):.4e} -> {out}")

    _run_guarded("unfold", config, dict(M=M, workers=workers, out_dir=out_dir), run)


@main.command()
@_with_common
def resonance(config, M, workers, out_dir):
    """Resonant DP displacement table grouped by parabola index."""

    def run(cfg):
        phi = _phi_from_config(cfg["phi"])
        amplitude = float(cfg["amplitude"])
        window = tuple(cfg.get("alpha0_window", (0.0, np.inf)))
        rows = _mesh.resonance_scan(cfg["n_max"], phi, amplitude,
                                    M=cfg.get("M", 240), alpha0_window=window)
        out = Path(cfg["out_dir"])
        _io.write_csv(out / "resonance.csv", _mesh.RESONANCE_COLUMNS, rows)
        summary = f"resonance: {len(rows)} DPs"
        scan = cfg.get("overcritical_scan")
        if scan:
            alpha0 = float(cfg.get("alpha0", 0.0))
            counts = []
            for a in scan:
                prof = _mesh.perturbed_constant(alpha0, phi, float(a))
                op = _op.assemble(prof, _op.BoundarySpec.dirichlet(l=0), cfg.get("M", 240))
                w = _eig.eig_general(op.matrix).eigenvalues
                n_osc = int(np.sum((w.real > 0) & (np.abs(w.imag) > _eig.real_tolerance(0))))
                counts.append({"amplitude": float(a), "overcritical_oscillatory": n_osc})
            _io.write_csv(out / "overcritical_counts.csv",
                          ["amplitude", "overcritical_oscillatory"], counts)
            summary += f", overcritical scan over {len(scan)} amplitudes"
        return summary + f" -> {out}"

    _run_guarded("resonance", config, dict(M=M, workers=workers, out_dir=out_dir), run)


@main.command("soliton-branch")
@_with_common
def soliton_branch(config, M, workers, out_dir):
    """Bound-state branch lambda(x0) with the Jordan point per angular mode."""

    def run(cfg):
        out = Path(cfg["out_dir"])
        plot = _svg.LinePlot(title="bound-state branch", xlabel="x0", ylabel="Re lambda")
        summaries = []
        for ll in cfg["l_list"]:
            branch = _soliton.bound_state_branch(
                int(ll), tuple(cfg["x0_range"]), float(cfg["X"]), cfg["M"],
                samples=cfg.get("samples", 40),
            )
            _io.write_csv(out / f"branch_l{ll}.csv", _soliton.BRANCH_CSV_COLUMNS,
                          _soliton.branch_csv_rows(branch))
            if cfg.get("jordan", True) and branch.x_J is not None:
                rep = _soliton.jordan_system_solve(int(ll), branch.x_J,
                                                   float(cfg["X"]), cfg["M"])
                _io.write_json(out / f"jordan_l{ll}.json", {
                    "x_J": rep.x_J,
                    "kernel_residual": rep.kernel_residual,
                    "xi1_residual": rep.xi1_residual,
                })
            plot.add(branch.x0s(), branch.lambdas().real, label=f"l={ll}")
            xj = "none" if branch.x_J is None else f"{branch.x_J:.4f}"
            summaries.append(f"l={ll}: x_J={xj}")
        plot.write(out / "soliton_branch.svg")
        return "soliton-branch: " + "; ".join(summaries) + f" -> {out}"

    _run_guarded("soliton-branch", config, dict(M=M, workers=workers, out_dir=out_dir), run)


@main.command()
@_with_common
def cutoff(config, M, workers, out_dir):
    """Box-length dependence lambda_n(X) with fitted power laws."""

    def run(cfg):
        study = _tracker.cutoff_study(
            int(cfg["l"]), float(cfg["x0"]), [float(x) for x in cfg["X_list"]],
            mode_count=cfg.get("mode_count", 4), density=cfg.get("density", 20.0),
        )
        out = Path(cfg["out_dir"])
        _io.write_csv(out / "cutoff.csv", ["n", "X", "re_lambda", "im_lambda", "overlap_ok"],
                      [
                          {
                              "n": r.n, "X": r.X, "re_lambda": r.lam.real,
                              "im_lambda": r.lam.imag,
                              "overlap_ok": "" if r.overlap_ok is None else int(r.overlap_ok),
                          }
                          for r in study.rows
                      ])
        _io.write_json(out / "cutoff.json", {
            "exponents": {str(k): v for k, v in study.exponents.items()},
            "bs_variation": study.bs_variation,
        })
        plot = _svg.LinePlot(title="cutoff study", xlabel="X", ylabel="Re lambda")
        table = study.lam_table()
        for n, by_x in sorted(table.items()):
            xs = sorted(by_x)
            plot.add(xs, [by_x[x].real for x in xs], label=f"n={n}")
        plot.write(out / "cutoff.svg")
        exps = ", ".join(f"p_{n}={p:.2f}" for n, p in sorted(study.exponents.items()))
        return (f"cutoff: BS variation {study.bs_variation:.2e}; {exps} -> {out}")

    _run_guarded("cutoff", config, dict(M=M, workers=workers, out_dir=out_dir), run)


@main.command()
@click.option("--quick/--full", default=False,
              help="Quick mode skips the long-running criteria.")
@click.option("--criteria", default=None,
              help="Comma-separated subset of criterion names to run.")
def selftest(quick, criteria):
    """Run the acceptance suite and print one pass/fail line per criterion."""
    names = None if criteria is None else [c.strip() for c in criteria.split(",")]
    results = _acceptance.run_all(quick=quick, names=names)
    all_ok = True
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        all_ok &= r.passed
        click.echo(f"[{status}] {r.name} ({r.seconds:.1f}s): {r.details}")
    if not all_ok:
        sys.exit(EXIT_NUMERIC)


if __name__ == "__main__":
    main()
