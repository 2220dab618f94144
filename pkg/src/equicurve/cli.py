"""Command-line interface: compute curves, calibrate, sweep, simulate, decide.

Every command reads a JSON config, writes delimited output (CSV by default,
JSON on request) into the output directory, and renders a PNG figure next to
the data unless ``--no-plots`` is given.  All numeric CSV fields carry 12
significant digits so reruns diff cleanly.

Exit codes: 0 success, 2 config error, 3 numeric or calibration failure.
"""

from __future__ import annotations

import functools
import json
import math
import time
from pathlib import Path

import click
import numpy as np

from . import __version__
from .curves import ECurve, ESurface, margin_frontier
from .decisions import evidence_weighted_minimax, loss_from_config, loss_spectrum
from .errors import (
    CalibrationError,
    ConfigError,
    EquicurveError,
    NumericError,
    ParameterError,
)
from .models import MarginPair, mixture_from_config, model_from_config
from .optimal import (
    DiscreteKernel,
    LogUtility,
    NeymanPearsonUtility,
    PowerUtility,
    calibrate_log,
    calibrate_utility,
    default_null_grid,
    make_log_optimal,
    stp_check,
    tost_e,
    universal_inference,
    validity_sweep,
)
from .pipeline import METHODS, margin_curves
from .sequential import SimCampaign, run_campaign

_FMT = "%.12g"


# ---------------------------------------------------------------------------
# Shared helpers
# ---------------------------------------------------------------------------

def _guard(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (ConfigError, ParameterError) as exc:
            click.echo(f"config error: {exc}", err=True)
            raise SystemExit(2)
        except (CalibrationError, NumericError) as exc:
            click.echo(f"numeric failure: {exc}", err=True)
            raise SystemExit(3)
        except EquicurveError as exc:  # pragma: no cover - safety net
            click.echo(f"error: {exc}", err=True)
            raise SystemExit(3)

    return wrapper


def common_options(fn):
    fn = click.option("--config", "config_path", required=True,
                      type=click.Path(exists=False), help="JSON run configuration.")(fn)
    fn = click.option("--out", "out_dir", default=".", show_default=True,
                      type=click.Path(file_okay=False), help="Output directory.")(fn)
    fn = click.option("--format", "fmt", default="csv", show_default=True,
                      type=click.Choice(["csv", "json"]), help="Tabular output format.")(fn)
    fn = click.option("--seed", default=None, type=int,
                      help="Override the config's RNG seed.")(fn)
    fn = click.option("--threads", default=None, type=int,
                      help="Advisory worker count (runs are vectorized in-process).")(fn)
    fn = click.option("--no-plots", is_flag=True, default=False,
                      help="Skip rendering PNG figures.")(fn)
    return fn


def _load_config(path: str) -> dict:
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file {path!r} does not exist")
    try:
        with open(p) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def _require(config: dict, key: str):
    if key not in config:
        raise ConfigError(f"missing config key {key!r}")
    return config[key]


def _outdir(out_dir: str) -> Path:
    p = Path(out_dir)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _grid(cfg, *, log_ok=True) -> np.ndarray:
    if isinstance(cfg, dict) and "values" in cfg:
        return np.asarray(cfg["values"], dtype=float)
    if isinstance(cfg, dict) and {"start", "stop", "count"} <= set(cfg):
        count = int(cfg["count"])
        if count < 1:
            raise ConfigError("grid count must be >= 1")
        if cfg.get("scale", "linear") == "log" and log_ok:
            return np.geomspace(float(cfg["start"]), float(cfg["stop"]), count)
        return np.linspace(float(cfg["start"]), float(cfg["stop"]), count)
    raise ConfigError(f"grid spec must give 'values' or start/stop/count, got {cfg!r}")


def _margins(cfg) -> MarginPair:
    lo, hi = cfg
    lo = -math.inf if lo in ("-inf", None) else float(lo)
    hi = math.inf if hi in ("inf", None) else float(hi)
    return MarginPair(lo, hi)


def _statistic(model, data_cfg: dict) -> float:
    if "statistic" in data_cfg:
        return float(data_cfg["statistic"])
    if "mean" in data_cfg:
        return float(data_cfg["mean"])
    if "sample" in data_cfg:
        return model.sufficient_statistic([float(v) for v in data_cfg["sample"]])
    raise ConfigError("data config needs 'statistic', 'mean', or 'sample'")


def _utility(cfg):
    kind = cfg.get("kind", "log")
    if kind == "log":
        return LogUtility()
    if kind == "neyman_pearson":
        return NeymanPearsonUtility(float(_require(cfg, "alpha")))
    if kind == "power":
        return PowerUtility(float(_require(cfg, "rho")))
    raise ConfigError(f"unknown utility kind {kind!r}")


def _write_rows(path: Path, fmt: str, columns, rows):
    if fmt == "json":
        payload = [dict(zip(columns, row)) for row in rows]
        path = path.with_suffix(".json")
        path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
        return path
    lines = [",".join(columns)]
    for row in rows:
        cells = []
        for cell in row:
            cells.append(cell if isinstance(cell, str) else _FMT % cell)
        lines.append(",".join(cells))
    path = path.with_suffix(".csv")
    path.write_text("\n".join(lines) + "\n")
    return path


def _write_json(path: Path, obj) -> Path:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
    return path


def _echo_written(paths):
    for p in paths:
        click.echo(f"wrote {p}")


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

@click.group()
@click.version_option(__version__)
def main():
    """Equivalence assessment with e-values."""


@main.command()
@common_options
@_guard
def curve(config_path, out_dir, fmt, seed, threads, no_plots):
    """Margin-indexed e-value curves and their inverted equivalence curves."""
    cfg = _load_config(config_path)
    model = model_from_config(_require(cfg, "model"))
    statistic = _statistic(model, _require(cfg, "data"))
    margin_grid = _grid(_require(cfg, "margin_grid"))
    fixed_alpha = float(cfg.get("fixed_alpha", 0.05))
    levels = np.unique(np.concatenate([_grid(_require(cfg, "levels")), [fixed_alpha]]))
    methods = cfg.get("methods", list(METHODS))
    alternative = mixture_from_config(cfg.get("alternative", {"kind": "dirac", "at": 0.0}))
    family = cfg.get("family", "symmetric")

    results = margin_curves(
        model, statistic, margin_grid, levels, methods, alternative,
        family=family, fixed_alpha=fixed_alpha,
    )
    out = _outdir(out_dir)
    written = []
    for fam in results:
        if fmt == "json":
            written.append(
                _write_json(out / f"curve_{fam.method}_evalues.json", fam.evalues.to_json_obj())
            )
            written.append(
                _write_json(
                    out / f"curve_{fam.method}_equivalence.json", fam.equivalence.to_json_obj()
                )
            )
        else:
            path = out / f"curve_{fam.method}_evalues.csv"
            path.write_text(fam.evalues.to_csv_text())
            written.append(path)
            path = out / f"curve_{fam.method}_equivalence.csv"
            path.write_text(fam.equivalence.to_csv_text())
            written.append(path)
    if not no_plots:
        from . import plotting

        fig_path = out / "curves.png"
        plotting.save_curve_figure(fig_path, results, fixed_alpha)
        written.append(fig_path)
    _echo_written(written)


@main.command()
@common_options
@_guard
def calibrate(config_path, out_dir, fmt, seed, threads, no_plots):
    """Calibrate boundary-mixture constants for a model, margins, alternative."""
    cfg = _load_config(config_path)
    model = model_from_config(_require(cfg, "model"))
    margins = _margins(_require(cfg, "margins"))
    alternative = mixture_from_config(_require(cfg, "alternative"))
    utility = _utility(cfg.get("utility", {"kind": "log"}))
    if isinstance(utility, LogUtility):
        report = calibrate_log(model, margins, alternative)
    else:
        report = calibrate_utility(model, margins, alternative, utility)
    out = _outdir(out_dir)
    payload = report.to_json_obj()
    payload["utility"] = cfg.get("utility", {"kind": "log"})
    payload["margins"] = [margins.lower, margins.upper]
    path = _write_json(out / "calibration.json", payload)
    _echo_written([path])


def _build_evalue(kind: str, model, margins, alternative, cfg):
    if kind == "log_optimal":
        return make_log_optimal(model, margins, alternative)
    if kind == "tost":
        return tost_e(model, margins, alternative)
    if kind == "ui":
        grid_cfg = cfg.get("ui_null_grid")
        grid = None if grid_cfg is None else [float(v) for v in grid_cfg]
        return universal_inference(model, margins, alternative, grid)
    raise ConfigError(f"unknown e-value kind {kind!r}; choose log_optimal, tost, or ui")


@main.command()
@common_options
@_guard
def validity(config_path, out_dir, fmt, seed, threads, no_plots):
    """Sweep null expectations of a calibrated e-value over a parameter grid."""
    cfg = _load_config(config_path)
    model = model_from_config(_require(cfg, "model"))
    margins = _margins(_require(cfg, "margins"))
    alternative = mixture_from_config(_require(cfg, "alternative"))
    evalue = _build_evalue(cfg.get("evalue", "log_optimal"), model, margins, alternative, cfg)
    grid_cfg = cfg.get("null_grid", {})
    if "values" in grid_cfg:
        grid = [float(v) for v in grid_cfg["values"]]
    else:
        grid = default_null_grid(
            model,
            margins,
            points_per_side=int(grid_cfg.get("points_per_side", 25)),
            stderr_mult=float(grid_cfg.get("stderr_mult", 10.0)),
        )
    sweep_cfg = cfg.get("sweep", {"method": "quadrature"})
    method = sweep_cfg.get("method", "quadrature")
    sweep = validity_sweep(
        evalue,
        model,
        grid,
        method=method,
        mc_size=int(sweep_cfg.get("size", 100_000)),
        seed=int(seed if seed is not None else sweep_cfg.get("seed", 0)),
    )
    out = _outdir(out_dir)
    rows = list(zip(sweep.grid, sweep.expectations, sweep.errors))
    written = [_write_rows(out / "validity", fmt, ("mu", "expectation", "error"), rows)]
    written.append(
        _write_json(
            out / "validity_summary.json",
            {
                "max_expectation": sweep.max_expectation,
                "argmax": sweep.argmax,
                "method": sweep.method,
            },
        )
    )
    if not no_plots:
        from . import plotting

        fig = out / "validity.png"
        plotting.save_validity_figure(fig, sweep)
        written.append(fig)
    _echo_written(written)


@main.command()
@common_options
@_guard
def frontier(config_path, out_dir, fmt, seed, threads, no_plots):
    """Pareto-minimal margin pairs certified at a level, from a margin surface."""
    cfg = _load_config(config_path)
    model = model_from_config(_require(cfg, "model"))
    statistic = _statistic(model, _require(cfg, "data"))
    lowers = _grid(_require(cfg, "lower_grid"))
    uppers = _grid(_require(cfg, "upper_grid"))
    alternative = mixture_from_config(cfg.get("alternative", {"kind": "dirac", "at": 0.0}))
    alpha = float(cfg.get("alpha", 0.05))
    method = cfg.get("method", "tost")
    alt_points, _ = alternative.nodes()
    values = np.zeros((lowers.size, uppers.size))
    for i, lo in enumerate(lowers):
        for j, up in enumerate(uppers):
            if not lo < up or np.any(alt_points <= lo) or np.any(alt_points >= up):
                values[i, j] = np.nan
                continue
            pair = MarginPair(float(lo), float(up))
            if method == "tost":
                values[i, j] = tost_e(model, pair, alternative).evaluate(statistic)
            elif method == "log_optimal":
                values[i, j] = make_log_optimal(model, pair, alternative).evaluate(statistic)
            else:
                raise ConfigError(f"unknown frontier method {method!r}")
    # cells whose pair cannot carry the alternative stay out of the surface
    values = np.where(np.isnan(values), 0.0, values)
    surface = ESurface(lowers, uppers, values)
    front = margin_frontier(surface, alpha)
    out = _outdir(out_dir)
    surf_rows = [
        (lo, up, surface.values[i, j])
        for i, lo in enumerate(lowers)
        for j, up in enumerate(uppers)
        if lo < up
    ]
    written = [
        _write_rows(out / "surface", fmt, ("lower", "upper", "e_value"), surf_rows),
        _write_rows(out / "frontier", fmt, ("lower", "upper"), front.pairs),
    ]
    if not no_plots:
        from . import plotting

        fig = out / "frontier.png"
        plotting.save_frontier_figure(fig, surface, front)
        written.append(fig)
    _echo_written(written)


@main.command()
@common_options
@_guard
def merge(config_path, out_dir, fmt, seed, threads, no_plots):
    """Merge two e-value curves (weighted average or product)."""
    from .curves import invert_ecurve, merge_average, merge_product, right_lower_envelope

    cfg = _load_config(config_path)
    paths = _require(cfg, "inputs")
    if len(paths) != 2:
        raise ConfigError("merge needs exactly two input curve CSVs")
    curves_in = []
    for p in paths:
        path = Path(p)
        if not path.exists():
            raise ConfigError(f"input curve {p!r} does not exist")
        curves_in.append(ECurve.from_csv_text(path.read_text()))
    op = cfg.get("op", "average")
    if op == "average":
        merged = merge_average(curves_in[0], curves_in[1], float(cfg.get("weight", 0.5)))
    elif op == "product":
        merged = merge_product(curves_in[0], curves_in[1])
    else:
        raise ConfigError(f"unknown merge op {op!r}")
    merged = right_lower_envelope(merged)
    levels = _grid(cfg.get("levels", {"start": 0.001, "stop": 1.0, "count": 200, "scale": "log"}))
    eq = invert_ecurve(merged, np.unique(levels))
    out = _outdir(out_dir)
    written = []
    if fmt == "json":
        written.append(_write_json(out / "merged_evalues.json", merged.to_json_obj()))
        written.append(_write_json(out / "merged_equivalence.json", eq.to_json_obj()))
    else:
        p1 = out / "merged_evalues.csv"
        p1.write_text(merged.to_csv_text())
        p2 = out / "merged_equivalence.csv"
        p2.write_text(eq.to_csv_text())
        written += [p1, p2]
    if not no_plots:
        from . import plotting
        from .pipeline import CurveFamily

        fig = out / "merged.png"
        plotting.save_curve_figure(fig, [CurveFamily("merged", merged, eq)])
        written.append(fig)
    _echo_written(written)


@main.command()
@common_options
@_guard
def campaign(config_path, out_dir, fmt, seed, threads, no_plots):
    """Run a seeded Monte-Carlo comparison of sequential e-processes."""
    cfg = _load_config(config_path)
    camp = SimCampaign.from_config(cfg)
    if seed is not None:
        camp = SimCampaign.from_config({**cfg, "seed": seed})
    start = time.monotonic()
    result = run_campaign(camp)
    elapsed = time.monotonic() - start
    out = _outdir(out_dir)
    written = []
    if fmt == "json":
        rows = list(result.rows())
        written.append(_write_json(out / "campaign_results.json", rows))
    else:
        path = out / "campaign_results.csv"
        path.write_text(result.to_csv_text())
        written.append(path)
    manifest = {
        "seed": camp.seed,
        "replications": camp.replications,
        "horizon": camp.horizon,
        "variants": list(camp.variants),
        "alpha": camp.alpha,
        "mu_true": camp.mu_true,
        "margins": [camp.margins.lower, camp.margins.upper],
        "threads": threads,
        "wall_time_s": round(elapsed, 3),
    }
    written.append(_write_json(out / "campaign_manifest.json", manifest))
    if not no_plots:
        from . import plotting

        fig = out / "campaign.png"
        plotting.save_campaign_figure(fig, result)
        written.append(fig)
    _echo_written(written)


@main.command()
@common_options
@_guard
def decide(config_path, out_dir, fmt, seed, threads, no_plots):
    """Loss-bound spectrum over an equivalence curve, plus weighted minimax."""
    from .curves import EquivalenceCurve

    cfg = _load_config(config_path)
    loss = loss_from_config(_require(cfg, "loss"))
    out = _outdir(out_dir)
    written = []
    rows = None
    if "equivalence_csv" in cfg:
        path = Path(cfg["equivalence_csv"])
        if not path.exists():
            raise ConfigError(f"equivalence curve {cfg['equivalence_csv']!r} does not exist")
        eq = EquivalenceCurve.from_csv_text(path.read_text())
        rows = loss_spectrum(loss, eq)
        written.append(
            _write_rows(
                out / "decision_spectrum",
                fmt,
                ("alpha", "decision", "bound"),
                [(r["alpha"], r["decision"], r["bound"]) for r in rows],
            )
        )
    summary = {}
    if "ecurve_csv" in cfg:
        path = Path(cfg["ecurve_csv"])
        if not path.exists():
            raise ConfigError(f"e-curve {cfg['ecurve_csv']!r} does not exist")
        ecurve = ECurve.from_csv_text(path.read_text())
        decision, objective = evidence_weighted_minimax(loss, ecurve)
        summary["evidence_weighted"] = {"decision": decision, "objective": objective}
    if rows is None and not summary:
        raise ConfigError("decide needs 'equivalence_csv' and/or 'ecurve_csv'")
    if summary:
        written.append(_write_json(out / "decision_summary.json", summary))
    if rows is not None and not no_plots:
        from . import plotting

        fig = out / "decision_spectrum.png"
        plotting.save_spectrum_figure(fig, rows)
        written.append(fig)
    _echo_written(written)


@main.command(name="stp-check")
@common_options
@_guard
def stp_check_cmd(config_path, out_dir, fmt, seed, threads, no_plots):
    """Strict total positivity verdict (minors up to the requested order)."""
    cfg = _load_config(config_path)
    pmf = np.asarray(_require(cfg, "pmf"), dtype=float)
    params = cfg.get("params") or list(range(1, pmf.shape[0] + 1))
    points = cfg.get("points") or list(range(1, pmf.shape[1] + 1))
    kernel = DiscreteKernel(
        tuple(float(p) for p in params), tuple(float(p) for p in points), pmf
    )
    order = int(cfg.get("order", min(pmf.shape)))
    verdict = stp_check(kernel, order)
    out = _outdir(out_dir)
    path = _write_json(out / "stp_verdict.json", verdict.to_json_obj())
    _echo_written([path])
    click.echo("STRICT_PASS" if verdict.strict_pass else "FAIL")


if __name__ == "__main__":
    main()
