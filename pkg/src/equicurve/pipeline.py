"""Build families of margin-indexed e-values for one data realization.

Given a model, an observed statistic, and a grid of margins, each method
produces the non-decreasing e-value curve over margins (after the
right-lower envelope) together with its inverted equivalence curve:

* ``log_optimal`` - boundary-mixture likelihood ratio, calibrated per margin;
* ``tost``        - minimum of the two one-sided likelihood ratios;
* ``ui``          - universal inference over a truncated null grid;
* ``fixed``       - the step curve of a level-alpha test carved out of the
  log-optimal curve: infinite margins below the chosen level, the certified
  margin at and above it.

Two margin families: ``symmetric`` treats a grid value d as the pair
(-d, d); ``one_sided`` treats it as the upper null "effect at least d".
"""

from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np

from .curves import ECurve, EquivalenceCurve, invert_ecurve, margin_at_level, right_lower_envelope
from .errors import ParameterError
from .models import MarginPair, MixtureAlternative
from .optimal import (
    calibrate_log,
    BoundaryMixtureEValue,
    default_null_grid,
    tost_e,
    universal_inference,
)

__all__ = ["CurveFamily", "margin_curves", "METHODS"]

METHODS = ("log_optimal", "tost", "ui", "fixed")


@dataclass(frozen=True)
class CurveFamily:
    """One method's pair of curves for a fixed data realization."""

    method: str
    evalues: ECurve
    equivalence: EquivalenceCurve


def _pair(family: str, margin: float) -> MarginPair:
    if family == "symmetric":
        return MarginPair.symmetric(margin)
    if family == "one_sided":
        return MarginPair(-math.inf, margin)
    raise ParameterError(f"unknown margin family {family!r}")


def _evalue_at(method: str, model, pair: MarginPair, alternative, statistic: float) -> float:
    if method == "log_optimal":
        if pair.one_sided:
            ev = BoundaryMixtureEValue(model, pair, alternative, c=0.0, calibrated=True)
        else:
            c = calibrate_log(model, pair, alternative).c
            ev = BoundaryMixtureEValue(model, pair, alternative, c=c, calibrated=True)
        return float(ev.evaluate(statistic))
    if method == "tost":
        return float(tost_e(model, pair, alternative).evaluate(statistic))
    if method == "ui":
        grid = default_null_grid(model, pair)
        return float(universal_inference(model, pair, alternative, grid).evaluate(statistic))
    raise ParameterError(f"unknown curve method {method!r}")


def margin_curves(model, statistic: float, margin_grid, levels, methods,
                  alternative: MixtureAlternative, *, family: str = "symmetric",
                  fixed_alpha: float = 0.05) -> list[CurveFamily]:
    """Curves over margins plus their inversions, for each requested method."""
    margin_grid = np.asarray(margin_grid, dtype=float)
    if margin_grid.ndim != 1 or margin_grid.size == 0:
        raise ParameterError("margin grid must be a nonempty 1-D array")
    if not np.all(np.diff(margin_grid) > 0):
        raise ParameterError("margin grid must be strictly increasing")
    if family == "symmetric" and margin_grid[0] <= 0.0:
        raise ParameterError("symmetric margins must be positive")
    levels = np.asarray(levels, dtype=float)
    methods = list(methods)
    unknown = set(methods) - set(METHODS)
    if unknown:
        raise ParameterError(f"unknown methods {sorted(unknown)}; choose from {METHODS}")

    results: list[CurveFamily] = []
    log_curve: ECurve | None = None
    point_methods = [m for m in methods if m != "fixed"]
    if "fixed" in methods and "log_optimal" not in point_methods:
        point_methods.append("log_optimal")

    built: dict[str, ECurve] = {}
    for method in point_methods:
        raw = np.array(
            [
                _evalue_at(method, model, _pair(family, float(m)), alternative, statistic)
                for m in margin_grid
            ]
        )
        built[method] = right_lower_envelope(ECurve(margin_grid, raw))
    log_curve = built.get("log_optimal")

    for method in methods:
        if method == "fixed":
            margin_hat = margin_at_level(log_curve, fixed_alpha)
            values = np.where(
                np.isfinite(margin_hat) & (margin_grid >= margin_hat),
                1.0 / fixed_alpha,
                0.0,
            )
            ecurve = ECurve(margin_grid, values)
        else:
            ecurve = built[method]
        results.append(CurveFamily(method, ecurve, invert_ecurve(ecurve, levels)))
    return results
