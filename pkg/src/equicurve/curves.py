"""E-value curves over margins, equivalence curves over levels, and their ops.

Curves are finite right-continuous step functions on explicit grids:

* ``ECurve`` maps a margin to an e-value; the value at a margin is the value
  at the largest grid point at or below it, and 0 below the grid.
* ``EquivalenceCurve`` maps a confidence level ``alpha`` to a certified
  margin; the margin at ``alpha`` is the one at the largest grid level at or
  below it, and ``+inf`` below the grid.

Inversion in both directions, the right-lower envelope, merging of curves
(weighted average for arbitrarily dependent evidence, product for
independent evidence), the two-margin surface with its Pareto frontier, and
fixed-level tests all live here.  Everything is pure and operates on
immutable arrays.
"""

from __future__ import annotations

from dataclasses import dataclass
import io
import math

import numpy as np

from .errors import ParameterError

__all__ = [
    "ECurve",
    "EquivalenceCurve",
    "FixedTest",
    "ESurface",
    "MarginFrontier",
    "invert_ecurve",
    "curve_from_equivalence",
    "right_lower_envelope",
    "merge_average",
    "merge_product",
    "margin_frontier",
    "test_from_ecurve",
]

_CSV_FMT = "%.12g"


def _sorted_strict(name: str, arr: np.ndarray) -> np.ndarray:
    if arr.ndim != 1 or arr.size == 0:
        raise ParameterError(f"{name} must be a nonempty 1-D grid")
    if not np.all(np.isfinite(arr)):
        raise ParameterError(f"{name} must be finite")
    if not np.all(np.diff(arr) > 0):
        raise ParameterError(f"{name} must be strictly increasing")
    return arr


@dataclass(frozen=True)
class ECurve:
    """Right-continuous step map from margins to e-values."""

    margins: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        margins = _sorted_strict("margins", np.asarray(self.margins, dtype=float))
        values = np.asarray(self.values, dtype=float)
        if values.shape != margins.shape:
            raise ParameterError("margins and values must have equal length")
        if np.any(np.isnan(values)) or np.any(values < 0.0):
            raise ParameterError("e-values must be >= 0 (+inf allowed)")
        object.__setattr__(self, "margins", margins)
        object.__setattr__(self, "values", values)

    @property
    def is_monotone(self) -> bool:
        v = self.values
        return bool(np.all(v[1:] >= v[:-1]))

    def at(self, margin) -> np.ndarray | float:
        """Step evaluation: value at the largest grid margin <= ``margin``."""
        idx = np.searchsorted(self.margins, np.asarray(margin, dtype=float), side="right")
        padded = np.concatenate(([0.0], self.values))
        out = padded[idx]
        return out.item() if np.ndim(margin) == 0 else out

    # -- serialization ------------------------------------------------------

    def to_csv_text(self) -> str:
        buf = io.StringIO()
        buf.write("margin,e_value\n")
        for m, v in zip(self.margins, self.values):
            buf.write(f"{_CSV_FMT % m},{_CSV_FMT % v}\n")
        return buf.getvalue()

    @classmethod
    def from_csv_text(cls, text: str) -> "ECurve":
        margins, values = _parse_two_column_csv(text, ("margin", "e_value"))
        return cls(margins, values)

    def to_json_obj(self) -> dict:
        return {"type": "ecurve", "margins": self.margins.tolist(), "values": self.values.tolist()}

    @classmethod
    def from_json_obj(cls, obj: dict) -> "ECurve":
        if obj.get("type") != "ecurve":
            raise ParameterError("not an ecurve JSON object")
        return cls(np.asarray(obj["margins"]), np.asarray(obj["values"]))


@dataclass(frozen=True)
class EquivalenceCurve:
    """Right-continuous step map from levels in (0, 1] to certified margins."""

    levels: np.ndarray
    margins: np.ndarray

    def __post_init__(self):
        levels = _sorted_strict("levels", np.asarray(self.levels, dtype=float))
        if np.any(levels <= 0.0) or np.any(levels > 1.0):
            raise ParameterError("levels must lie in (0, 1]")
        margins = np.asarray(self.margins, dtype=float)
        if margins.shape != levels.shape:
            raise ParameterError("levels and margins must have equal length")
        if np.any(np.isnan(margins)):
            raise ParameterError("margins must not be NaN")
        with np.errstate(invalid="ignore"):
            diffs = np.diff(margins)
        if np.any(diffs[np.isfinite(diffs)] > 0):
            raise ParameterError("margins must be non-increasing in the level")
        object.__setattr__(self, "levels", levels)
        object.__setattr__(self, "margins", margins)

    def at(self, alpha) -> np.ndarray | float:
        """Step evaluation: margin at the largest grid level <= ``alpha``."""
        idx = np.searchsorted(self.levels, np.asarray(alpha, dtype=float), side="right")
        padded = np.concatenate(([math.inf], self.margins))
        out = padded[idx]
        return out.item() if np.ndim(alpha) == 0 else out

    # -- serialization ------------------------------------------------------

    def to_csv_text(self) -> str:
        buf = io.StringIO()
        buf.write("alpha,margin_hat\n")
        for a, m in zip(self.levels, self.margins):
            buf.write(f"{_CSV_FMT % a},{_CSV_FMT % m}\n")
        return buf.getvalue()

    @classmethod
    def from_csv_text(cls, text: str) -> "EquivalenceCurve":
        levels, margins = _parse_two_column_csv(text, ("alpha", "margin_hat"))
        return cls(levels, margins)

    def to_json_obj(self) -> dict:
        return {
            "type": "equivalence_curve",
            "levels": self.levels.tolist(),
            "margins": self.margins.tolist(),
        }

    @classmethod
    def from_json_obj(cls, obj: dict) -> "EquivalenceCurve":
        if obj.get("type") != "equivalence_curve":
            raise ParameterError("not an equivalence_curve JSON object")
        return cls(np.asarray(obj["levels"]), np.asarray(obj["margins"]))


def _parse_two_column_csv(text: str, expected: tuple[str, str]):
    lines = [ln for ln in text.strip().splitlines() if ln.strip()]
    if not lines or tuple(lines[0].strip().split(",")) != expected:
        raise ParameterError(f"expected CSV header {','.join(expected)!r}")
    col1, col2 = [], []
    for ln in lines[1:]:
        a, b = ln.split(",")
        col1.append(float(a))
        col2.append(float(b))
    return np.asarray(col1), np.asarray(col2)


@dataclass(frozen=True)
class FixedTest:
    """A level-alpha test outcome: 0 (keep) or 1/alpha (reject)."""

    level: float
    outcome: float

    def __post_init__(self):
        if not 0.0 < self.level < 1.0:
            raise ParameterError(f"level must be in (0, 1), got {self.level!r}")
        if self.outcome not in (0.0, 1.0 / self.level):
            raise ParameterError("outcome must be 0 or exactly 1/level")

    @property
    def rejects(self) -> bool:
        return self.outcome != 0.0


# ---------------------------------------------------------------------------
# Inversion
# ---------------------------------------------------------------------------

def _require_monotone(curve: ECurve):
    if not curve.is_monotone:
        raise ParameterError(
            "e-curve values must be non-decreasing in the margin; "
            "apply right_lower_envelope first"
        )


def margin_at_level(curve: ECurve, alpha: float) -> float:
    """Smallest grid margin with e-value >= 1/alpha, or +inf if none."""
    _require_monotone(curve)
    if alpha <= 0.0:
        raise ParameterError("level must be positive")
    idx = int(np.searchsorted(curve.values, 1.0 / alpha, side="left"))
    if idx == curve.values.size:
        return math.inf
    return float(curve.margins[idx])


def invert_ecurve(curve: ECurve, levels) -> EquivalenceCurve:
    """Invert a monotone e-curve into an equivalence curve on a level grid."""
    _require_monotone(curve)
    lv = _sorted_strict("levels", np.asarray(levels, dtype=float))
    if np.any(lv <= 0.0) or np.any(lv > 1.0):
        raise ParameterError("levels must lie in (0, 1]")
    idx = np.searchsorted(curve.values, 1.0 / lv, side="left")
    margins = np.where(
        idx < curve.values.size,
        curve.margins[np.minimum(idx, curve.values.size - 1)],
        math.inf,
    )
    return EquivalenceCurve(lv, margins)


def curve_from_equivalence(eq: EquivalenceCurve, margins) -> ECurve:
    """Recover the e-curve: e(margin) = sup{1/alpha : margin_hat(alpha) <= margin}."""
    mg = _sorted_strict("margins", np.asarray(margins, dtype=float))
    rev = eq.margins[::-1]  # non-decreasing
    cnt = np.searchsorted(rev, mg, side="right")
    values = np.zeros_like(mg)
    hit = cnt > 0
    values[hit] = 1.0 / eq.levels[eq.levels.size - cnt[hit]]
    return ECurve(mg, values)


def right_lower_envelope(curve: ECurve) -> ECurve:
    """Largest non-decreasing curve below the input (suffix minimum)."""
    env = np.minimum.accumulate(curve.values[::-1])[::-1]
    return ECurve(curve.margins, env)


def test_from_ecurve(curve: ECurve, margin: float, alpha: float) -> FixedTest:
    """Fixed test at a margin: reject (1/alpha) iff the e-value reaches 1/alpha."""
    if not 0.0 < alpha < 1.0:
        raise ParameterError(f"level must be in (0, 1), got {alpha!r}")
    value = curve.at(margin)
    return FixedTest(alpha, 1.0 / alpha if value >= 1.0 / alpha else 0.0)


# ---------------------------------------------------------------------------
# Merging
# ---------------------------------------------------------------------------

def _refine(c1: ECurve, c2: ECurve):
    grid = np.union1d(c1.margins, c2.margins)
    return grid, np.asarray(c1.at(grid)), np.asarray(c2.at(grid))


def merge_average(c1: ECurve, c2: ECurve, w: float) -> ECurve:
    """Weighted average of two arbitrarily dependent e-curves."""
    if not 0.0 <= w <= 1.0:
        raise ParameterError(f"weight must be in [0, 1], got {w!r}")
    grid, v1, v2 = _refine(c1, c2)
    # degenerate weights drop the other curve so 0 * inf cannot poison the sum
    if w == 0.0:
        merged = v2
    elif w == 1.0:
        merged = v1
    else:
        merged = w * v1 + (1.0 - w) * v2
    return ECurve(grid, merged)


def merge_product(c1: ECurve, c2: ECurve) -> ECurve:
    """Product of two independent e-curves (independence is a caller contract)."""
    grid, v1, v2 = _refine(c1, c2)
    with np.errstate(invalid="ignore"):
        merged = v1 * v2
    # convention 0 * inf = 0: a zero e-value annihilates the evidence
    merged = np.where(np.isnan(merged), 0.0, merged)
    return ECurve(grid, merged)


# ---------------------------------------------------------------------------
# Two-margin surfaces and the Pareto frontier
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ESurface:
    """E-values on a rectangular (lower, upper) margin grid.

    Cells with ``lower >= upper`` are structurally invalid and ignored.
    Monotonicity in the tightness partial order means: non-increasing as the
    lower margin grows, non-decreasing as the upper margin grows.
    """

    lowers: np.ndarray
    uppers: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        lowers = _sorted_strict("lowers", np.asarray(self.lowers, dtype=float))
        uppers = _sorted_strict("uppers", np.asarray(self.uppers, dtype=float))
        values = np.asarray(self.values, dtype=float)
        if values.shape != (lowers.size, uppers.size):
            raise ParameterError("values must have shape (len(lowers), len(uppers))")
        valid = lowers[:, None] < uppers[None, :]
        v = values[valid]
        if np.any(np.isnan(v)) or np.any(v < 0.0):
            raise ParameterError("surface e-values must be >= 0 on valid cells")
        object.__setattr__(self, "lowers", lowers)
        object.__setattr__(self, "uppers", uppers)
        object.__setattr__(self, "values", values)

    @property
    def valid_mask(self) -> np.ndarray:
        return self.lowers[:, None] < self.uppers[None, :]

    def envelope(self) -> "ESurface":
        """Monotone envelope: min over all wider-or-equal valid pairs."""
        vals = np.where(self.valid_mask, self.values, math.inf)
        vals = np.minimum.accumulate(vals, axis=0)
        vals = np.minimum.accumulate(vals[:, ::-1], axis=1)[:, ::-1]
        vals = np.where(self.valid_mask, vals, np.nan)
        return ESurface(self.lowers, self.uppers, vals)


@dataclass(frozen=True)
class MarginFrontier:
    """Pareto-minimal qualifying margin pairs at one level (an antichain)."""

    level: float
    pairs: tuple[tuple[float, float], ...]


def margin_frontier(surface: ESurface, alpha: float) -> MarginFrontier:
    """Tightest margin pairs whose (envelope) e-value reaches 1/alpha."""
    if not 0.0 < alpha <= 1.0:
        raise ParameterError(f"level must be in (0, 1], got {alpha!r}")
    env = surface.envelope()
    threshold = 1.0 / alpha
    vals = np.where(env.valid_mask, env.values, -math.inf)
    pairs: list[tuple[float, float]] = []
    best_j = vals.shape[1]
    for i in range(vals.shape[0] - 1, -1, -1):
        qualifying = np.nonzero(vals[i] >= threshold)[0]
        if qualifying.size == 0:
            continue
        j = int(qualifying[0])
        if j < best_j:
            pairs.append((float(surface.lowers[i]), float(surface.uppers[j])))
            best_j = j
    return MarginFrontier(alpha, tuple(pairs))
