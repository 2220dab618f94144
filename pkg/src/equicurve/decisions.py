"""Loss bounds and minimax decisions driven by certified margins.

A margin that bounds the true effect with probability 1 - alpha converts,
for any loss that is non-decreasing in the effect, into a high-probability
bound on the loss of *any* decision: the loss evaluated at the margin.  This
module evaluates those bounds, picks minimax (as-if) decisions, expands a
whole equivalence curve into a spectrum of (decision, bound) pairs, and
implements the evidence-weighted minimax rule that discounts each margin's
worst case by the e-value against it.

Left-continuity of the loss in the effect is the loss author's contract;
only monotonicity is checked, on a finite grid.  Ties in any argmin are
broken by the smallest decision index.
"""

from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np

from .curves import ECurve, EquivalenceCurve
from .errors import AmbiguousDecisionError, ParameterError

__all__ = [
    "LossSpec",
    "loss_bound",
    "minimax_decision",
    "loss_spectrum",
    "evidence_weighted_minimax",
    "loss_from_config",
]


@dataclass(frozen=True)
class LossSpec:
    """A finite decision set with a monotone loss over the effect size.

    Three constructions:

    * ``step_at(delta, lower, upper)`` - the loss of every decision depends
      only on whether the effect exceeds ``delta``;
    * ``from_grid(decisions, mu_grid, matrix)`` - tabulated losses, evaluated
      by the upper step (the value at the smallest grid point at or above the
      query, saturating at the top row), which upper-bounds any non-decreasing
      interpolant;
    * ``from_function(decisions, fn, check_grid)`` - arbitrary callable
      ``fn(mu, decision_index)``, spot-checked for monotonicity.
    """

    decisions: tuple[str, ...]
    _evaluate: object
    kind: str = "general"
    step_delta: float | None = None

    def __post_init__(self):
        if len(self.decisions) == 0:
            raise ParameterError("decision set must be nonempty")
        if len(set(self.decisions)) != len(self.decisions):
            raise ParameterError("decision labels must be unique")

    # -- constructors -------------------------------------------------------

    @classmethod
    def step_at(cls, delta: float, lower: dict, upper: dict) -> "LossSpec":
        if set(lower) != set(upper) or not lower:
            raise ParameterError("lower and upper losses must share decision labels")
        decisions = tuple(lower)
        lo = np.array([float(lower[d]) for d in decisions])
        hi = np.array([float(upper[d]) for d in decisions])
        if np.any(lo < 0.0) or np.any(hi < 0.0):
            raise ParameterError("losses must be nonnegative")
        if np.any(lo > hi):
            raise ParameterError("step losses need lower <= upper for every decision")

        def evaluate(mu: float, idx: int) -> float:
            return float(lo[idx] if mu <= delta else hi[idx])

        return cls(decisions, evaluate, kind="step", step_delta=float(delta))

    @classmethod
    def from_grid(cls, decisions, mu_grid, matrix) -> "LossSpec":
        decisions = tuple(decisions)
        grid = np.asarray(mu_grid, dtype=float)
        table = np.asarray(matrix, dtype=float)
        if grid.ndim != 1 or np.any(np.diff(grid) <= 0):
            raise ParameterError("mu_grid must be strictly increasing")
        if table.shape != (grid.size, len(decisions)):
            raise ParameterError("loss matrix must have shape (len(mu_grid), len(decisions))")
        if np.any(table < 0.0):
            raise ParameterError("losses must be nonnegative")
        if np.any(np.diff(table, axis=0) < 0.0):
            raise ParameterError("losses must be non-decreasing in mu for every decision")

        def evaluate(mu: float, idx: int) -> float:
            pos = int(np.searchsorted(grid, mu, side="left"))
            pos = min(pos, grid.size - 1)
            return float(table[pos, idx])

        return cls(decisions, evaluate, kind="grid")

    @classmethod
    def from_function(cls, decisions, fn, check_grid) -> "LossSpec":
        decisions = tuple(decisions)
        grid = np.asarray(check_grid, dtype=float)
        for idx in range(len(decisions)):
            vals = np.array([fn(m, idx) for m in grid])
            if np.any(vals < 0.0):
                raise ParameterError("losses must be nonnegative")
            if np.any(np.diff(vals) < -1e-12):
                raise ParameterError(
                    f"loss for decision {decisions[idx]!r} is not non-decreasing "
                    "on the verification grid"
                )
        return cls(decisions, fn, kind="general")

    # -- evaluation ---------------------------------------------------------

    def index_of(self, decision: str) -> int:
        try:
            return self.decisions.index(decision)
        except ValueError:
            raise ParameterError(f"unknown decision {decision!r}") from None

    def at(self, mu: float, decision: str) -> float:
        return float(self._evaluate(mu, self.index_of(decision)))

    def row(self, mu: float) -> np.ndarray:
        return np.array([self._evaluate(mu, i) for i in range(len(self.decisions))])


def loss_bound(loss: LossSpec, margin: float, decision: str) -> float:
    """The certified loss bound: the loss at the margin.

    With a valid level-alpha margin this bound holds with probability at
    least 1 - alpha simultaneously over all data-dependent decisions.
    """
    return loss.at(margin, decision)


def minimax_decision(loss: LossSpec, margin: float) -> tuple[str, float]:
    """Decision minimizing the certified bound (the as-if decision)."""
    row = loss.row(margin)
    idx = int(np.argmin(row))  # argmin takes the first minimizer: lowest index
    return loss.decisions[idx], float(row[idx])


def loss_spectrum(loss: LossSpec, curve: EquivalenceCurve):
    """Per-level minimax decisions and bounds along an equivalence curve."""
    rows = []
    for alpha, margin in zip(curve.levels, curve.margins):
        decision, bound = minimax_decision(loss, float(margin))
        rows.append({"alpha": float(alpha), "decision": decision, "bound": bound})
    return rows


def evidence_weighted_minimax(loss: LossSpec, curve: ECurve) -> tuple[str, float]:
    """Minimize the evidence-discounted worst case sup_m L_m(d) / e_m.

    Margins with zero e-value make any positive loss count as infinite;
    zero loss against zero evidence contributes nothing.
    """
    best_idx, best_val = None, math.inf
    any_finite = False
    for idx in range(len(loss.decisions)):
        worst = 0.0
        for margin, e_val in zip(curve.margins, curve.values):
            l_val = float(loss._evaluate(float(margin), idx))
            if l_val == 0.0:
                continue
            ratio = math.inf if e_val == 0.0 else l_val / float(e_val)
            worst = max(worst, ratio)
        if math.isfinite(worst):
            any_finite = True
        if worst < best_val:
            best_idx, best_val = idx, worst
    if not any_finite:
        raise AmbiguousDecisionError("every decision has an infinite discounted worst case")
    return loss.decisions[best_idx], best_val


def loss_from_config(config: dict) -> LossSpec:
    """Build a LossSpec from a JSON-style dict (step or grid form)."""
    try:
        kind = config["kind"]
    except (TypeError, KeyError):
        raise ParameterError("loss config must be a dict with a 'kind' key") from None
    if kind == "step":
        return LossSpec.step_at(
            float(config["delta"]), dict(config["lower"]), dict(config["upper"])
        )
    if kind == "grid":
        return LossSpec.from_grid(
            tuple(config["decisions"]), config["mu_grid"], config["loss"]
        )
    raise ParameterError(f"unknown loss kind {kind!r}")
