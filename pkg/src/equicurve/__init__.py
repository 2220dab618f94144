"""Equivalence assessment with e-values.

Compute curves of e-values over equivalence margins, invert them into
uniformly valid data-dependent equivalence curves, calibrate utility-optimal
boundary-mixture e-values, merge evidence across studies, run anytime-valid
sequential e-processes, and derive loss bounds for decision makers.
"""

__version__ = "0.1.0"

from .curves import (
    ECurve,
    EquivalenceCurve,
    ESurface,
    FixedTest,
    MarginFrontier,
    curve_from_equivalence,
    invert_ecurve,
    margin_frontier,
    merge_average,
    merge_product,
    right_lower_envelope,
    test_from_ecurve,
)
from .decisions import (
    LossSpec,
    evidence_weighted_minimax,
    loss_bound,
    loss_spectrum,
    minimax_decision,
)
from .models import (
    Dirac,
    DiscreteWeights,
    MarginPair,
    SymmetricTSquaredF,
    SymmetricZSquared,
    TEffectSize,
    UniformInterval,
    ZTest,
    mixture_log_density,
    sufficient_statistic,
)
from .optimal import (
    BoundaryMixtureEValue,
    DiscreteKernel,
    LogUtility,
    NeymanPearsonUtility,
    PowerUtility,
    calibrate_log,
    calibrate_utility,
    make_log_optimal,
    mean_scale_t_tost,
    simplex_region,
    stp_check,
    tost_e,
    universal_inference,
    validity_sweep,
)
from .pipeline import CurveFamily, margin_curves
from .sequential import (
    EProcess,
    SimCampaign,
    StoppingReport,
    one_sided_lr_process,
    product_of_numeraires,
    run_campaign,
    sequential_tost,
    sequential_ui,
    symmetric_t_process,
    symmetric_z_process,
    ville_stop,
)

__all__ = [name for name in dir() if not name.startswith("_")]
