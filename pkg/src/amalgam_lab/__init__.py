"""Numerical laboratory for weighted amalgam spaces (L^q_w, L^p)^alpha.

Grids and balls live in :mod:`~amalgam_lab.grid`, weights and A_q diagnostics
in :mod:`~amalgam_lab.weights`, norms in :mod:`~amalgam_lab.norms`, operators
in :mod:`~amalgam_lab.operators` and the theorem harness in
:mod:`~amalgam_lab.verify`.
"""

from .errors import LabError
from .grid import (
    Ball,
    BallFamily,
    Grid,
    GridFunction,
    admissible_centers,
    ball_indicator,
    ball_mask,
    coarse_lattice,
    dilate,
    dyadic_radii,
    integrate,
    make_family,
    make_grid,
    sample,
)
from .weights import (
    Weight,
    aq_constant,
    aq_refinement,
    ball_mass,
    calibrate_reverse_holder,
    constant,
    doubling_check,
    parse_weight,
    power,
    product,
    reverse_holder_check,
    sampled,
    subset_ratio_check,
)
from .norms import (
    ExponentSet,
    NormValue,
    amalgam_norm,
    amalgam_norm_at_r,
    bmo_mean_drift,
    bmo_norm,
    lp_norm,
    morrey_norm,
    weak_amalgam_norm,
    weak_norm,
    wiener_norm,
)
from .operators import (
    CZKernel,
    OperatorSpec,
    SphereKernel,
    apply,
    apply_cz,
    bochner_riesz,
    bochner_riesz_max,
    commutator,
    hilbert_kernel,
    hyp1_majorant,
    marcinkiewicz,
    marcinkiewicz_commutator,
    parse_operator,
    riesz_kernel,
    rough_singular,
    size_majorant,
    sphere_kernel,
    symbol,
)
from .corpus import corpus_members, make_corpus
from .verify import Scenario, VerificationReport, embedding_check, morrey_consistency_check, ratio_study

__version__ = "0.1.0"
