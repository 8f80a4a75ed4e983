"""Nets of smooth functions for wave equations on nonsmooth Lorentzian metrics.

Modules:
    nets       eps grids, meshes, scalar nets, moderateness and association
    spacetime  split metrics and their growth conditions
    riesz      Riesz distributions and the leading Hadamard coefficient
    solver     per-eps leapfrog solves, oracles and support checks
    energy     energy tensors, Sobolev norms and Gronwall fits
    cli        scenario runner
"""

from .nets import (
    Delta,
    EpsGrid,
    Heaviside,
    Kink,
    Mesh,
    Mollifier,
    ScalarNet,
    TestFunction,
    association_check,
    classify_moderate,
    classify_negligible,
    default_battery,
    estimate_order,
    load_net,
    mollifier_embed,
    pair,
    save_net,
)
from .spacetime import (
    MetricSplit,
    check_condition_A,
    check_condition_B,
    check_luni_positive,
    check_splitting,
    make_adversarial,
    make_minkowski,
    make_pp_wave_rosen,
    make_robertson_walker,
    make_static,
    mollify_metric,
)
from .riesz import RieszParams, hadamard_v0, riesz_constant, riesz_pair, verify_recursion
from .solver import (
    CauchyData,
    SolutionNet,
    convergence_order,
    dalembert_oracle,
    domain_of_dependence_check,
    solve,
    solve_distributional,
)
from .energy import (
    FieldNet,
    aux_metric,
    energy_integral,
    energy_report,
    energy_tensor,
    pointwise_norm,
    sobolev_norms,
    verify_dominant_energy,
    verify_gronwall,
    verify_norm_energy_equivalence,
)

__version__ = "0.1.0"
