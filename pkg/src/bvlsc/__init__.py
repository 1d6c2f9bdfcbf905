"""Linear-growth integral functionals on BV and weak* lower semicontinuity.

The package evaluates functionals of the form

    F(u) = integral_Omega f(x, grad u) dx
         + integral_Omega f_inf(x, polar of Du) d|D^s u|

on discrete BV functions (piecewise-affine plus explicit jumps), and decides
plausibility of sequential weak* lower semicontinuity through two sampled
conditions: quasiconvexity of f at interior points and quasi-sublinear growth
from below at boundary points (a half-ball sign test on the recession
function).  Violations come with witness fields and an executable necessity
certificate; non-violations are evidence at the configured mesh and solver
budgets.
"""

from .bv import (
    BVFunction,
    MatrixMeasure,
    cutoff_multiply,
    derivative,
    does_not_charge,
    l1_distance,
    total_variation,
    tv_on_neighborhood,
    weakstar_diagnostics,
)
from .boundary import QslbReport, epsdelta_probe, equivalence_harness, halfball_deficit
from .decompose import CoverSpec, DecompositionResult, local_decompose, verify_properties
from .functional import (
    FunctionalValue,
    additivity_residual,
    eval_F,
    eval_G,
    four_term_residual,
    uniform_continuity_probe,
)
from .integrands import (
    Integrand,
    RecessionFn,
    catalog_get,
    catalog_tags,
    composite,
    estimated_recession,
    freeze_x,
    modulate,
    mu_estimate,
    recession_estimate,
)
from .meshing import (
    BoundaryPoint,
    Domain,
    Mesh,
    Patch,
    build_mesh,
    halfball_mesh,
    interval_mesh,
    local_patch,
    unit_square_mesh,
)
from .minimize import SolveResult, SolverOptions, TestField, minimize_field
from .quasiconvex import QcReport, qc_deficit
from .sequences import (
    SequenceSpec,
    empirical_liminf,
    generate,
    limit_energy_check,
    necessity_witness,
)
from .verdict import Scenario, Verdict, analyze, run_scenario
from . import regions

__version__ = "0.1.0"
