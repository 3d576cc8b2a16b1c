"""Exact arithmetic in grid-presented valued differential fields."""

from .valgroup import (
    INFINITY,
    ConvexSubgroup,
    Cut,
    GroupElement,
    cut_contains,
    cut_stabilizer,
    lex_cmp,
    quotient_map,
    with_infinitesimal,
)
from .gridseries import (
    FieldInstance,
    Generator,
    Monomial,
    Series,
    laurent_ddt,
    laurent_tddt_coarse,
    log_fragment,
    transseries_fragment,
)
from .diffpoly import (
    DiffPoly,
    DominantData,
    add_conj,
    comp_conj,
    ddeg,
    dominant,
    dwt,
    evaluate,
    fnk,
    gauss_val,
    mul_conj,
)
from .newton import (
    PcSequence,
    breakpoints,
    flex_probe,
    gamma_der,
    ndeg,
    ndeg_geq,
    ndeg_in_cut,
    ndeg_prec,
    s_der,
    tropical_ddeg,
)
from .coarsen import Coarsening, coarse_val, coarsen, coarsened_gamma_der, lift_val
from .hsolve import (
    LinearOperator,
    SolveTrace,
    asym_integrate,
    apply_op,
    check_bll,
    demo_nonuniqueness,
    lambda_series,
    op_A,
    op_B,
    psi_map,
    solve_linear,
)
from .expr import parse_expr, parse_poly, parse_series, print_expr

__version__ = "0.1.0"
