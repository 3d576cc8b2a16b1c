"""First-order linear solving in the exp-log fragments.

The fragment fields carry the element lambda = sum (l0...lk)^-1 and the
operators A = der - lambda and B = der + (1 - lambda).  Equations
op(y) = g are solved by dominant balance: each step finds a single term
h with op(h) asymptotically equal to the residual and subtracts it, so
the residual valuation strictly increases.  When the residual sits in a
class the operator cannot reach (the depth-N shadow of the gap
phenomenon) the step fails with IntegrationGap and the attempt trail
records the resonance cascade.

Asymptotic integration I (pick If with (If)' ~ f) is the special case
op = der.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from .diffpoly import DiffPoly
from .errors import IntegrationGap, NonDecreasingResidual, VdfError
from .gridseries import (
    FieldInstance,
    Monomial,
    Series,
    log_fragment,
    transseries_fragment,
)
from .valgroup import INFINITY, GroupElement, unit, zero


@dataclass
class LinearOperator:
    """a0 + a1 * der, applied as y -> a0*y + a1*y'."""

    a0: Series
    a1: Series

    def __post_init__(self):
        if self.a1.is_true_zero():
            raise VdfError("a1 must be nonzero for a first-order operator")

    @property
    def field(self) -> FieldInstance:
        return self.a1.field

    def __call__(self, y: Series) -> Series:
        return apply_op(self, y)


def apply_op(op: LinearOperator, y: Series) -> Series:
    return op.a0 * y + op.a1 * y.derive()


def derivation_op(field: FieldInstance) -> LinearOperator:
    return LinearOperator(field.zero_series(), field.one())


def operator_poly(op: LinearOperator, g: Optional[Series] = None) -> DiffPoly:
    """The operator (minus a right-hand side) as a differential
    polynomial a1*Y' + a0*Y - g, the bridge to the Newton-degree laws."""
    K = op.field
    P = DiffPoly(K, {(0, 1): op.a1, (1, 0): op.a0}, order=1)
    if g is not None and not g.is_true_zero():
        P = P + DiffPoly(K, {(0, 0): -g}, order=1)
    return P


# -- lambda and psi -------------------------------------------------------------


def lambda_series(depth: int, field: Optional[FieldInstance] = None) -> Series:
    """sum_{k<=depth} (l0...lk)^-1 with truncation one grid step past
    the last kept term, so products with small factors stay certified."""
    K = field if field is not None else log_fragment(depth)
    out = K.zero_series()
    for k in range(depth + 1):
        exps = {f"l{j}": -1 for j in range(k + 1)}
        out = out + K.monomial_series(K.monomial_from_dict(exps))
    last = K.monomial_value(K.monomial_from_dict({f"l{j}": -1 for j in range(depth + 1)}))
    tau = last + unit(K.rank, K.rank - 1, 1)
    return out.truncated(tau)


def psi_map(field: FieldInstance, gamma: GroupElement) -> GroupElement:
    """psi(v(m)) = v(logder of m) for the monomial m of value gamma."""
    if gamma.is_zero():
        raise VdfError("psi is undefined at 0")
    ld = field.monomial_logder(field.monomial_of_value(gamma))
    if not ld.terms:
        raise VdfError(f"monomial of value {gamma} has zero logarithmic derivative")
    return ld.valuation()


# -- dominant balance -----------------------------------------------------------


def dominant_solve(op: LinearOperator, z: Series) -> Series:
    """A single term h = d*m with op(h) ~ z (same dominant term).

    Candidate values for v(h) come from the finitely many response
    levels of the operator: v(a0) for the multiplication-dominated
    balance and v(a1) + psi-level for the derivative-dominated one.
    A candidate whose response cancels (resonance) re-enters the queue
    shifted by the observed response valuation; when the queue exhausts
    the equation has no single-term solution at this depth.
    """
    K = op.field
    if not z.terms:
        raise VdfError("dominant_solve needs a residual with a known term")
    beta = z.valuation()
    c_target, m_target = z.dominant_term()

    seeds: List[GroupElement] = []
    if op.a0.terms:
        seeds.append(beta - op.a0.valuation())
    a1v = op.a1.valuation()
    for i in range(K.rank):
        lvl = K.psi_level(i)
        if lvl is not INFINITY:
            seeds.append(beta - a1v - lvl)

    pure_derivation = not op.a0.terms
    attempts: List[Tuple[GroupElement, object]] = []
    seen = set()
    queue = list(dict.fromkeys(s.coords for s in seeds))
    budget = 3 * K.rank + 6
    while queue and budget > 0:
        budget -= 1
        gamma = GroupElement(queue.pop(0))
        if gamma.coords in seen:
            continue
        seen.add(gamma.coords)
        if pure_derivation and gamma.is_zero():
            continue
        mono = K.monomial_of_value(gamma)
        response = op.a0 + op.a1 * K.monomial_logder(mono)
        if not response.terms:
            # annihilated or uncertifiable in this direction
            attempts.append((gamma, response.tau))
            continue
        v_resp = response.valuation()
        if gamma + v_resp == beta:
            dom_c, _ = response.dominant_term()
            h = K.monomial_series(mono, c_target / dom_c)
            return h
        attempts.append((gamma, v_resp))
        retry = beta - v_resp
        if retry.coords not in seen:
            queue.append(retry.coords)
    raise IntegrationGap(
        f"no single-term solution of op(h) ~ residual at value {beta}",
        attempts=attempts,
    )


def asym_integrate(f: Series) -> Series:
    """If: a single term with (If)' ~ f and If not asymptotic to 1.

    Exact inversion of gamma + psi(gamma) = v(f) on the grid; raises
    IntegrationGap when the required monomial lives one level deeper
    than the fragment (for example integrating (l0...lN)^-1)."""
    h = dominant_solve(derivation_op(f.field), f)
    check = h.derive()
    cd, md = check.dominant_term()
    cf, mf = f.dominant_term()
    if not (cd == cf and md == mf):
        raise AssertionError("asym_integrate postcondition (If)' ~ f failed")
    return h


# -- the solver ------------------------------------------------------------------


@dataclass
class SolveTrace:
    """Iteration record: residual valuations are strictly increasing.
    The final entry may be the residual's truncation bound, or +infinity
    when the equation closed exactly."""

    residual_valuations: List[GroupElement] = dc_field(default_factory=list)
    iterates: List[Series] = dc_field(default_factory=list)
    termination: str = "max_iter"
    gap: Optional[IntegrationGap] = None

    def as_report(self) -> dict:
        return {
            "iterations": len(self.iterates),
            "residual_valuations": [
                _val_strings(v) for v in self.residual_valuations
            ],
            "termination": self.termination,
        }


def solve_linear(op: LinearOperator, g: Series, tau: GroupElement,
                 max_iter: int = 64) -> Tuple[Series, SolveTrace]:
    """Drive op(y) - g below valuation tau by dominant-balance steps.

    The residual valuation must strictly increase at every step; a
    violation raises NonDecreasingResidual.  Termination states:
    reached_tau (residual certified >= tau), integration_gap (no step
    exists; partial trace kept), truncation_exhausted (the residual is
    zero modulo its own truncation, which falls short of tau), or
    max_iter.
    """
    K = op.field
    y = K.zero_series()
    trace = SolveTrace()
    prev: Optional[GroupElement] = None
    for _ in range(max_iter):
        z = apply_op(op, y) - g
        if not z.terms:
            if z.tau is INFINITY or z.tau >= tau:
                trace.termination = "reached_tau"
            else:
                trace.termination = "truncation_exhausted"
            trace.residual_valuations.append(z.tau)
            return y, trace
        v = z.valuation()
        trace.residual_valuations.append(v)
        if prev is not None and not prev < v:
            raise NonDecreasingResidual(
                f"residual valuation did not increase: {prev} -> {v}"
            )
        prev = v
        if v >= tau:
            trace.termination = "reached_tau"
            return y, trace
        try:
            h = dominant_solve(op, z)
        except IntegrationGap as gap:
            trace.termination = "integration_gap"
            trace.gap = gap
            return y, trace
        y = y - h
        trace.iterates.append(y)
    trace.termination = "max_iter"
    return y, trace


# -- the section-8 operators ------------------------------------------------------


def op_A(field: FieldInstance, depth: int) -> LinearOperator:
    """der - lambda over a fragment containing e_x."""
    lam = lambda_series(depth, field)
    return LinearOperator(-lam, field.one())


def op_B(field: FieldInstance, depth: int) -> LinearOperator:
    """der + (1 - lambda) over the flat fragment."""
    lam = lambda_series(depth, field)
    return LinearOperator(field.one() - lam, field.one())


def check_bll(depth: int, tau: Optional[GroupElement] = None,
              max_iter: int = 128) -> dict:
    """Solve B(y) = 1 in the flat fragment, lift along y -> y*e_x, and
    certify that (der - lambda)(y*e_x) - e_x sits above tau + v(e_x)."""
    if depth < 3:
        raise VdfError("check_bll needs depth >= 3")
    L = log_fragment(depth)
    if tau is None:
        tau = L.monomial_value(
            L.monomial_from_dict({f"l{j}": -1 for j in range(depth)})
        )
    B = op_B(L, depth)
    y, trace = solve_linear(B, L.one(), tau, max_iter=max_iter)
    solved = trace.termination == "reached_tau"

    M = transseries_fragment(depth)
    A = op_A(M, depth)
    y_M = y.embed_into(M)
    lifted = y_M * M.gen("e_x")
    residual = apply_op(A, lifted) - M.gen("e_x")
    tau_M = _embed_value(L, M, tau)
    target = tau_M + M.monomial_value(M.monomial_from_dict({"e_x": 1}))
    bound = residual.val_or_tau()
    passed = solved and bound >= target
    return {
        "depth": depth,
        "flat_solve": trace.as_report(),
        "flat_residual_bound": _val_strings(
            trace.residual_valuations[-1] if trace.residual_valuations else None
        ),
        "lift_residual_bound": _val_strings(bound),
        "required_bound": _val_strings(target),
        "passed": bool(passed),
    }


def demo_nonuniqueness(depth: int, c_list: List[Fraction],
                       tau: Optional[GroupElement] = None,
                       max_iter: int = 128) -> dict:
    """Solve (der - lambda)(y) = e_x + c for each c and report the
    residual traces, the iterate differences, and the flat discrepancy.

    The e_x-block iterations are identical for every c: the constant
    offset is invisible to the residual valuation until the e_x ladder
    is exhausted, and integrating a flat constant against the operator
    fails with a resonance cascade through l0, l0*l1, ...  The report
    surfaces that cascade: it is the leading shape of the correction
    y_c - y_0 that only exists in a proper extension.
    """
    if depth < 3:
        raise VdfError("demo_nonuniqueness needs depth >= 3")
    M = transseries_fragment(depth)
    A = op_A(M, depth)
    if tau is None:
        exps = {f"l{j}": -1 for j in range(depth)}
        exps["e_x"] = 1
        tau = M.monomial_value(M.monomial_from_dict(exps))
    runs = []
    solutions: Dict[Fraction, Series] = {}
    for c in c_list:
        c = Fraction(c)
        g = M.gen("e_x") + M.constant(c)
        y, trace = solve_linear(A, g, tau, max_iter=max_iter)
        solutions[c] = y
        entry = {"c": str(c)}
        entry.update(trace.as_report())
        runs.append(entry)
    report = {"depth": depth, "tau": _val_strings(tau), "runs": runs}
    base_c = Fraction(c_list[0])
    diffs = []
    for c in c_list[1:]:
        c = Fraction(c)
        diff = solutions[c] - solutions[base_c]
        resid = apply_op(A, diff) - M.constant(c - base_c)
        entry = {
            "pair": [str(c), str(base_c)],
            "iterate_difference_terms": _series_terms(diff),
            "flat_discrepancy": _series_terms(resid),
        }
        try:
            dominant_solve(A, M.constant(c - base_c))
        except IntegrationGap as gap:
            cascade = []
            for gamma, _ in gap.attempts:
                if isinstance(gamma, GroupElement) and not gamma.is_zero():
                    mono = M.monomial_of_value(gamma)
                    cascade.append(_monomial_strings(M, mono))
            entry["correction_monomials"] = cascade
            if cascade:
                entry["correction_dominant"] = cascade[0]
                entry["correction_has_e_x_factor"] = any(
                    name == "e_x" and q != "0" for name, q in cascade[0]
                )
        diffs.append(entry)
    report["differences"] = diffs
    return report


# -- report helpers ----------------------------------------------------------------


def _val_strings(v):
    if v is None:
        return None
    if v is INFINITY:
        return "inf"
    return v.as_strings()


def _series_terms(f: Series) -> list:
    out = []
    for mono, c in f.sorted_terms():
        out.append({"coeff": str(c), "monomial": _monomial_strings(f.field, mono)})
    return out


def _monomial_strings(K: FieldInstance, mono: Monomial) -> list:
    return [
        [g.name, str(q)] for g, q in zip(K.generators, mono.exponents) if q != 0
    ]


def _embed_value(src: FieldInstance, dst: FieldInstance, gamma: GroupElement):
    exps = src.exponents_of_value(gamma)
    out = zero(dst.rank)
    for q, g in zip(exps, src.generators):
        if q != 0:
            out = out + dst.generators[dst._index[g.name]].value.scale(q)
    return out
