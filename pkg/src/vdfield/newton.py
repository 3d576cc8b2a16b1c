"""Tropical computation of dominant and Newton degrees.

Under a small derivation and for v(phi) < 0, the dominant degree of a
conjugate P^phi is read off a min-plus expression in the data
(v(P_i), ||i||): it is the largest |i| among the indices minimizing
v(P_i) + ||i|| * v(phi).  The crossing points of the affine functions
involved are the breakpoints; between consecutive breakpoints the
degree is constant.

The Newton degree is the eventual value of ddeg P^phi as v(phi) climbs
to the top of Gamma(der).  When the cut has a maximum the evaluation is
an honest conjugation at the maximum; when it has none (the top is a
whole coset) the evaluation point is symbolic: plus infinity in the
first coordinate the cut does not constrain.  One-sided limits in gamma
(ndeg below a fixed element) re-enter the same pipeline after adjoining
a flat generator of infinitesimal value.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

from .diffpoly import (
    DiffPoly,
    add_conj,
    comp_conj,
    dominant,
    evaluate,
    mi_degree,
    mi_weight,
    mul_conj,
)
from .errors import IndeterminateValuation, VdfError
from .gridseries import FieldInstance, Series
from .valgroup import (
    ALL,
    EMPTY,
    INFINITY,
    PREFIX,
    ConvexSubgroup,
    Cut,
    GroupElement,
    cut_stabilizer,
    with_infinitesimal,
    zero,
)


# -- raw tropical data ---------------------------------------------------------


def tropical_profile(P: DiffPoly) -> List[Tuple[GroupElement, int, int]]:
    """The pairs (v(P_i), ||i||) of the support, tagged with |i|."""
    if P.is_zero():
        raise VdfError("tropical profile of the zero polynomial")
    out = []
    for i, c in P.terms.items():
        if not c.terms:
            continue
        out.append((c.valuation(), mi_weight(i), mi_degree(i)))
    if not out:
        raise VdfError("no coefficient of P has a known term")
    return out


def _unknown_tails(P: DiffPoly) -> List[Tuple[GroupElement, int]]:
    """(tau, ||i||) for coefficients with no known term: lower bounds
    that must stay strictly above any winning tropical key."""
    out = []
    for i, c in P.terms.items():
        if not c.terms and c.tau is not INFINITY:
            out.append((c.tau, mi_weight(i)))
    return out


def tropical_ddeg(P: DiffPoly, gamma: GroupElement) -> int:
    """max |i| over the argmin of v(P_i) + ||i|| gamma, for gamma < 0.

    gamma may live in an infinitesimally extended group (rank larger
    than the field's); coefficient values embed by zero padding.  The
    identification with ddeg of the conjugate is only valid after
    normalizing to small derivation, which is the caller's business;
    gamma >= 0 is rejected outright.
    """
    n = P.field.rank
    if gamma.rank < n:
        raise VdfError("gamma has lower rank than the field's value group")
    if not gamma < zero(gamma.rank):
        raise VdfError(
            "tropical formula needs gamma < 0; renormalize via comp_conj first"
        )
    best_key = None
    best_deg = -1
    for v, w, d in tropical_profile(P):
        key = (v.pad(gamma.rank) + gamma.scale(w)).coords
        if best_key is None or key < best_key:
            best_key, best_deg = key, d
        elif key == best_key and d > best_deg:
            best_deg = d
    for tau, w in _unknown_tails(P):
        if not best_key < (tau.pad(gamma.rank) + gamma.scale(w)).coords:
            raise IndeterminateValuation(
                "a coefficient known only modulo its truncation could win"
            )
    return best_deg


def breakpoints(P: DiffPoly) -> List[GroupElement]:
    """Crossings gamma(i,j) = (v(P_j) - v(P_i)) / (||i|| - ||j||) of the
    tropical affine family, restricted to gamma < 0, deduplicated and
    sorted ascending."""
    profile = tropical_profile(P)
    n = P.field.rank
    found = set()
    for a in range(len(profile)):
        va, wa, _ = profile[a]
        for b in range(a + 1, len(profile)):
            vb, wb, _ = profile[b]
            if wa == wb:
                continue
            g = (vb - va).scale(Fraction(1, wa - wb))
            if g < zero(n):
                found.add(g.coords)
    return [GroupElement(c) for c in sorted(found)]


# -- Gamma(der) and its stabilizer ----------------------------------------------


def _intersect_prefix(a: Cut, b: Cut) -> Cut:
    """Intersection of two inclusive prefix cuts (it is one of them)."""
    if a.kind == ALL:
        return b
    if b.kind == ALL:
        return a
    if a.depth > b.depth:
        a, b = b, a
    pb = b.bound[: a.depth]
    if pb <= a.bound:
        return b
    return a


def gamma_der(field: FieldInstance, validate: bool = True,
              samples: int = 200, seed: int = 7) -> Cut:
    """The downward-closed set {v(phi) : der maps the maximal ideal into
    phi times it}, as a prefix cut.

    For a grid field the binding constraints come from monomials m < 1
    whose value approaches zero inside a generator class p: the cut is
    the intersection over classes of {gamma : proj_(p+1)(gamma) <=
    proj_(p+1)(psi_floor(p))}.  The result is validated by a sampling
    oracle and the constructor raises on any discrepancy.  Validated
    cuts are cached on the field instance.
    """
    cached = getattr(field, "_gamma_der_cut", None)
    if cached is not None:
        return cached
    n = field.rank
    cut = Cut.all_of(n)
    for p in range(n):
        level = field.psi_floor(p)
        if level is INFINITY:
            continue
        cut = _intersect_prefix(
            cut, Cut.prefix(n, level.coords[: p + 1], inclusive=True)
        )
    if validate:
        _validate_gamma_der(field, cut, samples, seed)
        field._gamma_der_cut = cut
    return cut


def _random_positive_value(field: FieldInstance, rng: random.Random) -> GroupElement:
    n = field.rank
    p = rng.randrange(n)
    coords = [Fraction(0)] * n
    coords[p] = Fraction(rng.randint(1, 6), rng.randint(1, 4))
    for j in range(p + 1, n):
        coords[j] = Fraction(rng.randint(-6, 6), rng.randint(1, 4))
    return GroupElement(coords)


def _monomial_derivative_value(field: FieldInstance, gamma: GroupElement):
    """v(m') for the monomial of value gamma, computed honestly from the
    generator logders."""
    mono = field.monomial_of_value(gamma)
    ld = field.monomial_logder(mono)
    if not ld.terms:
        return INFINITY
    return gamma + ld.valuation()


def _validate_gamma_der(field: FieldInstance, cut: Cut, samples: int, seed: int):
    rng = random.Random(seed)
    n = field.rank
    small_values = [_random_positive_value(field, rng) for _ in range(samples)]
    # Membership direction: points in the cut are below every v(m').
    probes: List[GroupElement] = []
    if cut.kind == PREFIX:
        b = cut.bound_element()
        probes.extend([b, b - _random_positive_value(field, rng)])
    for _ in range(max(10, samples // 2)):
        probes.append(GroupElement(
            [Fraction(rng.randint(-8, 8), rng.randint(1, 3)) for _ in range(n)]
        ))
    for gamma in probes:
        inside = cut.contains(gamma)
        if inside:
            for delta in small_values:
                dv = _monomial_derivative_value(field, delta)
                if not (dv is INFINITY or gamma < dv):
                    raise VdfError(
                        f"gamma_der validation failed: {gamma} in cut but "
                        f"v(m')={dv} for v(m)={delta}"
                    )
        else:
            if not _witness_outside(field, gamma):
                raise VdfError(
                    f"gamma_der validation failed: no witness that {gamma} "
                    "lies outside the cut"
                )


def _witness_outside(field: FieldInstance, gamma: GroupElement) -> bool:
    """Find a monomial m < 1 with v(m') <= gamma."""
    levels = []
    for i in range(field.rank):
        lvl = field.psi_level(i)
        if lvl is not INFINITY:
            levels.append(lvl)
    candidates = []
    for lvl in levels:
        delta = gamma - lvl
        candidates.extend([delta, delta.scale(Fraction(1, 2))])
    for delta in candidates:
        if not zero(field.rank) < delta:
            continue
        dv = _monomial_derivative_value(field, delta)
        if dv is not INFINITY and dv <= gamma:
            return True
    return False


def s_der(field: FieldInstance) -> ConvexSubgroup:
    """Stabilizer of Gamma(der): the convex subgroup of translations
    fixing the cut."""
    return cut_stabilizer(gamma_der(field))


# -- Newton degree ----------------------------------------------------------------


def _eps_extension(field: FieldInstance) -> FieldInstance:
    ext = getattr(field, "_eps_ext", None)
    if ext is None:
        ext = field.with_flat_generator("_eps", sign=1)
        field._eps_ext = ext
    return ext


def ndeg(P: DiffPoly, base: Optional[GroupElement] = None,
         cut: Optional[Cut] = None, twist: Optional[Series] = None) -> int:
    """The Newton degree: eventual dominant degree of P^phi as v(phi)
    approaches the top of Gamma(der).

    With a maximum in the cut this is an exact conjugation.  Otherwise
    P is normalized by a base point phi0 in the cut (default: the cut
    bound padded with zeros) and the tropical expression is evaluated at
    the symbolic top; the result does not depend on the base point.

    A compositional conjugate P^f is measured relative to the conjugated
    field: pass cut = Gamma(der) shifted by v(f) and twist = f, so the
    normalization composes as (P^f)^phi0 = P^(f*phi0).
    """
    K = P.field
    if cut is None:
        cut = gamma_der(K)
    if cut.kind == ALL:
        # Zero derivation: conjugation never changes the coefficients.
        return _top_tropical(P, 0, ())
    if cut.kind == EMPTY:
        raise VdfError("gamma_der returned an empty cut")
    if cut.has_max():
        target = cut.max_element() if base is None else base
        if not cut.contains(target):
            raise VdfError("base point must lie in gamma_der")
        phi0 = K.monomial_series(K.monomial_of_value(target))
        Q = comp_conj(P, phi0, twist)
        if target == cut.max_element():
            return dominant(Q).ddeg
        shifted = cut.shift_by_prefix(target)
        return _top_tropical(Q, shifted.depth, shifted.bound)
    if base is None:
        base = cut.bound_element()
    if not cut.contains(base):
        raise VdfError("base point must lie in gamma_der")
    phi0 = K.monomial_series(K.monomial_of_value(base))
    Q = comp_conj(P, phi0, twist)
    shifted = cut.shift_by_prefix(base)
    return _top_tropical(Q, shifted.depth, shifted.bound)


def _top_tropical(Q: DiffPoly, depth: int, bound: Sequence[Fraction]) -> int:
    """Evaluate the tropical expression at the symbolic top of the
    inclusive prefix cut {proj_depth <= bound}: the point
    (bound, +infinity, 0, ...).  Comparison keys order by the bound
    block, then by the weight (the +infinity coefficient), then by the
    remaining coordinates."""
    bound = tuple(bound)
    best_key = None
    best_deg = -1

    def key_of(v, w):
        prefix = tuple(c + w * b for c, b in zip(v.coords[:depth], bound))
        return (prefix, w, v.coords[depth:])

    for v, w, d in tropical_profile(Q):
        key = key_of(v, w)
        if best_key is None or key < best_key:
            best_key, best_deg = key, d
        elif key == best_key and d > best_deg:
            best_deg = d
    if best_deg < 0:
        raise VdfError("no determinate coefficient in the conjugate")
    for tau, w in _unknown_tails(Q):
        if not best_key < key_of(tau, w):
            raise IndeterminateValuation(
                "a coefficient known only modulo its truncation could win"
            )
    return best_deg


def ndeg_geq(P: DiffPoly, gamma: GroupElement) -> int:
    """max ndeg P_{x g} over v(g) >= gamma, which the monotonicity law
    collapses to ndeg of a single conjugate at gamma.  gamma of rank
    n+1 is interpreted in the flat infinitesimal extension."""
    K = P.field
    if gamma.rank == K.rank:
        g = K.monomial_series(K.monomial_of_value(gamma))
        return ndeg(mul_conj(P, g))
    if gamma.rank == K.rank + 1:
        ext = _eps_extension(K)
        g = ext.monomial_series(ext.monomial_of_value(gamma))
        return ndeg(mul_conj(P.embed_into(ext), g))
    raise VdfError(f"gamma rank {gamma.rank} does not match field rank {K.rank}")


def ndeg_prec(P: DiffPoly, g: Series) -> int:
    """max ndeg P_{x f} over f strictly smaller than g: the one-sided
    limit just above v(g), taken in the extended group."""
    if not g.terms:
        raise VdfError("ndeg_prec needs a nonzero comparison element")
    return ndeg_geq(P, with_infinitesimal(g.valuation(), "above"))


# -- Newton degree along a pc-sequence ---------------------------------------------


@dataclass
class PcSequence:
    """A finite prefix of a pseudocauchy sequence."""

    elements: List[Series]
    window: int = 3

    def gaps(self) -> List[GroupElement]:
        out = []
        for a, b in zip(self.elements, self.elements[1:]):
            diff = b - a
            if not diff.terms:
                raise VdfError("pc-sequence has equal consecutive elements")
            out.append(diff.valuation())
        for g1, g2 in zip(out, out[1:]):
            if not g1 < g2:
                raise VdfError(
                    f"not a pc-sequence: gap {g2} does not exceed {g1}"
                )
        return out


@dataclass
class CutDegreeCertificate:
    value: int
    stabilized_at: int
    window: int
    history: List[int]


def ndeg_in_cut(P: DiffPoly, seq: PcSequence) -> CutDegreeCertificate:
    """Eventual value of ndeg_geq(P_{+a_rho}, gamma_rho), detected by a
    stabilization window over the generated prefix.

    The eventual quantifier is not decidable from finite data: the
    certificate records where the window closed, and the call fails if
    the prefix ends before stabilization.
    """
    gaps = seq.gaps()
    if len(gaps) < seq.window:
        raise VdfError("pc-sequence prefix shorter than the window")
    history: List[int] = []
    for rho, gamma in enumerate(gaps):
        d = ndeg_geq(add_conj(P, seq.elements[rho]), gamma)
        history.append(d)
        if len(history) >= seq.window and len(set(history[-seq.window:])) == 1:
            return CutDegreeCertificate(
                d, len(history) - seq.window, seq.window, history
            )
    raise VdfError(
        f"no stabilization within the generated prefix (history {history})"
    )


# -- flexibility probe ----------------------------------------------------------------


def flex_probe(P: DiffPoly, beta: GroupElement, sample_count: int,
               seed: int = 11) -> List[Tuple[GroupElement, object]]:
    """Sample values P(y) for |v(y)| < beta and collect the distinct
    (valuation, dominant monomial) classes.  A probe of the infinite
    image, not a proof."""
    if not zero(beta.rank) < beta:
        raise VdfError("beta must be positive")
    if ndeg(P) < 1:
        raise VdfError("flex_probe requires ndeg P >= 1")
    K = P.field
    rng = random.Random(seed)
    seen = {}
    n = K.rank
    p = beta.first_nonzero()
    for _ in range(sample_count):
        # |v(y)| < beta: zero before beta's leading coordinate, strictly
        # inside at it, free after it.
        coords = [Fraction(0)] * n
        k = rng.randint(1, 12)
        coords[p] = beta.coords[p] * Fraction(rng.randint(-k + 1, k - 1), k)
        for j in range(p + 1, n):
            coords[j] = Fraction(rng.randint(-6, 6), rng.randint(1, 3))
        gamma = GroupElement(coords)
        if coords[p] == 0 and not (-beta < gamma < beta):
            continue
        c = Fraction(rng.randint(1, 9), rng.randint(1, 4))
        y = K.monomial_series(K.monomial_of_value(gamma), c)
        val = evaluate(P, y)
        if not val.terms:
            continue
        v = val.valuation()
        seen[(v.coords, val.dominant_monomial())] = (v, val.dominant_monomial())
    return sorted(seen.values(), key=lambda pair: pair[0].coords)
