"""Coarsening a grid field by a convex subgroup.

Coarsening by the prefix subgroup of length k replaces the valuation by
its first k coordinates.  The elements of dotted-valuation zero, modulo
those of positive dotted valuation, form the residue field; thanks to
the triangular generator convention it is again a grid instance, on the
generators whose value starts with k zeros.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Dict

from .errors import VdfError
from .gridseries import FieldInstance, Generator, Monomial, Series
from .valgroup import (
    ALL,
    INFINITY,
    ConvexSubgroup,
    Cut,
    GroupElement,
    quotient_map,
    zero,
)


def coarse_val(f: Series, delta: ConvexSubgroup) -> GroupElement:
    """The dotted valuation: v(f) projected to the quotient group."""
    return quotient_map(f.valuation(), delta)


@dataclass
class Coarsening:
    """A field together with a prefix convex subgroup and the residue
    presentation of the coarsened valuation ring."""

    base: FieldInstance
    delta: ConvexSubgroup
    residue_field: FieldInstance
    _kept: tuple

    @property
    def k(self) -> int:
        return self.delta.prefix_len

    def coarse_val(self, f: Series) -> GroupElement:
        return coarse_val(f, self.delta)

    def residue(self, f: Series) -> Series:
        """The image of f in res(K_Delta), for f in the coarsened
        valuation ring.

        Keeps exactly the terms of dotted valuation zero; terms of
        positive dotted valuation die.  A term of negative dotted
        valuation means f is outside the ring: an error.
        """
        k = self.k
        K = self.base
        R = self.residue_field
        terms: Dict[Monomial, Fraction] = {}
        for mono, c in f.terms.items():
            v = K.monomial_value(mono)
            head = v.coords[:k]
            if any(x != 0 for x in head):
                if GroupElement(head) < zero(k):
                    raise VdfError(
                        f"residue undefined: term of dotted valuation {head} < 0"
                    )
                continue
            exps = mono.exponents
            if any(exps[i] != 0 for i in range(k)):
                raise VdfError(
                    "dotted-zero term uses a generator outside the residue block"
                )
            terms[Monomial(exps[k:])] = c
        tau = f.tau
        if tau is INFINITY:
            return Series(R, terms, INFINITY)
        head = tau.coords[:k]
        if GroupElement(head) > zero(k):
            return Series(R, terms, INFINITY)
        if GroupElement(head) == zero(k):
            return Series(R, terms, GroupElement(tau.coords[k:]))
        raise VdfError("residue undefined: truncation has negative dotted part")

    def unit_part_residue_val(self, f: Series) -> GroupElement:
        """Residue valuation of f divided by the monomial realizing its
        dotted valuation: the Delta-part of v(f)."""
        gamma_dot = self.coarse_val(f)
        mono = self.base.monomial_of_value(
            GroupElement(gamma_dot.coords + (Fraction(0),) * (self.base.rank - self.k))
        )
        u = f * self.base.monomial_series(mono.inverse())
        return self.residue(u).valuation()


def coarsen(base: FieldInstance, prefix_len: int) -> Coarsening:
    """Split the field at a prefix convex subgroup.

    Generators with nonzero dotted value are dropped from the residue
    presentation; the kept generators keep their logders, which must
    only involve kept generators (this is checked).
    """
    n = base.rank
    if not 0 <= prefix_len <= n:
        raise VdfError(f"prefix_len {prefix_len} outside [0, {n}]")
    delta = ConvexSubgroup(n, prefix_len)
    k = prefix_len
    kept = tuple(range(k, n))
    gens = []
    for i in kept:
        g = base.generators[i]
        gens.append(Generator(g.name, GroupElement(g.value.coords[k:])))
    residue_field = FieldInstance(n - k, gens, name=f"{base.name}/delta{k}")
    half = Coarsening(base, delta, residue_field, kept)
    for i, new_gen in zip(kept, residue_field.generators):
        ld = base.generators[i].logder
        if ld is None:
            raise VdfError(f"generator {base.generators[i].name} has no logder")
        new_gen.logder = half.residue(ld)
    return half


def lift_val(gamma_dot: GroupElement, delta_part: GroupElement) -> GroupElement:
    """Assemble a full valuation from its quotient part and its
    Delta-part: plain concatenation in prefix coordinates."""
    return gamma_dot.concat(delta_part)


def coarsened_gamma_der(field: FieldInstance, delta: ConvexSubgroup) -> Cut:
    """Gamma(der) of the coarsened field, computed analytically on the
    quotient group.

    Only generator classes p < prefix_len produce monomials that are
    small for the dotted valuation; each contributes the constraint
    proj_(p+1)(gamma) <= proj_(p+1)(psi_floor(p)), exactly as in the
    uncoarsened computation but truncated to the quotient rank.
    """
    k = delta.prefix_len
    cut = Cut.all_of(k)
    for p in range(min(k, field.rank)):
        level = field.psi_floor(p)
        if level is INFINITY:
            continue
        depth = min(p + 1, k)
        cand = Cut.prefix(k, level.coords[:depth], inclusive=True)
        if cut.kind == ALL:
            cut = cand
        else:
            if cand.depth >= cut.depth:
                a, b = cut, cand
            else:
                a, b = cand, cut
            cut = b if b.bound[: a.depth] <= a.bound else a
    return cut
