"""Sparse differential polynomials over a grid field.

A polynomial of order r is a finite map from multi-indices
i = (i_0, ..., i_r) to nonzero coefficient series; the monomial of
index i is Y^(i_0) * (Y')^(i_1) * ... * (Y^(r))^(i_r).  Degree |i| is
the sum of the entries, weight ||i|| is sum of j * i_j.

The three conjugations (additive, multiplicative, compositional) are
all instances of one substitution morphism: each variable Y^(j) is
replaced by an affine expression in the variables, and the polynomial
is re-expanded.  The compositional images use the universal kernel
polynomials F(n, k) over Q, generated by the recursion

    F(n+1, k) = F(n, k)' + X * F(n, k-1),  F(0,0) = 1, F(n,0) = 0 (n>=1),

which express n-th derivatives in terms of the twisted derivation of a
conjugated field.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .errors import IndeterminateValuation, VdfError
from .gridseries import FieldInstance, Monomial, Series
from .valgroup import INFINITY, GroupElement

MultiIndex = Tuple[int, ...]


def mi_degree(i: MultiIndex) -> int:
    return sum(i)


def mi_weight(i: MultiIndex) -> int:
    return sum(j * ij for j, ij in enumerate(i))


def _pad(i: MultiIndex, order: int) -> MultiIndex:
    return tuple(i) + (0,) * (order + 1 - len(i))


class DiffPoly:
    """A differential polynomial with Series coefficients."""

    __slots__ = ("field", "order", "terms")

    def __init__(self, field: FieldInstance, terms: Dict[MultiIndex, Series],
                 order: Optional[int] = None):
        if order is None:
            order = 0
            for i in terms:
                for j in range(len(i) - 1, -1, -1):
                    if i[j]:
                        order = max(order, j)
                        break
        clean: Dict[MultiIndex, Series] = {}
        for i, c in terms.items():
            if c.is_true_zero():
                continue
            clean[_pad(i, order)] = c
        self.field = field
        self.order = order
        self.terms = clean

    @staticmethod
    def from_coeff(field: FieldInstance, coeff: Series,
                   index: MultiIndex = ()) -> "DiffPoly":
        return DiffPoly(field, {tuple(index): coeff})

    @staticmethod
    def variable(field: FieldInstance, j: int = 0) -> "DiffPoly":
        """The polynomial Y^(j)."""
        idx = tuple(0 for _ in range(j)) + (1,)
        return DiffPoly(field, {idx: field.one()}, order=j)

    def is_zero(self) -> bool:
        return not self.terms

    def degree(self) -> int:
        if not self.terms:
            raise VdfError("the zero polynomial has no degree")
        return max(mi_degree(i) for i in self.terms)

    def weight(self) -> int:
        if not self.terms:
            raise VdfError("the zero polynomial has no weight")
        return max(mi_weight(i) for i in self.terms)

    def complexity(self) -> Tuple[int, int, int]:
        """(order, degree in the top derivative, total degree)."""
        r = self.true_order()
        s = max((i[r] if r < len(i) else 0 for i in self.terms), default=0)
        return (r, s, self.degree())

    def true_order(self) -> int:
        r = 0
        for i in self.terms:
            for j in range(len(i) - 1, -1, -1):
                if i[j]:
                    r = max(r, j)
                    break
        return r

    def coefficient(self, i: MultiIndex) -> Series:
        return self.terms.get(_pad(i, self.order), self.field.zero_series())

    def word_coefficient(self, word: Sequence[int]) -> Series:
        """Coefficient in the word decomposition P = sum P_[sigma] Y^[sigma],
        where P_[sigma] is permutation invariant: the multi-index
        coefficient split evenly across the distinct orderings."""
        word = tuple(word)
        d = len(word)
        idx = [0] * (self.order + 1)
        for s in word:
            if s > self.order:
                return self.field.zero_series()
            idx[s] += 1
        c = self.terms.get(tuple(idx))
        if c is None:
            return self.field.zero_series()
        mult = math.factorial(d)
        for m in idx:
            mult //= math.factorial(m)
        return c.scale(Fraction(1, mult))

    # -- ring structure ------------------------------------------------

    def _align(self, other: "DiffPoly") -> int:
        if self.field is not other.field:
            raise VdfError("polynomials over different field instances")
        return max(self.order, other.order)

    def __add__(self, other: "DiffPoly") -> "DiffPoly":
        order = self._align(other)
        terms: Dict[MultiIndex, Series] = {
            _pad(i, order): c for i, c in self.terms.items()
        }
        for i, c in other.terms.items():
            i = _pad(i, order)
            cur = terms.get(i)
            s = c if cur is None else cur + c
            if s.is_true_zero():
                terms.pop(i, None)
            else:
                terms[i] = s
        return DiffPoly(self.field, terms, order)

    def __neg__(self) -> "DiffPoly":
        return DiffPoly(self.field, {i: -c for i, c in self.terms.items()}, self.order)

    def __sub__(self, other: "DiffPoly") -> "DiffPoly":
        return self + (-other)

    def __mul__(self, other: "DiffPoly") -> "DiffPoly":
        order = self._align(other)
        terms: Dict[MultiIndex, Series] = {}
        for i, c in self.terms.items():
            i = _pad(i, order)
            for j, d in other.terms.items():
                j = _pad(j, order)
                k = tuple(a + b for a, b in zip(i, j))
                prod = c * d
                cur = terms.get(k)
                s = prod if cur is None else cur + prod
                if s.is_true_zero():
                    terms.pop(k, None)
                else:
                    terms[k] = s
        return DiffPoly(self.field, terms, order)

    def scale_series(self, a: Series) -> "DiffPoly":
        if a.is_true_zero():
            return DiffPoly(self.field, {}, self.order)
        return DiffPoly(
            self.field, {i: c * a for i, c in self.terms.items()}, self.order
        )

    def scale(self, q) -> "DiffPoly":
        return DiffPoly(
            self.field, {i: c.scale(q) for i, c in self.terms.items()}, self.order
        )

    def map_coefficients(self, fn) -> "DiffPoly":
        return DiffPoly(self.field, {i: fn(c) for i, c in self.terms.items()},
                        self.order)

    def embed_into(self, other: FieldInstance) -> "DiffPoly":
        return DiffPoly(other, {i: c.embed_into(other) for i, c in self.terms.items()},
                        self.order)

    def __eq__(self, other):
        return (
            isinstance(other, DiffPoly)
            and self.field is other.field
            and self._normal_terms() == other._normal_terms()
        )

    def _normal_terms(self):
        r = self.true_order()
        return {tuple(i[: r + 1]): c for i, c in self.terms.items()}

    def __hash__(self):
        raise TypeError("DiffPoly is not hashable")

    def formal_derivative(self) -> "DiffPoly":
        """Total derivative: coefficients are derived and each variable
        Y^(j) steps to Y^(j+1) by the product rule."""
        order = self.order + 1
        out = DiffPoly(self.field, {}, order)
        for i, c in self.terms.items():
            i = _pad(i, order)
            dc = c.derive()
            if not (dc.is_true_zero()):
                out = out + DiffPoly(self.field, {i: dc}, order)
            for j, ij in enumerate(i):
                if ij == 0:
                    continue
                bumped = list(i)
                bumped[j] -= 1
                bumped[j + 1] += 1
                out = out + DiffPoly(
                    self.field, {tuple(bumped): c.scale(ij)}, order
                )
        return out

    def __repr__(self):
        if not self.terms:
            return "DiffPoly(0)"
        parts = []
        for i in sorted(self.terms):
            factors = []
            for j, ij in enumerate(i):
                if ij == 0:
                    continue
                sym = "Y" + "'" * j if j <= 3 else f"Y^({j})"
                factors.append(sym if ij == 1 else f"{sym}^{ij}")
            mono = "*".join(factors) if factors else "1"
            parts.append(f"({self.terms[i]})*{mono}")
        return " + ".join(parts)


# -- gaussian valuation and dominant data -------------------------------------


def gauss_val(P: DiffPoly) -> GroupElement:
    """min over the support of the coefficient valuations.

    Certified against truncation: raises IndeterminateValuation when an
    unknown coefficient tail could undercut the computed minimum.
    """
    if P.is_zero():
        raise VdfError("gaussian valuation of the zero polynomial")
    best = INFINITY
    pending = []
    for c in P.terms.values():
        if c.terms:
            v = c.valuation()
            if best is INFINITY or v < best:
                best = v
        else:
            pending.append(c.tau)
    if best is INFINITY:
        raise IndeterminateValuation("no coefficient has a known term")
    for tau in pending:
        if not best < tau:
            raise IndeterminateValuation(
                f"a coefficient known only modulo {tau} could undercut {best}"
            )
    return best


@dataclass
class DominantData:
    """Valuation-minimal slice of a differential polynomial."""

    ddeg: int
    dwt: int
    D: DiffPoly
    W: DiffPoly
    dominant_monomial: Monomial
    dominant_part: Dict[MultiIndex, Fraction]


def dominant(P: DiffPoly) -> DominantData:
    """Dominant degree/weight, the parts D(P) and W(P), and the residue
    coefficients of the dominant part."""
    v = gauss_val(P)
    argmin = []
    for i, c in P.terms.items():
        if c.terms and c.valuation() == v:
            argmin.append(i)
    dd = max(mi_degree(i) for i in argmin)
    dw = max(mi_weight(i) for i in argmin)
    D = DiffPoly(P.field, {i: P.terms[i] for i in argmin}, P.order)
    W = DiffPoly(
        P.field,
        {i: P.terms[i] for i in argmin if mi_weight(i) == dw},
        P.order,
    )
    d_mono = P.field.monomial_of_value(v)
    part = {}
    for i in argmin:
        part[i] = P.terms[i].coefficient(d_mono)
    return DominantData(dd, dw, D, W, d_mono, part)


def ddeg(P: DiffPoly) -> int:
    return dominant(P).ddeg


def dwt(P: DiffPoly) -> int:
    return dominant(P).dwt


# -- the compositional kernel -------------------------------------------------

_trivial_field: Optional[FieldInstance] = None


def rational_field() -> FieldInstance:
    """The rank-0 field: plain rationals with the zero derivation."""
    global _trivial_field
    if _trivial_field is None:
        _trivial_field = FieldInstance(0, [], name="Q")
    return _trivial_field


_fnk_lock = threading.Lock()
_fnk_memo: Dict[Tuple[int, int], DiffPoly] = {}


def fnk(n: int, k: int) -> DiffPoly:
    """The universal kernel polynomial F(n, k) over Q.

    F(0,0) = 1; F(n,0) = 0 for n >= 1; and
    F(n+1, k) = F(n, k)' + X * F(n, k-1).
    The memo table is an idempotent cache: concurrent recomputation of
    an entry writes identical values.
    """
    if k < 0 or k > n:
        raise VdfError(f"fnk requires 0 <= k <= n, got ({n}, {k})")
    return _fnk(n, k)


def _fnk(n: int, k: int) -> DiffPoly:
    Q = rational_field()
    if k > n or k < 0:
        return DiffPoly(Q, {})
    key = (n, k)
    got = _fnk_memo.get(key)
    if got is not None:
        return got
    if n == 0:
        val = DiffPoly.from_coeff(Q, Q.one())
    elif k == 0:
        val = DiffPoly(Q, {})
    else:
        val = _fnk(n - 1, k).formal_derivative() + DiffPoly.variable(Q, 0) * _fnk(
            n - 1, k - 1
        )
    with _fnk_lock:
        _fnk_memo.setdefault(key, val)
    return _fnk_memo[key]


def fnk_eval(n: int, k: int, phi_derivs: List[Series]) -> Series:
    """F(n, k) evaluated at a series phi, given [phi, phi', phi'', ...]."""
    F = fnk(n, k)
    K = phi_derivs[0].field
    out = K.zero_series()
    for i, c in F.terms.items():
        q = c.coefficient(F.field.unit_monomial())
        term = K.constant(q)
        for j, ij in enumerate(i):
            if ij:
                term = term * phi_derivs[j].power(ij)
        out = out + term
    return out


# -- substitution and the three conjugations ----------------------------------


def substitute(P: DiffPoly, images: List[DiffPoly]) -> DiffPoly:
    """The ring morphism sending Y^(j) to images[j]."""
    if len(images) < P.order + 1:
        raise VdfError("substitution needs an image for every variable")
    order = max([img.order for img in images] + [0])
    out = DiffPoly(P.field, {}, order)
    pow_cache: Dict[Tuple[int, int], DiffPoly] = {}

    def img_pow(j: int, e: int) -> DiffPoly:
        got = pow_cache.get((j, e))
        if got is None:
            got = images[j]
            for _ in range(e - 1):
                got = got * images[j]
            pow_cache[(j, e)] = got
        return got

    one = DiffPoly.from_coeff(P.field, P.field.one())
    for i, c in P.terms.items():
        term = DiffPoly.from_coeff(P.field, c)
        for j, ij in enumerate(i):
            if ij:
                term = term * img_pow(j, ij)
        out = out + term
    return out


def derivatives(a: Series, count: int, twist: Optional[Series] = None) -> List[Series]:
    """[a, da, d^2 a, ...] for the base derivation, or for the twisted
    derivation (1/twist) * d when a twist is supplied."""
    tw_inv = twist.invert() if twist is not None else None
    out = [a]
    for _ in range(count):
        nxt = out[-1].derive()
        if tw_inv is not None:
            nxt = tw_inv * nxt
        out.append(nxt)
    return out


def add_conj(P: DiffPoly, a: Series) -> DiffPoly:
    """P_{+a}(Y) = P(a + Y): substitute Y^(j) -> Y^(j) + a^(j)."""
    K = P.field
    der = derivatives(a, P.order)
    images = [
        DiffPoly(K, {_unit_index(j, P.order): K.one(), _pad((), P.order): der[j]},
                 P.order)
        for j in range(P.order + 1)
    ]
    return substitute(P, images)


def mul_conj(P: DiffPoly, a: Series) -> DiffPoly:
    """P_{x a}(Y) = P(aY): substitute by the Leibniz expansion
    (aY)^(j) = sum_k C(j,k) a^(j-k) Y^(k)."""
    if a.is_true_zero():
        raise VdfError("multiplicative conjugation by zero")
    K = P.field
    der = derivatives(a, P.order)
    images = []
    for j in range(P.order + 1):
        terms = {}
        for k in range(j + 1):
            coeff = der[j - k].scale(math.comb(j, k))
            if not coeff.is_true_zero():
                terms[_unit_index(k, P.order)] = coeff
        images.append(DiffPoly(K, terms, P.order))
    return substitute(P, images)


def comp_conj(P: DiffPoly, phi: Series, twist: Optional[Series] = None) -> DiffPoly:
    """The compositional conjugate P^phi: the rewriting of P to the
    twisted derivation, substituting Y^(n) -> sum_k F(n,k)(phi) Y^<k>.

    When P is itself a conjugate (its variables mean iterates of the
    derivation (1/twist) * d), the kernel coefficients must be evaluated
    with that derivation: pass the original conjugator as `twist`.  The
    composition law (P^a)^b = P^(ab) holds in that reading.
    """
    if phi.is_true_zero():
        raise VdfError("compositional conjugation by zero")
    K = P.field
    der = derivatives(phi, max(P.order - 1, 0), twist)
    images = [DiffPoly.variable(K, 0)]
    for n in range(1, P.order + 1):
        terms = {}
        for k in range(1, n + 1):
            coeff = fnk_eval(n, k, der)
            if not coeff.is_true_zero():
                terms[_unit_index(k, P.order)] = coeff
        images.append(DiffPoly(K, terms, P.order))
    return substitute(P, images)


def _unit_index(j: int, order: int) -> MultiIndex:
    idx = [0] * (order + 1)
    idx[j] = 1
    return tuple(idx)


# -- evaluation ----------------------------------------------------------------


def evaluate(P: DiffPoly, f: Series) -> Series:
    """P(f): substitute f, f', ..., f^(r)."""
    K = P.field
    der = derivatives(f, P.order)
    out = K.zero_series()
    for i, c in P.terms.items():
        term = c
        for j, ij in enumerate(i):
            if ij:
                term = term * der[j].power(ij)
        out = out + term
    return out


def evaluate_conjugated(Q: DiffPoly, f: Series, phi: Series) -> Series:
    """Evaluate a conjugated polynomial: the variables Y^<k> stand for
    iterates of the twisted derivation phi^-1 * d."""
    K = Q.field
    phi_inv = phi.invert()
    der = [f]
    for _ in range(Q.order):
        der.append(phi_inv * der[-1].derive())
    out = K.zero_series()
    for i, c in Q.terms.items():
        term = c
        for j, ij in enumerate(i):
            if ij:
                term = term * der[j].power(ij)
        out = out + term
    return out
