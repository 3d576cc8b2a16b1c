"""Truncated grid-based generalized power series over exact rationals.

A :class:`FieldInstance` presents a valued differential field by a
finite list of monomial generators: each generator carries a value
vector in the lexicographic group Q^n and a logarithmic derivative
(a finite series over the same generators).  Generator value vectors
are square triangular -- generator i has its first nonzero coordinate
at position i -- so the exponent-to-value map is an exact bijection
between Q^n exponent tuples and Q^n values.

A :class:`Series` is a finite sum of monomial terms with nonzero
rational coefficients plus a truncation level tau: the series is exact
on all values below tau and unknown at or above it.  tau = +infinity
means the series is known completely.  Every operation propagates the
tightest truncation it can certify.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, Optional, Sequence, Tuple, Union

from .errors import (
    ConfigError,
    IndeterminateValuation,
    RankMismatch,
    TruncationUnreachable,
    VdfError,
)
from .valgroup import (
    INFINITY,
    GroupElement,
    group_min,
    unit,
    zero,
)

Rat = Union[int, str, Fraction]


def _frac(x: Rat) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


class Monomial:
    """A product of rational powers of the field's generators."""

    __slots__ = ("exponents",)

    def __init__(self, exponents: Iterable[Rat]):
        object.__setattr__(
            self, "exponents", tuple(_frac(e) for e in exponents)
        )

    def __setattr__(self, name, value):
        raise AttributeError("Monomial is immutable")

    def __mul__(self, other: "Monomial") -> "Monomial":
        return Monomial(a + b for a, b in zip(self.exponents, other.exponents))

    def inverse(self) -> "Monomial":
        return Monomial(-a for a in self.exponents)

    def __pow__(self, q: Rat) -> "Monomial":
        q = _frac(q)
        return Monomial(q * a for a in self.exponents)

    def is_one(self) -> bool:
        return all(e == 0 for e in self.exponents)

    def __eq__(self, other):
        return isinstance(other, Monomial) and self.exponents == other.exponents

    def __hash__(self):
        return hash(self.exponents)

    def __repr__(self):
        return "Monomial" + str(tuple(str(e) for e in self.exponents))


@dataclass
class Generator:
    """A named monomial generator: value vector plus logarithmic derivative.

    The logder is attached in a second phase because it is itself a
    series over the field being built.
    """

    name: str
    value: GroupElement
    logder: Optional["Series"] = None


class FieldInstance:
    """A grid presentation of a valued differential field."""

    def __init__(self, rank: int, generators: Sequence[Generator], name: str = ""):
        if len(generators) != rank:
            raise ConfigError(
                f"need exactly rank={rank} generators, got {len(generators)}"
            )
        names = [g.name for g in generators]
        if len(set(names)) != len(names):
            raise ConfigError("generator names must be distinct")
        for i, g in enumerate(generators):
            if g.value.rank != rank:
                raise RankMismatch(
                    f"generator {g.name}: value rank {g.value.rank} != {rank}"
                )
            if any(c != 0 for c in g.value.coords[:i]) or g.value.coords[i] == 0:
                raise ConfigError(
                    f"generator {g.name}: value vectors must be square triangular"
                )
        self.rank = rank
        self.generators = list(generators)
        self.name = name
        self._index = {g.name: i for i, g in enumerate(generators)}
        self._shift: Optional[GroupElement] = None
        self._value_memo: Dict[tuple, GroupElement] = {}

    # -- construction of elements ------------------------------------

    def zero_series(self) -> "Series":
        return Series(self, {}, INFINITY)

    def constant(self, c: Rat) -> "Series":
        c = _frac(c)
        if c == 0:
            return self.zero_series()
        return Series(self, {self.unit_monomial(): c}, INFINITY)

    def one(self) -> "Series":
        return self.constant(1)

    def unit_monomial(self) -> Monomial:
        return Monomial([0] * self.rank)

    def gen(self, name: str, power: Rat = 1) -> "Series":
        if name not in self._index:
            raise ConfigError(f"unknown generator {name!r} in field {self.name!r}")
        exps = [Fraction(0)] * self.rank
        exps[self._index[name]] = _frac(power)
        return self.monomial_series(Monomial(exps))

    def monomial_series(self, mono: Monomial, coeff: Rat = 1) -> "Series":
        coeff = _frac(coeff)
        if coeff == 0:
            return self.zero_series()
        return Series(self, {mono: coeff}, INFINITY)

    def monomial_from_dict(self, powers: Dict[str, Rat]) -> Monomial:
        exps = [Fraction(0)] * self.rank
        for name, q in powers.items():
            if name not in self._index:
                raise ConfigError(f"unknown generator {name!r}")
            exps[self._index[name]] = _frac(q)
        return Monomial(exps)

    # -- values and exponents ------------------------------------------

    def monomial_value(self, mono: Monomial) -> GroupElement:
        got = self._value_memo.get(mono.exponents)
        if got is None:
            v = zero(self.rank)
            for q, g in zip(mono.exponents, self.generators):
                if q != 0:
                    v = v + g.value.scale(q)
            got = self._value_memo[mono.exponents] = v
        return got

    def exponents_of_value(self, gamma: GroupElement) -> Tuple[Fraction, ...]:
        """Invert the triangular exponent-to-value map."""
        if gamma.rank != self.rank:
            raise RankMismatch(f"value rank {gamma.rank} != field rank {self.rank}")
        exps = [Fraction(0)] * self.rank
        residual = list(gamma.coords)
        for i, g in enumerate(self.generators):
            q = Fraction(residual[i], 1) / g.value.coords[i]
            exps[i] = q
            if q != 0:
                for j in range(i, self.rank):
                    residual[j] -= q * g.value.coords[j]
        return tuple(exps)

    def monomial_of_value(self, gamma: GroupElement) -> Monomial:
        return Monomial(self.exponents_of_value(gamma))

    # -- derivation data -----------------------------------------------

    def monomial_logder(self, mono: Monomial) -> "Series":
        """Logarithmic derivative of a monomial: sum of q_i * g_i-logder."""
        out = self.zero_series()
        for q, g in zip(mono.exponents, self.generators):
            if q == 0:
                continue
            if g.logder is None:
                raise VdfError(f"generator {g.name} has no declared logder")
            out = out + g.logder.scale(q)
        return out

    @property
    def derivation_shift(self) -> GroupElement:
        """A certified s with v(f') >= v(f) + s for all f.

        Computed as the minimum of the generator logder valuations;
        validated by sampling in the test suite.
        """
        if self._shift is None:
            vals = []
            for g in self.generators:
                if g.logder is None:
                    raise VdfError(f"generator {g.name} has no declared logder")
                if g.logder.terms:
                    vals.append(g.logder.valuation())
            m = group_min(vals)
            self._shift = zero(self.rank) if m is INFINITY else m
        return self._shift

    def psi_level(self, i: int):
        """v(g_i-logder), or +infinity for a flat generator."""
        ld = self.generators[i].logder
        if ld is None:
            raise VdfError(f"generator {self.generators[i].name} has no logder")
        return ld.valuation() if ld.terms else INFINITY

    def psi_floor(self, p: int):
        """min over i >= p of psi_level(i): the worst-case logder value
        of a monomial whose first nonzero exponent sits at position p."""
        return group_min(self.psi_level(i) for i in range(p, self.rank))

    # -- extensions ------------------------------------------------------

    def with_flat_generator(self, name: str = "_eps", sign: int = 1) -> "FieldInstance":
        """Adjoin a generator of infinitesimal value (+/- the new least
        significant coordinate) whose derivative is zero.  Used to
        realize symbolic one-sided limits as honest field elements."""
        n = self.rank + 1
        gens = [
            Generator(g.name, g.value.pad(n), None) for g in self.generators
        ]
        gens.append(Generator(name, unit(n, n - 1, sign), None))
        ext = FieldInstance(n, gens, name=f"{self.name}+{name}")
        for old, new in zip(self.generators, ext.generators):
            new.logder = old.logder.embed_into(ext)
        ext.generators[-1].logder = ext.zero_series()
        return ext

    def __repr__(self):
        return f"FieldInstance({self.name or 'anonymous'}, rank {self.rank})"


class Series:
    """A truncated grid series: finite term map plus truncation tau."""

    __slots__ = ("field", "terms", "tau", "_val")

    def __init__(self, field: FieldInstance, terms: Dict[Monomial, Fraction], tau):
        clean = {}
        for mono, c in terms.items():
            if c == 0:
                continue
            if tau is not INFINITY and not field.monomial_value(mono) < tau:
                continue
            clean[mono] = c
        self.field = field
        self.terms = clean
        self.tau = tau
        self._val = None

    # -- inspection -----------------------------------------------------

    def is_true_zero(self) -> bool:
        return not self.terms and self.tau is INFINITY

    def valuation(self):
        """min value over the support; +infinity for the true zero."""
        if self.terms:
            if self._val is None:
                self._val = group_min(
                    self.field.monomial_value(m) for m in self.terms
                )
            return self._val
        if self.tau is INFINITY:
            return INFINITY
        raise IndeterminateValuation(
            f"series is 0 modulo valuation >= {self.tau}; true valuation unknown"
        )

    def val_or_tau(self):
        """Valuation when the support is nonempty, else the truncation
        (a certified lower bound for the valuation)."""
        return self.valuation() if self.terms else self.tau

    def dominant_term(self) -> Tuple[Fraction, Monomial]:
        v = self.valuation()
        if v is INFINITY:
            raise VdfError("the zero series has no dominant term")
        for mono, c in self.terms.items():
            if self.field.monomial_value(mono) == v:
                return c, mono
        raise AssertionError("unreachable: dominant term must exist")

    def dominant_monomial(self) -> Monomial:
        return self.dominant_term()[1]

    def coefficient(self, mono: Monomial) -> Fraction:
        return self.terms.get(mono, Fraction(0))

    def sorted_terms(self):
        return sorted(
            self.terms.items(), key=lambda kv: self.field.monomial_value(kv[0]).coords
        )

    # -- ring operations ------------------------------------------------

    def _check_field(self, other: "Series"):
        if self.field is not other.field:
            raise VdfError("series belong to different field instances")

    def __add__(self, other: "Series") -> "Series":
        self._check_field(other)
        tau = _tau_min(self.tau, other.tau)
        terms = dict(self.terms)
        for mono, c in other.terms.items():
            s = terms.get(mono, Fraction(0)) + c
            if s == 0:
                terms.pop(mono, None)
            else:
                terms[mono] = s
        return Series(self.field, terms, tau)

    def __neg__(self) -> "Series":
        return Series(self.field, {m: -c for m, c in self.terms.items()}, self.tau)

    def __sub__(self, other: "Series") -> "Series":
        return self + (-other)

    def scale(self, q: Rat) -> "Series":
        q = _frac(q)
        if q == 0:
            return self.field.zero_series()
        return Series(self.field, {m: q * c for m, c in self.terms.items()}, self.tau)

    def __mul__(self, other: "Series") -> "Series":
        self._check_field(other)
        if self.is_true_zero() or other.is_true_zero():
            return self.field.zero_series()
        tau = _tau_min(
            _tau_add(self.tau, other.val_or_tau()),
            _tau_add(other.tau, self.val_or_tau()),
        )
        terms: Dict[Monomial, Fraction] = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = m1 * m2
                s = terms.get(m, Fraction(0)) + c1 * c2
                if s == 0:
                    terms.pop(m, None)
                else:
                    terms[m] = s
        return Series(self.field, terms, tau)

    def power(self, n: int) -> "Series":
        if n < 0:
            raise VdfError("negative powers go through invert()")
        out = self.field.one()
        base = self
        while n:
            if n & 1:
                out = out * base
            n >>= 1
            if n:
                base = base * base
        return out

    def truncated(self, tau) -> "Series":
        return Series(self.field, self.terms, _tau_min(self.tau, tau))

    # -- differential structure ------------------------------------------

    def derive(self) -> "Series":
        """Termwise derivative; the unknown tail contributes at
        tau + derivation_shift."""
        K = self.field
        out = K.zero_series()
        for mono, c in self.terms.items():
            out = out + K.monomial_series(mono, c) * K.monomial_logder(mono)
        if self.tau is not INFINITY:
            out = out.truncated(self.tau + K.derivation_shift)
        return out

    def invert(self, tau=None) -> "Series":
        """A series g with v(self * g - 1) >= tau.

        Single-term input inverts exactly.  Otherwise the unit part is
        expanded geometrically, which requires a reachable finite tau:
        either passed in, or inferred from the input's own truncation.
        """
        if not self.terms:
            raise VdfError("cannot invert a series with no known terms")
        v = self.valuation()
        c, mono = self.dominant_term()
        lead_inv = self.field.monomial_series(mono.inverse(), Fraction(1, 1) / c)
        if len(self.terms) == 1:
            if self.tau is INFINITY and tau is None:
                return lead_inv
            err = _tau_min(
                tau if tau is not None else INFINITY,
                _tau_add(self.tau, v.scale(-1)) if self.tau is not INFINITY else INFINITY,
            )
            return lead_inv.truncated(_tau_add(err, v.scale(-1)))
        if tau is None:
            if self.tau is INFINITY:
                raise VdfError(
                    "inverting an exact multi-term series requires a target tau"
                )
            tau = self.tau + v.scale(-1)
        rel = tau + v  # truncation for the unit-part inverse, relative to 1
        u = (self * lead_inv - self.field.one()).truncated(rel)
        if u.terms and not _reachable(u.valuation(), rel):
            raise TruncationUnreachable(
                f"geometric expansion with step {u.valuation()} cannot reach {rel}"
            )
        acc = self.field.one()
        term = self.field.one()
        while True:
            term = (term * (-u)).truncated(rel)
            if not term.terms:
                break
            acc = acc + term
        g = (lead_inv * acc).truncated(_tau_add(tau, v.scale(-1)))
        return g

    def logder(self, tau=None) -> "Series":
        """f'/f to the available (or requested) truncation."""
        d = self.derive()
        if len(self.terms) == 1 and self.tau is INFINITY:
            return d * self.invert()
        if d.is_true_zero():
            return self.field.zero_series()
        if tau is None:
            if self.tau is INFINITY:
                raise VdfError(
                    "logder of an exact multi-term series requires a target tau"
                )
            tau = self.tau + self.field.derivation_shift - self.valuation()
        dv = d.val_or_tau()
        target = tau + self.valuation() - dv if dv is not INFINITY else tau
        g = self.invert(target)
        return (d * g).truncated(tau)

    # -- embeddings -------------------------------------------------------

    def embed_into(self, other: FieldInstance) -> "Series":
        """Map into a field that contains same-named generators."""
        K = self.field
        if other is K:
            return self
        reindex = []
        for g in K.generators:
            if g.name not in other._index:
                reindex.append(None)
            else:
                reindex.append(other._index[g.name])
        terms: Dict[Monomial, Fraction] = {}
        for mono, c in self.terms.items():
            exps = [Fraction(0)] * other.rank
            for q, target in zip(mono.exponents, reindex):
                if q == 0:
                    continue
                if target is None:
                    raise VdfError(
                        "embedding uses a generator missing from the target field"
                    )
                exps[target] = q
            terms[Monomial(exps)] = c
        tau = self.tau
        if tau is not INFINITY:
            tau = other.monomial_value(
                _embed_monomial(K, other, reindex, tau)
            )
        return Series(other, terms, tau)

    # -- comparisons and formatting ----------------------------------------

    def __eq__(self, other):
        return (
            isinstance(other, Series)
            and self.field is other.field
            and self.terms == other.terms
            and self.tau == other.tau
        )

    def __hash__(self):
        return hash((id(self.field), frozenset(self.terms.items()), self.tau))

    def same_terms(self, other: "Series") -> bool:
        """Term-by-term equality ignoring the truncation levels."""
        self._check_field(other)
        return self.terms == other.terms

    def __repr__(self):
        if not self.terms:
            body = "0"
        else:
            parts = []
            for mono, c in self.sorted_terms():
                factors = []
                for q, g in zip(mono.exponents, self.field.generators):
                    if q == 0:
                        continue
                    factors.append(g.name if q == 1 else f"{g.name}^{q}")
                if not factors:
                    parts.append(str(c))
                elif c == 1:
                    parts.append("*".join(factors))
                elif c == -1:
                    parts.append("-" + "*".join(factors))
                else:
                    parts.append(f"{c}*" + "*".join(factors))
            body = " + ".join(parts).replace("+ -", "- ")
        if self.tau is INFINITY:
            return body
        return f"{body} + O({self.tau})"


def _embed_monomial(src: FieldInstance, dst: FieldInstance, reindex, gamma):
    """Translate a value from src's group to dst's via exponents."""
    exps_src = src.exponents_of_value(gamma)
    exps = [Fraction(0)] * dst.rank
    for q, target in zip(exps_src, reindex):
        if q == 0:
            continue
        if target is None:
            raise VdfError("truncation value not representable in target field")
        exps[target] = q
    return Monomial(exps)


def _tau_min(a, b):
    if a is INFINITY:
        return b
    if b is INFINITY:
        return a
    return a if a < b else b


def _tau_add(a, b):
    if a is INFINITY or b is INFINITY:
        return INFINITY
    return a + b


def _reachable(step: GroupElement, target: GroupElement) -> bool:
    """Whether j*step >= target for some natural j (step > 0)."""
    t = target.first_nonzero()
    if t == target.rank or target.coords[t] < 0:
        return True
    return step.first_nonzero() <= t


# -- built-in field instances ------------------------------------------------


@functools.lru_cache(maxsize=None)
def laurent_ddt() -> FieldInstance:
    """Rational Laurent-series field with derivation d/dt: one generator
    t of value (1), logder t^-1."""
    K = FieldInstance(1, [Generator("t", GroupElement([1]))], name="laurent_ddt")
    K.generators[0].logder = K.gen("t", -1)
    return K


@functools.lru_cache(maxsize=None)
def laurent_tddt_coarse() -> FieldInstance:
    """Laurent series over a rank-1 coefficient field, derivation t*d/dt.

    Generator t has value (1,0) and logder 1; the coefficient generator
    s has value (0,1) and derivative zero.  The value group is Q^2 with
    the order coordinate first.
    """
    K = FieldInstance(
        2,
        [
            Generator("t", GroupElement([1, 0])),
            Generator("s", GroupElement([0, 1])),
        ],
        name="laurent_tddt_coarse",
    )
    K.generators[0].logder = K.one()
    K.generators[1].logder = K.zero_series()
    return K


@functools.lru_cache(maxsize=None)
def transseries_fragment(n_depth: int) -> FieldInstance:
    """The depth-N fragment of the exp-log monomial field: generators
    e_x (value -e_0, logder 1) and l0..lN with v(l_k) = -e_(k+1) and
    l_k-logder = (l0*...*l_k)^-1."""
    if n_depth < 0:
        raise ConfigError("depth must be >= 0")
    rank = n_depth + 2
    gens = [Generator("e_x", unit(rank, 0, -1))]
    for k in range(n_depth + 1):
        gens.append(Generator(f"l{k}", unit(rank, k + 1, -1)))
    K = FieldInstance(rank, gens, name=f"transseries_fragment({n_depth})")
    K.generators[0].logder = K.one()
    for k in range(n_depth + 1):
        exps = {f"l{j}": -1 for j in range(k + 1)}
        K.generators[k + 1].logder = K.monomial_series(K.monomial_from_dict(exps))
    return K


@functools.lru_cache(maxsize=None)
def log_fragment(n_depth: int) -> FieldInstance:
    """The flat restriction of the depth-N fragment: l0..lN only."""
    if n_depth < 0:
        raise ConfigError("depth must be >= 0")
    rank = n_depth + 1
    gens = [Generator(f"l{k}", unit(rank, k, -1)) for k in range(n_depth + 1)]
    K = FieldInstance(rank, gens, name=f"log_fragment({n_depth})")
    for k in range(n_depth + 1):
        exps = {f"l{j}": -1 for j in range(k + 1)}
        K.generators[k].logder = K.monomial_series(K.monomial_from_dict(exps))
    return K


BUILTIN_FIELDS = {
    "laurent_ddt": laurent_ddt,
    "laurent_tddt_coarse": laurent_tddt_coarse,
}
