"""Digit dynamics: digit sets, the backward digit map on Z[alpha], address
enumeration, the base-1/alpha surrogate expansion used for rendering, and the
shift-radix-system side of the correspondence.

Digit selection never touches any completion: the digit matching x is the one
whose canonical-representative constant term agrees with x modulo a_0, which
is well defined because representatives differ by integer multiples of the
(primitive) minimal polynomial.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

from .exactnum import (
    FieldVector,
    LaurentElem,
    PolynomialSpec,
    reduce_bottom,
    reduce_top,
    to_field_vector,
)
from .lattice import LatticeHNF, lambda_generators, lattice_membership


class DynamicsError(Exception):
    pass


class DuplicateDigit(DynamicsError):
    pass


class DigitNotInZAlpha(DynamicsError):
    pass


class NoDigitMatches(DynamicsError):
    pass


class MultipleDigitsMatch(DynamicsError):
    pass


class DepthTooLarge(DynamicsError):
    pass


class NotInShiftedRing(DynamicsError):
    pass


# ---------------------------------------------------------------------------
# Digit sets

@dataclass(frozen=True)
class DigitSet:
    """Validated digits with their canonical representatives and flags.

    ``m`` is the smallest shift with every digit inside alpha^m Z[1/alpha].
    ``is_standard``: exactly |a_0| digits in pairwise distinct classes modulo
    alpha * Z[alpha].  ``has_residue_system``: the shifted digits cover all
    |a_n| classes modulo (1/alpha) Z[1/alpha], the hypothesis for non-empty
    slice tiles on the whole translation lattice.
    """

    digits: tuple          # LaurentElem, as given (possibly translated)
    reps: tuple            # canonical nonnegative-exponent representatives
    m: int
    is_standard: bool
    has_residue_system: bool
    residues: tuple        # constant-term residues mod |a_0|, aligned with digits
    translation: LaurentElem | None = None  # applied shift when 0 was missing

    def __len__(self):
        return len(self.digits)

    def digit_by_residue(self, r: int) -> int:
        table = {}
        for i, res in enumerate(self.residues):
            table.setdefault(res, []).append(i)
        hits = table.get(r, [])
        if not hits:
            raise NoDigitMatches(f"no digit in residue class {r}")
        if len(hits) > 1:
            raise MultipleDigitsMatch(f"digits {hits} share residue class {r}")
        return hits[0]


def minimal_shift(x: LaurentElem, spec: PolynomialSpec, lo: int = -64, hi: int = 64) -> int:
    """Smallest k with x inside alpha^k Z[1/alpha] (membership is monotone in k)."""
    if x.is_zero():
        return 0
    for k in range(lo, hi + 1):
        if reduce_top(x.shift(-k), spec).member:
            return k
    raise NotInShiftedRing(f"{x!r} not in alpha^k Z[1/alpha] for k <= {hi}")


def validate_digits(spec: PolynomialSpec, raw, m_override: int | None = None) -> DigitSet:
    """Validate a list of Laurent digits into a :class:`DigitSet`.

    Digits must lie in Z[alpha] and be pairwise distinct as field elements.
    If 0 is not among them, all digits are translated by the first one and the
    translation is recorded.
    """
    digits = list(raw)
    reps = []
    for d in digits:
        red = reduce_bottom(d, spec)
        if not red.member:
            raise DigitNotInZAlpha(f"digit {d!r} is not in Z[alpha]")
        reps.append(red.rep)
    fvs = [to_field_vector(r, spec) for r in reps]
    for i in range(len(fvs)):
        for j in range(i + 1, len(fvs)):
            if fvs[i] == fvs[j]:
                raise DuplicateDigit(f"digits {i} and {j} coincide as field elements")

    translation = None
    if not any(fv.is_zero() for fv in fvs):
        translation = digits[0]
        digits = [d - translation for d in digits]
        reps = [reduce_bottom(d, spec).rep for d in digits]

    m = 0
    shifts = [minimal_shift(d, spec) for d in digits if not d.is_zero()]
    if shifts:
        m = max(shifts)
    if m_override is not None:
        if m_override < m:
            raise NotInShiftedRing(
                f"m override {m_override} too small: digits need shift {m}"
            )
        m = m_override

    a0 = spec.abs_a0
    residues = tuple(r.constant_coeff() % a0 for r in reps)
    is_standard = len(digits) == a0 and len(set(residues)) == a0

    an = spec.abs_an
    beta_res = set()
    for d in digits:
        rep = reduce_top(d.shift(-m), spec).rep
        beta_res.add(rep.constant_coeff() % an)
    has_residue_system = beta_res >= set(range(an))

    return DigitSet(
        digits=tuple(digits),
        reps=tuple(reps),
        m=m,
        is_standard=is_standard,
        has_residue_system=has_residue_system,
        residues=residues,
        translation=translation,
    )


def digit_set_from_ints(spec: PolynomialSpec, values) -> DigitSet:
    return validate_digits(spec, [LaurentElem.integer(v) for v in values])


# ---------------------------------------------------------------------------
# The backward digit map

def residue_of(x: LaurentElem, spec: PolynomialSpec) -> int:
    """Class of x modulo alpha Z[alpha], as a constant residue in [0, |a_0|)."""
    red = reduce_bottom(x, spec)
    if not red.member:
        raise DigitNotInZAlpha(f"{x!r} not in Z[alpha]")
    return red.rep.constant_coeff() % spec.abs_a0


def T_alpha(x: LaurentElem, spec: PolynomialSpec, D: DigitSet):
    """One backward step: pick the unique digit d congruent to x and return
    ((x - d)/alpha, digit index)."""
    red = reduce_bottom(x, spec)
    if not red.member:
        raise DigitNotInZAlpha(f"{x!r} not in Z[alpha]")
    idx = D.digit_by_residue(red.rep.constant_coeff() % spec.abs_a0)
    shifted = (red.rep - D.digits[idx]).shift(-1)
    out = reduce_bottom(shifted, spec)
    assert out.member, "digit selection must make the quotient integral"
    return out.rep, idx


def preimages_in_lambda(x: LaurentElem, spec: PolynomialSpec, D: DigitSet, L: LatticeHNF):
    """All alpha*x + d lying in L, in digit order, as (canonical rep, digit index)."""
    out = []
    for i, d in enumerate(D.digits):
        cand = x.shift(1) + d
        rep = reduce_bottom(cand, spec).rep
        if lattice_membership(to_field_vector(rep, spec), L) is not None:
            out.append((rep, i))
    return out


# ---------------------------------------------------------------------------
# Addresses

@dataclass(frozen=True)
class Address:
    word: tuple  # digit indices, one per level

    def __len__(self):
        return len(self.word)

    def label(self) -> str:
        return ".".join(str(i) for i in self.word)


def addresses(D: DigitSet, k: int, limit: int = 2_000_000):
    """Iterator over all |D|^k addresses in lexicographic order."""
    if k < 0:
        raise ValueError("depth must be nonnegative")
    if len(D) ** k > limit:
        raise DepthTooLarge(f"|D|^{k} exceeds limit {limit}")
    for word in itertools.product(range(len(D)), repeat=k):
        yield Address(word)


def address_value(addr: Address, D: DigitSet) -> LaurentElem:
    """The element sum_j alpha^j d_{w_j} encoded by an address."""
    out = LaurentElem.zero()
    for j, i in enumerate(addr.word):
        out = out + D.digits[i].shift(j)
    return out


# ---------------------------------------------------------------------------
# Surrogate expansion (base 1/alpha digits, rendered in base |a_n|)

@dataclass(frozen=True)
class SurrogateExpansion:
    """Greedy digit expansion of x in powers of 1/alpha.

    ``x = sum_i digits[i] * alpha^(start_exponent - i)`` holds exactly on every
    prefix modulo the corresponding shifted subring; ``value`` renders the
    stream in base |a_n|: sum_i digits[i] * |a_n|^(start_exponent - i).
    """

    start_exponent: int
    digits: tuple
    base: int
    value: float


def surrogate(x: LaurentElem, spec: PolynomialSpec, J: int, k0: int | None = None) -> SurrogateExpansion:
    """Expand x greedily into J base-1/alpha digits drawn from {0, ..., |a_n|-1}."""
    an = spec.abs_an
    if x.is_zero():
        return SurrogateExpansion(0, (0,) * J, an, 0.0)
    if k0 is None:
        k0 = minimal_shift(x, spec)
    red = reduce_top(x.shift(-k0), spec)
    if not red.member:
        raise NotInShiftedRing(f"{x!r} is not in alpha^{k0} Z[1/alpha]")
    y = red.rep
    digs = []
    for _ in range(J):
        if an == 1:
            b = 0
        else:
            b = y.constant_coeff() % an
        digs.append(b)
        nxt = reduce_top((y - LaurentElem.integer(b)).shift(1), spec)
        assert nxt.member, "residue subtraction must stay in the inverse ring"
        y = nxt.rep
    value = 0.0
    if an > 1:
        for i, b in enumerate(digs):
            if b:
                value += b * float(an) ** (k0 - i)
    return SurrogateExpansion(k0, tuple(digs), an, value)


def surrogate_prefix_exact(x: LaurentElem, exp: SurrogateExpansion, spec: PolynomialSpec, J: int) -> bool:
    """Check the exact prefix invariant: x minus the first J terms lies in
    alpha^(k0-J) Z[1/alpha]."""
    s = LaurentElem.zero()
    for i in range(J):
        b = exp.digits[i]
        if b:
            s = s + LaurentElem.alpha_power(exp.start_exponent - i, b)
    return reduce_top((x - s).shift(J - exp.start_exponent), spec).member


# ---------------------------------------------------------------------------
# Shift radix system side

@dataclass(frozen=True)
class SRSParam:
    """Parameter vector (a_n/a_0, ..., a_1/a_0) and its companion matrix."""

    r: tuple  # Fractions
    M: tuple  # companion matrix rows (Fractions)

    @property
    def n(self) -> int:
        return len(self.r)


def srs_param(spec: PolynomialSpec) -> SRSParam:
    n = spec.degree
    a = spec.coeffs
    r = tuple(Fraction(a[n - i], a[0]) for i in range(n))
    rows = []
    for i in range(n - 1):
        rows.append(tuple(Fraction(1) if j == i + 1 else Fraction(0) for j in range(n)))
    rows.append(tuple(-c for c in r))
    return SRSParam(r, tuple(rows))


def srs_tau(p: SRSParam, z) -> tuple:
    """(z_1, ..., z_n) -> (z_2, ..., z_n, -floor(r.z))."""
    rz = sum(ri * zi for ri, zi in zip(p.r, z))
    return tuple(z[1:]) + (-math.floor(rz),)


def srs_preimages(p: SRSParam, z) -> list[tuple]:
    """All z' = (t, z_1, ..., z_{n-1}) with tau(z') = z, via the exact integer
    interval -z_n <= r.z' < -z_n + 1."""
    s = sum(ri * zi for ri, zi in zip(p.r[1:], z[:-1]))
    r1 = p.r[0]
    lo = (-z[-1] - s) / r1
    hi = (-z[-1] + 1 - s) / r1
    if r1 > 0:
        t_min, t_max = math.ceil(lo), math.ceil(hi) - 1
    else:
        t_min, t_max = math.floor(hi) + 1, math.floor(lo)
    return [(t,) + tuple(z[:-1]) for t in range(t_min, t_max + 1)]


def iota(spec: PolynomialSpec, z) -> FieldVector:
    """sgn(a_0) * sum z_i w_i over the ordered closed-form generators; a
    bijection between integer vectors and the level-0 translation module."""
    sgn = 1 if spec.a0 > 0 else -1
    gens = lambda_generators(spec)
    out = FieldVector.zero(spec.degree)
    for zi, g in zip(z, gens):
        if zi:
            out = out + to_field_vector(g, spec).scale(sgn * zi)
    return out


def iota_laurent(spec: PolynomialSpec, z) -> LaurentElem:
    sgn = 1 if spec.a0 > 0 else -1
    gens = lambda_generators(spec)
    out = LaurentElem.zero()
    for zi, g in zip(z, gens):
        if zi:
            out = out + g.scale(sgn * zi)
    return out
