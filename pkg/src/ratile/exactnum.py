"""Exact arithmetic in the number field generated by an expanding algebraic number.

The ground object is a primitive integer polynomial A(X) = a_n X^n + ... + a_0
whose root alpha has every conjugate outside the unit circle.  Elements of the
ring generated by alpha and 1/alpha are carried as integer Laurent polynomials
in alpha (:class:`LaurentElem`); canonical field coordinates in the power basis
1, alpha, ..., alpha^(n-1) are exact rationals (:class:`FieldVector`).

Membership in the subrings Z[alpha] and Z[1/alpha] is decided by divisibility
elimination driven by the constant resp. leading coefficient of A; this is
exact because A is primitive, so the kernel of evaluation at alpha on integer
Laurent polynomials is generated by A itself.
"""

from __future__ import annotations

import cmath
import math
import re
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce

import numpy as np


class ExactNumError(Exception):
    """Base class for validation failures in this module."""


class DegreeZero(ExactNumError):
    pass


class NotPrimitive(ExactNumError):
    pass


class NotExpanding(ExactNumError):
    pass


class TriviallyReducible(ExactNumError):
    pass


class DegenerateInput(ExactNumError):
    pass


class NoConvergence(ExactNumError):
    pass


class LaurentSyntaxError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Laurent elements

class LaurentElem:
    """Integer Laurent polynomial in alpha: a finite map exponent -> coefficient.

    This is a non-canonical carrier: structural equality (``==``) compares
    term maps, while equality as field elements goes through
    :func:`to_field_vector`.
    """

    __slots__ = ("terms",)

    def __init__(self, terms=None):
        clean = {}
        if terms:
            for e, c in dict(terms).items():
                if c:
                    clean[int(e)] = int(c)
        object.__setattr__(self, "terms", clean)

    def __setattr__(self, name, value):
        raise AttributeError("LaurentElem is immutable")

    def __reduce__(self):
        return (LaurentElem, (self.terms,))

    # -- constructors -------------------------------------------------------

    @staticmethod
    def zero() -> "LaurentElem":
        return LaurentElem()

    @staticmethod
    def integer(c: int) -> "LaurentElem":
        return LaurentElem({0: c})

    @staticmethod
    def alpha_power(e: int, c: int = 1) -> "LaurentElem":
        return LaurentElem({e: c})

    # -- structure ----------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def min_exponent(self) -> int:
        if not self.terms:
            raise ValueError("zero element has no exponents")
        return min(self.terms)

    def max_exponent(self) -> int:
        if not self.terms:
            raise ValueError("zero element has no exponents")
        return max(self.terms)

    def constant_coeff(self) -> int:
        return self.terms.get(0, 0)

    def __eq__(self, other) -> bool:
        return isinstance(other, LaurentElem) and self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    # -- arithmetic ----------------------------------------------------------

    def __add__(self, other: "LaurentElem") -> "LaurentElem":
        t = dict(self.terms)
        for e, c in other.terms.items():
            t[e] = t.get(e, 0) + c
        return LaurentElem(t)

    def __neg__(self) -> "LaurentElem":
        return LaurentElem({e: -c for e, c in self.terms.items()})

    def __sub__(self, other: "LaurentElem") -> "LaurentElem":
        return self + (-other)

    def __mul__(self, other: "LaurentElem") -> "LaurentElem":
        t = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = e1 + e2
                t[e] = t.get(e, 0) + c1 * c2
        return LaurentElem(t)

    def scale(self, c: int) -> "LaurentElem":
        return LaurentElem({e: c * v for e, v in self.terms.items()})

    def shift(self, k: int) -> "LaurentElem":
        """Multiply by alpha^k (pure exponent shift)."""
        return LaurentElem({e + k: c for e, c in self.terms.items()})

    def __repr__(self):
        return f"LaurentElem({laurent_to_str(self)!r})"


_TERM_RE = re.compile(
    r"^(?:(?P<coeff>[+-]?\d+)\*?)?(?P<var>a)?(?:\^(?P<exp>[+-]?\d+))?$"
)


def parse_laurent(text: str) -> LaurentElem:
    """Parse ``c``, ``a``, ``c*a^e``, ``a^e`` terms joined by ``+``/``-``.

    Whitespace-insensitive; e.g. ``a - 1`` or ``2*a^-1``.
    """
    s = text.replace(" ", "").replace("\t", "")
    if not s:
        raise LaurentSyntaxError("empty Laurent expression")
    # split keeping signs: insert separators before +/- that start a term
    parts = re.split(r"(?=[+-])", s)
    terms: dict[int, int] = {}
    for part in parts:
        if part in ("", "+", "-"):
            if part:
                raise LaurentSyntaxError(f"dangling sign in {text!r}")
            continue
        body = part
        sign = 1
        if body[0] in "+-":
            sign = -1 if body[0] == "-" else 1
            body = body[1:]
        m = _TERM_RE.match(body)
        if not m or (m.group("exp") is not None and m.group("var") is None):
            raise LaurentSyntaxError(f"bad term {part!r} in {text!r}")
        coeff = int(m.group("coeff")) if m.group("coeff") is not None else 1
        if m.group("var") is None:
            if m.group("coeff") is None:
                raise LaurentSyntaxError(f"bad term {part!r} in {text!r}")
            exp = 0
        else:
            exp = int(m.group("exp")) if m.group("exp") is not None else 1
        terms[exp] = terms.get(exp, 0) + sign * coeff
    return LaurentElem(terms)


def laurent_to_str(x: LaurentElem) -> str:
    """Inverse of :func:`parse_laurent` (canonical spelling, descending exponents)."""
    if x.is_zero():
        return "0"
    out = []
    for e in sorted(x.terms, reverse=True):
        c = x.terms[e]
        sign = "-" if c < 0 else "+"
        mag = abs(c)
        if e == 0:
            body = str(mag)
        else:
            var = "a" if e == 1 else f"a^{e}"
            body = var if mag == 1 else f"{mag}*{var}"
        if not out:
            out.append(body if c > 0 else "-" + body)
        else:
            out.append(f" {sign} {body}")
    return "".join(out)


# ---------------------------------------------------------------------------
# Field vectors (canonical coordinates)

@dataclass(frozen=True)
class FieldVector:
    """Coordinates of a field element in the power basis 1, alpha, ..., alpha^(n-1)."""

    coords: tuple

    def __post_init__(self):
        object.__setattr__(
            self, "coords", tuple(Fraction(c) for c in self.coords)
        )

    @staticmethod
    def zero(n: int) -> "FieldVector":
        return FieldVector((Fraction(0),) * n)

    @staticmethod
    def one(n: int) -> "FieldVector":
        return FieldVector((Fraction(1),) + (Fraction(0),) * (n - 1))

    def is_zero(self) -> bool:
        return all(c == 0 for c in self.coords)

    def __add__(self, other: "FieldVector") -> "FieldVector":
        return FieldVector(tuple(a + b for a, b in zip(self.coords, other.coords)))

    def __sub__(self, other: "FieldVector") -> "FieldVector":
        return FieldVector(tuple(a - b for a, b in zip(self.coords, other.coords)))

    def __neg__(self) -> "FieldVector":
        return FieldVector(tuple(-a for a in self.coords))

    def scale(self, q) -> "FieldVector":
        q = Fraction(q)
        return FieldVector(tuple(q * a for a in self.coords))


# ---------------------------------------------------------------------------
# Polynomial validation

def _poly_gcd_content(coeffs) -> int:
    return reduce(math.gcd, (abs(c) for c in coeffs), 0)


def is_expanding(coeffs) -> bool:
    """True iff every root of the integer polynomial lies strictly outside the unit circle.

    Runs the Schur-Cohn stability recursion on the reversed polynomial in exact
    integer arithmetic, so the verdict carries no floating-point risk.
    """
    coeffs = [int(c) for c in coeffs]
    if not coeffs or all(c == 0 for c in coeffs):
        raise DegenerateInput("zero polynomial")
    while coeffs and coeffs[-1] == 0:
        coeffs = coeffs[:-1]
    if len(coeffs) == 1:
        # nonzero constant: no roots at all, vacuously expanding
        return True
    if coeffs[0] == 0:
        return False  # root at 0
    # roots of the reversal are reciprocals; expanding <=> reversal Schur-stable
    b = list(reversed(coeffs))
    return _schur_stable(b)


def _schur_stable(b) -> bool:
    """All roots strictly inside the unit circle (exact integer/Fraction recursion)."""
    b = [Fraction(c) for c in b]
    while b and b[-1] == 0:
        b.pop()
    if len(b) <= 1:
        return True
    d = len(b) - 1
    for _ in range(d):
        lead, const = b[-1], b[0]
        if abs(const) >= abs(lead):
            return False
        # next polynomial: (lead*b - const*reverse(b)) / z
        rev = b[::-1]
        nxt = [lead * u - const * v for u, v in zip(b, rev)]
        b = nxt[1:]
        while b and b[-1] == 0:
            b.pop()
        if not b:
            return True
        if len(b) == 1:
            return True
    return True


def schur_cohn_table(coeffs) -> list[tuple[int, int]]:
    """The (|constant|, |leading|) pairs visited by the stability recursion.

    Strict inequality in every row certifies the expanding property.
    """
    coeffs = [int(c) for c in coeffs]
    if not coeffs or all(c == 0 for c in coeffs):
        raise DegenerateInput("zero polynomial")
    b = [Fraction(c) for c in reversed(coeffs)]
    while b and b[-1] == 0:
        b.pop()
    rows = []
    while len(b) > 1:
        rows.append((abs(b[0]), abs(b[-1])))
        if abs(b[0]) >= abs(b[-1]):
            break
        lead, const = b[-1], b[0]
        rev = b[::-1]
        b = [lead * u - const * v for u, v in zip(b, rev)][1:]
        while b and b[-1] == 0:
            b.pop()
    return rows


def dominant_constant_condition(coeffs) -> bool:
    """Advisory sufficient condition |a_0| > |a_1| + ... + |a_n|."""
    return abs(coeffs[0]) > sum(abs(c) for c in coeffs[1:])


def _rational_roots(coeffs):
    """Yield a rational root p/q of an integer polynomial if one exists (exact)."""
    a0, an = coeffs[0], coeffs[-1]
    if a0 == 0:
        yield Fraction(0)
        return

    def divisors(m):
        m = abs(m)
        out = set()
        i = 1
        while i * i <= m:
            if m % i == 0:
                out.add(i)
                out.add(m // i)
            i += 1
        return out

    for p in divisors(a0):
        for q in divisors(an):
            for s in (1, -1):
                r = Fraction(s * p, q)
                if sum(c * r**i for i, c in enumerate(coeffs)) == 0:
                    yield r
                    return  # a single root already settles reducibility


def _quadratic_factor(coeffs):
    """Search for a degree-2 integer factor of a degree-4 polynomial.

    Coefficient bounds follow the Landau-Mignotte estimate; the search is a
    bounded divisor-pair loop with an exact trial division.
    """
    a0, an = coeffs[0], coeffs[-1]
    norm2 = math.isqrt(sum(c * c for c in coeffs)) + 1
    mid_bound = 2 * norm2

    def signed_divisors(m):
        m = abs(m)
        out = []
        i = 1
        while i * i <= m:
            if m % i == 0:
                out.extend([i, -i, m // i, -(m // i)])
            i += 1
        return sorted(set(out))

    for g2 in signed_divisors(an):
        for g0 in signed_divisors(a0):
            for g1 in range(-mid_bound, mid_bound + 1):
                g = [g0, g1, g2]
                q, rem = _polydiv_int(coeffs, g)
                if q is not None and not any(rem):
                    return g
    return None


def _polydiv_int(num, den):
    """Exact division of integer polynomials; (quotient, remainder) or (None, _)."""
    num = [Fraction(c) for c in num]
    dn = len(den) - 1
    lead = Fraction(den[-1])
    q = [Fraction(0)] * (len(num) - dn)
    for i in range(len(num) - 1, dn - 1, -1):
        c = num[i] / lead
        q[i - dn] = c
        if c:
            for j, d in enumerate(den):
                num[i - dn + j] -= c * d
    if any(c.denominator != 1 for c in q):
        return None, num
    return [int(c) for c in q], [c for c in num[:dn]]


@dataclass(frozen=True)
class PolynomialSpec:
    """A validated expanding primitive polynomial and its derived constants.

    ``coeffs`` are ascending-degree integers (a_0, ..., a_n).
    """

    coeffs: tuple
    degree: int
    abs_a0: int
    abs_an: int
    irreducibility_status: str  # "verified" | "asserted"

    @property
    def a0(self) -> int:
        return self.coeffs[0]

    @property
    def an(self) -> int:
        return self.coeffs[-1]

    # cached canonical coordinates of 1/alpha: -(a_1 + a_2 a + ... + a_n a^(n-1))/a_0
    def alpha_inverse_fv(self) -> FieldVector:
        n = self.degree
        return FieldVector(
            tuple(Fraction(-self.coeffs[i + 1], self.coeffs[0]) for i in range(n))
        )

    def fv_from_int(self, c: int) -> FieldVector:
        return FieldVector.one(self.degree).scale(c)

    def multiply(self, u: FieldVector, v: FieldVector) -> FieldVector:
        """Exact product of two field elements in power-basis coordinates."""
        n = self.degree
        prod = [Fraction(0)] * (2 * n - 1)
        for i, a in enumerate(u.coords):
            if a:
                for j, b in enumerate(v.coords):
                    if b:
                        prod[i + j] += a * b
        # reduce degrees >= n using a_n x^n = -(a_0 + ... + a_{n-1} x^{n-1})
        for k in range(2 * n - 2, n - 1, -1):
            c = prod[k]
            if c:
                prod[k] = Fraction(0)
                for j in range(n):
                    prod[k - n + j] -= c * Fraction(self.coeffs[j], self.coeffs[n])
        return FieldVector(tuple(prod[:n]))

    def alpha_fv(self) -> FieldVector:
        """Canonical coordinates of alpha itself."""
        n = self.degree
        if n == 1:
            return FieldVector((Fraction(-self.coeffs[0], self.coeffs[1]),))
        return FieldVector(
            tuple(Fraction(1) if i == 1 else Fraction(0) for i in range(n))
        )

    def alpha_power_fv(self, e: int) -> FieldVector:
        """Canonical coordinates of alpha^e, any integer e (cached)."""
        cache = _POWER_CACHE.setdefault(self.coeffs, {})
        if e in cache:
            return cache[e]
        if e == 0:
            fv = FieldVector.one(self.degree)
        elif e > 0:
            fv = self.multiply(self.alpha_power_fv(e - 1), self.alpha_fv())
        else:
            fv = self.multiply(self.alpha_power_fv(e + 1), self.alpha_inverse_fv())
        cache[e] = fv
        return fv


_POWER_CACHE: dict = {}


def validate_spec(coeffs) -> PolynomialSpec:
    """Validate ascending-degree integer coefficients into a :class:`PolynomialSpec`.

    Requires primitivity, |a_0| >= 2, the expanding property (exact
    Schur-Cohn), and irreducibility (verified up to degree 4, asserted with a
    flag beyond).
    """
    coeffs = [int(c) for c in coeffs]
    if not coeffs or coeffs[-1] == 0:
        raise DegreeZero("coefficient list must be non-empty with nonzero leading term")
    n = len(coeffs) - 1
    if n == 0:
        raise DegreeZero("constant polynomials define no algebraic number")
    if _poly_gcd_content(coeffs) != 1:
        raise NotPrimitive(f"coefficient gcd is {_poly_gcd_content(coeffs)}")
    if abs(coeffs[0]) < 2 or not is_expanding(coeffs):
        raise NotExpanding("some root lies on or inside the unit circle")

    status = "verified"
    if n >= 2:
        root = next(_rational_roots(coeffs), None)
        if root is not None:
            raise TriviallyReducible(f"rational root {root}")
    if n == 4:
        g = _quadratic_factor(coeffs)
        if g is not None:
            raise TriviallyReducible(f"quadratic factor {g}")
    if n >= 5:
        status = "asserted"

    spec = PolynomialSpec(
        coeffs=tuple(coeffs),
        degree=n,
        abs_a0=abs(coeffs[0]),
        abs_an=abs(coeffs[-1]),
        irreducibility_status=status,
    )
    # cross-check the exact verdict against computed roots
    emb = compute_embeddings(spec)
    if emb.contraction <= 1.0:
        raise NotExpanding("numerical roots contradict the stability test")
    return spec


# ---------------------------------------------------------------------------
# Ring membership by divisibility elimination

@dataclass(frozen=True)
class Reduction:
    """Outcome of a membership test: Member carries a canonical representative."""

    member: bool
    rep: LaurentElem | None = None
    fail_exponent: int | None = None
    fail_coeff: int | None = None


def reduce_bottom(x: LaurentElem, spec: PolynomialSpec) -> Reduction:
    """Membership of x in Z[alpha], with a nonneg-exponent representative.

    Repeatedly eliminates the lowest term: its coefficient must be divisible
    by a_0, and c*alpha^e is rewritten through
    a_0/alpha = -(a_1 + a_2 alpha + ... + a_n alpha^(n-1)).
    Each step strictly raises the minimal exponent, so this terminates.
    """
    terms = dict(x.terms)
    a = spec.coeffs
    n = spec.degree
    while terms:
        e = min(terms)
        if e >= 0:
            break
        c = terms.pop(e)
        if c % a[0] != 0:
            return Reduction(False, None, e, c)
        q = c // a[0]
        for j in range(1, n + 1):
            if a[j]:
                ee = e + j
                terms[ee] = terms.get(ee, 0) - q * a[j]
                if terms[ee] == 0:
                    del terms[ee]
    return Reduction(True, LaurentElem(terms))


def reduce_top(x: LaurentElem, spec: PolynomialSpec) -> Reduction:
    """Membership of x in Z[1/alpha], with a nonpositive-exponent representative.

    Mirror of :func:`reduce_bottom`: the leading coefficient must be divisible
    by a_n, rewritten through
    a_n alpha = -(a_{n-1} + a_{n-2}/alpha + ... + a_0 alpha^(1-n)).
    """
    terms = dict(x.terms)
    a = spec.coeffs
    n = spec.degree
    while terms:
        e = max(terms)
        if e <= 0:
            break
        c = terms.pop(e)
        if c % a[n] != 0:
            return Reduction(False, None, e, c)
        q = c // a[n]
        for j in range(1, n + 1):
            if a[n - j]:
                ee = e - j
                terms[ee] = terms.get(ee, 0) - q * a[n - j]
                if terms[ee] == 0:
                    del terms[ee]
    return Reduction(True, LaurentElem(terms))


def in_shifted_inverse_ring(x: LaurentElem, spec: PolynomialSpec, k: int) -> Reduction:
    """Membership of x in alpha^k * Z[1/alpha], by testing alpha^(-k) * x."""
    return reduce_top(x.shift(-k), spec)


def to_field_vector(x: LaurentElem, spec: PolynomialSpec) -> FieldVector:
    """Exact canonical coordinates of a Laurent element."""
    fv = FieldVector.zero(spec.degree)
    for e, c in x.terms.items():
        fv = fv + spec.alpha_power_fv(e).scale(c)
    return fv


def field_equal(x: LaurentElem, y: LaurentElem, spec: PolynomialSpec) -> bool:
    return to_field_vector(x, spec) == to_field_vector(y, spec)


# ---------------------------------------------------------------------------
# Archimedean embeddings

@dataclass(frozen=True)
class Place:
    """One archimedean embedding: a root of A (complex places keep Im > 0)."""

    root: complex
    is_real: bool


@dataclass(frozen=True)
class EmbeddingData:
    places: tuple  # Place, ordered by (Re, Im) of the root
    r_count: int
    s_count: int
    precision: float
    contraction: float  # min |root|, must exceed 1

    @property
    def all_roots(self) -> list[complex]:
        """All n roots, conjugates restored."""
        out = []
        for p in self.places:
            out.append(p.root)
            if not p.is_real:
                out.append(p.root.conjugate())
        return out


def _aberth_roots(coeffs, tol, max_iter=400):
    """Simultaneous root refinement (Aberth-Ehrlich) with Newton polish."""
    c = np.array([float(v) for v in coeffs], dtype=np.complex128)
    n = len(c) - 1
    # Cauchy-style initial radius, points spread on a slightly irrational spiral
    radius = 1.0 + max(abs(c[i] / c[-1]) for i in range(n))
    ang = 2 * np.pi * (np.arange(n) + 0.376) / n + 0.5
    z = radius * np.exp(1j * ang)

    dcoeffs = c[1:] * np.arange(1, n + 1)

    def p(v):
        return np.polyval(c[::-1], v)

    def dp(v):
        return np.polyval(dcoeffs[::-1], v)

    for _ in range(max_iter):
        pz = p(z)
        if np.all(np.abs(pz) <= tol):
            break
        dz = dp(z)
        newton = np.where(dz != 0, pz / np.where(dz == 0, 1, dz), 0.0)
        diff = z[:, None] - z[None, :]
        np.fill_diagonal(diff, np.inf)
        s = np.sum(1.0 / diff, axis=1)
        denom = 1.0 - newton * s
        step = np.where(np.abs(denom) > 1e-300, newton / denom, newton)
        z = z - step
        if np.all(np.abs(step) < 1e-16 * (1 + np.abs(z))):
            break
    # Newton polish
    for _ in range(60):
        pz = p(z)
        if np.all(np.abs(pz) <= tol):
            return z
        dz = dp(z)
        z = z - np.where(dz != 0, pz / np.where(dz == 0, 1, dz), 0.0)
    if np.all(np.abs(p(z)) <= tol):
        return z
    raise NoConvergence("root iteration budget exceeded")


def compute_embeddings(spec: PolynomialSpec, tolerance: float = 1e-12) -> EmbeddingData:
    """All n roots of A, paired into real places and conjugate pairs.

    Imaginary parts below the tolerance snap to zero; the result is ordered by
    (Re, Im) for determinism and cross-checked against the coefficient
    symmetric functions.
    """
    roots = list(_aberth_roots(spec.coeffs, tolerance))
    scale = max(1.0, max(abs(z) for z in roots))
    snap = 1000 * tolerance * scale
    reals = [z.real for z in roots if abs(z.imag) <= snap]
    complexes = sorted(
        (z for z in roots if z.imag > snap), key=lambda z: (z.real, z.imag)
    )
    neg = sorted(
        (z for z in roots if z.imag < -snap), key=lambda z: (z.real, -z.imag)
    )
    if len(complexes) != len(neg):
        raise NoConvergence("conjugate pairing failed")
    places = [Place(complex(x, 0.0), True) for x in sorted(reals)]
    places += [Place(z, False) for z in complexes]
    places.sort(key=lambda p: (p.root.real, p.root.imag))
    emb = EmbeddingData(
        places=tuple(places),
        r_count=len(reals),
        s_count=len(complexes),
        precision=tolerance,
        contraction=min(abs(z) for z in roots),
    )
    _check_vieta(spec, emb, tolerance)
    return emb


def _check_vieta(spec, emb, tol):
    n = spec.degree
    if emb.r_count + 2 * emb.s_count != n:
        raise NoConvergence("place count mismatch")
    allr = emb.all_roots
    prod = 1.0 + 0.0j
    for z in allr:
        prod *= z
    want_prod = (-1) ** n * spec.coeffs[0] / spec.coeffs[-1]
    want_sum = -spec.coeffs[-2] / spec.coeffs[-1] if n >= 1 else 0.0
    scale = max(1.0, abs(want_prod), abs(want_sum))
    if abs(prod - want_prod) > 1e10 * tol * scale:
        raise NoConvergence(f"root product check failed: {prod} vs {want_prod}")
    if abs(sum(allr) - want_sum) > 1e10 * tol * scale:
        raise NoConvergence("root sum check failed")


def embed_arch(x: FieldVector, emb: EmbeddingData) -> tuple:
    """Archimedean coordinates: one float per real place, (Re, Im) per complex place."""
    out = []
    for p in emb.places:
        v = 0j
        for c in reversed(x.coords):
            v = v * p.root + complex(c)
        if p.is_real:
            out.append(v.real)
        else:
            out.extend([v.real, v.imag])
    return tuple(out)


def place_values(x: FieldVector, emb: EmbeddingData) -> list[complex]:
    """One complex value per place (the representative conjugate)."""
    out = []
    for p in emb.places:
        v = 0j
        for c in reversed(x.coords):
            v = v * p.root + complex(c)
        out.append(v)
    return out
