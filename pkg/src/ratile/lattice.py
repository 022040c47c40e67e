"""Rank-n lattices inside the number field: translation modules and their HNF bases.

A lattice is stored as an integer matrix in row Hermite normal form over a
common positive denominator; rows are coordinates of basis vectors in the
power basis.  The module family Lambda(m) = Z[alpha] cap alpha^(m-1) Z[1/alpha]
is built from the closed-form basis at m = 0 and certified saturation steps,
each validated against the exact index law (quotient of consecutive levels has
cardinality |a_n|).
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


class LatticeError(Exception):
    pass


class IndexLawViolation(LatticeError):
    pass


class BoundExceeded(LatticeError):
    pass


# ---------------------------------------------------------------------------
# Integer row HNF

def hnf_rows(rows: list[list[int]]) -> list[list[int]]:
    """Canonical row Hermite normal form of the row span (pivots positive,
    entries above a pivot reduced into [0, pivot))."""
    work = [list(r) for r in rows if any(r)]
    if not work:
        return []
    ncols = len(work[0])
    basis: list[list[int]] = []
    pivots: list[int] = []
    for col in range(ncols):
        live = [r for r in work if r[col] != 0]
        if not live:
            continue
        rest = [r for r in work if r[col] == 0]
        # gcd-combine all rows with a nonzero entry in this column
        while len(live) > 1:
            live.sort(key=lambda r: abs(r[col]))
            piv = live[0]
            new_live = [piv]
            for r in live[1:]:
                q = r[col] // piv[col]
                rr = [a - q * b for a, b in zip(r, piv)]
                if rr[col] != 0:
                    new_live.append(rr)
                elif any(rr):
                    rest.append(rr)
            live = new_live
        piv = live[0]
        if piv[col] < 0:
            piv = [-a for a in piv]
        basis.append(piv)
        pivots.append(col)
        work = rest
    # normalize entries above each pivot
    for i in range(len(basis)):
        p = pivots[i]
        for j in range(i):
            q = basis[j][p] // basis[i][p]
            if q:
                basis[j] = [a - q * b for a, b in zip(basis[j], basis[i])]
    return basis


def hnf_rows_transform(rows: list[list[int]]) -> tuple[list[list[int]], list[list[int]]]:
    """Row HNF together with an integer transform U such that U * rows = hnf.

    Zero rows of the result are kept (their transform rows span the left
    kernel).  Returns (hnf_with_zero_rows, U).
    """
    m = len(rows)
    if m == 0:
        return [], []
    ncols = len(rows[0])
    # augment with identity
    work = [list(r) + [1 if i == j else 0 for j in range(m)] for i, r in enumerate(rows)]

    def is_zero(r):
        return not any(r[:ncols])

    basis = []
    pivots = []
    pool = work
    for col in range(ncols):
        live = [r for r in pool if r[col] != 0]
        rest = [r for r in pool if r[col] == 0]
        if not live:
            pool = rest
            continue
        while len(live) > 1:
            live.sort(key=lambda r: abs(r[col]))
            piv = live[0]
            new_live = [piv]
            for r in live[1:]:
                q = r[col] // piv[col]
                rr = [a - q * b for a, b in zip(r, piv)]
                if rr[col] != 0:
                    new_live.append(rr)
                else:
                    rest.append(rr)
            live = new_live
        piv = live[0]
        if piv[col] < 0:
            piv = [-a for a in piv]
        basis.append(piv)
        pivots.append(col)
        pool = rest
    for i in range(len(basis)):
        p = pivots[i]
        for j in range(i):
            q = basis[j][p] // basis[i][p]
            if q:
                basis[j] = [a - q * b for a, b in zip(basis[j], basis[i])]
    all_rows = basis + [r for r in pool]  # pool rows are zero in the lattice part
    H = [r[:ncols] for r in all_rows]
    U = [r[ncols:] for r in all_rows]
    return H, U


def _solve_against_hnf(basis: list[list[int]], target: list[int]) -> list[int] | None:
    """Integer row-combination coefficients c with c * basis = target, if any."""
    if not basis:
        return [] if not any(target) else None
    v = list(target)
    coeffs = []
    pivcols = []
    for r in basis:
        pc = next(i for i, a in enumerate(r) if a != 0)
        pivcols.append(pc)
    for r, pc in zip(basis, pivcols):
        if v[pc] % r[pc] != 0:
            return None
        q = v[pc] // r[pc]
        coeffs.append(q)
        if q:
            v = [a - q * b for a, b in zip(v, r)]
    if any(v):
        return None
    return coeffs


# ---------------------------------------------------------------------------
# Modular polynomial-multiple decision (division by an integer inside the ring)

def _is_modular_multiple(rem: list[int], apoly: list[int], d: int, want_quotient=False):
    """Decide whether rem = apoly * q has a polynomial solution q over Z/d.

    Coefficients ascend.  Solves from the constant term upward; the quotient
    coefficient stream becomes a finite-state affine recursion once the input
    is exhausted, so reachability of the all-zero state decides termination.
    Returns the quotient (list of ints in [0, d)) or None; with
    ``want_quotient=False`` just True/False.
    """
    d = abs(d)
    if d == 1:
        return [] if want_quotient else True
    a = [c % d for c in apoly]
    r = [c % d for c in rem]
    while r and r[-1] == 0:
        r.pop()
    if not r:
        return [] if want_quotient else True
    n = len(a) - 1
    a0 = a[0]
    g = math.gcd(a0, d)

    deg_r = len(r) - 1

    # depth-first search over quotient coefficients; state = last n of them
    seen = set()
    stack = [(0, (0,) * n, ())]
    while stack:
        t, state, qs = stack.pop()
        if t > deg_r and all(s == 0 for s in state):
            if want_quotient:
                return list(qs)
            return True
        if t > deg_r:
            key = state
            if key in seen:
                continue
            seen.add(key)
        if t > deg_r + n + (d ** n) * (n + 2) + 4:
            continue
        rhs = (r[t] if t <= deg_r else 0) % d
        acc = 0
        for i in range(1, min(n, t) + 1):
            acc = (acc + a[i] * state[n - i]) % d
        need = (rhs - acc) % d
        if need % g != 0:
            continue
        # solutions of a0*q == need (mod d)
        dd = d // g
        inv = pow(a0 // g, -1, dd)
        q0 = (need // g * inv) % dd
        for j in range(g):
            q = (q0 + j * dd) % d
            stack.append((t + 1, state[1:] + (q,), qs + (q,)))
    return None if want_quotient else False


def divide_in_bottom_ring(y: LaurentElem, spec: PolynomialSpec, d: int) -> LaurentElem | None:
    """If y/d lies in Z[alpha], return an integer Laurent representative of it."""
    red = reduce_bottom(y, spec)
    if not red.member:
        return None
    rep = red.rep
    if rep.is_zero():
        return LaurentElem.zero()
    deg = rep.max_exponent()
    rem = [rep.terms.get(i, 0) for i in range(deg + 1)]
    q = _is_modular_multiple(rem, list(spec.coeffs), d, want_quotient=True)
    if q is None:
        return None
    # lift: p = (rem - A*q)/d over the integers
    a = list(spec.coeffs)
    prod = [0] * (len(q) + len(a))
    for i, qc in enumerate(q):
        if qc:
            for j, ac in enumerate(a):
                prod[i + j] += qc * ac
    out = {}
    for i in range(max(len(rem), len(prod))):
        num = (rem[i] if i < len(rem) else 0) - (prod[i] if i < len(prod) else 0)
        assert num % d == 0
        if num:
            out[i] = num // d
    return LaurentElem(out)


def divide_in_top_ring(y: LaurentElem, spec: PolynomialSpec, d: int) -> LaurentElem | None:
    """If y/d lies in Z[1/alpha], return an integer Laurent representative."""
    red = reduce_top(y, spec)
    if not red.member:
        return None
    rep = red.rep
    if rep.is_zero():
        return LaurentElem.zero()
    low = rep.min_exponent()
    # coefficients as a polynomial in beta = 1/alpha, ascending
    rem = [rep.terms.get(-i, 0) for i in range(-low + 1)]
    bpoly = list(reversed(spec.coeffs))  # minimal polynomial of beta, ascending
    q = _is_modular_multiple(rem, bpoly, d, want_quotient=True)
    if q is None:
        return None
    prod = [0] * (len(q) + len(bpoly))
    for i, qc in enumerate(q):
        if qc:
            for j, ac in enumerate(bpoly):
                prod[i + j] += qc * ac
    out = {}
    for i in range(max(len(rem), len(prod))):
        num = (rem[i] if i < len(rem) else 0) - (prod[i] if i < len(prod) else 0)
        assert num % d == 0
        if num:
            out[-i] = num // d
    return LaurentElem(out)


# ---------------------------------------------------------------------------
# Lattices

@dataclass(frozen=True)
class LatticeHNF:
    """A finite-rank module in power-basis coordinates: integer HNF rows over
    a common positive denominator."""

    den: int
    mat: tuple  # rows, tuple of tuples of int
    label: str
    laurent_basis: tuple = ()  # integer Laurent representatives of the rows
    heuristic: bool = False

    @property
    def rank(self) -> int:
        return len(self.mat)

    @property
    def dim(self) -> int:
        return len(self.mat[0]) if self.mat else 0

    def basis(self) -> list[FieldVector]:
        return [
            FieldVector(tuple(Fraction(a, self.den) for a in row)) for row in self.mat
        ]

    def det(self) -> Fraction:
        """Determinant of the basis matrix (full-rank lattices only)."""
        if self.rank != self.dim:
            raise LatticeError("determinant of a non-full-rank lattice")
        d = Fraction(1)
        for i, row in enumerate(self.mat):
            d *= Fraction(row[i], self.den)
        return d

    def to_json(self) -> dict:
        return {"denominator": self.den, "matrix": [list(r) for r in self.mat],
                "label": self.label, "heuristic": self.heuristic}


def lattice_from_field_vectors(vectors, label="custom", laurent=()) -> LatticeHNF:
    if not vectors:
        return LatticeHNF(1, (), label, tuple(laurent))
    den = 1
    for v in vectors:
        for c in v.coords:
            den = den * c.denominator // math.gcd(den, c.denominator)
    rows = [[int(c * den) for c in v.coords] for v in vectors]
    h = hnf_rows(rows)
    g = den
    for r in h:
        for a in r:
            g = math.gcd(g, a)
    if g > 1:
        den //= g
        h = [[a // g for a in r] for r in h]
    return LatticeHNF(den, tuple(tuple(r) for r in h), label, tuple(laurent))


def lattice_membership(x: FieldVector, L: LatticeHNF):
    """Integer coordinates of x against the HNF rows, or None if x is outside."""
    target = []
    for c in x.coords:
        s = c * L.den
        if s.denominator != 1:
            return None
        target.append(int(s))
    coords = _solve_against_hnf([list(r) for r in L.mat], target)
    return None if coords is None else tuple(coords)


def lattice_intersection(A: LatticeHNF, B: LatticeHNF, label="custom") -> LatticeHNF:
    """Intersection of two modules given by their HNF rows."""
    if not A.mat or not B.mat:
        return LatticeHNF(1, (), label)
    den = A.den * B.den // math.gcd(A.den, B.den)
    ra = [[a * (den // A.den) for a in row] for row in A.mat]
    rb = [[b * (den // B.den) for b in row] for row in B.mat]
    stacked = ra + [[-b for b in row] for row in rb]
    H, U = hnf_rows_transform(stacked)
    gens = []
    for h, u in zip(H, U):
        if any(h):
            continue
        # u[:len(ra)] combines A-rows into an intersection element
        vec = [0] * A.dim
        for c, row in zip(u[: len(ra)], ra):
            if c:
                vec = [v + c * r for v, r in zip(vec, row)]
        if any(vec):
            gens.append(FieldVector(tuple(Fraction(v, den) for v in vec)))
    return lattice_from_field_vectors(gens, label)


# ---------------------------------------------------------------------------
# The Lambda(m) family

_LAMBDA_CACHE: dict = {}


def lambda_generators(spec: PolynomialSpec):
    """The ordered closed-form generators of Lambda(0):
    w_0 = a_n, w_i = alpha * w_{i-1} + a_{n-i}."""
    n = spec.degree
    a = spec.coeffs
    gens = []
    w = LaurentElem.integer(a[n])
    gens.append(w)
    for i in range(1, n):
        w = w.shift(1) + LaurentElem.integer(a[n - i])
        gens.append(w)
    return gens


def lambda_basis(spec: PolynomialSpec, m: int, bound: int = 8) -> LatticeHNF:
    """HNF basis of Lambda(m) = Z[alpha] cap alpha^(m-1) Z[1/alpha].

    m = 0 uses the closed-form generators; other levels are reached by
    certified saturation steps, each checked against the index law.
    """
    if abs(m) > bound:
        raise BoundExceeded(f"|m| = {abs(m)} exceeds bound {bound}")
    key = (spec.coeffs, m)
    if key in _LAMBDA_CACHE:
        return _LAMBDA_CACHE[key]
    if m == 0:
        gens = lambda_generators(spec)
        L = lattice_from_field_vectors(
            [to_field_vector(g, spec) for g in gens], "Lambda(0)"
        )
        L = LatticeHNF(L.den, L.mat, L.label, _laurent_basis_for(spec, L, gens))
        _verify_lambda_invariants(spec, L, 0)
        _LAMBDA_CACHE[key] = L
        return L
    prev = lambda_basis(spec, m - 1 if m > 0 else m + 1, bound)
    L = _lambda_step_up(spec, prev, m - 1) if m > 0 else _lambda_step_down(spec, prev, m + 1)
    _verify_lambda_invariants(spec, L, m)
    _LAMBDA_CACHE[key] = L
    return L


def _coset_reps(L: LatticeHNF, d: int):
    """Integer coefficient tuples indexing L / d*L."""
    return itertools.product(range(abs(d)), repeat=L.rank)


def _combine_laurent(L: LatticeHNF, coeffs) -> LaurentElem:
    out = LaurentElem.zero()
    for c, g in zip(coeffs, L.laurent_basis):
        if c:
            out = out + g.scale(c)
    return out


def _lambda_step_up(spec: PolynomialSpec, L: LatticeHNF, m_from: int) -> LatticeHNF:
    """From Lambda(m_from) to Lambda(m_from + 1)."""
    an = spec.an
    m_to = m_from + 1
    vectors = [to_field_vector(g, spec) for g in L.laurent_basis]
    laurents = list(L.laurent_basis)
    if abs(an) > 1:
        for coeffs in _coset_reps(L, an):
            if not any(coeffs):
                continue
            y = _combine_laurent(L, coeffs)
            # y/an must lie in Z[alpha] and in alpha^m_to' Z[1/alpha] (shift m_to - 1)
            bot = divide_in_bottom_ring(y, spec, an)
            if bot is None:
                continue
            top = divide_in_top_ring(y.shift(-(m_to - 1)), spec, an)
            if top is None:
                continue
            vectors.append(to_field_vector(bot, spec))
            laurents.append(bot)
    new = lattice_from_field_vectors(vectors, f"Lambda({m_to})")
    canon = _laurent_basis_for(spec, new, laurents + list(L.laurent_basis))
    new = LatticeHNF(new.den, new.mat, new.label, canon)
    ratio = abs(new.det() / L.det())
    if ratio != Fraction(1, abs(an)):
        raise IndexLawViolation(
            f"step {m_from}->{m_to}: determinant ratio {ratio}, expected 1/{abs(an)}"
        )
    return new


def _lambda_step_down(spec: PolynomialSpec, L: LatticeHNF, m_from: int) -> LatticeHNF:
    """From Lambda(m_from) to Lambda(m_from - 1)."""
    an = spec.an
    m_to = m_from - 1
    vectors = [to_field_vector(g, spec).scale(an) for g in L.laurent_basis]
    laurents = [g.scale(an) for g in L.laurent_basis]
    if abs(an) > 1:
        for coeffs in _coset_reps(L, an):
            if not any(coeffs):
                continue
            y = _combine_laurent(L, coeffs)
            if reduce_top(y.shift(-(m_to - 1)), spec).member:
                vectors.append(to_field_vector(y, spec))
                laurents.append(y)
    new = lattice_from_field_vectors(vectors, f"Lambda({m_to})")
    canon = _laurent_basis_for(spec, new, laurents)
    new = LatticeHNF(new.den, new.mat, new.label, canon)
    ratio = abs(L.det() / new.det())
    if ratio != Fraction(1, abs(an)):
        raise IndexLawViolation(
            f"step {m_from}->{m_to}: determinant ratio {1/ratio}, expected {abs(an)}"
        )
    return new


def _laurent_basis_for(spec, L: LatticeHNF, gens: list[LaurentElem]):
    """Integer Laurent representatives of the HNF rows, combined from known
    generator representatives."""
    gen_vecs = [to_field_vector(g, spec) for g in gens]
    den = L.den
    for v in gen_vecs:
        for c in v.coords:
            den = den * c.denominator // math.gcd(den, c.denominator)
    grows = [[int(c * den) for c in v.coords] for v in gen_vecs]
    H, U = hnf_rows_transform(grows)
    urows = [u for h, u in zip(H, U) if any(h)]
    Hnz = [h for h in H if any(h)]
    out = []
    for row in L.mat:
        target = [a * (den // L.den) for a in row]
        coeffs = _solve_against_hnf(Hnz, target)
        if coeffs is None:
            raise LatticeError("internal: HNF row not representable by generators")
        # map back through the transform
        lau = LaurentElem.zero()
        for c, u in zip(coeffs, urows):
            if c:
                for uc, g in zip(u, gens):
                    if uc:
                        lau = lau + g.scale(c * uc)
        out.append(lau)
    return tuple(out)


def _verify_lambda_invariants(spec, L: LatticeHNF, m: int):
    if L.rank != spec.degree:
        raise IndexLawViolation(f"Lambda({m}) has rank {L.rank}, expected {spec.degree}")
    for lau, fv in zip(L.laurent_basis, L.basis()):
        if to_field_vector(lau, spec) != fv:
            raise IndexLawViolation("Laurent representative mismatch")
        if not reduce_bottom(lau, spec).member:
            raise IndexLawViolation(f"Lambda({m}) basis vector outside Z[alpha]")
        if not reduce_top(lau.shift(1 - m), spec).member:
            raise IndexLawViolation(
                f"Lambda({m}) basis vector outside alpha^{m-1} Z[1/alpha]"
            )


# ---------------------------------------------------------------------------
# The digit span z = Z<alpha, D> and its lattice intersections

@dataclass(frozen=True)
class SpanClosure:
    """Result of the primitivity search for the digit-difference span."""

    primitive: bool
    certificate: tuple = ()  # ((coeff, power, digit_i, digit_j), ...) summing to 1
    cap: int = 0


def _digit_diff_generators(spec, digits, power: int):
    """All alpha^j (d - d') for 0 <= j <= power, as (laurent, (j, i1, i2))."""
    gens = []
    for j in range(power + 1):
        for i1 in range(len(digits)):
            for i2 in range(len(digits)):
                if i1 == i2:
                    continue
                g = (digits[i1] - digits[i2]).shift(j)
                gens.append((g, (j, i1, i2)))
    return gens


def check_primitivity(spec: PolynomialSpec, D, cap: int | None = None) -> SpanClosure:
    """Search for an integer combination of alpha^j (d - d') equal to 1.

    Finding one certifies that the invariant span of the digit differences is
    the whole ring; exhausting the cap is reported as inconclusive.
    """
    digits = list(D.digits) if hasattr(D, "digits") else list(D)
    if cap is None:
        cap = 4 * spec.degree
    one = FieldVector.one(spec.degree)
    fv_list = [to_field_vector(d, spec) for d in digits]
    # {0,1} shortcut
    zero_idx = one_idx = None
    for i, fv in enumerate(fv_list):
        if fv.is_zero():
            zero_idx = i
        elif fv == one:
            one_idx = i
    if zero_idx is not None and one_idx is not None:
        return SpanClosure(True, ((1, 0, one_idx, zero_idx),), 0)

    for power in range(cap + 1):
        gens = _digit_diff_generators(spec, digits, power)
        vecs = [to_field_vector(g, spec) for g, _ in gens]
        den = 1
        for v in vecs:
            for c in v.coords:
                den = den * c.denominator // math.gcd(den, c.denominator)
        rows = [[int(c * den) for c in v.coords] for v in vecs]
        H, U = hnf_rows_transform(rows)
        nz = [(h, u) for h, u in zip(H, U) if any(h)]
        target = [den if i == 0 else 0 for i in range(spec.degree)]
        coeffs = _solve_against_hnf([h for h, _ in nz], target)
        if coeffs is None:
            continue
        combo: dict[int, int] = {}
        for c, (_, u) in zip(coeffs, nz):
            if c:
                for gi, uc in enumerate(u):
                    if uc:
                        combo[gi] = combo.get(gi, 0) + c * uc
        cert = tuple(
            (c, *gens[gi][1]) for gi, c in sorted(combo.items()) if c
        )
        # exact re-verification of the stored combination
        acc = FieldVector.zero(spec.degree)
        for c, j, i1, i2 in cert:
            acc = acc + to_field_vector((digits[i1] - digits[i2]).shift(j), spec).scale(c)
        if acc != one:
            raise LatticeError("internal: primitivity certificate failed re-check")
        return SpanClosure(True, cert, power)
    return SpanClosure(False, (), cap)


def laurent_from_field_vector(spec: PolynomialSpec, x: FieldVector,
                              max_exponent: int = 24) -> LaurentElem | None:
    """An integer Laurent representative of x, if one exists with exponents in
    [-max_exponent, max_exponent]; solved against the HNF of the power span."""
    exps = list(range(-max_exponent, max_exponent + 1))
    vecs = [spec.alpha_power_fv(e) for e in exps]
    den = 1
    for v in list(vecs) + [x]:
        for c in v.coords:
            den = den * c.denominator // math.gcd(den, c.denominator)
    rows = [[int(c * den) for c in v.coords] for v in vecs]
    H, U = hnf_rows_transform(rows)
    urows = [u for h, u in zip(H, U) if any(h)]
    Hnz = [h for h in H if any(h)]
    target = [int(c * den) for c in x.coords]
    coeffs = _solve_against_hnf(Hnz, target)
    if coeffs is None:
        return None
    terms: dict[int, int] = {}
    for c, u in zip(coeffs, urows):
        if c:
            for e, uc in zip(exps, u):
                if uc:
                    terms[e] = terms.get(e, 0) + c * uc
    return LaurentElem(terms)


def z_cap_lambda(spec: PolynomialSpec, D, m: int | None = None, cap: int = 24) -> LatticeHNF:
    """The lattice of translation points: digit span intersected with Lambda(m).

    For a primitive digit set this is Lambda(m) itself.  Otherwise the
    increasing chain of finite spans is intersected with Lambda(m) until it is
    full-rank and stable for n consecutive rounds; the result is flagged
    heuristic because no effective stopping bound is available.
    """
    digits = list(D.digits)
    if m is None:
        m = D.m
    prim = check_primitivity(spec, D)
    lam = lambda_basis(spec, m)
    if prim.primitive:
        return LatticeHNF(lam.den, lam.mat, f"ZcapLambda({m})", lam.laurent_basis)
    n = spec.degree
    stable = 0
    last = None
    for power in range(cap + 1):
        gens = [g for g, _ in _digit_diff_generators(spec, digits, power)]
        span = lattice_from_field_vectors(
            [to_field_vector(g, spec) for g in gens], "span"
        )
        inter = lattice_intersection(span, lam, f"ZcapLambda({m})")
        if last is not None and inter.rank == n and inter.mat == last.mat and inter.den == last.den:
            stable += 1
            if stable >= n:
                return LatticeHNF(inter.den, inter.mat, inter.label, (), True)
        else:
            stable = 0
        last = inter
    raise BoundExceeded(f"digit span chain did not stabilize within {cap} rounds")
