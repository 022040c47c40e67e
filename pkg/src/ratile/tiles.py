"""Point-cloud approximations with rigorous cell radii.

Three cloud kinds share one container: depth-k digit expansions of the
self-affine set (kind ``F``), backward-orbit trees of the real slice tiles
(kind ``G``), and shift-radix-system tiles (kind ``SRS``).  Points keep exact
rational provenance; floats are produced once, at emission.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from .exactnum import (
    EmbeddingData,
    FieldVector,
    LaurentElem,
    PolynomialSpec,
    compute_embeddings,
    embed_arch,
    place_values,
    to_field_vector,
)
from .lattice import BoundExceeded, LatticeHNF, lambda_basis, lattice_membership
from .dynamics import (
    Address,
    DepthTooLarge,
    DigitSet,
    SRSParam,
    address_value,
    addresses,
    srs_preimages,
    surrogate,
)

_F_POINT_LIMIT = 2_000_000
_TREE_NODE_LIMIT = 1_000_000


# ---------------------------------------------------------------------------
# Small exact linear algebra helpers

def _fraction_inverse(cols):
    """Inverse of a square Fraction matrix given as a list of columns."""
    n = len(cols)
    a = [[cols[j][i] for j in range(n)] + [Fraction(int(i == k)) for k in range(n)]
         for i in range(n)]
    for col in range(n):
        piv = next(r for r in range(col, n) if a[r][col] != 0)
        a[col], a[piv] = a[piv], a[col]
        p = a[col][col]
        a[col] = [v / p for v in a[col]]
        for r in range(n):
            if r != col and a[r][col]:
                f = a[r][col]
                a[r] = [v - f * w for v, w in zip(a[r], a[col])]
    # return rows of the inverse
    return [row[n:] for row in a]


def _matvec(rows, v):
    return [sum(r * x for r, x in zip(row, v)) for row in rows]


# ---------------------------------------------------------------------------
# Archimedean hull of the digit tail

class ArchHull:
    """Per-place disc containing every tail sum d_{k+1}/alpha^(k+1) + ...

    Centers come from the digit centroid, radii from the maximal digit spread;
    both contract by |1/root| per extra level.  Standard complex modulus
    throughout; the squared-modulus convention only rescales exponents and is
    derived where needed.
    """

    def __init__(self, spec: PolynomialSpec, D: DigitSet, emb: EmbeddingData):
        self.emb = emb
        digit_vals = [
            place_values(to_field_vector(d, spec), emb) for d in D.digits
        ]
        centers = []
        radii = []
        contractions = []
        depth = 1
        while len(D.digits) ** (depth + 1) <= 200_000 and depth < 14:
            depth += 1
        for pi, place in enumerate(emb.places):
            w = 1.0 / place.root
            t = abs(w)
            vals = np.array([dv[pi] for dv in digit_vals], dtype=complex)
            mid = vals.mean()
            c = complex(mid * w / (1.0 - w))
            r = float(np.max(np.abs(vals - mid)) * t / (1.0 - t))
            # tighten through the depth-K set equation: the tail hull is
            # covered by |D|^K translates of its own t^K-contraction
            offs = np.zeros(1, dtype=complex)
            wj = 1.0
            for _ in range(depth):
                wj *= w
                offs = (offs[:, None] + wj * vals[None, :]).ravel()
            tk = t**depth
            for _ in range(60):
                ctr = offs + (w**depth) * c
                c2 = complex((ctr.real.min() + ctr.real.max()) / 2,
                             (ctr.imag.min() + ctr.imag.max()) / 2)
                r2 = float(np.max(np.abs(ctr - c2))) + tk * r + 1e-12
                if r2 >= r:
                    break
                c, r = c2, r2
            centers.append(c)
            radii.append(r)
            contractions.append(t)
        self.centers = tuple(centers)
        self.radii = tuple(radii)
        self.contractions = tuple(contractions)

    def cell_radius(self, k: int) -> float:
        """Distance bound (standard modulus, worst place) from a depth-k point
        to any point of its sub-tile."""
        return max(
            (abs(c) + r) * t**k
            for c, r, t in zip(self.centers, self.radii, self.contractions)
        )

    def place_boxes(self):
        """Per-place (lo, hi) box of the full tail hull (complex places give a
        square around the disc)."""
        out = []
        for c, r in zip(self.centers, self.radii):
            out.append((c, r))
        return out

    def arch_bbox(self) -> tuple:
        """(lows, highs) flattened to archimedean coordinates."""
        lows, highs = [], []
        for place, c, r in zip(self.emb.places, self.centers, self.radii):
            if place.is_real:
                lows.append(c.real - r)
                highs.append(c.real + r)
            else:
                lows.extend([c.real - r, c.imag - r])
                highs.extend([c.real + r, c.imag + r])
        return tuple(lows), tuple(highs)


def surrogate_radius(spec: PolynomialSpec, D: DigitSet, k: int) -> float:
    """Bound on the rendered inverse-base coordinate of a depth-k tail."""
    if spec.abs_an == 1:
        return 0.0
    return float(spec.abs_an) ** (D.m - k)


# ---------------------------------------------------------------------------
# Tile clouds

class TileCloud:
    """A depth-k point cloud: float views plus exact rational provenance."""

    def __init__(self, kind, translate, depth, labels, arch, surrogate_vals,
                 cell_radius, surrogate_radius, exact=None, exact_fn=None,
                 count=None):
        self.kind = kind
        self.translate = translate
        self.depth = depth
        self._labels = labels if not callable(labels) else None
        self._labels_fn = labels if callable(labels) else None
        arr = np.asarray(arch, dtype=float)
        n = count if count is not None else (
            len(self._labels) if self._labels is not None else arr.shape[0]
        )
        self._count = n
        if arr.size:
            arr = arr.reshape(n, -1)
        elif arr.ndim != 2:
            arr = arr.reshape(0, 1)
        self.arch = arr
        self.surrogate = np.asarray(surrogate_vals, dtype=float)
        self.cell_radius = float(cell_radius)
        self.surrogate_radius = float(surrogate_radius)
        self._exact = tuple(exact) if exact is not None else None
        self._exact_fn = exact_fn

    def __len__(self):
        return self._count

    def is_empty(self):
        return self._count == 0

    @property
    def labels(self):
        if self._labels is None:
            self._labels = tuple(self._labels_fn()) if self._labels_fn else ()
        return self._labels

    def exact_points(self):
        """Exact rational points (FieldVectors, or Fraction tuples for SRS)."""
        if self._exact is None:
            self._exact = tuple(self._exact_fn()) if self._exact_fn else ()
        return self._exact

    def points(self):
        labs = self.labels
        for i, lab in enumerate(labs):
            yield tuple(self.arch[i]), float(self.surrogate[i]), lab


# ---------------------------------------------------------------------------
# Kind F: digit expansions

def approximate_F(spec: PolynomialSpec, D: DigitSet, k: int,
                  translate: LaurentElem | None = None,
                  emb: EmbeddingData | None = None,
                  surrogate_digits: int | None = None,
                  limit: int = _F_POINT_LIMIT) -> TileCloud:
    """One point per depth-k address: translate + sum_j d_j alpha^(-j)."""
    if len(D) ** k > limit:
        raise DepthTooLarge(f"|D|^{k} exceeds limit {limit}")
    emb = emb or compute_embeddings(spec)
    hull = ArchHull(spec, D, emb)
    translate = translate or LaurentElem.zero()
    J = surrogate_digits if surrogate_digits is not None else k + 16

    seen = {}
    order = []
    for addr in addresses(D, k, limit):
        elem = translate
        for j, idx in enumerate(addr.word, start=1):
            elem = elem + D.digits[idx].shift(-j)
        fv = to_field_vector(elem, spec)
        if fv not in seen:
            seen[fv] = (addr.label(), elem)
            order.append(fv)
    labels = []
    arch = []
    surr = []
    for fv in order:
        lab, elem = seen[fv]
        labels.append(lab)
        arch.append(embed_arch(fv, emb))
        surr.append(surrogate(elem, spec, J).value if spec.abs_an > 1 else 0.0)
    tfv = to_field_vector(translate, spec)
    return TileCloud(
        "F", tfv, k, labels, arch, surr,
        hull.cell_radius(k), surrogate_radius(spec, D, k),
        exact=order,
    )


# ---------------------------------------------------------------------------
# Kind G: backward orbit trees in lattice coordinates

class _CoordSystem:
    """Integer-only preimage stepping inside a lattice basis."""

    def __init__(self, spec: PolynomialSpec, D: DigitSet, L: LatticeHNF):
        self.spec = spec
        self.L = L
        n = spec.degree
        basis = L.basis()
        cols = [list(b.coords) for b in basis]
        self.binv_rows = _fraction_inverse(cols)
        alpha = spec.alpha_fv()
        malpha_cols = [
            _matvec(self.binv_rows, list(spec.multiply(alpha, b).coords))
            for b in basis
        ]
        tvecs = [
            _matvec(self.binv_rows, list(to_field_vector(d, spec).coords))
            for d in D.digits
        ]
        den = 1
        for col in malpha_cols:
            for c in col:
                den = den * c.denominator // math.gcd(den, c.denominator)
        for t in tvecs:
            for c in t:
                den = den * c.denominator // math.gcd(den, c.denominator)
        self.q = den
        self.M = [[int(malpha_cols[j][i] * den) for j in range(n)] for i in range(n)]
        self.t = [[int(tv[i] * den) for i in range(n)] for tv in tvecs]
        self.n = n

    def coords_of(self, fv: FieldVector):
        v = _matvec(self.binv_rows, list(fv.coords))
        if any(c.denominator != 1 for c in v):
            return None
        return tuple(int(c) for c in v)

    def children(self, c):
        """(digit index, child coords) for every alpha*y + d inside the lattice."""
        n = self.n
        base = [sum(self.M[i][j] * c[j] for j in range(n)) for i in range(n)]
        out = []
        for di, t in enumerate(self.t):
            ok = True
            child = []
            for i in range(n):
                v = base[i] + t[i]
                if v % self.q:
                    ok = False
                    break
                child.append(v // self.q)
            if ok:
                out.append((di, tuple(child)))
        return out

    def fv_of(self, c) -> FieldVector:
        basis = self.L.basis()
        out = FieldVector.zero(self.n)
        for ci, b in zip(c, basis):
            if ci:
                out = out + b.scale(ci)
        return out


_COORD_CACHE: dict = {}


def _coord_system(spec, D, L) -> _CoordSystem:
    key = (spec.coeffs, D.digits, L.den, L.mat)
    if key not in _COORD_CACHE:
        _COORD_CACHE[key] = _CoordSystem(spec, D, L)
    return _COORD_CACHE[key]


def approximate_G(spec: PolynomialSpec, D: DigitSet, x: LaurentElem, k: int,
                  emb: EmbeddingData | None = None,
                  lattice: LatticeHNF | None = None,
                  with_surrogates: bool = False,
                  node_limit: int = _TREE_NODE_LIMIT) -> TileCloud:
    """Depth-k backward orbit tree of x inside the translation module, scaled
    down by alpha^k.  Empty iff x is outside the module or the tree dies.

    Points are ordered by their integer lattice coordinates; the point id is
    the coordinate tuple of the orbit endpoint (before the alpha^(-k) scale).
    """
    emb = emb or compute_embeddings(spec)
    L = lattice or lambda_basis(spec, D.m)
    hull = ArchHull(spec, D, emb)
    cs = _coord_system(spec, D, L)
    xfv = to_field_vector(x, spec)
    c0 = cs.coords_of(xfv)
    cell = hull.cell_radius(k)
    srad = surrogate_radius(spec, D, k)
    n = spec.degree

    if c0 is None:
        return TileCloud("G", xfv, k, (), np.zeros((0, n)), (), cell, srad)

    level = np.array([c0], dtype=np.int64)
    Mq = np.array(cs.M, dtype=np.int64)
    tq = np.array(cs.t, dtype=np.int64)
    q = cs.q
    total = 1
    for _ in range(k):
        base = level @ Mq.T
        parts = []
        for di in range(len(tq)):
            V = base + tq[di][None, :]
            mask = np.all(V % q == 0, axis=1)
            if mask.any():
                parts.append(V[mask] // q)
        if not parts:
            level = level[:0]
            break
        level = np.vstack(parts)
        total += len(level)
        if total > node_limit:
            raise BoundExceeded(f"preimage tree exceeded {node_limit} nodes")
        if np.abs(level).max() > 2**52:
            raise BoundExceeded("lattice coordinates exceed the exact int64 range")
    if len(level):
        level = level[np.lexsort(level.T[::-1])]

    coords = level
    if not len(coords):
        return TileCloud("G", xfv, k, (), np.zeros((0, n)), (), cell, srad)

    # float coordinates: per place, root^(-k) * (basis values . coords)
    basis = L.basis()
    V = np.array(
        [[place_values(b, emb)[pi] for b in basis] for pi in range(len(emb.places))],
        dtype=complex,
    )
    scal = np.array([p.root ** (-k) for p in emb.places], dtype=complex)
    vals = (V @ coords.T.astype(float)) * scal[:, None]  # places x N
    cols = []
    for pi, place in enumerate(emb.places):
        if place.is_real:
            cols.append(vals[pi].real)
        else:
            cols.append(vals[pi].real)
            cols.append(vals[pi].imag)
    arch = np.vstack(cols).T

    def labels_fn():
        return [",".join(str(int(v)) for v in c) for c in coords]

    def exact_fn():
        inv_k = spec.alpha_power_fv(-k)
        return [
            spec.multiply(inv_k, cs.fv_of([int(v) for v in c])) for c in coords
        ]

    if with_surrogates:
        lbasis = L.laurent_basis
        surr = []
        for c in coords:
            lau = LaurentElem.zero()
            for ci, g in zip(c, lbasis):
                if ci:
                    lau = lau + g.scale(int(ci))
            surr.append(surrogate(lau.shift(-k), spec, k + 16).value)
    else:
        surr = np.zeros(len(coords))

    return TileCloud("G", xfv, k, labels_fn, arch, surr, cell, srad,
                     exact_fn=exact_fn, count=len(coords))


# ---------------------------------------------------------------------------
# Kind SRS

def _mat_pow(rows, k):
    n = len(rows)
    out = [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    base = [list(r) for r in rows]
    for _ in range(k):
        out = [
            [sum(out[i][t] * base[t][j] for t in range(n)) for j in range(n)]
            for i in range(n)
        ]
    return out


def approximate_srs_tile(p: SRSParam, z, k: int,
                         node_limit: int = _TREE_NODE_LIMIT) -> TileCloud:
    """Points M^k z' over all depth-k tau-preimages z' of z."""
    level = [(tuple(z), "")]
    total = 1
    for _ in range(k):
        nxt = []
        for v, lab in level:
            for w in srs_preimages(p, v):
                nxt.append((w, f"{lab}.{w[0]}" if lab else str(w[0])))
        total += len(nxt)
        if total > node_limit:
            raise BoundExceeded(f"srs preimage tree exceeded {node_limit} nodes")
        level = nxt
        if not level:
            break

    Mk = _mat_pow(p.M, k)
    exact = []
    labels = []
    seen = set()
    for v, lab in level:
        pt = tuple(sum(Mk[i][j] * v[j] for j in range(p.n)) for i in range(p.n))
        if pt in seen:
            continue
        seen.add(pt)
        exact.append(pt)
        labels.append(lab)
    arch = np.array([[float(c) for c in pt] for pt in exact], dtype=float).reshape(
        len(exact), p.n
    )
    # tail bound: sum_{j>=k} |M^j e_n|
    Mf = np.array([[float(c) for c in row] for row in p.M])
    v = np.zeros(p.n)
    v[-1] = 1.0
    v = np.linalg.matrix_power(Mf, k) @ v if k else v
    radius = 0.0
    for _ in range(500):
        nrm = np.linalg.norm(v)
        radius += nrm
        if nrm < 1e-15:
            break
        v = Mf @ v
    zfv = FieldVector(tuple(Fraction(c) for c in z))
    return TileCloud("SRS", zfv, k, labels, arch,
                     [0.0] * len(exact), radius, 0.0, exact=exact)


# ---------------------------------------------------------------------------
# Slice decomposition (tower rendering)

class SliceEntry:
    """One slice: the tile at x, re-centered, at inverse-base height of -x."""

    def __init__(self, x_laurent, x_fv, height, cloud):
        self.x_laurent = x_laurent
        self.x_fv = x_fv
        self.height = height
        self.cloud = cloud


def slice_decomposition(spec: PolynomialSpec, D: DigitSet, k: int,
                        window=None, coeff_range: int = 3,
                        lattice: LatticeHNF | None = None,
                        emb: EmbeddingData | None = None) -> list[SliceEntry]:
    """Slices of the self-affine set: for translation points x in a coefficient
    box, the re-centered tile cloud of x paired with the rendered height of -x.

    ``window``, when given, keeps only slices whose height falls inside it.
    """
    from .lattice import laurent_from_field_vector, z_cap_lambda
    import itertools as _it

    emb = emb or compute_embeddings(spec)
    Lz = lattice or z_cap_lambda(spec, D, D.m)
    lam = lambda_basis(spec, D.m)
    out = []
    lbasis = Lz.laurent_basis
    if not lbasis:
        lbasis = tuple(
            laurent_from_field_vector(spec, b) for b in Lz.basis()
        )
        if any(g is None for g in lbasis):
            raise BoundExceeded("no bounded Laurent representative for a basis vector")
    for coeffs in _it.product(range(-coeff_range, coeff_range + 1), repeat=spec.degree):
        x = LaurentElem.zero()
        for c, g in zip(coeffs, lbasis):
            if c:
                x = x + g.scale(c)
        height = surrogate(-x, spec, 32).value if spec.abs_an > 1 else 0.0
        if window is not None and not (window[0] <= height <= window[1]):
            continue
        cloud = approximate_G(spec, D, x, k, emb=emb, lattice=lam)
        if not cloud.is_empty():
            shift = np.array(embed_arch(to_field_vector(x, spec), emb))
            cloud.arch = cloud.arch - shift[None, :]
        out.append(SliceEntry(x, to_field_vector(x, spec), height, cloud))
    return out
