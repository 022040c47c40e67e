"""Verification of tiling properties at desk scale.

The tiling certificate follows the exclusive-point route: an over-approximated
neighbor set (every translation-lattice point whose embedding can meet the
central tile) whose backward orbits all reach 0 simultaneously.  Certificates
are independently re-checkable by pure digit-map iteration.  Covering
multiplicity and volume balance are seeded Monte Carlo estimates against
outer approximations of the slice tiles.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.spatial import cKDTree

from .exactnum import (
    EmbeddingData,
    FieldVector,
    LaurentElem,
    PolynomialSpec,
    compute_embeddings,
    embed_arch,
    laurent_to_str,
    parse_laurent,
    place_values,
    reduce_bottom,
    to_field_vector,
)
from .lattice import (
    BoundExceeded,
    LatticeHNF,
    lambda_basis,
    lattice_membership,
    laurent_from_field_vector,
    z_cap_lambda,
)
from .dynamics import Address, DigitSet, T_alpha, validate_digits
from .tiles import ArchHull, TileCloud, _fraction_inverse, _matvec, approximate_G


class VerifyError(Exception):
    pass


class BudgetExceeded(VerifyError):
    pass


# ---------------------------------------------------------------------------
# Shared lattice-point helpers

def _laurent_of_coords(spec, L: LatticeHNF, coords) -> LaurentElem:
    if L.laurent_basis:
        out = LaurentElem.zero()
        for c, g in zip(coords, L.laurent_basis):
            if c:
                out = out + g.scale(c)
        return out
    fv = FieldVector.zero(spec.degree)
    for c, b in zip(coords, L.basis()):
        if c:
            fv = fv + b.scale(c)
    lau = laurent_from_field_vector(spec, fv)
    if lau is None:
        raise VerifyError("no Laurent representative for lattice point")
    return lau


def _embedding_matrix(L: LatticeHNF, emb: EmbeddingData) -> np.ndarray:
    """Columns are archimedean images of the basis vectors."""
    return np.array([embed_arch(b, emb) for b in L.basis()], dtype=float).T


def _lattice_points_in_box(L: LatticeHNF, emb: EmbeddingData, lows, highs,
                           margin: float = 1e-9):
    """(coeffs, arch) for every lattice point embedded inside the box."""
    E = _embedding_matrix(L, emb)
    n = E.shape[1]
    Einv = np.linalg.inv(E)
    mags = np.maximum(np.abs(np.asarray(lows)), np.abs(np.asarray(highs)))
    bounds = np.abs(Einv) @ mags
    ranges = [range(-int(b) - 1, int(b) + 2) for b in bounds]
    lows = np.asarray(lows) - margin
    highs = np.asarray(highs) + margin
    out = []
    for coeffs in itertools.product(*ranges):
        arch = E @ np.array(coeffs, dtype=float)
        if np.all(arch >= lows) and np.all(arch <= highs):
            out.append((coeffs, arch))
    out.sort(key=lambda t: t[0])
    return out


def _place_vals_from_arch(emb: EmbeddingData, arch):
    vals = []
    i = 0
    for p in emb.places:
        if p.is_real:
            vals.append(complex(arch[i], 0.0))
            i += 1
        else:
            vals.append(complex(arch[i], arch[i + 1]))
            i += 2
    return vals


def _lattice_points_in_hull(L: LatticeHNF, emb: EmbeddingData, hull: ArchHull,
                            margin: float = 1e-9):
    """Lattice points whose embedding lies in the per-place hull discs."""
    lows, highs = hull.arch_bbox()
    picked = []
    for coeffs, arch in _lattice_points_in_box(L, emb, lows, highs, margin):
        vals = _place_vals_from_arch(emb, arch)
        ok = True
        for v, c, r in zip(vals, hull.centers, hull.radii):
            if abs(v - c) > r + margin:
                ok = False
                break
        if ok:
            picked.append((coeffs, arch))
    return picked


# ---------------------------------------------------------------------------
# Standalone digit report

def check_standard(spec: PolynomialSpec, D: DigitSet) -> bool:
    """Whether the digits form a complete residue system modulo alpha Z[alpha]."""
    return D.is_standard


# ---------------------------------------------------------------------------
# Forward orbit machinery (integer coordinates in a lattice basis)

class _OrbitSystem:
    """Digit-map iteration in integer lattice coordinates, with memoized
    steps-to-zero."""

    def __init__(self, spec: PolynomialSpec, D: DigitSet, L: LatticeHNF):
        self.spec = spec
        self.D = D
        self.L = L
        n = spec.degree
        basis = L.basis()
        cols = [list(b.coords) for b in basis]
        binv = _fraction_inverse(cols)
        inv_alpha = spec.alpha_inverse_fv()
        minv_cols = [
            _matvec(binv, list(spec.multiply(inv_alpha, b).coords)) for b in basis
        ]
        tvecs = [
            _matvec(binv, list(to_field_vector(d, spec).coords)) for d in D.digits
        ]
        den = 1
        for col in minv_cols:
            for c in col:
                den = den * c.denominator // math.gcd(den, c.denominator)
        for t in tvecs:
            for c in t:
                den = den * c.denominator // math.gcd(den, c.denominator)
        self.q = den
        self.Minv = [[int(minv_cols[j][i] * den) for j in range(n)] for i in range(n)]
        self.t = [[int(tv[i] * den) for i in range(n)] for tv in tvecs]
        assert L.laurent_basis, "orbit system needs Laurent representatives"
        self.res = [
            reduce_bottom(g, spec).rep.constant_coeff() % spec.abs_a0
            for g in L.laurent_basis
        ]
        self.res_to_digit = {}
        for i, r in enumerate(D.residues):
            self.res_to_digit[r] = i
        self.n = n
        self._steps: dict = {}

    def step(self, c):
        """(T(x) coords, digit index) for x with lattice coordinates c."""
        r = sum(ci * ri for ci, ri in zip(c, self.res)) % self.spec.abs_a0
        di = self.res_to_digit[r]
        td = self.t[di]
        u = [self.q * ci - ti for ci, ti in zip(c, td)]
        out = []
        q2 = self.q * self.q
        for i in range(self.n):
            v = sum(self.Minv[i][j] * u[j] for j in range(self.n))
            assert v % q2 == 0, "digit map left the lattice"
            out.append(v // q2)
        return tuple(out), di

    def steps_to_zero(self, c, cap: int = 4096):
        """Number of iterations to reach 0, or None if the orbit cycles away."""
        c = tuple(c)
        path = []
        seen = set()
        while True:
            if c in self._steps:
                base = self._steps[c]
                break
            if all(v == 0 for v in c):
                base = 0
                break
            if c in seen or len(path) > cap:
                base = None
                break
            seen.add(c)
            path.append(c)
            c, _ = self.step(c)
        for i, p in enumerate(reversed(path), start=1):
            self._steps[p] = None if base is None else base + i
        return None if base is None else base + len(path)

    def orbit(self, c, k: int):
        out = [tuple(c)]
        for _ in range(k):
            c, _ = self.step(c)
            out.append(tuple(c))
        return out


# ---------------------------------------------------------------------------
# Tiling certificates

@dataclass(frozen=True)
class TilingCertificate:
    """Exclusive-point witness: all orbits of z + Y hit 0 by step k."""

    z: LaurentElem
    k: int
    Y: tuple  # LaurentElem neighbor set (over-approximation, includes 0)
    orbits: tuple  # tuple of tuples of laurent strings, aligned with Y
    point_arch: tuple  # embedding of alpha^(-k) z, the exclusive point

    def to_json(self) -> dict:
        return {
            "z": laurent_to_str(self.z),
            "k": self.k,
            "Y": [laurent_to_str(y) for y in self.Y],
            "orbits": [list(o) for o in self.orbits],
            "point": list(self.point_arch),
        }


def find_exclusive_point(spec: PolynomialSpec, D: DigitSet,
                         budget: float = 60.0,
                         emb: EmbeddingData | None = None,
                         shell_max: int = 24) -> TilingCertificate:
    """Search lattice translates z and depths k until every orbit of z + Y
    terminates at 0; Y over-approximates the neighbors meeting the central
    tile, which keeps the certificate sound."""
    if not D.is_standard:
        raise VerifyError("certificate search requires a standard digit set")
    emb = emb or compute_embeddings(spec)
    lam = lambda_basis(spec, D.m)
    Lz = z_cap_lambda(spec, D, D.m)
    hull = ArchHull(spec, D, emb)
    ys = _lattice_points_in_hull(Lz, emb, hull)

    # express neighbor points in the Lambda basis (Lz is a submodule of it)
    y_lam_coords = []
    for coeffs, _ in ys:
        fv = FieldVector.zero(spec.degree)
        for c, b in zip(coeffs, Lz.basis()):
            if c:
                fv = fv + b.scale(c)
        lc = lattice_membership(fv, lam)
        assert lc is not None
        y_lam_coords.append(lc)

    osys = _OrbitSystem(spec, D, lam)
    ez = _embedding_matrix(Lz, emb)
    t0 = time.monotonic()
    n = spec.degree
    for shell in range(shell_max + 1):
        for zc in sorted(itertools.product(range(-shell, shell + 1), repeat=n)):
            if max((abs(v) for v in zc), default=0) != shell:
                continue
            if time.monotonic() - t0 > budget:
                raise BudgetExceeded("certificate search budget exhausted")
            zfv = FieldVector.zero(n)
            for c, b in zip(zc, Lz.basis()):
                if c:
                    zfv = zfv + b.scale(c)
            z_lam = lattice_membership(zfv, lam)
            steps = []
            ok = True
            for yc in y_lam_coords:
                s = osys.steps_to_zero(tuple(a + b for a, b in zip(z_lam, yc)))
                if s is None:
                    ok = False
                    break
                steps.append(s)
            if not ok:
                continue
            k = max(steps + [osys.steps_to_zero(z_lam)])
            z_lau = _laurent_of_coords(spec, Lz, zc)
            y_laus = tuple(_laurent_of_coords(spec, Lz, yc) for yc, _ in ys)
            orbits = []
            for yc in y_lam_coords:
                orb = osys.orbit(tuple(a + b for a, b in zip(z_lam, yc)), k)
                orbits.append(
                    tuple(
                        laurent_to_str(_laurent_of_coords(spec, lam, c)) for c in orb
                    )
                )
            pt = spec.multiply(spec.alpha_power_fv(-k), zfv)
            return TilingCertificate(
                z=z_lau, k=k, Y=y_laus, orbits=tuple(orbits),
                point_arch=tuple(embed_arch(pt, emb)),
            )
    raise BudgetExceeded(f"no certificate within {shell_max} coefficient shells")


def verify_certificate(spec: PolynomialSpec, D: DigitSet,
                       cert: TilingCertificate) -> bool:
    """Independent re-check: pure digit-map iteration on Laurent elements must
    reproduce every transcript orbit and end at 0 at step k."""
    zero = FieldVector.zero(spec.degree)
    for y, orbit in zip(cert.Y, cert.orbits):
        x = reduce_bottom(cert.z + y, spec).rep
        for j in range(cert.k + 1):
            want = parse_laurent(orbit[j])
            if to_field_vector(x, spec) != to_field_vector(want, spec):
                return False
            if j < cert.k:
                x, _ = T_alpha(x, spec, D)
        if to_field_vector(x, spec) != zero:
            return False
    # z itself must also die at 0 (z = z + 0 is usually in Y; check anyway)
    x = reduce_bottom(cert.z, spec).rep
    for _ in range(cert.k):
        x, _ = T_alpha(x, spec, D)
    return to_field_vector(x, spec) == zero


# ---------------------------------------------------------------------------
# Image characterization

@dataclass(frozen=True)
class ImageCharacterization:
    """Residues (in units of the lattice generator) of points whose depth-k
    backward tree inside the lattice is non-empty."""

    level: int
    modulus: int           # |a_n|^k
    unit: Fraction         # lattice generator (rank-1 case)
    residues: tuple        # sorted unit-multipliers j in [0, modulus)

    def attained_mod(self, q: int):
        """Residues of the actual lattice elements modulo q (integer unit)."""
        if self.unit.denominator != 1:
            raise VerifyError("integer residues need an integer lattice generator")
        u = int(self.unit)
        return tuple(sorted({(u * j) % q for j in self.residues}))

    def as_integers(self):
        u = int(self.unit)
        return tuple(u * j for j in self.residues)


def image_characterization(spec: PolynomialSpec, D: DigitSet, k: int,
                           coeff_window: int = 3):
    """Exact residue description of the k-th forward image of the translation
    module (rank 1); higher ranks return the surviving points in a window."""
    lam = lambda_basis(spec, D.m)
    if spec.degree == 1:
        unit = lam.basis()[0].coords[0]
        if unit < 0:
            unit = -unit
        an = spec.abs_an
        alpha = Fraction(-spec.a0, spec.an)
        dvals = [to_field_vector(d, spec).coords[0] for d in D.digits]
        memo: dict = {}

        def alive(j: Fraction, depth: int) -> bool:
            if depth == 0:
                return True
            key = (depth, j % (an**depth))
            if key in memo:
                return memo[key]
            x = unit * j
            ok = False
            for dv in dvals:
                y = alpha * x + dv
                jj = y / unit
                if jj.denominator == 1:
                    if alive(int(jj), depth - 1):
                        ok = True
                        break
            memo[key] = ok
            return ok

        mod = an**k
        residues = tuple(j for j in range(mod) if alive(j, k))
        return ImageCharacterization(k, mod, unit, residues)

    # general rank: surviving points within a coefficient window
    out = []
    for coeffs in itertools.product(range(-coeff_window, coeff_window + 1),
                                    repeat=spec.degree):
        x = _laurent_of_coords(spec, lam, coeffs)
        cloud = approximate_G(spec, D, x, k)
        if not cloud.is_empty():
            out.append(coeffs)
    return tuple(out)


# ---------------------------------------------------------------------------
# Covering multiplicity

@dataclass(frozen=True)
class MultiplicityReport:
    samples: int
    histogram: dict
    depth: int
    seed: int
    window: tuple
    mode: int
    mode_fraction: float

    def to_json(self) -> dict:
        return {
            "samples": self.samples,
            "histogram": {str(k): v for k, v in sorted(self.histogram.items())},
            "depth": self.depth,
            "seed": self.seed,
            "mode": self.mode,
            "mode_fraction": self.mode_fraction,
        }


def _covering_counts(spec, D, pts, k, emb, lam, Lz, hull):
    """For each sample point, the number of translate tiles whose depth-k
    outer approximation contains it."""
    lows = pts.min(axis=0)
    highs = pts.max(axis=0)
    hlo, hhi = hull.arch_bbox()
    xlo = lows - np.asarray(hhi)
    xhi = highs - np.asarray(hlo)
    counts = np.zeros(len(pts), dtype=int)
    # per-place refined cell geometry at depth k
    off_places = [c * (1.0 / p.root) ** k for c, p in zip(hull.centers, emb.places)]
    offset = []
    for p, o in zip(emb.places, off_places):
        if p.is_real:
            offset.append(o.real)
        else:
            offset.extend([o.real, o.imag])
    offset = np.array(offset)
    radius = max(
        r * t**k for r, t in zip(hull.radii, hull.contractions)
    )
    for coeffs, _ in _lattice_points_in_box(Lz, emb, xlo, xhi):
        x = _laurent_of_coords(spec, Lz, coeffs)
        cloud = approximate_G(spec, D, x, k, emb=emb, lattice=lam)
        if cloud.is_empty():
            continue
        tree = cKDTree(cloud.arch + offset[None, :])
        dist, _ = tree.query(pts, k=1, p=np.inf,
                             distance_upper_bound=radius + 1e-12)
        counts += np.isfinite(dist)
    return counts


def estimate_multiplicity(spec: PolynomialSpec, D: DigitSet, samples: int,
                          k: int, seed: int,
                          window=None,
                          emb: EmbeddingData | None = None) -> MultiplicityReport:
    """Seeded Monte Carlo covering count over translates in the window."""
    emb = emb or compute_embeddings(spec)
    lam = lambda_basis(spec, D.m)
    Lz = z_cap_lambda(spec, D, D.m)
    hull = ArchHull(spec, D, emb)
    if window is None:
        window = hull.arch_bbox()
    lows, highs = np.asarray(window[0], dtype=float), np.asarray(window[1], dtype=float)
    rng = np.random.default_rng(seed)
    pts = rng.uniform(lows, highs, size=(samples, len(lows)))
    counts = _covering_counts(spec, D, pts, k, emb, lam, Lz, hull)
    hist: dict = {}
    for c in counts:
        hist[int(c)] = hist.get(int(c), 0) + 1
    mode = max(hist, key=lambda m: hist[m])
    return MultiplicityReport(
        samples=samples, histogram=hist, depth=k, seed=seed,
        window=(tuple(lows), tuple(highs)),
        mode=mode, mode_fraction=hist[mode] / samples,
    )


# ---------------------------------------------------------------------------
# Volume balance

@dataclass(frozen=True)
class VolumeReport:
    ratio: float
    density: float
    depth: int
    seed: int
    samples: int

    def to_json(self) -> dict:
        return {"ratio": self.ratio, "density": self.density,
                "depth": self.depth, "seed": self.seed,
                "samples": self.samples}


def volume_balance(spec: PolynomialSpec, D: DigitSet, k: int,
                   window=None, seed: int = 0, mc_samples: int = 40000,
                   emb: EmbeddingData | None = None) -> VolumeReport:
    """(average outer tile volume inside the window) x (lattice density).

    Summing the clipped tile volumes over all translates equals integrating
    the covering count over the window, so the ratio is estimated as the mean
    covering multiplicity of a seeded uniform sample.  A tiling gives 1 up to
    the outer-approximation collar; an everywhere-double covering gives 2.
    """
    emb = emb or compute_embeddings(spec)
    lam = lambda_basis(spec, D.m)
    Lz = z_cap_lambda(spec, D, D.m)
    hull = ArchHull(spec, D, emb)
    if window is None:
        window = hull.arch_bbox()
    lows = np.asarray(window[0], dtype=float)
    highs = np.asarray(window[1], dtype=float)
    rng = np.random.default_rng(seed)
    pts = rng.uniform(lows, highs, size=(mc_samples, len(lows)))
    counts = _covering_counts(spec, D, pts, k, emb, lam, Lz, hull)
    E = _embedding_matrix(Lz, emb)
    covol = abs(float(np.linalg.det(E)))
    return VolumeReport(ratio=float(counts.mean()), density=1.0 / covol,
                        depth=k, seed=seed, samples=mc_samples)


# ---------------------------------------------------------------------------
# Almost periodicity

@dataclass(frozen=True)
class HausdorffReport:
    distance: float          # standard euclidean metric
    distance_paper: float    # per-place absolute values (squared on complex places)
    level: int               # largest shift with x - y inside the sublattice
    empirical_constant: float
    bound_ok: bool
    depth: int


def _hausdorff(a: np.ndarray, b: np.ndarray) -> float:
    ta, tb = cKDTree(a), cKDTree(b)
    d1, _ = tb.query(a, k=1)
    d2, _ = ta.query(b, k=1)
    return float(max(d1.max(), d2.max()))


def hausdorff_report(spec: PolynomialSpec, D: DigitSet,
                     x: LaurentElem, y: LaurentElem, k: int,
                     emb: EmbeddingData | None = None,
                     level_cap: int = 16) -> HausdorffReport:
    """Hausdorff distance between the re-centered tiles of x and y at matched
    depth, with the exact lattice level of x - y and the empirical constant."""
    emb = emb or compute_embeddings(spec)
    lam = lambda_basis(spec, D.m, bound=max(8, level_cap + abs(D.m)))
    hull = ArchHull(spec, D, emb)
    cx = approximate_G(spec, D, x, k, emb=emb, lattice=lam)
    cy = approximate_G(spec, D, y, k, emb=emb, lattice=lam)
    if cx.is_empty() or cy.is_empty():
        raise VerifyError("empty tile in Hausdorff comparison")
    ax = cx.arch - np.asarray(embed_arch(to_field_vector(x, spec), emb))[None, :]
    ay = cy.arch - np.asarray(embed_arch(to_field_vector(y, spec), emb))[None, :]
    dist = _hausdorff(ax, ay)

    if emb.r_count == 0 and emb.s_count == 1:
        dist_paper = dist * dist  # single complex place: squared modulus
    elif emb.s_count == 0:
        dist_paper = dist
    else:
        dist_paper = float("nan")

    diff = to_field_vector(x, spec) - to_field_vector(y, spec)
    level = 0
    while level < level_cap:
        try:
            sub = lambda_basis(spec, D.m - (level + 1),
                               bound=max(8, level_cap + abs(D.m)))
        except BoundExceeded:
            break
        if lattice_membership(diff, sub) is None:
            break
        level += 1

    contraction = emb.contraction
    empirical = dist / contraction ** (-level) if level else dist
    bound = 2 * hull.cell_radius(level) + 2 * hull.cell_radius(k)
    return HausdorffReport(
        distance=dist, distance_paper=dist_paper, level=level,
        empirical_constant=empirical, bound_ok=dist <= bound, depth=k,
    )


# ---------------------------------------------------------------------------
# Greedy witness

def greedy_point(spec: PolynomialSpec, D: DigitSet, x: LaurentElem,
                 length: int = 16) -> Address | None:
    """Forward greedy digit sequence keeping the orbit inside the translation
    module; a witness that the tile of x is non-empty.  None when x is outside
    the module or the greedy step gets stuck (possible only without a complete
    shifted residue system)."""
    lam = lambda_basis(spec, D.m)
    if lattice_membership(to_field_vector(x, spec), lam) is None:
        return None
    z = reduce_bottom(x, spec).rep
    word = []
    for _ in range(length):
        found = None
        for i, d in enumerate(D.digits):
            cand = z.shift(1) + d
            rep = reduce_bottom(cand, spec).rep
            if lattice_membership(to_field_vector(rep, spec), lam) is not None:
                found = (rep, i)
                break
        if found is None:
            return None
        z, i = found
        word.append(i)
    return Address(tuple(word))
