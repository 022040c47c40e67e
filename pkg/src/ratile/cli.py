"""Command-line front end: problem files, analysis reports, tile rendering
(CSV/SVG), verification runs, and the three canned figure reproductions.

Exit codes: 0 ok / tiling certified, 2 invalid input, 3 inconclusive within
budget, 4 internal invariant violation.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .exactnum import (
    ExactNumError,
    LaurentElem,
    LaurentSyntaxError,
    compute_embeddings,
    embed_arch,
    laurent_to_str,
    parse_laurent,
    schur_cohn_table,
    dominant_constant_condition,
    to_field_vector,
    validate_spec,
)
from .lattice import (
    IndexLawViolation,
    LatticeError,
    check_primitivity,
    lambda_basis,
    z_cap_lambda,
)
from .dynamics import DynamicsError, DigitSet, surrogate, validate_digits
from .tiles import approximate_F, approximate_G, approximate_srs_tile, slice_decomposition
from .dynamics import srs_param
from .verify import (
    BudgetExceeded,
    estimate_multiplicity,
    find_exclusive_point,
    verify_certificate,
    volume_balance,
)


EXIT_OK = 0
EXIT_INVALID = 2
EXIT_INCONCLUSIVE = 3
EXIT_INTERNAL = 4


class ProblemError(Exception):
    pass


@dataclass
class Problem:
    spec: object
    digits: DigitSet
    limits: dict
    raw: dict


_BUILTIN = {
    "ex1": {"coefficients": [-3, 2], "digits": ["0", "1", "2"]},
    "ex2": {"coefficients": [3, 2, 2], "digits": ["0", "1", "2"]},
    "ex3": {"coefficients": [-4, 3], "digits": ["0", "1", "2", "a - 1"]},
}


def load_problem(source) -> Problem:
    """Parse a problem description (path, builtin name, or dict)."""
    if isinstance(source, str):
        if source in _BUILTIN:
            data = dict(_BUILTIN[source])
        else:
            try:
                with open(source) as fh:
                    data = json.load(fh)
            except OSError as e:
                raise ProblemError(f"cannot read problem file: {e}")
            except json.JSONDecodeError as e:
                raise ProblemError(f"problem file is not valid JSON: {e}")
    else:
        data = dict(source)
    if "coefficients" not in data:
        raise ProblemError("missing field 'coefficients'")
    coeffs = data["coefficients"]
    if (not isinstance(coeffs, list) or not coeffs
            or not all(isinstance(c, int) for c in coeffs)):
        raise ProblemError("field 'coefficients' must be a non-empty integer list")
    try:
        spec = validate_spec(coeffs)
    except ExactNumError as e:
        raise ProblemError(f"field 'coefficients': {type(e).__name__}: {e}")
    if "digits" not in data:
        raise ProblemError("missing field 'digits'")
    try:
        laurents = [parse_laurent(s) for s in data["digits"]]
    except (LaurentSyntaxError, TypeError) as e:
        raise ProblemError(f"field 'digits': {e}")
    m_override = data.get("m_override")
    if m_override is not None and not isinstance(m_override, int):
        raise ProblemError("field 'm_override' must be an integer")
    try:
        digits = validate_digits(spec, laurents, m_override=m_override)
    except DynamicsError as e:
        raise ProblemError(f"field 'digits': {type(e).__name__}: {e}")
    limits = data.get("limits") or {}
    return Problem(spec=spec, digits=digits, limits=limits, raw=data)


# ---------------------------------------------------------------------------
# Worker pool (deterministic ordered merge)

def _threads() -> int:
    try:
        return max(1, int(os.environ.get("RATILE_THREADS", "1")))
    except ValueError:
        return 1


def pmap(fn, items):
    """Order-preserving map, parallel across processes when RATILE_THREADS > 1."""
    items = list(items)
    w = _threads()
    if w <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=w) as ex:
        return list(ex.map(fn, items))


# ---------------------------------------------------------------------------
# SVG / CSV emitters

_PALETTE = [
    "#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3", "#937860",
    "#da8bc3", "#8c8c8c", "#ccb974", "#64b5cd", "#5975a4", "#cc8963",
    "#5f9e6e", "#b55d60", "#857aab", "#8d7866", "#d095bf", "#766f6f",
    "#b8a458", "#5b9dbd",
]


def color_for(i: int) -> str:
    return _PALETTE[i % len(_PALETTE)]


def _fmt(x: float) -> str:
    return f"{x:.6g}"


def write_svg(path, layers, width=900, height=700, point_px=1.6):
    """Layers: (Nx2 array, color) tuples; a fixed-palette scatter plot."""
    pts = [la for la, _ in layers if len(la)]
    if pts:
        allpts = np.vstack(pts)
        lo = allpts.min(axis=0)
        hi = allpts.max(axis=0)
    else:
        lo = np.zeros(2)
        hi = np.ones(2)
    data_lo, data_hi = lo.copy(), hi.copy()
    span = np.maximum(hi - lo, 1e-9)
    pad = 0.04 * span
    lo, hi = lo - pad, hi + pad
    span = hi - lo
    scale = min((width - 20) / span[0], (height - 20) / span[1])

    def map_pt(p):
        x = 10 + (p[0] - lo[0]) * scale
        y = height - 10 - (p[1] - lo[1]) * scale
        return x, y

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]
    for arr, color in layers:
        if not len(arr):
            continue
        out.append(f'<g fill="{color}">')
        for p in arr:
            x, y = map_pt(p)
            out.append(f'<circle cx="{_fmt(x)}" cy="{_fmt(y)}" r="{point_px}"/>')
        out.append("</g>")
    out.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(out))
    return {"bbox": [list(map(float, data_lo)), list(map(float, data_hi))],
            "layers": len(layers)}


def write_cloud_csv(path, clouds_with_translate, dim: int):
    """CSV rows: kind, translate, address, arch_1..arch_dim, surrogate, radius."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(
            ["kind", "translate", "address"]
            + [f"arch_{i+1}" for i in range(dim)]
            + ["surrogate", "radius"]
        )
        for tr_str, cloud in clouds_with_translate:
            for arch, surr, label in cloud.points():
                w.writerow(
                    [cloud.kind, tr_str, label]
                    + [repr(float(a)) for a in arch]
                    + [repr(float(surr)), repr(cloud.cell_radius)]
                )


# ---------------------------------------------------------------------------
# analyze

def cmd_analyze(args) -> int:
    try:
        prob = load_problem(args.problem)
    except ProblemError as e:
        print(json.dumps({"error": str(e)}), file=sys.stderr)
        return EXIT_INVALID
    spec, D = prob.spec, prob.digits
    emb = compute_embeddings(spec)
    lattices = {}
    for m in range(D.m - 2, D.m + 3):
        L = lambda_basis(spec, m)
        lattices[f"Lambda({m})"] = {
            **L.to_json(),
            "basis": [laurent_to_str(g) for g in L.laurent_basis],
            "det": str(L.det()),
        }
    prim = check_primitivity(spec, D)
    Lz = z_cap_lambda(spec, D, D.m)
    report = {
        "polynomial": {
            "coefficients": list(spec.coeffs),
            "degree": spec.degree,
            "abs_a0": spec.abs_a0,
            "abs_an": spec.abs_an,
            "irreducibility": spec.irreducibility_status,
            "expanding": True,
            "schur_cohn_table": [[str(a), str(b)] for a, b in
                                 schur_cohn_table(spec.coeffs)],
            "dominant_constant_sufficient": dominant_constant_condition(spec.coeffs),
        },
        "embeddings": {
            "roots": [[p.root.real, p.root.imag] for p in emb.places],
            "real_places": emb.r_count,
            "complex_places": emb.s_count,
            "contraction": emb.contraction,
        },
        "digits": {
            "count": len(D),
            "m": D.m,
            "standard": D.is_standard,
            "residue_system": D.has_residue_system,
            "residues_mod_a0": list(D.residues),
            "translation": laurent_to_str(D.translation) if D.translation else None,
        },
        "lattices": lattices,
        "primitivity": {
            "status": "primitive" if prim.primitive else "unknown",
            "certificate": [list(t) for t in prim.certificate],
            "cap": prim.cap,
        },
        "translation_lattice": Lz.to_json(),
    }
    if spec.irreducibility_status == "asserted":
        report["warnings"] = [
            "irreducibility asserted, not verified (degree exceeds 4)"
        ]
    text = json.dumps(report, indent=2)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        print(text)
    return EXIT_OK


# ---------------------------------------------------------------------------
# tile

def _parse_translates(args, spec):
    out = []
    for t in args.translate or []:
        try:
            out.append(parse_laurent(t))
        except LaurentSyntaxError as e:
            raise ProblemError(f"bad translate {t!r}: {e}")
    if not out:
        out = [LaurentElem.zero()]
    return out


def cmd_tile(args) -> int:
    try:
        prob = load_problem(args.problem)
        spec, D = prob.spec, prob.digits
        emb = compute_embeddings(spec)
        kind = args.kind
        depth = args.depth
        clouds = []
        if kind == "F":
            for t in _parse_translates(args, spec):
                clouds.append((laurent_to_str(t),
                               approximate_F(spec, D, depth, translate=t, emb=emb)))
        elif kind == "G":
            for t in _parse_translates(args, spec):
                clouds.append((laurent_to_str(t),
                               approximate_G(spec, D, t, depth, emb=emb,
                                             with_surrogates=True)))
        elif kind == "srs":
            p = srs_param(spec)
            zs = []
            for t in args.translate or ["0," * (spec.degree - 1) + "0"]:
                zs.append(tuple(int(v) for v in t.split(",")))
            for z in zs:
                clouds.append((",".join(str(v) for v in z),
                               approximate_srs_tile(p, z, depth)))
        else:
            raise ProblemError(f"unknown tile kind {kind!r}")
    except ProblemError as e:
        print(json.dumps({"error": str(e)}), file=sys.stderr)
        return EXIT_INVALID

    dim = spec.degree
    if args.format == "csv":
        write_cloud_csv(args.out, clouds, dim)
    else:
        layers = []
        for i, (_, cloud) in enumerate(clouds):
            if cloud.is_empty():
                layers.append((np.zeros((0, 2)), color_for(i)))
                continue
            if dim == 1:
                pts = np.column_stack([cloud.arch[:, 0], cloud.surrogate])
            else:
                pts = cloud.arch[:, :2]
            layers.append((pts, color_for(i)))
        write_svg(args.out, layers)
    print(json.dumps({"written": args.out,
                      "clouds": len(clouds),
                      "points": int(sum(len(c) for _, c in clouds))}))
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify

def cmd_verify(args) -> int:
    try:
        prob = load_problem(args.problem)
    except ProblemError as e:
        print(json.dumps({"error": str(e)}), file=sys.stderr)
        return EXIT_INVALID
    spec, D = prob.spec, prob.digits
    emb = compute_embeddings(spec)
    report = {"seed": args.seed}
    code = EXIT_OK
    try:
        cert = find_exclusive_point(spec, D, budget=args.budget, emb=emb)
        ok = verify_certificate(spec, D, cert)
        report["certificate"] = cert.to_json()
        report["certificate_verified"] = bool(ok)
        if not ok:
            code = EXIT_INTERNAL
    except BudgetExceeded as e:
        report["certificate"] = None
        report["certificate_verified"] = False
        report["inconclusive"] = str(e)
        code = EXIT_INCONCLUSIVE

    mult = estimate_multiplicity(spec, D, args.samples, args.depth, args.seed, emb=emb)
    report["multiplicity"] = mult.to_json()
    vol = volume_balance(spec, D, args.depth, seed=args.seed, emb=emb)
    report["volume"] = vol.to_json()
    text = json.dumps(report, indent=2)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        print(text)
    return code


# ---------------------------------------------------------------------------
# figures

def _half_integer(j: int) -> LaurentElem:
    # j/2 expressed through the ex1 root: j/2 = j*(alpha - 1)
    return LaurentElem({1: j, 0: -j})


def figure_ex1(outdir: str, depth: int = 6) -> dict:
    """Sixteen translated copies of the base tile over half-integers,
    rendered as (archimedean, inverse-base) points."""
    prob = load_problem("ex1")
    spec, D = prob.spec, prob.digits
    emb = compute_embeddings(spec)
    layers = []
    translates = []

    def build(j):
        t = _half_integer(j)
        cloud = approximate_F(spec, D, depth, translate=t, emb=emb)
        return np.column_stack([cloud.arch[:, 0], cloud.surrogate])

    js = list(range(-5, 11))
    for i, pts in enumerate(pmap(_Fig1Worker(depth) if _threads() > 1 else build, js)):
        layers.append((pts, color_for(i)))
        translates.append(js[i])
    path = os.path.join(outdir, "ex1_tiles.svg")
    meta = write_svg(path, layers)
    return {"file": path, "translates": len(translates), **meta}


class _Fig1Worker:
    """Picklable per-translate worker for the first figure."""

    def __init__(self, depth):
        self.depth = depth

    def __call__(self, j):
        prob = load_problem("ex1")
        spec, D = prob.spec, prob.digits
        emb = compute_embeddings(spec)
        cloud = approximate_F(spec, D, self.depth, translate=_half_integer(j), emb=emb)
        return np.column_stack([cloud.arch[:, 0], cloud.surrogate])


def figure_ex2(outdir: str, depth: int = 12, grid: int = 3) -> dict:
    """The quadratic example: slice tower of the base tile, the 7x7 grid of
    slice tiles, and the almost-periodicity sequence."""
    prob = load_problem("ex2")
    spec, D = prob.spec, prob.digits
    emb = compute_embeddings(spec)
    slices = slice_decomposition(spec, D, depth, coeff_range=grid, emb=emb)

    # tower: each slice drawn at vertical offset given by its height
    tower_layers = []
    span = 0.0
    for s in slices:
        if not s.cloud.is_empty():
            span = max(span, float(np.ptp(s.cloud.arch[:, 1])) + 1.0)
    for i, s in enumerate(slices):
        if s.cloud.is_empty():
            tower_layers.append((np.zeros((0, 2)), color_for(i)))
            continue
        pts = s.cloud.arch.copy()
        pts[:, 1] = pts[:, 1] * (0.25 / max(span, 1e-9)) + s.height
        tower_layers.append((pts, color_for(i)))
    tower_path = os.path.join(outdir, "ex2_slices.svg")
    tower_meta = write_svg(tower_path, tower_layers)

    tile_layers = []
    for i, s in enumerate(slices):
        if s.cloud.is_empty():
            tile_layers.append((np.zeros((0, 2)), color_for(i)))
            continue
        shift = np.asarray(embed_arch(s.x_fv, emb))
        tile_layers.append((s.cloud.arch + shift[None, :], color_for(i)))
    tiles_path = os.path.join(outdir, "ex2_tiles.svg")
    tiles_meta = write_svg(tiles_path, tile_layers)

    # sequence of tiles at 0 and powers of 2, re-centered
    seq_layers = []
    seq = [LaurentElem.zero()] + [LaurentElem.integer(2**k) for k in range(1, 10)]
    width = 0.0
    clouds = []
    for x in seq:
        c = approximate_G(spec, D, x, depth, emb=emb)
        clouds.append(c)
        if not c.is_empty():
            width = max(width, float(np.ptp(c.arch[:, 0])) + 0.5)
    for i, (x, c) in enumerate(zip(seq, clouds)):
        if c.is_empty():
            continue
        shift = np.asarray(embed_arch(to_field_vector(x, spec), emb))
        pts = c.arch - shift[None, :]
        pts[:, 0] += i * width
        seq_layers.append((pts, color_for(i)))
    seq_path = os.path.join(outdir, "ex2_sequence.svg")
    seq_meta = write_svg(seq_path, seq_layers)

    return {
        "files": [tower_path, tiles_path, seq_path],
        "slices": len(slices),
        "tiles": len(slices),
        "sequence": len(seq),
        "tower_bbox": tower_meta["bbox"],
        "tiles_bbox": tiles_meta["bbox"],
        "sequence_bbox": seq_meta["bbox"],
    }


def figure_ex3(outdir: str, depth: int = 5, g_depth: int = 12) -> dict:
    """The 4/3 example: ten translated tiles plus their real-slice tiles."""
    prob = load_problem("ex3")
    spec, D = prob.spec, prob.digits
    emb = compute_embeddings(spec)
    layers = []
    translates = list(range(-6, 4))
    for i, j in enumerate(translates):
        t = LaurentElem.integer(j)
        cloud = approximate_F(spec, D, depth, translate=t, emb=emb)
        layers.append((np.column_stack([cloud.arch[:, 0], cloud.surrogate]),
                       color_for(i)))
    for i, j in enumerate(translates):
        g = approximate_G(spec, D, LaurentElem.integer(j), g_depth, emb=emb)
        if not g.is_empty():
            pts = np.column_stack([g.arch[:, 0], np.zeros(len(g))])
            layers.append((pts, "#222222"))
    path = os.path.join(outdir, "ex3_tiles.svg")
    meta = write_svg(path, layers)
    return {"file": path, "translates": len(translates), **meta}


def cmd_figure(args) -> int:
    os.makedirs(args.out, exist_ok=True)
    try:
        if args.name == "ex1":
            meta = figure_ex1(args.out, depth=args.depth or 6)
        elif args.name == "ex2":
            meta = figure_ex2(args.out, depth=args.depth or 12)
        elif args.name == "ex3":
            meta = figure_ex3(args.out, depth=args.depth or 5)
        else:
            print(json.dumps({"error": f"unknown figure {args.name!r}"}),
                  file=sys.stderr)
            return EXIT_INVALID
    except ProblemError as e:
        print(json.dumps({"error": str(e)}), file=sys.stderr)
        return EXIT_INVALID
    print(json.dumps(meta))
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="ratile",
        description="exact rational self-affine tiles: analysis, rendering, "
                    "tiling verification",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="validate a problem and report its algebra")
    a.add_argument("problem", help="problem JSON path or builtin (ex1|ex2|ex3)")
    a.add_argument("--out", default=None)
    a.set_defaults(fn=cmd_analyze)

    t = sub.add_parser("tile", help="emit a tile point cloud (CSV or SVG)")
    t.add_argument("problem")
    t.add_argument("kind", choices=["F", "G", "srs"])
    t.add_argument("--translate", action="append",
                   help="Laurent string (repeatable); srs: comma-separated ints")
    t.add_argument("--depth", type=int, default=8)
    t.add_argument("--format", choices=["csv", "svg"], default="csv")
    t.add_argument("--out", required=True)
    t.set_defaults(fn=cmd_tile)

    v = sub.add_parser("verify", help="tiling certificate + multiplicity + volume")
    v.add_argument("problem")
    v.add_argument("--budget", type=float, default=60.0)
    v.add_argument("--samples", type=int, default=10000)
    v.add_argument("--depth", type=int, default=12)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--out", default=None)
    v.set_defaults(fn=cmd_verify)

    f = sub.add_parser("figure", help="reproduce a built-in figure")
    f.add_argument("name", choices=["ex1", "ex2", "ex3"])
    f.add_argument("--out", default="figures")
    f.add_argument("--depth", type=int, default=None)
    f.set_defaults(fn=cmd_figure)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (IndexLawViolation, AssertionError) as e:
        print(json.dumps({"internal_invariant_violation": str(e)}), file=sys.stderr)
        return EXIT_INTERNAL
    except (LatticeError, ExactNumError, DynamicsError) as e:
        print(json.dumps({"error": f"{type(e).__name__}: {e}"}), file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
