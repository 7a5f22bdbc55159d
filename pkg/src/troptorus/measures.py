"""Piecewise Haar measures, empirical measures and affine pushforwards.

All masses and densities are exact rationals.  Pushforwards that would
need irrational volume distortions are rejected and routed to the
seeded Monte Carlo fallback.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction
from itertools import product

from .complexes import PeriodicComplex, Simplex, canonical_cell, unfold
from .lattice import Lattice, covolume, reduce_mod
from .linalg import (
    Mat,
    Vec,
    det,
    dot,
    from_columns,
    mat_vec,
    rank,
    vadd,
    vsub,
    vscale,
)
from .paf import TestFunction, _test_piece_at, evaluate_test


class MeasureError(ValueError):
    pass


class NoCommonRefinementError(MeasureError):
    pass


class NonInjectiveAtomError(MeasureError):
    pass


def _exact_sqrt(x: Fraction) -> Fraction | None:
    if x < 0:
        return None
    n, d = x.numerator, x.denominator
    rn, rd = math.isqrt(n), math.isqrt(d)
    if rn * rn == n and rd * rd == d:
        return Fraction(rn, rd)
    return None


def simplex_k_volume(s: Simplex) -> Fraction:
    """k-volume of a k-simplex in R^n, exact; raises if irrational."""
    edges = s.edge_matrix()
    if not edges:
        return Fraction(1)  # a point atom carries its density as mass
    gram = tuple(tuple(dot(a, b) for b in edges) for a in edges)
    g = det(gram)
    root = _exact_sqrt(g)
    if root is None:
        raise MeasureError("simplex k-volume is irrational")
    return root / math.factorial(s.dim)


@dataclass(frozen=True)
class PolytopalMeasure:
    lattice: Lattice
    atoms: tuple[tuple[Simplex, Fraction], ...]

    def __post_init__(self):
        if not self.atoms:
            raise MeasureError("measure needs at least one atom")
        dims = {s.dim for s, _ in self.atoms}
        if len(dims) != 1:
            raise MeasureError("atoms must share a common dimension")
        if any(d <= 0 for _, d in self.atoms):
            raise MeasureError("densities must be positive")

    @property
    def dim(self) -> int:
        return self.atoms[0][0].dim

    def total_mass(self) -> Fraction:
        return sum(
            (d * simplex_k_volume(s) for s, d in self.atoms), Fraction(0)
        )


@dataclass(frozen=True)
class EmpiricalMeasure:
    lattice: Lattice
    points: tuple[Vec, ...]

    def __post_init__(self):
        if not self.points:
            raise MeasureError("empirical measure needs at least one point")


def empirical(lat: Lattice, points) -> EmpiricalMeasure:
    return EmpiricalMeasure(
        lattice=lat, points=tuple(reduce_mod(p, lat) for p in points)
    )


@dataclass(frozen=True)
class IntegralAffineMap:
    matrix: Mat
    offset: Vec
    source: Lattice
    target: Lattice

    def __post_init__(self):
        if len(self.matrix) != self.target.dim or len(self.offset) != self.target.dim:
            raise MeasureError("map shape does not match the target")
        if any(len(r) != self.source.dim for r in self.matrix):
            raise MeasureError("map shape does not match the source")
        for g in self.source.generators:
            if not self.target.contains(mat_vec(self.matrix, g)):
                raise MeasureError(
                    "linear part does not map the source lattice into the target"
                )

    def apply(self, p: Vec) -> Vec:
        return vadd(mat_vec(self.matrix, p), self.offset)


def haar(lat: Lattice, c: PeriodicComplex) -> PolytopalMeasure:
    """Haar probability measure with atoms from one lattice-fundamental set."""
    cells = unfold(c, lat).cells
    density = 1 / covolume(lat)
    return PolytopalMeasure(
        lattice=lat, atoms=tuple((cell, density) for cell in cells)
    )


def _atom_at(mu: PolytopalMeasure, p: Vec):
    from .complexes import barycentric_coords

    n = mu.lattice.dim
    for k in product((-1, 0, 1), repeat=n):
        lam = mu.lattice.from_coords(tuple(Fraction(x) for x in k))
        q = vsub(p, lam)
        for s, d in mu.atoms:
            if s.dim != len(q):
                continue
            if all(x >= 0 for x in barycentric_coords(s, q)):
                return s, d, lam
    return None


def integrate(t: TestFunction, mu: PolytopalMeasure) -> Fraction:
    """Exact integral of a piecewise-affine test against a polytopal measure.

    One side's decomposition must refine the other's: either every atom
    is inside a single affine piece of t, or every cell of t is inside a
    single atom.  An affine integrand over a simplex integrates to
    volume times the barycenter value.
    """
    # fast path: the atoms are exactly t's cells (e.g. Haar on t's complex)
    if len(mu.atoms) == len(t.complex.cells) and all(
        s == cell for (s, _), cell in zip(mu.atoms, t.complex.cells)
    ):
        total = Fraction(0)
        for (s, d), (m, c) in zip(mu.atoms, t.pieces):
            bc = s.barycenter()
            total += d * simplex_k_volume(s) * (dot(m, bc) + c)
        return total
    # branch 1: atoms refine t's pieces
    total = Fraction(0)
    fits = True
    for s, d in mu.atoms:
        bc = s.barycenter()
        m, c = _test_piece_at(t, bc)
        if any(dot(m, v) + c != evaluate_test(t, v) for v in s.vertices):
            fits = False
            break
        total += d * simplex_k_volume(s) * (dot(m, bc) + c)
    if fits:
        return total
    # branch 2: t's cells refine the atoms
    if t.complex.period != mu.lattice:
        raise NoCommonRefinementError(
            "test complex period differs from the measure lattice"
        )
    total = Fraction(0)
    for cell, (m, c) in zip(t.complex.cells, t.pieces):
        bc = cell.barycenter()
        hit = _atom_at(mu, bc)
        if hit is None:
            raise NoCommonRefinementError("test cell not covered by an atom")
        s, d, lam = hit
        from .complexes import barycentric_coords

        if any(
            any(x < 0 for x in barycentric_coords(s, vsub(v, lam)))
            for v in cell.vertices
        ):
            raise NoCommonRefinementError("test cell straddles atoms")
        total += d * simplex_k_volume(cell) * (dot(m, bc) + c)
    return total


def integrate_empirical(t: TestFunction, e: EmpiricalMeasure) -> Fraction:
    total = sum((evaluate_test(t, p) for p in e.points), Fraction(0))
    return total / len(e.points)


def empirical_averages(
    tests: tuple[TestFunction, ...], e: EmpiricalMeasure
) -> tuple[Fraction, ...]:
    """Averages of several tests on one complex, locating each point once."""
    if not tests:
        return ()
    base = tests[0].complex
    if any(t.complex is not base and t.complex != base for t in tests):
        return tuple(integrate_empirical(t, e) for t in tests)
    from .complexes import _ContainmentIndex, _int_scale
    from .linalg import inverse, mat_vec

    index = _ContainmentIndex(base, _int_scale((base,)))
    inv = inverse(base.period.matrix)
    gens = base.period.generators
    n_amb = base.period.dim
    # aggregate per (cell copy): the per-point work is then independent
    # of the number of tests
    counts: dict[tuple, int] = {}
    vec_sums: dict[tuple, list] = {}
    for p in e.points:
        coords = mat_vec(inv, p)
        frac_part = [c - math.floor(c) for c in coords]
        u0 = [Fraction(0)] * n_amb
        for c, g in zip(frac_part, gens):
            for i in range(n_amb):
                u0[i] += c * g[i]
        u0 = tuple(u0)
        entry = index.find_point(u0)
        if entry is None:
            raise MeasureError(f"point {u0} not covered by the test complex")
        key = (entry[5], entry[6])
        counts[key] = counts.get(key, 0) + 1
        acc = vec_sums.get(key)
        if acc is None:
            vec_sums[key] = list(u0)
        else:
            for i in range(n_amb):
                acc[i] += u0[i]
    n = len(e.points)
    sums = [Fraction(0)] * len(tests)
    for (i, sh), cnt in counts.items():
        vsum = vsub(tuple(vec_sums[(i, sh)]), vscale(Fraction(cnt), sh))
        for k, t in enumerate(tests):
            m, c = t.pieces[i]
            sums[k] += dot(m, vsum) + c * cnt
    return tuple(s / n for s in sums)


def pushforward(mu, a: IntegralAffineMap):
    """Exact pushforward; same kind in, same kind out."""
    if isinstance(mu, EmpiricalMeasure):
        return empirical(a.target, tuple(a.apply(p) for p in mu.points))
    atoms = []
    for s, d in mu.atoms:
        edges = s.edge_matrix()
        image_edges = tuple(mat_vec(a.matrix, e) for e in edges)
        if rank(image_edges) != s.dim:
            raise NonInjectiveAtomError(
                "map collapses an atom; use monte_carlo_pushforward"
            )
        img = Simplex(tuple(a.apply(v) for v in s.vertices))
        vol_src = simplex_k_volume(s)
        vol_img = simplex_k_volume(img)  # raises if irrational
        canon, _ = canonical_cell(img.vertices, a.target)
        atoms.append((canon, d * vol_src / vol_img))
    return PolytopalMeasure(lattice=a.target, atoms=tuple(atoms))


def _sample_in_simplex(s: Simplex, rng: random.Random) -> Vec:
    k = s.dim
    cuts = sorted(Fraction(rng.getrandbits(32), 2 ** 32) for _ in range(k))
    weights = []
    prev = Fraction(0)
    for c in cuts:
        weights.append(c - prev)
        prev = c
    weights.append(Fraction(1) - prev)
    p = vscale(weights[0], s.vertices[0])
    for w, v in zip(weights[1:], s.vertices[1:]):
        p = vadd(p, vscale(w, v))
    return p


def monte_carlo_pushforward(
    mu: PolytopalMeasure, a: IntegralAffineMap, samples: int, seed: int
) -> EmpiricalMeasure:
    """Seeded sampling per atom proportional to mass, mapped forward.

    Sample counts are allocated deterministically by largest remainder;
    each atom uses its own derived sub-seed so results are reproducible
    bit for bit regardless of evaluation order.
    """
    if samples <= 0:
        raise MeasureError("samples must be positive")
    masses = [d * simplex_k_volume(s) for s, d in mu.atoms]
    total = sum(masses, Fraction(0))
    quotas = [m / total * samples for m in masses]
    counts = [math.floor(q) for q in quotas]
    remainders = sorted(
        range(len(quotas)),
        key=lambda i: (quotas[i] - counts[i], i),
        reverse=True,
    )
    short = samples - sum(counts)
    for i in remainders[:short]:
        counts[i] += 1
    points = []
    for idx, ((s, _), cnt) in enumerate(zip(mu.atoms, counts)):
        rng = random.Random(f"{seed}:{idx}")
        for _ in range(cnt):
            points.append(a.apply(_sample_in_simplex(s, rng)))
    return empirical(a.target, points)


def _clip_simplex(verts: tuple[Vec, ...], a: Vec, beta: Fraction):
    """Pieces of conv(verts) inside the half-space a.x <= beta.

    Supports full-dimensional simplices of dimension 1 to 3; degenerate
    zero-volume pieces are dropped by the caller.
    """
    g = [dot(a, v) - beta for v in verts]
    kept = [v for v, x in zip(verts, g) if x <= 0]
    out = [(v, x) for v, x in zip(verts, g) if x > 0]
    if not out:
        return [verts]
    if not any(x < 0 for x in g):
        return []

    def cross(pi: int, qv: Vec, qg: Fraction) -> Vec:
        gp = g_kept[pi]
        if gp == 0:
            return kept[pi]
        tpar = gp / (gp - qg)
        return vadd(kept[pi], vscale(tpar, vsub(qv, kept[pi])))

    g_kept = [x for x in g if x <= 0]
    d = len(verts) - 1
    if d == 1:
        (k,) = kept
        (qv, qg) = out[0]
        return [(k, cross(0, qv, qg))]
    if d == 2:
        if len(out) == 1:
            a0, b0 = kept
            qv, qg = out[0]
            return [
                (a0, b0, cross(1, qv, qg)),
                (a0, cross(1, qv, qg), cross(0, qv, qg)),
            ]
        (q1, g1), (q2, g2) = out
        (a0,) = kept
        return [(a0, cross(0, q1, g1), cross(0, q2, g2))]
    if d == 3:
        if len(out) == 1:
            a0, b0, c0 = kept
            qv, qg = out[0]
            a1, b1, c1 = (cross(i, qv, qg) for i in range(3))
            return [(a0, b0, c0, c1), (a0, b0, b1, c1), (a0, a1, b1, c1)]
        if len(out) == 2:
            a0, b0 = kept
            (q1, g1), (q2, g2) = out
            e = cross(0, q1, g1)
            f = cross(0, q2, g2)
            gg = cross(1, q1, g1)
            h = cross(1, q2, g2)
            return [(a0, e, f, h), (a0, e, gg, h), (a0, b0, gg, h)]
        (a0,) = kept
        return [tuple([a0] + [cross(0, qv, qg) for qv, qg in out])]
    raise MeasureError("box clipping supports dimensions 1 to 3 only")


def _box_clip_volume(s: Simplex, center: Vec, delta: Fraction) -> Fraction:
    n = s.ambient_dim
    pieces = [s.vertices]
    for k in range(n):
        e = tuple(Fraction(1 if i == k else 0) for i in range(n))
        neg = vscale(Fraction(-1), e)
        new_pieces = []
        for p in pieces:
            new_pieces.extend(_clip_simplex(p, e, center[k] + delta))
        pieces = new_pieces
        new_pieces = []
        for p in pieces:
            new_pieces.extend(_clip_simplex(p, neg, delta - center[k]))
        pieces = new_pieces
    total = Fraction(0)
    for p in pieces:
        edges = tuple(vsub(v, p[0]) for v in p[1:])
        total += abs(det(from_columns(edges))) / math.factorial(len(p) - 1)
    return total


def _wrap_guard(lat: Lattice, delta: Fraction) -> None:
    n = lat.dim
    shortest = None
    for k in product((-1, 0, 1), repeat=n):
        if all(x == 0 for x in k):
            continue
        lam = lat.from_coords(tuple(Fraction(x) for x in k))
        norm = max(abs(x) for x in lam)
        if shortest is None or norm < shortest:
            shortest = norm
    if delta > shortest / 4:
        raise MeasureError(
            f"delta {delta} wraps around the torus (limit {shortest / 4})"
        )


def mass_near(mu, center: Vec, delta: Fraction) -> Fraction:
    """Measure of the closed sup-norm box of radius delta around center."""
    delta = Fraction(delta)
    if delta <= 0:
        raise MeasureError("delta must be positive")
    _wrap_guard(mu.lattice, delta)
    n = mu.lattice.dim
    shifts = [
        mu.lattice.from_coords(tuple(Fraction(x) for x in k))
        for k in product((-1, 0, 1), repeat=n)
    ]
    if isinstance(mu, EmpiricalMeasure):
        hits = 0
        for p in mu.points:
            for lam in shifts:
                q = vadd(p, lam)
                if all(abs(a - b) <= delta for a, b in zip(q, center)):
                    hits += 1
                    break
        return Fraction(hits, len(mu.points))
    if mu.dim != n:
        raise MeasureError("box masses need full-dimensional atoms")
    total = Fraction(0)
    for s, d in mu.atoms:
        for lam in shifts:
            total += d * _box_clip_volume(s.translate(lam), center, delta)
    return total
