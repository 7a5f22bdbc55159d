"""Periodic simplicial complexes from the barycentric cuboid triangulation.

Cells are stored as canonical representatives modulo the period lattice:
vertex lists sorted lexicographically and translated so the smallest
vertex has period-basis coordinates in [0, 1)^n.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import permutations, product

from .lattice import Lattice, covolume
from .linalg import (
    DimensionMismatchError,
    Vec,
    det,
    dot,
    from_columns,
    inverse,
    primitive_integer_vector,
    rank,
    solve_underdetermined_nullvec,
    vadd,
    vsub,
    vscale,
    zero_vec,
)

HALF = Fraction(1, 2)


class ComplexError(ValueError):
    pass


class IncompatiblePeriodsError(ComplexError):
    pass


@dataclass(frozen=True)
class Simplex:
    vertices: tuple[Vec, ...]

    def __post_init__(self):
        if not self.vertices:
            raise ComplexError("simplex needs at least one vertex")
        n = len(self.vertices[0])
        if any(len(v) != n for v in self.vertices):
            raise ComplexError("simplex vertices of unequal length")

    @property
    def dim(self) -> int:
        return len(self.vertices) - 1

    @property
    def ambient_dim(self) -> int:
        return len(self.vertices[0])

    def edge_matrix(self):
        v0 = self.vertices[0]
        return tuple(vsub(v, v0) for v in self.vertices[1:])

    def is_nondegenerate(self) -> bool:
        return rank(self.edge_matrix()) == self.dim

    def barycenter(self) -> Vec:
        s = zero_vec(self.ambient_dim)
        for v in self.vertices:
            s = vadd(s, v)
        return vscale(Fraction(1, len(self.vertices)), s)

    def translate(self, t: Vec) -> "Simplex":
        return Simplex(tuple(vadd(v, t) for v in self.vertices))


def simplex_volume(s: Simplex) -> Fraction:
    """|det(v_1-v_0, ..., v_n-v_0)| / n! for a full-dimensional simplex."""
    if s.dim != s.ambient_dim:
        raise DimensionMismatchError("simplex_volume needs an n-simplex in R^n")
    return abs(det(s.edge_matrix())) / math.factorial(s.dim)


def barycentric_coords(s: Simplex, p: Vec) -> tuple[Fraction, ...]:
    """Barycentric coordinates of p w.r.t. a full-dimensional simplex."""
    from .linalg import solve

    v0 = s.vertices[0]
    m = from_columns(s.edge_matrix())
    lam = solve(m, vsub(p, v0))
    lam0 = Fraction(1) - sum(lam, Fraction(0))
    return (lam0,) + tuple(lam)


def simplex_contains(s: Simplex, p: Vec) -> bool:
    return all(c >= 0 for c in barycentric_coords(s, p))


def canonical_cell(vertices: tuple[Vec, ...], period: Lattice) -> tuple[Simplex, Vec]:
    """Canonical representative and the period shift that was subtracted."""
    vs = sorted(vertices)
    coords = period.coords(vs[0])
    shift = period.from_coords(tuple(Fraction(math.floor(c)) for c in coords))
    if any(c != 0 for c in shift):
        vs = [vsub(v, shift) for v in vs]
    return Simplex(tuple(vs)), shift


@dataclass(frozen=True)
class PeriodicComplex:
    """Finitely many maximal cells whose period translates tile R^n."""

    period: Lattice
    cells: tuple[Simplex, ...]
    level: int = 0

    @property
    def dim(self) -> int:
        return self.period.dim


def make_complex(
    period: Lattice, simplices, level: int = 0, expected: int | None = None
) -> PeriodicComplex:
    seen: dict[tuple, Simplex] = {}
    for s in simplices:
        canon, _ = canonical_cell(s.vertices, period)
        seen.setdefault(canon.vertices, canon)
    cells = tuple(seen[k] for k in sorted(seen))
    if expected is not None and len(cells) != expected:
        raise ComplexError(f"expected {expected} cells, got {len(cells)}")
    return PeriodicComplex(period=period, cells=cells, level=level)


def fundamental_cuboid(orth_prime: tuple[Vec, ...]) -> tuple[Vec, ...]:
    """The 2^n vertices sum(eps_j b_j') with eps in {0,1}."""
    if rank(orth_prime) != len(orth_prime):
        raise ComplexError("cuboid generators must be linearly independent")
    n = len(orth_prime)
    out = []
    for eps in product((0, 1), repeat=n):
        v = zero_vec(len(orth_prime[0]))
        for e, b in zip(eps, orth_prime):
            if e:
                v = vadd(v, b)
        out.append(v)
    return tuple(sorted(set(out)))


def barycentric_triangulation(
    orth_prime: tuple[Vec, ...], period: Lattice
) -> PeriodicComplex:
    """Complete barycentric subdivision of the period cuboid, level 0.

    Maximal cells are generated from the reference flag simplex with
    vertices 0, b_1'/2, (b_1'+b_2')/2, ... by sign flips and
    permutations, then reduced to canonical representatives.
    """
    if tuple(orth_prime) != tuple(period.generators):
        raise ComplexError("period must be generated by the cuboid basis")
    n = len(orth_prime)
    ambient = len(orth_prime[0])
    cells = []
    for signs in product((1, -1), repeat=n):
        for perm in permutations(range(n)):
            verts = [zero_vec(ambient)]
            acc = zero_vec(ambient)
            for idx in perm:
                acc = vadd(acc, vscale(HALF * signs[idx], orth_prime[idx]))
                verts.append(acc)
            cells.append(Simplex(tuple(verts)))
    expected = (2 ** n) * math.factorial(n)
    return make_complex(period, cells, level=0, expected=expected)


def dyadic_refine_step(
    c: PeriodicComplex,
) -> tuple[PeriodicComplex, tuple[tuple[int, Vec], ...]]:
    """One halving step; also returns, per new cell, (parent index,
    parent translation lam) such that 2 * new_cell = parent + lam.

    All vertex arithmetic runs on a common integer scale; canonical
    shifts come from an integer-cleared period inverse, so the loop over
    cells stays in machine integers.
    """
    n = c.dim
    denoms = {
        x.denominator for cell in c.cells for v in cell.vertices for x in v
    }
    denoms |= {x.denominator for g in c.period.generators for x in g}
    s = math.lcm(*denoms)
    t = 2 * s  # the new vertices (v + lam)/2 are integral at scale 2s
    gens_i = [
        tuple(x.numerator * (s // x.denominator) for x in g)
        for g in c.period.generators
    ]
    inv = inverse(from_columns(c.period.generators))
    q = math.lcm(*(x.denominator for row in inv for x in row))
    inv_i = [
        tuple(x.numerator * (q // x.denominator) for x in row) for row in inv
    ]
    qt = q * t
    cells_i = [
        [
            tuple(x.numerator * (s // x.denominator) for x in v)
            for v in cell.vertices
        ]
        for cell in c.cells
    ]
    lams_i = [
        tuple(sum(k[j] * gens_i[j][i] for j in range(n)) for i in range(n))
        for k in product((0, 1), repeat=n)
    ]
    records: dict[tuple, tuple[int, Vec]] = {}
    for i, verts in enumerate(cells_i):
        for lam_i in lams_i:
            new = sorted(
                tuple(x + a for x, a in zip(v, lam_i)) for v in verts
            )
            first = new[0]
            ks = [
                sum(r * x for r, x in zip(row, first)) // qt for row in inv_i
            ]
            if any(ks):
                sh = tuple(
                    2 * sum(ks[j] * gens_i[j][m] for j in range(n))
                    for m in range(n)
                )
                new = [tuple(x - y for x, y in zip(v, sh)) for v in new]
            else:
                sh = (0,) * n
            key = tuple(x for v in new for x in v)
            if key not in records:
                # 2 * canon = parent + (lam - 2*shift), shift = sh/t
                records[key] = (
                    i,
                    tuple(Fraction(a - y, s) for a, y in zip(lam_i, sh)),
                )
    if len(records) != len(c.cells) * 2 ** n:
        raise ComplexError("dyadic refinement produced colliding cells")
    keys = sorted(records)
    frac_cache: dict[int, Fraction] = {}

    def fr(x: int) -> Fraction:
        f = frac_cache.get(x)
        if f is None:
            f = frac_cache[x] = Fraction(x, t)
        return f

    cells = tuple(
        Simplex(
            tuple(
                tuple(fr(x) for x in k[m * n : (m + 1) * n])
                for m in range(len(k) // n)
            )
        )
        for k in keys
    )
    parents = tuple(records[k] for k in keys)
    refined = PeriodicComplex(period=c.period, cells=cells, level=c.level + 1)
    return refined, parents


def dyadic_refine(c: PeriodicComplex, steps: int) -> PeriodicComplex:
    if steps < 0:
        raise ValueError("steps must be >= 0")
    for _ in range(steps):
        c, _ = dyadic_refine_step(c)
    return c


def _int_adjugate(m, d) -> tuple[tuple[int, ...], ...]:
    """Integer adjugate rows of an integer matrix with determinant d."""
    from .linalg import inverse

    inv = inverse(m)
    return tuple(tuple(int(x * d) for x in row) for row in inv)


def _int_det_adj(cols):
    """Determinant and adjugate of an integer matrix given by columns.

    Closed cofactor forms for n <= 3; Fraction elimination otherwise.
    """
    n = len(cols)
    if n == 1:
        return cols[0][0], ((1,),)
    if n == 2:
        (a, c), (b, d) = cols  # matrix [[a, b], [c, d]]
        return a * d - b * c, ((d, -b), (-c, a))
    if n == 3:
        (a, d, g), (b, e, h), (c, f, i) = cols
        det_i = a * (e * i - f * h) - b * (d * i - f * g) + c * (d * h - e * g)
        adj = (
            (e * i - f * h, c * h - b * i, b * f - c * e),
            (f * g - d * i, a * i - c * g, c * d - a * f),
            (d * h - e * g, b * g - a * h, a * e - b * d),
        )
        return det_i, adj
    m = from_columns(tuple(tuple(Fraction(x) for x in col) for col in cols))
    d = det(m)
    return int(d), _int_adjugate(m, d)


def _int_scale(complexes) -> int:
    denoms = [1]
    for c in complexes:
        for g in c.period.generators:
            denoms.extend(x.denominator for x in g)
        for cell in c.cells:
            for v in cell.vertices:
                denoms.extend(x.denominator for x in v)
    return math.lcm(*denoms)


class _ContainmentIndex:
    """Integer-scaled point/simplex containment queries against the cells
    of a complex, including nearby period translates."""

    def __init__(self, c: PeriodicComplex, scale: int):
        self.scale = scale
        n = c.dim
        self.n = n
        entries = []
        # queries are canonical points (period-basis coordinates in
        # [0, 1)), so a translate can only contain one if its coordinate
        # bounding box meets [0, 1]; the admissible integer shifts per
        # cell come straight from that box
        gens_i = [
            tuple(x.numerator * (scale // x.denominator) for x in g)
            for g in c.period.generators
        ]
        inv = inverse(from_columns(c.period.generators))
        q = math.lcm(*(x.denominator for row in inv for x in row))
        inv_i = [
            tuple(x.numerator * (q // x.denominator) for x in row)
            for row in inv
        ]
        qs = q * scale
        shift_cache: dict[tuple, tuple] = {}
        for idx, cell in enumerate(c.cells):
            base = [
                tuple(x.numerator * (scale // x.denominator) for x in v)
                for v in cell.vertices
            ]
            edge = tuple(
                tuple(b - a for a, b in zip(base[0], v)) for v in base[1:]
            )
            det_i, adj = _int_det_adj(edge)
            lo0 = [min(v[k] for v in base) for k in range(n)]
            hi0 = [max(v[k] for v in base) for k in range(n)]
            coord_rows = [
                [sum(r * x for r, x in zip(row, v)) for v in base]
                for row in inv_i
            ]
            ranges = []
            for row in coord_rows:
                lo_c, hi_c = min(row), max(row)
                # translate k overlaps [0, 1] iff
                # lo_c + k*qs <= qs and hi_c + k*qs >= 0
                k_min = -(hi_c // qs)
                k_max = (qs - lo_c) // qs
                ranges.append(range(k_min, k_max + 1))
            for k in product(*ranges):
                key = k
                cached = shift_cache.get(key)
                if cached is None:
                    sh = c.period.from_coords(tuple(Fraction(x) for x in k))
                    sh_i = tuple(
                        sum(k[j] * gens_i[j][m] for j in range(n))
                        for m in range(n)
                    )
                    cached = (sh, sh_i)
                    shift_cache[key] = cached
                sh, sh_i = cached
                verts = [tuple(a + b for a, b in zip(v, sh_i)) for v in base]
                lo = [a + b for a, b in zip(lo0, sh_i)]
                hi = [a + b for a, b in zip(hi0, sh_i)]
                entries.append((verts[0], adj, det_i, lo, hi, idx, sh))
        max_extent = max(
            max(hi[k] - lo[k] for k in range(n)) for _, _, _, lo, hi, _, _ in entries
        )
        # entries register in every bucket their bounding box overlaps,
        # so any size is sound; cell extent balances list length against
        # registration cost
        self.bucket_size = max(1, max_extent)
        self.buckets: dict[tuple, list] = {}
        for e in entries:
            lo, hi = e[3], e[4]
            ranges = [
                range(lo[k] // self.bucket_size, hi[k] // self.bucket_size + 1)
                for k in range(n)
            ]
            for key in product(*ranges):
                self.buckets.setdefault(key, []).append(e)

    def _candidates(self, point_num: tuple[int, ...], denom: int):
        key = tuple(p // (denom * self.bucket_size) for p in point_num)
        return self.buckets.get(key, ())

    @staticmethod
    def _inside(entry, p_num, denom) -> bool:
        v0, adj, det_i, lo, hi, _, _ = entry
        n = len(p_num)
        for k in range(n):
            p = p_num[k]
            if p < lo[k] * denom or p > hi[k] * denom:
                return False
        diff = [p_num[k] - denom * v0[k] for k in range(n)]
        d_scaled = det_i * denom
        total = 0
        if det_i > 0:
            for row in adj:
                y = 0
                for k in range(n):
                    y += row[k] * diff[k]
                if y < 0:
                    return False
                total += y
            return total <= d_scaled
        for row in adj:
            y = 0
            for k in range(n):
                y += row[k] * diff[k]
            if y > 0:
                return False
            total += y
        return total >= d_scaled

    def find_cell_containing_simplex(self, verts_scaled, denom: int):
        """Entry whose cell contains all given points, or None.
        Points are integer tuples equal to denom * scale * point."""
        m = len(verts_scaled)
        bary = tuple(sum(v[k] for v in verts_scaled) for k in range(self.n))
        inside = self._inside
        for entry in self._candidates(bary, m * denom):
            # the barycenter is interior, so test it before the vertices
            if not inside(entry, bary, m * denom):
                continue
            if all(inside(entry, p, denom) for p in verts_scaled):
                return entry
        return None

    def find_point(self, p: Vec):
        """Entry (.., cell index, shift) containing the rational point p."""
        denom = math.lcm(*((x * self.scale).denominator for x in p))
        p_num = tuple(int(x * self.scale * denom) for x in p)
        for entry in self._candidates(p_num, denom):
            if self._inside(entry, p_num, denom):
                return entry
        return None


def is_refinement(fine: PeriodicComplex, coarse: PeriodicComplex) -> bool:
    """True iff every fine cell sits inside a coarse cell mod the period."""
    if fine.period != coarse.period:
        raise IncompatiblePeriodsError("refinement check needs equal periods")
    scale = _int_scale((fine, coarse))
    index = _ContainmentIndex(coarse, scale)
    inside = index._inside
    m = len(fine.cells[0].vertices)
    n = index.n
    scaled = []
    for cell in fine.cells:
        verts = [
            tuple(x.numerator * (scale // x.denominator) for x in v)
            for v in cell.vertices
        ]
        bary = tuple(sum(v[k] for v in verts) for k in range(n))
        scaled.append((bary, verts))
    # visit cells in Morton (bit-interleaved) order so neighbouring cells
    # come consecutively and reuse the last coarse hit
    mins = [min(bv[0][k] for bv in scaled) for k in range(n)]

    def _morton(bary):
        code = 0
        vals = [bary[k] - mins[k] for k in range(n)]
        for bit in range(max(v.bit_length() for v in vals) if any(vals) else 1):
            for k in range(n):
                code |= ((vals[k] >> bit) & 1) << (bit * n + k)
        return code

    scaled.sort(key=lambda bv: _morton(bv[0]))
    # recently hit coarse cells, most recent first; Morton order makes
    # consecutive fine cells share parents, so screen these by barycenter
    # before falling back to the bucket scan
    recent: list = []
    buckets = index.buckets
    bucket_span = m * index.bucket_size
    for bary, verts in scaled:
        hit = None
        for pos, entry in enumerate(recent):
            if inside(entry, bary, m) and all(
                inside(entry, p, 1) for p in verts
            ):
                hit = entry
                if pos:
                    recent.insert(0, recent.pop(pos))
                break
        if hit is None:
            key = tuple(p // bucket_span for p in bary)
            bucket = buckets.get(key, ())
            for pos, entry in enumerate(bucket):
                if not inside(entry, bary, m):
                    continue
                if all(inside(entry, p, 1) for p in verts):
                    hit = entry
                    recent.insert(0, entry)
                    del recent[12:]
                    # move-to-front: nearby misses want the same parents
                    if pos:
                        bucket.insert(0, bucket.pop(pos))
                    break
            if hit is None:
                return False
    return True


@dataclass(frozen=True)
class AdjacentPair:
    """Two maximal cells meeting in a codimension-1 face, one per orbit.

    The actual simplices are cells[i] + shift_i and cells[j] + shift_j;
    ``normal`` is the primitive integer inner normal of the first cell
    at the shared face.
    """

    i: int
    j: int
    shift_i: Vec
    shift_j: Vec
    face: tuple[Vec, ...]
    normal: Vec

    def delta(self, c: PeriodicComplex) -> Simplex:
        return c.cells[self.i].translate(self.shift_i)

    def sigma(self, c: PeriodicComplex) -> Simplex:
        return c.cells[self.j].translate(self.shift_j)


def _inner_normal(face: tuple[Vec, ...], opposite: Vec) -> Vec:
    w0 = face[0]
    rows = tuple(vsub(w, w0) for w in face[1:])
    n = len(w0)
    if rows:
        nu = solve_underdetermined_nullvec(rows, n)
    else:
        nu = (Fraction(1),) + zero_vec(n - 1) if n > 1 else (Fraction(1),)
    if n > 1 and not rows:
        raise ComplexError("codim-1 face must have n vertices")
    s = dot(nu, vsub(opposite, w0))
    if s == 0:
        raise ComplexError("degenerate face/opposite configuration")
    if s < 0:
        nu = vscale(Fraction(-1), nu)
    return primitive_integer_vector(nu)


def adjacent_pairs(c: PeriodicComplex) -> tuple[AdjacentPair, ...]:
    """All codim-1 adjacent cell pairs, one per period orbit.

    Facets are hashed by the canonical representative of their vertex
    set; since translates of the cells tile space, every facet orbit is
    shared by exactly two cell copies.
    """
    buckets: dict[tuple, list] = {}
    for i, cell in enumerate(c.cells):
        for drop in range(len(cell.vertices)):
            face = tuple(
                v for k, v in enumerate(cell.vertices) if k != drop
            )
            canon_face, shift = canonical_cell(face, c.period)
            opp = vsub(cell.vertices[drop], shift)
            buckets.setdefault(canon_face.vertices, []).append(
                (i, vscale(Fraction(-1), shift), opp)
            )
    pairs = []
    for key in sorted(buckets):
        entries = buckets[key]
        if len(entries) != 2:
            raise ComplexError(
                f"facet orbit shared by {len(entries)} cells; tiling broken"
            )
        (i, si, opp_i), (j, sj, _) = entries
        normal = _inner_normal(key, opp_i)
        pairs.append(
            AdjacentPair(i=i, j=j, shift_i=si, shift_j=sj, face=key, normal=normal)
        )
    return tuple(pairs)


def check_tiling(c: PeriodicComplex) -> None:
    total = sum((simplex_volume(cell) for cell in c.cells), Fraction(0))
    if total != covolume(c.period):
        raise ComplexError(
            f"cells cover volume {total}, period covolume {covolume(c.period)}"
        )


def check_common_faces(c: PeriodicComplex) -> None:
    """Exhaustive pairwise face-intersection check (small complexes only).

    Two cells (including nearby translates) must meet in a common face:
    the intersection of their vertex sets must be the full geometric
    intersection, tested at the barycenter of the overlap region.
    """
    from .measures import _clip_simplex

    n = c.dim
    shifts = [
        c.period.from_coords(tuple(Fraction(x) for x in k))
        for k in product((-1, 0, 1), repeat=n)
    ]
    for i, a in enumerate(c.cells):
        for j in range(i, len(c.cells)):
            for sh in shifts:
                if j == i and all(x == 0 for x in sh):
                    continue
                b = c.cells[j].translate(sh)
                shared = set(a.vertices) & set(b.vertices)
                # interiors must be disjoint: clip a by b's facet
                # half-spaces and demand the leftover volume vanish
                pieces = [a.vertices]
                for k, w in enumerate(b.vertices):
                    face = b.vertices[:k] + b.vertices[k + 1 :]
                    normal = _inner_normal(face, w)
                    beta = -dot(normal, face[0])
                    neg = vscale(Fraction(-1), normal)
                    pieces = [
                        q
                        for p in pieces
                        for q in _clip_simplex(p, neg, beta)
                    ]
                overlap = sum(
                    (simplex_volume(Simplex(p)) for p in pieces
                     if Simplex(p).is_nondegenerate()),
                    Fraction(0),
                )
                if overlap != 0:
                    raise ComplexError("overlapping cell interiors")
                if shared:
                    sub = Simplex(tuple(sorted(shared)))
                    if not sub.is_nondegenerate():
                        raise ComplexError("shared vertices not a face")


def unfold(c: PeriodicComplex, lat: Lattice) -> PeriodicComplex:
    """Re-periodize a complex over a sublattice of its period.

    ``lat`` must be contained in ``c.period``; the result has period
    ``lat`` and one cell per (cell, coset) pair.
    """
    from .lattice import covolume as _covol, reduce_mod

    for g in lat.generators:
        if not c.period.contains(g):
            raise IncompatiblePeriodsError("unfold target must be a sublattice")
    index = _covol(lat) / _covol(c.period)
    if index.denominator != 1:
        raise IncompatiblePeriodsError("non-integer lattice index")
    index = int(index)
    reps: dict[tuple, Vec] = {}
    bound = max(index, 1)
    for k in product(range(bound), repeat=c.dim):
        lam = c.period.from_coords(tuple(Fraction(x) for x in k))
        r = reduce_mod(lam, lat)
        reps.setdefault(r, r)
        if len(reps) == index:
            break
    if len(reps) != index:
        raise ComplexError("could not enumerate coset representatives")
    cells = []
    for cell in c.cells:
        for r in reps.values():
            cells.append(cell.translate(r))
    return make_complex(lat, cells, level=c.level, expected=index * len(c.cells))


def unfold_with_shifts(
    c: PeriodicComplex, lat: Lattice
) -> tuple[PeriodicComplex, tuple[tuple[int, Vec], ...]]:
    """Like :func:`unfold` but also returns, per new cell, the source
    cell index and the period shift lam with new_cell = cells[i] + lam."""
    unfolded = unfold(c, lat)
    mapping = []
    originals = {cell.vertices: i for i, cell in enumerate(c.cells)}
    for cell in unfolded.cells:
        canon, shift = canonical_cell(cell.vertices, c.period)
        i = originals.get(canon.vertices)
        if i is None:
            raise ComplexError("unfolded cell lost its source")
        mapping.append((i, shift))
    return unfolded, tuple(mapping)
