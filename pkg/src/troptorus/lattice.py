"""Exact rational lattices and positive definite polarization forms.

A lattice is given by a full-rank rational basis (columns are
generators).  The polarized setting needs three constructions: an
orthogonal system inside the lattice, the superlattice spanned by the
rescaled orthogonal vectors, and reduction to the half-open fundamental
parallelotope.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from .linalg import (
    DimensionMismatchError,
    Mat,
    Vec,
    det,
    dot,
    from_columns,
    inverse,
    mat_vec,
    vadd,
    vsub,
    vscale,
    zero_vec,
)


@lru_cache(maxsize=256)
def _cached_inverse(m: Mat) -> Mat:
    return inverse(m)


class NotPositiveDefiniteError(ValueError):
    pass


class LatticeError(ValueError):
    pass


@dataclass(frozen=True)
class Lattice:
    """Full-rank lattice in R^n; ``generators`` are the basis columns."""

    generators: tuple[Vec, ...]

    def __post_init__(self):
        n = len(self.generators)
        if n == 0 or any(len(g) != n for g in self.generators):
            raise LatticeError("lattice basis must be a nonempty square system")
        if det(self.matrix) == 0:
            raise LatticeError("lattice basis is singular")

    @property
    def dim(self) -> int:
        return len(self.generators)

    @property
    def matrix(self) -> Mat:
        return from_columns(self.generators)

    def from_coords(self, coords: Vec) -> Vec:
        """Point with the given coordinates w.r.t. the basis."""
        v = zero_vec(self.dim)
        for c, g in zip(coords, self.generators, strict=True):
            v = vadd(v, vscale(c, g))
        return v

    def coords(self, v: Vec) -> Vec:
        if len(v) != self.dim:
            raise DimensionMismatchError("coords: wrong vector length")
        return mat_vec(_cached_inverse(self.matrix), v)

    def contains(self, v: Vec) -> bool:
        return all(c.denominator == 1 for c in self.coords(v))


def standard_lattice(n: int) -> Lattice:
    return Lattice(tuple(
        tuple(Fraction(1 if i == j else 0) for i in range(n)) for j in range(n)
    ))


@dataclass(frozen=True)
class Polarization:
    """Symmetric positive definite rational form on the ambient space."""

    gram: Mat

    def __post_init__(self):
        n = len(self.gram)
        if any(len(r) != n for r in self.gram):
            raise NotPositiveDefiniteError("gram matrix must be square")
        for i in range(n):
            for j in range(i):
                if self.gram[i][j] != self.gram[j][i]:
                    raise NotPositiveDefiniteError("gram matrix not symmetric")
        # exact Sylvester criterion: all leading principal minors positive
        for k in range(1, n + 1):
            minor = det(tuple(row[:k] for row in self.gram[:k]))
            if minor <= 0:
                raise NotPositiveDefiniteError(
                    f"leading principal minor {k} is {minor} <= 0"
                )

    @property
    def dim(self) -> int:
        return len(self.gram)


def identity_polarization(n: int) -> Polarization:
    from .linalg import identity

    return Polarization(identity(n))


def bilinear(b: Polarization, u: Vec, v: Vec) -> Fraction:
    """u^T gram v."""
    if len(u) != b.dim or len(v) != b.dim:
        raise DimensionMismatchError("bilinear: dimension mismatch")
    return dot(u, mat_vec(b.gram, v))


def quadratic(b: Polarization, u: Vec) -> Fraction:
    """q(u) = b(u, u) / 2."""
    return bilinear(b, u, u) / 2


def orthogonalize(lat: Lattice, b: Polarization) -> tuple[Vec, ...]:
    """Pairwise b-orthogonal lattice vectors via Gram-Schmidt.

    Processes the basis in given column order; each step is rescaled by
    the least positive integer making the lattice coordinates integral,
    so the output vectors lie in the lattice.
    """
    if b.dim != lat.dim:
        raise DimensionMismatchError("orthogonalize: dimension mismatch")
    out: list[Vec] = []
    for g in lat.generators:
        w = g
        for prev in out:
            coeff = bilinear(b, g, prev) / bilinear(b, prev, prev)
            w = vsub(w, vscale(coeff, prev))
        coords = lat.coords(w)
        scale = math.lcm(*(c.denominator for c in coords))
        out.append(vscale(Fraction(scale), w))
    return tuple(out)


def superlattice(orth: tuple[Vec, ...], lat: Lattice) -> tuple[int, Lattice]:
    """Least N with lat contained in Z(orth_1/N) + ... + Z(orth_n/N)."""
    span = Lattice(orth)
    for g in lat.generators:
        if not span_contains_rational(span, g):
            raise LatticeError("orthogonal system not inside the lattice span")
    denoms = [c.denominator for g in lat.generators for c in span.coords(g)]
    n_min = math.lcm(*denoms)
    prime = Lattice(tuple(vscale(Fraction(1, n_min), v) for v in orth))
    for g in lat.generators:  # exact inclusion check
        if not prime.contains(g):
            raise LatticeError("superlattice inclusion failed")
    return n_min, prime


def span_contains_rational(span: Lattice, v: Vec) -> bool:
    try:
        span.coords(v)
        return True
    except Exception:
        return False


def covolume(lat: Lattice) -> Fraction:
    return abs(det(lat.matrix))


def reduce_mod(u: Vec, lat: Lattice) -> Vec:
    """Representative of u with basis coordinates in [0, 1)."""
    coords = lat.coords(u)
    frac_part = tuple(c - math.floor(c) for c in coords)
    return lat.from_coords(frac_part)


def lattice_part(u: Vec, lat: Lattice) -> Vec:
    """The lattice vector u - reduce_mod(u)."""
    coords = lat.coords(u)
    return lat.from_coords(tuple(Fraction(math.floor(c)) for c in coords))
