"""Uniform grids on a truncation box around Omega, pair sets and quadrature.

The whole space is replaced by a finite box ``B`` that surrounds ``Omega``
with a collar of exterior nodes.  Nodes sit at cell midpoints and carry the
cell volume ``h**dim`` as quadrature weight.  Membership in ``Omega`` is
decided at the node.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError

__all__ = [
    "Interval",
    "Rectangle",
    "Disk",
    "GridDomain",
    "PairSet",
    "build_grid",
    "build_grid_around",
    "build_pairset",
    "pairset",
    "integrate",
    "integrate_pairs",
    "shape_from_spec",
]


# -- shapes -----------------------------------------------------------------

@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    dim = 1

    def __call__(self, pts):
        x = np.asarray(pts, dtype=float).reshape(len(pts), -1)[:, 0]
        return (x > self.lo) & (x < self.hi)

    def bounds(self):
        return np.array([self.lo]), np.array([self.hi])

    @property
    def diameter(self):
        return self.hi - self.lo


@dataclass(frozen=True)
class Rectangle:
    lo: tuple
    hi: tuple

    @property
    def dim(self):
        return len(self.lo)

    def __call__(self, pts):
        pts = np.asarray(pts, dtype=float)
        lo, hi = self.bounds()
        return np.all((pts > lo) & (pts < hi), axis=1)

    def bounds(self):
        return np.asarray(self.lo, dtype=float), np.asarray(self.hi, dtype=float)

    @property
    def diameter(self):
        lo, hi = self.bounds()
        return float(np.linalg.norm(hi - lo))


@dataclass(frozen=True)
class Disk:
    center: tuple
    radius: float

    @property
    def dim(self):
        return len(self.center)

    def __call__(self, pts):
        pts = np.asarray(pts, dtype=float)
        c = np.asarray(self.center, dtype=float)
        return np.sum((pts - c) ** 2, axis=1) < self.radius**2

    def bounds(self):
        c = np.asarray(self.center, dtype=float)
        return c - self.radius, c + self.radius

    @property
    def diameter(self):
        return 2.0 * self.radius


def shape_from_spec(spec: dict):
    """Build a shape from a config mapping (``shape: interval|rectangle|disk``)."""
    kind = spec.get("shape", "interval")
    if kind == "interval":
        lo, hi = spec.get("bounds", (-1.0, 1.0))
        return Interval(float(lo), float(hi))
    if kind == "rectangle":
        lo = tuple(float(v) for v in spec["lo"])
        hi = tuple(float(v) for v in spec["hi"])
        return Rectangle(lo, hi)
    if kind == "disk":
        center = tuple(float(v) for v in spec.get("center", (0.0, 0.0)))
        return Disk(center, float(spec.get("radius", 1.0)))
    raise DomainError(f"unknown omega shape {kind!r}")


# -- grid -------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class GridDomain:
    """Midpoint tensor grid on a box, with the Omega membership mask."""

    dim: int
    box: tuple
    h: float
    nodes: np.ndarray
    weights: np.ndarray
    in_omega: np.ndarray
    omega: Callable | None = field(default=None, repr=False)

    @property
    def n(self):
        return len(self.nodes)

    @property
    def n_omega(self):
        return int(self.in_omega.sum())

    @property
    def n_ext(self):
        return self.n - self.n_omega

    @functools.cached_property
    def omega_index(self):
        return np.flatnonzero(self.in_omega)

    @property
    def measure(self):
        """Quadrature measure of Omega."""
        return float(np.sum(self.weights[self.in_omega]))

    def refine(self):
        """Same box and Omega at half the spacing."""
        if self.omega is None:
            raise DomainError("grid has no Omega predicate to refine with")
        return build_grid(self.dim, self.box, self.h / 2, self.omega)

    def rows(self):
        """(index, *coords, weight, in_omega) rows for CSV dumps."""
        for k in range(self.n):
            yield (k, *self.nodes[k].tolist(), float(self.weights[k]),
                   int(self.in_omega[k]))


def _normalize_box(dim, box):
    box = np.asarray(box, dtype=float)
    if box.ndim == 1:
        box = box.reshape(1, 2)
    if box.shape != (dim, 2):
        raise DomainError(f"box must have {dim} (lo, hi) pairs, got shape {box.shape}")
    if np.any(box[:, 1] <= box[:, 0]):
        raise DomainError("box has non-positive volume")
    return box


def build_grid(dim: int, box, h: float,
               omega_predicate: Callable[[np.ndarray], np.ndarray]) -> GridDomain:
    """Uniform midpoint grid on ``box`` with spacing ``h``.

    ``omega_predicate`` maps an ``(m, dim)`` array of points to a boolean
    mask.  Omega must be non-empty and must not reach the outermost layer of
    cells, so that every Omega node is surrounded by exterior nodes.
    """
    if dim not in (1, 2):
        raise DomainError("dim must be 1 or 2")
    if not h > 0:
        raise DomainError("h must be positive")
    box = _normalize_box(dim, box)
    axes = []
    for lo, hi in box:
        count = int(round((hi - lo) / h))
        if count < 1 or abs(count * h - (hi - lo)) > 1e-9 * (hi - lo):
            raise DomainError(f"h={h} does not divide box side [{lo}, {hi}]")
        axes.append(lo + h * (np.arange(count) + 0.5))
    mesh = np.meshgrid(*axes, indexing="ij")
    nodes = np.stack([m.ravel() for m in mesh], axis=1)
    in_omega = np.asarray(omega_predicate(nodes), dtype=bool)
    if not in_omega.any():
        raise DomainError("Omega contains no grid node")

    shape = tuple(len(a) for a in axes)
    mask = in_omega.reshape(shape)
    for ax in range(dim):
        first = np.take(mask, 0, axis=ax)
        last = np.take(mask, shape[ax] - 1, axis=ax)
        if first.any() or last.any():
            raise DomainError("Omega touches the box boundary; the exterior collar is missing")

    weights = np.full(len(nodes), h**dim)
    return GridDomain(dim, tuple(map(tuple, box.tolist())), float(h), nodes,
                      weights, in_omega, omega_predicate)


def build_grid_around(omega, h: float | None = None, n: int | None = None,
                      collar: float | None = None) -> GridDomain:
    """Grid on the bounding box of ``omega`` widened by ``collar`` on every side.

    ``collar`` defaults to the diameter of Omega.  Give either the spacing
    ``h`` or ``n``, the number of cells along the first axis.  Box sides are
    widened symmetrically to a whole number of cells.
    """
    lo, hi = omega.bounds()
    if collar is None:
        collar = omega.diameter
    lo = lo - collar
    hi = hi + collar
    if h is None:
        if n is None:
            raise DomainError("give either h or n")
        h = (hi[0] - lo[0]) / n
    box = []
    for a, b in zip(lo, hi):
        count = int(np.ceil((b - a) / h - 1e-9))
        pad = (count * h - (b - a)) / 2
        box.append((a - pad, b + pad))
    return build_grid(omega.dim, box, h, omega)


# -- pairs ------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PairSet:
    """Ordered off-diagonal node pairs with product weights ``w_i w_j``."""

    grid: GridDomain
    i: np.ndarray
    j: np.ndarray
    weight: np.ndarray
    region: str = "Q"

    def __len__(self):
        return len(self.i)

    @functools.cached_property
    def points(self):
        return self.grid.nodes[self.i], self.grid.nodes[self.j]

    @functools.cached_property
    def distance(self):
        x, y = self.points
        return np.sqrt(np.sum((x - y) ** 2, axis=1))

    @functools.cached_property
    def swap_index(self):
        """Position of ``(j, i)`` for each stored ``(i, j)``."""
        n = self.grid.n
        key = self.i * n + self.j
        order = np.argsort(key)
        pos = np.searchsorted(key[order], self.j * n + self.i)
        return order[pos]


_REGIONS = ("Q", "box", "omega")


def build_pairset(g: GridDomain, region: str = "Q") -> PairSet:
    """Enumerate ordered pairs ``(i, j)``, ``i != j``, in ascending order.

    ``region="Q"`` drops pairs with both endpoints outside Omega; ``"box"``
    keeps every off-diagonal pair of the box; ``"omega"`` keeps Omega x Omega.
    """
    if region not in _REGIONS:
        raise DomainError(f"region must be one of {_REGIONS}")
    inside = g.in_omega
    if region == "Q":
        keep = inside[:, None] | inside[None, :]
    elif region == "omega":
        keep = inside[:, None] & inside[None, :]
    else:
        keep = np.ones((g.n, g.n), dtype=bool)
    np.fill_diagonal(keep, False)
    i, j = np.nonzero(keep)
    return PairSet(g, i, j, g.weights[i] * g.weights[j], region)


@functools.lru_cache(maxsize=64)
def pairset(g: GridDomain, region: str = "Q") -> PairSet:
    """Cached :func:`build_pairset`."""
    return build_pairset(g, region)


# -- quadrature -------------------------------------------------------------
# np.sum reduces contiguous arrays with a fixed pairwise tree, so repeated
# calls on the same inputs are bit-identical.

def integrate(g: GridDomain, values) -> float:
    """Midpoint quadrature of nodal ``values`` over Omega."""
    values = np.asarray(values, dtype=float)
    if values.shape != (g.n,):
        raise DomainError(f"expected {g.n} nodal values, got shape {values.shape}")
    idx = g.omega_index
    return float(np.sum(g.weights[idx] * values[idx]))


def integrate_pairs(ps: PairSet, pair_values) -> float:
    """Quadrature of per-pair values over the pair set."""
    pair_values = np.asarray(pair_values, dtype=float)
    if pair_values.shape != (len(ps),):
        raise DomainError(f"expected {len(ps)} pair values, got shape {pair_values.shape}")
    return float(np.sum(ps.weight * pair_values))
