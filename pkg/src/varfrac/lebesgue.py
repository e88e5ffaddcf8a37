"""Grid functions, variable-exponent modulars and Luxemburg norms on Omega."""
from __future__ import annotations

import numpy as np

from .domain import GridDomain
from .errors import ConvergenceError, DomainError, X0Error
from .exponent import ScalarExponent, conjugate, point_variables, point_env
from .expr import Expression

__all__ = [
    "GridFunction",
    "random_bump_function",
    "function_from_expr",
    "luxemburg",
    "modular_lebesgue",
    "luxemburg_norm",
    "holder_pairing",
    "check_modular_norm_relations",
]

MAX_BISECT = 200


class GridFunction:
    """Nodal values of a function on the grid box.

    ``in_x0`` marks membership in the zero-exterior subspace; pass ``None``
    to infer it from the values.
    """

    __slots__ = ("grid", "values", "in_x0")

    def __init__(self, grid: GridDomain, values, in_x0: bool | None = None):
        values = np.array(values, dtype=float).reshape(-1)
        if values.shape != (grid.n,):
            raise DomainError(f"expected {grid.n} nodal values, got {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("grid function has non-finite values")
        vanishes = not np.any(values[~grid.in_omega])
        if in_x0 is None:
            in_x0 = vanishes
        elif in_x0 and not vanishes:
            raise X0Error("function flagged as zero-exterior is nonzero outside Omega")
        self.grid = grid
        self.values = values
        self.in_x0 = bool(in_x0)

    @classmethod
    def zeros(cls, grid):
        return cls(grid, np.zeros(grid.n), True)

    @classmethod
    def from_interior(cls, grid, interior_values):
        v = np.zeros(grid.n)
        v[grid.omega_index] = interior_values
        return cls(grid, v, True)

    @property
    def interior(self):
        return self.values[self.grid.omega_index]

    def _other(self, other):
        if isinstance(other, GridFunction):
            if other.grid is not self.grid:
                raise DomainError("grid functions live on different grids")
            return other.values
        return other

    def __add__(self, other):
        return GridFunction(self.grid, self.values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return GridFunction(self.grid, self.values - self._other(other))

    def __neg__(self):
        return GridFunction(self.grid, -self.values, self.in_x0)

    def __mul__(self, c):
        return GridFunction(self.grid, self.values * float(c), self.in_x0)

    __rmul__ = __mul__

    def __truediv__(self, c):
        return GridFunction(self.grid, self.values / float(c), self.in_x0)

    def max_abs(self):
        return float(np.max(np.abs(self.values)))

    def __repr__(self):
        return f"GridFunction(n={self.grid.n}, in_x0={self.in_x0}, max|u|={self.max_abs():.3g})"


def _exterior_distance(g: GridDomain, pts):
    ext = g.nodes[~g.in_omega]
    d = np.sqrt(((pts[:, None, :] - ext[None, :, :]) ** 2).sum(axis=2))
    return d.min(axis=1)


def random_bump_function(g: GridDomain, rng, max_bumps=5, amplitude=1.0) -> GridFunction:
    """Sum of 1..max_bumps signed C-infinity bumps supported inside Omega.

    Each bump radius stays below the distance from its center to the nearest
    exterior node, so the result lies in the zero-exterior subspace.
    """
    k = int(rng.integers(1, max_bumps + 1))
    idx = g.omega_index[rng.integers(0, g.n_omega, size=k)]
    centers = g.nodes[idx] + rng.uniform(-0.5, 0.5, size=(k, g.dim)) * g.h
    radii = _exterior_distance(g, centers) * rng.uniform(0.6, 1.0, size=k)
    amps = rng.uniform(-1.0, 1.0, size=k) * amplitude
    vals = np.zeros(g.n)
    for c, r, a in zip(centers, radii, amps):
        t = np.sum((g.nodes - c) ** 2, axis=1) / r**2
        inside = t < 1.0
        vals[inside] += a * np.exp(1.0 - 1.0 / (1.0 - t[inside]))
    vals[~g.in_omega] = 0.0
    if not np.any(vals):
        # all bumps fell between nodes; put a single spike on one Omega node
        vals[idx[0]] = amps[0] if amps[0] != 0 else amplitude
    return GridFunction(g, vals, True)


def function_from_expr(g: GridDomain, text: str, x0=True) -> GridFunction:
    """Evaluate a closed form at the nodes; zero it outside Omega if ``x0``."""
    e = Expression(text, point_variables(g.dim))
    vals = np.broadcast_to(np.asarray(e(**point_env(g.nodes)), dtype=float), (g.n,)).copy()
    if x0:
        vals[~g.in_omega] = 0.0
    return GridFunction(g, vals, x0 or None)


def luxemburg(weights, magnitudes, exponents, upper=None):
    """Smallest lam > 0 with sum w |a/lam|^e <= 1, by bisection.

    Returns ``(lam, iterations)``.  The map lam -> sum w (a/lam)^e is
    continuous and strictly decreasing once some ``w * a > 0``, so bisection
    on a bracketing interval converges unconditionally.
    """
    w = np.asarray(weights, dtype=float)
    a = np.asarray(magnitudes, dtype=float)
    e = np.broadcast_to(np.asarray(exponents, dtype=float), a.shape)
    keep = (a > 0) & (w > 0)
    if not keep.any():
        return 0.0, 0
    w, a, e = w[keep], a[keep], e[keep]

    def excess(lam):
        with np.errstate(over="ignore"):
            return float(np.sum(w * (a / lam) ** e)) - 1.0

    lo = 1e-14
    if upper is None:
        upper = max(1.0, float(a.max()) * float(w.sum()) ** (1.0 / float(e.min())))
    hi = 2.0 * upper
    for _ in range(MAX_BISECT):
        if excess(hi) <= 0:
            break
        lo, hi = hi, 2.0 * hi
    else:
        raise ConvergenceError("could not bracket the Luxemburg norm from above", best=hi)
    for _ in range(MAX_BISECT):
        if excess(lo) > 0:
            break
        lo /= 2.0
    else:
        raise ConvergenceError("could not bracket the Luxemburg norm from below", best=lo)
    it = 0
    while hi - lo > 4 * np.finfo(float).eps * hi:
        if it >= MAX_BISECT:
            raise ConvergenceError("Luxemburg bisection did not converge", best=hi)
        mid = 0.5 * (lo + hi)
        if excess(mid) > 0:
            lo = mid
        else:
            hi = mid
        it += 1
    return 0.5 * (lo + hi), it


def _check_same_grid(u: GridFunction, q: ScalarExponent):
    if u.grid is not q.grid:
        raise DomainError("function and exponent are defined on different grids")


def modular_lebesgue(u: GridFunction, q: ScalarExponent) -> float:
    """Quadrature of |u|^q(x) over Omega."""
    _check_same_grid(u, q)
    g = u.grid
    idx = g.omega_index
    return float(np.sum(g.weights[idx] * np.abs(u.values[idx]) ** q.values[idx]))


def luxemburg_norm(u: GridFunction, q: ScalarExponent) -> float:
    _check_same_grid(u, q)
    g = u.grid
    idx = g.omega_index
    upper = max(1.0, u.max_abs() * g.measure ** (1.0 / q.q_minus))
    lam, _ = luxemburg(g.weights[idx], np.abs(u.values[idx]), q.values[idx], upper)
    return lam


def holder_pairing(u: GridFunction, v: GridFunction, q: ScalarExponent):
    """``(|int uv|, 2 ||u||_q ||v||_qhat)``; the first never exceeds the second."""
    _check_same_grid(u, q)
    _check_same_grid(v, q)
    g = u.grid
    idx = g.omega_index
    lhs = abs(float(np.sum(g.weights[idx] * u.values[idx] * v.values[idx])))
    rhs = 2.0 * luxemburg_norm(u, q) * luxemburg_norm(v, conjugate(q))
    return lhs, rhs


def unit_ball_relations(norm, modular, lo_exp, hi_exp, tol=1e-9):
    """Check the norm/modular correspondence for a Luxemburg pair.

    Shared by the Lebesgue and Gagliardo versions.  Returns a report with a
    pass flag per clause and the list of violated clauses.
    """
    rep = {"norm": norm, "modular": modular, "exp_minus": lo_exp, "exp_plus": hi_exp}
    violations = []
    if abs(norm - 1.0) <= tol:
        unit_ok = abs(modular - 1.0) <= tol * (1.0 + hi_exp)
    else:
        unit_ok = (norm < 1.0) == (modular < 1.0)
    rep["unit"] = bool(unit_ok)
    if not unit_ok:
        violations.append("unit")
    below = above = True
    if norm < 1.0:
        below = norm**hi_exp * (1 - tol) <= modular <= norm**lo_exp * (1 + tol)
    if norm > 1.0:
        above = norm**lo_exp * (1 - tol) <= modular <= norm**hi_exp * (1 + tol)
    rep["below_one"] = bool(below)
    rep["above_one"] = bool(above)
    if not below:
        violations.append("below_one")
    if not above:
        violations.append("above_one")
    rep["violations"] = violations
    rep["passed"] = not violations
    return rep


def check_modular_norm_relations(u: GridFunction, q: ScalarExponent, tol=1e-9) -> dict:
    """Norm/modular inequalities for L^q(x) with q- and q+ on Omega."""
    if not np.any(u.interior):
        raise ValueError("relations need u != 0 on Omega")
    return unit_ball_relations(luxemburg_norm(u, q), modular_lebesgue(u, q),
                               q.q_minus, q.q_plus, tol)
