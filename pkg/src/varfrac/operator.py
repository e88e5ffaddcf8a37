"""Matrix-free weak form of the nonlocal p(x,.)-operator and its energy.

For zero-exterior grid functions ``u`` and ``phi`` the pairing is

    <L u, phi> = sum over pairs of w_i w_j K_ij psi(u_i - u_j) (phi_i - phi_j)

with ``psi(t) = |t|^(p_ij - 2) t``.  It is the derivative of
``sigma(u) = sum w_i w_j K_ij |u_i - u_j|^p_ij / p_ij``.
"""
from __future__ import annotations

import functools
import warnings
from dataclasses import dataclass

import numpy as np

from .domain import GridDomain, PairSet, pairset
from .errors import DomainError, X0Error
from .exponent import ExponentField
from .kernel import Kernel
from .lebesgue import GridFunction, luxemburg
from .sobolev import PairData, gagliardo_seminorm, pair_data

__all__ = [
    "WeakOperator",
    "DualVector",
    "weak_operator",
    "apply_weak",
    "energy",
    "gradient",
    "monotonicity_probe",
    "coercivity_probe",
    "boundedness_probe",
    "signed_power",
]

HESSIAN_FLOOR = 1e-8


def signed_power(t, p):
    """|t|^(p-2) t, taken as 0 at t = 0."""
    return np.sign(t) * np.abs(t) ** (p - 1.0)


@dataclass(frozen=True, eq=False)
class WeakOperator:
    """The operator for one kernel, exponent and pair set."""

    K: Kernel
    p: ExponentField
    ps: PairSet

    @functools.cached_property
    def data(self) -> PairData:
        return pair_data(self.ps, self.K, self.p)

    @property
    def grid(self) -> GridDomain:
        return self.ps.grid

    def _diffs(self, values):
        return self.data.diffs(np.asarray(values, dtype=float))

    def pairing(self, u_values, phi_values) -> float:
        d = self.data
        return float(np.sum(d.coef * signed_power(self._diffs(u_values), d.p)
                            * self._diffs(phi_values)))

    def modular(self, u_values) -> float:
        d = self.data
        return float(np.sum(d.coef * np.abs(self._diffs(u_values)) ** d.p))

    def sigma(self, u_values) -> float:
        d = self.data
        return float(np.sum(d.coef * np.abs(self._diffs(u_values)) ** d.p / d.p))

    def sigma_gradient(self, u_values):
        """Euclidean gradient of sigma with respect to all nodal values."""
        d = self.data
        c = d.coef * signed_power(self._diffs(u_values), d.p)
        n = self.grid.n
        # bincount accumulates in pair order, a fixed per-node combination
        return np.bincount(self.ps.i, c, n) - np.bincount(self.ps.j, c, n)

    def sigma_hessian(self, u_values, index=None):
        """Dense Hessian of sigma restricted to ``index`` (Omega nodes by default).

        Where p < 2 the factor |t|^(p-2) is singular at t = 0; differences are
        floored at ``HESSIAN_FLOOR`` so the matrix stays finite.
        """
        d = self.data
        t = np.abs(self._diffs(u_values))
        t = np.where(d.p < 2.0, np.maximum(t, HESSIAN_FLOOR), t)
        c = d.coef * (d.p - 1.0) * t ** (d.p - 2.0)
        n = self.grid.n
        H = np.zeros((n, n))
        diag = np.bincount(self.ps.i, c, n) + np.bincount(self.ps.j, c, n)
        np.add.at(H, (self.ps.i, self.ps.j), -c)
        np.add.at(H, (self.ps.j, self.ps.i), -c)
        H[np.diag_indices(n)] += diag
        if index is None:
            index = self.grid.omega_index
        return H[np.ix_(index, index)]


@functools.lru_cache(maxsize=64)
def weak_operator(K: Kernel, p: ExponentField, ps: PairSet | None = None) -> WeakOperator:
    return WeakOperator(K, p, pairset(p.grid, "Q") if ps is None else ps)


class DualVector:
    """Linear functional represented by nodal coefficients.

    Acts on grid functions by ``<f, v> = sum over Omega of w f v``; values at
    exterior nodes never enter.
    """

    __slots__ = ("grid", "coeffs")

    def __init__(self, grid: GridDomain, coeffs):
        coeffs = np.array(coeffs, dtype=float).reshape(-1)
        if coeffs.shape != (grid.n,):
            raise DomainError(f"expected {grid.n} coefficients, got {coeffs.shape}")
        self.grid = grid
        self.coeffs = coeffs

    @classmethod
    def zeros(cls, grid):
        return cls(grid, np.zeros(grid.n))

    def __call__(self, v: GridFunction) -> float:
        if v.grid is not self.grid:
            raise DomainError("functional and function live on different grids")
        idx = self.grid.omega_index
        return float(np.sum(self.grid.weights[idx] * self.coeffs[idx] * v.values[idx]))

    def max_norm(self):
        return float(np.max(np.abs(self.coeffs[self.grid.omega_index])))


def _x0(*fs):
    for f in fs:
        if not f.in_x0:
            raise X0Error("the weak form is defined for zero-exterior functions only")


def apply_weak(L: WeakOperator, u: GridFunction, phi: GridFunction) -> float:
    """<L u, phi>."""
    _x0(u, phi)
    return L.pairing(u.values, phi.values)


def energy(u: GridFunction, K: Kernel, p: ExponentField, f: DualVector | None = None) -> float:
    """sigma(u) - <f, u>; convex in u."""
    _x0(u)
    val = weak_operator(K, p).sigma(u.values)
    return val - (f(u) if f is not None else 0.0)


def gradient(u: GridFunction, K: Kernel, p: ExponentField,
             f: DualVector | None = None) -> DualVector:
    """Nodal representative of phi -> <L u, phi> - <f, phi>.

    Coefficient ``i`` times ``w_i`` equals the functional applied to the
    indicator of node ``i``; exterior coefficients are zero.
    """
    _x0(u)
    g = u.grid
    G = weak_operator(K, p).sigma_gradient(u.values)
    out = np.zeros(g.n)
    idx = g.omega_index
    out[idx] = G[idx] / g.weights[idx]
    if f is not None:
        out[idx] -= f.coeffs[idx]
    return DualVector(g, out)


def monotonicity_probe(u: GridFunction, v: GridFunction, K: Kernel, p: ExponentField) -> float:
    """<L u - L v, u - v>; strictly positive whenever u != v."""
    _x0(u, v)
    if np.array_equal(u.values, v.values):
        warnings.warn("monotonicity probe called with u == v", RuntimeWarning, stacklevel=2)
        return 0.0
    L = weak_operator(K, p)
    w = u.values - v.values
    return L.pairing(u.values, w) - L.pairing(v.values, w)


def coercivity_probe(u: GridFunction, K: Kernel, p: ExponentField,
                     scalings=(1.0, 2.0, 4.0, 8.0), tol=1e-9) -> dict:
    """Lower bounds of <L u, u> by powers of the seminorm, and growth of
    <L(tu), tu> / [tu] along the given scalings."""
    _x0(u)
    L = weak_operator(K, p)
    pairing = L.pairing(u.values, u.values)
    sem = gagliardo_seminorm(u, K, p).seminorm
    if sem > 1.0:
        bound = sem**p.p_minus
    else:
        bound = sem**p.p_plus
    ratios = []
    for t in scalings:
        tu = u.values * t
        ratios.append(L.pairing(tu, tu) / (t * sem))
    increasing = all(b > a for a, b in zip(ratios, ratios[1:]))
    return {
        "pairing": pairing,
        "seminorm": sem,
        "lower_bound": bound,
        "bound_holds": bool(pairing >= bound * (1 - tol)),
        "ratios": ratios,
        "ratios_increasing": bool(increasing),
        "passed": bool(pairing >= bound * (1 - tol) and increasing),
    }


def boundedness_probe(u: GridFunction, phi: GridFunction, K: Kernel, p: ExponentField) -> dict:
    """|<L u, phi>| against 2 ||Psi||_{L^phat(Q)} ||Phi||_{L^p(Q)}.

    Psi = |u_i - u_j|^(p-1) K^(1/phat) and Phi = |phi_i - phi_j| K^(1/p).
    """
    _x0(u, phi)
    L = weak_operator(K, p)
    d = L.data
    pv, kv = d.p, d.k
    phat = pv / (pv - 1.0)
    Psi = np.abs(d.diffs(u.values)) ** (pv - 1.0) * kv ** (1.0 / phat)
    Phi = np.abs(d.diffs(phi.values)) * kv ** (1.0 / pv)
    w = L.ps.weight
    n_psi, _ = luxemburg(w, Psi, phat)
    n_phi, _ = luxemburg(w, Phi, pv)
    lhs = abs(L.pairing(u.values, phi.values))
    rhs = 2.0 * n_psi * n_phi
    return {"lhs": lhs, "rhs": rhs, "passed": bool(lhs <= rhs * (1 + 1e-12))}
