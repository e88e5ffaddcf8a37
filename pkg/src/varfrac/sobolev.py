"""Gagliardo-type modulars and seminorms over pair sets, plus space comparisons."""
from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np

from .domain import PairSet, pairset
from .errors import ExponentError, KernelError, X0Error
from .exponent import ExponentField, ScalarExponent, critical_exponent, trace
from .kernel import Kernel, singular_kernel, validate_kernel
from .lebesgue import GridFunction, luxemburg, luxemburg_norm, unit_ball_relations

__all__ = [
    "PairData",
    "pair_data",
    "SeminormResult",
    "gagliardo_modular",
    "gagliardo_seminorm",
    "fractional_seminorm",
    "full_norm",
    "check_modular_seminorm_relations",
    "check_modular_triangle",
    "compare_spaces",
    "embedding_ratio",
    "ZERO_INPUT",
]

ZERO_INPUT = "zero-input"


@dataclass(frozen=True, eq=False)
class PairData:
    """Exponent and kernel sampled once on a pair set.

    ``coef`` is ``w_i w_j K(x_i, x_j)``; every pair sum in the package is
    ``sum(coef * g(u_i - u_j, p_ij))`` for some integrand ``g``.
    """

    ps: PairSet
    p: np.ndarray
    k: np.ndarray
    coef: np.ndarray

    def diffs(self, values):
        return values[self.ps.i] - values[self.ps.j]


@functools.lru_cache(maxsize=64)
def pair_data(ps: PairSet, K: Kernel, p: ExponentField) -> PairData:
    if ps.grid is not p.grid:
        raise ValueError("pair set and exponent are defined on different grids")
    x, y = ps.points
    pv = p(x, y)
    kv = K(x, y)
    return PairData(ps, pv, kv, ps.weight * kv)


@functools.lru_cache(maxsize=64)
def _trace(p: ExponentField) -> ScalarExponent:
    return trace(p)


def _require_x0(u: GridFunction):
    if not u.in_x0:
        raise X0Error("pair integrals over Q need a function that vanishes outside Omega")


def _data(u, K, p, ps):
    _require_x0(u)
    if ps is None:
        ps = pairset(u.grid, "Q")
    if ps.grid is not u.grid:
        raise ValueError("function and pair set are defined on different grids")
    return pair_data(ps, K, p)


def gagliardo_modular(u: GridFunction, K: Kernel, p: ExponentField,
                      ps: PairSet | None = None) -> float:
    """Pair sum of w_i w_j |u_i - u_j|^p K over Q (or the given pair set)."""
    d = _data(u, K, p, ps)
    return float(np.sum(d.coef * np.abs(d.diffs(u.values)) ** d.p))


@dataclass(frozen=True)
class SeminormResult:
    seminorm: float
    modular_at_unit: float
    iterations: int


def _seminorm(d: PairData, values):
    diff = np.abs(d.diffs(values))
    lam, it = luxemburg(d.coef, diff, d.p)
    unit = float(np.sum(d.coef * (diff / lam) ** d.p)) if lam > 0 else 0.0
    return SeminormResult(lam, unit, it)


def gagliardo_seminorm(u: GridFunction, K: Kernel, p: ExponentField,
                       ps: PairSet | None = None) -> SeminormResult:
    """Luxemburg seminorm induced by the Gagliardo modular."""
    return _seminorm(_data(u, K, p, ps), u.values)


def fractional_seminorm(u: GridFunction, p: ExponentField) -> float:
    """Seminorm of W^{s,p(x,y)}(Omega): singular kernel over Omega x Omega only."""
    ps = pairset(u.grid, "omega")
    d = pair_data(ps, _singular(p), p)
    return _seminorm(d, u.values).seminorm


@functools.lru_cache(maxsize=64)
def _singular(p):
    return singular_kernel(p)


def full_norm(u: GridFunction, K: Kernel, p: ExponentField) -> float:
    """L^{pbar} norm on Omega plus the K-seminorm."""
    return luxemburg_norm(u, _trace(p)) + gagliardo_seminorm(u, K, p).seminorm


def check_modular_seminorm_relations(u: GridFunction, K: Kernel, p: ExponentField,
                                     tol=1e-9) -> dict:
    """Power bounds between the modular and the seminorm with p- and p+."""
    res = gagliardo_seminorm(u, K, p)
    if res.seminorm == 0:
        raise ValueError("relations need a nonzero seminorm")
    rep = unit_ball_relations(res.seminorm, gagliardo_modular(u, K, p),
                              p.p_minus, p.p_plus, tol)
    return rep


def check_modular_triangle(u: GridFunction, v: GridFunction, K: Kernel,
                           p: ExponentField, slack=1e-12) -> dict:
    """rho(u + v) <= 2^(p+ - 1) (rho(u) + rho(v))."""
    lhs = gagliardo_modular(u + v, K, p)
    rhs = 2.0 ** (p.p_plus - 1.0) * (gagliardo_modular(u, K, p) + gagliardo_modular(v, K, p))
    return {"lhs": lhs, "rhs": rhs,
            "passed": bool(lhs <= rhs + slack * max(1.0, rhs))}


def ktilde(k0, p_minus, p_plus):
    """max(k0^(-1/p-), k0^(-1/p+))."""
    return max(k0 ** (-1.0 / p_minus), k0 ** (-1.0 / p_plus))


def compare_spaces(u: GridFunction, K: Kernel, p: ExponentField):
    """``(seminorm_s, seminorm_K, ktilde)`` for a zero-exterior ``u``.

    ``seminorm_s`` uses the singular kernel over Omega x Omega, ``seminorm_K``
    the given kernel over Q.  The first never exceeds ``ktilde`` times the
    second when K is bounded below by k0 times the singular kernel.
    """
    _require_x0(u)
    rep = validate_kernel(K, p, refine=False)
    if not (rep["symmetry"] and rep["lower_bound"]):
        raise KernelError(f"kernel {K.name} is not admissible: {rep}")
    sem_s = fractional_seminorm(u, p)
    sem_k = gagliardo_seminorm(u, K, p).seminorm
    return sem_s, sem_k, ktilde(K.k0, p.p_minus, p.p_plus)


def embedding_ratio(u: GridFunction, r: ScalarExponent, K: Kernel, p: ExponentField):
    """||u||_{L^r} / ||u||_{K,p}, or ``ZERO_INPUT`` when u vanishes.

    Requires r(x) < p*_s(x) on every Omega node.
    """
    pstar = critical_exponent(p)
    idx = u.grid.omega_index
    if np.any(r.values[idx] >= pstar.values[idx]):
        raise ExponentError("embedding exponent r must stay below the critical exponent")
    _require_x0(u)
    if not np.any(u.values):
        return ZERO_INPUT
    return luxemburg_norm(u, r) / full_norm(u, K, p)
