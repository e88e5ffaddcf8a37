"""Interaction kernels K(x, y) and their admissibility checks."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .domain import GridDomain, pairset
from .errors import KernelError
from .exponent import ExponentField, pair_env, pair_variables
from .expr import Expression

__all__ = [
    "Kernel",
    "singular_kernel",
    "multiplied_kernel",
    "scaled_kernel",
    "custom_kernel",
    "interaction_weight",
    "validate_kernel",
    "kernel_from_spec",
]


def _distance(x, y):
    return np.sqrt(np.sum((x - y) ** 2, axis=1))


@dataclass(frozen=True, eq=False)
class Kernel:
    """Kernel map plus the lower-bound constant it claims."""

    func: Callable = field(repr=False)
    k0: float
    kind: str
    name: str = ""

    def __call__(self, x, y):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        y = np.atleast_2d(np.asarray(y, dtype=float))
        return np.broadcast_to(np.asarray(self.func(x, y), dtype=float), (len(x),)).copy()


def singular_kernel(p: ExponentField, N: int | None = None) -> Kernel:
    """|x - y|^-(N + s p(x, y))."""
    N = p.dim if N is None else N
    s = p.s

    def K(x, y):
        return _distance(x, y) ** -(N + s * p.func(x, y))
    return Kernel(K, 1.0, "singular", f"singular[{p.name}]")


def multiplied_kernel(p: ExponentField, a: Callable, N: int | None = None,
                      bound: float | None = None) -> Kernel:
    """Singular kernel times a(x - y) with a >= 1 bounded and even.

    ``a`` maps an ``(m, dim)`` array of differences to values.  Its range and
    evenness are checked on every difference of the grid box.
    """
    base = singular_kernel(p, N)
    ps = pairset(p.grid, "box")
    x, y = ps.points
    z = x - y
    az = np.asarray(a(z), dtype=float)
    if not np.all(np.isfinite(az)):
        raise KernelError("multiplier a is not finite on the grid")
    if az.min() < 1.0:
        raise KernelError(f"multiplier a drops below 1 (min {az.min():.6g})")
    if bound is not None and az.max() > bound:
        raise KernelError(f"multiplier a exceeds its bound {bound}")
    odd = float(np.max(np.abs(az - np.asarray(a(-z), dtype=float))))
    if odd > 1e-12:
        raise KernelError(f"multiplier a is not even (max |a(z) - a(-z)| = {odd:.3g})")

    def K(x, y):
        return base.func(x, y) * a(x - y)
    return Kernel(K, 1.0, "multiplied", f"multiplied[{p.name}]")


def scaled_kernel(K: Kernel, c: float) -> Kernel:
    """c K; the lower-bound constant scales with c."""
    c = float(c)
    if not c > 0:
        raise KernelError("scale must be positive")
    return Kernel(lambda x, y: c * K.func(x, y), c * K.k0, K.kind, f"{c:g}*{K.name}")


def custom_kernel(func, k0, name="custom") -> Kernel:
    return Kernel(func, float(k0), "custom", name)


def interaction_weight(p: ExponentField, x, y):
    """min(1, |x - y|^p(x, y))."""
    return np.minimum(1.0, _distance(x, y) ** p(x, y))


def _integrability_sum(K: Kernel, p: ExponentField, g: GridDomain):
    ps = pairset(g, "box")
    x, y = ps.points
    return float(np.sum(ps.weight * interaction_weight(p, x, y) * K(x, y)))


def validate_kernel(K: Kernel, p: ExponentField, g: GridDomain | None = None,
                    refine: bool = True) -> dict:
    """Symmetry, lower bound with the declared k0, and truncated integrability.

    Integrability is judged on the box: the sum of m K over off-diagonal
    pairs must be finite and move by less than 10% under one refinement.
    """
    g = p.grid if g is None else g
    if g is not p.grid:
        raise KernelError("kernel validation needs the exponent's grid")
    N = g.dim
    ps = pairset(g, "box")
    x, y = ps.points
    kv = K(x, y)
    asym = float(np.max(np.abs(kv - kv[ps.swap_index])))
    scale = float(np.max(np.abs(kv)))
    symmetric = asym <= 1e-12 * max(1.0, scale)
    ratio = kv * ps.distance ** (N + p.s * p(x, y))
    min_ratio = float(ratio.min())
    lower_ok = min_ratio >= K.k0 * (1 - 1e-9)

    coarse = _integrability_sum(K, p, g)
    rep = {
        "kernel": K.name,
        "k0": K.k0,
        "symmetry": bool(symmetric),
        "max_asymmetry": asym,
        "lower_bound": bool(lower_ok),
        "min_ratio": min_ratio,
        "integral": coarse,
    }
    finite = bool(np.isfinite(coarse))
    if refine and finite:
        fine_g = g.refine()
        fine_p = ExponentField.on_grid(p.func, p.s, fine_g, p.name)
        fine = _integrability_sum(K, fine_p, fine_g)
        rel = abs(fine - coarse) / abs(fine) if fine else np.inf
        rep["integral_refined"] = fine
        rep["refinement_change"] = float(rel)
        integrable = bool(np.isfinite(fine) and rel < 0.10)
    else:
        integrable = finite
    rep["integrability"] = integrable
    rep["passed"] = bool(symmetric and lower_ok and integrable)
    return rep


def kernel_from_spec(spec: dict, p: ExponentField) -> Kernel:
    kind = spec.get("kind", "singular")
    dim = p.dim
    if kind == "singular":
        K = singular_kernel(p)
    elif kind == "multiplied":
        e = Expression(spec.get("a", "1"), ("z", "r") + tuple(f"z{k + 1}" for k in range(dim)))

        def a(z):
            env = {"z": z[:, 0], "r": np.sqrt(np.sum(z**2, axis=1))}
            env.update({f"z{k + 1}": z[:, k] for k in range(dim)})
            return np.broadcast_to(np.asarray(e(**env), dtype=float), (len(z),))
        K = multiplied_kernel(p, a, bound=spec.get("bound"))
    elif kind == "custom":
        e = Expression(spec["expr"], pair_variables(dim) + ("s", "p", "N"))
        s = p.s

        def K_func(x, y):
            return e(**pair_env(x, y), s=s, p=p.func(x, y), N=float(dim))
        K = custom_kernel(K_func, spec.get("k0", 1.0), f"expr({spec['expr']})")
    else:
        raise KernelError(f"unknown kernel kind {kind!r}")
    scale = spec.get("scale")
    if scale is not None and float(scale) != 1.0:
        K = scaled_kernel(K, scale)
    return K
