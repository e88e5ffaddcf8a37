"""Variable exponents: two-point fields p(x, y) and one-point fields q(x)."""
from __future__ import annotations

import functools
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .domain import GridDomain
from .errors import ExponentError
from .expr import Expression

__all__ = [
    "ExponentField",
    "ScalarExponent",
    "trace",
    "conjugate",
    "critical_exponent",
    "validate_translation_invariance",
    "constant_exponent",
    "sine_exponent",
    "distance_exponent",
    "expression_exponent",
    "exponent_from_spec",
    "constant_scalar",
    "expression_scalar",
    "scalar_from_spec",
    "pair_variables",
    "point_variables",
    "pair_env",
    "point_env",
]

SLACK = 1e-9
SYMMETRY_TOL = 1e-12


def _as_points(x):
    x = np.asarray(x, dtype=float)
    return x.reshape(-1, 1) if x.ndim == 1 else x


@dataclass(frozen=True, eq=False)
class ExponentField:
    """Symmetric exponent p(x, y) with bounds sampled on a grid.

    Build with :meth:`on_grid`; the bounds ``p_minus``/``p_plus`` are the
    extremes over every node pair of the grid box, diagonal included.
    """

    func: Callable = field(repr=False)
    s: float
    grid: GridDomain = field(repr=False)
    p_minus: float
    p_plus: float
    name: str = "custom"

    @classmethod
    def on_grid(cls, func, s, g: GridDomain, name="custom"):
        if not 0.0 < s < 1.0:
            raise ExponentError(f"s must lie in (0, 1), got {s}")
        x = np.repeat(g.nodes, g.n, axis=0)
        y = np.tile(g.nodes, (g.n, 1))
        vals = np.broadcast_to(np.asarray(func(x, y), dtype=float), (len(x),))
        if not np.all(np.isfinite(vals)):
            raise ExponentError(f"exponent {name} is not finite on the grid")
        swapped = np.broadcast_to(np.asarray(func(y, x), dtype=float), (len(x),))
        asym = float(np.max(np.abs(vals - swapped)))
        if asym > SYMMETRY_TOL:
            raise ExponentError(f"exponent {name} is not symmetric (max violation {asym:.3g})")
        p_minus, p_plus = float(vals.min()), float(vals.max())
        if p_minus <= 1.0 + SLACK:
            raise ExponentError(f"exponent {name} has p- = {p_minus} <= 1")
        return cls(func, float(s), g, p_minus, p_plus, name)

    def __call__(self, x, y):
        x, y = _as_points(x), _as_points(y)
        return np.broadcast_to(np.asarray(self.func(x, y), dtype=float), (len(x),)).copy()

    @property
    def dim(self):
        return self.grid.dim

    @property
    def subcritical(self):
        """Whether ``s * p_plus < N`` holds with slack."""
        return self.s * self.p_plus < self.dim - SLACK

    def report(self):
        return {
            "field": self.name,
            "s": self.s,
            "p_minus": self.p_minus,
            "p_plus": self.p_plus,
            "s_p_plus": self.s * self.p_plus,
            "subcritical": bool(self.subcritical),
        }


@dataclass(frozen=True, eq=False)
class ScalarExponent:
    """Exponent q(x) with bounds sampled on the Omega nodes of a grid."""

    func: Callable = field(repr=False)
    grid: GridDomain = field(repr=False)
    q_minus: float
    q_plus: float
    name: str = "custom"

    @classmethod
    def on_grid(cls, func, g: GridDomain, name="custom"):
        vals = np.broadcast_to(np.asarray(func(g.nodes), dtype=float), (g.n,))
        inner = vals[g.omega_index]
        if not np.all(np.isfinite(inner)):
            raise ExponentError(f"exponent {name} is not finite on Omega")
        q_minus, q_plus = float(inner.min()), float(inner.max())
        if q_minus <= 1.0 + SLACK:
            raise ExponentError(f"exponent {name} has q- = {q_minus} <= 1")
        return cls(func, g, q_minus, q_plus, name)

    def __call__(self, x):
        x = _as_points(x)
        return np.broadcast_to(np.asarray(self.func(x), dtype=float), (len(x),)).copy()

    @functools.cached_property
    def values(self):
        """Nodal values on the whole grid."""
        return self(self.grid.nodes)


def trace(p: ExponentField) -> ScalarExponent:
    """The diagonal x -> p(x, x)."""
    return ScalarExponent.on_grid(lambda x: p.func(x, x), p.grid, f"trace({p.name})")


def conjugate(q: ScalarExponent) -> ScalarExponent:
    """Pointwise conjugate q/(q-1)."""
    def qhat(x):
        v = np.asarray(q.func(x), dtype=float)
        return v / (v - 1.0)
    return ScalarExponent.on_grid(qhat, q.grid, f"conjugate({q.name})")


def critical_exponent(p: ExponentField, N: int | None = None) -> ScalarExponent:
    """Fractional Sobolev critical exponent N pbar / (N - s pbar)."""
    N = p.dim if N is None else N
    if not p.s * p.p_plus < N - SLACK:
        raise ExponentError(f"s*p+ = {p.s * p.p_plus} is not below N = {N}")
    s = p.s

    def pstar(x):
        pbar = np.asarray(p.func(x, x), dtype=float)
        return N * pbar / (N - s * pbar)
    return ScalarExponent.on_grid(pstar, p.grid, f"critical({p.name})")


def validate_translation_invariance(p: ExponentField, samples=None, n_samples=1000,
                                    seed=0, tol=1e-12) -> dict:
    """Max of |p(x - z, y - z) - p(x, y)| over sampled triples (x, y, z).

    ``samples`` may be an ``(x, y, z)`` tuple of point arrays; otherwise
    triples are drawn uniformly from the grid box.
    """
    if samples is None:
        rng = np.random.default_rng(seed)
        box = np.asarray(p.grid.box)
        lo, hi = box[:, 0], box[:, 1]
        x, y, z = (rng.uniform(lo, hi, size=(n_samples, p.dim)) for _ in range(3))
    else:
        x, y, z = (_as_points(a) for a in samples)
    viol = float(np.max(np.abs(p(x - z, y - z) - p(x, y))))
    return {"field": p.name, "max_violation": viol, "passed": bool(viol < tol)}


# -- catalog ----------------------------------------------------------------

def constant_exponent(value, s, g):
    value = float(value)
    return ExponentField.on_grid(lambda x, y: np.full(len(x), value), s, g,
                                 f"constant({value:g})")


def sine_exponent(s, g, base=2.0, lam=0.5):
    """base + lam |sin(sum x + sum y)|."""
    def p(x, y):
        return base + lam * np.abs(np.sin(np.sum(x, axis=1) + np.sum(y, axis=1)))
    return ExponentField.on_grid(p, s, g, f"sine({base:g},{lam:g})")


def distance_exponent(s, g, c0=2.0, c1=0.5, lo=1.5, hi=3.0):
    """c0 + c1 |x - y| clipped to [lo, hi]; translation invariant."""
    def p(x, y):
        r = np.sqrt(np.sum((x - y) ** 2, axis=1))
        return np.clip(c0 + c1 * r, lo, hi)
    return ExponentField.on_grid(p, s, g, f"distance({c0:g},{c1:g},{lo:g},{hi:g})")


def pair_env(x, y):
    env = {"x": x[:, 0], "y": y[:, 0],
           "r": np.sqrt(np.sum((x - y) ** 2, axis=1)), "z": x[:, 0] - y[:, 0]}
    for k in range(x.shape[1]):
        env[f"x{k + 1}"] = x[:, k]
        env[f"y{k + 1}"] = y[:, k]
    return env


def pair_variables(dim):
    return ("x", "y", "r", "z") + tuple(f"{c}{k + 1}" for c in "xy" for k in range(dim))


def point_variables(dim):
    return ("x", "r") + tuple(f"x{k + 1}" for k in range(dim))


def point_env(x):
    env = {"x": x[:, 0], "r": np.sqrt(np.sum(x**2, axis=1))}
    for k in range(x.shape[1]):
        env[f"x{k + 1}"] = x[:, k]
    return env


def expression_exponent(text, s, g):
    e = Expression(text, pair_variables(g.dim))
    return ExponentField.on_grid(lambda x, y: e(**pair_env(x, y)), s, g, f"expr({text})")


def exponent_from_spec(spec: dict, g: GridDomain) -> ExponentField:
    kind = spec.get("kind", "constant")
    s = float(spec.get("s", 0.3))
    if kind == "constant":
        return constant_exponent(spec.get("value", 2.0), s, g)
    if kind == "sine":
        return sine_exponent(s, g, float(spec.get("base", 2.0)), float(spec.get("lam", 0.5)))
    if kind == "distance":
        return distance_exponent(s, g, float(spec.get("c0", 2.0)), float(spec.get("c1", 0.5)),
                                 float(spec.get("lo", 1.5)), float(spec.get("hi", 3.0)))
    if kind == "expr":
        return expression_exponent(spec["expr"], s, g)
    raise ExponentError(f"unknown exponent kind {kind!r}")


def constant_scalar(value, g):
    value = float(value)
    return ScalarExponent.on_grid(lambda x: np.full(len(x), value), g, f"constant({value:g})")


def expression_scalar(text, g):
    e = Expression(text, point_variables(g.dim))
    return ScalarExponent.on_grid(lambda x: e(**point_env(x)), g, f"expr({text})")


def scalar_from_spec(spec, g: GridDomain) -> ScalarExponent:
    if isinstance(spec, (int, float)):
        return constant_scalar(spec, g)
    kind = spec.get("kind", "constant")
    if kind == "constant":
        return constant_scalar(spec.get("value", 2.0), g)
    if kind == "expr":
        return expression_scalar(spec["expr"], g)
    raise ExponentError(f"unknown scalar exponent kind {kind!r}")
