"""Solvers for the nonlocal Dirichlet problem and the Kirchhoff-type problem.

Dirichlet: minimize the convex energy ``sigma(u) - <f, u>`` over
zero-exterior functions with damped Newton steps and Armijo backtracking.

Kirchhoff: the functional ``J`` is unbounded below and its nontrivial
critical points are saddles of mountain-pass type, with ``J > 0`` there.
They are located by descent on the Nehari set (every iterate is rescaled to
the maximum of ``J`` along its ray) followed by Newton iterations on
``J' = 0``.
"""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve
from scipy.optimize import brentq

from .errors import ConvergenceError
from .exponent import ExponentField, ScalarExponent, critical_exponent
from .kernel import Kernel
from .lebesgue import GridFunction, random_bump_function
from .operator import DualVector, signed_power, weak_operator
from .sobolev import full_norm, gagliardo_seminorm

log = logging.getLogger(__name__)

__all__ = [
    "SolveReport",
    "solve_dirichlet",
    "KirchhoffData",
    "validate_kirchhoff",
    "theta_lower_bound",
    "kirchhoff_energy",
    "kirchhoff_derivative",
    "kirchhoff_gradient",
    "GeometryResult",
    "mountain_pass_geometry",
    "solve_kirchhoff",
    "descent_iterates",
    "ps_boundedness_probe",
]

ARMIJO = 1e-4
SHRINK = 0.5
MAX_HALVINGS = 60
# Newton iterations allowed without halving the best residual
STALL = 200


@dataclass
class SolveReport:
    solution: GridFunction
    residual: float
    iterations: int
    energy: float
    agreement: float | None = None
    converged: bool = True
    history: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)
    iterates: list = field(default_factory=list, repr=False)

    def summary(self) -> dict:
        out = {
            "residual": self.residual,
            "iterations": self.iterations,
            "energy": self.energy,
            "agreement": self.agreement,
            "converged": self.converged,
        }
        out.update(self.extra)
        return out


class _Interior:
    """Helpers to move between Omega-node vectors and full nodal arrays."""

    def __init__(self, g):
        self.g = g
        self.idx = g.omega_index
        self.w = g.weights[self.idx]

    def full(self, x):
        v = np.zeros(self.g.n)
        v[self.idx] = x
        return v

    def function(self, x):
        return GridFunction(self.g, self.full(x), True)


# -- Dirichlet problem --------------------------------------------------------

def _newton_descent(x, fun, grad, hess, w, tol, max_iter):
    """Damped Newton on a convex function; returns (x, residual, iterations, history).

    ``grad`` is the Euclidean gradient; the residual is its max-norm after
    division by the quadrature weights.
    """
    history = [fun(x)]
    best, since = np.inf, 0
    for it in range(max_iter):
        G = grad(x)
        res = float(np.max(np.abs(G / w))) if len(x) else 0.0
        if res <= tol:
            return x, res, it, history
        if res < 0.5 * best:
            best, since = res, 0
        else:
            since += 1
            if since > STALL:
                raise ConvergenceError(f"no progress for {STALL} iterations (residual {res:.3g})",
                                       best=(x, res))
        try:
            d = cho_solve(cho_factor(hess(x)), -G)
            if not np.all(np.isfinite(d)) or G @ d >= 0:
                raise LinAlgError("not a descent direction")
        except (LinAlgError, ValueError):
            d = -G / w
        slope = float(G @ d)
        I0 = history[-1]
        t = 1.0
        for _ in range(MAX_HALVINGS):
            trial = x + t * d
            It = fun(trial)
            if It <= I0 + ARMIJO * t * slope:
                break
            t *= SHRINK
        else:
            # The predicted decrease is below rounding of the energy: accept
            # the full step if it shrinks the residual.
            trial = x + d
            if abs(slope) <= 1e-12 * max(1.0, abs(I0)) and \
                    np.max(np.abs(grad(trial) / w)) < res:
                It = fun(trial)
            else:
                raise ConvergenceError("line search failed; configuration may be inadmissible",
                                       best=(x, res))
        x = trial
        history.append(It)
    G = grad(x)
    res = float(np.max(np.abs(G / w)))
    raise ConvergenceError(f"iteration cap {max_iter} reached (residual {res:.3g})", best=(x, res))


def solve_dirichlet(f: DualVector | None, K: Kernel, p: ExponentField, tol=1e-8,
                    seed=0, starts=3, max_iter=100_000) -> SolveReport:
    """Weak solution of L u = f with u = 0 outside Omega.

    Runs from ``starts`` initial points (zero, then seeded random bumps);
    the returned solution is the one started at zero and ``agreement`` is
    the largest max-norm distance between any two runs.

    For p < 2 the flux |t|^(p-2) t is only Holder continuous at 0, so
    rounding errors of size eps in pair differences that vanish exactly
    (symmetric solutions) leave a residual of order eps^(p-1).  Tolerances
    below that floor end in ConvergenceError.
    """
    g = p.grid
    L = weak_operator(K, p)
    sp = _Interior(g)
    fw = sp.w * (f.coeffs[sp.idx] if f is not None else 0.0)

    def fun(x):
        return L.sigma(sp.full(x)) - float(np.sum(fw * x))

    def grad(x):
        return L.sigma_gradient(sp.full(x))[sp.idx] - fw

    def hess(x):
        return L.sigma_hessian(sp.full(x), sp.idx)

    rng = np.random.default_rng(seed)
    inits = [np.zeros(g.n_omega)]
    for k in range(1, starts):
        inits.append(random_bump_function(g, rng, amplitude=float(k)).interior)

    runs = []
    for x0 in inits:
        x, res, it, hist = _newton_descent(x0, fun, grad, hess, sp.w, tol, max_iter)
        runs.append((x, res, it, hist))
    agreement = max((float(np.max(np.abs(a[0] - b[0]))) for a, b in
                     itertools.combinations(runs, 2)), default=0.0)
    x, res, it, hist = runs[0]
    return SolveReport(sp.function(x), res, it, hist[-1], agreement, True, hist,
                       {"starts": starts, "start_residuals": [r[1] for r in runs],
                        "start_iterations": [r[2] for r in runs]})


# -- Kirchhoff problem ----------------------------------------------------------

@dataclass(frozen=True)
class KirchhoffData:
    """Coefficient M(t) = a + b t^(alpha-1) and source f(x, t) = |t|^(gamma-2) t.

    ``theta`` defaults to gamma-, the largest constant for which
    theta F <= f t holds; ``beta`` (growth exponent) defaults to gamma.
    """

    a: float = 1.0
    b: float = 1.0
    alpha: float = 1.1
    mu: float = 0.0
    gamma: float | ScalarExponent = 4.0
    theta: float | None = None
    A: float = 1.0
    c1: float = 1.0
    beta: float | ScalarExponent | None = None
    source: bool = True

    def M(self, t):
        return self.a + self.b * t ** (self.alpha - 1.0)

    def M_hat(self, t):
        return self.a * t + self.b / self.alpha * t**self.alpha

    def M_prime(self, t):
        return self.b * (self.alpha - 1.0) * t ** (self.alpha - 2.0)

    def gamma_values(self, g):
        if isinstance(self.gamma, ScalarExponent):
            return self.gamma.values
        return np.full(g.n, float(self.gamma))

    def beta_values(self, g):
        beta = self.gamma if self.beta is None else self.beta
        if isinstance(beta, ScalarExponent):
            return beta.values
        return np.full(g.n, float(beta))

    def theta_value(self, g):
        if self.theta is not None:
            return float(self.theta)
        return float(self.gamma_values(g)[g.omega_index].min())

    def f(self, gam, t):
        if not self.source:
            return np.zeros_like(t)
        return signed_power(t, gam)

    def F(self, gam, t):
        if not self.source:
            return np.zeros_like(t)
        return np.abs(t) ** gam / gam

    def f_prime(self, gam, t):
        if not self.source:
            return np.zeros_like(t)
        return (gam - 1.0) * np.abs(t) ** (gam - 2.0)


def theta_lower_bound(data: KirchhoffData, p: ExponentField) -> float:
    """((1+mu)/(1-mu)) alpha+ (p+)^alpha+ / (p-)^(alpha- - 1)."""
    al = data.alpha
    return (1 + data.mu) / (1 - data.mu) * al * p.p_plus**al / p.p_minus ** (al - 1.0)


def validate_kirchhoff(data: KirchhoffData, p: ExponentField, t_grid=None) -> dict:
    """Check the structural hypotheses on sampled t values and Omega nodes.

    The growth condition on M is reported under ``advisory``: no M with
    M(0) = a > 0 can satisfy it near t = 0, the example family included.
    """
    g = p.grid
    idx = g.omega_index
    gam = data.gamma_values(g)[idx]
    beta = data.beta_values(g)[idx]
    theta = data.theta_value(g)
    if t_grid is None:
        t_grid = np.geomspace(1e-6, 1e6, 241)
    t = np.asarray(t_grid, dtype=float)
    checks = {}

    Mt = data.M(t)
    base = t ** (data.alpha - 1.0)
    m1 = bool(np.all((1 - data.mu) * base <= Mt) and np.all(Mt <= (1 + data.mu) * base))

    tt = np.concatenate([-t[::-1], t])[None, :]
    G, B = gam[:, None], beta[:, None]
    f_tt = data.f(G, tt)
    checks["growth_f0"] = bool(np.all(np.abs(f_tt) <= data.c1 * (1 + np.abs(tt) ** (B - 1)) * (1 + 1e-12)))

    small = 10.0 ** -np.arange(1, 13, dtype=float)
    ratio = np.max(np.abs(data.f(G, small[None, :])) / small[None, :] ** (p.p_plus - 1), axis=0)
    checks["small_t_f1"] = bool(np.all(np.diff(ratio) <= 0) and ratio[-1] < 1e-6)

    big = t[t > data.A][None, :]
    big = np.concatenate([-big, big], axis=1)
    lhs = theta * data.F(G, big)
    rhs = data.f(G, big) * big
    checks["ambrosetti_rabinowitz"] = bool(big.size and np.all(lhs > 0)
                                           and np.all(lhs <= rhs * (1 + 1e-12)))

    bound = theta_lower_bound(data, p)
    checks["theta_bound"] = bool(theta > bound)
    checks["beta_ratio"] = bool(beta.min() / data.alpha > p.p_plus)
    checks["positive_coefficients"] = bool(data.a > 0 and data.b > 0 and 0 <= data.mu < 1
                                           and data.alpha > 1)
    checks["subcritical_sp"] = bool(p.subcritical)
    if p.subcritical:
        pstar = critical_exponent(p).values[idx]
        checks["beta_subcritical"] = bool(np.all(beta < pstar))
        checks["gamma_subcritical"] = bool(np.all(gam < pstar))
    return {
        "checks": checks,
        "advisory": {"growth_M1": m1},
        "theta": theta,
        "theta_lower_bound": bound,
        "ok": all(checks.values()),
        "violations": [k for k, v in checks.items() if not v],
    }


class _Kirchhoff:
    """J, its gradient and Hessian on Omega-node vectors."""

    def __init__(self, data: KirchhoffData, K: Kernel, p: ExponentField):
        self.data = data
        self.L = weak_operator(K, p)
        g = p.grid
        self.sp = _Interior(g)
        self.pbar = p(g.nodes, g.nodes)[self.sp.idx]
        self.gam = data.gamma_values(g)[self.sp.idx]

    def J(self, x):
        d, w = self.data, self.sp.w
        sig = self.L.sigma(self.sp.full(x))
        ax = np.abs(x)
        return float(d.M_hat(sig) + np.sum(w * ax**self.pbar / self.pbar)
                     - np.sum(w * d.F(self.gam, x)))

    def grad(self, x):
        d, w = self.data, self.sp.w
        full = self.sp.full(x)
        sig = self.L.sigma(full)
        gl = self.L.sigma_gradient(full)[self.sp.idx]
        return d.M(sig) * gl + w * signed_power(x, self.pbar) - w * d.f(self.gam, x)

    def hess(self, x):
        d, w = self.data, self.sp.w
        full = self.sp.full(x)
        sig = self.L.sigma(full)
        gl = self.L.sigma_gradient(full)[self.sp.idx]
        H = d.M(sig) * self.L.sigma_hessian(full, self.sp.idx)
        if sig > 0:
            H += d.M_prime(sig) * np.outer(gl, gl)
        ax = np.maximum(np.abs(x), 1e-12)
        local = (self.pbar - 1.0) * ax ** (self.pbar - 2.0) - d.f_prime(self.gam, x)
        H[np.diag_indices_from(H)] += w * local
        return H

    def residual(self, x):
        return float(np.max(np.abs(self.grad(x) / self.sp.w)))

    def fiber_slope(self, x, t):
        return float(self.grad(t * x) @ x)

    def ray_max(self, x):
        """t > 0 maximizing J(t x); unique for the superlinear source."""
        lo = hi = 1.0
        for _ in range(200):
            if self.fiber_slope(x, hi) < 0:
                break
            lo, hi = hi, 2 * hi
        else:
            raise ConvergenceError("J does not decrease along the ray")
        for _ in range(200):
            if self.fiber_slope(x, lo) > 0:
                break
            hi, lo = lo, lo / 2
        else:
            raise ConvergenceError("J does not increase near the origin along the ray")
        if lo == hi:
            return lo
        return brentq(lambda t: self.fiber_slope(x, t), lo, hi, xtol=1e-15, rtol=1e-15)


def kirchhoff_energy(u: GridFunction, data: KirchhoffData, K: Kernel, p: ExponentField) -> float:
    """J(u) = M_hat(sigma(u)) + int |u|^pbar / pbar - int F(x, u)."""
    if not u.in_x0:
        raise ValueError("J is defined on zero-exterior functions")
    return _Kirchhoff(data, K, p).J(u.interior)


def kirchhoff_derivative(u: GridFunction, phi: GridFunction, data: KirchhoffData,
                         K: Kernel, p: ExponentField) -> float:
    """Weak-form expression M(sigma) <L u, phi> + int |u|^(pbar-2) u phi - int f(x, u) phi."""
    g = u.grid
    L = weak_operator(K, p)
    idx = g.omega_index
    w = g.weights[idx]
    pbar = p(g.nodes, g.nodes)[idx]
    gam = data.gamma_values(g)[idx]
    uu, ph = u.values[idx], phi.values[idx]
    return float(data.M(L.sigma(u.values)) * L.pairing(u.values, phi.values)
                 + np.sum(w * signed_power(uu, pbar) * ph)
                 - np.sum(w * data.f(gam, uu) * ph))


def kirchhoff_gradient(u: GridFunction, data: KirchhoffData, K: Kernel,
                       p: ExponentField) -> DualVector:
    """Nodal representative of J'(u)."""
    prob = _Kirchhoff(data, K, p)
    out = np.zeros(u.grid.n)
    out[prob.sp.idx] = prob.grad(u.interior) / prob.sp.w
    return DualVector(u.grid, out)


@dataclass
class GeometryResult:
    found: bool
    R: float | None = None
    a: float | None = None
    t_neg: float | None = None
    direction: GridFunction | None = field(default=None, repr=False)
    sphere_minima: dict = field(default_factory=dict)
    segment_max: float | None = None
    reason: str = ""

    def summary(self):
        return {"found": self.found, "R": self.R, "a": self.a, "t_neg": self.t_neg,
                "sphere_minima": self.sphere_minima, "segment_max": self.segment_max,
                "reason": self.reason}


def _unit_directions(K, p, seed, n_dirs):
    g = p.grid
    rng = np.random.default_rng(seed)
    dirs = []
    for _ in range(n_dirs):
        v = random_bump_function(g, rng)
        dirs.append(v / gagliardo_seminorm(v, K, p).seminorm)
    return dirs


def mountain_pass_geometry(data: KirchhoffData, K: Kernel, p: ExponentField, seed=0,
                           n_dirs=64, max_level=20, max_doublings=80) -> GeometryResult:
    """Find R in (0, 1) with J >= a > 0 on the sampled sphere [u] = R, then a
    multiple t_neg v of a fixed direction with J < 0 and [t_neg v] > R.

    Sphere samples are ``n_dirs`` seeded bump functions scaled to seminorm
    R; R runs over 1/2, 1/4, ...  The largest qualifying R is kept.
    """
    prob = _Kirchhoff(data, K, p)
    dirs = _unit_directions(K, p, seed, n_dirs)
    res = GeometryResult(False)
    for k in range(1, max_level + 1):
        R = 2.0**-k
        m = min(prob.J(R * v.interior) for v in dirs)
        res.sphere_minima[repr(R)] = m
        if m > 0:
            res.R, res.a = R, m
            break
    if res.R is None:
        res.reason = "no sampled sphere with positive minimum"
        return res
    v = dirs[0]
    res.direction = v
    for k in range(max_doublings):
        t = res.R * 2.0**k
        if t > res.R and prob.J(t * v.interior) < 0:
            res.t_neg = t
            break
    if res.t_neg is None:
        res.reason = "J stays nonnegative along the sampled ray"
        return res
    ts = np.linspace(0.0, res.t_neg, 201)
    res.segment_max = max(prob.J(t * v.interior) for t in ts)
    res.found = True
    return res


def _nehari_descent(prob: _Kirchhoff, x, tol, max_iter, history, iterates):
    """Steepest descent of J restricted to the Nehari set."""
    w = prob.sp.w
    J0 = prob.J(x)
    step = 1.0
    for it in range(max_iter):
        G = prob.grad(x)
        g = G / w
        res = float(np.max(np.abs(g)))
        if res <= tol:
            return x, it
        decrease = float(np.sum(w * g * g))
        for _ in range(MAX_HALVINGS):
            y = x - step * g
            y = prob.ray_max(y) * y
            Jy = prob.J(y)
            if Jy <= J0 - ARMIJO * step * decrease:
                break
            step *= SHRINK
        else:
            return x, it
        x, J0 = y, Jy
        history.append(J0)
        iterates.append(x.copy())
        step = min(step * 2.0, 1e6)
    return x, max_iter


def _newton_critical(prob: _Kirchhoff, x, tol, max_iter, iterates):
    """Newton on J' = 0 with backtracking on the residual norm."""
    w = prob.sp.w
    for it in range(max_iter):
        G = prob.grad(x)
        nrm = float(np.linalg.norm(G / w))
        if float(np.max(np.abs(G / w))) <= tol:
            return x, it, True
        try:
            d = np.linalg.solve(prob.hess(x), -G)
        except np.linalg.LinAlgError:
            return x, it, False
        t = 1.0
        for _ in range(MAX_HALVINGS):
            y = x + t * d
            if np.linalg.norm(prob.grad(y) / w) <= (1 - ARMIJO * t) * nrm:
                break
            t *= SHRINK
        else:
            return x, it, False
        x = y
        iterates.append(x.copy())
    return x, max_iter, float(np.max(np.abs(prob.grad(x) / w))) <= tol


def solve_kirchhoff(data: KirchhoffData, K: Kernel, p: ExponentField, tol=1e-6, seed=0,
                    geometry: GeometryResult | None = None, nehari_tol=1e-2,
                    max_iter=100_000) -> SolveReport:
    """Nontrivial weak solution of the Kirchhoff-type problem.

    Starts on the Nehari set in the geometry direction, descends there until
    the residual is below ``nehari_tol``, then runs Newton to ``tol``.
    Descent and Newton alternate if Newton stalls.  A result with seminorm
    at most R is rejected as suspect.
    """
    if geometry is None:
        geometry = mountain_pass_geometry(data, K, p, seed=seed)
    if not geometry.found:
        raise ConvergenceError(f"mountain-pass geometry not found: {geometry.reason}")
    prob = _Kirchhoff(data, K, p)
    v = geometry.direction.interior
    x = prob.ray_max(v) * v
    history = [prob.J(x)]
    iterates = [x.copy()]
    total = 0
    inner_tol = nehari_tol
    converged = False
    while total < max_iter:
        x, it = _nehari_descent(prob, x, max(inner_tol, tol), max_iter - total, history, iterates)
        total += it
        x, it, converged = _newton_critical(prob, x, tol, 200, iterates)
        total += it
        if converged:
            break
        inner_tol /= 10
        if inner_tol < tol / 100:
            break
    res = prob.residual(x)
    u = prob.sp.function(x)
    sem = gagliardo_seminorm(u, K, p).seminorm
    Ju = prob.J(x)
    report = SolveReport(u, res, total, Ju, None, converged, history, {
        "seminorm": sem,
        "full_norm": full_norm(u, K, p),
        "R": geometry.R,
        "a": geometry.a,
        "t_neg": geometry.t_neg,
        "J_t_neg": prob.J(geometry.t_neg * v),
        "segment_max": geometry.segment_max,
        "nontrivial": bool(sem > geometry.R),
        "energy_positive": bool(Ju > 0),
    })
    report.extra["iterate_seminorms"] = [
        gagliardo_seminorm(prob.sp.function(y), K, p).seminorm for y in iterates]
    report.iterates = [prob.sp.function(y) for y in iterates]
    if not converged:
        raise ConvergenceError(f"Kirchhoff solve stalled at residual {res:.3g}", best=report)
    if sem <= geometry.R:
        report.converged = False
        raise ConvergenceError("solver reached a point inside the sphere [u] = R", best=report)
    return report


def descent_iterates(data: KirchhoffData, K: Kernel, p: ExponentField, u0: GridFunction,
                     steps=50, step=1e-2):
    """Plain gradient steps on J from u0.

    Started where J < 0 the sequence runs off to infinity, since J is not
    bounded below; useful as a negative control for boundedness probes.
    """
    prob = _Kirchhoff(data, K, p)
    x = u0.interior.copy()
    out = [u0]
    for _ in range(steps):
        x = x - step * prob.grad(x) / prob.sp.w
        if not np.all(np.isfinite(x)):
            break
        out.append(prob.sp.function(x))
    return out


def ps_boundedness_probe(data: KirchhoffData, K: Kernel, p: ExponentField, iterates,
                         threshold=None) -> dict:
    """Boundedness of a sequence with J bounded and J' small.

    For the example data and theta in (alpha p+, gamma-] one has
    J(u) - <J'(u), u>/theta >= kappa sigma(u)^alpha with
    kappa = b (1/alpha - p+/theta), hence a computable bound on the
    seminorm in terms of sup |J| and sup |<J'(u), u>|.  Without a valid
    theta (kappa <= 0) the bound is unavailable and the sequence is flagged.
    """
    g = p.grid
    prob = _Kirchhoff(data, K, p)
    theta = data.theta_value(g)
    kappa = data.b * (1.0 / data.alpha - p.p_plus / theta)
    ar_ok = bool(validate_kirchhoff(data, p)["checks"]["ambrosetti_rabinowitz"]
                 and theta > theta_lower_bound(data, p) and kappa > 0)
    norms, energies, pairings = [], [], []
    for u in iterates:
        x = u.interior
        norms.append(gagliardo_seminorm(u, K, p).seminorm)
        energies.append(prob.J(x))
        pairings.append(float(prob.grad(x) @ x))
    max_norm = max(norms)
    c2 = max(abs(e) for e in energies)
    dual = max(abs(q) for q in pairings)
    if kappa > 0:
        E = c2 + dual / theta
        bound = max(1.0, (p.p_plus * (E / kappa) ** (1.0 / data.alpha)) ** (1.0 / p.p_minus))
    else:
        bound = None
    limit = threshold if threshold is not None else bound
    bounded = bool(ar_ok and limit is not None and max_norm <= limit)
    return {
        "max_norm": max_norm,
        "sup_abs_J": c2,
        "sup_abs_pairing": dual,
        "ar_ok": ar_ok,
        "kappa": kappa,
        "bound": bound,
        "threshold": limit,
        "bounded": bounded,
        "flagged": not bounded,
    }
