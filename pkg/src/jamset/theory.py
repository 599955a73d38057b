"""Limit theory for the greedy independent set on configuration models.

Everything is driven by the implicit time-scale equation

    lam * integral_0^tau  e^(-2s) / sum_k k p_k e^(-ks)  ds  =  1 - e^(-t),

whose t -> infinity limit defines tau_inf.  The jamming constant and the
per-degree masses are integrals of the same kernel weighted by p_k e^(-ks),
and the fluid trajectory is the closed-form solution u_t = lam e^(-2 tau_t),
e_t(k) = e^(-t) p_k e^(-k tau_t).

All operations use the model's ``lam`` field, never the mass mean: the two
differ for heavy-tailed sequences whose average degree converges to a limit
larger than the limiting distribution's mean.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from .degree_model import LimitModel, ModelError

BRANCH_TOL = 1e-12

__all__ = [
    "TheoryResult",
    "FluidTrajectory",
    "NumericalError",
    "InvalidStateError",
    "PConnect",
    "Drift",
    "weighted_series",
    "integrand",
    "tau_infinity",
    "jamming_constant",
    "degree_mass",
    "time_change",
    "limit_trajectory",
    "closed_form_regular",
    "closed_form_poisson",
    "p_connect",
    "drift",
]


class NumericalError(RuntimeError):
    """Quadrature or root refinement failed to reach the requested tolerance."""


class InvalidStateError(ValueError):
    """Process state outside the drift formulas' domain."""


@dataclass(frozen=True)
class TheoryResult:
    """tau_inf, jamming constant, per-degree composition, and diagnostics."""

    tau_inf: float
    s_inf: float
    s_inf_by_degree: dict
    residual: float
    mass_gap: float

    def to_json_dict(self) -> dict:
        return {
            "tau_inf": None if math.isinf(self.tau_inf) else self.tau_inf,
            "s_inf": self.s_inf,
            "s_inf_by_degree": {str(k): v for k, v in sorted(self.s_inf_by_degree.items())},
            "residual": self.residual,
            "mass_gap": self.mass_gap,
        }


@dataclass(frozen=True)
class FluidTrajectory:
    """Closed-form limit trajectory sampled on a time grid."""

    grid: np.ndarray
    tau: np.ndarray
    u: np.ndarray
    e: dict
    s: np.ndarray
    s_by_degree: dict

    def to_csv_text(self, k_max: int = 50) -> str:
        from .tables import format_trajectory_csv

        m = len(self.grid)
        e_cols = np.zeros((m, k_max + 1))
        s_cols = np.zeros((m, k_max + 1))
        for k, arr in self.e.items():
            if k <= k_max:
                e_cols[:, k] = arr
        for k, arr in self.s_by_degree.items():
            if k <= k_max:
                s_cols[:, k] = arr
        return format_trajectory_csv(self.grid, self.u, self.s, e_cols, s_cols)


def _positive_support(model: LimitModel) -> list:
    items = [(int(k), float(p)) for k, p in sorted(model.p.items()) if k >= 1 and p > 0]
    if not items:
        raise ModelError(
            "all mass at degree 0: no half-edges, the pairing time scale is vacuous"
        )
    return items


def weighted_series(model: LimitModel, sigma: float, m: int = 0) -> float:
    """sum_k k^m p_k e^(-k sigma); truncation error below model.tail_tol."""
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    return math.fsum((k**m if m else 1.0) * p * math.exp(-k * sigma) for k, p in model.p.items())


def _log_w1(items, sigma: float) -> float:
    # log sum k p_k e^(-k sigma) without underflow
    vals = [math.log(k * p) - k * sigma for k, p in items]
    top = max(vals)
    return top + math.log(math.fsum(math.exp(v - top) for v in vals))


def _exp(expo: float) -> float:
    # math.exp raises on overflow; a genuinely huge kernel value just means
    # the bracket search has overshot the root
    return math.inf if expo > 700.0 else math.exp(expo)


def _make_integrand(model: LimitModel):
    items = _positive_support(model)
    loglam = math.log(model.lam)

    def f(sigma: float) -> float:
        return _exp(loglam - 2.0 * sigma - _log_w1(items, sigma))

    return f


def _make_mass_integrand(model: LimitModel, k: int):
    items = _positive_support(model)
    logc = math.log(model.lam) + math.log(model.p[k])

    def f(sigma: float) -> float:
        return _exp(logc - (2.0 + k) * sigma - _log_w1(items, sigma))

    return f


def _make_s_integrand(model: LimitModel):
    items = _positive_support(model)
    loglam = math.log(model.lam)
    support = [(k, math.log(p)) for k, p in model.p.items() if p > 0]

    def f(sigma: float) -> float:
        lw1 = _log_w1(items, sigma)
        return math.fsum(
            _exp(loglam + lp - (2.0 + k) * sigma - lw1) for k, lp in support
        )

    return f


def integrand(model: LimitModel, sigma: float) -> float:
    """Kernel lam e^(-2 sigma) / sum_k k p_k e^(-k sigma); positive on [0, inf)."""
    return _make_integrand(model)(sigma)


def _tau_is_infinite(model: LimitModel) -> bool:
    # mass entirely on degrees 0 and 1 *and* no mean excess: the kernel
    # integrates to exactly 1 only in the limit
    return (
        model.mass_below_two() >= 1.0 - BRANCH_TOL
        and model.lam <= model.mean_degree + BRANCH_TOL
    )


def _solve_tau(model: LimitModel, target: float, tol: float, f=None) -> tuple[float, float]:
    """The unique tau with integral_0^tau f = target; returns (tau, residual).

    Expanding bracket doublings reuse the already-integrated prefix; the root
    is refined by Brent's method on the final segment and verified against a
    fresh full-range quadrature.
    """
    if target <= 0.0:
        return 0.0, 0.0
    if f is None:
        f = _make_integrand(model)
    eps = max(tol, 1e-13) * 1e-2
    prefix = 0.0
    a = 0.0
    width = 1.0
    while True:
        seg = quad(f, a, a + width, epsabs=eps, epsrel=1e-12, limit=200)[0]
        if prefix + seg >= target:
            break
        prefix += seg
        a += width
        width *= 2.0
        if a > 1e9:
            raise NumericalError(
                f"no bracket for target {target}: integral appears to stay below it"
            )

    def g(tau: float) -> float:
        if tau <= a:
            return prefix - target
        return prefix + quad(f, a, tau, epsabs=eps, epsrel=1e-12, limit=200)[0] - target

    root = brentq(g, a, a + width, xtol=1e-14, rtol=8.9e-16, maxiter=200)
    residual = abs(quad(f, 0.0, root, epsabs=eps, epsrel=1e-12, limit=400)[0] - target)
    if residual > tol:
        # one Newton polish, then give up honestly
        root -= (quad(f, 0.0, root, epsabs=eps, epsrel=1e-12, limit=400)[0] - target) / f(root)
        residual = abs(quad(f, 0.0, root, epsabs=eps, epsrel=1e-12, limit=400)[0] - target)
        if residual > tol:
            raise NumericalError(f"residual {residual} above tolerance {tol} at tau={root}")
    return root, residual


def tau_infinity(model: LimitModel, tol: float = 1e-10) -> float:
    """The unique tau in (0, inf] where the kernel integrates to 1.

    Infinite exactly when all mass sits on degrees 0 and 1 with no mean
    excess; any mass at degree >= 2 (or lam > mean) forces a finite value.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if _tau_is_infinite(model):
        return math.inf
    tau, _ = _solve_tau(model, 1.0, tol)
    return tau


def jamming_constant(model: LimitModel, tol: float = 1e-10) -> TheoryResult:
    """Limiting selected fraction s_inf with its per-degree decomposition."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    if _tau_is_infinite(model):
        p0 = model.p.get(0, 0.0)
        p1 = model.p.get(1, 0.0)
        by_degree = {}
        if p0 > 0:
            by_degree[0] = p0
        if p1 > 0:
            by_degree[1] = p1 / 2.0
        return TheoryResult(
            tau_inf=math.inf,
            s_inf=p0 + p1 / 2.0,
            s_inf_by_degree=by_degree,
            residual=0.0,
            mass_gap=0.0,
        )
    tau, residual = _solve_tau(model, 1.0, tol)
    eps = max(tol, 1e-13) / 4.0
    s_inf = quad(_make_s_integrand(model), 0.0, tau, epsabs=eps, epsrel=1e-12, limit=400)[0]
    by_degree = {}
    for k, p in sorted(model.p.items()):
        if p <= model.tail_tol:
            continue
        by_degree[k] = quad(
            _make_mass_integrand(model, k), 0.0, tau, epsabs=eps, epsrel=1e-12, limit=400
        )[0]
    mass_gap = abs(s_inf - math.fsum(by_degree.values()))
    result = TheoryResult(
        tau_inf=tau,
        s_inf=s_inf,
        s_inf_by_degree=by_degree,
        residual=residual,
        mass_gap=mass_gap,
    )
    if not 0.0 <= s_inf <= 1.0 + tol:
        raise NumericalError(f"s_inf={s_inf} outside [0,1]")
    if mass_gap > 10.0 * tol + model.tail_tol:
        raise NumericalError(f"per-degree masses miss s_inf by {mass_gap}")
    return result


def degree_mass(model: LimitModel, k: int, tol: float = 1e-10) -> float:
    """Limiting fraction of selected vertices of degree k."""
    if k < 0:
        raise ValueError("k must be >= 0")
    p = model.p.get(k, 0.0)
    if p == 0.0:
        return 0.0
    if _tau_is_infinite(model):
        return p if k == 0 else p / 2.0
    tau, _ = _solve_tau(model, 1.0, tol)
    eps = max(tol, 1e-13) / 4.0
    return quad(_make_mass_integrand(model, k), 0.0, tau, epsabs=eps, epsrel=1e-12, limit=400)[0]


def time_change(model: LimitModel, t: float, tol: float = 1e-10) -> float:
    """tau_t solving integral_0^tau kernel = 1 - e^(-t); tau_0 = 0."""
    if t < 0:
        raise ValueError("t must be >= 0")
    if t == 0.0:
        return 0.0
    tau, _ = _solve_tau(model, -math.expm1(-t), tol)
    return tau


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(24)


def _mass_increments(model: LimitModel, a: float, b: float) -> dict:
    """integral_a^b of each per-degree mass integrand, Gauss-Legendre panels."""
    items = _positive_support(model)
    ks = np.array([k for k, _ in sorted(model.p.items()) if model.p[k] > 0], dtype=float)
    logp = np.array([math.log(model.p[int(k)]) for k in ks])
    kpos = np.array([k for k, _ in items], dtype=float)
    logkp = np.array([math.log(k * p) for k, p in items])
    loglam = math.log(model.lam)

    out = np.zeros(len(ks))
    panels = max(1, int(math.ceil((b - a) / 0.5)))
    edges = np.linspace(a, b, panels + 1)
    for i in range(panels):
        lo, hi = edges[i], edges[i + 1]
        mid = 0.5 * (lo + hi)
        half = 0.5 * (hi - lo)
        sig = mid + half * _GL_NODES
        w1terms = logkp[:, None] - kpos[:, None] * sig[None, :]
        top = w1terms.max(axis=0)
        logw1 = top + np.log(np.exp(w1terms - top[None, :]).sum(axis=0))
        vals = np.exp(
            loglam + logp[:, None] - (2.0 + ks)[:, None] * sig[None, :] - logw1[None, :]
        )
        out += half * (vals * _GL_WEIGHTS[None, :]).sum(axis=1)
    return {int(k): float(v) for k, v in zip(ks, out)}


def limit_trajectory(model: LimitModel, grid, tol: float = 1e-10) -> FluidTrajectory:
    """Fluid trajectory on a time grid: tau_t, u_t, e_t(k), s_t, s_t(k).

    u_0 = lam and e_0(k) = p_k; s accumulates quadrature of sum_k e_s(k),
    computed in the tau variable so the kernel solves double as the mass
    integrals.
    """
    grid = np.asarray(grid, dtype=float)
    if len(grid) == 0:
        raise ValueError("empty grid")
    if np.any(np.diff(grid) <= 0) or grid[0] < 0:
        raise ValueError("grid must be sorted, strictly increasing, non-negative")
    f = _make_integrand(model)
    eps = max(tol, 1e-13) * 1e-3
    taus = np.empty(len(grid))
    prefix = 0.0
    a = 0.0
    width_hint = 0.5
    for i, t in enumerate(grid):
        target = -math.expm1(-t)
        if target <= prefix:
            taus[i] = a
            continue
        width = width_hint
        while True:
            seg = quad(f, a, a + width, epsabs=eps, epsrel=1e-12, limit=200)[0]
            if prefix + seg >= target:
                break
            prefix += seg
            a += width
            width *= 2.0
            if a > 1e9:
                raise NumericalError("time change ran away; model mass may be degenerate")

        def g(tau, _a=a, _p=prefix, _tg=target):
            if tau <= _a:
                return _p - _tg
            return _p + quad(f, _a, tau, epsabs=eps, epsrel=1e-12, limit=200)[0] - _tg

        root = brentq(g, a, a + width, xtol=1e-14, rtol=8.9e-16, maxiter=200)
        prefix += quad(f, a, root, epsabs=eps, epsrel=1e-12, limit=200)[0]
        a = root
        taus[i] = root
        width_hint = max(root - (taus[i - 1] if i else 0.0), 1e-3)
    # accumulated prefix must still satisfy the defining equation at the end
    final_target = -math.expm1(-grid[-1])
    check = quad(f, 0.0, taus[-1], epsabs=eps, epsrel=1e-12, limit=800)[0]
    if abs(check - final_target) > tol:
        raise NumericalError(
            f"accumulated time change drifted by {abs(check - final_target)}"
        )

    lam = model.lam
    u = lam * np.exp(-2.0 * taus)
    support = sorted(k for k, p in model.p.items() if p > 0)
    e = {
        k: model.p[k] * np.exp(-grid - k * taus) for k in support
    }
    s_by_degree = {k: np.zeros(len(grid)) for k in support}
    prev_tau = 0.0
    running = {k: 0.0 for k in support}
    for i, tau_i in enumerate(taus):
        if tau_i > prev_tau:
            inc = _mass_increments(model, prev_tau, tau_i)
            for k in support:
                running[k] += inc.get(k, 0.0)
            prev_tau = tau_i
        for k in support:
            s_by_degree[k][i] = running[k]
    s = np.sum([s_by_degree[k] for k in support], axis=0)
    return FluidTrajectory(grid=grid, tau=taus, u=u, e=e, s=s, s_by_degree=s_by_degree)


def closed_form_regular(d: int) -> tuple[float, float]:
    """(tau_inf, s_inf) for the d-regular limit."""
    if d < 2:
        raise ValueError("closed form needs d >= 2")
    if d == 2:
        return 1.0, 0.5 * (1.0 - math.exp(-2.0))
    tau = math.log(d - 1.0) / (d - 2.0)
    s = 0.5 * (1.0 - (d - 1.0) ** (-2.0 / (d - 2.0)))
    return tau, s


def closed_form_poisson(c: float, k_max: int = 20) -> tuple[float, float, dict]:
    """(tau_inf, s_inf, s_inf(k) for k <= k_max) for the Poisson(c) limit.

    s_inf(k) integrates a Poisson density slice in the original variable, so
    it is an oracle independent of the sigma-kernel quadrature route.
    """
    if c <= 0:
        raise ValueError("poisson closed form needs c > 0")
    s_inf = math.log1p(c) / c
    tau = -math.log1p(-s_inf)
    lo = c - math.log1p(c)
    masses = {}
    for k in range(k_max + 1):
        lg = math.lgamma(k + 1)
        val = quad(
            lambda x, _k=k, _lg=lg: math.exp(_k * math.log(x) - x - _lg) if x > 0 else 0.0,
            lo,
            c,
            epsabs=1e-13,
            epsrel=1e-12,
            limit=200,
        )[0]
        masses[k] = val / c
    return tau, s_inf, masses


class PConnect(NamedTuple):
    exact: float
    lower: float
    upper: float


def p_connect(j: int, k: int, u: int) -> PConnect:
    """Probability that two distinct vertices with j and k unpaired half-edges
    share at least one edge under a uniform matching of u half-edges.

    Alternating falling-factorial series, summed with the factored term
    recursion for stability; lower/upper are the first two inclusion-
    exclusion truncations, clipped to [0, 1].
    """
    if u < 2:
        raise ValueError("u must be >= 2")
    if j < 0 or k < 0 or j + k > u:
        raise ValueError(f"need 0 <= j, k with j + k <= u, got j={j} k={k} u={u}")
    mmax = min(j, k, u // 2)
    exact = 0.0
    if mmax >= 1:
        term = j * k / (u - 1.0)
        sign = 1.0
        for m in range(1, mmax + 1):
            exact += sign * term
            sign = -sign
            if m < mmax:
                term *= (j - m) * (k - m) / ((m + 1.0) * (u - 2.0 * m - 1.0))
    first = j * k / (u - 1.0)
    second = j * (j - 1) * k * (k - 1) / (2.0 * (u - 1.0) * (u - 3.0)) if u > 3 else 0.0
    return PConnect(
        exact=exact,
        lower=max(0.0, first - second),
        upper=min(1.0, first),
    )


class Drift(NamedTuple):
    dS: float
    dU: float
    dE: dict


def drift(state) -> Drift:
    """Instantaneous expected rates of change of (S_t, U_t, E_t(k)).

    ``state`` needs attributes U (unpaired half-edges) and E (map degree ->
    empty-vertex count).
    """
    E = {int(k): int(c) for k, c in state.E.items() if c > 0}
    U = int(state.U)
    if any(k >= 1 for k in E) and U < 2:
        raise InvalidStateError(f"positive-degree empty vertices but U={U}")
    if sum(k * c for k, c in E.items()) > U:
        raise InvalidStateError("more half-edges at empty vertices than unpaired half-edges")
    dS = float(sum(E.values()))
    dU = -sum(k * c * (2.0 - (k - 1.0) / (U - 1.0)) for k, c in E.items() if k >= 1)
    dE = {}
    for k, ck in E.items():
        acc = -float(ck)
        if k >= 1:
            for j, cj in E.items():
                if j == 0:
                    continue
                coeff = cj * (ck - (1 if j == k else 0))
                if coeff == 0:
                    continue
                acc -= p_connect(j, k, U).exact * coeff
        dE[k] = acc
    return Drift(dS=dS, dU=float(dU), dE=dE)
