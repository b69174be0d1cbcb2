"""Ricci flow of manifolds with density on periodic charts.

The state is (g, f, N) with N != n an extended real.  The flow is

    dg/dt = -2 (Ric + Hess f - df x df / (N - n))
    df/dt = Delta f - |grad f|^2

integrated with fixed-step RK4 in a fixed background gauge.  The monitored
scalars are the density scalar curvature barS = g^{bc} barRic_bc and

    tildeS_k = barS + Delta f - (k + 1) |grad f|^2 ,

whose spatial infimum is non-decreasing along the flow for N in (n, inf]
and k >= 0.  ``gradient_bound`` evaluates the closed-form bound on
max |grad f_t|^2 in both the N > n and N < n regimes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .diffgeo import hessian_field, ricci_field, spd_inverse
from .errors import BlowupTime, DomainError, SingularMetric, StepRejected
from .grids import MetricField, ScalarField, grad, require_same_chart

DEFAULT_K_VALUES = (0, 1)


@dataclass(frozen=True)
class BEState:
    """Metric, density potential and the dimension parameter N (N != n)."""

    g: MetricField
    f: ScalarField
    N: float
    t: float = 0.0

    def __post_init__(self):
        require_same_chart(self.g, self.f)
        n = self.g.chart.dims
        if self.N == n:
            raise DomainError(f"N must differ from the base dimension n = {n}")
        object.__setattr__(self, "N", float(self.N))

    @property
    def n(self) -> int:
        return self.g.chart.dims

    @property
    def inv_excess(self) -> float:
        """1 / (N - n); exactly zero for N = infinity."""
        return 0.0 if math.isinf(self.N) else 1.0 / (self.N - self.n)


@dataclass(frozen=True)
class BEMonitors:
    """Pointwise monitor fields and their grid extrema at one time."""

    barS: np.ndarray
    tildeS: dict[int, np.ndarray]
    grad_f_sq: np.ndarray
    min_tildeS: dict[int, float]
    max_grad_f_sq: float


def _ingredients(g: MetricField, f: ScalarField):
    ric = ricci_field(g)
    hess = hessian_field(f, g)
    df = grad(f.values, f.chart)
    g_inv = spd_inverse(g.values)
    lap = np.einsum("...bc,...bc->...", g_inv, hess)
    grad_sq = np.einsum("...bc,...b,...c->...", g_inv, df, df)
    return ric, hess, df, g_inv, lap, grad_sq


def ricci_fN(g: MetricField, f: ScalarField, N: float) -> np.ndarray:
    """Ric + Hess f - (df x df) / (N - n) at every node; the last term is 0 at N = inf."""
    require_same_chart(g, f)
    n = g.chart.dims
    if N == n:
        raise DomainError("N must differ from n")
    ric, hess, df, _, _, _ = _ingredients(g, f)
    out = ric + hess
    if not math.isinf(N):
        out = out - np.einsum("...b,...c->...bc", df, df) / (N - n)
    return out


def be_rhs(s: BEState):
    """(dg, df) right-hand sides on the grid."""
    ric, hess, df, _, lap, grad_sq = _ingredients(s.g, s.f)
    dg = -2.0 * (ric + hess)
    if s.inv_excess != 0.0:
        dg = dg + 2.0 * s.inv_excess * np.einsum("...b,...c->...bc", df, df)
    dg = 0.5 * (dg + np.swapaxes(dg, -1, -2))
    return dg, lap - grad_sq


def monitors(s: BEState, k_values=DEFAULT_K_VALUES) -> BEMonitors:
    ric, hess, df, g_inv, lap, grad_sq = _ingredients(s.g, s.f)
    bar_ric = ric + hess
    if s.inv_excess != 0.0:
        bar_ric = bar_ric - s.inv_excess * np.einsum("...b,...c->...bc", df, df)
    barS = np.einsum("...bc,...bc->...", g_inv, bar_ric)
    tilde = {int(k): barS + lap - (k + 1.0) * grad_sq for k in k_values}
    return BEMonitors(
        barS=barS, tildeS=tilde, grad_f_sq=grad_sq,
        min_tildeS={k: float(np.min(v)) for k, v in tilde.items()},
        max_grad_f_sq=float(np.max(grad_sq)))


def be_step(s: BEState, dt: float, max_halvings: int = 20) -> BEState:
    """One RK4 step; halves dt on loss of positive definiteness (kept internal
    to the step, the returned state carries the time actually advanced)."""
    chart = s.g.chart

    def rhs(gv, fv):
        state = BEState(MetricField(chart, gv), ScalarField(chart, fv), s.N, s.t)
        return be_rhs(state)

    gv, fv = s.g.values, s.f.values
    dt_step = dt
    for _ in range(max_halvings + 1):
        try:
            k1 = rhs(gv, fv)
            k2 = rhs(gv + 0.5 * dt_step * k1[0], fv + 0.5 * dt_step * k1[1])
            k3 = rhs(gv + 0.5 * dt_step * k2[0], fv + 0.5 * dt_step * k2[1])
            k4 = rhs(gv + dt_step * k3[0], fv + dt_step * k3[1])
            g_new = gv + dt_step / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
            f_new = fv + dt_step / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
            return BEState(MetricField(chart, g_new), ScalarField(chart, f_new),
                           s.N, s.t + dt_step)
        except (np.linalg.LinAlgError, SingularMetric, DomainError):
            dt_step *= 0.5
    raise StepRejected(f"step kept failing after {max_halvings} halvings at t={s.t:g}")


@dataclass
class BETrace:
    states: list[BEState]
    monitors: list[BEMonitors]
    stop_reason: str

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.states])


def be_integrate(s0: BEState, dt: float, t_end: float,
                 scheme: str = "rk4", k_values=DEFAULT_K_VALUES,
                 c_cfl: float = 0.2, record_every: int = 1,
                 extinction_ratio: float = 1e-6) -> BETrace:
    """Integrate the density flow, recording states and monitors.

    dt is capped by c_cfl * h_min^2 / max |g^{-1}| (recomputed each step);
    stops early with reason "ExtinctionGuard" when the smallest metric
    eigenvalue falls below ``extinction_ratio`` times its initial value.
    """
    if scheme != "rk4":
        raise DomainError(f"unknown scheme '{scheme}'")
    if dt <= 0 or t_end <= s0.t:
        raise DomainError("need dt > 0 and t_end > start time")
    h_min = min(s0.g.chart.spacing)
    guard = extinction_ratio * float(np.min(np.linalg.eigvalsh(s0.g.values)))

    states = [s0]
    mons = [monitors(s0, k_values)]
    s = s0
    stop_reason = "Horizon"
    step_index = 0
    while s.t < t_end - 1e-14:
        min_eig = float(np.min(np.linalg.eigvalsh(s.g.values)))
        if min_eig <= guard:
            stop_reason = "ExtinctionGuard"
            break
        cap = c_cfl * h_min * h_min * max(min_eig, 1e-300)
        dt_step = min(dt, cap, t_end - s.t)
        s = be_step(s, dt_step)
        step_index += 1
        if step_index % record_every == 0 or s.t >= t_end - 1e-14:
            states.append(s)
            mons.append(monitors(s, k_values))
    return BETrace(states, mons, stop_reason)


def gradient_bound(t: float, k0: float, n: int, N: float) -> float:
    """Closed-form bound on max |grad f_t|^2 given max |grad f_0|^2 <= k0.

    Equals k0 for N in (n, inf]; for N < n it grows as
    (n - N) k0 / ((n - N) - 2 k0 t) and blows up at t = (n - N) / (2 k0).
    """
    if k0 < 0:
        raise DomainError("k0 must be nonnegative")
    if N == n:
        raise DomainError("N must differ from n")
    if math.isinf(N) or N > n:
        return float(k0)
    denom = (n - N) - 2.0 * k0 * t
    if denom <= 0:
        raise BlowupTime(
            f"bound is finite only for t < {(n - N) / (2.0 * k0):g} when N < n")
    return float((n - N) * k0 / denom)
