"""Independent validators for the sweep solver.

``brute_force_optimum`` exhaustively enumerates piecewise-constant control
pairs on a coarse segment grid and integrates every candidate with a
vectorized RK4 marcher, giving a search-free reference optimum.
``finite_difference_gradient`` probes the cost functional directly with
central differences, to be compared against the costate-based gradient.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .control import (
    CostWeights,
    _running_cost_arrays,
    _switching_arrays,
    total_cost,
)
from .errors import BoxViolationError, ExplosionGuardError
from .integrator import TimeGrid, integrate_adjoint_backward, integrate_forward
from .model import A, E, I, S, V0, ControlSignal, ModelParams, StateVector

_CANDIDATE_GUARD = 10_000_000
_CHUNK = 65536


@dataclass(frozen=True)
class OracleConfig:
    """Size of the brute-force search: horizon, segment count, level counts."""

    horizon: float
    segments: int = 5
    u_levels: int = 3
    v_levels: int = 3
    h: float = 0.05

    def __post_init__(self):
        if self.horizon <= 0 or self.h <= 0:
            raise ValueError("horizon and step must be positive")
        if self.segments < 1 or self.u_levels < 2 or self.v_levels < 2:
            raise ValueError("need at least one segment and two levels per control")
        if self.u_levels**self.segments * self.v_levels**self.segments > _CANDIDATE_GUARD:
            raise ExplosionGuardError(
                f"{self.u_levels}^{self.segments} * {self.v_levels}^{self.segments} "
                f"candidates exceed the {_CANDIDATE_GUARD} guard"
            )

    @property
    def candidates(self) -> int:
        return self.u_levels**self.segments * self.v_levels**self.segments


def _batch_deriv(y: np.ndarray, v: np.ndarray, u: np.ndarray, pr: ModelParams) -> np.ndarray:
    """Vectorized dynamics over a batch of states (M, n+6) and controls (M,)."""
    g, d = pr.gamma, pr.delta
    n = len(g)
    s, e, a, i = y[:, S], y[:, E], y[:, A], y[:, I]
    force = pr.epsilon * e + (1.0 - pr.q) * i + pr.mu * a
    infect = pr.beta * force * s
    leak = y[:, V0 : V0 + n - 1] @ np.asarray(d[: n - 1])
    if pr.delta_n_to_exposed:
        leak = leak + d[n - 1] * y[:, V0 + n - 1]
    out = np.empty_like(y)
    out[:, S] = -infect - g[0] * v * s
    out[:, E] = infect - pr.k * e + leak
    out[:, A] = (1.0 - pr.z) * pr.k * e - pr.eta * a
    out[:, I] = pr.z * pr.k * e + (1.0 - pr.p) * pr.eta * a - (pr.f + u) * i
    out[:, 4] = (pr.alpha * pr.f + u) * i + pr.p * pr.eta * a
    out[:, 5] = (1.0 - pr.alpha) * pr.f * i
    out[:, V0] = g[0] * v * s - (g[1] * v + d[0]) * y[:, V0]
    for j in range(1, n - 1):
        out[:, V0 + j] = g[j] * v * y[:, V0 + j - 1] - (g[j + 1] * v + d[j]) * y[:, V0 + j]
    out[:, V0 + n - 1] = g[n - 1] * v * y[:, V0 + n - 2]
    if pr.delta_n_to_exposed:
        out[:, V0 + n - 1] -= d[n - 1] * y[:, V0 + n - 1]
    return out


def _integrate_batch_cost(
    y0: np.ndarray,
    u_seg: np.ndarray,
    v_seg: np.ndarray,
    params: ModelParams,
    weights: CostWeights,
    config: OracleConfig,
) -> np.ndarray:
    """Cost of every candidate, marching all of them in lockstep."""
    m = u_seg.shape[0]
    seg_len = config.horizon / config.segments
    steps = max(1, int(round(seg_len / config.h)))
    h = seg_len / steps
    y = np.tile(y0, (m, 1))
    cost = np.zeros(m)
    for seg in range(config.segments):
        u = u_seg[:, seg]
        v = v_seg[:, seg]
        for _ in range(steps):
            g_left = _running_cost_arrays(y, u, v, weights, params)
            k1 = _batch_deriv(y, v, u, params)
            k2 = _batch_deriv(y + (0.5 * h) * k1, v, u, params)
            k3 = _batch_deriv(y + (0.5 * h) * k2, v, u, params)
            k4 = _batch_deriv(y + h * k3, v, u, params)
            y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            # the flow preserves positivity, so any negative is roundoff
            np.maximum(y, 0.0, out=y)
            cost += (0.5 * h) * (g_left + _running_cost_arrays(y, u, v, weights, params))
    return cost + weights.terminal.value(config.horizon)


def brute_force_optimum(
    initial: StateVector,
    params: ModelParams,
    weights: CostWeights,
    config: OracleConfig,
) -> tuple[float, tuple[np.ndarray, np.ndarray]]:
    """Exhaustive minimum over piecewise-constant control pairs.

    Returns the best cost and the winning per-segment (u, v) levels.  The
    candidate count is bounded at construction of the config; enumeration is
    chunked so memory stays flat.
    """
    if initial.n != params.n:
        raise ValueError("state and parameter dose counts must match")
    u_choices = np.linspace(0.0, 1.0, config.u_levels)
    v_choices = np.linspace(0.0, params.v_max, config.v_levels)
    u_combos = np.array(list(itertools.product(u_choices, repeat=config.segments)))
    v_combos = np.array(list(itertools.product(v_choices, repeat=config.segments)))
    n_v = len(v_combos)
    total = len(u_combos) * n_v
    y0 = initial.as_array()

    best_cost = np.inf
    best_pair = None
    for start in range(0, total, _CHUNK):
        idx = np.arange(start, min(start + _CHUNK, total))
        u_seg = u_combos[idx // n_v]
        v_seg = v_combos[idx % n_v]
        costs = _integrate_batch_cost(y0, u_seg, v_seg, params, weights, config)
        k = int(np.argmin(costs))
        if costs[k] < best_cost:
            best_cost = float(costs[k])
            best_pair = (u_seg[k].copy(), v_seg[k].copy())
    return best_cost, best_pair


def piecewise_signal(
    u_seg: np.ndarray, v_seg: np.ndarray, horizon: float, grid: TimeGrid, v_max: float = 1.0
) -> ControlSignal:
    """Sample per-segment constant levels onto a dense grid.

    Linear interpolation of the samples reproduces the steps exactly except
    for a one-cell ramp at each segment boundary.
    """
    times = grid.times
    seg_len = horizon / len(u_seg)
    idx = np.minimum((times / seg_len).astype(int), len(u_seg) - 1)
    return ControlSignal(times, np.asarray(v_seg)[idx], np.asarray(u_seg)[idx], v_max)


def _bump(controls: ControlSignal, cell_index: int, eps: float, which: str) -> tuple[ControlSignal, ControlSignal]:
    if which not in ("u", "v"):
        raise ValueError("which must be 'u' or 'v'")
    base = controls.u if which == "u" else controls.v
    hi = 1.0 if which == "u" else controls.v_max
    x = float(base[cell_index])
    if x - eps < 0.0 or x + eps > hi:
        raise BoxViolationError(
            f"bump of {eps} at cell {cell_index} leaves the {which} box [0, {hi}]"
        )
    plus = base.copy()
    minus = base.copy()
    plus[cell_index] += eps
    minus[cell_index] -= eps
    if which == "u":
        return (
            ControlSignal(controls.grid, controls.v, plus, controls.v_max),
            ControlSignal(controls.grid, controls.v, minus, controls.v_max),
        )
    return (
        ControlSignal(controls.grid, plus, controls.u, controls.v_max),
        ControlSignal(controls.grid, minus, controls.u, controls.v_max),
    )


def finite_difference_gradient(
    initial: StateVector,
    params: ModelParams,
    weights: CostWeights,
    controls: ControlSignal,
    grid: TimeGrid,
    cell_index: int,
    epsilon: float,
    which: str = "u",
    schedule=None,
) -> float:
    """Central-difference dJ/d(eps) for a unit bump at one control node."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    plus, minus = _bump(controls, cell_index, epsilon, which)
    j_plus = total_cost(integrate_forward(initial, plus, params, grid, schedule), plus, weights, params)
    j_minus = total_cost(
        integrate_forward(initial, minus, params, grid, schedule), minus, weights, params
    )
    return (j_plus - j_minus) / (2.0 * epsilon)


def adjoint_gradient(
    initial: StateVector,
    params: ModelParams,
    weights: CostWeights,
    controls: ControlSignal,
    grid: TimeGrid,
    cell_index: int,
    which: str = "u",
    schedule=None,
    adjoint_impulse: str = "multiplicative",
) -> float:
    """Costate-based dJ/d(eps) for the same unit bump.

    Evaluates the switching integrand (sigma0*u - I*(p4-p5), or its
    vaccination analogue) along one forward/backward pass and integrates it
    against the bump's hat profile.
    """
    traj = integrate_forward(initial, controls, params, grid, schedule)
    adj = integrate_adjoint_backward(
        traj, controls, params, weights, grid, schedule, adjoint_impulse=adjoint_impulse
    )
    times = grid.times
    v_n = np.interp(times, controls.grid, controls.v)
    u_n = np.interp(times, controls.grid, controls.u)
    u_raw, v_raw = _switching_arrays(traj.states_post, adj.values_post, params, weights)
    if which == "u":
        integrand = weights.sigma0 * (u_n - u_raw)
    elif which == "v":
        integrand = weights.vaccination_gain(params) * (v_n - v_raw)
    else:
        raise ValueError("which must be 'u' or 'v'")
    # Trapezoid weight of the hat profile: h at interior nodes, h/2 at the ends.
    weight = grid.h if 0 < cell_index < grid.n_steps else 0.5 * grid.h
    return float(weight * integrand[cell_index])
