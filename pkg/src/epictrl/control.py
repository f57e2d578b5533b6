"""Cost functional, costate system, PMP control updates, and the sweep solver.

The objective charges a linear epidemic cost on the S/E/A/I pools plus
quadratic control effort, integrated over the horizon, plus a convex
increasing terminal cost.  First-order optimality gives clamped feedback
formulas for both controls in terms of the costates; the forward-backward
sweep iterates state integration, costate integration, and relaxed control
updates until the controls stop moving.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateParameterError, GridMismatchError, RangeError
from .integrator import (
    AdjointTrajectory,
    AdjointVector,
    TimeGrid,
    integrate_adjoint_backward,
    integrate_forward,
)
from .model import (
    A,
    E,
    I,
    S,
    V0,
    ControlSignal,
    ImpulseSchedule,
    ModelParams,
    StateVector,
    Trajectory,
    _deriv,
)

log = logging.getLogger("epictrl")

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class TerminalCost:
    """Convex increasing end-of-horizon penalty.

    Supported shapes: ``linear`` c*tau, ``quadratic`` c*tau**2, and
    ``exponential`` c*(exp(a*tau) - 1).  A zero coefficient disables the
    penalty.
    """

    kind: str = "quadratic"
    coeff: float = 1.0
    rate: float = 1.0

    def __post_init__(self):
        if self.kind not in ("linear", "quadratic", "exponential"):
            raise ValueError(f"unknown terminal cost kind {self.kind!r}")
        if self.coeff < 0:
            raise ValueError("terminal cost coefficient must be non-negative")
        if self.kind == "exponential" and self.rate <= 0:
            raise ValueError("exponential terminal cost needs a positive rate")

    def value(self, tau: float) -> float:
        if self.kind == "linear":
            return self.coeff * tau
        if self.kind == "quadratic":
            return self.coeff * tau * tau
        return self.coeff * (math.exp(self.rate * tau) - 1.0)

    def slope(self, tau: float) -> float:
        if self.kind == "linear":
            return self.coeff
        if self.kind == "quadratic":
            return 2.0 * self.coeff * tau
        return self.coeff * self.rate * math.exp(self.rate * tau)


@dataclass(frozen=True)
class CostWeights:
    """Objective weights: epidemic-cost rates, control gains, terminal cost."""

    omega: tuple[float, float, float, float] = (1.0, 1.0, 1.0, 1.0)
    sigma0: float = 50.0
    sigma: tuple[float, ...] = (50.0, 50.0)
    terminal: TerminalCost = field(default_factory=TerminalCost)

    def __post_init__(self):
        object.__setattr__(self, "omega", tuple(float(x) for x in self.omega))
        object.__setattr__(self, "sigma", tuple(float(x) for x in self.sigma))
        if len(self.omega) != 4:
            raise ValueError("need exactly four epidemic-cost weights")
        if any(x < 0 for x in self.omega) or any(x < 0 for x in self.sigma):
            raise ValueError("cost weights must be non-negative")
        if self.sigma0 <= 0:
            raise ValueError("treatment gain sigma0 must be positive")

    def vaccination_gain(self, params: ModelParams) -> float:
        """Quadratic coefficient of the vaccination effort, sum sigma_i*gamma_i^2."""
        if len(self.sigma) != params.n:
            raise ValueError(f"need {params.n} vaccination gains, got {len(self.sigma)}")
        return sum(s * g * g for s, g in zip(self.sigma, params.gamma))


@dataclass(frozen=True)
class SweepOptions:
    """Knobs for the forward-backward sweep."""

    theta: float = 0.5
    tolerance: float = 1e-4
    max_iterations: int = 500
    adjoint_impulse: str = "multiplicative"
    state_interp: str = "linear"

    def __post_init__(self):
        if not 0.0 < self.theta <= 1.0:
            raise ValueError("relaxation factor must lie in (0, 1]")
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")
        if self.max_iterations < 1:
            raise ValueError("need at least one iteration")


@dataclass(frozen=True)
class OptimalSolution:
    """Converged sweep output: controls, trajectories, cost, diagnostics."""

    controls: ControlSignal
    state_traj: Trajectory
    adjoint_traj: AdjointTrajectory
    cost: float
    iterations: int
    converged: bool
    transversality_residual: float | None = None
    cost_history: tuple[float, ...] = ()


def _running_cost_arrays(states, u, v, weights: CostWeights, params: ModelParams):
    w1, w2, w3, w4 = weights.omega
    gain = weights.vaccination_gain(params)
    return (
        w1 * states[..., S]
        + w2 * states[..., E]
        + w3 * states[..., A]
        + w4 * states[..., I]
        + 0.5 * weights.sigma0 * u * u
        + 0.5 * gain * v * v
    )


def running_cost(
    state: StateVector, u: float, v: float, weights: CostWeights, params: ModelParams
) -> float:
    """Instantaneous cost rate: weighted pools plus quadratic control effort."""
    return float(_running_cost_arrays(state.as_array(), float(u), float(v), weights, params))


def total_cost(
    traj: Trajectory,
    controls: ControlSignal,
    weights: CostWeights,
    params: ModelParams,
    tau: float | None = None,
) -> float:
    """Trapezoidal quadrature of the running cost plus the terminal penalty.

    Each grid cell uses the post-jump state at its left node and the pre-jump
    state at its right node, so impulse discontinuities never smear across a
    cell.
    """
    times = traj.node_times
    horizon = float(times[-1]) if tau is None else float(tau)
    if controls.tau < times[-1] - 1e-9 * max(1.0, times[-1]):
        raise GridMismatchError("controls do not cover the trajectory horizon")
    v_n = np.interp(times, controls.grid, controls.v)
    u_n = np.interp(times, controls.grid, controls.u)
    g_left = _running_cost_arrays(traj.states_post[:-1], u_n[:-1], v_n[:-1], weights, params)
    g_right = _running_cost_arrays(traj.states_pre[1:], u_n[1:], v_n[1:], weights, params)
    steps = np.diff(times)
    return float(np.sum(0.5 * steps * (g_left + g_right)) + weights.terminal.value(horizon))


def _adjoint_deriv(pq, y, v, u, pr: ModelParams, weights: CostWeights):
    """Costate derivative on the canonical layout [p1..p6, q1..qn]."""
    w1, w2, w3, w4 = weights.omega
    g, d = pr.gamma, pr.delta
    n = len(g)
    p1, p2, p3, p4, p5, p6 = pq[0], pq[1], pq[2], pq[3], pq[4], pq[5]
    qd = pq[6:]
    s = y[S]
    force = pr.epsilon * y[E] + (1.0 - pr.q) * y[I] + pr.mu * y[A]
    out = np.empty_like(pq)
    out[0] = pr.beta * force * (p1 - p2) + g[0] * v * (p1 - qd[0]) - w1
    out[1] = (
        pr.beta * pr.epsilon * s * (p1 - p2)
        + pr.k * (p2 - (1.0 - pr.z) * p3 - pr.z * p4)
        - w2
    )
    out[2] = (
        pr.beta * pr.mu * s * (p1 - p2)
        + pr.eta * p3
        - (1.0 - pr.p) * pr.eta * p4
        - w3
    )
    out[3] = (
        pr.beta * (1.0 - pr.q) * s * (p1 - p2)
        + u * (p4 - p5)
        + pr.f * (p4 - pr.alpha * p5)
        - (1.0 - pr.alpha) * pr.f * p6
        - w4
    )
    out[4] = 0.0
    out[5] = 0.0
    out[6] = d[0] * (qd[0] - p2) + g[1] * v * (qd[0] - qd[1])
    for j in range(1, n - 1):
        out[6 + j] = -d[j] * p2 + (g[j + 1] * v + d[j]) * qd[j]
        if pr.delta_n_to_exposed:
            # the last costate is nonzero once its breakthrough flow exists,
            # so the chain coupling it normally kills must be kept
            out[6 + j] -= g[j + 1] * v * qd[j + 1]
    out[6 + n - 1] = d[n - 1] * (qd[n - 1] - p2) if pr.delta_n_to_exposed else 0.0
    return out


def adjoint_rhs(
    adjoint: AdjointVector,
    state: StateVector,
    u: float,
    v: float,
    params: ModelParams,
    weights: CostWeights,
) -> np.ndarray:
    """Time derivative of the costates, in the layout [p1..p6, q1..qn]."""
    if len(adjoint.q) != params.n or state.n != params.n:
        raise ValueError("costate/state dose counts must match the parameters")
    return _adjoint_deriv(adjoint.as_array(), state.as_array(), v, u, params, weights)


def hamiltonian(
    state: StateVector,
    adjoint: AdjointVector,
    u: float,
    v: float,
    params: ModelParams,
    weights: CostWeights,
) -> float:
    """Running cost plus costate-weighted dynamics."""
    y = state.as_array()
    pq = adjoint.as_array()
    return float(
        _running_cost_arrays(y, float(u), float(v), weights, params)
        + pq @ _deriv(y, float(v), float(u), params)
    )


def _switching_arrays(states, adjoints, params: ModelParams, weights: CostWeights):
    """Raw stationary controls I*(p4-p5)/sigma0 and W/(sum sigma*gamma^2)."""
    g = params.gamma
    n = params.n
    gain = weights.vaccination_gain(params)
    if weights.sigma0 <= 0.0 or gain <= 0.0:
        raise DegenerateParameterError("control-update denominators must be positive")
    p1 = adjoints[..., 0]
    q1 = adjoints[..., 6]
    u_raw = states[..., I] * (adjoints[..., 3] - adjoints[..., 4]) / weights.sigma0
    w = g[0] * states[..., S] * (p1 - q1) + g[1] * q1 * states[..., V0]
    for j in range(1, n - 1):
        w = w + adjoints[..., 6 + j] * (
            g[j + 1] * states[..., V0 + j] - g[j] * states[..., V0 + j - 1]
        )
    if params.delta_n_to_exposed:
        # nonzero last costate: its last-chain-link sensitivity enters too
        w = w - g[n - 1] * adjoints[..., 6 + n - 1] * states[..., V0 + n - 2]
    v_raw = w / gain
    return u_raw, v_raw


def _clamped_controls(states, adjoints, params, weights):
    u_raw, v_raw = _switching_arrays(states, adjoints, params, weights)
    if np.any(np.isnan(u_raw)) or np.any(np.isnan(v_raw)):
        raise ValueError("NaN encountered in control update")
    return np.clip(u_raw, 0.0, 1.0), np.clip(v_raw, 0.0, params.v_max)


def control_update(
    state: StateVector, adjoint: AdjointVector, params: ModelParams, weights: CostWeights
) -> tuple[float, float]:
    """Pointwise PMP controls, clamped to their boxes."""
    u, v = _clamped_controls(state.as_array(), adjoint.as_array(), params, weights)
    return float(u), float(v)


def fbsm_solve(
    initial: StateVector,
    params: ModelParams,
    weights: CostWeights,
    grid: TimeGrid,
    schedule: ImpulseSchedule | None = None,
    options: SweepOptions | None = None,
) -> OptimalSolution:
    """Forward-backward sweep for the vaccination/treatment control pair.

    Starting from zero controls, each iteration integrates the states
    forward, the costates backward, computes the clamped stationary controls,
    and relaxes toward them.  The sweep stops when the largest per-node
    control change, measured relative to each control's box width, drops
    below the tolerance.  Non-convergence is reported through the
    ``converged`` flag, never as an exception.
    """
    opts = options or SweepOptions()
    times = grid.times
    v_max = params.v_max
    want_mid = opts.state_interp == "midpoint"
    u = np.zeros_like(times)
    v = np.zeros_like(times)
    history = []
    converged = False
    iterations = 0

    for it in range(1, opts.max_iterations + 1):
        iterations = it
        controls = ControlSignal(times, v, u, v_max)
        traj = integrate_forward(
            initial, controls, params, grid, schedule, record_midpoints=want_mid
        )
        adj = integrate_adjoint_backward(
            traj,
            controls,
            params,
            weights,
            grid,
            schedule,
            adjoint_impulse=opts.adjoint_impulse,
            state_interp=opts.state_interp,
        )
        history.append(total_cost(traj, controls, weights, params))
        u_star, v_star = _clamped_controls(traj.states_post, adj.values_post, params, weights)
        u_new = np.clip(opts.theta * u_star + (1.0 - opts.theta) * u, 0.0, 1.0)
        v_new = np.clip(opts.theta * v_star + (1.0 - opts.theta) * v, 0.0, v_max)
        change = float(np.max(np.abs(u_new - u) + np.abs(v_new - v) / v_max))
        u, v = u_new, v_new
        log.debug("sweep iteration %d: J=%.6g, control change %.3e", it, history[-1], change)
        if change < opts.tolerance:
            converged = True
            break

    controls = ControlSignal(times, v, u, v_max)
    traj = integrate_forward(initial, controls, params, grid, schedule, record_midpoints=want_mid)
    adj = integrate_adjoint_backward(
        traj,
        controls,
        params,
        weights,
        grid,
        schedule,
        adjoint_impulse=opts.adjoint_impulse,
        state_interp=opts.state_interp,
    )
    cost = total_cost(traj, controls, weights, params)
    history.append(cost)
    return OptimalSolution(
        controls=controls,
        state_traj=traj,
        adjoint_traj=adj,
        cost=cost,
        iterations=iterations,
        converged=converged,
        cost_history=tuple(history),
    )


def _truncated_schedule(schedule: ImpulseSchedule | None, tau: float, h: float):
    """Drop events at or beyond the candidate horizon."""
    if schedule is None:
        return None
    kept = tuple(ev for ev in schedule.events if ev.time < tau - 0.5 * h)
    return ImpulseSchedule(kept) if kept else None


def transversality_residual(solution: OptimalSolution, params: ModelParams, weights: CostWeights) -> float:
    """Free-time optimality defect H(tau) + M'(tau) for a converged solution."""
    last = len(solution.state_traj.node_times) - 1
    state = solution.state_traj.state_at(last, side="post")
    adjoint = solution.adjoint_traj.at(last, side="post")
    tau = float(solution.state_traj.node_times[-1])
    v_end, u_end = solution.controls.at(tau)
    ham = hamiltonian(state, adjoint, float(u_end), float(v_end), params, weights)
    return ham + weights.terminal.slope(tau)


def optimize_terminal_time(
    initial: StateVector,
    params: ModelParams,
    weights: CostWeights,
    schedule: ImpulseSchedule | None,
    tau_range: tuple[float, float],
    h: float = 0.01,
    options: SweepOptions | None = None,
    tau_tol: float = 0.1,
) -> tuple[float, OptimalSolution]:
    """Golden-section search for the horizon with the cheapest optimal cost.

    Each candidate horizon is solved with a fresh grid and a full sweep; the
    cost is unimodal in practice (strictly increasing whenever the running
    cost is non-negative and the terminal penalty grows).  Impulse events at
    or beyond a candidate horizon are dropped for that evaluation.  The
    free-time optimality defect at the winner is recorded as a diagnostic.
    """
    tau_min, tau_max = float(tau_range[0]), float(tau_range[1])
    if not 0.0 < tau_min < tau_max:
        raise RangeError(f"need 0 < tau_min < tau_max, got ({tau_min}, {tau_max})")
    if tau_max - tau_min < tau_tol:
        raise RangeError("search range narrower than the tolerance")

    evaluated: dict[float, OptimalSolution] = {}

    def solve_at(tau: float) -> float:
        grid = TimeGrid(tau, h)
        sol = fbsm_solve(
            initial, params, weights, grid, _truncated_schedule(schedule, grid.tau, h), options
        )
        evaluated[tau] = sol
        log.debug("terminal-time probe tau=%.6g -> J=%.6g", tau, sol.cost)
        return sol.cost

    a, b = tau_min, tau_max
    solve_at(a)
    solve_at(b)
    c = b - _INVPHI * (b - a)
    d_ = a + _INVPHI * (b - a)
    fc, fd = solve_at(c), solve_at(d_)
    while (b - a) > tau_tol:
        if fc < fd:
            b = d_
            d_, fd = c, fc
            c = b - _INVPHI * (b - a)
            fc = solve_at(c)
        else:
            a = c
            c, fc = d_, fd
            d_ = a + _INVPHI * (b - a)
            fd = solve_at(d_)

    tau_star = min(evaluated, key=lambda t: evaluated[t].cost)
    best = evaluated[tau_star]
    residual = transversality_residual(best, params, weights)
    best = OptimalSolution(
        controls=best.controls,
        state_traj=best.state_traj,
        adjoint_traj=best.adjoint_traj,
        cost=best.cost,
        iterations=best.iterations,
        converged=best.converged,
        transversality_residual=residual,
        cost_history=best.cost_history,
    )
    return tau_star, best
